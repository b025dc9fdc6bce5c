//! Gammatone-envelope time-frequency representation used as GLM predictors.
//!
//! 64 bands spaced by 0.5 ERB-number starting at 45.8 Hz, each band's
//! magnitude low-passed at 770 Hz (fifth-order Butterworth) and averaged in
//! 10-ms frames, giving an 86 x 64 matrix for a 0.86-s stimulus.

pub mod erb;

use std::io::Write;

use crate::dsp::filters::SosFilter;
use crate::dsp::gammatone::GammatoneBand;
use crate::error::{Error, Result};
use crate::signal::{Waveform, STIMULUS_FS, STIMULUS_LEN};

pub use erb::{erb_bandwidth, erb_number, erb_number_to_hz};

pub const N_FRAMES: usize = 86;
pub const N_BANDS: usize = 64;
pub const N_BINS: usize = N_FRAMES * N_BANDS;
pub const FRAME_STEP: f64 = 0.01;
pub const LOWEST_BAND_HZ: f64 = 45.8;
pub const BAND_SPACING_ERB: f64 = 0.5;
pub const ENVELOPE_CUTOFF_HZ: f64 = 770.0;
pub const ENVELOPE_ORDER: usize = 5;

/// Tag written next to serialized matrices so readers can reject other layouts.
pub const LAYOUT_TAG: &str = "col-major-86x64-time-fastest";

/// Centre frequencies (Hz) of the 64 analysis bands.
pub fn band_centers() -> Vec<f64> {
    let start = erb::erb_number_unchecked(LOWEST_BAND_HZ);
    (0..N_BANDS)
        .map(|j| erb_number_to_hz(start + BAND_SPACING_ERB * j as f64))
        .collect()
}

/// 86 x 64 envelope matrix, stored column-major (time index fastest):
/// element (frame `i`, band `j`) lives at `i + 86 * j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfMatrix {
    values: Vec<f64>,
}

impl TfMatrix {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; N_BINS],
        }
    }

    #[inline]
    pub fn index(frame: usize, band: usize) -> usize {
        frame + N_FRAMES * band
    }

    #[inline]
    pub fn get(&self, frame: usize, band: usize) -> f64 {
        self.values[Self::index(frame, band)]
    }

    #[inline]
    pub fn set(&mut self, frame: usize, band: usize, v: f64) {
        self.values[Self::index(frame, band)] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn vectorize(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn devectorize(v: Vec<f64>) -> Result<Self> {
        if v.len() != N_BINS {
            return Err(Error::invalid(format!(
                "expected a vector of length {N_BINS}, got {}",
                v.len()
            )));
        }
        Ok(Self { values: v })
    }

    /// CSV with a header of band centres and one row per frame.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(out, &self.values)
    }
}

/// Writes an 86 x 64 column-major matrix as CSV (rows = frames).
pub fn write_matrix_csv<W: Write>(out: W, values: &[f64]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["time_s".to_string()];
    header.extend(band_centers().iter().map(|f| format!("{f:.2}")));
    wr.write_record(&header)?;
    for i in 0..N_FRAMES {
        let mut row = vec![format!("{:.3}", (i as f64 + 0.5) * FRAME_STEP)];
        row.extend((0..N_BANDS).map(|j| format!("{:?}", values[TfMatrix::index(i, j)])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv<R: std::io::Read>(input: R) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut values = vec![0.0; N_BINS];
    let mut rows = 0;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if i >= N_FRAMES || rec.len() != N_BANDS + 1 {
            return Err(Error::parse("matrix csv", format!("unexpected shape at row {i}")));
        }
        for j in 0..N_BANDS {
            values[TfMatrix::index(i, j)] = rec[j + 1]
                .parse()
                .map_err(|_| Error::parse("matrix csv", format!("bad number at row {i}")))?;
        }
        rows += 1;
    }
    if rows != N_FRAMES {
        return Err(Error::parse("matrix csv", format!("expected {N_FRAMES} rows, got {rows}")));
    }
    Ok(values)
}

/// Precomputed filterbank; reuse it across many waveforms.
#[derive(Debug, Clone)]
pub struct TfAnalyzer {
    bands: Vec<GammatoneBand>,
    envelope_lp: SosFilter,
}

impl Default for TfAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl TfAnalyzer {
    pub fn new() -> Self {
        let bands = band_centers()
            .into_iter()
            .map(|fc| GammatoneBand::new(fc, STIMULUS_FS))
            .collect();
        let envelope_lp = SosFilter::butterworth_lowpass(ENVELOPE_ORDER, ENVELOPE_CUTOFF_HZ, STIMULUS_FS)
            .expect("valid envelope filter");
        Self { bands, envelope_lp }
    }

    pub fn bands(&self) -> &[GammatoneBand] {
        &self.bands
    }

    pub fn analyze(&self, w: &Waveform) -> Result<TfMatrix> {
        if !w.is_stimulus_format() {
            return Err(Error::invalid(format!(
                "time-frequency analysis expects {STIMULUS_LEN} samples at {STIMULUS_FS} Hz, got {} at {} Hz",
                w.len(),
                w.fs()
            )));
        }
        let frame_len = STIMULUS_LEN / N_FRAMES;
        let mut m = TfMatrix::zeros();
        for (j, band) in self.bands.iter().enumerate() {
            let mut env = band.filter(w.samples());
            for v in env.iter_mut() {
                *v = v.abs();
            }
            self.envelope_lp.filter_in_place(&mut env);
            for i in 0..N_FRAMES {
                let frame = &env[i * frame_len..(i + 1) * frame_len];
                m.set(i, j, frame.iter().sum::<f64>() / frame_len as f64);
            }
        }
        Ok(m)
    }
}

/// One-shot convenience wrapper around [`TfAnalyzer::analyze`].
pub fn tf_representation(w: &Waveform) -> Result<TfMatrix> {
    TfAnalyzer::new().analyze(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn band_layout() {
        let c = band_centers();
        assert_eq!(c.len(), 64);
        assert!((c[0] - 45.8).abs() < 1e-9);
        for pair in c.windows(2) {
            assert!(pair[1] > pair[0]);
            let d = erb_number(pair[1]).unwrap() - erb_number(pair[0]).unwrap();
            assert!((d - 0.5).abs() < 1e-6);
        }
        // top band lands at 33.196 ERB_N (about 7.91 kHz), just under 8 kHz
        let top = erb_number(c[63]).unwrap();
        assert!((top - 33.196).abs() < 1e-2, "{top}");
    }

    #[test]
    fn silence_gives_zero_matrix() {
        let w = Waveform::zeros(STIMULUS_LEN, STIMULUS_FS);
        let m = tf_representation(&w).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(m.as_slice().len(), 5504);
    }

    #[test]
    fn wrong_format_is_rejected() {
        assert!(tf_representation(&Waveform::zeros(1000, STIMULUS_FS)).is_err());
        assert!(tf_representation(&Waveform::zeros(STIMULUS_LEN, 44100.0)).is_err());
    }

    #[test]
    fn tone_peaks_in_its_band() {
        let an = TfAnalyzer::new();
        let centres = band_centers();
        for &k in &[5usize, 20, 32, 45, 58] {
            let f = centres[k];
            let samples = (0..STIMULUS_LEN)
                .map(|n| (2.0 * std::f64::consts::PI * f * n as f64 / STIMULUS_FS).sin())
                .collect();
            let m = an.analyze(&Waveform::new(samples, STIMULUS_FS).unwrap()).unwrap();
            let col_means: Vec<f64> = (0..N_BANDS)
                .map(|j| (10..N_FRAMES).map(|i| m.get(i, j)).sum::<f64>())
                .collect();
            let argmax = col_means
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, k);
        }
    }

    #[test]
    fn layout_is_column_major() {
        let v: Vec<f64> = (0..N_BINS).map(|i| i as f64).collect();
        let m = TfMatrix::devectorize(v).unwrap();
        assert_eq!(m.get(3, 2), (3 + 86 * 2) as f64);
        assert!(TfMatrix::devectorize(vec![0.0; 10]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let v: Vec<f64> = (0..N_BINS).map(|i| (i as f64).sqrt() * 1e-3).collect();
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &v).unwrap();
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), v);
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(v in proptest::collection::vec(0.0f64..10.0, N_BINS)) {
            let m = TfMatrix::devectorize(v.clone()).unwrap();
            prop_assert_eq!(m.vectorize(), v);
        }
    }

    #[test]
    fn scaling_is_linear() {
        let mut rng = crate::seed::rng(1);
        use rand_distr::{Distribution, StandardNormal};
        let s: Vec<f64> = (0..STIMULUS_LEN).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = Waveform::new(s, STIMULUS_FS).unwrap();
        let an = TfAnalyzer::new();
        let a = an.analyze(&w).unwrap();
        let b = an.analyze(&w.scaled(2.5)).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((y - 2.5 * x).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }
}
