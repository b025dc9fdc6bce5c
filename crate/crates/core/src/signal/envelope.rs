use rayon::prelude::*;

use super::{LevelConvention, Waveform};
use crate::dsp::fft::{hilbert_envelope, real_fft};
use crate::error::{Error, Result};
use crate::stats::percentile;

/// Values below this (dB re DC) are clamped; it stands in for minus infinity.
pub const SPECTRUM_FLOOR_DB: f64 = -240.0;

/// Statistics of the broadband Hilbert-envelope spectrum over a set of
/// waveforms. Bin amplitudes are `|DFT| / N`, so the DC bin equals the mean
/// envelope; every other bin is expressed in dB re that DC value.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSpectrum {
    pub freqs: Vec<f64>,
    pub median_db: Vec<f64>,
    pub p25_db: Vec<f64>,
    pub p75_db: Vec<f64>,
    /// Median DC (mean envelope) expressed in dB SPL.
    pub dc_level_db: f64,
    pub n_waveforms: usize,
}

impl EnvelopeSpectrum {
    /// Median curve linearly interpolated at `freq`.
    pub fn median_at(&self, freq: f64) -> f64 {
        interpolate(&self.freqs, &self.median_db, freq)
    }

    /// Median (across bins) of the per-bin medians for `lo < f <= hi`.
    pub fn band_median(&self, lo: f64, hi: f64) -> f64 {
        let vals: Vec<f64> = self
            .freqs
            .iter()
            .zip(&self.median_db)
            .filter(|(f, _)| **f > lo && **f <= hi)
            .map(|(_, v)| *v)
            .collect();
        percentile(vals, 0.5)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.iter().position(|&v| v >= x) {
        None => *ys.last().unwrap_or(&f64::NAN),
        Some(0) => ys[0],
        Some(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// dB re `dc` of one residual envelope spectrum (`|DFT| / N` per bin).
fn relative_spectrum(residual: &[f64], dc: f64) -> Vec<f64> {
    let n = residual.len();
    let spec = real_fft(residual);
    spec[..=n / 2]
        .iter()
        .map(|c| {
            let a = c.norm() / n as f64;
            if dc > 0.0 && a > 0.0 {
                (20.0 * (a / dc).log10()).max(SPECTRUM_FLOOR_DB)
            } else {
                SPECTRUM_FLOOR_DB
            }
        })
        .collect()
}

/// Envelope-spectrum statistics of a token set.
///
/// The ensemble-mean envelope (the deterministic gating shape shared by all
/// tokens) is subtracted before the FFT, so non-DC bins describe the random
/// fluctuations only. The residual is rescaled by `sqrt(n / (n - 1))` to
/// undo the variance lost to the subtraction. The DC bin is each token's own
/// mean envelope, which is what the reported level uses.
pub fn envelope_spectrum(waves: &[Waveform], conv: LevelConvention) -> Result<EnvelopeSpectrum> {
    if waves.is_empty() {
        return Err(Error::Empty("envelope_spectrum needs at least two waveforms"));
    }
    if waves.len() < 2 {
        return Err(Error::invalid("envelope_spectrum needs at least two waveforms"));
    }
    let len = waves[0].len();
    let fs = waves[0].fs();
    for w in waves {
        if w.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: w.len(),
            });
        }
    }
    let envs: Vec<Vec<f64>> = waves.par_iter().map(|w| hilbert_envelope(w.samples())).collect();
    let n_tok = envs.len() as f64;
    let mut mean_env = vec![0.0; len];
    for e in &envs {
        for (m, v) in mean_env.iter_mut().zip(e) {
            *m += v / n_tok;
        }
    }
    let scale = (n_tok / (n_tok - 1.0)).sqrt();
    let per: Vec<(f64, Vec<f64>)> = envs
        .par_iter()
        .map(|e| {
            let dc = e.iter().sum::<f64>() / len as f64;
            let residual: Vec<f64> = e.iter().zip(&mean_env).map(|(v, m)| (v - m) * scale).collect();
            let mut rel = relative_spectrum(&residual, dc);
            rel[0] = 0.0;
            (dc, rel)
        })
        .collect();
    let n_bins = len / 2 + 1;
    let mut median_db = Vec::with_capacity(n_bins);
    let mut p25_db = Vec::with_capacity(n_bins);
    let mut p75_db = Vec::with_capacity(n_bins);
    let mut column = Vec::with_capacity(per.len());
    for k in 0..n_bins {
        column.clear();
        column.extend(per.iter().map(|(_, r)| r[k]));
        median_db.push(percentile(column.clone(), 0.5));
        p25_db.push(percentile(column.clone(), 0.25));
        p75_db.push(percentile(column.clone(), 0.75));
    }
    let dcs: Vec<f64> = per.iter().map(|(dc, _)| conv.level_of_rms(*dc)).collect();
    Ok(EnvelopeSpectrum {
        freqs: (0..n_bins).map(|k| k as f64 * fs / len as f64).collect(),
        median_db,
        p25_db,
        p75_db,
        dc_level_db: percentile(dcs, 0.5),
        n_waveforms: waves.len(),
    })
}
