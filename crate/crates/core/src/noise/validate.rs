use std::io::Write;

use rayon::prelude::*;

use super::{NoiseKind, NoiseToken};
use crate::dsp::fft::real_fft;
use crate::dsp::gammatone::GammatoneBand;
use crate::error::{Error, Result};
use crate::stats::percentile;
use crate::signal::{envelope_spectrum, EnvelopeSpectrum, LevelConvention, Waveform};
use crate::tfrep::erb::erb_number_to_hz;

pub const MIN_VALIDATION_TOKENS: usize = 100;

/// ERB-number centres of the critical-band analysis (3..=33 ERB_N).
pub fn band_level_centers() -> Vec<f64> {
    (3..=33).map(|e| e as f64).collect()
}

/// Power-transfer table of the real-valued gammatone output per DFT bin.
fn band_power_weights(fc: f64, fs: f64, n: usize) -> Vec<f64> {
    let band = GammatoneBand::new(fc, fs);
    (0..n)
        .map(|k| {
            let f = k as f64 * fs / n as f64;
            let pos = band.response_at(f, fs);
            let neg = band.response_at(-f, fs).conj();
            (pos + neg).norm_sqr()
        })
        .collect()
}

/// Band levels (dB SPL) of one waveform in 1-ERB gammatone filters centred on
/// integer ERB numbers 3..=33, computed in the frequency domain.
pub fn critical_band_levels(w: &Waveform, conv: LevelConvention) -> Vec<f64> {
    let weights: Vec<Vec<f64>> = band_level_centers()
        .iter()
        .map(|&e| band_power_weights(erb_number_to_hz(e), w.fs(), w.len()))
        .collect();
    levels_with_weights(w, &weights, conv)
}

fn levels_with_weights(w: &Waveform, weights: &[Vec<f64>], conv: LevelConvention) -> Vec<f64> {
    let n = w.len() as f64;
    let power: Vec<f64> = real_fft(w.samples()).iter().map(|c| c.norm_sqr()).collect();
    weights
        .iter()
        .map(|wt| {
            let ms = wt.iter().zip(&power).map(|(a, b)| a * b).sum::<f64>() / (n * n);
            conv.level_of_rms(ms.sqrt())
        })
        .collect()
}

/// Published long-term statistics of a noise family with tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    pub kind: NoiseKind,
    /// (min, max) of the median critical-band level curve, dB SPL.
    pub band_level_range: (f64, f64),
    pub band_tolerance: f64,
    /// Envelope-spectrum targets: (label, lo Hz, hi Hz, value dB re DC).
    /// `lo == hi` means a point read-out at that frequency.
    pub envelope_targets: Vec<(String, f64, f64, f64)>,
    pub envelope_tolerance: f64,
    pub dc_level: f64,
    pub dc_tolerance: f64,
}

impl ReferenceStats {
    pub fn for_kind(kind: NoiseKind) -> Self {
        let (band_level_range, envelope_targets) = match kind {
            NoiseKind::White => ((40.7, 56.2), vec![("median 0-60 Hz".to_string(), 0.0, 60.0, -44.0)]),
            NoiseKind::Bump => (
                (40.5, 55.8),
                vec![
                    ("at 3 Hz".to_string(), 3.0, 3.0, -34.8),
                    ("at 31.1 Hz".to_string(), 31.1, 31.1, -42.7),
                ],
            ),
            NoiseKind::Mps => (
                (38.1, 56.0),
                vec![
                    ("median 0-35 Hz".to_string(), 0.0, 35.0, -39.9),
                    ("median 40-60 Hz".to_string(), 40.0, 60.0, -43.2),
                ],
            ),
        };
        Self {
            kind,
            band_level_range,
            band_tolerance: 1.5,
            envelope_targets,
            envelope_tolerance: 1.5,
            dc_level: 66.2,
            dc_tolerance: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        (self.measured - self.target).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub reference: NoiseKind,
    pub n_tokens: usize,
    pub band_centers_erb: Vec<f64>,
    pub band_median_db: Vec<f64>,
    pub band_p25_db: Vec<f64>,
    pub band_p75_db: Vec<f64>,
    pub envelope: EnvelopeSpectrum,
    pub checks: Vec<Check>,
    /// Tokens whose phase retrieval exceeded the error tolerance.
    pub phase_retrieval_warnings: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn write_band_levels_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["erb_n", "center_hz", "median_db", "p25_db", "p75_db"])?;
        for (i, e) in self.band_centers_erb.iter().enumerate() {
            wr.write_record([
                format!("{e}"),
                format!("{:.2}", erb_number_to_hz(*e)),
                format!("{:.4}", self.band_median_db[i]),
                format!("{:.4}", self.band_p25_db[i]),
                format!("{:.4}", self.band_p75_db[i]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Envelope spectrum up to `max_freq` Hz.
    pub fn write_envelope_csv<W: Write>(&self, out: W, max_freq: f64) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["freq_hz", "median_db", "p25_db", "p75_db"])?;
        let e = &self.envelope;
        for k in 0..e.freqs.len() {
            if e.freqs[k] > max_freq {
                break;
            }
            wr.write_record([
                format!("{:.4}", e.freqs[k]),
                format!("{:.4}", e.median_db[k]),
                format!("{:.4}", e.p25_db[k]),
                format!("{:.4}", e.p75_db[k]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["check", "measured", "target", "tolerance", "pass"])?;
        for c in &self.checks {
            wr.write_record([
                c.name.clone(),
                format!("{:.3}", c.measured),
                format!("{:.3}", c.target),
                format!("{:.3}", c.tolerance),
                c.passed().to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Compute critical-band levels and envelope-spectrum statistics of a token
/// set and compare them with `reference`.
pub fn validate_noise_set(tokens: &[NoiseToken], reference: &ReferenceStats) -> Result<ValidationReport> {
    if tokens.is_empty() {
        return Err(Error::Empty("validate_noise_set needs tokens"));
    }
    if tokens.len() < MIN_VALIDATION_TOKENS {
        return Err(Error::invalid(format!(
            "validation needs at least {MIN_VALIDATION_TOKENS} tokens, got {}",
            tokens.len()
        )));
    }
    let conv = LevelConvention::default();
    let first = &tokens[0].waveform;
    let centers = band_level_centers();
    let weights: Vec<Vec<f64>> = centers
        .iter()
        .map(|&e| band_power_weights(erb_number_to_hz(e), first.fs(), first.len()))
        .collect();
    let levels: Vec<Vec<f64>> = tokens
        .par_iter()
        .map(|t| levels_with_weights(&t.waveform, &weights, conv))
        .collect();
    let column = |b: usize| levels.iter().map(|l| l[b]).collect::<Vec<_>>();
    let band_median_db: Vec<f64> = (0..centers.len()).map(|b| percentile(column(b), 0.5)).collect();
    let band_p25_db = (0..centers.len()).map(|b| percentile(column(b), 0.25)).collect();
    let band_p75_db = (0..centers.len()).map(|b| percentile(column(b), 0.75)).collect();

    let waves: Vec<Waveform> = tokens.iter().map(|t| t.waveform.clone()).collect();
    let envelope = envelope_spectrum(&waves, conv)?;

    let mut checks = Vec::new();
    let lo = band_median_db.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = band_median_db.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "band level min".into(),
        measured: lo,
        target: reference.band_level_range.0,
        tolerance: reference.band_tolerance,
    });
    checks.push(Check {
        name: "band level max".into(),
        measured: hi,
        target: reference.band_level_range.1,
        tolerance: reference.band_tolerance,
    });
    for (label, f_lo, f_hi, value) in &reference.envelope_targets {
        let measured = if f_lo == f_hi {
            envelope.median_at(*f_lo)
        } else {
            envelope.band_median(*f_lo, *f_hi)
        };
        checks.push(Check {
            name: format!("envelope {label}"),
            measured,
            target: *value,
            tolerance: reference.envelope_tolerance,
        });
    }
    checks.push(Check {
        name: "envelope DC level".into(),
        measured: envelope.dc_level_db,
        target: reference.dc_level,
        tolerance: reference.dc_tolerance,
    });
    Ok(ValidationReport {
        reference: reference.kind,
        n_tokens: tokens.len(),
        band_centers_erb: centers,
        band_median_db,
        band_p25_db,
        band_p75_db,
        envelope,
        checks,
        phase_retrieval_warnings: tokens.iter().filter(|t| t.phase_retrieval_warning()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{generate_white, NoiseSpec};

    #[test]
    fn too_few_tokens() {
        let r = ReferenceStats::for_kind(NoiseKind::White);
        assert!(validate_noise_set(&[], &r).is_err());
        let one = vec![generate_white(&NoiseSpec::white(), 1).unwrap()];
        assert!(validate_noise_set(&one, &r).is_err());
    }

    #[test]
    fn band_level_of_flat_spectrum_follows_erb() {
        // unramped white noise at 65 dB: spectrum level 65 - 10 log10(8000) dB/Hz
        let mut rng = crate::seed::rng(2);
        use rand_distr::{Distribution, StandardNormal};
        let x: Vec<f64> = (0..160_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = crate::signal::set_level(
            &Waveform::new(x, 16000.0).unwrap(),
            65.0,
            LevelConvention::default(),
        )
        .unwrap();
        let levels = critical_band_levels(&w, LevelConvention::default());
        let spectrum_level = 65.0 - 10.0 * 8000f64.log10();
        // index 13 is the 16-ERB_N band (~1.08 kHz)
        let e16 = erb_number_to_hz(16.0);
        let expected = spectrum_level + 10.0 * crate::tfrep::erb::erb_bandwidth(e16).unwrap().log10();
        assert!((levels[13] - expected).abs() < 0.3, "{} vs {}", levels[13], expected);
    }
}
