//! Masker synthesis: white, bump and MPS-limited noise tokens, plus a
//! long-term statistics check against reference values.
//!
//! All three generators start from the same seeded Gaussian draw, so for a
//! given seed the bump and MPS tokens are transformations of the white one.

mod validate;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::fft::{fft, ifft};
use crate::dsp::stft::{fast_griffin_lim, Stft};
use crate::dsp::Complex64;
use crate::error::{Error, Result};
use crate::signal::{apply_ramps, set_level, LevelConvention, Waveform};
use crate::tfrep::erb::erb_number_unchecked;

pub use validate::{
    band_level_centers, critical_band_levels, validate_noise_set, Check, ReferenceStats, ValidationReport,
    MIN_VALIDATION_TOKENS,
};

/// Relative spectrogram error above which phase retrieval is flagged.
pub const PHASE_RETRIEVAL_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    White,
    Bump,
    Mps,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Bump, NoiseKind::Mps];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Bump => "bump",
            NoiseKind::Mps => "mps",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "white" => Ok(NoiseKind::White),
            "bump" => Ok(NoiseKind::Bump),
            "mps" => Ok(NoiseKind::Mps),
            other => Err(Error::parse("noise kind", format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BumpParams {
    pub n_bumps: usize,
    /// Temporal standard deviation (s).
    pub sigma_t: f64,
    /// Spectral standard deviation (ERB-number units).
    pub sigma_f: f64,
    /// Peak gain of each bump (dB).
    pub max_gain: f64,
    /// When set, each bump's peak is drawn uniformly from (0, max_gain].
    pub random_peak: bool,
    /// Frequency range (Hz) over which bump centres are spread.
    pub f_range: (f64, f64),
}

impl Default for BumpParams {
    fn default() -> Self {
        Self {
            n_bumps: 30,
            sigma_t: 0.02,
            sigma_f: 0.5,
            max_gain: 10.0,
            random_peak: false,
            f_range: (80.0, 7158.0),
        }
    }
}

/// Unit of the spectral-modulation cut-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralModUnit {
    CyclesPerHz,
    CyclesPerKhz,
}

impl SpectralModUnit {
    fn per_hz(self, value: f64) -> f64 {
        match self {
            SpectralModUnit::CyclesPerHz => value,
            SpectralModUnit::CyclesPerKhz => value / 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpsParams {
    /// Temporal modulation cut-off (Hz); `inf` disables it.
    pub temporal_cutoff: f64,
    /// Spectral modulation cut-off in `spectral_unit`; `inf` disables it.
    pub spectral_cutoff: f64,
    pub spectral_unit: SpectralModUnit,
    pub phase_retrieval_iters: usize,
    /// Log-magnitude floor (dB re the spectrogram maximum).
    pub floor_db: f64,
    /// STFT frame length, hop and Gaussian window sigma (samples).
    pub frame_len: usize,
    pub hop: usize,
    pub window_sigma: f64,
    /// Rescale the masked log-magnitude field so its standard deviation
    /// matches the unmasked one. Without it the mask only removes
    /// fluctuation energy and the result is hard to tell from white noise.
    pub preserve_depth: bool,
}

impl Default for MpsParams {
    fn default() -> Self {
        Self {
            temporal_cutoff: 35.0,
            spectral_cutoff: 10.0,
            spectral_unit: SpectralModUnit::CyclesPerKhz,
            phase_retrieval_iters: 100,
            floor_db: -100.0,
            frame_len: 512,
            hop: 128,
            window_sigma: 64.0,
            preserve_depth: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    White,
    Bump(BumpParams),
    Mps(MpsParams),
}

/// Full description of a noise family; tokens are `(spec, seed)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub fs: f64,
    pub duration: f64,
    /// Level (dB SPL) set before ramping.
    pub level: f64,
    pub ramp: f64,
}

impl NoiseSpec {
    fn with_model(model: NoiseModel) -> Self {
        Self {
            model,
            fs: crate::signal::STIMULUS_FS,
            duration: crate::signal::STIMULUS_DURATION,
            level: 65.0,
            ramp: 0.075,
        }
    }

    pub fn white() -> Self {
        Self::with_model(NoiseModel::White)
    }

    pub fn bump() -> Self {
        Self::with_model(NoiseModel::Bump(BumpParams::default()))
    }

    pub fn mps() -> Self {
        Self::with_model(NoiseModel::Mps(MpsParams::default()))
    }

    pub fn for_kind(kind: NoiseKind) -> Self {
        match kind {
            NoiseKind::White => Self::white(),
            NoiseKind::Bump => Self::bump(),
            NoiseKind::Mps => Self::mps(),
        }
    }

    pub fn kind(&self) -> NoiseKind {
        match self.model {
            NoiseModel::White => NoiseKind::White,
            NoiseModel::Bump(_) => NoiseKind::Bump,
            NoiseModel::Mps(_) => NoiseKind::Mps,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }

    /// Stable textual identifier (kind plus a short hash of all parameters).
    pub fn id(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        format!("{}-{}", self.kind(), &hex::encode(digest)[..12])
    }
}

/// One noise realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseToken {
    pub waveform: Waveform,
    pub seed: u64,
    pub spec_id: String,
    /// Relative spectrogram error of phase retrieval (MPS only).
    pub phase_retrieval_error: Option<f64>,
}

impl NoiseToken {
    /// Set when phase retrieval did not reach the error tolerance.
    pub fn phase_retrieval_warning(&self) -> bool {
        self.phase_retrieval_error
            .is_some_and(|e| e > PHASE_RETRIEVAL_TOLERANCE)
    }
}

fn gaussian_base<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn finish(spec: &NoiseSpec, samples: Vec<f64>) -> Result<Waveform> {
    let w = Waveform::new(samples, spec.fs)?;
    let w = set_level(&w, spec.level, LevelConvention::default())?;
    apply_ramps(&w, spec.ramp)
}

fn kind_mismatch(expected: NoiseKind, spec: &NoiseSpec) -> Error {
    Error::invalid(format!("expected a {expected} spec, got {}", spec.kind()))
}

/// Generate the token for `(spec, seed)` whatever its kind.
pub fn generate(spec: &NoiseSpec, seed: u64) -> Result<NoiseToken> {
    match spec.kind() {
        NoiseKind::White => generate_white(spec, seed),
        NoiseKind::Bump => generate_bump(spec, seed),
        NoiseKind::Mps => generate_mps(spec, seed),
    }
}

pub fn generate_white(spec: &NoiseSpec, seed: u64) -> Result<NoiseToken> {
    if spec.kind() != NoiseKind::White {
        return Err(kind_mismatch(NoiseKind::White, spec));
    }
    let mut rng = crate::seed::rng(seed);
    let base = gaussian_base(spec.n_samples(), &mut rng);
    Ok(NoiseToken {
        waveform: finish(spec, base)?,
        seed,
        spec_id: spec.id(),
        phase_retrieval_error: None,
    })
}

pub fn generate_bump(spec: &NoiseSpec, seed: u64) -> Result<NoiseToken> {
    let NoiseModel::Bump(p) = &spec.model else {
        return Err(kind_mismatch(NoiseKind::Bump, spec));
    };
    let (f_lo, f_hi) = p.f_range;
    if !(f_lo > 0.0 && f_hi > f_lo && f_hi < spec.fs / 2.0) {
        return Err(Error::invalid(format!(
            "bump frequency range ({f_lo}, {f_hi}) Hz must lie within (0, {}) Hz",
            spec.fs / 2.0
        )));
    }
    let mut rng = crate::seed::rng(seed);
    let base = gaussian_base(spec.n_samples(), &mut rng);
    let e_lo = erb_number_unchecked(f_lo);
    let e_hi = erb_number_unchecked(f_hi);
    let bumps: Vec<(f64, f64, f64)> = (0..p.n_bumps)
        .map(|_| {
            let t = rng.random_range(0.0..=spec.duration);
            let e = rng.random_range(e_lo..=e_hi);
            let peak = if p.random_peak {
                p.max_gain * (1.0 - rng.random::<f64>())
            } else {
                p.max_gain
            };
            (t, e, peak)
        })
        .collect();

    let stft = Stft::default_noise();
    let mut spec_tf = stft.forward(&base);
    let bin_erb: Vec<f64> = (0..spec_tf.n_bins)
        .map(|k| erb_number_unchecked(stft.bin_frequency(k, spec.fs)))
        .collect();
    let (two_st2, two_sf2) = (2.0 * p.sigma_t * p.sigma_t, 2.0 * p.sigma_f * p.sigma_f);
    for m in 0..spec_tf.n_frames {
        let t = stft.frame_time(m, spec.fs);
        // temporal weight of each bump for this frame
        let tw: Vec<f64> = bumps
            .iter()
            .map(|(tb, _, peak)| peak * (-(t - tb).powi(2) / two_st2).exp())
            .collect();
        if tw.iter().all(|w| *w < 1e-12) {
            continue;
        }
        for (k, e) in bin_erb.iter().enumerate() {
            let gain_db: f64 = bumps
                .iter()
                .zip(&tw)
                .map(|((_, eb, _), w)| w * (-(e - eb).powi(2) / two_sf2).exp())
                .sum();
            spec_tf.data[m * spec_tf.n_bins + k] *= 10f64.powf(gain_db / 20.0);
        }
    }
    let samples = stft.inverse(&spec_tf);
    Ok(NoiseToken {
        waveform: finish(spec, samples)?,
        seed,
        spec_id: spec.id(),
        phase_retrieval_error: None,
    })
}

/// Low-pass filter a (frames x bins) real field in the 2-D Fourier domain.
fn modulation_lowpass(
    field: &[f64],
    n_frames: usize,
    n_bins: usize,
    frame_rate: f64,
    bin_hz: f64,
    temporal_cutoff: f64,
    spectral_cutoff_per_hz: f64,
) -> Vec<f64> {
    let mut data: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut row = vec![Complex64::new(0.0, 0.0); n_bins];
    let mut col = vec![Complex64::new(0.0, 0.0); n_frames];
    let fold = |idx: usize, n: usize| -> f64 {
        if idx <= n / 2 {
            idx as f64
        } else {
            idx as f64 - n as f64
        }
    };
    // forward 2-D DFT
    for m in 0..n_frames {
        row.copy_from_slice(&data[m * n_bins..(m + 1) * n_bins]);
        fft(&mut row);
        data[m * n_bins..(m + 1) * n_bins].copy_from_slice(&row);
    }
    for k in 0..n_bins {
        for m in 0..n_frames {
            col[m] = data[m * n_bins + k];
        }
        fft(&mut col);
        for m in 0..n_frames {
            // u indexes temporal modulation, k spectral modulation
            let temporal = fold(m, n_frames).abs() * frame_rate / n_frames as f64;
            let spectral = fold(k, n_bins).abs() / (n_bins as f64 * bin_hz);
            let keep = temporal <= temporal_cutoff && spectral <= spectral_cutoff_per_hz;
            col[m] = if keep { col[m] } else { Complex64::new(0.0, 0.0) };
        }
        ifft(&mut col);
        for m in 0..n_frames {
            data[m * n_bins + k] = col[m];
        }
    }
    for m in 0..n_frames {
        row.copy_from_slice(&data[m * n_bins..(m + 1) * n_bins]);
        ifft(&mut row);
        data[m * n_bins..(m + 1) * n_bins].copy_from_slice(&row);
    }
    data.iter().map(|c| c.re).collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    (mean, var.sqrt())
}

fn restore_depth(original: &[f64], filtered: Vec<f64>) -> Vec<f64> {
    let (_, sd_in) = mean_sd(original);
    let (mean, sd) = mean_sd(&filtered);
    if sd <= 0.0 {
        return filtered;
    }
    let g = sd_in / sd;
    filtered.into_iter().map(|v| mean + (v - mean) * g).collect()
}

pub fn generate_mps(spec: &NoiseSpec, seed: u64) -> Result<NoiseToken> {
    let NoiseModel::Mps(p) = &spec.model else {
        return Err(kind_mismatch(NoiseKind::Mps, spec));
    };
    if p.frame_len % 2 != 0 || p.hop == 0 || p.hop > p.frame_len || !(p.window_sigma > 0.0) {
        return Err(Error::invalid(format!(
            "MPS STFT needs an even frame length, 0 < hop <= frame length and sigma > 0 (got {}, {}, {})",
            p.frame_len, p.hop, p.window_sigma
        )));
    }
    let mut rng = crate::seed::rng(seed);
    let base = gaussian_base(spec.n_samples(), &mut rng);
    let stft = Stft::gaussian(p.frame_len, p.hop, p.window_sigma);
    let spec_tf = stft.forward(&base);
    let mags = spec_tf.magnitudes();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let floor = 20.0 * max.log10() + p.floor_db;
    let log_mag: Vec<f64> = mags
        .iter()
        .map(|&m| if m > 0.0 { (20.0 * m.log10()).max(floor) } else { floor })
        .collect();
    let frame_rate = spec.fs / stft.hop() as f64;
    let bin_hz = spec.fs / stft.frame_len() as f64;
    let filtered = modulation_lowpass(
        &log_mag,
        spec_tf.n_frames,
        spec_tf.n_bins,
        frame_rate,
        bin_hz,
        p.temporal_cutoff,
        p.spectral_unit.per_hz(p.spectral_cutoff),
    );
    let filtered = if p.preserve_depth {
        restore_depth(&log_mag, filtered)
    } else {
        filtered
    };
    let target: Vec<f64> = filtered.iter().map(|db| 10f64.powf(db / 20.0)).collect();
    let pr = fast_griffin_lim(&stft, &target, &spec_tf, p.phase_retrieval_iters, 0.99);
    if pr.relative_error > PHASE_RETRIEVAL_TOLERANCE {
        log::debug!(
            "MPS token seed {seed}: phase retrieval error {:.3} above {PHASE_RETRIEVAL_TOLERANCE}",
            pr.relative_error
        );
    }
    Ok(NoiseToken {
        waveform: finish(spec, pr.signal)?,
        seed,
        spec_id: spec.id(),
        phase_retrieval_error: Some(pr.relative_error),
    })
}
