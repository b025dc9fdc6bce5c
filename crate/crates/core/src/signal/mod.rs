//! Waveform algebra: level calibration, ramps, SNR mixing, level roving and
//! envelope-spectrum analysis.

mod envelope;
pub mod wav;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub use envelope::{envelope_spectrum, EnvelopeSpectrum, SPECTRUM_FLOOR_DB};

/// Sampling rate of every stimulus in the experiment.
pub const STIMULUS_FS: f64 = 16000.0;
/// Stimulus duration in seconds.
pub const STIMULUS_DURATION: f64 = 0.86;
/// `STIMULUS_FS * STIMULUS_DURATION`.
pub const STIMULUS_LEN: usize = 13760;
/// Half-width of the uniform level rove.
pub const ROVE_RANGE_DB: f64 = 2.5;

/// A sampled mono signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    fs: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {fs}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self { samples, fs })
    }

    pub fn zeros(len: usize, fs: f64) -> Self {
        Self {
            samples: vec![0.0; len],
            fs,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * gain).collect(),
            fs: self.fs,
        }
    }

    /// Sample-wise sum; both operands must share length and rate.
    pub fn add(&self, other: &Waveform) -> Result<Self> {
        check_compatible(self, other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            fs: self.fs,
        })
    }

    /// True when the waveform has the stimulus sample rate and length.
    pub fn is_stimulus_format(&self) -> bool {
        self.fs == STIMULUS_FS && self.samples.len() == STIMULUS_LEN
    }
}

fn check_compatible(a: &Waveform, b: &Waveform) -> Result<()> {
    if a.fs != b.fs {
        return Err(Error::SampleRateMismatch {
            left: a.fs,
            right: b.fs,
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Digital calibration: the dB SPL that corresponds to an RMS of 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelConvention {
    pub dbspl_at_unit_rms: f64,
}

impl Default for LevelConvention {
    fn default() -> Self {
        Self {
            dbspl_at_unit_rms: 100.0,
        }
    }
}

impl LevelConvention {
    pub fn level_of_rms(&self, rms: f64) -> f64 {
        self.dbspl_at_unit_rms + 20.0 * rms.log10()
    }

    pub fn rms_for_level(&self, db_spl: f64) -> f64 {
        10f64.powf((db_spl - self.dbspl_at_unit_rms) / 20.0)
    }

    /// Level of a waveform in dB SPL (`-inf` for silence).
    pub fn level(&self, w: &Waveform) -> f64 {
        self.level_of_rms(w.rms())
    }
}

/// Rescale `w` so that its RMS reads `target` dB SPL.
pub fn set_level(w: &Waveform, target: f64, conv: LevelConvention) -> Result<Waveform> {
    let rms = w.rms();
    if rms == 0.0 {
        return Err(Error::SilentWaveform);
    }
    Ok(w.scaled(conv.rms_for_level(target) / rms))
}

/// Raised-cosine onset and offset ramps of `ramp_dur` seconds each.
pub fn apply_ramps(w: &Waveform, ramp_dur: f64) -> Result<Waveform> {
    if !(ramp_dur >= 0.0) {
        return Err(Error::invalid(format!("ramp duration must be >= 0, got {ramp_dur}")));
    }
    let n_ramp = (ramp_dur * w.fs()).round() as usize;
    if 2 * n_ramp > w.len() {
        return Err(Error::RampTooLong {
            ramp: ramp_dur,
            duration: w.duration(),
        });
    }
    let mut samples = w.samples().to_vec();
    let len = samples.len();
    for n in 0..n_ramp {
        let g = 0.5 * (1.0 - (std::f64::consts::PI * n as f64 / n_ramp as f64).cos());
        samples[n] *= g;
        samples[len - 1 - n] *= g;
    }
    Ok(Waveform {
        samples,
        fs: w.fs(),
    })
}

/// Signal-to-noise ratio of a trial. `Silent` is the minus-infinity case
/// (target absent); it is stored as the literal `-inf` in logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Db(f64),
    Silent,
}

impl Snr {
    pub fn db(&self) -> Option<f64> {
        match self {
            Snr::Db(v) => Some(*v),
            Snr::Silent => None,
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Db(v) => write!(f, "{v}"),
            Snr::Silent => f.write_str("-inf"),
        }
    }
}

impl FromStr for Snr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("-inf") {
            return Ok(Snr::Silent);
        }
        let v: f64 = s.parse().map_err(|_| Error::parse("snr", format!("bad value {s:?}")))?;
        if v.is_finite() {
            Ok(Snr::Db(v))
        } else {
            Err(Error::parse("snr", format!("non-finite value {s:?}")))
        }
    }
}

/// Scale `target` so that its level sits `snr` dB above the measured level of
/// `noise`, then add the two.
pub fn mix_at_snr(target: &Waveform, noise: &Waveform, snr: Snr, conv: LevelConvention) -> Result<Waveform> {
    check_compatible(target, noise)?;
    let snr = match snr {
        Snr::Silent => return Ok(noise.clone()),
        Snr::Db(v) => v,
    };
    let noise_level = conv.level(noise);
    if !noise_level.is_finite() {
        return Err(Error::SilentWaveform);
    }
    let scaled = set_level(target, noise_level + snr, conv)?;
    scaled.add(noise)
}

pub fn apply_gain_db(w: &Waveform, gain_db: f64) -> Waveform {
    w.scaled(10f64.powf(gain_db / 20.0))
}

/// Apply a uniformly drawn overall gain in `[-2.5, +2.5]` dB.
pub fn rove_level<R: Rng + ?Sized>(w: &Waveform, rng: &mut R) -> (Waveform, f64) {
    let rove_db = rng.random_range(-ROVE_RANGE_DB..=ROVE_RANGE_DB);
    (apply_gain_db(w, rove_db), rove_db)
}
