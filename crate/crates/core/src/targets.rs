//! Target sounds: the two-way /aba/ vs /ada/ identifier, loading of recorded
//! targets, and a bundled formant-synthesized pair for tests and demos.
//!
//! The synthetic pair shares the first vowel and differs in the release burst
//! and the formant transitions into the second vowel: /aba/ starts its F2
//! glide at 1298 Hz, /ada/ at 1722 Hz.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{set_level, wav, LevelConvention, Waveform, STIMULUS_FS, STIMULUS_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetId {
    Aba,
    Ada,
}

impl TargetId {
    pub const BOTH: [TargetId; 2] = [TargetId::Aba, TargetId::Ada];

    /// GLM response coding: "aba" = 1, "ada" = 0.
    pub fn code(self) -> f64 {
        match self {
            TargetId::Aba => 1.0,
            TargetId::Ada => 0.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            TargetId::Aba => TargetId::Ada,
            TargetId::Ada => TargetId::Aba,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetId::Aba => "aba",
            TargetId::Ada => "ada",
        }
    }
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aba" => Ok(TargetId::Aba),
            "ada" => Ok(TargetId::Ada),
            other => Err(Error::parse("target id", format!("unknown target {other:?}"))),
        }
    }
}

/// The two target waveforms of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPair {
    pub aba: Waveform,
    pub ada: Waveform,
}

impl TargetPair {
    pub fn new(aba: Waveform, ada: Waveform) -> Result<Self> {
        for w in [&aba, &ada] {
            if !w.is_stimulus_format() {
                return Err(Error::invalid(format!(
                    "targets must be {STIMULUS_LEN} samples at {STIMULUS_FS} Hz, got {} at {} Hz",
                    w.len(),
                    w.fs()
                )));
            }
        }
        Ok(Self { aba, ada })
    }

    pub fn get(&self, id: TargetId) -> &Waveform {
        match id {
            TargetId::Aba => &self.aba,
            TargetId::Ada => &self.ada,
        }
    }

    /// Reads `aba.wav` and `ada.wav` from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            if !path.exists() {
                return Err(Error::MissingInput {
                    path,
                    hint: "provide aba.wav and ada.wav or pass --synthetic-targets".into(),
                });
            }
            wav::read_wav(&path)
        };
        Self::new(read("aba.wav")?, read("ada.wav")?)
    }

    pub fn synthetic() -> Self {
        Self {
            aba: synthesize_vcv(TargetId::Aba),
            ada: synthesize_vcv(TargetId::Ada),
        }
    }
}

/// Presentation level of the synthetic targets (dB SPL).
pub const SYNTHETIC_LEVEL: f64 = 65.0;

const F0: f64 = 120.0;
const VOWEL_FORMANTS: [f64; 3] = [700.0, 1220.0, 2600.0];
const BANDWIDTHS: [f64; 3] = [90.0, 110.0, 170.0];
const V1: (f64, f64) = (0.06, 0.34);
const CLOSURE_END: f64 = 0.42;
const V2_END: f64 = 0.76;
const TRANSITION: f64 = 0.08;

/// Release burst peak (Hz), bandwidth (Hz) and source gain: diffuse and low
/// for the labial, high for the alveolar. Both end up within a few dB of the
/// vowel level.
fn burst_shape(id: TargetId) -> (f64, f64, f64) {
    match id {
        TargetId::Aba => (700.0, 900.0, 30.0),
        TargetId::Ada => (3800.0, 1200.0, 9.0),
    }
}

fn consonant_onsets(id: TargetId) -> [f64; 3] {
    match id {
        TargetId::Aba => [300.0, 1298.0, 2200.0],
        TargetId::Ada => [300.0, 1722.0, 2900.0],
    }
}

/// Two-pole resonator with unity gain at DC, updated per sample.
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn step(&mut self, x: f64, freq: f64, bw: f64) -> f64 {
        let r = (-std::f64::consts::PI * bw / STIMULUS_FS).exp();
        let c = 2.0 * r * (2.0 * std::f64::consts::PI * freq / STIMULUS_FS).cos();
        let gain = 1.0 - c + r * r;
        let y = gain * x + c * self.y1 - r * r * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn smooth_gate(t: f64, start: f64, end: f64, rise: f64) -> f64 {
    if t < start || t > end {
        return 0.0;
    }
    let a = ((t - start) / rise).min(1.0);
    let b = ((end - t) / rise).min(1.0);
    let h = |v: f64| 0.5 - 0.5 * (std::f64::consts::PI * v).cos();
    h(a) * h(b)
}

/// Formant-synthesized vowel-consonant-vowel token at 65 dB SPL.
pub fn synthesize_vcv(id: TargetId) -> Waveform {
    let onsets = consonant_onsets(id);
    let mut res = [
        Resonator { y1: 0.0, y2: 0.0 },
        Resonator { y1: 0.0, y2: 0.0 },
        Resonator { y1: 0.0, y2: 0.0 },
    ];
    let (burst_f, burst_bw, burst_gain) = burst_shape(id);
    let mut burst_res = Resonator { y1: 0.0, y2: 0.0 };
    let mut rng = crate::seed::rng(0x00B0_0057);
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(STIMULUS_LEN);
    for n in 0..STIMULUS_LEN {
        let t = n as f64 / STIMULUS_FS;
        phase += F0 * (1.0 - 0.1 * t) / STIMULUS_FS;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        let voiced = smooth_gate(t, V1.0, V1.1, 0.03) + smooth_gate(t, CLOSURE_END, V2_END, 0.02);
        let burst = smooth_gate(t, CLOSURE_END - 0.012, CLOSURE_END + 0.006, 0.002)
            * rng.random_range(-1.0..1.0)
            * burst_gain;
        let burst = burst_res.step(burst, burst_f, burst_bw);
        let mut x = pulse * voiced * 40.0;
        for (k, r) in res.iter_mut().enumerate() {
            let freq = if t < CLOSURE_END {
                VOWEL_FORMANTS[k]
            } else {
                let u = ((t - CLOSURE_END) / TRANSITION).min(1.0);
                onsets[k] + (VOWEL_FORMANTS[k] - onsets[k]) * u
            };
            x = r.step(x, freq, BANDWIDTHS[k]);
        }
        samples.push(x + burst);
    }
    let w = Waveform::new(samples, STIMULUS_FS).expect("finite synthesis");
    set_level(&w, SYNTHETIC_LEVEL, LevelConvention::default()).expect("non-silent synthesis")
}
