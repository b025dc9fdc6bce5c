//! Artificial listener: an auditory front end producing internal
//! representations, white-noise templates, and a biased template-matching
//! decision stage that plugs into the experiment runner.
//!
//! Front end, in order: linear-phase middle-ear band-pass, gammatone
//! filterbank (the tf-rep bands), half-wave rectification and 770-Hz
//! low-pass, five adaptation loops, a modulation filterbank, and 10-ms frame
//! averaging.

mod adaptation;
mod decision;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::filters::{fir_bandpass, fir_filter_aligned, ComplexResonator, SosFilter};
use crate::dsp::gammatone::GammatoneBand;
use crate::error::{Error, Result};
use crate::signal::{Waveform, STIMULUS_FS, STIMULUS_LEN};
use crate::tfrep::{band_centers, N_FRAMES};

pub use adaptation::AdaptationLoops;
pub use decision::{decide, derive_templates, match_difference, ArtificialListener, DecisionState, Templates};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub middle_ear_taps: usize,
    pub middle_ear_band: (f64, f64),
    pub envelope_cutoff: f64,
    pub envelope_order: usize,
    /// Adaptation-loop time constants (s).
    pub adaptation_taus: Vec<f64>,
    pub overshoot_limit: f64,
    pub min_level: f64,
    /// Cut-off of the lowest (low-pass) modulation channel (Hz).
    pub mod_lowpass: f64,
    /// Band-pass modulation centres (Hz).
    pub mod_centres: Vec<f64>,
    pub mod_q: f64,
    /// Above this centre the channel output is the magnitude, below it the
    /// real part.
    pub mod_envelope_above: f64,
    /// A modulation channel feeds audio bands whose centre exceeds
    /// `attach_factor` times its centre.
    pub attach_factor: f64,
    /// Block-average decimation applied before the modulation filterbank.
    pub mod_decimation: usize,
    pub template_snr: f64,
    pub template_realizations: usize,
    /// Subtract the mean noise-alone representation from each template.
    pub subtract_noise_template: bool,
    /// Divide the template match by the norm of the representation, which
    /// makes decisions far less sensitive to presentation level.
    pub normalize_ir: bool,
    /// Bias adaptation rate per trial, in units of the running decision scale.
    pub bias_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            middle_ear_taps: 511,
            middle_ear_band: (450.0, 8000.0),
            envelope_cutoff: 770.0,
            envelope_order: 5,
            adaptation_taus: vec![0.005, 0.05, 0.129, 0.253, 0.5],
            overshoot_limit: 5.0,
            min_level: 1e-5,
            mod_lowpass: 1.5,
            mod_centres: vec![2.5, 5.0, 10.0, 20.0, 40.0, 77.0],
            mod_q: 1.0,
            mod_envelope_above: 10.0,
            attach_factor: 4.0,
            mod_decimation: 8,
            template_snr: -6.0,
            template_realizations: 100,
            subtract_noise_template: false,
            normalize_ir: true,
            bias_rate: 0.01,
        }
    }
}

/// One (audio band, modulation channel) pair. Channel 0 is the low-pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub band: usize,
    pub modulation: usize,
}

/// Frames x channels, frame fastest: value `(i, c)` at `i + n_frames * c`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalRepresentation {
    pub n_frames: usize,
    pub channels: Vec<Channel>,
    pub values: Vec<f64>,
}

impl InternalRepresentation {
    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn get(&self, frame: usize, channel: usize) -> f64 {
        self.values[frame + self.n_frames * channel]
    }
}

enum ModFilter {
    Lowpass(f64),
    Bandpass { resonator: ComplexResonator, magnitude: bool },
}

/// Precomputed front end; cheap to share across threads.
pub struct AuditoryModel {
    cfg: ModelConfig,
    middle_ear: Vec<f64>,
    bands: Vec<GammatoneBand>,
    envelope_lp: SosFilter,
    adaptation: AdaptationLoops,
    mod_filters: Vec<ModFilter>,
    channels: Vec<Channel>,
}

impl AuditoryModel {
    pub fn new(cfg: ModelConfig) -> Result<Self> {
        let fs = STIMULUS_FS;
        if !(cfg.mod_q > 0.0) || cfg.adaptation_taus.is_empty() {
            return Err(Error::invalid("model needs a positive modulation Q and adaptation loops"));
        }
        let frame_len = STIMULUS_LEN / N_FRAMES;
        if cfg.mod_decimation == 0 || frame_len % cfg.mod_decimation != 0 {
            return Err(Error::invalid(format!(
                "mod_decimation must divide the {frame_len}-sample frame"
            )));
        }
        let mod_fs = fs / cfg.mod_decimation as f64;
        let middle_ear = fir_bandpass(cfg.middle_ear_taps, cfg.middle_ear_band.0, cfg.middle_ear_band.1, fs)?;
        let centres = band_centers();
        let bands = centres.iter().map(|&fc| GammatoneBand::new(fc, fs)).collect();
        let envelope_lp = SosFilter::butterworth_lowpass(cfg.envelope_order, cfg.envelope_cutoff, fs)?;
        let adaptation = AdaptationLoops::new(&cfg.adaptation_taus, cfg.overshoot_limit, cfg.min_level, fs);
        let mut mod_filters = vec![ModFilter::Lowpass((-2.0 * std::f64::consts::PI * cfg.mod_lowpass / mod_fs).exp())];
        for &mfc in &cfg.mod_centres {
            mod_filters.push(ModFilter::Bandpass {
                resonator: ComplexResonator::new(mfc, mfc / cfg.mod_q, mod_fs),
                magnitude: mfc > cfg.mod_envelope_above,
            });
        }
        let mut channels = Vec::new();
        for m in 0..mod_filters.len() {
            let mfc = if m == 0 { 0.0 } else { cfg.mod_centres[m - 1] };
            for (b, &fc) in centres.iter().enumerate() {
                if fc > cfg.attach_factor * mfc {
                    channels.push(Channel { band: b, modulation: m });
                }
            }
        }
        Ok(Self {
            cfg,
            middle_ear,
            bands,
            envelope_lp,
            adaptation,
            mod_filters,
            channels,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Adapted envelope of every audio band, block-averaged down to the
    /// modulation-stage rate.
    fn adapted_bands(&self, w: &Waveform) -> Vec<Vec<f64>> {
        let dec = self.cfg.mod_decimation;
        let x = fir_filter_aligned(w.samples(), &self.middle_ear);
        self.bands
            .iter()
            .map(|band| {
                let mut y = band.filter(&x);
                for v in y.iter_mut() {
                    *v = v.max(0.0);
                }
                self.envelope_lp.filter_in_place(&mut y);
                self.adaptation
                    .process(&y)
                    .chunks(dec)
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                    .collect()
            })
            .collect()
    }

    pub fn internal_representation(&self, w: &Waveform) -> Result<InternalRepresentation> {
        if !w.is_stimulus_format() {
            return Err(Error::invalid(format!(
                "the auditory model expects {STIMULUS_LEN} samples at {STIMULUS_FS} Hz, got {} at {} Hz",
                w.len(),
                w.fs()
            )));
        }
        let adapted = self.adapted_bands(w);
        let frame_len = STIMULUS_LEN / N_FRAMES / self.cfg.mod_decimation;
        let mut values = Vec::with_capacity(self.channels.len() * N_FRAMES);
        let mut buf = vec![0.0; adapted[0].len()];
        for ch in &self.channels {
            let x = &adapted[ch.band];
            match &self.mod_filters[ch.modulation] {
                ModFilter::Lowpass(a) => {
                    let mut s = 0.0;
                    for (o, &v) in buf.iter_mut().zip(x) {
                        s = (1.0 - a) * v + a * s;
                        *o = s;
                    }
                }
                ModFilter::Bandpass { resonator, magnitude } => {
                    for (o, c) in buf.iter_mut().zip(resonator.filter(x)) {
                        *o = if *magnitude { c.norm() } else { c.re };
                    }
                }
            }
            for i in 0..N_FRAMES {
                let f = &buf[i * frame_len..(i + 1) * frame_len];
                values.push(f.iter().sum::<f64>() / frame_len as f64);
            }
        }
        Ok(InternalRepresentation {
            n_frames: N_FRAMES,
            channels: self.channels.clone(),
            values,
        })
    }

    /// Representations of many waveforms, in input order.
    pub fn internal_representations(&self, ws: &[Waveform]) -> Result<Vec<InternalRepresentation>> {
        ws.par_iter().map(|w| self.internal_representation(w)).collect()
    }
}
