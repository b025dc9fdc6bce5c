use rayon::prelude::*;

use super::{AuditoryModel, InternalRepresentation};
use crate::error::Result;
use crate::experiment::{Listener, Presentation};
use crate::noise::{generate_white, NoiseKind, NoiseSpec};
use crate::seed::{self, stream};
use crate::signal::{mix_at_snr, LevelConvention, Snr};
use crate::targets::{TargetId, TargetPair};

/// Unit-energy templates of the two targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    pub aba: InternalRepresentation,
    pub ada: InternalRepresentation,
    pub snr: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

impl Templates {
    pub fn get(&self, id: TargetId) -> &InternalRepresentation {
        match id {
            TargetId::Aba => &self.aba,
            TargetId::Ada => &self.ada,
        }
    }
}

fn mean_ir(irs: Vec<InternalRepresentation>) -> InternalRepresentation {
    let n = irs.len() as f64;
    let mut acc = irs[0].clone();
    acc.values.iter_mut().for_each(|v| *v = 0.0);
    for ir in &irs {
        for (a, v) in acc.values.iter_mut().zip(&ir.values) {
            *a += v / n;
        }
    }
    acc
}

/// Average each target's representation over fresh white-noise mixtures at
/// the template SNR and normalize to unit energy. The same templates serve
/// every noise condition. Both targets are embedded in the same tokens.
pub fn derive_templates(targets: &TargetPair, model: &AuditoryModel, seed: u64) -> Result<Templates> {
    let cfg = model.config();
    let n = cfg.template_realizations.max(1);
    let spec = NoiseSpec::white();
    let conv = LevelConvention::default();
    let noise_mean = if cfg.subtract_noise_template {
        let irs: Result<Vec<_>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = seed::derive(seed::derive(seed, stream::TEMPLATE, 2), stream::TRIAL_NOISE, i as u64);
                model.internal_representation(&generate_white(&spec, s)?.waveform)
            })
            .collect();
        Some(mean_ir(irs?))
    } else {
        None
    };
    let build = |id: TargetId| -> Result<InternalRepresentation> {
        // both targets see the same noise tokens, so template estimation
        // noise cancels in their difference
        let parent = seed::derive(seed, stream::TEMPLATE, 0);
        let irs: Result<Vec<_>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let noise = generate_white(&spec, seed::derive(parent, stream::TRIAL_NOISE, i as u64))?;
                let mix = mix_at_snr(targets.get(id), &noise.waveform, Snr::Db(cfg.template_snr), conv)?;
                model.internal_representation(&mix)
            })
            .collect();
        let mut t = mean_ir(irs?);
        if let Some(nm) = &noise_mean {
            for (a, b) in t.values.iter_mut().zip(&nm.values) {
                *a -= b;
            }
        }
        let norm = t.norm();
        if norm > 0.0 {
            t.values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(t)
    };
    Ok(Templates {
        aba: build(TargetId::Aba)?,
        ada: build(TargetId::Ada)?,
        snr: cfg.template_snr,
        n_realizations: n,
        seed,
    })
}

/// Response bias and the running statistics that steer it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecisionState {
    pub bias: f64,
    pub n_aba: usize,
    pub n_ada: usize,
    /// Running mean and mean absolute deviation of the unbiased decision
    /// variable; the deviation sets the size of bias steps.
    pub mean: f64,
    pub scale: f64,
    pub n_seen: usize,
}

impl DecisionState {
    /// `(n_ada - n_aba) / n`; positive when "ada" dominates.
    pub fn imbalance(&self) -> f64 {
        let n = self.n_aba + self.n_ada;
        if n == 0 {
            0.0
        } else {
            (self.n_ada as f64 - self.n_aba as f64) / n as f64
        }
    }

    /// Forget response counts but keep the learned bias.
    pub fn reset_counts(&mut self) {
        self.n_aba = 0;
        self.n_ada = 0;
    }
}

/// `<IR, T_ada> - <IR, T_aba>`, before bias; divided by `|IR|` when
/// `normalize_ir` is set.
pub fn match_difference(ir: &InternalRepresentation, templates: &Templates, normalize_ir: bool) -> f64 {
    let d = ir.dot(&templates.ada) - ir.dot(&templates.aba);
    let norm = ir.norm();
    if normalize_ir && norm > 0.0 {
        d / norm
    } else {
        d
    }
}

/// Respond "ada" iff the biased decision variable is positive (ties go to
/// "aba"), then nudge the bias against the running response imbalance.
pub fn decide(raw: f64, state: &mut DecisionState, bias_rate: f64) -> TargetId {
    let d = raw + state.bias;
    let response = if d > 0.0 { TargetId::Ada } else { TargetId::Aba };
    match response {
        TargetId::Aba => state.n_aba += 1,
        TargetId::Ada => state.n_ada += 1,
    }
    state.n_seen += 1;
    let w = (1.0 / state.n_seen as f64).max(0.02);
    state.mean += w * (raw - state.mean);
    state.scale += w * ((raw - state.mean).abs() - state.scale);
    state.bias -= bias_rate * state.scale * state.imbalance();
    response
}

/// Template-matching listener driven by the auditory model.
pub struct ArtificialListener {
    model: AuditoryModel,
    templates: Templates,
    pub state: DecisionState,
    pub bias_enabled: bool,
}

impl ArtificialListener {
    pub fn new(model: AuditoryModel, templates: Templates) -> Self {
        Self {
            model,
            templates,
            state: DecisionState::default(),
            bias_enabled: true,
        }
    }

    pub fn model(&self) -> &AuditoryModel {
        &self.model
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    pub fn decide_waveform(&mut self, mixture: &crate::signal::Waveform) -> Result<TargetId> {
        let ir = self.model.internal_representation(mixture)?;
        let cfg = self.model.config();
        let raw = match_difference(&ir, &self.templates, cfg.normalize_ir);
        let rate = if self.bias_enabled { cfg.bias_rate } else { 0.0 };
        Ok(decide(raw, &mut self.state, rate))
    }
}

impl Listener for ArtificialListener {
    fn respond(&mut self, p: &Presentation<'_>) -> Result<TargetId> {
        self.decide_waveform(&p.mixture()?)
    }

    fn start_block(&mut self, _block_index: usize, _kind: NoiseKind) {
        self.state.reset_counts();
    }
}
