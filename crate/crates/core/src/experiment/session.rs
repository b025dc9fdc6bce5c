use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::staircase::{staircase_update, StaircaseState};
use super::{Phase, TrialRecord};
use crate::error::{Error, Result};
use crate::noise::{generate, NoiseKind, NoiseSpec};
use crate::seed::{self, stream};
use crate::signal::{apply_gain_db, mix_at_snr, LevelConvention, Snr, Waveform, ROVE_RANGE_DB};
use crate::targets::{TargetId, TargetPair};

/// Reversal count that opens the measuring phase.
const MEASURE_AFTER_REVERSALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub n_blocks: usize,
    pub trials_per_block: usize,
    pub initial_snr: f64,
    pub down_step: f64,
    pub conditions: Vec<NoiseKind>,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_blocks: 30,
            trials_per_block: 400,
            initial_snr: 0.0,
            down_step: 1.0,
            conditions: NoiseKind::ALL.to_vec(),
            seed: 1,
        }
    }
}

impl SessionConfig {
    pub fn block_seed(&self, block_index: usize) -> u64 {
        seed::derive(self.seed, stream::BLOCK, block_index as u64)
    }

    fn validate(&self) -> Result<()> {
        if self.conditions.is_empty() {
            return Err(Error::invalid("session needs at least one noise condition"));
        }
        if self.trials_per_block == 0 {
            return Err(Error::invalid("trials_per_block must be positive"));
        }
        if !(self.down_step > 0.0) || !self.initial_snr.is_finite() {
            return Err(Error::invalid("down_step must be positive and initial_snr finite"));
        }
        Ok(())
    }
}

/// Everything a listener may look at on one trial. Audio is built lazily so
/// that listeners which only need the SNR (psychometric observers) skip
/// noise synthesis.
pub struct Presentation<'a> {
    pub trial_index: usize,
    pub target: TargetId,
    pub snr: f64,
    pub rove_db: f64,
    pub noise_seed: u64,
    pub targets: &'a TargetPair,
    pub noise_spec: &'a NoiseSpec,
}

impl Presentation<'_> {
    pub fn noise(&self) -> Result<Waveform> {
        Ok(generate(self.noise_spec, self.noise_seed)?.waveform)
    }

    /// Target at `snr` re the noise, plus noise, then roved.
    pub fn mixture(&self) -> Result<Waveform> {
        let noise = self.noise()?;
        let mix = mix_at_snr(
            self.targets.get(self.target),
            &noise,
            Snr::Db(self.snr),
            LevelConvention::default(),
        )?;
        Ok(apply_gain_db(&mix, self.rove_db))
    }
}

/// A participant in the two-alternative task.
pub trait Listener {
    fn respond(&mut self, presentation: &Presentation<'_>) -> Result<TargetId>;

    /// Called before the first trial of every block.
    fn start_block(&mut self, _block_index: usize, _kind: NoiseKind) {}
}

/// Records of one block. On listener failure `error` is set and `records`
/// holds the trials completed before it.
#[derive(Debug)]
pub struct BlockOutcome {
    pub records: Vec<TrialRecord>,
    pub error: Option<Error>,
}

/// Run one adaptive block of `cfg.trials_per_block` trials in `noise_spec`.
pub fn run_block(
    cfg: &SessionConfig,
    block_index: usize,
    noise_spec: &NoiseSpec,
    targets: &TargetPair,
    listener: &mut dyn Listener,
) -> BlockOutcome {
    let block_seed = cfg.block_seed(block_index);
    let n = cfg.trials_per_block;
    let mut order: Vec<TargetId> = (0..n)
        .map(|i| if i < n / 2 { TargetId::Aba } else { TargetId::Ada })
        .collect();
    order.shuffle(&mut seed::rng(seed::derive(block_seed, stream::TARGET_ORDER, 0)));
    let mut rove_rng = seed::rng(seed::derive(block_seed, stream::TRIAL_ROVE, 0));

    let kind = noise_spec.kind();
    listener.start_block(block_index, kind);
    let mut state = StaircaseState::new(cfg.initial_snr, cfg.down_step);
    let mut records = Vec::with_capacity(n);
    for (t, &target) in order.iter().enumerate() {
        let noise_seed = seed::derive(block_seed, stream::TRIAL_NOISE, t as u64);
        let rove_db = rove_rng.random_range(-ROVE_RANGE_DB..=ROVE_RANGE_DB);
        let p = Presentation {
            trial_index: t,
            target,
            snr: state.current_snr,
            rove_db,
            noise_seed,
            targets,
            noise_spec,
        };
        let response = match listener.respond(&p) {
            Ok(r) => r,
            Err(e) => {
                return BlockOutcome {
                    records,
                    error: Some(Error::Listener {
                        trial: t,
                        reason: e.to_string(),
                    }),
                }
            }
        };
        let correct = response == target;
        let next = staircase_update(state, correct);
        records.push(TrialRecord {
            trial_index: t,
            block_index,
            noise_kind: kind,
            noise_seed,
            target_id: target,
            snr: state.current_snr,
            rove: rove_db,
            response,
            correct,
            phase: if next.reversal_count >= MEASURE_AFTER_REVERSALS {
                Phase::Measure
            } else {
                Phase::Approach
            },
        });
        state = next;
    }
    let n_aba = records.iter().filter(|r| r.response == TargetId::Aba).count();
    let ratio = n_aba as f64 / records.len() as f64;
    if !(0.4..=0.6).contains(&ratio) {
        log::warn!(
            "block {block_index} ({kind}): response bias, {:.1} % \"aba\" answers",
            100.0 * ratio
        );
    }
    BlockOutcome { records, error: None }
}

/// Condition of every block: the first blocks cover each condition once in
/// random order, the rest are a shuffled, as-balanced-as-possible draw.
pub fn block_schedule(cfg: &SessionConfig) -> Vec<NoiseKind> {
    let mut rng = seed::rng(seed::derive(cfg.seed, stream::CONDITION, 0));
    let k = cfg.conditions.len();
    let mut head = cfg.conditions.clone();
    head.shuffle(&mut rng);
    head.truncate(cfg.n_blocks);
    let rest = cfg.n_blocks.saturating_sub(k);
    let mut tail: Vec<NoiseKind> = (0..rest).map(|i| cfg.conditions[i % k]).collect();
    tail.shuffle(&mut rng);
    head.extend(tail);
    head
}

#[derive(Debug)]
pub struct SessionOutcome {
    pub schedule: Vec<NoiseKind>,
    pub records: Vec<TrialRecord>,
    pub error: Option<Error>,
}

/// Run all blocks in schedule order with one listener. Stops at the first
/// listener failure, keeping the completed trials.
pub fn run_session(
    cfg: &SessionConfig,
    noise_specs: &[NoiseSpec],
    targets: &TargetPair,
    listener: &mut dyn Listener,
) -> Result<SessionOutcome> {
    cfg.validate()?;
    for kind in &cfg.conditions {
        if !noise_specs.iter().any(|s| s.kind() == *kind) {
            return Err(Error::invalid(format!("no noise spec given for condition {kind}")));
        }
    }
    let schedule = block_schedule(cfg);
    let mut records = Vec::with_capacity(cfg.n_blocks * cfg.trials_per_block);
    for (b, kind) in schedule.iter().enumerate() {
        let spec = noise_specs.iter().find(|s| s.kind() == *kind).expect("checked above");
        let out = run_block(cfg, b, spec, targets, listener);
        records.extend(out.records);
        if let Some(e) = out.error {
            return Ok(SessionOutcome {
                schedule,
                records,
                error: Some(e),
            });
        }
    }
    Ok(SessionOutcome {
        schedule,
        records,
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Always(bool);

    impl Listener for Always {
        fn respond(&mut self, p: &Presentation<'_>) -> Result<TargetId> {
            Ok(if self.0 { p.target } else { p.target.other() })
        }
    }

    struct FailAt(usize);

    impl Listener for FailAt {
        fn respond(&mut self, p: &Presentation<'_>) -> Result<TargetId> {
            if p.trial_index == self.0 {
                Err(Error::invalid("listener crashed"))
            } else {
                Ok(TargetId::Aba)
            }
        }
    }

    fn small_cfg() -> SessionConfig {
        SessionConfig {
            n_blocks: 3,
            trials_per_block: 40,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn always_correct_descends_by_down_step() {
        let targets = TargetPair::synthetic();
        let out = run_block(&small_cfg(), 0, &NoiseSpec::white(), &targets, &mut Always(true));
        assert!(out.error.is_none());
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.snr, -(i as f64));
            assert_eq!(r.phase, Phase::Approach);
        }
    }

    #[test]
    fn targets_are_balanced_per_block() {
        let targets = TargetPair::synthetic();
        let out = run_block(&small_cfg(), 2, &NoiseSpec::white(), &targets, &mut Always(false));
        let n_aba = out.records.iter().filter(|r| r.target_id == TargetId::Aba).count();
        assert_eq!(n_aba, 20);
        assert!(out.records.iter().all(|r| r.rove.abs() <= 2.5));
    }

    #[test]
    fn failure_keeps_partial_log() {
        let targets = TargetPair::synthetic();
        let out = run_block(&small_cfg(), 0, &NoiseSpec::white(), &targets, &mut FailAt(7));
        assert_eq!(out.records.len(), 7);
        assert!(matches!(out.error, Some(Error::Listener { trial: 7, .. })));
    }

    #[test]
    fn schedule_covers_conditions_first() {
        let cfg = SessionConfig::default();
        let s = block_schedule(&cfg);
        assert_eq!(s.len(), 30);
        let mut head = s[..3].to_vec();
        head.sort();
        assert_eq!(head, NoiseKind::ALL.to_vec());
        for k in NoiseKind::ALL {
            assert_eq!(s.iter().filter(|x| **x == k).count(), 10);
        }
        assert_eq!(block_schedule(&cfg), s);
    }

    #[test]
    fn session_is_replayable() {
        let targets = TargetPair::synthetic();
        let specs: Vec<NoiseSpec> = NoiseKind::ALL.iter().map(|k| NoiseSpec::for_kind(*k)).collect();
        let cfg = SessionConfig {
            trials_per_block: 10,
            ..small_cfg()
        };
        let a = run_session(&cfg, &specs, &targets, &mut Always(true)).unwrap();
        let b = run_session(&cfg, &specs, &targets, &mut Always(true)).unwrap();
        assert_eq!(a.records, b.records);
        assert!(run_session(&cfg, &specs[..1], &targets, &mut Always(true)).is_err());
    }

    #[test]
    fn mixture_is_roved_sum() {
        let targets = TargetPair::synthetic();
        let spec = NoiseSpec::white();
        let p = Presentation {
            trial_index: 0,
            target: TargetId::Ada,
            snr: -10.0,
            rove_db: 2.0,
            noise_seed: 5,
            targets: &targets,
            noise_spec: &spec,
        };
        let conv = LevelConvention::default();
        let noise = p.noise().unwrap();
        let mix = p.mixture().unwrap();
        let unroved = apply_gain_db(&mix, -2.0);
        let speech: Vec<f64> = unroved.samples().iter().zip(noise.samples()).map(|(m, n)| m - n).collect();
        let speech = Waveform::new(speech, 16000.0).unwrap();
        assert!((conv.level(&speech) - (conv.level(&noise) - 10.0)).abs() < 1e-6);
    }
}
