//! Trial engine: weighted up-down staircase, block and session runner,
//! trial logs, exclusion and balancing rules, and behavioural metrics.

mod analysis;
mod log;
mod observer;
mod session;
mod staircase;

use serde::{Deserialize, Serialize};

use crate::noise::NoiseKind;
use crate::targets::TargetId;

pub use analysis::{
    balance_responses, behavioral_metrics, dprime_criterion, exclude_approach_phase, reversal_indices, BehavioralMetrics,
    BlockThreshold, SnrBin, MIN_REVERSALS,
};
pub use log::{read_trial_log, write_trial_log};
pub use observer::PsychometricObserver;
pub use session::{
    block_schedule, run_block, run_session, BlockOutcome, Listener, Presentation, SessionConfig, SessionOutcome,
};
pub use staircase::{staircase_update, Direction, StaircaseState, UP_DOWN_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Approach,
    Measure,
}

/// One logged trial. The noise waveform is not stored: `(noise_kind,
/// noise_seed)` together with the session's noise spec regenerate it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub block_index: usize,
    pub noise_kind: NoiseKind,
    pub noise_seed: u64,
    pub target_id: TargetId,
    pub snr: f64,
    pub rove: f64,
    pub response: TargetId,
    pub correct: bool,
    pub phase: Phase,
}
