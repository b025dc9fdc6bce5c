use serde::{Deserialize, Serialize};

/// Up-step to down-step ratio of the weighted rule; the track converges on
/// `UP_DOWN_RATIO / (1 + UP_DOWN_RATIO)` = 70.7 % correct.
pub const UP_DOWN_RATIO: f64 = 2.41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    None,
}

impl Direction {
    pub fn after(correct: bool) -> Self {
        if correct {
            Direction::Down
        } else {
            Direction::Up
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircaseState {
    pub current_snr: f64,
    pub down_step: f64,
    pub up_down_ratio: f64,
    pub reversal_count: usize,
    pub last_direction: Direction,
    pub trial_index: usize,
}

impl StaircaseState {
    pub fn new(initial_snr: f64, down_step: f64) -> Self {
        Self {
            current_snr: initial_snr,
            down_step,
            up_down_ratio: UP_DOWN_RATIO,
            reversal_count: 0,
            last_direction: Direction::None,
            trial_index: 0,
        }
    }

    pub fn up_step(&self) -> f64 {
        self.up_down_ratio * self.down_step
    }

    /// Convergence point of the rule, as a proportion correct.
    pub fn target_proportion(&self) -> f64 {
        self.up_down_ratio / (1.0 + self.up_down_ratio)
    }
}

/// One step of the weighted one-up one-down rule. Steps stay fixed.
pub fn staircase_update(state: StaircaseState, correct: bool) -> StaircaseState {
    let dir = Direction::after(correct);
    let mut next = state;
    next.current_snr += match dir {
        Direction::Down => -state.down_step,
        _ => state.up_step(),
    };
    if state.last_direction != Direction::None && state.last_direction != dir {
        next.reversal_count += 1;
    }
    next.last_direction = dir;
    next.trial_index += 1;
    next
}
