use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::session::{Listener, Presentation};
use crate::error::Result;
use crate::seed;
use crate::targets::TargetId;

/// Observer whose accuracy depends on SNR only:
/// `P(correct) = 0.5 + 0.5 * sigmoid((snr - midpoint) / spread)`.
#[derive(Debug, Clone)]
pub struct PsychometricObserver {
    pub midpoint: f64,
    pub spread: f64,
    rng: ChaCha8Rng,
}

impl PsychometricObserver {
    pub fn new(midpoint: f64, spread: f64, seed: u64) -> Self {
        Self {
            midpoint,
            spread,
            rng: seed::rng(seed),
        }
    }

    pub fn p_correct(&self, snr: f64) -> f64 {
        0.5 + 0.5 / (1.0 + (-(snr - self.midpoint) / self.spread).exp())
    }
}

impl Listener for PsychometricObserver {
    fn respond(&mut self, p: &Presentation<'_>) -> Result<TargetId> {
        let correct = self.rng.random::<f64>() < self.p_correct(p.snr);
        Ok(if correct { p.target } else { p.target.other() })
    }
}
