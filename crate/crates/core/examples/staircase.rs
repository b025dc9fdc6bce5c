//! Drive the weighted up-down staircase with an observer whose psychometric
//! function is known, and read off where it settles.

use revcorr::experiment::{
    behavioral_metrics, exclude_approach_phase, run_block, PsychometricObserver, SessionConfig, StaircaseState,
};
use revcorr::noise::NoiseSpec;
use revcorr::targets::TargetPair;

fn main() {
    let target = StaircaseState::new(0.0, 1.0).target_proportion();
    let mut observer = PsychometricObserver::new(-12.0, 2.0, 1);
    let cfg = SessionConfig {
        n_blocks: 4,
        trials_per_block: 400,
        ..SessionConfig::default()
    };
    let targets = TargetPair::synthetic();
    let spec = NoiseSpec::white();
    let mut kept = Vec::new();
    for b in 0..cfg.n_blocks {
        kept.extend(exclude_approach_phase(&run_block(&cfg, b, &spec, &targets, &mut observer).records));
    }
    let pc = kept.iter().filter(|r| r.correct).count() as f64 / kept.len() as f64;
    println!("tracked proportion {target:.4}, measured {pc:.4} over {} trials", kept.len());
    let m = behavioral_metrics(&kept);
    for t in &m.thresholds {
        println!("block {}: threshold {:.2} dB", t.block_index, t.threshold);
    }
    for bin in m.bins.iter().filter(|b| b.n_aba + b.n_ada >= 50) {
        println!(
            "{:+3.0} dB: {:4} trials, p(correct) model {:.3}, d' {:.2}, c {:+.2}",
            bin.snr_center,
            bin.n_aba + bin.n_ada,
            observer.p_correct(bin.snr_center),
            bin.dprime,
            bin.criterion
        );
    }
}
