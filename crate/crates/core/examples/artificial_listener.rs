//! Run the auditory-model listener through one short block per noise kind.
//! Building the templates takes a few seconds; each trial about 70 ms.
//!
//! ```text
//! cargo run --release --example artificial_listener -- 120
//! ```

use revcorr::experiment::{behavioral_metrics, exclude_approach_phase, run_block, SessionConfig};
use revcorr::listener::{derive_templates, ArtificialListener, AuditoryModel, ModelConfig};
use revcorr::noise::{NoiseKind, NoiseSpec};
use revcorr::targets::{TargetId, TargetPair};

fn main() -> revcorr::Result<()> {
    let trials: usize = std::env::args().nth(1).map(|s| s.parse().expect("trial count")).unwrap_or(120);
    let model = AuditoryModel::new(ModelConfig::default())?;
    let targets = TargetPair::synthetic();
    let templates = derive_templates(&targets, &model, 7)?;
    let mut listener = ArtificialListener::new(model, templates);
    let cfg = SessionConfig {
        n_blocks: 1,
        trials_per_block: trials,
        ..SessionConfig::default()
    };
    for kind in NoiseKind::ALL {
        let out = run_block(&cfg, 0, &NoiseSpec::for_kind(kind), &targets, &mut listener);
        if let Some(e) = out.error {
            return Err(e);
        }
        let kept = exclude_approach_phase(&out.records);
        let pc = kept.iter().filter(|r| r.correct).count() as f64 / kept.len().max(1) as f64;
        let aba = out.records.iter().filter(|r| r.response == TargetId::Aba).count();
        let m = behavioral_metrics(&kept);
        let thr = m.thresholds.first().map_or(f64::NAN, |t| t.threshold);
        println!(
            "{kind:5}: {} measured trials, {:.1}% correct, {aba}/{} \"aba\" responses, threshold {thr:.2} dB",
            kept.len(),
            100.0 * pc,
            out.records.len()
        );
    }
    Ok(())
}
