//! The whole chain on a small session: simulate the listener, fit one ACI
//! per condition, score them and write the figure data. Everything lands in
//! the directory given as first argument.
//!
//! ```text
//! cargo run --release --example pipeline -- /tmp/run
//! ```

use std::path::PathBuf;

use revcorr::aci::PyramidBasis;
use revcorr::experiment::SessionConfig;
use revcorr::pipeline::{fit_run, predict_run, report_run, simulate, PipelineConfig, Run};

fn main() -> revcorr::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline-run".into()));
    let cfg = PipelineConfig {
        seed: 1,
        synthetic_targets: true,
        session: SessionConfig {
            n_blocks: 3,
            trials_per_block: 200,
            ..SessionConfig::default()
        },
        ..PipelineConfig::default()
    };
    let sim = simulate(&cfg, &dir, false)?;
    println!("{} trials simulated", sim.records.len());

    let run = Run::load(&dir)?;
    let basis = PyramidBasis::new();
    for f in fit_run(&run, &[], &basis)? {
        println!("{:5}: lambda* {:.4}, {} nonzero, null {}", f.kind, f.aci.lambda, f.aci.n_nonzero(), f.aci.is_null);
    }
    for p in predict_run(&run, &basis)? {
        println!("{:5}: dPA {:.1}%, significant {}", p.kind, p.all.delta_pa, p.all.significant);
    }
    let report = report_run(&run, None)?;
    println!("{} report files in {}", report.files.len(), report.dir.display());
    Ok(())
}
