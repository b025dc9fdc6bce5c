//! Figure data: per-block thresholds, per-SNR-bin SDT metrics, benefit
//! metrics with their error bars, ACI matrices and deviance paths.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{write_manifest, Run};
use crate::error::Result;
use crate::experiment::behavioral_metrics;
use crate::persist::write_atomic;

#[derive(Debug)]
pub struct ReportOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// `(item, reason)` for every figure table that could not be produced.
    pub gaps: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ThresholdRow {
    block_index: usize,
    condition: String,
    threshold_db: f64,
    n_trials: usize,
}

#[derive(Serialize)]
struct BinRow {
    condition: String,
    snr_db: f64,
    n_aba: usize,
    n_ada: usize,
    pc_aba: f64,
    pc_ada: f64,
    hit_rate: f64,
    fa_rate: f64,
    dprime: f64,
    criterion: f64,
}

fn rows_to_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for r in rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    })
}

fn copy(src: &Path, dst: &Path) -> Result<()> {
    let bytes = std::fs::read(src)?;
    write_atomic(dst, |w| Ok(w.write_all(&bytes)?))
}

/// Write the report into `out` (default `<run>/report`). Missing fits or
/// predictions leave gaps, listed in `gaps.csv`, rather than failing.
pub fn report_run(run: &Run, out: Option<&Path>) -> Result<ReportOutcome> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| run.dir.join("report"));
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut gaps = Vec::new();

    let thresholds: Vec<ThresholdRow> = behavioral_metrics(&run.records)
        .thresholds
        .into_iter()
        .map(|t| ThresholdRow {
            block_index: t.block_index,
            condition: t.noise_kind.to_string(),
            threshold_db: t.threshold,
            n_trials: t.n_trials,
        })
        .collect();
    rows_to_csv(&dir.join("thresholds.csv"), &thresholds)?;
    files.push("thresholds.csv".to_string());

    let mut bins = Vec::new();
    for kind in run.conditions() {
        for b in behavioral_metrics(&run.measured_records(kind)).bins {
            bins.push(BinRow {
                condition: kind.to_string(),
                snr_db: b.snr_center,
                n_aba: b.n_aba,
                n_ada: b.n_ada,
                pc_aba: b.pc_aba,
                pc_ada: b.pc_ada,
                hit_rate: b.hit_rate,
                fa_rate: b.fa_rate,
                dprime: b.dprime,
                criterion: b.criterion,
            });
        }
    }
    rows_to_csv(&dir.join("sdt_bins.csv"), &bins)?;
    files.push("sdt_bins.csv".to_string());

    let summary = run.dir.join("predict").join("summary.csv");
    if summary.exists() {
        copy(&summary, &dir.join("delta_metrics.csv"))?;
        files.push("delta_metrics.csv".to_string());
    } else {
        gaps.push(("delta_metrics.csv".into(), "no predictions; run `predict`".into()));
    }

    for kind in run.conditions() {
        let aci = run.aci_dir(kind);
        for (src, dst) in [("aci_weights.csv", "aci_weights"), ("deviance_path.csv", "deviance_path")] {
            let name = format!("{dst}_{kind}.csv");
            if aci.join(src).exists() {
                copy(&aci.join(src), &dir.join(&name))?;
                files.push(name);
            } else {
                gaps.push((name, format!("no fitted {kind} ACI; run `fit`")));
            }
        }
    }

    #[derive(Serialize)]
    struct Gap<'a> {
        item: &'a str,
        reason: &'a str,
    }
    rows_to_csv(
        &dir.join("gaps.csv"),
        &gaps.iter().map(|(item, reason)| Gap { item, reason }).collect::<Vec<_>>(),
    )?;
    files.push("gaps.csv".to_string());
    write_manifest(&dir, &files)?;
    Ok(ReportOutcome { dir, files, gaps })
}
