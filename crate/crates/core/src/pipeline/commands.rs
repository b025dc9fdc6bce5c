use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{write_manifest, ManifestEntry, NoiseManifestRow, PipelineConfig, Run, CONFIG_FILE, NOISE_MANIFEST_FILE, TIMING_FILE, TRIALS_FILE};
use crate::aci::{fit_aci, save_aci, Aci, FitDataset, PyramidBasis, ACI_FILES};
use crate::error::{Error, Result};
use crate::experiment::{run_session, write_trial_log, BehavioralMetrics, TrialRecord};
use crate::listener::{derive_templates, ArtificialListener, AuditoryModel};
use crate::noise::{validate_noise_set, ReferenceStats, ValidationReport};
use crate::noise::{generate, NoiseKind, NoiseSpec, NoiseToken};
use crate::persist::write_atomic;
use crate::predict::{auto_prediction, chance_boundary_delta, cross_prediction, CrossPredMatrix, PredictionReport, Variant, Z_ONE_SIDED};
use crate::seed::{self, stream};
use crate::signal::wav::write_wav;
use crate::targets::TargetPair;

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    write_atomic(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for r in rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

#[derive(Serialize)]
struct TokenRow<'a> {
    index: usize,
    seed: u64,
    spec_id: &'a str,
    phase_retrieval_error: Option<f64>,
}

/// Token seeds of a noise set: `derive(seed, NOISEGEN, i)`.
fn token_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| seed::derive(seed, stream::NOISEGEN, i)).collect()
}

fn generate_set(spec: &NoiseSpec, seed: u64, count: usize) -> Result<Vec<NoiseToken>> {
    token_seeds(seed, count).into_par_iter().map(|s| generate(spec, s)).collect()
}

/// Generate `count` tokens of `spec` and record their seeds; with `dump_wav`
/// the waveforms are written as well.
pub fn noisegen(spec: &NoiseSpec, count: usize, seed: u64, out: &Path, dump_wav: bool) -> Result<Vec<ManifestEntry>> {
    if count == 0 {
        return Err(Error::invalid("count must be positive"));
    }
    let tokens = generate_set(spec, seed, count)?;
    let warned = tokens.iter().filter(|t| t.phase_retrieval_warning()).count();
    if warned > 0 {
        log::warn!("{warned} of {count} tokens exceeded the phase-retrieval tolerance");
    }
    let mut files = vec!["noise_spec.toml".to_string(), "tokens.csv".to_string()];
    write_text(&out.join(&files[0]), &toml::to_string(spec).map_err(|e| Error::Config(e.to_string()))?)?;
    write_csv(
        &out.join(&files[1]),
        tokens.iter().enumerate().map(|(index, t)| TokenRow {
            index,
            seed: t.seed,
            spec_id: &t.spec_id,
            phase_retrieval_error: t.phase_retrieval_error,
        }),
    )?;
    if dump_wav {
        std::fs::create_dir_all(out.join("wav"))?;
        for (i, t) in tokens.iter().enumerate() {
            let rel = format!("wav/token_{i:05}.wav");
            write_wav(out.join(&rel), &t.waveform)?;
            files.push(rel);
        }
    }
    write_manifest(out, &files)
}

/// Generate a token set and compare its statistics with the published ones
/// for its kind.
pub fn validate_noise(spec: &NoiseSpec, count: usize, seed: u64, out: &Path) -> Result<ValidationReport> {
    let tokens = generate_set(spec, seed, count)?;
    let report = validate_noise_set(&tokens, &ReferenceStats::for_kind(spec.kind()))?;
    let files = ["band_levels.csv", "envelope_spectrum.csv", "checks.csv"].map(String::from);
    write_atomic(out.join(&files[0]), |w| report.write_band_levels_csv(w))?;
    write_atomic(out.join(&files[1]), |w| report.write_envelope_csv(w, 60.0))?;
    write_atomic(out.join(&files[2]), |w| report.write_summary_csv(w))?;
    write_manifest(out, &files)?;
    Ok(report)
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub records: Vec<TrialRecord>,
    pub manifest: Vec<ManifestEntry>,
    pub metrics: BehavioralMetrics,
}

fn load_targets(cfg: &PipelineConfig) -> Result<TargetPair> {
    if cfg.synthetic_targets {
        return Ok(TargetPair::synthetic());
    }
    match &cfg.targets_dir {
        Some(dir) => TargetPair::load(dir),
        None => Err(Error::MissingInput {
            path: "aba.wav".into(),
            hint: "set `targets_dir` in the config or pass --synthetic-targets".into(),
        }),
    }
}

/// Run the artificial listener through a full session and write the run
/// directory. Nothing but `timing.toml` depends on wall-clock time.
pub fn simulate(cfg: &PipelineConfig, out: &Path, dump_wav: bool) -> Result<SimulateOutcome> {
    let cfg = cfg.clone().resolved()?;
    let targets = load_targets(&cfg)?;
    let t0 = Instant::now();
    let model = AuditoryModel::new(cfg.model.clone())?;
    let templates = derive_templates(&targets, &model, seed::derive(cfg.seed, stream::TEMPLATE, 0))?;
    let t_templates = t0.elapsed().as_secs_f64();
    let mut listener = ArtificialListener::new(model, templates);
    let specs: Vec<NoiseSpec> = NoiseKind::ALL.iter().map(|k| cfg.noise.get(*k).clone()).collect();
    let outcome = run_session(&cfg.session, &specs, &targets, &mut listener)?;
    if let Some(e) = outcome.error {
        return Err(e);
    }
    let t_session = t0.elapsed().as_secs_f64() - t_templates;
    let records = outcome.records;

    std::fs::create_dir_all(out)?;
    let mut files = vec![
        CONFIG_FILE.to_string(),
        TRIALS_FILE.to_string(),
        NOISE_MANIFEST_FILE.to_string(),
        "targets/aba.wav".to_string(),
        "targets/ada.wav".to_string(),
    ];
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml()?)?;
    write_atomic(out.join(TRIALS_FILE), |w| write_trial_log(w, &records))?;
    write_csv(
        &out.join(NOISE_MANIFEST_FILE),
        records.iter().map(|r| NoiseManifestRow {
            block_index: r.block_index,
            trial_index: r.trial_index,
            noise_kind: r.noise_kind,
            noise_seed: r.noise_seed,
            spec_id: cfg.noise.get(r.noise_kind).id(),
        }),
    )?;
    std::fs::create_dir_all(out.join("targets"))?;
    write_wav(out.join("targets/aba.wav"), &targets.aba)?;
    write_wav(out.join("targets/ada.wav"), &targets.ada)?;
    if dump_wav {
        std::fs::create_dir_all(out.join("wav"))?;
        for r in &records {
            let rel = format!("wav/noise_b{:02}_t{:03}.wav", r.block_index, r.trial_index);
            write_wav(out.join(&rel), &generate(cfg.noise.get(r.noise_kind), r.noise_seed)?.waveform)?;
            files.push(rel);
        }
    }
    let manifest = write_manifest(out, &files)?;
    write_text(
        &out.join(TIMING_FILE),
        &format!(
            "config_hash = \"{}\"\ntemplates_seconds = {t_templates:.3}\nsession_seconds = {t_session:.3}\n",
            cfg.hash()?
        ),
    )?;
    Ok(SimulateOutcome {
        metrics: crate::experiment::behavioral_metrics(&records),
        records,
        manifest,
    })
}

#[derive(Debug)]
pub struct FitOutcome {
    pub kind: NoiseKind,
    pub aci: Aci,
}

/// Fit one ACI per requested condition and save it under `aci/<kind>/`.
/// Every dataset is assembled before anything is written.
pub fn fit_run(run: &Run, kinds: &[NoiseKind], basis: &PyramidBasis) -> Result<Vec<FitOutcome>> {
    let kinds: Vec<NoiseKind> = if kinds.is_empty() { run.conditions() } else { kinds.to_vec() };
    for k in &kinds {
        if !run.conditions().contains(k) {
            return Err(Error::invalid(format!("the run has no {k} trials")));
        }
    }
    let datasets = kinds.iter().map(|&k| run.dataset(k)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (&kind, data) in kinds.iter().zip(&datasets) {
        log::info!("fitting {kind}: {} trials", data.n());
        let aci = fit_aci(data, basis, &run.config.fit)?;
        save_aci(&run.aci_dir(kind), &aci, basis)?;
        out.push(FitOutcome { kind, aci });
    }
    let root = run.dir.join("aci");
    let files: Vec<String> = NoiseKind::ALL
        .iter()
        .filter(|k| run.aci_dir(**k).join(ACI_FILES[5]).exists())
        .flat_map(|k| ACI_FILES.iter().map(move |f| format!("{k}/{f}")))
        .collect();
    write_manifest(&root, &files)?;
    Ok(out)
}

#[derive(Debug, Serialize)]
pub(crate) struct SummaryRow {
    pub condition: String,
    pub variant: String,
    pub n_trials: usize,
    pub delta_cvd_t: f64,
    pub delta_cvd_t_errbar: f64,
    pub delta_pa: f64,
    pub delta_pa_errbar: f64,
    pub pa: f64,
    pub pa_null: f64,
    pub significant: bool,
    pub chance_delta_pa: f64,
}

impl SummaryRow {
    pub(crate) fn new(condition: &str, r: &PredictionReport) -> Self {
        Self {
            condition: condition.into(),
            variant: r.variant.as_str().into(),
            n_trials: r.n_trials,
            delta_cvd_t: r.delta_cvd_t,
            delta_cvd_t_errbar: Z_ONE_SIDED * r.delta_cvd_t_sem,
            delta_pa: r.delta_pa,
            delta_pa_errbar: Z_ONE_SIDED * r.delta_pa_sem,
            pa: r.pa,
            pa_null: r.pa_null,
            significant: r.significant,
            chance_delta_pa: chance_boundary_delta(r.n_trials),
        }
    }
}

#[derive(Serialize)]
struct FoldRow<'a> {
    condition: &'a str,
    variant: &'a str,
    fold: usize,
    n_trials: usize,
    cvd: f64,
    cvd_null: f64,
    pa: f64,
    pa_null: f64,
    delta_cvd_t: f64,
    delta_pa: f64,
}

#[derive(Debug)]
pub struct PredictOutcome {
    pub kind: NoiseKind,
    pub all: PredictionReport,
    pub incorrect: Option<PredictionReport>,
}

/// Auto-prediction of every fitted ACI in the run, on all trials and on
/// incorrect trials only. Writes `predict/summary.csv` and `predict/folds.csv`.
pub fn predict_run(run: &Run, basis: &PyramidBasis) -> Result<Vec<PredictOutcome>> {
    let mut out = Vec::new();
    for kind in run.conditions() {
        let dir = run.aci_dir(kind);
        if !dir.join(ACI_FILES[5]).exists() {
            log::warn!("no fitted {kind} ACI; skipped");
            continue;
        }
        let aci = crate::aci::load_aci(&dir, basis)?;
        let data = run.dataset(kind)?;
        let all = auto_prediction(&aci, basis, &data, Variant::AllTrials)?;
        let incorrect = match auto_prediction(&aci, basis, &data, Variant::IncorrectOnly) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("{kind}: no incorrect-trial report ({e})");
                None
            }
        };
        out.push(PredictOutcome { kind, all, incorrect });
    }
    if out.is_empty() {
        return Err(Error::MissingInput {
            path: run.dir.join("aci"),
            hint: "no fitted ACIs; run `fit` first".into(),
        });
    }
    let dir = run.dir.join("predict");
    let reports: Vec<(&str, &PredictionReport)> = out
        .iter()
        .flat_map(|o| std::iter::once(&o.all).chain(o.incorrect.as_ref()).map(move |r| (o.kind.as_str(), r)))
        .collect();
    write_csv(&dir.join("summary.csv"), reports.iter().map(|(k, r)| SummaryRow::new(k, r)))?;
    write_csv(
        &dir.join("folds.csv"),
        reports.iter().flat_map(|(k, r)| {
            r.folds.iter().map(move |f| FoldRow {
                condition: k,
                variant: r.variant.as_str(),
                fold: f.fold,
                n_trials: f.n_trials,
                cvd: f.cvd,
                cvd_null: f.cvd_null,
                pa: f.pa,
                pa_null: f.pa_null,
                delta_cvd_t: f.delta_cvd_t,
                delta_pa: f.delta_pa,
            })
        }),
    )?;
    write_manifest(&dir, &["summary.csv".into(), "folds.csv".into()])?;
    Ok(out)
}

/// One labelled (ACI, dataset) pair for cross-prediction.
pub struct CrossInput {
    pub key: String,
    pub aci: Aci,
    pub data: FitDataset,
}

fn write_matrix<T: ToString>(path: &Path, keys: &[String], m: &[Vec<T>]) -> Result<()> {
    write_atomic(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["test\\source".to_string()];
        header.extend(keys.iter().cloned());
        wr.write_record(&header)?;
        for (k, row) in keys.iter().zip(m) {
            let mut rec = vec![k.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct CrossRow<'a> {
    test: &'a str,
    source: &'a str,
    delta_pa: f64,
    delta_cvd_t: f64,
    significant: bool,
    masked: bool,
}

/// Cross-prediction matrix over `inputs`, written as one CSV per metric
/// plus a flat table.
pub fn crosspred(inputs: Vec<CrossInput>, basis: &PyramidBasis, variant: Variant, out: &Path) -> Result<CrossPredMatrix> {
    let mut acis = BTreeMap::new();
    let mut data = BTreeMap::new();
    for i in inputs {
        if acis.insert(i.key.clone(), i.aci).is_some() {
            return Err(Error::invalid(format!("duplicate key {}", i.key)));
        }
        data.insert(i.key, i.data);
    }
    let m = cross_prediction(&acis, &data, basis, variant)?;
    let v = variant.as_str();
    let names = [
        format!("crosspred_{v}_delta_pa.csv"),
        format!("crosspred_{v}_delta_cvd_t.csv"),
        format!("crosspred_{v}_significant.csv"),
        format!("crosspred_{v}_masked.csv"),
        format!("crosspred_{v}_cells.csv"),
    ];
    write_matrix(&out.join(&names[0]), &m.keys, &m.delta_pa)?;
    write_matrix(&out.join(&names[1]), &m.keys, &m.delta_cvd_t)?;
    write_matrix(&out.join(&names[2]), &m.keys, &m.significant)?;
    write_matrix(&out.join(&names[3]), &m.keys, &m.masked)?;
    let n = m.keys.len();
    write_csv(
        &out.join(&names[4]),
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| CrossRow {
            test: &m.keys[i],
            source: &m.keys[j],
            delta_pa: m.delta_pa[i][j],
            delta_cvd_t: m.delta_cvd_t[i][j],
            significant: m.significant[i][j],
            masked: m.masked[i][j],
        }),
    )?;
    let mut files: Vec<String> = std::fs::read_dir(out)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|f| f.starts_with("crosspred_") && f.ends_with(".csv"))
        .collect();
    files.sort();
    write_manifest(out, &files)?;
    Ok(m)
}
