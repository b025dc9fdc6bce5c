//! End-to-end runs: configuration, simulated sessions, fits, predictions
//! and figure-data reports, each written to a directory with a checksummed
//! manifest.
//!
//! A run directory produced by [`simulate`] holds:
//!
//! ```text
//! config.toml          resolved configuration
//! trials.csv           one row per trial
//! noise_manifest.csv   (block, trial, kind, seed, spec id) of every noise token
//! targets/*.wav        the two targets
//! manifest.csv         checksums of the above
//! timing.toml          wall-clock durations (not checksummed)
//! ```
//!
//! Later commands add `aci/`, `predict/` and `report/` subdirectories, each
//! with its own `manifest.csv`. Noise waveforms are never stored unless
//! requested; `(spec, seed)` regenerates them exactly.

mod commands;
mod manifest;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aci::{FitConfig, FitDataset};
use crate::error::{Error, Result};
use crate::experiment::{balance_responses, exclude_approach_phase, read_trial_log, SessionConfig, TrialRecord};
use crate::listener::ModelConfig;
use crate::noise::{NoiseKind, NoiseSpec};

pub use commands::{
    crosspred, fit_run, noisegen, predict_run, simulate, validate_noise, CrossInput, FitOutcome, PredictOutcome,
    SimulateOutcome,
};
pub use manifest::{read_manifest, verify_manifest, write_manifest, ManifestEntry, MANIFEST_FILE};
pub use report::{report_run, ReportOutcome};

pub const CONFIG_FILE: &str = "config.toml";
pub const TRIALS_FILE: &str = "trials.csv";
pub const NOISE_MANIFEST_FILE: &str = "noise_manifest.csv";
pub const TIMING_FILE: &str = "timing.toml";

/// Noise specification of every condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpecs {
    pub white: NoiseSpec,
    pub bump: NoiseSpec,
    pub mps: NoiseSpec,
}

impl Default for NoiseSpecs {
    fn default() -> Self {
        Self {
            white: NoiseSpec::white(),
            bump: NoiseSpec::bump(),
            mps: NoiseSpec::mps(),
        }
    }
}

impl NoiseSpecs {
    pub fn get(&self, kind: NoiseKind) -> &NoiseSpec {
        match kind {
            NoiseKind::White => &self.white,
            NoiseKind::Bump => &self.bump,
            NoiseKind::Mps => &self.mps,
        }
    }

    fn validate(&self) -> Result<()> {
        for kind in NoiseKind::ALL {
            if self.get(kind).kind() != kind {
                return Err(Error::Config(format!("[noise.{kind}] holds a {} spec", self.get(kind).kind())));
            }
        }
        Ok(())
    }
}

/// Everything a run depends on. The master `seed` overrides the seeds of the
/// `session` and `fit` sections; every other random stream derives from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Directory with `aba.wav` and `ada.wav`.
    pub targets_dir: Option<PathBuf>,
    /// Use the bundled synthetic targets instead of `targets_dir`.
    pub synthetic_targets: bool,
    pub noise: NoiseSpecs,
    pub session: SessionConfig,
    pub model: ModelConfig,
    pub fit: FitConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            targets_dir: None,
            synthetic_targets: false,
            noise: NoiseSpecs::default(),
            session: SessionConfig::default(),
            model: ModelConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingInput {
            path: path.to_path_buf(),
            hint: "pass an existing configuration file".into(),
        })?;
        Self::from_toml(&text)
    }

    /// Propagate the master seed and check cross-section consistency.
    pub fn resolved(mut self) -> Result<Self> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        self.session.seed = self.seed;
        self.fit.seed = self.seed;
        self.noise.validate()?;
        Ok(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML text.
    pub fn hash(&self) -> Result<String> {
        use sha2::{Digest, Sha256};
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }
}

/// One row of the noise manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseManifestRow {
    pub block_index: usize,
    pub trial_index: usize,
    pub noise_kind: NoiseKind,
    pub noise_seed: u64,
    pub spec_id: String,
}

/// A simulated (or imported) session on disk.
#[derive(Debug, Clone)]
pub struct Run {
    pub dir: PathBuf,
    pub config: PipelineConfig,
    pub records: Vec<TrialRecord>,
}

fn open(path: &Path, hint: &str) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|_| Error::MissingInput {
        path: path.to_path_buf(),
        hint: hint.into(),
    })
}

impl Run {
    /// Load a run and cross-check its trial log against the noise manifest.
    pub fn load(dir: &Path) -> Result<Self> {
        let config = PipelineConfig::load(&dir.join(CONFIG_FILE))?;
        let records = read_trial_log(open(&dir.join(TRIALS_FILE), "run `simulate` first")?)?;
        let noise: Vec<NoiseManifestRow> = csv::Reader::from_reader(open(
            &dir.join(NOISE_MANIFEST_FILE),
            "the noise manifest is missing; rerun `simulate`",
        )?)
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse("noise manifest", format!("row {}: {e}", i + 1))))
        .collect::<Result<_>>()?;
        let index: BTreeMap<(usize, usize), &NoiseManifestRow> =
            noise.iter().map(|r| ((r.block_index, r.trial_index), r)).collect();
        let mut bad = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let ok = index.get(&(r.block_index, r.trial_index)).is_some_and(|m| {
                m.noise_kind == r.noise_kind
                    && m.noise_seed == r.noise_seed
                    && m.spec_id == config.noise.get(r.noise_kind).id()
            });
            if !ok {
                bad.push(i + 1);
            }
        }
        if !bad.is_empty() {
            let shown: Vec<String> = bad.iter().take(20).map(|r| r.to_string()).collect();
            return Err(Error::parse(
                "noise manifest",
                format!(
                    "{} trial rows lack a matching noise seed or spec: {}{}",
                    bad.len(),
                    shown.join(", "),
                    if bad.len() > 20 { ", ..." } else { "" }
                ),
            ));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            records,
        })
    }

    /// Conditions present in the trial log, in canonical order.
    pub fn conditions(&self) -> Vec<NoiseKind> {
        NoiseKind::ALL
            .into_iter()
            .filter(|k| self.records.iter().any(|r| r.noise_kind == *k))
            .collect()
    }

    /// Trials of one condition kept for analysis: approach phases removed
    /// block by block, then responses balanced.
    pub fn fit_records(&self, kind: NoiseKind) -> Vec<TrialRecord> {
        balance_responses(&self.measured_records(kind))
    }

    /// Measuring-phase trials of one condition, before balancing.
    pub fn measured_records(&self, kind: NoiseKind) -> Vec<TrialRecord> {
        let mut blocks: BTreeMap<usize, Vec<TrialRecord>> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.noise_kind == kind) {
            blocks.entry(r.block_index).or_default().push(r.clone());
        }
        blocks.values().flat_map(|b| exclude_approach_phase(b)).collect()
    }

    /// Noise-alone predictors of [`Run::fit_records`].
    pub fn dataset(&self, kind: NoiseKind) -> Result<FitDataset> {
        let recs = self.fit_records(kind);
        FitDataset::from_records(&recs, |k| self.config.noise.get(k).clone())
    }

    pub fn aci_dir(&self, kind: NoiseKind) -> PathBuf {
        self.dir.join("aci").join(kind.as_str())
    }
}

/// Size the global worker pool; `None` keeps the default (one per core).
pub fn init_workers(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PipelineConfig {
            seed: 7,
            synthetic_targets: true,
            ..PipelineConfig::default()
        }
        .resolved()
        .unwrap();
        let text = cfg.to_toml().unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(cfg.session.seed, 7);
        assert_eq!(cfg.fit.seed, 7);
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = PipelineConfig::from_toml("seed = 3\n[session]\nn_blocks = 3\ntrials_per_block = 100\n").unwrap();
        assert_eq!(cfg.session.n_blocks, 3);
        assert_eq!(cfg.session.seed, 3);
        assert_eq!(cfg.fit.folds, 10);
        assert_eq!(cfg.noise, NoiseSpecs::default());
    }

    #[test]
    fn unknown_keys_and_swapped_specs_are_rejected() {
        assert!(PipelineConfig::from_toml("sed = 3\n").is_err());
        let mut cfg = PipelineConfig::default();
        cfg.noise.white = NoiseSpec::bump();
        assert!(cfg.resolved().is_err());
    }
}
