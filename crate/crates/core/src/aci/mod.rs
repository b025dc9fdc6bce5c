//! Auditory classification images: a sparse logistic GLM relating noise-alone
//! T-F representations to trial-by-trial responses.
//!
//! The ACI is parameterized in a Gaussian-pyramid basis (`weights = B beta`)
//! and fitted with an L1 penalty whose strength is picked by k-fold
//! cross-validation of the held-out deviance. Responses are coded "aba" = 1,
//! "ada" = 0, so `P(aba) = sigmoid(x . weights + c)`.

pub mod basis;
pub mod cv;
pub mod glm;
mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::TrialRecord;
use crate::noise::{generate, NoiseKind, NoiseSpec};
use crate::targets::TargetId;
use crate::tfrep::{TfAnalyzer, N_BINS};

pub use basis::{ColumnInfo, PyramidBasis};
pub use cv::{cross_validate, deviance_per_trial, fold_assignment, CvResult};
pub use glm::{default_lambdas, fit_path, sigmoid, Design, PathFit, SolverOptions};
pub use io::{load_aci, save_aci, ACI_FILES};

/// Minimum number of trials accepted by [`fit_aci`].
pub const MIN_TRIALS: usize = 100;

/// Noise-alone predictors and the responses they drew.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDataset {
    /// Row-major `n x 5504` vectorized T-F matrices.
    pub x: Vec<f64>,
    pub response: Vec<TargetId>,
    pub target: Vec<TargetId>,
}

impl FitDataset {
    pub fn new(x: Vec<f64>, response: Vec<TargetId>, target: Vec<TargetId>) -> Result<Self> {
        let n = response.len();
        if target.len() != n || x.len() != n * N_BINS {
            return Err(Error::invalid(format!(
                "dataset shapes disagree: {} responses, {} targets, {} predictor values",
                n,
                target.len(),
                x.len()
            )));
        }
        Ok(Self { x, response, target })
    }

    /// Regenerate every trial's noise token from its seed and analyze it.
    pub fn from_records(records: &[TrialRecord], spec_for: impl Fn(NoiseKind) -> NoiseSpec + Sync) -> Result<Self> {
        let analyzer = TfAnalyzer::new();
        let rows: Result<Vec<Vec<f64>>> = records
            .par_iter()
            .map(|r| {
                let token = generate(&spec_for(r.noise_kind), r.noise_seed)?;
                Ok(analyzer.analyze(&token.waveform)?.into_vec())
            })
            .collect();
        Self::new(
            rows?.concat(),
            records.iter().map(|r| r.response).collect(),
            records.iter().map(|r| r.target_id).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * N_BINS..(i + 1) * N_BINS]
    }

    /// Response codes, "aba" = 1.
    pub fn y(&self) -> Vec<f64> {
        self.response.iter().map(|r| r.code()).collect()
    }

    pub fn correct(&self, i: usize) -> bool {
        self.response[i] == self.target[i]
    }

    /// Trials `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            response: idx.iter().map(|&i| self.response[i]).collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            folds: 10,
            seed: 1,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl FitConfig {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// The model of one cross-validation fold at the selected lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub fold: usize,
    /// Pyramid coefficients in raw predictor units.
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Intercept-only model on the same training trials.
    pub null_intercept: f64,
}

/// One point of the regularization path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub cv_deviance: f64,
    pub cv_sem: f64,
    /// Deviance per trial of the all-trial fit on its own data.
    pub train_deviance: f64,
    pub n_nonzero: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aci {
    /// `B * beta`, vectorized 86 x 64 (time fastest).
    pub weights: Vec<f64>,
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub is_null: bool,
    pub n_trials: usize,
    pub n_folds: usize,
    pub fold_seed: u64,
    pub basis_hash: String,
    pub path: Vec<PathPoint>,
    pub folds: Vec<FoldModel>,
}

impl Aci {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        linear(&self.weights, self.intercept, x)
    }

    /// Probability of an "aba" response for a vectorized noise matrix.
    pub fn predict_prob(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    /// Fold label of each training trial, regenerated from the stored seed.
    pub fn fold_labels(&self) -> Result<Vec<usize>> {
        fold_assignment(self.n_trials, self.n_folds, self.fold_seed)
    }

    /// T-F weights of every fold model.
    pub fn fold_weights(&self, basis: &PyramidBasis) -> Vec<Vec<f64>> {
        self.folds.iter().map(|f| basis.apply(&f.beta)).collect()
    }

    pub fn n_nonzero(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

pub fn linear(weights: &[f64], intercept: f64, x: &[f64]) -> f64 {
    intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
}

fn null_intercept(y: &[f64], train: impl Iterator<Item = bool>) -> f64 {
    let (mut s, mut n) = (0.0, 0.0);
    for (yi, t) in y.iter().zip(train) {
        if t {
            s += yi;
            n += 1.0;
        }
    }
    let half = 0.5 / n;
    let p = (s / n).clamp(half, 1.0 - half);
    (p / (1.0 - p)).ln()
}

/// Cross-validated lasso fit of an ACI.
pub fn fit_aci(data: &FitDataset, basis: &PyramidBasis, cfg: &FitConfig) -> Result<Aci> {
    let n = data.n();
    if n < MIN_TRIALS {
        return Err(Error::invalid(format!("an ACI fit needs at least {MIN_TRIALS} trials, got {n}")));
    }
    if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::invalid("lambdas must be positive"));
    }
    let y = data.y();
    let design = Design::from_tf_rows(&data.x, n, basis);
    fit_design(&design, &y, basis, cfg)
}

/// As [`fit_aci`] for an already projected design.
pub fn fit_design(design: &Design, y: &[f64], basis: &PyramidBasis, cfg: &FitConfig) -> Result<Aci> {
    let cv = cross_validate(design, y, &cfg.lambdas, cfg.folds, cfg.seed, cfg.solver())?;
    let best = cv.best;
    let chosen = &cv.full.entries[best];
    let (beta, intercept) = design.to_raw(&chosen.beta, chosen.intercept);
    let is_null = beta.iter().all(|b| *b == 0.0);
    if is_null && !cv.interior_minimum() {
        log::info!("deviance has no interior minimum; the ACI is null");
    }
    let folds = cv
        .fold_fits
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let e = &f.path.entries[best];
            let (beta, intercept) = design.to_raw(&e.beta, e.intercept);
            FoldModel {
                fold: k,
                beta,
                intercept,
                null_intercept: null_intercept(y, cv.folds.iter().map(|&g| g != k)),
            }
        })
        .collect();
    let all = vec![1.0; design.n()];
    let path = (0..cv.lambdas.len())
        .map(|l| {
            let e = &cv.full.entries[l];
            PathPoint {
                lambda: cv.lambdas[l],
                cv_deviance: cv.mean_deviance[l],
                cv_sem: cv.sem_deviance[l],
                train_deviance: deviance_per_trial(&design.linear_predictor(&e.beta, e.intercept), y, &all),
                n_nonzero: e.n_nonzero(),
                converged: e.converged && cv.fold_fits.iter().all(|f| f.path.entries[l].converged),
            }
        })
        .collect();
    Ok(Aci {
        weights: basis.apply(&beta),
        beta,
        intercept,
        lambda: cv.lambda_star(),
        is_null,
        n_trials: design.n(),
        n_folds: cfg.folds,
        fold_seed: cfg.seed,
        basis_hash: basis.hash(),
        path,
        folds,
    })
}
