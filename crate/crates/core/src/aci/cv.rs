use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::glm::{fit_path, log1pexp, Design, PathFit, SolverOptions};
use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Uniform random fold labels in `0..k`, as balanced as `n` allows.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("cannot split {n} trials into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed::derive(seed, stream::FOLDS, 0)));
    let mut folds = vec![0; n];
    for (pos, &i) in idx.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(folds)
}

/// Mean deviance per trial (`-2 log L / n`) over trials with `w_i = 1`.
pub fn deviance_per_trial(eta: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let n: f64 = w.iter().sum();
    2.0 * eta
        .iter()
        .zip(y)
        .zip(w)
        .filter(|(_, &wi)| wi != 0.0)
        .map(|((&e, &yi), _)| log1pexp(e) - yi * e)
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldFit {
    pub path: PathFit,
    /// Held-out deviance per trial at each lambda.
    pub test_deviance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub folds: Vec<usize>,
    pub fold_fits: Vec<FoldFit>,
    pub mean_deviance: Vec<f64>,
    pub sem_deviance: Vec<f64>,
    pub best: usize,
    /// Path on all trials.
    pub full: PathFit,
}

impl CvResult {
    pub fn lambda_star(&self) -> f64 {
        self.lambdas[self.best]
    }

    /// The minimum sits strictly inside the lambda grid.
    pub fn interior_minimum(&self) -> bool {
        self.best > 0 && self.best + 1 < self.lambdas.len()
    }
}

/// k-fold cross-validation over `lambdas`. The selected lambda minimizes the
/// mean held-out deviance; exact ties go to the larger lambda.
pub fn cross_validate(d: &Design, y: &[f64], lambdas: &[f64], k: usize, seed: u64, opts: SolverOptions) -> Result<CvResult> {
    let n = d.n();
    let folds = fold_assignment(n, k, seed)?;
    let fold_fits: Vec<FoldFit> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<f64> = folds.iter().map(|&g| f64::from(g != f)).collect();
            let test: Vec<f64> = train.iter().map(|t| 1.0 - t).collect();
            let path = fit_path(d, y, &train, lambdas, opts);
            let test_deviance = path
                .entries
                .iter()
                .map(|e| deviance_per_trial(&d.linear_predictor(&e.beta, e.intercept), y, &test))
                .collect();
            FoldFit { path, test_deviance }
        })
        .collect();
    let nl = lambdas.len();
    let mut mean_deviance = vec![0.0; nl];
    let mut sem_deviance = vec![0.0; nl];
    for l in 0..nl {
        let v: Vec<f64> = fold_fits.iter().map(|f| f.test_deviance[l]).collect();
        mean_deviance[l] = crate::stats::mean(&v);
        sem_deviance[l] = crate::stats::sem(&v);
    }
    let mut best = 0;
    for l in 1..nl {
        let (a, b) = (mean_deviance[l], mean_deviance[best]);
        if a < b || (a == b && lambdas[l] > lambdas[best]) {
            best = l;
        }
    }
    let full = fit_path(d, y, &vec![1.0; n], lambdas, opts);
    Ok(CvResult {
        lambdas: lambdas.to_vec(),
        folds,
        fold_fits,
        mean_deviance,
        sem_deviance,
        best,
        full,
    })
}
