//! Out-of-sample evaluation of fitted ACIs.
//!
//! Every trial of a dataset is predicted by the fold model that did not see
//! it. Two benefit metrics compare that model with the intercept-only model
//! of the same fold:
//!
//! - deviance per trial: `dCVD_t = CVD_t(model) - CVD_t(null)`, averaged
//!   over folds and called significant when `mean + 1.64 SEM < 0`;
//! - percent correct prediction, rescaled to the headroom above the null:
//!   `dPA = (PA - PA_null) / (100 - PA_null) * 100`, pooled over all
//!   held-out trials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aci::{cv::deviance_per_trial, linear, Aci, FitDataset, PyramidBasis};
use crate::error::{Error, Result};

/// One-sided 95 % normal quantile.
pub const Z_ONE_SIDED: f64 = 1.64;
const Z_BINOMIAL: f64 = 1.645;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    AllTrials,
    IncorrectOnly,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::AllTrials => "all_trials",
            Variant::IncorrectOnly => "incorrect_only",
        }
    }
}

/// What a prediction is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaReference {
    /// The listener's actual response (the GLM models responses).
    #[default]
    Response,
    /// The presented target.
    Target,
}

/// Mean `-2 log L` per trial; `eta` are linear predictors of "aba".
pub fn cvd_per_trial(eta: &[f64], y: &[f64]) -> Result<f64> {
    if eta.is_empty() {
        return Err(Error::Empty("test set"));
    }
    Ok(deviance_per_trial(eta, y, &vec![1.0; eta.len()]))
}

/// Percent of trials where "P >= 0.5" coincides with an "aba" reference
/// (code 1) and "P < 0.5" with "ada".
pub fn prediction_accuracy(eta: &[f64], reference: &[f64]) -> f64 {
    let hits = eta
        .iter()
        .zip(reference)
        .filter(|(&e, &r)| (e >= 0.0) == (r == 1.0))
        .count();
    100.0 * hits as f64 / eta.len() as f64
}

/// Accuracy gain relative to the headroom left by the null model.
pub fn delta_pa(pa: f64, pa_null: f64) -> f64 {
    if pa_null >= 100.0 {
        return 0.0;
    }
    (pa - pa_null) / (100.0 - pa_null) * 100.0
}

/// `mean + 1.64 SEM < 0` over fold-wise benefits.
pub fn significance(per_fold: &[f64]) -> Result<bool> {
    if per_fold.len() < 2 {
        return Err(Error::invalid("significance needs at least two folds"));
    }
    let m = crate::stats::mean(per_fold);
    Ok(m + Z_ONE_SIDED * crate::stats::sem(per_fold) < 0.0)
}

/// Smallest PA (percent) exceeding chance at one-sided alpha = 0.05 for
/// `n` binary predictions, by the normal approximation to Binomial(n, 1/2).
pub fn chance_boundary(n: usize) -> f64 {
    50.0 + 100.0 * Z_BINOMIAL * (0.25 / n.max(1) as f64).sqrt()
}

/// The same boundary expressed as a dPA against a 50 % null.
pub fn chance_boundary_delta(n: usize) -> f64 {
    2.0 * (chance_boundary(n) - 50.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_trials: usize,
    pub cvd: f64,
    pub cvd_null: f64,
    pub pa: f64,
    pub pa_null: f64,
    pub delta_cvd_t: f64,
    pub delta_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub variant: Variant,
    pub n_trials: usize,
    /// Mean over folds.
    pub delta_cvd_t: f64,
    pub delta_cvd_t_sem: f64,
    /// Pooled over all held-out trials.
    pub delta_pa: f64,
    pub delta_pa_sem: f64,
    pub pa: f64,
    pub pa_null: f64,
    pub significant: bool,
    pub folds: Vec<FoldMetrics>,
}

/// A linear model per fold plus the null intercept fitted on that fold's
/// training trials of the test dataset.
pub struct FoldModels {
    pub models: Vec<(Vec<f64>, f64)>,
    pub null_intercepts: Vec<f64>,
}

impl FoldModels {
    pub fn of(aci: &Aci, basis: &PyramidBasis) -> Self {
        Self {
            models: aci
                .fold_weights(basis)
                .into_iter()
                .zip(&aci.folds)
                .map(|(w, f)| (w, f.intercept))
                .collect(),
            null_intercepts: aci.folds.iter().map(|f| f.null_intercept).collect(),
        }
    }
}

/// Evaluate `source` models on `data`, whose fold labels are `labels` and
/// whose per-fold null intercepts are in `null`.
pub fn evaluate(
    source: &[(Vec<f64>, f64)],
    null: &[f64],
    data: &FitDataset,
    labels: &[usize],
    variant: Variant,
    reference: PaReference,
) -> Result<PredictionReport> {
    if labels.len() != data.n() {
        return Err(Error::invalid(format!(
            "fold labels cover {} trials, dataset has {}",
            labels.len(),
            data.n()
        )));
    }
    let k = source.len();
    if null.len() != k {
        return Err(Error::invalid("fold counts of model and null disagree"));
    }
    let y = data.y();
    let refs: Vec<f64> = match reference {
        PaReference::Response => y.clone(),
        PaReference::Target => data.target.iter().map(|t| t.code()).collect(),
    };
    let mut folds = Vec::new();
    let (mut pooled_hits, mut pooled_null_hits, mut pooled_n) = (0.0, 0.0, 0usize);
    for f in 0..k {
        let idx: Vec<usize> = (0..data.n())
            .filter(|&i| labels[i] == f && (variant == Variant::AllTrials || !data.correct(i)))
            .collect();
        if idx.is_empty() {
            log::warn!("fold {f} has no {} trials; skipped", variant.as_str());
            continue;
        }
        let (w, c) = &source[f];
        let eta: Vec<f64> = idx.iter().map(|&i| linear(w, *c, data.row(i))).collect();
        let eta_null = vec![null[f]; idx.len()];
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let rs: Vec<f64> = idx.iter().map(|&i| refs[i]).collect();
        let cvd = cvd_per_trial(&eta, &ys)?;
        let cvd_null = cvd_per_trial(&eta_null, &ys)?;
        let pa = prediction_accuracy(&eta, &rs);
        let pa_null = prediction_accuracy(&eta_null, &rs);
        pooled_hits += pa * idx.len() as f64 / 100.0;
        pooled_null_hits += pa_null * idx.len() as f64 / 100.0;
        pooled_n += idx.len();
        folds.push(FoldMetrics {
            fold: f,
            n_trials: idx.len(),
            cvd,
            cvd_null,
            pa,
            pa_null,
            delta_cvd_t: cvd - cvd_null,
            delta_pa: delta_pa(pa, pa_null),
        });
    }
    if folds.is_empty() {
        return Err(Error::Empty("no trials left to evaluate"));
    }
    let dcvd: Vec<f64> = folds.iter().map(|f| f.delta_cvd_t).collect();
    let dpa: Vec<f64> = folds.iter().map(|f| f.delta_pa).collect();
    let pa = 100.0 * pooled_hits / pooled_n as f64;
    let pa_null = 100.0 * pooled_null_hits / pooled_n as f64;
    Ok(PredictionReport {
        variant,
        n_trials: pooled_n,
        delta_cvd_t: crate::stats::mean(&dcvd),
        delta_cvd_t_sem: crate::stats::sem(&dcvd),
        delta_pa: delta_pa(pa, pa_null),
        delta_pa_sem: crate::stats::sem(&dpa),
        pa,
        pa_null,
        significant: significance(&dcvd)?,
        folds,
    })
}

/// Each fold model of `aci` predicts its own held-out trials.
pub fn auto_prediction(aci: &Aci, basis: &PyramidBasis, data: &FitDataset, variant: Variant) -> Result<PredictionReport> {
    if data.n() != aci.n_trials {
        return Err(Error::invalid(format!(
            "ACI was fitted on {} trials, dataset has {}",
            aci.n_trials,
            data.n()
        )));
    }
    let fm = FoldModels::of(aci, basis);
    evaluate(&fm.models, &fm.null_intercepts, data, &aci.fold_labels()?, variant, PaReference::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPredMatrix {
    pub keys: Vec<String>,
    /// `[test dataset][source ACI]`.
    pub delta_pa: Vec<Vec<f64>>,
    pub delta_cvd_t: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    /// Source ACI failed its own auto-prediction significance test.
    pub masked: Vec<Vec<bool>>,
}

/// Cell `(i, j)`: fold `f` model of ACI `j` predicts fold `f` held-out
/// trials of dataset `i`, against dataset `i`'s own null. The diagonal is
/// the auto-prediction.
pub fn cross_prediction(
    acis: &BTreeMap<String, Aci>,
    datasets: &BTreeMap<String, FitDataset>,
    basis: &PyramidBasis,
    variant: Variant,
) -> Result<CrossPredMatrix> {
    if acis.len() != datasets.len() || acis.keys().zip(datasets.keys()).any(|(a, b)| a != b) {
        return Err(Error::invalid("ACI and dataset keys differ"));
    }
    let keys: Vec<String> = acis.keys().cloned().collect();
    let models: Vec<FoldModels> = acis.values().map(|a| FoldModels::of(a, basis)).collect();
    let n_folds = models.iter().map(|m| m.models.len()).collect::<Vec<_>>();
    if n_folds.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::invalid("cross-prediction needs equal fold counts"));
    }
    let m = keys.len();
    let mut out = CrossPredMatrix {
        keys: keys.clone(),
        delta_pa: vec![vec![0.0; m]; m],
        delta_cvd_t: vec![vec![0.0; m]; m],
        significant: vec![vec![false; m]; m],
        masked: vec![vec![false; m]; m],
    };
    let mut auto_sig = vec![false; m];
    let mut reports = vec![vec![None; m]; m];
    for (i, ki) in keys.iter().enumerate() {
        let data = &datasets[ki];
        let aci_i = &acis[ki];
        if data.n() != aci_i.n_trials {
            return Err(Error::invalid(format!("dataset {ki} does not match its ACI")));
        }
        let labels = aci_i.fold_labels()?;
        for j in 0..m {
            let r = evaluate(&models[j].models, &models[i].null_intercepts, data, &labels, variant, PaReference::default())?;
            if i == j {
                auto_sig[i] = r.significant;
            }
            reports[i][j] = Some(r);
        }
    }
    for i in 0..m {
        for j in 0..m {
            let r = reports[i][j].as_ref().expect("every cell evaluated");
            out.delta_pa[i][j] = r.delta_pa;
            out.delta_cvd_t[i][j] = r.delta_cvd_t;
            out.significant[i][j] = r.significant;
            out.masked[i][j] = !auto_sig[j];
        }
    }
    Ok(out)
}
