//! L1-penalized logistic regression on the pyramid design.
//!
//! Minimizes `(1/W) sum_i w_i nll_i + lambda * |beta|_1` with an unpenalized
//! intercept, where `w_i` in {0, 1} masks trials (cross-validation folds use
//! the mask instead of copying the design). Solved with accelerated proximal
//! gradient (backtracking, function-value restart) on a strong-rule working
//! set, with a full KKT check before a solution is accepted.

use rayon::prelude::*;

use super::basis::PyramidBasis;

/// Column-major design with standardized columns.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    p: usize,
    z: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Design {
    /// Standardize raw column-major predictors (`n` rows, `p` columns) to zero
    /// mean and unit population variance. Constant columns become zero.
    pub fn from_columns(mut z: Vec<f64>, n: usize, p: usize) -> Self {
        assert_eq!(z.len(), n * p, "design size");
        let mut mean = vec![0.0; p];
        let mut scale = vec![1.0; p];
        for j in 0..p {
            let col = &mut z[j * n..(j + 1) * n];
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            mean[j] = m;
            if sd > 1e-12 * m.abs().max(f64::MIN_POSITIVE) && sd > 0.0 {
                scale[j] = sd;
                col.iter_mut().for_each(|v| *v = (*v - m) / sd);
            } else {
                col.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        Self { n, p, z, mean, scale }
    }

    /// Project row-major T-F predictors (`n` x 5504) onto the basis.
    pub fn from_tf_rows(x: &[f64], n: usize, basis: &PyramidBasis) -> Self {
        let d = basis.n_rows();
        assert_eq!(x.len(), n * d, "predictor size");
        let p = basis.n_columns();
        let rows: Vec<Vec<f64>> = x.par_chunks(d).map(|r| basis.project(r)).collect();
        let mut z = vec![0.0; n * p];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                z[j * n + i] = *v;
            }
        }
        Self::from_columns(z, n, p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.z[j * self.n..(j + 1) * self.n]
    }

    /// Map standardized coefficients back to raw predictor units.
    pub fn to_raw(&self, beta: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let shift: f64 = raw.iter().zip(&self.mean).map(|(b, m)| b * m).sum();
        (raw, intercept - shift)
    }

    /// Linear predictor `c + Z beta` using only the nonzero coefficients.
    pub fn linear_predictor(&self, beta: &[f64], intercept: f64) -> Vec<f64> {
        let mut eta = vec![intercept; self.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.column(j), &mut eta);
            }
        }
        eta
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln(1 + e^x)` without overflow.
pub fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean negative log-likelihood over masked trials for linear predictor `eta`.
pub fn mean_nll(eta: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let wsum: f64 = w.iter().sum();
    eta.iter()
        .zip(y)
        .zip(w)
        .filter(|(_, &wi)| wi != 0.0)
        .map(|((&e, &yi), &wi)| wi * (log1pexp(e) - yi * e))
        .sum::<f64>()
        / wsum
}

/// Scaled residuals `w_i (p_i - y_i) / W`; the gradient is `Z^T r`.
fn residuals(eta: &[f64], y: &[f64], w: &[f64], wsum: f64) -> Vec<f64> {
    eta.iter()
        .zip(y)
        .zip(w)
        .map(|((&e, &yi), &wi)| wi * (sigmoid(e) - yi) / wsum)
        .collect()
}

/// Mean NLL and its gradient with respect to `(beta, intercept)` for a plain
/// row-major design `x` (`n` x `p`). Used for gradient checks.
pub fn nll_and_gradient(x: &[f64], n: usize, y: &[f64], beta: &[f64], intercept: f64) -> (f64, Vec<f64>, f64) {
    let p = beta.len();
    let w = vec![1.0; n];
    let eta: Vec<f64> = (0..n).map(|i| intercept + dot(&x[i * p..(i + 1) * p], beta)).collect();
    let r = residuals(&eta, y, &w, n as f64);
    let mut g = vec![0.0; p];
    for i in 0..n {
        axpy(r[i], &x[i * p..(i + 1) * p], &mut g);
    }
    (mean_nll(&eta, y, &w), g, r.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the relative change of the objective falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

/// 20 values log-spaced over [1.1e-3, 0.1], ascending.
pub fn default_lambdas() -> Vec<f64> {
    log_spaced(1.1e-3, 0.1, 20)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Solution at one lambda, in standardized units.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Mean NLL over the fitted (masked-in) trials.
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PathEntry {
    pub fn n_nonzero(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    pub fn objective(&self) -> f64 {
        self.loss + self.lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFit {
    /// Entries in the order of the requested lambdas.
    pub entries: Vec<PathEntry>,
    /// Smallest lambda giving an all-zero solution.
    pub lambda_max: f64,
    /// All masked-in responses were identical; every entry is intercept-only.
    pub degenerate: bool,
}

struct Problem<'a> {
    d: &'a Design,
    y: &'a [f64],
    w: &'a [f64],
    wsum: f64,
}

impl Problem<'_> {
    fn eta(&self, set: &[usize], coef: &[f64], c: f64) -> Vec<f64> {
        let mut eta = vec![c; self.d.n];
        for (&j, &b) in set.iter().zip(coef) {
            if b != 0.0 {
                axpy(b, self.d.column(j), &mut eta);
            }
        }
        eta
    }

    fn full_gradient(&self, eta: &[f64]) -> Vec<f64> {
        let r = residuals(eta, self.y, self.w, self.wsum);
        (0..self.d.p).into_par_iter().map(|j| dot(self.d.column(j), &r)).collect()
    }

    /// FISTA on the working set; returns (iterations, converged, loss).
    fn solve(&self, set: &[usize], beta: &mut [f64], c: &mut f64, lambda: f64, opts: SolverOptions, lip: &mut f64) -> (usize, bool, f64) {
        let soft = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
        let mut x: Vec<f64> = set.iter().map(|&j| beta[j]).collect();
        let mut xc = *c;
        let mut eta_x = self.eta(set, &x, xc);
        let mut f_x = mean_nll(&eta_x, self.y, self.w);
        let l1 = |v: &[f64]| v.iter().map(|b| b.abs()).sum::<f64>();
        let mut obj = f_x + lambda * l1(&x);
        let (mut yv, mut yc, mut eta_y) = (x.clone(), xc, eta_x.clone());
        let mut t: f64 = 1.0;
        let mut converged = false;
        let mut it = 0;
        while it < opts.max_iter {
            it += 1;
            let f_y = mean_nll(&eta_y, self.y, self.w);
            let r = residuals(&eta_y, self.y, self.w, self.wsum);
            let g: Vec<f64> = set.iter().map(|&j| dot(self.d.column(j), &r)).collect();
            let gc: f64 = r.iter().sum();
            let (xn, xcn, eta_n, f_n) = loop {
                let xn: Vec<f64> = yv.iter().zip(&g).map(|(v, gj)| soft(v - gj / *lip, lambda / *lip)).collect();
                let xcn = yc - gc / *lip;
                let eta_n = self.eta(set, &xn, xcn);
                let f_n = mean_nll(&eta_n, self.y, self.w);
                let diff: Vec<f64> = xn.iter().zip(&yv).map(|(a, b)| a - b).collect();
                let dc = xcn - yc;
                let quad = f_y + dot(&g, &diff) + gc * dc + 0.5 * *lip * (dot(&diff, &diff) + dc * dc);
                if f_n <= quad + 1e-12 * f_y.abs() {
                    break (xn, xcn, eta_n, f_n);
                }
                *lip *= 2.0;
            };
            let obj_n = f_n + lambda * l1(&xn);
            let restart = obj_n > obj;
            let rel = (obj - obj_n).abs() / obj_n.abs().max(1e-300);
            let t_n = if restart { 1.0 } else { (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0 };
            let mom = if restart { 0.0 } else { (t - 1.0) / t_n };
            yv = xn.iter().zip(&x).map(|(a, b)| a + mom * (a - b)).collect();
            yc = xcn + mom * (xcn - xc);
            eta_y = eta_n.iter().zip(&eta_x).map(|(a, b)| a + mom * (a - b)).collect();
            x = xn;
            xc = xcn;
            eta_x = eta_n;
            f_x = f_n;
            obj = obj_n;
            t = t_n;
            *lip *= 0.9;
            if !restart && rel < opts.tol {
                converged = true;
                break;
            }
        }
        for (&j, &b) in set.iter().zip(&x) {
            beta[j] = b;
        }
        *c = xc;
        (it, converged, f_x)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Fit the lasso path on the masked-in trials. `lambdas` may be in any
/// order; fitting proceeds from the largest with warm starts.
pub fn fit_path(d: &Design, y: &[f64], w: &[f64], lambdas: &[f64], opts: SolverOptions) -> PathFit {
    assert_eq!(y.len(), d.n, "response length");
    assert_eq!(w.len(), d.n, "mask length");
    let wsum: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let pr = Problem { d, y, w, wsum };
    let zero = vec![0.0; d.p];
    if ybar <= 0.0 || ybar >= 1.0 {
        log::warn!("all fitted responses are identical; returning intercept-only fits");
        let half = 0.5 / wsum;
        let c = logit(ybar.clamp(half, 1.0 - half));
        let loss = mean_nll(&vec![c; d.n], y, w);
        let entries = lambdas
            .iter()
            .map(|&lambda| PathEntry {
                lambda,
                beta: zero.clone(),
                intercept: c,
                loss,
                iterations: 0,
                converged: true,
            })
            .collect();
        return PathFit {
            entries,
            lambda_max: 0.0,
            degenerate: true,
        };
    }
    let c0 = logit(ybar);
    let eta0 = vec![c0; d.n];
    let loss0 = mean_nll(&eta0, y, w);
    let mut grad = pr.full_gradient(&eta0);
    let lambda_max = grad.iter().fold(0.0, |m: f64, g| m.max(g.abs()));

    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut entries: Vec<Option<PathEntry>> = vec![None; lambdas.len()];
    let mut beta = zero.clone();
    let mut c = c0;
    let mut lambda_prev = lambda_max;
    let mut lip = 0.25;
    for k in order {
        let lambda = lambdas[k];
        if lambda >= lambda_max {
            entries[k] = Some(PathEntry {
                lambda,
                beta: zero.clone(),
                intercept: c0,
                loss: loss0,
                iterations: 0,
                converged: true,
            });
            continue;
        }
        let cut = 2.0 * lambda - lambda_prev;
        let mut set: Vec<usize> = (0..d.p).filter(|&j| beta[j] != 0.0 || grad[j].abs() >= cut).collect();
        let mut iterations = 0;
        let (converged, loss) = loop {
            let (it, conv, loss) = pr.solve(&set, &mut beta, &mut c, lambda, opts, &mut lip);
            iterations += it;
            let coef: Vec<f64> = set.iter().map(|&j| beta[j]).collect();
            grad = pr.full_gradient(&pr.eta(&set, &coef, c));
            let mut in_set = vec![false; d.p];
            set.iter().for_each(|&j| in_set[j] = true);
            let violators: Vec<usize> = (0..d.p).filter(|&j| !in_set[j] && grad[j].abs() > lambda).collect();
            if violators.is_empty() || iterations >= opts.max_iter {
                break (conv && violators.is_empty(), loss);
            }
            set.extend(violators);
            set.sort_unstable();
        };
        if !converged {
            log::warn!("lasso fit did not converge at lambda = {lambda:.3e}");
        }
        entries[k] = Some(PathEntry {
            lambda,
            beta: beta.clone(),
            intercept: c,
            loss,
            iterations,
            converged,
        });
        lambda_prev = lambda;
    }
    PathFit {
        entries: entries.into_iter().map(|e| e.expect("every lambda fitted")).collect(),
        lambda_max,
        degenerate: false,
    }
}
