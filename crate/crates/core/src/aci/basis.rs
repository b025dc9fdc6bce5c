//! Gaussian-pyramid basis over the 86 x 64 time-frequency grid.
//!
//! Level `l` (1..=4) places separable 2-D Gaussians of width `l` bins every
//! `l` bins, starting at bin 0. Gaussians are truncated at the grid edges and
//! each column is scaled to unit norm. Because every element is an outer
//! product, `B * beta` and `B^T * x` are evaluated level by level as small
//! matrix products instead of through the dense 5504 x 7870 matrix.

use sha2::{Digest, Sha256};

use crate::tfrep::{N_BANDS, N_BINS, N_FRAMES};

pub const N_LEVELS: usize = 4;

/// Where a basis column sits in the pyramid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnInfo {
    pub level: usize,
    pub centre_frame: usize,
    pub centre_band: usize,
    pub sigma: f64,
}

/// Unit-norm truncated Gaussians along one axis, `len x n_centres`,
/// column-major.
#[derive(Debug, Clone)]
struct AxisFactor {
    len: usize,
    centres: Vec<usize>,
    values: Vec<f64>,
}

impl AxisFactor {
    fn new(len: usize, sigma: f64, spacing: usize) -> Self {
        let centres: Vec<usize> = (0..len).step_by(spacing).collect();
        let mut values = Vec::with_capacity(len * centres.len());
        for &c in &centres {
            let col: Vec<f64> = (0..len)
                .map(|i| (-((i as f64 - c as f64).powi(2)) / (2.0 * sigma * sigma)).exp())
                .collect();
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            values.extend(col.iter().map(|v| v / norm));
        }
        Self { len, centres, values }
    }

    fn n(&self) -> usize {
        self.centres.len()
    }

    fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i + self.len * k]
    }
}

#[derive(Debug, Clone)]
struct Level {
    time: AxisFactor,
    band: AxisFactor,
    offset: usize,
}

impl Level {
    fn n_columns(&self) -> usize {
        self.time.n() * self.band.n()
    }
}

/// The full pyramid. Column order: level, then band centre, then time
/// centre (time fastest), matching the T-F vectorization.
#[derive(Debug, Clone)]
pub struct PyramidBasis {
    levels: Vec<Level>,
    n_columns: usize,
}

impl Default for PyramidBasis {
    fn default() -> Self {
        Self::new()
    }
}

impl PyramidBasis {
    pub fn new() -> Self {
        let mut offset = 0;
        let levels = (1..=N_LEVELS)
            .map(|l| {
                let level = Level {
                    time: AxisFactor::new(N_FRAMES, l as f64, l),
                    band: AxisFactor::new(N_BANDS, l as f64, l),
                    offset,
                };
                offset += level.n_columns();
                level
            })
            .collect();
        Self {
            levels,
            n_columns: offset,
        }
    }

    pub fn n_rows(&self) -> usize {
        N_BINS
    }

    pub fn n_columns(&self) -> usize {
        self.n_columns
    }

    /// Number of columns contributed by `level` (1-based).
    pub fn level_columns(&self, level: usize) -> usize {
        self.levels[level - 1].n_columns()
    }

    pub fn column_info(&self, j: usize) -> ColumnInfo {
        let (li, lv) = self
            .levels
            .iter()
            .enumerate()
            .rev()
            .find(|(_, lv)| lv.offset <= j)
            .expect("column index in range");
        let k = j - lv.offset;
        ColumnInfo {
            level: li + 1,
            centre_frame: lv.time.centres[k % lv.time.n()],
            centre_band: lv.band.centres[k / lv.time.n()],
            sigma: (li + 1) as f64,
        }
    }

    /// Dense column `j` in T-F vectorized order.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut beta = vec![0.0; self.n_columns];
        beta[j] = 1.0;
        self.apply(&beta)
    }

    /// `B * beta`: T-F weights (length 5504) from pyramid coefficients.
    pub fn apply(&self, beta: &[f64]) -> Vec<f64> {
        assert_eq!(beta.len(), self.n_columns, "coefficient vector length");
        let mut out = vec![0.0; N_BINS];
        for lv in &self.levels {
            let (nt, nb) = (lv.time.n(), lv.band.n());
            let coef = &beta[lv.offset..lv.offset + nt * nb];
            if coef.iter().all(|&b| b == 0.0) {
                continue;
            }
            // tmp (86 x nb) = Gt * Coef
            let mut tmp = vec![0.0; N_FRAMES * nb];
            for q in 0..nb {
                for k in 0..nt {
                    let c = coef[k + nt * q];
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..N_FRAMES {
                        tmp[i + N_FRAMES * q] += lv.time.at(i, k) * c;
                    }
                }
            }
            // out (86 x 64) += tmp * Gb^T
            for f in 0..N_BANDS {
                for q in 0..nb {
                    let g = lv.band.at(f, q);
                    for i in 0..N_FRAMES {
                        out[i + N_FRAMES * f] += tmp[i + N_FRAMES * q] * g;
                    }
                }
            }
        }
        out
    }

    /// `B^T * x`: pyramid-space projection of a vectorized T-F matrix.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), N_BINS, "T-F vector length");
        let mut out = vec![0.0; self.n_columns];
        for lv in &self.levels {
            let (nt, nb) = (lv.time.n(), lv.band.n());
            // tmp (86 x nb) = X * Gb
            let mut tmp = vec![0.0; N_FRAMES * nb];
            for q in 0..nb {
                for f in 0..N_BANDS {
                    let g = lv.band.at(f, q);
                    for i in 0..N_FRAMES {
                        tmp[i + N_FRAMES * q] += x[i + N_FRAMES * f] * g;
                    }
                }
            }
            // out (nt x nb) = Gt^T * tmp
            for q in 0..nb {
                for k in 0..nt {
                    let mut s = 0.0;
                    for i in 0..N_FRAMES {
                        s += lv.time.at(i, k) * tmp[i + N_FRAMES * q];
                    }
                    out[lv.offset + k + nt * q] = s;
                }
            }
        }
        out
    }

    /// Fingerprint of the numeric basis, stored with fitted ACIs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("pyramid {N_FRAMES}x{N_BANDS} levels={N_LEVELS}"));
        for lv in &self.levels {
            for v in lv.time.values.iter().chain(&lv.band.values) {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}
