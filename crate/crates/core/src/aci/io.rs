//! ACI artifact: a directory of CSV files plus a TOML metadata block.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Aci, FoldModel, PathPoint, PyramidBasis};
use crate::error::{Error, Result};
use crate::persist::write_atomic;
use crate::tfrep::{read_matrix_csv, write_matrix_csv, LAYOUT_TAG};

/// Files written by [`save_aci`], in write order.
pub const ACI_FILES: [&str; 6] = [
    "aci_weights.csv",
    "aci_beta.csv",
    "deviance_path.csv",
    "fold_models.csv",
    "fold_beta.csv",
    "aci_meta.toml",
];

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    intercept: f64,
    lambda: f64,
    is_null: bool,
    n_trials: usize,
    n_folds: usize,
    fold_seed: u64,
    n_basis: usize,
    basis_hash: String,
    layout: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct BetaRow {
    index: usize,
    level: usize,
    centre_frame: usize,
    centre_band: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FoldRow {
    fold: usize,
    intercept: f64,
    null_intercept: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FoldBetaRow {
    fold: usize,
    index: usize,
    value: f64,
}

fn csv_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    write_atomic(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for r in rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|_| Error::MissingInput {
        path: path.to_path_buf(),
        hint: "incomplete ACI artifact; rerun `fit`".into(),
    })?;
    csv::Reader::from_reader(file)
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse(path.display().to_string(), format!("row {}: {e}", i + 1))))
        .collect()
}

/// Write every artifact file; the metadata file goes last so a directory
/// without it is recognizably incomplete.
pub fn save_aci(dir: &Path, aci: &Aci, basis: &PyramidBasis) -> Result<()> {
    write_atomic(dir.join(ACI_FILES[0]), |w| write_matrix_csv(w, &aci.weights))?;
    csv_rows(
        &dir.join(ACI_FILES[1]),
        aci.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, &value)| {
            let info = basis.column_info(j);
            BetaRow {
                index: j,
                level: info.level,
                centre_frame: info.centre_frame,
                centre_band: info.centre_band,
                value,
            }
        }),
    )?;
    csv_rows(&dir.join(ACI_FILES[2]), aci.path.iter())?;
    csv_rows(
        &dir.join(ACI_FILES[3]),
        aci.folds.iter().map(|f| FoldRow {
            fold: f.fold,
            intercept: f.intercept,
            null_intercept: f.null_intercept,
        }),
    )?;
    csv_rows(
        &dir.join(ACI_FILES[4]),
        aci.folds.iter().flat_map(|f| {
            f.beta
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0.0)
                .map(move |(index, &value)| FoldBetaRow {
                    fold: f.fold,
                    index,
                    value,
                })
        }),
    )?;
    let meta = Meta {
        intercept: aci.intercept,
        lambda: aci.lambda,
        is_null: aci.is_null,
        n_trials: aci.n_trials,
        n_folds: aci.n_folds,
        fold_seed: aci.fold_seed,
        n_basis: aci.beta.len(),
        basis_hash: aci.basis_hash.clone(),
        layout: LAYOUT_TAG.into(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(dir.join(ACI_FILES[5]), |w| Ok(w.write_all(text.as_bytes())?))
}

/// Read an artifact and check it against `basis`: same basis hash, same
/// layout, and `weights == B * beta`.
pub fn load_aci(dir: &Path, basis: &PyramidBasis) -> Result<Aci> {
    let meta_path = dir.join(ACI_FILES[5]);
    let text = std::fs::read_to_string(&meta_path).map_err(|_| Error::MissingInput {
        path: meta_path.clone(),
        hint: "no fitted ACI here; run `fit` first".into(),
    })?;
    let meta: Meta = toml::from_str(&text).map_err(|e| Error::parse(meta_path.display().to_string(), e.to_string()))?;
    if meta.layout != LAYOUT_TAG {
        return Err(Error::parse("aci metadata", format!("unsupported layout {:?}", meta.layout)));
    }
    if meta.basis_hash != basis.hash() || meta.n_basis != basis.n_columns() {
        return Err(Error::parse("aci metadata", "ACI was fitted with a different basis"));
    }
    let p = basis.n_columns();
    let sparse = |rows: Vec<(usize, f64)>| -> Result<Vec<f64>> {
        let mut v = vec![0.0; p];
        for (j, value) in rows {
            *v.get_mut(j)
                .ok_or_else(|| Error::parse("aci beta", format!("index {j} out of range")))? = value;
        }
        Ok(v)
    };
    let beta = sparse(
        read_rows::<BetaRow>(&dir.join(ACI_FILES[1]))?
            .into_iter()
            .map(|r| (r.index, r.value))
            .collect(),
    )?;
    let weights_path = dir.join(ACI_FILES[0]);
    let weights = read_matrix_csv(File::open(&weights_path).map_err(|_| Error::MissingInput {
        path: weights_path,
        hint: "incomplete ACI artifact; rerun `fit`".into(),
    })?)?;
    let expected = basis.apply(&beta);
    let err = weights
        .iter()
        .zip(&expected)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    if err > 1e-9 {
        return Err(Error::parse("aci weights", format!("weights differ from B * beta by {err:e}")));
    }
    let path: Vec<PathPoint> = read_rows(&dir.join(ACI_FILES[2]))?;
    let fold_rows: Vec<FoldRow> = read_rows(&dir.join(ACI_FILES[3]))?;
    let fold_beta: Vec<FoldBetaRow> = read_rows(&dir.join(ACI_FILES[4]))?;
    let folds = fold_rows
        .into_iter()
        .map(|f| {
            Ok(FoldModel {
                fold: f.fold,
                beta: sparse(
                    fold_beta
                        .iter()
                        .filter(|r| r.fold == f.fold)
                        .map(|r| (r.index, r.value))
                        .collect(),
                )?,
                intercept: f.intercept,
                null_intercept: f.null_intercept,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if meta.is_null != beta.iter().all(|b| *b == 0.0) {
        return Err(Error::parse("aci metadata", "null flag disagrees with the coefficients"));
    }
    Ok(Aci {
        weights,
        beta,
        intercept: meta.intercept,
        lambda: meta.lambda,
        is_null: meta.is_null,
        n_trials: meta.n_trials,
        n_folds: meta.n_folds,
        fold_seed: meta.fold_seed,
        basis_hash: meta.basis_hash,
        path,
        folds,
    })
}
