//! Exchange ACIs between two simulated observers that listen for different
//! cues. Each ACI predicts its own observer better than the other one.

use std::collections::BTreeMap;

use rand::Rng;
use revcorr::aci::{fit_aci, sigmoid, FitConfig, FitDataset, PyramidBasis};
use revcorr::noise::{generate, NoiseSpec};
use revcorr::predict::{cross_prediction, Variant};
use revcorr::targets::TargetId;
use revcorr::tfrep::{tf_representation, TfMatrix, N_BANDS, N_BINS, N_FRAMES};

fn blob(fc: f64, bc: f64) -> Vec<f64> {
    let mut m = TfMatrix::zeros();
    for f in 0..N_FRAMES {
        for b in 0..N_BANDS {
            m.set(f, b, (-((f as f64 - fc).powi(2) + (b as f64 - bc).powi(2)) / 18.0).exp());
        }
    }
    m.into_vec()
}

fn observer(x: Vec<f64>, w: &[f64], seed: u64) -> revcorr::Result<FitDataset> {
    let drive: Vec<f64> = x.chunks(N_BINS).map(|r| r.iter().zip(w).map(|(a, b)| a * b).sum()).collect();
    let n = drive.len() as f64;
    let mean = drive.iter().sum::<f64>() / n;
    let sd = (drive.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut rng = revcorr::seed::rng(seed);
    let response: Vec<TargetId> = drive
        .iter()
        .map(|d| if rng.random::<f64>() < sigmoid(1.5 * (d - mean) / sd) { TargetId::Aba } else { TargetId::Ada })
        .collect();
    FitDataset::new(x, response.clone(), response)
}

fn main() -> revcorr::Result<()> {
    let spec = NoiseSpec::white();
    let basis = PyramidBasis::new();
    let mut acis = BTreeMap::new();
    let mut data = BTreeMap::new();
    for (name, w, first) in [("early", blob(25.0, 40.0), 0u64), ("late", blob(60.0, 20.0), 10_000)] {
        let mut x = Vec::new();
        for s in first..first + 800 {
            x.extend(tf_representation(&generate(&spec, s)?.waveform)?.into_vec());
        }
        let d = observer(x, &w, first + 1)?;
        acis.insert(name.to_string(), fit_aci(&d, &basis, &FitConfig::default())?);
        data.insert(name.to_string(), d);
    }
    let m = cross_prediction(&acis, &data, &basis, Variant::AllTrials)?;
    println!("dPA (%), rows: predicted observer, columns: source ACI");
    println!("{:>8} {}", "", m.keys.iter().map(|k| format!("{k:>8}")).collect::<String>());
    for (i, k) in m.keys.iter().enumerate() {
        let row: String = (0..m.keys.len())
            .map(|j| format!("{:>7.1}{}", m.delta_pa[i][j], if m.significant[i][j] { "*" } else { " " }))
            .collect();
        println!("{k:>8} {row}");
    }
    Ok(())
}
