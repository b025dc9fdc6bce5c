//! Fit an ACI to responses drawn from a known template and check how much of
//! it comes back, then score the fit by auto-prediction.
//!
//! ```text
//! cargo run --release --example planted_aci -- 1000
//! ```

use rand::Rng;
use revcorr::aci::{fit_aci, sigmoid, FitConfig, FitDataset, PyramidBasis};
use revcorr::noise::{generate, NoiseSpec};
use revcorr::predict::{auto_prediction, chance_boundary_delta, Variant};
use revcorr::stats::pearson;
use revcorr::targets::TargetId;
use revcorr::tfrep::{tf_representation, TfMatrix, N_BANDS, N_BINS, N_FRAMES};

fn template() -> Vec<f64> {
    let mut m = TfMatrix::zeros();
    for f in 0..N_FRAMES {
        for b in 0..N_BANDS {
            let d2 = (f as f64 - 30.0).powi(2) + (b as f64 - 40.0).powi(2);
            m.set(f, b, (-d2 / 18.0).exp());
        }
    }
    m.into_vec()
}

fn main() -> revcorr::Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse().expect("trial count")).unwrap_or(1000);
    let spec = NoiseSpec::white();
    let mut x = Vec::with_capacity(n * N_BINS);
    for s in 0..n as u64 {
        x.extend(tf_representation(&generate(&spec, s)?.waveform)?.into_vec());
    }

    // drive standardized to unit variance, gain 1.5
    let w = template();
    let drive: Vec<f64> = x.chunks(N_BINS).map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    let mean = drive.iter().sum::<f64>() / n as f64;
    let sd = (drive.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut rng = revcorr::seed::rng(3);
    let response: Vec<TargetId> = drive
        .iter()
        .map(|d| {
            if rng.random::<f64>() < sigmoid(1.5 * (d - mean) / sd) {
                TargetId::Aba
            } else {
                TargetId::Ada
            }
        })
        .collect();
    let target = response.clone();
    let data = FitDataset::new(x, response, target)?;

    let basis = PyramidBasis::new();
    let aci = fit_aci(&data, &basis, &FitConfig::default())?;
    println!(
        "lambda* {:.4}, {} nonzero coefficients, correlation with the template {:.3}",
        aci.lambda,
        aci.n_nonzero(),
        pearson(&aci.weights, &w)
    );
    for p in &aci.path {
        println!("  lambda {:.4}: cv deviance {:.4} +- {:.4}, {} nonzero", p.lambda, p.cv_deviance, p.cv_sem, p.n_nonzero);
    }
    let r = auto_prediction(&aci, &basis, &data, Variant::AllTrials)?;
    println!(
        "auto-prediction: dPA {:.1}% (chance {:.1}%), dCVD_t {:+.4}, significant {}",
        r.delta_pa,
        chance_boundary_delta(n),
        r.delta_cvd_t,
        r.significant
    );
    Ok(())
}
