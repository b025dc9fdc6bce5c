//! Shared fixtures for the integration tests: analyzed noise tokens and
//! responses drawn from a planted ACI.
#![allow(dead_code)]

use rand::Rng;
use rayon::prelude::*;
use revcorr::aci::{sigmoid, FitDataset};
use revcorr::noise::{generate, NoiseSpec};
use revcorr::seed;
use revcorr::targets::TargetId;
use revcorr::tfrep::{TfAnalyzer, TfMatrix, N_BANDS, N_BINS, N_FRAMES};

/// Row-major T-F matrices of `n` noise tokens with seeds `first..first + n`.
pub fn noise_rows(spec: &NoiseSpec, first: u64, n: usize) -> Vec<f64> {
    let an = TfAnalyzer::new();
    let rows: Vec<Vec<f64>> = (first..first + n as u64)
        .into_par_iter()
        .map(|s| an.analyze(&generate(spec, s).unwrap().waveform).unwrap().into_vec())
        .collect();
    rows.concat()
}

fn blob(f: usize, b: usize, fc: f64, bc: f64, s: f64) -> f64 {
    let d2 = (f as f64 - fc).powi(2) + (b as f64 - bc).powi(2);
    (-d2 / (2.0 * s * s)).exp()
}

/// A positive and a negative blob, the shape of a typical ACI.
pub fn planted_weights() -> Vec<f64> {
    let mut m = TfMatrix::zeros();
    for f in 0..N_FRAMES {
        for b in 0..N_BANDS {
            m.set(f, b, blob(f, b, 30.0, 40.0, 3.0) - blob(f, b, 55.0, 20.0, 4.0));
        }
    }
    m.into_vec()
}

/// A differently placed plant.
pub fn other_weights() -> Vec<f64> {
    let mut m = TfMatrix::zeros();
    for f in 0..N_FRAMES {
        for b in 0..N_BANDS {
            m.set(f, b, blob(f, b, 60.0, 50.0, 3.0) - blob(f, b, 20.0, 10.0, 3.0));
        }
    }
    m.into_vec()
}

/// Noise contributions `(x_i - mean) . w`, scaled to unit standard deviation.
pub fn planted_drive(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len() / N_BINS;
    let mut mean = vec![0.0; N_BINS];
    for r in x.chunks(N_BINS) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n as f64;
        }
    }
    let eta: Vec<f64> = x
        .chunks(N_BINS)
        .map(|r| r.iter().zip(&mean).zip(w).map(|((v, m), w)| (v - m) * w).sum())
        .collect();
    let sd = (eta.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    eta.iter().map(|e| e / sd).collect()
}

/// Responses drawn from `P(aba) = sigmoid(gain * drive + cue * (+-1))`, with
/// the sign given by a random presented target. `cue = 0` ignores the target.
pub fn planted_dataset(x: Vec<f64>, w: &[f64], gain: f64, cue: f64, rng_seed: u64) -> FitDataset {
    let drive = planted_drive(&x, w);
    let mut rng = seed::rng(rng_seed);
    let mut response = Vec::with_capacity(drive.len());
    let mut target = Vec::with_capacity(drive.len());
    for d in drive {
        let t = if rng.random::<bool>() { TargetId::Aba } else { TargetId::Ada };
        let s = if t == TargetId::Aba { 1.0 } else { -1.0 };
        let p = sigmoid(gain * d + cue * s);
        response.push(if rng.random::<f64>() < p { TargetId::Aba } else { TargetId::Ada });
        target.push(t);
    }
    FitDataset::new(x, response, target).unwrap()
}

/// Responses that ignore the noise entirely.
pub fn coin_flip_dataset(x: Vec<f64>, rng_seed: u64) -> FitDataset {
    let n = x.len() / N_BINS;
    let mut rng = seed::rng(rng_seed);
    let response: Vec<TargetId> = (0..n)
        .map(|_| if rng.random::<bool>() { TargetId::Aba } else { TargetId::Ada })
        .collect();
    let target = response.iter().map(|_| if rng.random::<bool>() { TargetId::Aba } else { TargetId::Ada }).collect();
    FitDataset::new(x, response, target).unwrap()
}
