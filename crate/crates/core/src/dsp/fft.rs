//! Thin wrappers over `rustfft` with a per-thread planner cache.

use std::cell::RefCell;

use rustfft::FftPlanner;

use super::Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT (no scaling).
pub fn fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place inverse DFT, scaled by `1/N` so that `ifft(fft(x)) == x`.
pub fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Full-length DFT of a real sequence.
pub fn real_fft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Magnitude of the analytic signal of `x` (the Hilbert envelope).
pub fn hilbert_envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = real_fft(x);
    // analytic-signal weighting: keep DC and Nyquist, double positive bins
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *v *= w;
    }
    ifft(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let mut buf = real_fft(&x);
        ifft(&mut buf);
        for (a, b) in x.iter().zip(&buf) {
            assert!((a - b.re).abs() < 1e-12);
            assert!(b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_of_tone_is_flat() {
        let n = 1600;
        let x: Vec<f64> = (0..n)
            .map(|i| 0.7 * (2.0 * std::f64::consts::PI * 100.0 * i as f64 / 1600.0).cos())
            .collect();
        let env = hilbert_envelope(&x);
        for v in env {
            assert!((v - 0.7).abs() < 1e-9);
        }
    }
}
