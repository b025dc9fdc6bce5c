//! Fourth-order all-pole gammatone filters.
//!
//! Each band is a cascade of four identical complex one-pole sections
//! (Hohmann, 2002). The pole sits at the band centre with a bandwidth of
//! 1.019 ERB, which makes the equivalent rectangular bandwidth of the
//! cascade equal to one ERB. The real part of the complex output, doubled,
//! has unit gain at the centre frequency.

use std::f64::consts::PI;

use super::Complex64;
use crate::tfrep::erb::erb_bandwidth_unchecked;

pub const GAMMATONE_ORDER: usize = 4;
/// Bandwidth factor that gives a fourth-order gammatone an ERB of 1.
pub const BANDWIDTH_FACTOR: f64 = 1.019;

#[derive(Debug, Clone, Copy)]
pub struct GammatoneBand {
    centre: f64,
    pole: Complex64,
    gain: f64,
}

impl GammatoneBand {
    pub fn new(centre: f64, fs: f64) -> Self {
        let bw = BANDWIDTH_FACTOR * erb_bandwidth_unchecked(centre);
        let radius = (-2.0 * PI * bw / fs).exp();
        let pole = Complex64::from_polar(radius, 2.0 * PI * centre / fs);
        Self {
            centre,
            pole,
            gain: 1.0 - radius,
        }
    }

    pub fn centre(&self) -> f64 {
        self.centre
    }

    /// Real-valued band signal (unit gain at the centre frequency).
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut state = [Complex64::new(0.0, 0.0); GAMMATONE_ORDER];
        let p = self.pole;
        let g = self.gain;
        x.iter()
            .map(|&v| {
                let mut s = Complex64::new(v, 0.0);
                for st in state.iter_mut() {
                    *st = s * g + p * *st;
                    s = *st;
                }
                2.0 * s.re
            })
            .collect()
    }

    /// Complex frequency response of the analytic (complex) band filter.
    /// The real output's response is `H(f) + conj(H(-f))`.
    pub fn response_at(&self, freq: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        let stage = Complex64::new(self.gain, 0.0) / (Complex64::new(1.0, 0.0) - self.pole * z_inv);
        stage.powi(GAMMATONE_ORDER as i32)
    }

    pub fn magnitude_at(&self, freq: f64, fs: f64) -> f64 {
        self.response_at(freq, fs).norm()
    }
}
