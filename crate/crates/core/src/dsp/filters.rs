//! IIR and FIR filters: Butterworth low-pass sections, linear-phase FIR
//! band-pass design, and first-order complex resonators.

use std::f64::consts::PI;

use super::Complex64;
use crate::error::{Error, Result};

/// One second-order section, `a[0]` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    /// Digital Butterworth low-pass of the given order (bilinear transform
    /// with pre-warping). Unity gain at DC.
    pub fn butterworth_lowpass(order: usize, cutoff: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("filter order must be positive"));
        }
        if !(cutoff > 0.0 && cutoff < fs / 2.0) {
            return Err(Error::invalid(format!(
                "cut-off {cutoff} Hz outside (0, {}) Hz",
                fs / 2.0
            )));
        }
        let warped = 2.0 * fs * (PI * cutoff / fs).tan();
        let k = 2.0 * fs;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // analog pole pair on the left half of the circle of radius `warped`
            let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(warped, theta);
            let zp = (k + p) / (k - p);
            let a1 = -2.0 * zp.re;
            let a2 = zp.norm_sqr();
            let g = (1.0 + a1 + a2) / 4.0;
            sections.push(Biquad {
                b: [g, 2.0 * g, g],
                a: [1.0, a1, a2],
            });
        }
        if order % 2 == 1 {
            let zp = (k - warped) / (k + warped);
            let a1 = -zp;
            let g = (1.0 + a1) / 2.0;
            sections.push(Biquad {
                b: [g, g, 0.0],
                a: [1.0, a1, 0.0],
            });
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn filter_in_place(&self, x: &mut [f64]) {
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in x.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.filter_in_place(&mut y);
        y
    }

    pub fn magnitude_at(&self, freq: f64, fs: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
            .norm()
    }
}

/// Linear-phase windowed-sinc band-pass (Hamming window). `taps` must be odd.
/// An upper edge at or above Nyquist yields a high-pass. The passband gain is
/// normalised to 1 at the geometric centre of the band.
pub fn fir_bandpass(taps: usize, f_lo: f64, f_hi: f64, fs: f64) -> Result<Vec<f64>> {
    if taps % 2 == 0 || taps < 3 {
        return Err(Error::invalid("FIR length must be odd and >= 3"));
    }
    if !(f_lo > 0.0 && f_lo < f_hi && f_lo < fs / 2.0) {
        return Err(Error::invalid(format!("bad band edges {f_lo}-{f_hi} Hz")));
    }
    let m = (taps - 1) as f64 / 2.0;
    let sinc_lp = |fc: f64, n: f64| -> f64 {
        let wc = 2.0 * fc / fs;
        if n == 0.0 {
            wc
        } else {
            (PI * wc * n).sin() / (PI * n)
        }
    };
    let hi = f_hi.min(fs / 2.0);
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let n = i as f64 - m;
            let ideal = sinc_lp(hi, n) - sinc_lp(f_lo, n);
            let win = 0.54 - 0.46 * (2.0 * PI * i as f64 / (taps - 1) as f64).cos();
            ideal * win
        })
        .collect();
    let centre = (f_lo * hi).sqrt();
    let gain = fir_magnitude(&h, centre, fs);
    for v in &mut h {
        *v /= gain;
    }
    Ok(h)
}

pub fn fir_magnitude(h: &[f64], freq: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * freq / fs;
    h.iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (n, &c)| {
            acc + Complex64::from_polar(c, -w * n as f64)
        })
        .norm()
}

/// Convolve with a symmetric (linear-phase) FIR and remove its integer group
/// delay, so the output is time-aligned with the input and has equal length.
pub fn fir_filter_aligned(x: &[f64], h: &[f64]) -> Vec<f64> {
    let delay = (h.len() - 1) / 2;
    let n = x.len();
    let mut y = vec![0.0; n];
    for (i, out) in y.iter_mut().enumerate() {
        // y[i] = sum_k h[k] x[i + delay - k]
        let t = i + delay;
        let k_lo = t.saturating_sub(n - 1);
        let k_hi = t.min(h.len() - 1);
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            acc += h[k] * x[t - k];
        }
        *out = acc;
    }
    y
}

/// First-order complex resonator `y[n] = g x[n] + p y[n-1]` with the pole
/// placed at `centre` Hz and a -3 dB bandwidth of `bandwidth` Hz. Gain is
/// normalised to 1 at the centre frequency.
#[derive(Debug, Clone, Copy)]
pub struct ComplexResonator {
    pole: Complex64,
    gain: Complex64,
}

impl ComplexResonator {
    pub fn new(centre: f64, bandwidth: f64, fs: f64) -> Self {
        let radius = (-PI * bandwidth / fs).exp();
        let pole = Complex64::from_polar(radius, 2.0 * PI * centre / fs);
        // |1 - p e^{-jw_c}| = 1 - radius at the centre frequency
        let gain = Complex64::new(1.0 - radius, 0.0);
        Self { pole, gain }
    }

    pub fn filter(&self, x: &[f64]) -> Vec<Complex64> {
        let mut state = Complex64::new(0.0, 0.0);
        x.iter()
            .map(|&v| {
                state = self.gain * v + self.pole * state;
                state
            })
            .collect()
    }
}
