//! Short-time Fourier transform with a Gaussian window, weighted
//! overlap-add inversion, and fast Griffin-Lim phase retrieval.

use super::fft::{fft, ifft};
use super::Complex64;

#[derive(Debug, Clone)]
pub struct Stft {
    frame_len: usize,
    hop: usize,
    window: Vec<f64>,
}

/// One-sided STFT coefficients, frame-major (`frame * n_bins + bin`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    pub signal_len: usize,
    pub data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm()).collect()
    }

    #[inline]
    pub fn at(&self, frame: usize, bin: usize) -> Complex64 {
        self.data[frame * self.n_bins + bin]
    }
}

impl Stft {
    /// Gaussian analysis window of `frame_len` samples with standard deviation
    /// `sigma` samples, centred in the frame.
    pub fn gaussian(frame_len: usize, hop: usize, sigma: f64) -> Self {
        assert!(frame_len % 2 == 0 && hop > 0 && hop <= frame_len);
        let centre = (frame_len / 2) as f64;
        let window = (0..frame_len)
            .map(|n| {
                let d = (n as f64 - centre) / sigma;
                (-0.5 * d * d).exp()
            })
            .collect();
        Self {
            frame_len,
            hop,
            window,
        }
    }

    /// 512-sample frames, 75 % overlap, sigma = 64 samples.
    pub fn default_noise() -> Self {
        Self::gaussian(512, 128, 64.0)
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Frames are centred on `m * hop`, `m = 0..n_frames`.
    pub fn n_frames(&self, signal_len: usize) -> usize {
        signal_len.div_ceil(self.hop) + 1
    }

    /// Centre time (s) of frame `m`.
    pub fn frame_time(&self, m: usize, fs: f64) -> f64 {
        (m * self.hop) as f64 / fs
    }

    pub fn bin_frequency(&self, k: usize, fs: f64) -> f64 {
        k as f64 * fs / self.frame_len as f64
    }

    pub fn forward(&self, x: &[f64]) -> Spectrogram {
        let n_frames = self.n_frames(x.len());
        let n_bins = self.n_bins();
        let half = (self.frame_len / 2) as isize;
        let mut data = Vec::with_capacity(n_frames * n_bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.frame_len];
        for m in 0..n_frames {
            let start = (m * self.hop) as isize - half;
            for (j, b) in buf.iter_mut().enumerate() {
                let idx = start + j as isize;
                let v = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize]
                } else {
                    0.0
                };
                *b = Complex64::new(v * self.window[j], 0.0);
            }
            fft(&mut buf);
            data.extend_from_slice(&buf[..n_bins]);
        }
        Spectrogram {
            n_frames,
            n_bins,
            signal_len: x.len(),
            data,
        }
    }

    /// Least-squares inverse (weighted overlap-add).
    pub fn inverse(&self, spec: &Spectrogram) -> Vec<f64> {
        let len = spec.signal_len;
        let half = (self.frame_len / 2) as isize;
        let mut num = vec![0.0; len];
        let mut den = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.frame_len];
        for m in 0..spec.n_frames {
            let row = &spec.data[m * spec.n_bins..(m + 1) * spec.n_bins];
            buf[..spec.n_bins].copy_from_slice(row);
            for k in spec.n_bins..self.frame_len {
                buf[k] = row[self.frame_len - k].conj();
            }
            // DC and Nyquist must be real for a real frame
            buf[0].im = 0.0;
            buf[self.frame_len / 2].im = 0.0;
            ifft(&mut buf);
            let start = (m * self.hop) as isize - half;
            for (j, b) in buf.iter().enumerate() {
                let idx = start + j as isize;
                if idx >= 0 && (idx as usize) < len {
                    let w = self.window[j];
                    num[idx as usize] += w * b.re;
                    den[idx as usize] += w * w;
                }
            }
        }
        num.iter()
            .zip(&den)
            .map(|(n, d)| if *d > 1e-12 { n / d } else { 0.0 })
            .collect()
    }
}

/// Outcome of phase retrieval.
#[derive(Debug, Clone)]
pub struct PhaseRetrieval {
    pub signal: Vec<f64>,
    /// `||(|STFT(x)| - S)|| / ||S||` for the returned signal.
    pub relative_error: f64,
}

/// Fast Griffin-Lim (Perraudin et al., 2013) with momentum `alpha`,
/// starting from the phases of `init`.
pub fn fast_griffin_lim(
    stft: &Stft,
    target_mag: &[f64],
    init: &Spectrogram,
    iterations: usize,
    alpha: f64,
) -> PhaseRetrieval {
    assert_eq!(target_mag.len(), init.data.len());
    let project_mag = |spec: &mut Spectrogram| {
        for (c, &m) in spec.data.iter_mut().zip(target_mag) {
            let n = c.norm();
            *c = if n > 0.0 {
                *c * (m / n)
            } else {
                Complex64::new(m, 0.0)
            };
        }
    };
    let mut t = init.clone();
    project_mag(&mut t);
    let mut prev: Option<Spectrogram> = None;
    for _ in 0..iterations {
        let mut c = stft.forward(&stft.inverse(&t));
        project_mag(&mut c);
        let next_t = match &prev {
            Some(p) => {
                let mut nt = c.clone();
                for ((v, cv), pv) in nt.data.iter_mut().zip(&c.data).zip(&p.data) {
                    *v = *cv + (*cv - *pv) * alpha;
                }
                nt
            }
            None => c.clone(),
        };
        prev = Some(c);
        t = next_t;
    }
    let mut last = prev.unwrap_or(t);
    project_mag(&mut last);
    let signal = stft.inverse(&last);
    let achieved = stft.forward(&signal);
    let (mut err, mut norm) = (0.0, 0.0);
    for (c, &m) in achieved.data.iter().zip(target_mag) {
        err += (c.norm() - m).powi(2);
        norm += m * m;
    }
    let relative_error = if norm > 0.0 { (err / norm).sqrt() } else { 0.0 };
    PhaseRetrieval {
        signal,
        relative_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn perfect_reconstruction() {
        let stft = Stft::default_noise();
        let mut rng = crate::seed::rng(3);
        let x: Vec<f64> = (0..3000).map(|_| rng.random::<f64>() - 0.5).collect();
        let spec = stft.forward(&x);
        assert_eq!(spec.n_bins, 257);
        assert_eq!(spec.n_frames, 3000usize.div_ceil(128) + 1);
        let y = stft.inverse(&spec);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn griffin_lim_keeps_consistent_spectrogram() {
        let stft = Stft::default_noise();
        let mut rng = crate::seed::rng(5);
        let x: Vec<f64> = (0..4000).map(|_| rng.random::<f64>() - 0.5).collect();
        let spec = stft.forward(&x);
        let mag = spec.magnitudes();
        let out = fast_griffin_lim(&stft, &mag, &spec, 5, 0.99);
        assert!(out.relative_error < 1e-9);
        for (a, b) in x.iter().zip(&out.signal) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
