//! Chain of adaptation loops with overshoot limitation.
//!
//! Each loop divides its input by a low-passed copy of its own output, so a
//! chain of `k` loops approaches a `2^-k` power-law compression for stationary
//! input while passing fast changes with less attenuation. Onsets that would
//! exceed `limit` times the steady-state output are soft-clipped.

#[derive(Debug, Clone)]
pub struct AdaptationLoops {
    a1: Vec<f64>,
    b0: Vec<f64>,
    init_state: Vec<f64>,
    min_level: f64,
    limit: Option<Limiter>,
    corr: f64,
    mult: f64,
}

#[derive(Debug, Clone)]
struct Limiter {
    factor: Vec<f64>,
    expfac: Vec<f64>,
    offset: Vec<f64>,
}

impl AdaptationLoops {
    /// `taus` in seconds; `limit <= 1` disables overshoot limiting.
    pub fn new(taus: &[f64], limit: f64, min_level: f64, fs: f64) -> Self {
        let a1: Vec<f64> = taus.iter().map(|t| (-1.0 / (t * fs)).exp()).collect();
        let b0 = a1.iter().map(|a| 1.0 - a).collect();
        let init_state: Vec<f64> = (1..=taus.len())
            .map(|k| min_level.powf(1.0 / 2f64.powi(k as i32)))
            .collect();
        let corr = min_level.powf(1.0 / 2f64.powi(taus.len() as i32));
        let limit = (limit > 1.0).then(|| {
            let maxvalue: Vec<f64> = init_state.iter().map(|s| (1.0 - s * s) * limit - 1.0).collect();
            Limiter {
                factor: maxvalue.iter().map(|m| 2.0 * m).collect(),
                expfac: maxvalue.iter().map(|m| -2.0 / m).collect(),
                offset: maxvalue.iter().map(|m| m - 1.0).collect(),
            }
        });
        Self {
            a1,
            b0,
            init_state,
            min_level,
            limit,
            corr,
            mult: 100.0 / (1.0 - corr),
        }
    }

    /// Process one channel. Input below `min_level` is raised to it; silence
    /// therefore maps to exactly zero output.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let mut state = self.init_state.clone();
        x.iter()
            .map(|&v| {
                let mut tmp = v.max(self.min_level);
                for (w, s) in state.iter_mut().enumerate() {
                    tmp /= *s;
                    if let Some(l) = &self.limit {
                        if tmp > 1.0 {
                            tmp = l.factor[w] / (1.0 + (l.expfac[w] * (tmp - 1.0)).exp()) - l.offset[w];
                        }
                    }
                    *s = self.a1[w] * *s + self.b0[w] * tmp;
                }
                (tmp - self.corr) * self.mult
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loops() -> AdaptationLoops {
        AdaptationLoops::new(&[0.005, 0.05, 0.129, 0.253, 0.5], 5.0, 1e-5, 16000.0)
    }

    #[test]
    fn silence_maps_to_zero() {
        let y = loops().process(&vec![0.0; 4000]);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn steady_state_is_power_law() {
        // stationary input c gives c^(1/32) after all five stages settle
        let l = AdaptationLoops::new(&[0.005, 0.05, 0.129, 0.253, 0.5], 1.0, 1e-5, 16000.0);
        let c = 0.02;
        let y = l.process(&vec![c; 16000 * 6]);
        let expected = (c.powf(1.0 / 32.0) - l.corr) * l.mult;
        assert!((y.last().unwrap() - expected).abs() < 1e-3 * expected, "{} {}", y.last().unwrap(), expected);
    }

    #[test]
    fn onset_overshoot_is_limited() {
        let x: Vec<f64> = (0..16000).map(|n| if n > 1000 { 0.1 } else { 0.0 }).collect();
        let limited = loops().process(&x);
        let free = AdaptationLoops::new(&[0.005, 0.05, 0.129, 0.253, 0.5], 1.0, 1e-5, 16000.0).process(&x);
        let peak = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        assert!(peak(&limited) < peak(&free));
        assert!(peak(&limited) > *limited.last().unwrap());
    }
}
