//! ERB-number scale (Glasberg & Moore, 1990).

use crate::error::{Error, Result};

/// ERB-number (Cams) of a frequency in Hz.
pub fn erb_number(freq: f64) -> Result<f64> {
    check(freq)?;
    Ok(erb_number_unchecked(freq))
}

/// Equivalent rectangular bandwidth (Hz) of the auditory filter at `freq`.
pub fn erb_bandwidth(freq: f64) -> Result<f64> {
    check(freq)?;
    Ok(erb_bandwidth_unchecked(freq))
}

/// Frequency (Hz) at a given ERB number.
pub fn erb_number_to_hz(erb_n: f64) -> f64 {
    (10f64.powf(erb_n / 21.4) - 1.0) / 4.37 * 1000.0
}

pub(crate) fn erb_number_unchecked(freq: f64) -> f64 {
    21.4 * (4.37 * freq / 1000.0 + 1.0).log10()
}

pub(crate) fn erb_bandwidth_unchecked(freq: f64) -> f64 {
    24.7 * (4.37 * freq / 1000.0 + 1.0)
}

fn check(freq: f64) -> Result<()> {
    if freq.is_finite() && freq >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("frequency must be >= 0, got {freq}")))
    }
}
