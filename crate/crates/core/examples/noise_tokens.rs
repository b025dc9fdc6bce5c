//! Generate tokens of the three noise kinds and compare a small set of each
//! with its reference statistics.
//!
//! ```text
//! cargo run --example noise_tokens -- 200
//! ```

use revcorr::noise::{generate, validate_noise_set, NoiseKind, NoiseSpec, ReferenceStats, MIN_VALIDATION_TOKENS};

fn main() -> revcorr::Result<()> {
    let count: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("token count"))
        .unwrap_or(MIN_VALIDATION_TOKENS);
    for kind in NoiseKind::ALL {
        let spec = NoiseSpec::for_kind(kind);
        let tokens = (0..count as u64).map(|s| generate(&spec, s)).collect::<revcorr::Result<Vec<_>>>()?;
        let first = &tokens[0].waveform;
        println!(
            "{kind}: {} samples at {} Hz, rms {:.4}, spec {}",
            first.len(),
            first.fs(),
            first.rms(),
            tokens[0].spec_id
        );
        let report = validate_noise_set(&tokens, &ReferenceStats::for_kind(kind))?;
        for c in &report.checks {
            println!(
                "  {:4} {}: {:.2} (target {:.2} +- {:.2})",
                if c.passed() { "ok" } else { "off" },
                c.name,
                c.measured,
                c.target,
                c.tolerance
            );
        }
    }
    Ok(())
}
