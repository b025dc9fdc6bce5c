//! Analyze one noise token into its 86 x 64 time-frequency matrix and write
//! it as CSV.
//!
//! ```text
//! cargo run --example tf_representation -- mps tf.csv
//! ```

use revcorr::noise::{generate, NoiseKind, NoiseSpec};
use revcorr::tfrep::{band_centers, tf_representation, N_BANDS, N_FRAMES};

fn main() -> revcorr::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: NoiseKind = args.next().map(|s| s.parse().expect("noise kind")).unwrap_or(NoiseKind::White);
    let out = args.next().unwrap_or_else(|| "tf.csv".into());

    let token = generate(&NoiseSpec::for_kind(kind), 42)?;
    let tf = tf_representation(&token.waveform)?;
    let centers = band_centers();
    println!("{N_FRAMES} frames x {N_BANDS} bands, {:.0}..{:.0} Hz", centers[0], centers[N_BANDS - 1]);
    for band in (0..N_BANDS).step_by(16) {
        let mean = (0..N_FRAMES).map(|f| tf.get(f, band)).sum::<f64>() / N_FRAMES as f64;
        println!("  band {band:2} ({:6.0} Hz): mean {mean:.3e}", centers[band]);
    }
    tf.write_csv(std::fs::File::create(&out)?)?;
    println!("written to {out}");
    Ok(())
}
