use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use revcorr::aci::PyramidBasis;
use revcorr::noise::NoiseKind;
use revcorr::pipeline::{self, CrossInput, PipelineConfig, Run};
use revcorr::predict::{chance_boundary_delta, Variant};

/// Exit status of `fit` when at least one ACI came out null.
const EXIT_NULL_ACI: u8 = 2;
/// Exit status of `validate-noise` when a statistic is out of tolerance.
const EXIT_CHECKS_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "revcorr", version, about = "Auditory classification images from simulated or recorded sessions")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "REVCORR_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "REVCORR_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    kind: NoiseKind,
    /// Take the noise spec from this configuration instead of the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate noise tokens and record their seeds.
    Noisegen {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Also write every token as WAV.
        #[arg(long)]
        dump_wav: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compare a token set's statistics with the reference values.
    ValidateNoise {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run the artificial listener through a session.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        synthetic_targets: bool,
        /// Directory holding aba.wav and ada.wav.
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write every trial's noise as WAV.
        #[arg(long)]
        dump_wav: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Fit one ACI per condition of a run.
    Fit {
        #[arg(long)]
        run: PathBuf,
        /// Conditions to fit (default: all present).
        #[arg(long = "condition")]
        conditions: Vec<NoiseKind>,
    },
    /// Auto-predictions of a run's fitted ACIs.
    Predict {
        #[arg(long)]
        run: PathBuf,
    },
    /// Exchange ACIs between conditions of one run, or between runs.
    Crosspred {
        /// One run: matrix over its conditions. Several: matrix over runs.
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// Condition compared across several runs.
        #[arg(long, default_value = "white")]
        condition: NoiseKind,
        #[arg(long)]
        incorrect_only: bool,
        #[command(flatten)]
        out: OutDir,
    },
    /// Figure-data CSVs of a run.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to <run>/report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn noise_spec(args: &NoiseArgs) -> revcorr::Result<revcorr::noise::NoiseSpec> {
    let cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    Ok(cfg.noise.get(args.kind).clone())
}

fn run_name(dir: &Path, i: usize) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("run{i}"))
}

fn execute(cli: Cli) -> revcorr::Result<ExitCode> {
    pipeline::init_workers(cli.workers)?;
    match cli.cmd {
        Cmd::Noisegen { noise, count, dump_wav, out } => {
            let entries = pipeline::noisegen(&noise_spec(&noise)?, count, noise.seed, &out.out, dump_wav)?;
            println!("{} files written to {}", entries.len() + 1, out.out.display());
        }
        Cmd::ValidateNoise { noise, count, out } => {
            let report = pipeline::validate_noise(&noise_spec(&noise)?, count, noise.seed, &out.out)?;
            for c in &report.checks {
                let tag = if c.passed() { "PASS" } else { "FAIL" };
                println!("{tag} {}: {:.2} (target {:.2} +- {:.2})", c.name, c.measured, c.target, c.tolerance);
            }
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_CHECKS_FAILED));
            }
        }
        Cmd::Simulate {
            config,
            synthetic_targets,
            targets,
            seed,
            blocks,
            trials,
            dump_wav,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => PipelineConfig::load(&p)?,
                None => PipelineConfig::default(),
            };
            cfg.synthetic_targets |= synthetic_targets;
            if targets.is_some() {
                cfg.targets_dir = targets;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = blocks {
                cfg.session.n_blocks = b;
            }
            if let Some(t) = trials {
                cfg.session.trials_per_block = t;
            }
            let sim = pipeline::simulate(&cfg, &out.out, dump_wav)?;
            println!("{} trials written to {}", sim.records.len(), out.out.display());
            for t in &sim.metrics.thresholds {
                println!("block {:2} {:5}: threshold {:6.2} dB", t.block_index, t.noise_kind, t.threshold);
            }
        }
        Cmd::Fit { run, conditions } => {
            let run = Run::load(&run)?;
            let fits = pipeline::fit_run(&run, &conditions, &PyramidBasis::new())?;
            let mut any_null = false;
            for f in &fits {
                any_null |= f.aci.is_null;
                println!(
                    "{:5}: {} trials, lambda* = {:.4}, {} nonzero{}",
                    f.kind,
                    f.aci.n_trials,
                    f.aci.lambda,
                    f.aci.n_nonzero(),
                    if f.aci.is_null { " (null ACI)" } else { "" }
                );
            }
            if any_null {
                return Ok(ExitCode::from(EXIT_NULL_ACI));
            }
        }
        Cmd::Predict { run } => {
            let run = Run::load(&run)?;
            for o in pipeline::predict_run(&run, &PyramidBasis::new())? {
                for r in std::iter::once(&o.all).chain(o.incorrect.as_ref()) {
                    println!(
                        "{:5} {:14} n={:5} dCVD_t={:+.4} (sig {}) dPA={:5.1}% (chance {:.1}%)",
                        o.kind,
                        r.variant.as_str(),
                        r.n_trials,
                        r.delta_cvd_t,
                        r.significant,
                        r.delta_pa,
                        chance_boundary_delta(r.n_trials)
                    );
                }
            }
        }
        Cmd::Crosspred {
            runs,
            condition,
            incorrect_only,
            out,
        } => {
            let basis = PyramidBasis::new();
            let mut inputs = Vec::new();
            if runs.len() == 1 {
                let run = Run::load(&runs[0])?;
                for kind in run.conditions() {
                    inputs.push(CrossInput {
                        key: kind.to_string(),
                        aci: revcorr::aci::load_aci(&run.aci_dir(kind), &basis)?,
                        data: run.dataset(kind)?,
                    });
                }
            } else {
                for (i, dir) in runs.iter().enumerate() {
                    let run = Run::load(dir)?;
                    inputs.push(CrossInput {
                        key: run_name(dir, i),
                        aci: revcorr::aci::load_aci(&run.aci_dir(condition), &basis)?,
                        data: run.dataset(condition)?,
                    });
                }
            }
            let variant = if incorrect_only { Variant::IncorrectOnly } else { Variant::AllTrials };
            let m = pipeline::crosspred(inputs, &basis, variant, &out.out)?;
            for (i, k) in m.keys.iter().enumerate() {
                let cells: Vec<String> = m.delta_pa[i]
                    .iter()
                    .zip(&m.masked[i])
                    .map(|(v, masked)| if *masked { "   --".to_string() } else { format!("{v:5.1}") })
                    .collect();
                println!("{k:>12}: {}", cells.join(" "));
            }
        }
        Cmd::Report { run, out } => {
            let run = Run::load(&run)?;
            let r = pipeline::report_run(&run, out.as_deref())?;
            println!("{} files written to {}", r.files.len(), r.dir.display());
            for (item, reason) in &r.gaps {
                println!("missing {item}: {reason}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
