use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swiptcast::channel::watts_to_dbm;
use swiptcast::harness::{self, sweep::DEFAULT_SAMPLES};
use swiptcast::power::Scheme;
use swiptcast::Result;

/// Secure layered video multicast with wireless power transfer.
///
/// Log verbosity follows the SWIPTCAST_LOG environment variable
/// (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization with the requested schemes.
    Solve {
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of sdr, scheme1, scheme2, baseline.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "sdr,scheme1,scheme2,baseline"
        )]
        schemes: Vec<Scheme>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Monte Carlo samples for eavesdropper verification.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Run a parameter sweep and write CSV, JSON summary and plot data.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
    },
    /// Re-verify a persisted solution file against a config.
    Verify {
        solution: PathBuf,
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Analytic self-checks.
    Selftest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SWIPTCAST_LOG", "warn")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Solve {
            config,
            seed,
            schemes,
            out,
            samples,
        } => {
            let mut cfg = harness::load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let res = harness::run_single(&cfg, &schemes, samples, &out)?;
            for r in &res.reports {
                match (r.total_power_w, &r.evaluation) {
                    (Some(w), Some(e)) => println!(
                        "{:<9} {:<10} power {w:.6e} W ({:.3} dBm)  p_hat {:.4}  secrecy {:.4}",
                        r.scheme.name(),
                        r.status.name(),
                        watts_to_dbm(w),
                        e.chance_prob_hat,
                        e.secrecy_ok_fraction
                    ),
                    (Some(w), None) => println!(
                        "{:<9} {:<10} power {w:.6e} W ({:.3} dBm)",
                        r.scheme.name(),
                        r.status.name(),
                        watts_to_dbm(w)
                    ),
                    _ => println!(
                        "{:<9} {:<10} {}",
                        r.scheme.name(),
                        r.status.name(),
                        r.message.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("wrote {}", out.display());
            Ok(res.passed())
        }
        Command::Sweep { spec, out } => {
            let spec = harness::load_sweep(&spec)?;
            let res = harness::run_sweep(&spec)?;
            harness::write_sweep(&res, &out)?;
            println!(
                "{:>6} {:<9} {:>5} {:>12} {:>10}",
                spec.axis.name(),
                "scheme",
                "ok",
                "power_dbm",
                "stderr"
            );
            for r in &res.summary.rows {
                println!(
                    "{:>6} {:<9} {:>5} {:>12.4} {:>10.4}",
                    r.axis_value,
                    r.scheme.name(),
                    r.n_ok,
                    r.mean_power_dbm.unwrap_or(f64::NAN),
                    r.stderr_power_dbm.unwrap_or(f64::NAN)
                );
            }
            println!("wrote {}", out.display());
            Ok(res.rows.iter().all(|r| r.status == harness::RunStatus::Ok))
        }
        Command::Verify {
            solution,
            config,
            samples,
        } => {
            let cfg = harness::load_config(&config)?;
            let file = harness::load_solution(&solution)?;
            let report = harness::verify(&file, &cfg, samples)?;
            for e in &report.entries {
                println!(
                    "{:<9} {:<4} p_hat {:.4} ± {:.4}",
                    e.scheme.name(),
                    if e.passed { "pass" } else { "FAIL" },
                    e.evaluation.chance_prob_hat,
                    e.evaluation.chance_ci_halfwidth
                );
                for c in e.evaluation.constraints.iter().filter(|c| !c.ok) {
                    println!("    {} margin {:.3e}", c.label, c.margin);
                }
            }
            Ok(report.passed)
        }
        Command::Selftest => {
            let checks = harness::selftest();
            for c in &checks {
                println!(
                    "{:<4} {:<26} {}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}
