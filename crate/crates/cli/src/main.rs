use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use inflation_core::experiment::{
    fit_rows, oracle_suite, read_csv, run_scenario, svg_plot, sweep, verify_suite, write_sweep, CheckResult, Fault,
    ScenarioConfig, VerifyConfig,
};
use inflation_core::LabError;

#[derive(Parser)]
#[command(name = "inflate", version, about = "Norm-inflation experiments on Picard iterates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    ModulationSign,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lemma verification suite.
    Verify {
        /// JSON selecting checks and seed; the full suite runs without it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inject a known defect to confirm the suite can fail.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Compute one record at frequency N and print it as JSON.
    Iterate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "N")]
        n: f64,
    },
    /// Run every N of the config and write CSV, JSON and SVG into out_dir.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Recompute every record instead of reading out_dir/cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Cross-check the configured equation against the independent oracles.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit and plot an existing records CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plot: PathBuf,
        /// Power c in log(metric (log N)^c).
        #[arg(long, default_value_t = 0.0)]
        log_correction: f64,
    },
}

/// Exit status 2 for validation problems, 3 for numerical failures.
fn code(e: &LabError) -> ExitCode {
    if e.is_validation() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn print_checks(results: &[CheckResult]) -> ExitCode {
    for r in results {
        println!("{} {:<22} {:>7.2}s  {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn load_verify(path: &Path) -> Result<VerifyConfig, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Ok(VerifyConfig::default());
    }
    VerifyConfig::from_json(&text)
}

fn run(cli: Cli) -> Result<ExitCode, LabError> {
    match cli.command {
        Command::Verify { config, inject_fault } => {
            let cfg = config.as_deref().map(load_verify).transpose()?;
            let fault = inject_fault.map(|f| match f {
                FaultArg::ModulationSign => Fault::ModulationSign,
            });
            Ok(print_checks(&verify_suite(cfg.as_ref(), fault)))
        }
        Command::Iterate { config, n } => {
            let cfg = ScenarioConfig::load(&config)?;
            if !(n.is_finite() && n >= 2.0) {
                return Err(LabError::InvalidArgument(format!("need N >= 2, got {n}")));
            }
            let rec = run_scenario(&cfg, n)?;
            println!("{}", serde_json::to_string_pretty(&rec)?);
            Ok(if rec.status.starts_with("numeric_error") {
                ExitCode::from(3)
            } else if rec.status.starts_with("validation_error") {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sweep { config, no_cache } => {
            let cfg = ScenarioConfig::load(&config)?;
            let result = sweep(&cfg, !no_cache)?;
            write_sweep(&result, &cfg.out_dir)?;
            for r in &result.records {
                println!("N={:<8} metric={:<12.5e} dominance={:<10} {}", r.n, r.norm_ip_hs, r.dominance_ratio.map_or("-".into(), |d| format!("{d:.3}")), r.status);
            }
            match (&result.fit, &result.fit_error) {
                (Some(f), _) => println!("slope {:.4} (rms residual {:.2e}, {} points, c = {})", f.slope, f.residual, f.points, result.log_correction),
                (None, Some(e)) => println!("no fit: {e}"),
                _ => {}
            }
            println!("wrote {}", cfg.out_dir.join("records.csv").display());
            let failed = result.records.iter().any(|r| r.status.starts_with("numeric_error"));
            Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
        Command::Oracle { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let results = oracle_suite(&cfg)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            std::fs::write(cfg.out_dir.join("oracle.json"), serde_json::to_string_pretty(&results)?)?;
            Ok(print_checks(&results))
        }
        Command::Report { input, plot, log_correction } => {
            let rows = read_csv(&input)?;
            let fit = fit_rows(&rows, log_correction);
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.status == "ok" && r.cond_all_ok).map(|r| (r.n, r.norm_ip_hs)).collect();
            let title = rows.first().map_or("empty", |r| r.scenario.as_str());
            std::fs::write(&plot, svg_plot(title, &pts, log_correction, fit.as_ref().ok()))?;
            match fit {
                Ok(f) => println!("slope {:.4} (rms residual {:.2e}, {} points)", f.slope, f.residual, f.points),
                Err(e) => println!("no fit: {e}"),
            }
            println!("wrote {}", plot.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            code(&e)
        }
    }
}
