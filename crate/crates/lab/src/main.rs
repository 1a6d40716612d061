use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use drwave::config::ExperimentSpec;
use drwave::io::{write_atomic, write_outputs, ExperimentRecord};
use drwave::oracle_suite::oracle_cases;
use drwave::rate_lab::{compare_to_theory, run_experiment};
use drwave::regime::{mask_document, parse_grid, regime_csv, regime_rows, REPORT_SAMPLE_SIZE};
use drwave::{LabError, Result};
use drwave_core::oracle::kernel_moment_check;
use drwave_core::{DyadicResolution, EstimatorKind, SplitScheme};

#[derive(Parser)]
#[command(
    name = "drwave",
    version,
    about = "Haar-projection covariance estimators: rate experiments and regime tables"
)]
struct Cli {
    /// Worker threads for Monte-Carlo work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rate experiment and write `<name>.csv` and `<name>.json`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate achievable rates and tuning flags over a smoothness grid.
    RegimeMap {
        /// `start:stop:count` or a comma list.
        #[arg(long)]
        alpha_grid: String,
        #[arg(long)]
        beta_grid: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Restrict to one estimator (INT, MC, NR, IF).
        #[arg(long)]
        kind: Option<String>,
        /// Restrict to one splitting scheme (none, single, double).
        #[arg(long)]
        scheme: Option<String>,
        /// Sample size for the concrete resolutions.
        #[arg(long, default_value_t = REPORT_SAMPLE_SIZE)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that every oracle's two routes agree.
    OracleCheck,
    /// Check the kernel moment orders at three scalings of `(k1, k2)`.
    KernelCheck {
        #[arg(long)]
        k1: usize,
        #[arg(long)]
        k2: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Masks,
}

fn parse_named<T: std::str::FromStr + Copy>(what: &str, text: Option<&str>, all: &[T]) -> Result<Vec<T>> {
    match text {
        None => Ok(all.to_vec()),
        Some(t) => t.parse().map(|v| vec![v]).map_err(|_| LabError::InvalidSpec(format!("unknown {what} {t:?}"))),
    }
}

fn resolution(k: usize, d: usize) -> Result<DyadicResolution> {
    let r = DyadicResolution::from_size(k as f64, d)?;
    if r.size() != k {
        return Err(LabError::InvalidSpec(format!("{k} is not a power of 2^{d}")));
    }
    Ok(r)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `Ok(true)` when the command's own check passed.
fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let spec = ExperimentSpec::load(&config)?;
            let result = run_experiment(&spec, cli.threads)?;
            let verdicts = compare_to_theory(&spec, &result)?;
            let record = ExperimentRecord::new(spec, result, verdicts);
            let (csv, json) = write_outputs(&out, &record)?;
            println!("wrote {} and {}", csv.display(), json.display());
            match (&record.result.slopes.mse, &record.verdicts.mse) {
                (Some(fit), Some(v)) => println!(
                    "mse slope {:.4} (±{:.4}), expected {:.4}, gap {:.4}, tolerance {}: {}",
                    v.fitted,
                    fit.stderr,
                    v.expected,
                    v.gap,
                    v.tolerance,
                    if v.pass { "PASS" } else { "FAIL" }
                ),
                (Some(fit), None) => println!("mse slope {:.4} (±{:.4}), no theory target", fit.slope, fit.stderr),
                (None, _) => println!("single grid point, no slopes"),
            }
            Ok(record.pass)
        }
        Command::RegimeMap { alpha_grid, beta_grid, d, kind, scheme, n, format, out } => {
            let alphas = parse_grid(&alpha_grid)?;
            let betas = parse_grid(&beta_grid)?;
            let text = match format {
                Format::Masks => {
                    let doc = mask_document(&alphas, &betas, d)?;
                    serde_json::to_string_pretty(&doc)? + "\n"
                }
                Format::Csv | Format::Json => {
                    let kinds = parse_named("estimator", kind.as_deref(), &EstimatorKind::ALL)?;
                    let schemes = parse_named("scheme", scheme.as_deref(), &SplitScheme::ALL)?;
                    let rows = regime_rows(&alphas, &betas, d, &kinds, &schemes, n)?;
                    match format {
                        Format::Csv => regime_csv(&rows),
                        _ => serde_json::to_string_pretty(&rows)? + "\n",
                    }
                }
            };
            emit(out.as_ref(), &text)?;
            Ok(true)
        }
        Command::OracleCheck => {
            let cases = oracle_cases()?;
            for c in &cases {
                println!(
                    "{} {}: closed {:.15e}, cells {:.15e}, gap {:.2e}",
                    if c.agree { "ok  " } else { "FAIL" },
                    c.name,
                    c.closed_form,
                    c.cell_sum,
                    c.relative_gap
                );
            }
            Ok(cases.iter().all(|c| c.agree))
        }
        Command::KernelCheck { k1, k2, d } => {
            let report = kernel_moment_check(resolution(k1, d)?, resolution(k2, d)?)?;
            for row in &report.rows {
                let ratios: Vec<String> = row.ratios.iter().map(|r| format!("{r:.4}")).collect();
                println!(
                    "{} {} ~ {}: sizes {:?}, value/order [{}]",
                    if row.pass { "ok  " } else { "FAIL" },
                    row.name,
                    row.order,
                    row.sizes,
                    ratios.join(", ")
                );
            }
            Ok(report.pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
