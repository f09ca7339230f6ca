use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use shubin_cli::config::RunConfig;
use shubin_cli::run::{emit, run, Emit};
use shubin_cli::CliError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EmitArg {
    Json,
    Csv,
    All,
}

/// Resolvent trace expansion of an elliptic Shubin operator.
///
/// Exit status: 0 on success, 2 on an invalid configuration, 1 when the
/// computation fails (ellipticity rejection, quadrature non-convergence, i/o).
/// Set RAYON_NUM_THREADS to bound the worker pool.
#[derive(Debug, Parser)]
#[command(name = "shubin", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    emit: EmitArg,
    /// Seed for the Monte-Carlo cross-check.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    verbose: bool,
}

fn main_inner(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    let config = RunConfig::from_json(&text)?;
    let (result, timing) = run(&config, args.seed, args.verbose)?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&config.outputs.dir));
    let what = match args.emit {
        EmitArg::Json => Emit::Json,
        EmitArg::Csv => Emit::Csv,
        EmitArg::All => Emit::All,
    };
    let written = emit(&result, &timing, &dir, what)?;
    if let Some(report) = &result.oracle {
        eprintln!("oracle: {}", if report.pass { "PASS" } else { "FAIL" });
        for row in &report.rows {
            eprintln!(
                "  {} λ^{}: engine {:+.12e} oracle {} |error| {:.2e} tol {:.0e} {}",
                row.label,
                row.lambda_exponent,
                row.engine.re,
                row.oracle_exact,
                row.abs_error,
                row.tolerance,
                if row.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    if args.verbose {
        for p in written {
            eprintln!("[shubin] wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shubin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
