//! Command-line entry point for the benchmark harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use randfeas_harness::config::ExperimentConfig;
use randfeas_harness::csvout;
use randfeas_harness::experiment::{run_experiment, ExperimentOutcome};
use randfeas_harness::plot::{render_plot, PlotOptions, PlotSeries};
use randfeas_harness::{grid, reference, verify, HarnessError};

#[derive(Parser)]
#[command(
    name = "randfeas-harness",
    version,
    about = "Benchmark harness for randomized-feasibility solvers",
    after_help = "Exit codes: 0 success, 1 failed verification, 2 config error, \
                  3 all replicas diverged, 4 I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write CSV traces.
    Run {
        config: PathBuf,
        /// Stem of the output files: <stem>.csv and, with emit_replicas,
        /// <stem>_replica_<id>.csv.
        #[arg(long, default_value = "trace")]
        out_stem: String,
    },
    /// Check every schedule family's decay formulas against Monte Carlo and
    /// the series bound; emits a JSON report.
    VerifySchedules {
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 123)]
        seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated stepsize search for the primal-dual baselines.
    GridSearch {
        config: PathBuf,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render aggregate CSV traces as an SVG convergence plot.
    Plot {
        /// Aggregate CSV files produced by `run`.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Log-scale vertical axis (values below 1e-16 are clipped).
        #[arg(long)]
        log_y: bool,
        #[arg(long)]
        title: Option<String>,
    },
    /// One-time long-run solve producing a stored reference optimal value.
    ReferenceSolve {
        config: PathBuf,
        #[arg(long, default_value_t = 200_000)]
        iterations: usize,
        /// Output JSON path; defaults to <output_dir>/reference.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run { config, out_stem } => cmd_run(&config, &out_stem),
        Command::VerifySchedules { draws, seed, out } => cmd_verify(draws, seed, out.as_deref()),
        Command::GridSearch { config, out } => cmd_grid_search(&config, out.as_deref()),
        Command::Plot {
            csv,
            out,
            log_y,
            title,
        } => cmd_plot(&csv, &out, log_y, title),
        Command::ReferenceSolve {
            config,
            iterations,
            out,
        } => cmd_reference(&config, iterations, out.as_deref()),
    }
}

fn print_run_summary(config: &ExperimentConfig, outcome: &ExperimentOutcome) {
    println!(
        "problem: {} | solver: {} | T = {}",
        reference::problem_fingerprint(config),
        config.solver.name(),
        config.iterations
    );
    match outcome.f_star {
        Some(f_star) => println!("gap reference f* = {f_star:.12e}"),
        None => println!("no optimal-value reference; gap column reports raw objective values"),
    }
    println!(
        "replicas: {} finished, {} diverged",
        outcome.survivors.len(),
        outcome.diverged.len()
    );
    for diverged in &outcome.diverged {
        eprintln!(
            "warning: replica {} diverged at iteration {} ({}); excluded from aggregates",
            diverged.id, diverged.iteration, diverged.reason
        );
    }
    if let Some(last) = outcome.aggregate.last() {
        println!(
            "final logged k = {}: mean gap {:.6e} (std {:.3e}), mean infeasibility {:.6e}",
            last.k, last.mean_gap, last.std_gap, last.mean_infeas
        );
    }
    let test_errors: Vec<(usize, f64)> = outcome
        .survivors
        .iter()
        .filter_map(|run| run.test_error.map(|e| (run.id, e)))
        .collect();
    if !test_errors.is_empty() {
        let mean = test_errors.iter().map(|(_, e)| e).sum::<f64>() / test_errors.len() as f64;
        let listed: Vec<String> = test_errors
            .iter()
            .map(|(id, e)| format!("replica {id}: {e:.4}"))
            .collect();
        println!("held-out error: mean {mean:.4} ({})", listed.join(", "));
    }
}

fn cmd_run(config_path: &Path, out_stem: &str) -> Result<ExitCode, HarnessError> {
    let config = ExperimentConfig::load(config_path)?;
    let outcome = run_experiment(&config)?;
    let out_dir = config.output_dir();

    let aggregate_path = out_dir.join(format!("{out_stem}.csv"));
    csvout::write_text(&aggregate_path, &csvout::aggregate_csv(&outcome.aggregate))?;
    print_run_summary(&config, &outcome);
    println!("wrote {}", aggregate_path.display());

    if config.emit_replicas {
        for run in &outcome.survivors {
            let path = out_dir.join(format!("{out_stem}_replica_{}.csv", run.id));
            csvout::write_text(&path, &csvout::replica_csv(&outcome.replica_rows(run)))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(draws: usize, seed: u64, out: Option<&Path>) -> Result<ExitCode, HarnessError> {
    let report = verify::run_verification(draws, seed)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Config {
        message: format!("serializing report: {e}"),
    })?;
    match out {
        Some(path) => {
            csvout::write_text(path, &format!("{json}\n"))?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    let failed_mc = report.monte_carlo.iter().filter(|c| !c.pass).count();
    let failed_sums = report.partial_sums.iter().filter(|c| !c.pass).count();
    eprintln!(
        "monte carlo: {}/{} pass; partial sums: {}/{} pass",
        report.monte_carlo.len() - failed_mc,
        report.monte_carlo.len(),
        report.partial_sums.len() - failed_sums,
        report.partial_sums.len()
    );
    if report.all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_grid_search(config_path: &Path, out: Option<&Path>) -> Result<ExitCode, HarnessError> {
    let config = ExperimentConfig::load(config_path)?;
    let result = grid::grid_search(&config)?;
    let json = serde_json::to_string_pretty(&result).map_err(|e| HarnessError::Config {
        message: format!("serializing grid result: {e}"),
    })?;
    match out {
        Some(path) => {
            csvout::write_text(path, &format!("{json}\n"))?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    eprintln!(
        "best pair: eta_primal = {}, eta_dual = {} (validation error {:.4})",
        result.best_eta_primal, result.best_eta_dual, result.best_error
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(
    csv_paths: &[PathBuf],
    out: &Path,
    log_y: bool,
    title: Option<String>,
) -> Result<ExitCode, HarnessError> {
    let series: Vec<PlotSeries> = csv_paths
        .iter()
        .map(|path| {
            let rows = csvout::read_aggregate_csv(path)?;
            let label = path
                .file_stem()
                .map(|stem| stem.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Ok(PlotSeries { label, rows })
        })
        .collect::<Result<_, HarnessError>>()?;
    let svg = render_plot(&series, &PlotOptions { log_y, title })?;
    csvout::write_text(out, &svg)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_reference(
    config_path: &Path,
    iterations: usize,
    out: Option<&Path>,
) -> Result<ExitCode, HarnessError> {
    let config = ExperimentConfig::load(config_path)?;
    let value = reference::reference_solve_for_config(&config, iterations)?;
    let path = match out {
        Some(path) => path.to_path_buf(),
        None => config.output_dir().join("reference.json"),
    };
    reference::save_reference(&path, &value)?;
    println!(
        "reference f* = {:.12e} (violation {:.3e}, {} iterations)",
        value.f_star, value.infeasibility, value.iterations
    );
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
