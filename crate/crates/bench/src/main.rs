use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ippmm::Settings;
use ippmm_bench::{
    failure_rate, performance_profile, records_from_jsonl, records_to_jsonl, run_corpus, solve_file,
    sort_by_solver_time, time_table_csv, BenchmarkRecord, PerformanceProfile, SolverTimes,
};

#[derive(Parser)]
#[command(name = "ippmm", version, about = "Sparse convex QP solver and benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single QPS file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Solve every .qps/.mps file in a directory.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Build a performance profile from result files written by `bench --json`.
    /// Each file is one solver, named after the file stem.
    Profile {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Number of log-spaced θ samples in [1, 1e4].
        #[arg(long, default_value_t = 81)]
        points: usize,
        /// Write the profile CSV here instead of stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveOpts {
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Per-problem time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Skip Ruiz equilibration.
    #[arg(long)]
    no_ruiz: bool,
    /// Use eps_abs = 1e-3, eps_rel = 1e-4 (explicit tolerances still win).
    #[arg(long)]
    low_accuracy: bool,
    /// Write one JSON record per problem (JSON lines).
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the per-problem time table, sorted by time.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl SolveOpts {
    fn settings(&self) -> Result<Settings> {
        let mut s = if self.low_accuracy { Settings::low_accuracy() } else { Settings::default() };
        if let Some(v) = self.eps_abs {
            s.eps_abs = v;
        }
        if let Some(v) = self.eps_rel {
            s.eps_rel = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = self.time_limit {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("--time-limit must be a non-negative number of seconds");
            }
            s.time_limit = Some(Duration::from_secs_f64(v));
        }
        if self.no_ruiz {
            s.ruiz_iters = 0;
        }
        s.validate().context("invalid settings")?;
        Ok(s)
    }

    fn write_outputs(&self, records: &[BenchmarkRecord]) -> Result<()> {
        if let Some(p) = &self.json {
            write(p, &records_to_jsonl(records))?;
        }
        if let Some(p) = &self.csv {
            write(p, &time_table_csv(&sort_by_solver_time(records)))?;
        }
        Ok(())
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_table(records: &[BenchmarkRecord]) {
    println!(
        "{:<16} {:<16} {:>5} {:>10} {:>10} {:>10} {:>11} {:>20}",
        "problem", "status", "iter", "primal", "dual", "gap", "time [s]", "objective"
    );
    for r in records {
        let obj = r.objective.map_or_else(|| "-".to_string(), |o| format!("{o:.10e}"));
        println!(
            "{:<16} {:<16} {:>5} {:>10.2e} {:>10.2e} {:>10.2e} {:>11.3e} {:>20}",
            r.problem,
            r.status,
            r.iterations,
            r.primal_res,
            r.dual_res,
            r.gap,
            r.total_time(),
            obj
        );
        if let Some(n) = &r.note {
            println!("    note: {n}");
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { file, opts } => {
            let settings = opts.settings()?;
            let rec = solve_file(&file, &settings);
            print_table(std::slice::from_ref(&rec));
            opts.write_outputs(std::slice::from_ref(&rec))?;
            Ok(rec.solved())
        }
        Command::Bench { dir, opts } => {
            let settings = opts.settings()?;
            let records = run_corpus(&dir, &settings)?;
            print_table(&records);
            opts.write_outputs(&records)?;
            match failure_rate(&records) {
                Ok(rate) => println!("failure rate: {rate:.2} % of {} problems", records.len()),
                Err(_) => println!("no problems found in {}", dir.display()),
            }
            Ok(records.iter().all(|r| r.solved()))
        }
        Command::Profile { results, points, csv } => {
            let mut solvers = Vec::new();
            for path in &results {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let records =
                    records_from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))?;
                solvers.push(SolverTimes::from_records(&ippmm_bench::problem_name(path), &records));
            }
            let profile = performance_profile(&solvers)?;
            let out = profile.to_csv(&PerformanceProfile::log_grid(points));
            match csv {
                Some(p) => write(&p, &out)?,
                None => print!("{out}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
