//! Benchmark harness: run QPS corpora, aggregate failure rates, build
//! Dolan-Moré performance profiles and per-problem time tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ippmm::{check_termination, parse_qps, Settings, SolveStatus, SolverInstance};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("no records to aggregate")]
    Empty,
    #[error("solver '{solver}' has a different problem list than '{reference}'")]
    MismatchedProblems { solver: String, reference: String },
    #[error("no solvers given")]
    NoSolvers,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Outcome of one problem. Times are in seconds and measured inside the
/// library; residuals are recomputed from the returned iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub problem: String,
    pub status: String,
    pub solve_time: f64,
    pub setup_time: f64,
    pub iterations: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
    /// Objective including the constant from the file.
    #[serde(default)]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BenchmarkRecord {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Solved.as_str()
    }

    /// Setup plus solve time.
    pub fn total_time(&self) -> f64 {
        self.setup_time + self.solve_time
    }

    fn failure(problem: String, note: String) -> Self {
        BenchmarkRecord {
            problem,
            status: SolveStatus::NumericalError.as_str().to_string(),
            solve_time: 0.0,
            setup_time: 0.0,
            iterations: 0,
            primal_res: f64::INFINITY,
            dual_res: f64::INFINITY,
            gap: f64::INFINITY,
            objective: None,
            note: Some(note),
        }
    }
}

/// Problem name used in records: the file stem.
pub fn problem_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Solves one QPS text. Never fails: parse and setup errors become a
/// `numerical_error` record with a note.
pub fn solve_text(name: &str, text: &str, settings: &Settings) -> BenchmarkRecord {
    let file = match parse_qps(text) {
        Ok(f) => f,
        Err(e) => return BenchmarkRecord::failure(name.to_string(), format!("parse: {e}")),
    };
    let problem = match file.to_problem() {
        Ok(p) => p,
        Err(e) => return BenchmarkRecord::failure(name.to_string(), format!("conversion: {e}")),
    };
    let start = Instant::now();
    let mut inst = match SolverInstance::setup(&problem, settings) {
        Ok(i) => i,
        Err(e) => return BenchmarkRecord::failure(name.to_string(), format!("setup: {e}")),
    };
    let setup_wall = start.elapsed();
    let res = inst.solve();
    let info = check_termination(&problem, &res.iterate, settings.eps_abs, settings.eps_rel);
    let mut status = res.status;
    let mut note = None;
    if status == SolveStatus::Solved && !info.converged {
        status = SolveStatus::NumericalError;
        note = Some("recomputed residuals exceed the tolerances".to_string());
    }
    BenchmarkRecord {
        problem: name.to_string(),
        status: status.as_str().to_string(),
        solve_time: res.solve_time.as_secs_f64(),
        setup_time: res.setup_time.max(setup_wall).as_secs_f64(),
        iterations: res.iterations,
        primal_res: info.primal_res,
        dual_res: info.dual_res,
        gap: info.gap,
        objective: Some(info.objective + file.objective_constant()),
        note,
    }
}

pub fn solve_file(path: &Path, settings: &Settings) -> BenchmarkRecord {
    let name = problem_name(path);
    match std::fs::read_to_string(path) {
        Ok(text) => solve_text(&name, &text, settings),
        Err(e) => BenchmarkRecord::failure(name, format!("read: {e}")),
    }
}

/// QPS/MPS files of `dir` (by extension, case-insensitive), sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |source| HarnessError::Io { path: dir.to_path_buf(), source };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase());
        if path.is_file() && matches!(ext.as_deref(), Some("qps" | "mps")) {
            files.push(path);
        }
    }
    files.sort_by_key(|p| problem_name(p));
    Ok(files)
}

/// Solves every problem in `dir` in lexicographic order.
pub fn run_corpus(dir: &Path, settings: &Settings) -> Result<Vec<BenchmarkRecord>, HarnessError> {
    Ok(corpus_files(dir)?.iter().map(|f| solve_file(f, settings)).collect())
}

/// Percentage of records not solved, rounded to two decimals.
pub fn failure_rate(records: &[BenchmarkRecord]) -> Result<f64, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Empty);
    }
    let failed = records.iter().filter(|r| !r.solved()).count();
    Ok(round2(100.0 * failed as f64 / records.len() as f64))
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Per-problem times of one solver; `None` marks a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTimes {
    pub solver: String,
    pub times: BTreeMap<String, Option<f64>>,
}

impl SolverTimes {
    pub fn from_records(solver: &str, records: &[BenchmarkRecord]) -> Self {
        SolverTimes {
            solver: solver.to_string(),
            times: records
                .iter()
                .map(|r| (r.problem.clone(), r.solved().then(|| r.total_time())))
                .collect(),
        }
    }
}

/// Dolan-Moré performance profile: for every solver the ratio of its time
/// to the best time on each problem (infinite when it failed).
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub solvers: Vec<String>,
    pub ratios: Vec<Vec<f64>>,
}

/// Builds the profile. All solvers must report the same problem list.
pub fn performance_profile(results: &[SolverTimes]) -> Result<PerformanceProfile, HarnessError> {
    let first = results.first().ok_or(HarnessError::NoSolvers)?;
    for r in &results[1..] {
        if !r.times.keys().eq(first.times.keys()) {
            return Err(HarnessError::MismatchedProblems {
                solver: r.solver.clone(),
                reference: first.solver.clone(),
            });
        }
    }
    let mut ratios = vec![Vec::with_capacity(first.times.len()); results.len()];
    for prob in first.times.keys() {
        let best = results
            .iter()
            .filter_map(|r| r.times[prob])
            .fold(f64::INFINITY, f64::min);
        for (s, r) in results.iter().enumerate() {
            let ratio = match r.times[prob] {
                Some(t) if best > 0.0 => t / best,
                // a zero best time makes every success tie for first
                Some(_) => 1.0,
                None => f64::INFINITY,
            };
            ratios[s].push(ratio);
        }
    }
    Ok(PerformanceProfile {
        solvers: results.iter().map(|r| r.solver.clone()).collect(),
        ratios,
    })
}

impl PerformanceProfile {
    /// Fraction of problems solver `s` solved within `theta` times the best.
    pub fn value(&self, s: usize, theta: f64) -> f64 {
        let r = &self.ratios[s];
        if r.is_empty() {
            return 0.0;
        }
        r.iter().filter(|&&q| q <= theta).count() as f64 / r.len() as f64
    }

    /// `points` values of θ spaced logarithmically over `[1, 10⁴]`.
    pub fn log_grid(points: usize) -> Vec<f64> {
        match points {
            0 => Vec::new(),
            1 => vec![1.0],
            _ => (0..points).map(|k| 10f64.powf(4.0 * k as f64 / (points - 1) as f64)).collect(),
        }
    }

    /// CSV with a `theta` column followed by one column per solver.
    pub fn to_csv(&self, thetas: &[f64]) -> String {
        let mut out = String::from("theta");
        for s in &self.solvers {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for &t in thetas {
            let _ = write!(out, "{t}");
            for s in 0..self.solvers.len() {
                let _ = write!(out, ",{}", self.value(s, t));
            }
            out.push('\n');
        }
        out
    }
}

/// One row of the per-problem time table.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRow {
    pub problem: String,
    /// Setup plus solve time; infinite for failures.
    pub time: f64,
    pub status: String,
}

/// Problems ordered by ascending time, ties by name, failures last.
pub fn sort_by_solver_time(records: &[BenchmarkRecord]) -> Vec<TimeRow> {
    let mut rows: Vec<TimeRow> = records
        .iter()
        .map(|r| TimeRow {
            problem: r.problem.clone(),
            time: if r.solved() { r.total_time() } else { f64::INFINITY },
            status: r.status.clone(),
        })
        .collect();
    rows.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.problem.cmp(&b.problem)));
    rows
}

pub fn time_table_csv(rows: &[TimeRow]) -> String {
    let mut out = String::from("rank,problem,time,status\n");
    for (k, r) in rows.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", k + 1, r.problem, r.time, r.status);
    }
    out
}

/// One JSON object per line.
pub fn records_to_jsonl(records: &[BenchmarkRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<BenchmarkRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
