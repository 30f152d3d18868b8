#![allow(non_snake_case)]
//! Interior-point proximal method of multipliers.
//!
//! Every iteration takes one Mehrotra predictor-corrector Newton step on the
//! barrier-smoothed proximal subproblem around the current estimates
//! `(ξ, λ, ν)`, then decides whether to move the estimates and how far to
//! shrink the penalties `(δ, ρ)`.
//!
//! The instance follows a setup / update / solve lifecycle. All memory is
//! acquired in [`SolverInstance::setup`]; [`SolverInstance::update`] and
//! [`SolverInstance::solve`] work in the buffers allocated there.

pub mod init;
pub mod kkt;
pub mod proximal;
pub mod settings;
pub mod steps;
pub mod termination;

use std::time::{Duration, Instant};

use crate::error::StructureError;
use crate::precond::{equilibrate_in_place, Equilibration, RuizWork};
use crate::problem::{inf_norm, Iterate, QpProblem};
use crate::sparse::CscMatrix;

pub use init::shift_to_interior;
pub use kkt::{Direction, KktError, KktSystem};
pub use proximal::{complementarity_reduction, update_estimates, EstimateUpdate, ProximalState};
pub use settings::Settings;
pub use steps::{centering_parameter, corrector_rhs, step_size};
pub use termination::{check_termination, TerminationInfo};

use termination::TerminationWork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Solved,
    IterationLimit,
    TimeLimit,
    NumericalError,
    /// `solve` has not been called yet.
    Unsolved,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::NumericalError => "numerical_error",
            SolveStatus::Unsolved => "unsolved",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "solved" => SolveStatus::Solved,
            "iteration_limit" => SolveStatus::IterationLimit,
            "time_limit" => SolveStatus::TimeLimit,
            "numerical_error" => SolveStatus::NumericalError,
            "unsolved" => SolveStatus::Unsolved,
            _ => return Err(format!("unknown status '{s}'")),
        })
    }
}

/// Outcome of [`SolverInstance::solve`]. The iterate refers to the problem
/// as given to setup, with box bounds as trailing inequality rows (upper
/// bounds first, then lower bounds).
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub iterate: Iterate,
    pub primal_res: f64,
    pub dual_res: f64,
    pub duality_gap: f64,
    /// `½xᵀPx + cᵀx`, without any constant offset.
    pub objective: f64,
    pub iterations: usize,
    /// Total number of regularization retries over the run.
    pub reg_retries: usize,
    pub setup_time: Duration,
    pub solve_time: Duration,
}

/// New values for an already set-up problem. Omitted fields keep their values.
/// Matrices must have the same sparsity pattern as at setup, and bounds must
/// be finite exactly where they were.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProblemUpdate<'a> {
    pub P: Option<&'a CscMatrix>,
    pub c: Option<&'a [f64]>,
    pub A: Option<&'a CscMatrix>,
    pub b: Option<&'a [f64]>,
    pub G: Option<&'a CscMatrix>,
    pub h: Option<&'a [f64]>,
    pub x_lb: Option<&'a [f64]>,
    pub x_ub: Option<&'a [f64]>,
}

/// Snapshot of one iteration, in the equilibrated coordinates the solver
/// works in. Handed to the observer of [`SolverInstance::solve_observed`].
#[derive(Debug)]
pub struct IterationView<'a> {
    pub iteration: usize,
    /// Iterate before the step.
    pub current: &'a Iterate,
    /// Iterate after the step.
    pub next: &'a Iterate,
    /// Residual blocks `rˣ, rʸ, rᶻ` of the Newton system.
    pub rx: &'a [f64],
    pub ry: &'a [f64],
    pub rz: &'a [f64],
    /// Complementarity right-hand side of the corrector solve.
    pub rs: &'a [f64],
    pub affine: &'a Direction,
    pub corrector: &'a Direction,
    pub alpha_p: f64,
    pub alpha_d: f64,
    pub sigma: f64,
    pub mu: f64,
    /// Penalties entering the residuals.
    pub delta: f64,
    pub rho: f64,
    /// Penalties the factorization actually used (differ after retries).
    pub factor_delta: f64,
    pub factor_rho: f64,
    /// Penalties after the estimate update.
    pub delta_next: f64,
    pub rho_next: f64,
}

#[derive(Debug, Clone)]
struct Workspace {
    cur: Iterate,
    prev: Iterate,
    unscaled: Iterate,
    best: Iterate,
    aff: Direction,
    dir: Direction,
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rs: Vec<f64>,
    w: Vec<f64>,
    tmp_n: Vec<f64>,
    tmp_p: Vec<f64>,
    tmp_m: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, p: usize, m: usize) -> Self {
        Workspace {
            cur: Iterate::zeros(n, p, m),
            prev: Iterate::zeros(n, p, m),
            unscaled: Iterate::zeros(n, p, m),
            best: Iterate::zeros(n, p, m),
            aff: Direction::zeros(n, p, m),
            dir: Direction::zeros(n, p, m),
            rx: vec![0.0; n],
            ry: vec![0.0; p],
            rz: vec![0.0; m],
            rs: vec![0.0; m],
            w: vec![0.0; m],
            tmp_n: vec![0.0; n],
            tmp_p: vec![0.0; p],
            tmp_m: vec![0.0; m],
        }
    }
}

/// Box rows appended to `G`: variable index and sign (`+1` upper, `-1` lower).
#[derive(Debug, Clone)]
struct BoxRows {
    rows: Vec<(usize, f64)>,
    lb_finite: Vec<bool>,
    ub_finite: Vec<bool>,
    has_lb: bool,
    has_ub: bool,
}

/// A set-up problem ready to be solved, updated and re-solved.
#[derive(Debug, Clone)]
pub struct SolverInstance {
    settings: Settings,
    m_user: usize,
    user_G: CscMatrix,
    g_user_map: Vec<usize>,
    boxes: BoxRows,
    original: QpProblem,
    scaled: QpProblem,
    equil: Equilibration,
    ruiz_work: RuizWork,
    kkt: KktSystem,
    prox: ProximalState,
    ws: Workspace,
    term_work: TerminationWork,
    result: SolveResult,
    setup_time: Duration,
}

impl SolverInstance {
    /// Validates `problem`, converts box bounds to inequality rows,
    /// equilibrates, assembles the KKT pattern and runs the ordering and
    /// symbolic factorization.
    pub fn setup(problem: &QpProblem, settings: &Settings) -> Result<Self, StructureError> {
        let start = Instant::now();
        settings.validate()?;
        problem.validate()?;
        let n = problem.n();
        let original = problem.with_box_as_inequalities();
        let (p, m) = (original.p(), original.m());
        let m_user = problem.m();

        let lb_finite: Vec<bool> = match &problem.x_lb {
            Some(lb) => lb.iter().map(|v| v.is_finite()).collect(),
            None => vec![false; n],
        };
        let ub_finite: Vec<bool> = match &problem.x_ub {
            Some(ub) => ub.iter().map(|v| v.is_finite()).collect(),
            None => vec![false; n],
        };
        let mut rows = Vec::new();
        rows.extend((0..n).filter(|&i| ub_finite[i]).map(|i| (i, 1.0)));
        rows.extend((0..n).filter(|&i| lb_finite[i]).map(|i| (i, -1.0)));
        let boxes = BoxRows {
            rows,
            lb_finite,
            ub_finite,
            has_lb: problem.x_lb.is_some(),
            has_ub: problem.x_ub.is_some(),
        };

        // user G entries come first in each column of the stacked G
        let mut g_user_map = Vec::with_capacity(problem.G.nnz());
        for j in 0..n {
            let base = original.G.col_ptr[j];
            let cnt = problem.G.col_ptr[j + 1] - problem.G.col_ptr[j];
            g_user_map.extend(base..base + cnt);
        }

        let mut scaled = original.clone();
        let mut equil = Equilibration::identity(n, p, m);
        let mut ruiz_work = RuizWork::new(n, p, m);
        if settings.ruiz_iters > 0 {
            equilibrate_in_place(&mut scaled, &mut equil, &mut ruiz_work, settings.ruiz_iters, settings.ruiz_tol);
        }
        let kkt = KktSystem::new(&scaled)?;

        let mut inst = SolverInstance {
            settings: settings.clone(),
            m_user,
            user_G: problem.G.clone(),
            g_user_map,
            boxes,
            prox: ProximalState::new(n, p, m, settings.delta0, settings.rho0),
            ws: Workspace::new(n, p, m),
            term_work: TerminationWork::new(n, p, m),
            result: SolveResult {
                status: SolveStatus::Unsolved,
                iterate: Iterate::zeros(n, p, m),
                primal_res: f64::INFINITY,
                dual_res: f64::INFINITY,
                duality_gap: f64::INFINITY,
                objective: f64::NAN,
                iterations: 0,
                reg_retries: 0,
                setup_time: Duration::ZERO,
                solve_time: Duration::ZERO,
            },
            original,
            scaled,
            equil,
            ruiz_work,
            kkt,
            setup_time: Duration::ZERO,
        };
        inst.setup_time = start.elapsed();
        inst.result.setup_time = inst.setup_time;
        Ok(inst)
    }

    /// Replaces problem values, keeping every pattern. On error the instance
    /// is left untouched.
    pub fn update(&mut self, upd: &ProblemUpdate<'_>) -> Result<(), StructureError> {
        let start = Instant::now();
        self.validate_update(upd)?;
        let n = self.original.n();
        if let Some(P) = upd.P {
            self.original.P.values.copy_from_slice(&P.values);
        }
        if let Some(c) = upd.c {
            self.original.c.copy_from_slice(c);
        }
        if let Some(A) = upd.A {
            self.original.A.values.copy_from_slice(&A.values);
        }
        if let Some(b) = upd.b {
            self.original.b.copy_from_slice(b);
        }
        if let Some(G) = upd.G {
            for (k, &dst) in self.g_user_map.iter().enumerate() {
                self.original.G.values[dst] = G.values[k];
            }
            self.user_G.values.copy_from_slice(&G.values);
        }
        if let Some(h) = upd.h {
            self.original.h[..self.m_user].copy_from_slice(h);
        }
        if upd.x_lb.is_some() || upd.x_ub.is_some() {
            for (r, &(i, sign)) in self.boxes.rows.iter().enumerate() {
                let row = self.m_user + r;
                if sign > 0.0 {
                    if let Some(ub) = upd.x_ub {
                        self.original.h[row] = ub[i];
                    }
                } else if let Some(lb) = upd.x_lb {
                    self.original.h[row] = -lb[i];
                }
            }
        }
        debug_assert_eq!(self.original.n(), n);

        copy_values(&self.original, &mut self.scaled);
        if self.settings.ruiz_iters > 0 {
            equilibrate_in_place(
                &mut self.scaled,
                &mut self.equil,
                &mut self.ruiz_work,
                self.settings.ruiz_iters,
                self.settings.ruiz_tol,
            );
        }
        self.kkt.load_data(&self.scaled);
        self.setup_time = start.elapsed();
        self.result.setup_time = self.setup_time;
        Ok(())
    }

    fn validate_update(&self, upd: &ProblemUpdate<'_>) -> Result<(), StructureError> {
        let n = self.original.n();
        let vec_ok = |what: &'static str, v: Option<&[f64]>, len: usize| -> Result<(), StructureError> {
            if let Some(v) = v {
                if v.len() != len {
                    return Err(StructureError::Dimension { what, expected: len, got: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(StructureError::NonFinite { what });
                }
            }
            Ok(())
        };
        let mat_ok = |what: &'static str, new: Option<&CscMatrix>, old: &CscMatrix| -> Result<(), StructureError> {
            if let Some(m) = new {
                if !m.same_pattern(old) {
                    return Err(StructureError::PatternMismatch { what });
                }
                if m.values.len() != old.values.len() || m.values.iter().any(|x| !x.is_finite()) {
                    return Err(StructureError::NonFinite { what });
                }
            }
            Ok(())
        };
        mat_ok("P", upd.P, &self.original.P)?;
        mat_ok("A", upd.A, &self.original.A)?;
        mat_ok("G", upd.G, &self.user_G)?;
        vec_ok("c", upd.c, n)?;
        vec_ok("b", upd.b, self.original.p())?;
        vec_ok("h", upd.h, self.m_user)?;
        let bound_ok = |what: &'static str, v: Option<&[f64]>, present: bool, finite: &[bool]| {
            if let Some(v) = v {
                if !present {
                    return Err(StructureError::PatternMismatch { what });
                }
                if v.len() != n {
                    return Err(StructureError::Dimension { what, expected: n, got: v.len() });
                }
                if v.iter().zip(finite).any(|(x, &f)| x.is_finite() != f || x.is_nan()) {
                    return Err(StructureError::PatternMismatch { what });
                }
            }
            Ok(())
        };
        bound_ok("x_lb", upd.x_lb, self.boxes.has_lb, &self.boxes.lb_finite)?;
        bound_ok("x_ub", upd.x_ub, self.boxes.has_ub, &self.boxes.ub_finite)?;
        // new bounds must stay ordered against the (possibly unchanged) other side
        if upd.x_lb.is_some() || upd.x_ub.is_some() {
            for &(i, sign) in &self.boxes.rows {
                if sign < 0.0 || !self.boxes.lb_finite[i] {
                    continue;
                }
                let row_u = self.boxes.rows.iter().position(|&(k, s)| k == i && s > 0.0).unwrap();
                let u = upd.x_ub.map_or(self.original.h[self.m_user + row_u], |u| u[i]);
                let row_l = self.boxes.rows.iter().position(|&(k, s)| k == i && s < 0.0).unwrap();
                let l = upd.x_lb.map_or(-self.original.h[self.m_user + row_l], |l| l[i]);
                if l > u {
                    return Err(StructureError::InconsistentBounds { index: i });
                }
            }
        }
        Ok(())
    }

    /// Runs the solver and returns the result stored in the instance.
    pub fn solve(&mut self) -> &SolveResult {
        self.solve_observed(|_| {})
    }

    /// Like [`Self::solve`], calling `observer` after every iteration.
    pub fn solve_observed<F: FnMut(&IterationView<'_>)>(&mut self, mut observer: F) -> &SolveResult {
        let start = Instant::now();
        let st = self.settings.clone();
        let mut retries_total = 0usize;
        let mut iterations = 0usize;

        self.prox.delta = st.delta0;
        self.prox.rho = st.rho0;
        let status = match self.start() {
            Ok(r) => {
                retries_total += r;
                let mut best_merit = f64::INFINITY;
                let mut best_info = TerminationInfo::default();
                let (mut p_cur, mut d_cur) = self.scaled_residual_norms();
                let status = loop {
                    self.equil
                        .unscale_iterate(&self.ws.cur, &mut self.ws.unscaled)
                        .expect("workspace dimensions are fixed at setup");
                    let info = termination::evaluate(
                        &self.original,
                        &self.ws.unscaled,
                        st.eps_abs,
                        st.eps_rel,
                        &mut self.term_work,
                    );
                    let merit = info.merit();
                    if !(merit >= best_merit) {
                        best_merit = merit;
                        best_info = info;
                        self.ws.best.copy_from(&self.ws.unscaled);
                    }
                    if let Some(limit) = st.time_limit {
                        if start.elapsed() >= limit {
                            break SolveStatus::TimeLimit;
                        }
                    }
                    if info.converged {
                        best_info = info;
                        self.ws.best.copy_from(&self.ws.unscaled);
                        break SolveStatus::Solved;
                    }
                    if iterations >= st.max_iter {
                        break SolveStatus::IterationLimit;
                    }
                    match self.step(iterations, &mut observer) {
                        Ok(r) => retries_total += r,
                        Err(_) => break SolveStatus::NumericalError,
                    }
                    iterations += 1;
                    let (p_next, d_next) = self.scaled_residual_norms();
                    if !(p_next.is_finite() && d_next.is_finite()) {
                        break SolveStatus::NumericalError;
                    }
                    let (delta_before, rho_before) = (self.prox.delta, self.prox.rho);
                    update_estimates(
                        &self.ws.prev,
                        &self.ws.cur,
                        &mut self.prox,
                        p_cur,
                        p_next,
                        d_cur,
                        d_next,
                        st.delta_min,
                        st.rho_min,
                    );
                    debug_assert!(self.prox.delta <= delta_before.max(st.delta_min));
                    debug_assert!(self.prox.rho <= rho_before.max(st.rho_min));
                    p_cur = p_next;
                    d_cur = d_next;
                };
                self.result.primal_res = best_info.primal_res;
                self.result.dual_res = best_info.dual_res;
                self.result.duality_gap = best_info.gap;
                self.result.objective = best_info.objective;
                self.result.iterate.copy_from(&self.ws.best);
                status
            }
            Err(_) => {
                self.result.iterate.x.iter_mut().for_each(|v| *v = 0.0);
                self.result.iterate.y.iter_mut().for_each(|v| *v = 0.0);
                self.result.iterate.s.iter_mut().for_each(|v| *v = 1.0);
                self.result.iterate.z.iter_mut().for_each(|v| *v = 1.0);
                self.result.primal_res = f64::INFINITY;
                self.result.dual_res = f64::INFINITY;
                self.result.duality_gap = f64::INFINITY;
                self.result.objective = f64::NAN;
                SolveStatus::NumericalError
            }
        };
        self.result.status = status;
        self.result.iterations = iterations;
        self.result.reg_retries = retries_total;
        self.result.setup_time = self.setup_time;
        self.result.solve_time = start.elapsed();
        &self.result
    }

    /// Starting iterate and proximal state, in equilibrated coordinates.
    /// This is the point `solve` starts from.
    pub fn initialize(&mut self) -> Result<(Iterate, ProximalState), KktError> {
        self.prox.delta = self.settings.delta0;
        self.prox.rho = self.settings.rho0;
        self.start()?;
        Ok((self.ws.cur.clone(), self.prox.clone()))
    }

    /// Computes the starting iterate and proximal estimates in the
    /// equilibrated space. Returns the number of factorization retries.
    fn start(&mut self) -> Result<usize, KktError> {
        let st = &self.settings;
        let (n, p, m) = (self.scaled.n(), self.scaled.p(), self.scaled.m());
        let ws = &mut self.ws;
        ws.w.iter_mut().for_each(|v| *v = 1.0);
        let retries = self
            .kkt
            .factorize(st.delta0, st.rho0, &ws.w, st.reg_retry_factor, st.reg_retry_max)?;
        // right-hand side [-c; b; h] through the Newton entry point with rs = 0, z = 1
        for j in 0..n {
            ws.rx[j] = -self.scaled.c[j];
        }
        ws.ry.copy_from_slice(&self.scaled.b);
        ws.rz.copy_from_slice(&self.scaled.h);
        ws.rs.iter_mut().for_each(|v| *v = 0.0);
        ws.tmp_m.iter_mut().for_each(|v| *v = 1.0);
        self.kkt
            .solve_newton(&ws.rx, &ws.ry, &ws.rz, &ws.rs, &ws.tmp_m, &ws.tmp_m, &mut ws.dir)?;
        ws.cur.x.copy_from_slice(&ws.dir.dx);
        ws.cur.y.copy_from_slice(&ws.dir.dy);
        for i in 0..m {
            ws.cur.z[i] = ws.dir.dz[i];
            ws.cur.s[i] = -ws.dir.dz[i];
        }
        shift_to_interior(&mut ws.cur.s, &mut ws.cur.z);
        debug_assert!(ws.cur.x.len() == n && ws.cur.y.len() == p);
        self.prox.xi.copy_from_slice(&ws.cur.x);
        self.prox.lambda.copy_from_slice(&ws.cur.y);
        self.prox.nu.copy_from_slice(&ws.cur.z);
        Ok(retries)
    }

    /// One predictor-corrector step from `ws.cur`; the old iterate is kept in `ws.prev`.
    fn step<F: FnMut(&IterationView<'_>)>(&mut self, iteration: usize, observer: &mut F) -> Result<usize, KktError> {
        let st = &self.settings;
        let data = &self.scaled;
        let prox = &self.prox;
        let ws = &mut self.ws;
        let (delta, rho) = (prox.delta, prox.rho);
        let m = data.m();

        // rˣ = -(Px + c + ρ(x - ξ) + Aᵀy + Gᵀz)
        ws.rx.iter_mut().for_each(|v| *v = 0.0);
        data.P.symv_upper(-1.0, &ws.cur.x, &mut ws.rx);
        data.A.gemv_t(-1.0, &ws.cur.y, &mut ws.rx);
        data.G.gemv_t(-1.0, &ws.cur.z, &mut ws.rx);
        for j in 0..ws.rx.len() {
            ws.rx[j] -= data.c[j] + rho * (ws.cur.x[j] - prox.xi[j]);
        }
        // rʸ = -(Ax + δ(λ - y) - b)
        ws.ry.iter_mut().for_each(|v| *v = 0.0);
        data.A.gemv(-1.0, &ws.cur.x, &mut ws.ry);
        for i in 0..ws.ry.len() {
            ws.ry[i] += data.b[i] - delta * (prox.lambda[i] - ws.cur.y[i]);
        }
        // rᶻ = -(Gx + δ(ν - z) - h + s)
        ws.rz.iter_mut().for_each(|v| *v = 0.0);
        data.G.gemv(-1.0, &ws.cur.x, &mut ws.rz);
        for i in 0..m {
            ws.rz[i] += data.h[i] - ws.cur.s[i] - delta * (prox.nu[i] - ws.cur.z[i]);
            ws.w[i] = ws.cur.s[i] / ws.cur.z[i];
        }

        let retries = self
            .kkt
            .factorize(delta, rho, &ws.w, st.reg_retry_factor, st.reg_retry_max)?;
        let (factor_delta, factor_rho) = self.kkt.used_regularization();

        // predictor
        for i in 0..m {
            ws.rs[i] = -ws.cur.s[i] * ws.cur.z[i];
        }
        self.kkt
            .solve_newton(&ws.rx, &ws.ry, &ws.rz, &ws.rs, &ws.cur.s, &ws.cur.z, &mut ws.aff)?;
        let alpha_p_aff = step_size(&ws.cur.s, &ws.aff.ds, st.tau);
        let alpha_d_aff = step_size(&ws.cur.z, &ws.aff.dz, st.tau);
        let (sigma, mu) = centering_parameter(&ws.cur.s, &ws.cur.z, &ws.aff.ds, &ws.aff.dz, alpha_p_aff, alpha_d_aff);

        // corrector + centering
        corrector_rhs(&ws.cur.s, &ws.cur.z, &ws.aff.ds, &ws.aff.dz, sigma * mu, &mut ws.rs);
        self.kkt
            .solve_newton(&ws.rx, &ws.ry, &ws.rz, &ws.rs, &ws.cur.s, &ws.cur.z, &mut ws.dir)?;
        let alpha_p = step_size(&ws.cur.s, &ws.dir.ds, st.tau);
        let alpha_d = step_size(&ws.cur.z, &ws.dir.dz, st.tau);

        ws.prev.copy_from(&ws.cur);
        for j in 0..ws.cur.x.len() {
            ws.cur.x[j] += alpha_p * ws.dir.dx[j];
        }
        for i in 0..m {
            ws.cur.s[i] += alpha_p * ws.dir.ds[i];
            ws.cur.z[i] += alpha_d * ws.dir.dz[i];
        }
        for i in 0..ws.cur.y.len() {
            ws.cur.y[i] += alpha_d * ws.dir.dy[i];
        }

        // Penalties after the estimate update, for the observer.
        let (delta_next, rho_next) = preview_penalties(ws, data, prox, st);
        observer(&IterationView {
            iteration,
            current: &ws.prev,
            next: &ws.cur,
            rx: &ws.rx,
            ry: &ws.ry,
            rz: &ws.rz,
            rs: &ws.rs,
            affine: &ws.aff,
            corrector: &ws.dir,
            alpha_p,
            alpha_d,
            sigma,
            mu,
            delta,
            rho,
            factor_delta,
            factor_rho,
            delta_next,
            rho_next,
        });
        Ok(retries)
    }

    /// `(p, d)` of the current iterate on the equilibrated data.
    fn scaled_residual_norms(&mut self) -> (f64, f64) {
        residual_norms(&self.scaled, &self.ws.cur, &mut self.ws.tmp_n, &mut self.ws.tmp_p, &mut self.ws.tmp_m)
    }

    pub fn result(&self) -> &SolveResult {
        &self.result
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    /// Changes settings that do not affect memory layout (tolerances,
    /// iteration and time limits, step parameters). Equilibration settings
    /// take effect at the next update.
    pub fn set_settings(&mut self, settings: &Settings) -> Result<(), StructureError> {
        settings.validate()?;
        self.settings = settings.clone();
        Ok(())
    }

    /// Problem with box bounds converted to rows, before equilibration.
    pub fn problem(&self) -> &QpProblem {
        &self.original
    }

    /// Equilibrated problem the iterations run on.
    pub fn scaled_problem(&self) -> &QpProblem {
        &self.scaled
    }

    pub fn equilibration(&self) -> &Equilibration {
        &self.equil
    }

    pub fn kkt(&self) -> &KktSystem {
        &self.kkt
    }

    pub fn setup_time(&self) -> Duration {
        self.setup_time
    }

    /// Dimensions `(n, p, m)` with box rows counted in `m`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.original.n(), self.original.p(), self.original.m())
    }
}

fn residual_norms(data: &QpProblem, it: &Iterate, tn: &mut [f64], tp: &mut [f64], tm: &mut [f64]) -> (f64, f64) {
    tp.iter_mut().zip(&data.b).for_each(|(t, b)| *t = -b);
    data.A.gemv(1.0, &it.x, tp);
    for i in 0..tm.len() {
        tm[i] = it.s[i] - data.h[i];
    }
    data.G.gemv(1.0, &it.x, tm);
    let p = inf_norm(tp).max(inf_norm(tm));
    tn.copy_from_slice(&data.c);
    data.P.symv_upper(1.0, &it.x, tn);
    data.A.gemv_t(1.0, &it.y, tn);
    data.G.gemv_t(1.0, &it.z, tn);
    (p, inf_norm(tn))
}

fn preview_penalties(ws: &mut Workspace, data: &QpProblem, prox: &ProximalState, st: &Settings) -> (f64, f64) {
    let (p_prev, d_prev) = residual_norms(data, &ws.prev, &mut ws.tmp_n, &mut ws.tmp_p, &mut ws.tmp_m);
    let (p_next, d_next) = residual_norms(data, &ws.cur, &mut ws.tmp_n, &mut ws.tmp_p, &mut ws.tmp_m);
    let r = proximal::complementarity_reduction(&ws.prev, &ws.cur);
    let delta = if p_next <= 0.95 * p_prev { prox.delta * (1.0 - r) } else { prox.delta * (1.0 - r / 3.0) };
    let rho = if d_next <= 0.95 * d_prev { prox.rho * (1.0 - r) } else { prox.rho * (1.0 - r / 3.0) };
    (delta.max(st.delta_min), rho.max(st.rho_min))
}

fn copy_values(src: &QpProblem, dst: &mut QpProblem) {
    dst.P.values.copy_from_slice(&src.P.values);
    dst.A.values.copy_from_slice(&src.A.values);
    dst.G.values.copy_from_slice(&src.G.values);
    dst.c.copy_from_slice(&src.c);
    dst.b.copy_from_slice(&src.b);
    dst.h.copy_from_slice(&src.h);
}

/// Convenience: setup followed by solve.
pub fn solve(problem: &QpProblem, settings: &Settings) -> Result<SolveResult, StructureError> {
    let mut inst = SolverInstance::setup(problem, settings)?;
    Ok(inst.solve().clone())
}
