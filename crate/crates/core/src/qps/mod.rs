//! QPS files: MPS with a quadratic objective section.
//!
//! Both free and fixed layouts are read. A data line is split on whitespace
//! first; if the token count does not fit the section, the fixed column
//! positions are used instead (this is what lets names contain blanks).

mod parse;
mod write;

pub use parse::parse_qps;
pub use write::write_qps;

use crate::problem::QpProblem;
use crate::sparse::CscMatrix;

/// Bound values at or beyond this magnitude are read as infinite.
pub const INFINITE_BOUND: f64 = 1e20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    /// `N` row. Exactly one per file.
    Objective,
    /// `L` row: `aᵀx ≤ rhs`.
    Le,
    /// `E` row: `aᵀx = rhs`.
    Eq,
    /// `G` row: `aᵀx ≥ rhs`.
    Ge,
}

impl RowSense {
    pub fn code(self) -> &'static str {
        match self {
            RowSense::Objective => "N",
            RowSense::Le => "L",
            RowSense::Eq => "E",
            RowSense::Ge => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpsRow {
    pub name: String,
    pub sense: RowSense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Up,
    Lo,
    Fx,
    Fr,
    Mi,
    Pl,
}

impl BoundKind {
    pub fn code(self) -> &'static str {
        match self {
            BoundKind::Up => "UP",
            BoundKind::Lo => "LO",
            BoundKind::Fx => "FX",
            BoundKind::Fr => "FR",
            BoundKind::Mi => "MI",
            BoundKind::Pl => "PL",
        }
    }

    pub fn takes_value(self) -> bool {
        matches!(self, BoundKind::Up | BoundKind::Lo | BoundKind::Fx)
    }
}

/// One `BOUNDS` record. `value` is 0 for kinds without a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpsBound {
    pub kind: BoundKind,
    pub column: usize,
    pub value: f64,
}

/// Parsed contents of a QPS file. Indices refer to `rows` and `columns`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QpsFile {
    pub name: String,
    pub rows: Vec<QpsRow>,
    pub columns: Vec<String>,
    /// `(column, row, value)` in order of first appearance, duplicates summed.
    pub entries: Vec<(usize, usize, f64)>,
    /// `(row, value)`, duplicates summed.
    pub rhs: Vec<(usize, f64)>,
    pub ranges: Vec<(usize, f64)>,
    pub bounds: Vec<QpsBound>,
    /// Lower triangle of the objective Hessian as `(row, col, value)` with
    /// `row ≥ col`, sorted column-major.
    pub quadobj: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("column '{column}': lower bound {lower} exceeds upper bound {upper}")]
    InconsistentBounds { column: String, lower: f64, upper: f64 },
    #[error("range given for objective row '{row}'")]
    RangeOnObjective { row: String },
    #[error("name '{0}' cannot be written in free format")]
    UnwritableName(String),
}

impl QpsFile {
    pub fn objective_row(&self) -> Option<usize> {
        self.rows.iter().position(|r| r.sense == RowSense::Objective)
    }

    /// Constant term of the objective: minus the right-hand side given for
    /// the objective row.
    pub fn objective_constant(&self) -> f64 {
        match self.objective_row() {
            Some(obj) => -self.rhs.iter().filter(|&&(r, _)| r == obj).map(|&(_, v)| v).sum::<f64>(),
            None => 0.0,
        }
    }

    /// Variable bounds after applying the records in order on top of the
    /// default `[0, ∞)`. Fixed variables report `l = u`.
    pub fn variable_bounds(&self) -> Result<(Vec<f64>, Vec<f64>), QpsError> {
        let n = self.columns.len();
        let mut lb = vec![0.0; n];
        let mut ub = vec![f64::INFINITY; n];
        let mut lower_set = vec![false; n];
        for b in &self.bounds {
            let j = b.column;
            let value = if b.value >= INFINITE_BOUND {
                f64::INFINITY
            } else if b.value <= -INFINITE_BOUND {
                f64::NEG_INFINITY
            } else {
                b.value
            };
            match b.kind {
                BoundKind::Up => {
                    ub[j] = value;
                    // MPS convention: a negative upper bound on a variable
                    // whose lower bound was never given frees the lower side
                    if value < 0.0 && !lower_set[j] {
                        lb[j] = f64::NEG_INFINITY;
                    }
                }
                BoundKind::Lo => {
                    lb[j] = value;
                    lower_set[j] = true;
                }
                BoundKind::Fx => {
                    lb[j] = value;
                    ub[j] = value;
                    lower_set[j] = true;
                }
                BoundKind::Fr => {
                    lb[j] = f64::NEG_INFINITY;
                    ub[j] = f64::INFINITY;
                    lower_set[j] = true;
                }
                BoundKind::Mi => {
                    lb[j] = f64::NEG_INFINITY;
                    lower_set[j] = true;
                }
                BoundKind::Pl => ub[j] = f64::INFINITY,
            }
        }
        for j in 0..n {
            if lb[j] > ub[j] {
                return Err(QpsError::InconsistentBounds {
                    column: self.columns[j].clone(),
                    lower: lb[j],
                    upper: ub[j],
                });
            }
        }
        Ok((lb, ub))
    }

    /// Builds the problem `min ½xᵀPx + cᵀx s.t. Ax = b, Gx ≤ h, l ≤ x ≤ u`.
    ///
    /// * `E` rows go to `(A, b)` in file order, followed by one row `x_j = v`
    ///   per fixed variable.
    /// * `L` rows go to `G` as is, `G` rows negated.
    /// * A ranged row becomes two `G` rows, upper side first.
    /// * Remaining finite bounds become `l`, `u`; both are `None` when every
    ///   bound is infinite.
    ///
    /// The objective constant is not part of the problem, see
    /// [`Self::objective_constant`].
    pub fn to_problem(&self) -> Result<QpProblem, QpsError> {
        let n = self.columns.len();
        let obj = self.objective_row();
        if let Some(o) = obj {
            if let Some(&(r, _)) = self.ranges.iter().find(|&&(r, _)| r == o) {
                return Err(QpsError::RangeOnObjective { row: self.rows[r].name.clone() });
            }
        }
        let (mut lb, mut ub) = self.variable_bounds()?;

        let nrows = self.rows.len();
        let mut rhs = vec![0.0; nrows];
        for &(r, v) in &self.rhs {
            rhs[r] += v;
        }
        let mut range: Vec<Option<f64>> = vec![None; nrows];
        for &(r, v) in &self.ranges {
            range[r] = Some(range[r].unwrap_or(0.0) + v);
        }

        // Row map: each file row to its A row or its G rows with a sign.
        enum Target {
            None,
            Eq(usize),
            Ineq(usize, f64),
            Two(usize, usize),
        }
        let mut targets = Vec::with_capacity(nrows);
        let (mut p, mut m) = (0usize, 0usize);
        let mut b = Vec::new();
        let mut h = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            let t = match (row.sense, range[r]) {
                (RowSense::Objective, _) => Target::None,
                (RowSense::Eq, None) | (RowSense::Eq, Some(0.0)) => {
                    b.push(rhs[r]);
                    p += 1;
                    Target::Eq(p - 1)
                }
                (RowSense::Le, None) => {
                    h.push(rhs[r]);
                    m += 1;
                    Target::Ineq(m - 1, 1.0)
                }
                (RowSense::Ge, None) => {
                    h.push(-rhs[r]);
                    m += 1;
                    Target::Ineq(m - 1, -1.0)
                }
                (sense, Some(rv)) => {
                    let (lo, hi) = match sense {
                        RowSense::Le => (rhs[r] - rv.abs(), rhs[r]),
                        RowSense::Ge => (rhs[r], rhs[r] + rv.abs()),
                        _ if rv > 0.0 => (rhs[r], rhs[r] + rv),
                        _ => (rhs[r] + rv, rhs[r]),
                    };
                    h.push(hi);
                    h.push(-lo);
                    m += 2;
                    Target::Two(m - 2, m - 1)
                }
            };
            targets.push(t);
        }

        let mut c = vec![0.0; n];
        let mut a_trip = Vec::new();
        let mut g_trip = Vec::new();
        for &(j, r, v) in &self.entries {
            match targets[r] {
                Target::None => c[j] += v,
                Target::Eq(i) => a_trip.push((i, j, v)),
                Target::Ineq(i, sign) => g_trip.push((i, j, sign * v)),
                Target::Two(iu, il) => {
                    g_trip.push((iu, j, v));
                    g_trip.push((il, j, -v));
                }
            }
        }
        for j in 0..n {
            if lb[j] == ub[j] {
                a_trip.push((p, j, 1.0));
                b.push(lb[j]);
                p += 1;
                lb[j] = f64::NEG_INFINITY;
                ub[j] = f64::INFINITY;
            }
        }
        let p_trip: Vec<(usize, usize, f64)> = self.quadobj.iter().map(|&(i, j, v)| (j, i, v)).collect();

        let build = |rows: usize, trip: &[(usize, usize, f64)]| {
            CscMatrix::from_triplets(rows, n, trip).expect("indices come from the file tables")
        };
        let mut prob = QpProblem::unconstrained(build(n, &p_trip), c)
            .with_equalities(build(p, &a_trip), b)
            .with_inequalities(build(m, &g_trip), h);
        if lb.iter().chain(&ub).any(|v| v.is_finite()) {
            prob = prob.with_bounds(lb, ub);
        }
        Ok(prob)
    }
}
