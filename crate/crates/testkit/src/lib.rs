#![allow(non_snake_case)]
//! Random problem generators and dense reference computations used by the
//! test suites of the workspace. Everything here is deliberately naive: dense
//! matrices, textbook formulas, brute force where it is affordable.

use ippmm::{CscMatrix, Iterate, QpProblem};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense row-major copy of a CSC matrix as an nalgebra matrix. Symmetric
/// upper-triangular storage is mirrored when `symmetric` is set.
pub fn dense(m: &CscMatrix, symmetric: bool) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows, m.ncols);
    for (r, c, v) in m.iter() {
        d[(r, c)] += v;
        if symmetric && r != c {
            d[(c, r)] += v;
        }
    }
    d
}

pub fn to_csc(d: &DMatrix<f64>) -> CscMatrix {
    let mut trip = Vec::new();
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            if d[(i, j)] != 0.0 {
                trip.push((i, j, d[(i, j)]));
            }
        }
    }
    CscMatrix::from_triplets(d.nrows(), d.ncols(), &trip).unwrap()
}

/// Upper triangle of a dense symmetric matrix, entries with
/// `|v| ≤ drop` removed.
pub fn upper_csc(d: &DMatrix<f64>, drop: f64) -> CscMatrix {
    let mut trip = Vec::new();
    for j in 0..d.ncols() {
        for i in 0..=j {
            if d[(i, j)].abs() > drop || i == j {
                trip.push((i, j, d[(i, j)]));
            }
        }
    }
    CscMatrix::from_triplets(d.nrows(), d.ncols(), &trip).unwrap()
}

/// Random orthogonal matrix from the QR factorization of a Gaussian-like matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    g.qr().q()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSpec {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    /// Ratio of the largest to the smallest nonzero eigenvalue of `P`.
    pub cond: f64,
    /// Fill probability of `A` and `G`.
    pub density: f64,
    /// Number of eigenvalues of `P` set to zero.
    pub rank_deficiency: usize,
    /// Size of the diagonal blocks `P` is built from.
    pub block: usize,
}

impl QpSpec {
    /// A random specification inside the suite limits
    /// (`n ≤ 100`, `p ≤ 30`, `m ≤ 60`, `cond ≤ 1e6`).
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.gen_range(2..=100);
        let p = rng.gen_range(0..=30.min(n / 2));
        let m = rng.gen_range(0..=60);
        QpSpec {
            n,
            p,
            m,
            cond: 10f64.powf(rng.gen_range(0.0..=6.0)),
            density: rng.gen_range(0.05..0.3),
            rank_deficiency: 0,
            block: rng.gen_range(1..=8),
        }
    }
}

/// A problem together with a primal-dual solution it was built around.
#[derive(Debug, Clone)]
pub struct GeneratedQp {
    pub problem: QpProblem,
    pub solution: Iterate,
}

/// Builds a convex QP with a known optimal point.
///
/// `P = Π blockdiag(Q_k Λ_k Q_kᵀ) Πᵀ` with eigenvalues log-spaced in
/// `[1/cond, 1]`; about half of the inequality rows are active at the
/// solution with a positive multiplier; `c` is then chosen so that
/// stationarity holds. The random stream does not depend on
/// `rank_deficiency`, so the same seed gives the same problem up to `P`
/// and `c`.
pub fn random_qp(spec: &QpSpec, seed: u64) -> GeneratedQp {
    let mut rng = rng(seed);
    let QpSpec { n, p, m, .. } = *spec;

    let mut eig: Vec<f64> = (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            spec.cond.powf(-t)
        })
        .collect();
    eig.shuffle(&mut rng);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    // the smallest eigenvalues are the ones removed
    let mut by_size: Vec<usize> = (0..n).collect();
    by_size.sort_by(|&a, &b| eig[a].partial_cmp(&eig[b]).unwrap());
    for &k in by_size.iter().take(spec.rank_deficiency.min(n)) {
        eig[k] = 0.0;
    }

    let mut P = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let k = spec.block.max(1).min(n - start);
        let q = random_orthogonal(&mut rng, k);
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(k, eig[start..start + k].iter().copied()));
        let b = &q * lam * q.transpose();
        for a in 0..k {
            for c in 0..k {
                P[(order[start + a], order[start + c])] = b[(a, c)];
            }
        }
        start += k;
    }
    let P = (&P + P.transpose()) * 0.5;

    let sparse_rows = |rng: &mut ChaCha8Rng, rows: usize| {
        let mut d = DMatrix::zeros(rows, n);
        for i in 0..rows {
            for j in 0..n {
                if rng.gen_bool(spec.density) {
                    d[(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
            let j = rng.gen_range(0..n);
            if d[(i, j)] == 0.0 {
                d[(i, j)] = rng.gen_range(0.5..1.0);
            }
        }
        d
    };
    let A = sparse_rows(&mut rng, p);
    let G = sparse_rows(&mut rng, m);

    let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let y = DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0));
    let mut z = DVector::zeros(m);
    let mut s = DVector::zeros(m);
    for i in 0..m {
        if rng.gen_bool(0.5) {
            z[i] = rng.gen_range(0.1..1.0);
        } else {
            s[i] = rng.gen_range(0.1..1.0);
        }
    }
    let b = &A * &x;
    let h = &G * &x + &s;
    let c = -(&P * &x + A.transpose() * &y + G.transpose() * &z);

    let problem = QpProblem::unconstrained(upper_csc(&P, 1e-15), c.as_slice().to_vec())
        .with_equalities(to_csc(&A), b.as_slice().to_vec())
        .with_inequalities(to_csc(&G), h.as_slice().to_vec());
    GeneratedQp {
        problem,
        solution: Iterate {
            x: x.as_slice().to_vec(),
            s: s.as_slice().to_vec(),
            y: y.as_slice().to_vec(),
            z: z.as_slice().to_vec(),
        },
    }
}

/// The same problem with every equality row repeated, so the rows of `A`
/// are linearly dependent.
pub fn duplicate_equalities(problem: &QpProblem) -> QpProblem {
    let mut out = problem.clone();
    out.A = problem.A.vstack(&problem.A);
    out.b = problem.b.iter().chain(&problem.b).copied().collect();
    out
}

/// Rescales rows and columns of a generated problem by factors in
/// `[10^-e, 10^e]`. The solution set maps accordingly; the returned problem
/// is what matters for equilibration tests.
pub fn badly_scaled(problem: &QpProblem, e: f64, seed: u64) -> QpProblem {
    let mut rng = rng(seed);
    let mut f = |k: usize| -> Vec<f64> { (0..k).map(|_| 10f64.powf(rng.gen_range(-e..=e))).collect() };
    let (n, p, m) = (problem.n(), problem.p(), problem.m());
    let dx = f(n);
    let dy = f(p);
    let dz = f(m);
    let mut out = problem.clone();
    for j in 0..n {
        for k in out.P.col_ptr[j]..out.P.col_ptr[j + 1] {
            out.P.values[k] *= dx[out.P.row_idx[k]] * dx[j];
        }
        for k in out.A.col_ptr[j]..out.A.col_ptr[j + 1] {
            out.A.values[k] *= dy[out.A.row_idx[k]] * dx[j];
        }
        for k in out.G.col_ptr[j]..out.G.col_ptr[j + 1] {
            out.G.values[k] *= dz[out.G.row_idx[k]] * dx[j];
        }
        out.c[j] *= dx[j];
    }
    for i in 0..p {
        out.b[i] *= dy[i];
    }
    for i in 0..m {
        out.h[i] *= dz[i];
    }
    out
}

/// Random symmetric quasi-definite matrix of order `n1 + n2` (upper
/// triangle) and its sign vector: a diagonally dominant positive block, a
/// diagonally dominant negative block and a random coupling block.
pub fn random_quasi_definite(n1: usize, n2: usize, density: f64, seed: u64) -> (CscMatrix, Vec<i8>) {
    let mut rng = rng(seed);
    let n = n1 + n2;
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            if rng.gen_bool(density) {
                let same_block = (i < n1) == (j < n1);
                let v: f64 = rng.gen_range(-1.0..1.0);
                k[(i, j)] = if same_block { 0.3 * v } else { v };
                k[(j, i)] = k[(i, j)];
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
        let d = 1.0 + rng.gen_range(0.0..1.0) + 0.5 * off;
        k[(i, i)] = if i < n1 { d } else { -d };
    }
    let signs = (0..n).map(|i| if i < n1 { 1 } else { -1 }).collect();
    (upper_csc(&k, 0.0), signs)
}

/// Unpivoted dense `LDLᵀ`; `None` if a pivot is exactly zero.
pub fn dense_ldl(k: &DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>)> {
    let n = k.nrows();
    let mut l = DMatrix::identity(n, n);
    let mut d = DVector::zeros(n);
    for j in 0..n {
        let mut dj = k[(j, j)];
        for q in 0..j {
            dj -= l[(j, q)] * l[(j, q)] * d[q];
        }
        if dj == 0.0 {
            return None;
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = k[(i, j)];
            for q in 0..j {
                v -= l[(i, q)] * l[(j, q)] * d[q];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some((l, d))
}

/// Solution of a dense square system by partially pivoted LU.
pub fn dense_solve(k: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    k.clone().lu().solve(&DVector::from_column_slice(rhs)).map(|v| v.as_slice().to_vec())
}

/// Number of strictly lower nonzeros of `L` produced by eliminating the
/// symmetric pattern of `upper` in the order `perm` (new → old), by dense
/// symbolic elimination.
pub fn dense_fill(upper: &CscMatrix, perm: &[usize]) -> usize {
    let n = upper.ncols;
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut s = vec![vec![false; n]; n];
    for (r, c, _) in upper.iter() {
        let (a, b) = (inv[r], inv[c]);
        s[a][b] = true;
        s[b][a] = true;
    }
    let mut count = 0;
    for k in 0..n {
        let below: Vec<usize> = (k + 1..n).filter(|&i| s[i][k]).collect();
        count += below.len();
        for &i in &below {
            for &j in &below {
                s[i][j] = true;
            }
        }
    }
    count
}

/// Dense elimination tree of the pattern in natural order: parent of `j` is
/// the first row `i > j` with `L[i, j] ≠ 0`.
pub fn dense_etree(upper: &CscMatrix) -> Vec<Option<usize>> {
    let n = upper.ncols;
    let mut s = vec![vec![false; n]; n];
    for (r, c, _) in upper.iter() {
        s[r][c] = true;
        s[c][r] = true;
    }
    let mut parent = vec![None; n];
    for k in 0..n {
        let below: Vec<usize> = (k + 1..n).filter(|&i| s[i][k]).collect();
        parent[k] = below.first().copied();
        for &i in &below {
            for &j in &below {
                s[i][j] = true;
            }
        }
    }
    parent
}

/// The termination quantities recomputed from scratch with dense algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseCheck {
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub gap_tol: f64,
}

impl DenseCheck {
    pub fn holds(&self) -> bool {
        self.primal_res <= self.primal_tol && self.dual_res <= self.dual_tol && self.gap <= self.gap_tol
    }
}

fn inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Primal feasibility, dual feasibility and duality gap of `it` on
/// `problem`, with the tolerances `eps_abs + eps_rel · scale`. Box bounds are
/// taken as trailing rows of `G` (upper bounds first, then lower bounds).
pub fn dense_check(problem: &QpProblem, it: &Iterate, eps_abs: f64, eps_rel: f64) -> DenseCheck {
    let prob = problem.with_box_as_inequalities();
    let P = dense(&prob.P, true);
    let A = dense(&prob.A, false);
    let G = dense(&prob.G, false);
    let v = |s: &[f64]| DVector::from_column_slice(s);
    let (x, s, y, z) = (v(&it.x), v(&it.s), v(&it.y), v(&it.z));
    let (c, b, h) = (v(&prob.c), v(&prob.b), v(&prob.h));

    let ax = &A * &x;
    let gx = &G * &x;
    let px = &P * &x;
    let aty = A.transpose() * &y;
    let gtz = G.transpose() * &z;
    let primal_res = inf(&(&ax - &b)).max(inf(&(&gx - &h + &s)));
    let primal_scale = inf(&ax).max(inf(&b)).max(inf(&gx)).max(inf(&h)).max(inf(&s));
    let dual_res = inf(&(&px + &c + &aty + &gtz));
    let dual_scale = inf(&px).max(inf(&aty)).max(inf(&gtz)).max(inf(&c));
    let (xpx, cx, by, hz) = (x.dot(&px), c.dot(&x), b.dot(&y), h.dot(&z));
    let gap = (xpx + cx + by + hz).abs();
    let gap_scale = xpx.abs().max(cx.abs()).max(by.abs()).max(hz.abs());
    DenseCheck {
        primal_res,
        dual_res,
        gap,
        primal_tol: eps_abs + eps_rel * primal_scale,
        dual_tol: eps_abs + eps_rel * dual_scale,
        gap_tol: eps_abs + eps_rel * gap_scale,
    }
}

/// Optimal value of a small QP by enumerating active sets.
///
/// For every subset of inequality rows (box rows included) the equality
/// constrained KKT system is solved in the least-squares sense; a candidate
/// is kept if it solves that system, is primal feasible and has
/// non-negative multipliers. Returns the best objective and its `x`, or
/// `None` if no candidate qualifies. Exponential in the number of
/// inequalities; meant for `m ≤ 14` or so.
pub fn active_set_optimum(problem: &QpProblem, tol: f64) -> Option<(f64, Vec<f64>)> {
    let prob = problem.with_box_as_inequalities();
    let (n, p, m) = (prob.n(), prob.p(), prob.m());
    assert!(m <= 20, "active set enumeration over {m} rows is too expensive");
    let P = dense(&prob.P, true);
    let A = dense(&prob.A, false);
    let G = dense(&prob.G, false);
    let c = DVector::from_column_slice(&prob.c);
    let b = DVector::from_column_slice(&prob.b);
    let h = DVector::from_column_slice(&prob.h);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << m) {
        let act: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let k = n + p + act.len();
        let mut K = DMatrix::zeros(k, k);
        let mut r = DVector::zeros(k);
        K.view_mut((0, 0), (n, n)).copy_from(&P);
        for i in 0..p {
            for j in 0..n {
                K[(n + i, j)] = A[(i, j)];
                K[(j, n + i)] = A[(i, j)];
            }
            r[n + i] = b[i];
        }
        for (q, &i) in act.iter().enumerate() {
            for j in 0..n {
                K[(n + p + q, j)] = G[(i, j)];
                K[(j, n + p + q)] = G[(i, j)];
            }
            r[n + p + q] = h[i];
        }
        for j in 0..n {
            r[j] = -c[j];
        }
        let svd = K.clone().svd(true, true);
        let sol = match svd.solve(&r, 1e-10) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if inf(&(&K * &sol - &r)) > tol {
            continue;
        }
        let x = sol.rows(0, n).into_owned();
        if act.iter().enumerate().any(|(q, _)| sol[n + p + q] < -tol) {
            continue;
        }
        let gx = &G * &x;
        if (0..m).any(|i| gx[i] > h[i] + tol) {
            continue;
        }
        let obj = 0.5 * x.dot(&(&P * &x)) + c.dot(&x);
        if best.as_ref().map_or(true, |(bo, _)| obj < *bo - 1e-12) {
            best = Some((obj, x.as_slice().to_vec()));
        }
    }
    best
}
