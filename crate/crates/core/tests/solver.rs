#![allow(non_snake_case)]

use ippmm::solver::{step_size, KktSystem};
use ippmm::{
    check_termination, parse_qps, CscMatrix, Iterate, ProblemUpdate, QpProblem, Settings, SolveStatus,
    SolverInstance,
};
use ippmm_testkit::{dense, dense_check, dense_fill, dense_solve, duplicate_equalities, random_qp, rng, QpSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn half_norm_sq(n: usize) -> QpProblem {
    QpProblem::unconstrained(CscMatrix::identity(n), vec![0.0; n])
}

fn sum_to_one() -> QpProblem {
    half_norm_sq(2).with_equalities(CscMatrix::from_dense(1, 2, &[1.0, 1.0]), vec![1.0])
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn spec(n: usize, p: usize, m: usize) -> QpSpec {
    QpSpec { n, p, m, cond: 1e2, density: 0.25, rank_deficiency: 0, block: 4 }
}

const FIXTURES: [(&str, &str); 4] = [
    ("HS21", include_str!("../../bench/fixtures/maros/HS21.qps")),
    ("HS118", include_str!("../../bench/fixtures/maros/HS118.qps")),
    ("QPTEST", include_str!("../../bench/fixtures/maros/QPTEST.qps")),
    ("GENHS28", include_str!("../../bench/fixtures/maros/GENHS28.qps")),
];

#[test]
fn identity_objective_solves_in_two_iterations() {
    let res = ippmm::solver::solve(&half_norm_sq(3), &Settings::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    assert!(res.iterations <= 2);
    assert_eq!(res.iterate.x, [0.0; 3]);
}

#[test]
fn equality_example_matches_hand_kkt() {
    let res = ippmm::solver::solve(&sum_to_one(), &Settings::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    assert!(max_diff(&res.iterate.x, &[0.5, 0.5]) < 1e-8);
    assert!((res.iterate.y[0] + 0.5).abs() < 1e-8);
}

#[test]
fn duplicated_equality_still_solves() {
    let prob = duplicate_equalities(&sum_to_one());
    assert_eq!(prob.p(), 2);
    let res = ippmm::solver::solve(&prob, &Settings::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Solved);
    assert!(max_diff(&res.iterate.x, &[0.5, 0.5]) < 1e-8);
    // only the sum of the multipliers is determined
    assert!((res.iterate.y[0] + res.iterate.y[1] + 0.5).abs() < 1e-8);
}

#[test]
fn scalar_setup_has_one_by_one_kkt() {
    let prob = QpProblem::unconstrained(CscMatrix::identity(1), vec![0.0]);
    let inst = SolverInstance::setup(&prob, &Settings::default()).unwrap();
    assert_eq!(inst.dims(), (1, 0, 0));
    assert_eq!(inst.kkt().dim(), 1);
}

#[test]
fn box_bounds_become_two_rows() {
    let prob = half_norm_sq(2).with_bounds(vec![0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]);
    let inst = SolverInstance::setup(&prob, &Settings { ruiz_iters: 0, ..Settings::default() }).unwrap();
    assert_eq!(inst.dims(), (2, 0, 2));
    let g = dense(&inst.scaled_problem().G, false);
    assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]));
    assert_eq!(inst.scaled_problem().h, [1.0, 0.0]);
}

#[test]
fn fixture_kkt_matches_symbolic_prediction() {
    for (name, text) in FIXTURES {
        let prob = parse_qps(text).unwrap().to_problem().unwrap();
        let inst = SolverInstance::setup(&prob, &Settings::default()).unwrap();
        let kkt = inst.kkt();
        let fact = kkt.factorization();
        assert_eq!(fact.symbolic.l_nnz(), dense_fill(kkt.matrix(), &fact.symbolic.perm), "{name}");
        let scaled = inst.scaled_problem();
        let (n, p, m) = inst.dims();
        // structural upper triangle: P (plus a full diagonal), A, G, and the two negative diagonals
        let p_offdiag = (0..n)
            .map(|j| (scaled.P.col_ptr[j]..scaled.P.col_ptr[j + 1]).filter(|&k| scaled.P.row_idx[k] != j).count())
            .sum::<usize>();
        let expected = n + p_offdiag + scaled.A.nnz() + scaled.G.nnz() + p + m;
        assert_eq!(kkt.matrix().nnz(), expected, "{name}");
    }
}

#[test]
fn fixtures_solve_and_pass_independent_check() {
    let settings = Settings::default();
    for (name, text) in FIXTURES {
        let prob = parse_qps(text).unwrap().to_problem().unwrap();
        let res = ippmm::solver::solve(&prob, &settings).unwrap();
        assert_eq!(res.status, SolveStatus::Solved, "{name}");
        let full = prob.with_box_as_inequalities();
        assert!(dense_check(&full, &res.iterate, settings.eps_abs, settings.eps_rel).holds(), "{name}");
    }
}

#[test]
fn initialize_unconstrained_zero_cost() {
    let mut inst = SolverInstance::setup(&half_norm_sq(3), &Settings::default()).unwrap();
    let (it, prox) = inst.initialize().unwrap();
    assert_eq!(it.x, [0.0; 3]);
    assert_eq!(prox.xi, [0.0; 3]);
    assert!(it.s.is_empty() && it.z.is_empty());
}

#[test]
fn initialize_seeds_iterate_with_estimates() {
    let g = random_qp(&spec(12, 3, 8), 7);
    let settings = Settings::default();
    let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
    let (it, prox) = inst.initialize().unwrap();
    assert_eq!(it.x, prox.xi);
    assert_eq!(it.y, prox.lambda);
    assert_eq!(it.z, prox.nu);
    assert!(it.s.iter().chain(&it.z).all(|&v| v > 0.0));
    assert_eq!((prox.delta, prox.rho), (settings.delta0, settings.rho0));
}

#[test]
fn initialize_solves_the_regularized_least_squares_system() {
    let g = random_qp(&spec(10, 2, 6), 3);
    let settings = Settings { ruiz_iters: 0, ..Settings::default() };
    let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
    let (it, _) = inst.initialize().unwrap();
    // dense oracle for [P + ρI, Aᵀ, Gᵀ; A, -δI, 0; G, 0, -(1 + δ)I] [ξ; λ; ν̃] = [-c; b; h]
    let prob = inst.scaled_problem();
    let (n, p, m) = inst.dims();
    let (d, r) = (settings.delta0, settings.rho0);
    let mut k = DMatrix::zeros(n + p + m, n + p + m);
    k.view_mut((0, 0), (n, n)).copy_from(&dense(&prob.P, true));
    let a = dense(&prob.A, false);
    let gm = dense(&prob.G, false);
    k.view_mut((n, 0), (p, n)).copy_from(&a);
    k.view_mut((0, n), (n, p)).copy_from(&a.transpose());
    k.view_mut((n + p, 0), (m, n)).copy_from(&gm);
    k.view_mut((0, n + p), (n, m)).copy_from(&gm.transpose());
    for i in 0..n {
        k[(i, i)] += r;
    }
    for i in n..n + p {
        k[(i, i)] = -d;
    }
    for i in n + p..n + p + m {
        k[(i, i)] = -(1.0 + d);
    }
    let rhs: Vec<f64> = prob.c.iter().map(|v| -v).chain(prob.b.iter().copied()).chain(prob.h.iter().copied()).collect();
    let sol = dense_solve(&k, &rhs).unwrap();
    let scale = inf_norm(&sol).max(1.0);
    assert!(max_diff(&it.x, &sol[..n]) <= 1e-9 * scale);
    assert!(max_diff(&it.y, &sol[n..n + p]) <= 1e-9 * scale);
}

#[test]
fn update_cost_matches_fresh_setup() {
    let g = random_qp(&spec(20, 4, 8), 11);
    let settings = Settings::default();
    let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
    assert_eq!(inst.solve().status, SolveStatus::Solved);

    let mut changed = g.problem.clone();
    for (j, v) in changed.c.iter_mut().enumerate() {
        *v += 0.3 * ((j % 3) as f64 - 1.0);
    }
    inst.update(&ProblemUpdate { c: Some(&changed.c), ..Default::default() }).unwrap();
    let updated = inst.solve().clone();
    let fresh = SolverInstance::setup(&changed, &settings).unwrap().solve().clone();
    assert_eq!(updated.status, fresh.status);
    assert_eq!(updated.iterations, fresh.iterations);
    let it = |r: &ippmm::SolveResult| r.iterate.clone();
    let (a, b) = (it(&updated), it(&fresh));
    for (u, v) in [(&a.x, &b.x), (&a.y, &b.y), (&a.z, &b.z), (&a.s, &b.s)] {
        assert!(max_diff(u, v) <= 1e-12, "{}", max_diff(u, v));
    }
}

#[test]
fn update_all_values_matches_fresh_setup() {
    let g = random_qp(&spec(15, 3, 6), 5);
    let settings = Settings::default();
    let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
    inst.solve();
    let mut changed = g.problem.clone();
    changed.P.values.iter_mut().for_each(|v| *v *= 1.5);
    changed.A.values.iter_mut().for_each(|v| *v *= -0.5);
    changed.G.values.iter_mut().for_each(|v| *v *= 2.0);
    changed.b.iter_mut().for_each(|v| *v *= -0.5);
    changed.h.iter_mut().for_each(|v| *v += 1.0);
    inst.update(&ProblemUpdate {
        P: Some(&changed.P),
        A: Some(&changed.A),
        b: Some(&changed.b),
        G: Some(&changed.G),
        h: Some(&changed.h),
        ..Default::default()
    })
    .unwrap();
    let updated = inst.solve().clone();
    let fresh = SolverInstance::setup(&changed, &settings).unwrap().solve().clone();
    assert_eq!(updated.status, SolveStatus::Solved);
    assert!(max_diff(&updated.iterate.x, &fresh.iterate.x) <= 1e-12);
    assert!(max_diff(&updated.iterate.z, &fresh.iterate.z) <= 1e-12);
}

#[test]
fn identical_update_reproduces_the_iterate_sequence() {
    let g = random_qp(&spec(15, 3, 10), 2);
    let mut inst = SolverInstance::setup(&g.problem, &Settings::default()).unwrap();
    let mut first = Vec::new();
    inst.solve_observed(|v| first.push(v.next.clone()));
    let before = inst.result().clone();
    inst.update(&ProblemUpdate {
        P: Some(&g.problem.P),
        c: Some(&g.problem.c),
        A: Some(&g.problem.A),
        b: Some(&g.problem.b),
        G: Some(&g.problem.G),
        h: Some(&g.problem.h),
        ..Default::default()
    })
    .unwrap();
    let mut second = Vec::new();
    inst.solve_observed(|v| second.push(v.next.clone()));
    assert_eq!(first, second);
    assert_eq!(inst.result().iterate, before.iterate);
    assert_eq!(inst.result().iterations, before.iterations);
}

#[test]
fn extra_nonzero_in_p_is_rejected() {
    let prob = sum_to_one();
    let mut inst = SolverInstance::setup(&prob, &Settings::default()).unwrap();
    let before = inst.scaled_problem().clone();
    let bigger = CscMatrix::from_dense(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(inst.update(&ProblemUpdate { P: Some(&bigger), ..Default::default() }).is_err());
    assert_eq!(inst.scaled_problem(), &before);
    assert_eq!(inst.solve().status, SolveStatus::Solved);
}

#[test]
fn newton_direction_zero_for_zero_residual() {
    let prob = half_norm_sq(2).with_inequalities(CscMatrix::identity(2), vec![1.0, 1.0]);
    let mut kkt = KktSystem::new(&prob).unwrap();
    kkt.factorize(1e-4, 1e-6, &[1.0, 2.0], 100.0, 10).unwrap();
    let mut dir = ippmm::solver::Direction::zeros(2, 0, 2);
    kkt.solve_newton(&[0.0; 2], &[], &[0.0; 2], &[0.0; 2], &[1.0, 2.0], &[1.0, 1.0], &mut dir).unwrap();
    assert!(dir.dx.iter().chain(&dir.dz).chain(&dir.ds).all(|&v| v == 0.0));
}

#[test]
fn newton_scalar_matches_full_dense_system() {
    // n = m = 1: min ½x² with x ≤ 1, s = 0.5, z = 2
    let prob = half_norm_sq(1).with_inequalities(CscMatrix::identity(1), vec![1.0]);
    let (delta, rho, s, z) = (1e-2, 1e-3, 0.5, 2.0);
    let mut kkt = KktSystem::new(&prob).unwrap();
    kkt.factorize(delta, rho, &[s / z], 100.0, 10).unwrap();
    let (rx, rz, rs) = (0.3, -0.2, -1.0);
    let mut dir = ippmm::solver::Direction::zeros(1, 0, 1);
    kkt.solve_newton(&[rx], &[], &[rz], &[rs], &[s], &[z], &mut dir).unwrap();
    let k = DMatrix::from_row_slice(3, 3, &[1.0 + rho, 1.0, 0.0, 1.0, -delta, 1.0, 0.0, s, z]);
    let oracle = dense_solve(&k, &[rx, rz, rs]).unwrap();
    assert!(max_diff(&[dir.dx[0], dir.dz[0], dir.ds[0]], &oracle) < 1e-14);
}

/// Residual of the full Newton system at a direction, relative to the rhs.
#[allow(clippy::too_many_arguments)]
fn full_newton_residual(
    prob: &QpProblem,
    delta: f64,
    rho: f64,
    s: &[f64],
    z: &[f64],
    rhs: (&[f64], &[f64], &[f64], &[f64]),
    d: &ippmm::solver::Direction,
) -> f64 {
    let (rx, ry, rz, rs) = rhs;
    let (P, A, G) = (dense(&prob.P, true), dense(&prob.A, false), dense(&prob.G, false));
    let dx = nalgebra::DVector::from_column_slice(&d.dx);
    let dy = nalgebra::DVector::from_column_slice(&d.dy);
    let dz = nalgebra::DVector::from_column_slice(&d.dz);
    let r1 = &P * &dx + rho * &dx + A.transpose() * &dy + G.transpose() * &dz;
    let r2 = &A * &dx - delta * &dy;
    let r3 = &G * &dx - delta * &dz + nalgebra::DVector::from_column_slice(&d.ds);
    let mut err = max_diff(r1.as_slice(), rx).max(max_diff(r2.as_slice(), ry)).max(max_diff(r3.as_slice(), rz));
    for i in 0..s.len() {
        err = err.max((s[i] * d.dz[i] + z[i] * d.ds[i] - rs[i]).abs());
    }
    let scale = inf_norm(rx).max(inf_norm(ry)).max(inf_norm(rz)).max(inf_norm(rs)).max(f64::MIN_POSITIVE);
    err / scale
}

#[test]
fn iteration_invariants_on_random_instance() {
    let g = random_qp(&spec(20, 5, 10), 41);
    let settings = Settings::default();
    let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
    let scaled = inst.scaled_problem().clone();
    let tau = settings.tau;
    let mut worst_newton = 0.0f64;
    let mut count = 0;
    inst.solve_observed(|v| {
        count += 1;
        let (cur, next) = (v.current, v.next);
        assert!(next.s.iter().chain(&next.z).all(|&x| x > 0.0));
        for i in 0..cur.s.len() {
            // the binding component lands on the bound up to one rounding of s + α Δs
            assert!(next.s[i] >= (1.0 - tau) * cur.s[i] - 4.0 * f64::EPSILON * cur.s[i]);
            assert!(next.z[i] >= (1.0 - tau) * cur.z[i] - 4.0 * f64::EPSILON * cur.z[i]);
        }
        assert_eq!(v.alpha_p, step_size(&cur.s, &v.corrector.ds, tau));
        assert_eq!(v.alpha_d, step_size(&cur.z, &v.corrector.dz, tau));
        assert!(v.delta_next <= v.delta && v.rho_next <= v.rho);
        assert!(v.delta_next >= settings.delta_min && v.rho_next >= settings.rho_min);
        let e = full_newton_residual(&scaled, v.factor_delta, v.factor_rho, &cur.s, &cur.z, (v.rx, v.ry, v.rz, v.rs), v.corrector);
        worst_newton = worst_newton.max(e);
    });
    assert!(count > 0);
    assert!(worst_newton <= 1e-8, "{worst_newton:e}");
    assert_eq!(inst.result().status, SolveStatus::Solved);
}

#[test]
fn solution_matches_generated_kkt_point() {
    for seed in 0..10 {
        let g = random_qp(&spec(25, 5, 12), seed);
        let res = ippmm::solver::solve(&g.problem, &Settings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Solved);
        // strongly convex: the generated primal point is the unique minimizer
        let tol = 1e-6 * inf_norm(&g.solution.x).max(1.0);
        assert!(max_diff(&res.iterate.x, &g.solution.x) <= tol, "seed {seed}");
    }
}

#[test]
fn termination_example_single_lower_bound() {
    let prob = half_norm_sq(1).with_inequalities(CscMatrix::from_dense(1, 1, &[-1.0]), vec![-1.0]);
    let it = Iterate { x: vec![1.0], s: vec![0.0], y: vec![], z: vec![1.0] };
    let info = check_termination(&prob, &it, 1e-8, 1e-9);
    assert!(info.converged);
    assert_eq!((info.primal_res, info.dual_res, info.gap), (0.0, 0.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn status_honesty_and_interiority(seed in any::<u64>()) {
        let s = QpSpec::random(&mut rng(seed));
        let g = random_qp(&s, seed);
        let settings = Settings::default();
        let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
        let mut interior = true;
        let res = inst.solve_observed(|v| {
            interior &= v.next.s.iter().chain(&v.next.z).all(|&x| x > 0.0);
        }).clone();
        prop_assert!(interior);
        prop_assert!(res.iterate.z.iter().all(|&x| x > 0.0));
        if res.status == SolveStatus::Solved {
            let chk = dense_check(&g.problem, &res.iterate, settings.eps_abs, settings.eps_rel);
            prop_assert!(chk.holds(), "{:?}", chk);
        }
        prop_assert_eq!(res.status, SolveStatus::Solved);
    }

    #[test]
    fn deterministic(seed in any::<u64>()) {
        let s = QpSpec::random(&mut rng(seed));
        let g = random_qp(&s, seed);
        let a = ippmm::solver::solve(&g.problem, &Settings::default()).unwrap();
        let b = ippmm::solver::solve(&g.problem, &Settings::default()).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.iterate, b.iterate);
    }

    #[test]
    fn penalties_monotone(seed in any::<u64>()) {
        let g = random_qp(&spec(15, 3, 8), seed);
        let settings = Settings::default();
        let mut inst = SolverInstance::setup(&g.problem, &settings).unwrap();
        let mut ok = true;
        let mut last = (settings.delta0, settings.rho0);
        inst.solve_observed(|v| {
            ok &= v.delta == last.0 && v.rho == last.1;
            ok &= v.delta_next <= v.delta && v.rho_next <= v.rho;
            ok &= v.delta_next >= settings.delta_min && v.rho_next >= settings.rho_min;
            last = (v.delta_next, v.rho_next);
        });
        prop_assert!(ok);
    }
}
