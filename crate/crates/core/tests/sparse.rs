use ippmm::sparse::{
    amd_ordering, invert_permutation, ldl_solve, numeric_factorize, symbolic_factorize, CscMatrix, FactorError,
    LdlFactorization,
};
use ippmm_testkit::{dense, dense_etree, dense_fill, dense_ldl, dense_solve, random_quasi_definite};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn arrow(n: usize) -> CscMatrix {
    let mut t = vec![(0, 0, 4.0)];
    for j in 1..n {
        t.push((0, j, 1.0));
        t.push((j, j, 4.0));
    }
    CscMatrix::from_triplets(n, n, &t).unwrap()
}

fn tridiagonal(n: usize) -> CscMatrix {
    let mut t = vec![];
    for j in 0..n {
        t.push((j, j, 2.0));
        if j > 0 {
            t.push((j - 1, j, -1.0));
        }
    }
    CscMatrix::from_triplets(n, n, &t).unwrap()
}

fn permuted(k: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[(perm[i], perm[j])])
}

fn reconstruction_error(k: &CscMatrix, f: &LdlFactorization) -> f64 {
    let n = k.ncols;
    let l = DMatrix::from_row_slice(n, n, &f.l_dense());
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&f.d));
    let lhs = permuted(&dense(k, true), &f.symbolic.perm);
    (lhs - &l * d * l.transpose()).amax()
}

#[test]
fn arrow_fill_natural_versus_amd() {
    let a = arrow(6);
    let natural: Vec<usize> = (0..6).collect();
    assert_eq!(dense_fill(&a, &natural), 15);
    let sym = symbolic_factorize(&a, &natural).unwrap();
    assert_eq!(sym.l_nnz(), 15);

    let p = amd_ordering(&a).unwrap();
    assert_eq!(dense_fill(&a, &p), 5);
    assert_eq!(symbolic_factorize(&a, &p).unwrap().l_nnz(), 5);
}

#[test]
fn tridiagonal_elimination_tree() {
    let t = tridiagonal(4);
    let sym = symbolic_factorize(&t, &[0, 1, 2, 3]).unwrap();
    assert_eq!(sym.etree, dense_etree(&t));
    assert_eq!(sym.etree, [Some(1), Some(2), Some(3), None]);
    assert_eq!(sym.l_col_counts, [1, 1, 1, 0]);
}

#[test]
fn identity_pattern_has_no_fill() {
    let sym = symbolic_factorize(&CscMatrix::identity(5), &[0, 1, 2, 3, 4]).unwrap();
    assert!(sym.etree.iter().all(Option::is_none));
    assert!(sym.l_col_counts.iter().all(|&c| c == 0));
    let f = numeric_factorize(&CscMatrix::identity(3), &symbolic_factorize(&CscMatrix::identity(3), &[0, 1, 2]).unwrap(), &[1, 1, 1])
        .unwrap();
    assert_eq!(f.d, [1.0, 1.0, 1.0]);
    assert_eq!(ldl_solve(&f, &[1.0, 2.0, 3.0]).unwrap(), [1.0, 2.0, 3.0]);
}

#[test]
fn diagonal_pattern_any_order_no_fill() {
    let d = CscMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
    let p = amd_ordering(&d).unwrap();
    assert!(invert_permutation(&p).is_ok());
    assert_eq!(symbolic_factorize(&d, &p).unwrap().l_nnz(), 0);
}

#[test]
fn two_by_two_against_hand_elimination() {
    let k = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, -2.0)]).unwrap();
    let (l, d) = dense_ldl(&dense(&k, true)).unwrap();
    let f = numeric_factorize(&k, &symbolic_factorize(&k, &[0, 1]).unwrap(), &[1, -1]).unwrap();
    assert_eq!(f.l_values, [l[(1, 0)]]);
    assert_eq!(f.d, d.as_slice());
    let x = ldl_solve(&f, &[1.0, 0.0]).unwrap();
    let oracle = dense_solve(&dense(&k, true), &[1.0, 0.0]).unwrap();
    for (a, b) in x.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((x[0] - 0.4).abs() < 1e-15 && (x[1] - 0.2).abs() < 1e-15);
}

#[test]
fn zero_pivot_is_reported() {
    let k = CscMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 1, 0.0)]).unwrap();
    let err = numeric_factorize(&k, &symbolic_factorize(&k, &[0, 1]).unwrap(), &[1, -1]).unwrap_err();
    assert!(matches!(err, FactorError::QuasiDefinite { column: 0, .. }), "{err:?}");
}

#[test]
fn random_fifty_matches_dense_solve() {
    let (k, signs) = random_quasi_definite(30, 20, 0.1, 5);
    let sym = symbolic_factorize(&k, &amd_ordering(&k).unwrap()).unwrap();
    let f = numeric_factorize(&k, &sym, &signs).unwrap();
    let rhs: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
    let x = ldl_solve(&f, &rhs).unwrap();
    let oracle = dense_solve(&dense(&k, true), &rhs).unwrap();
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in x.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn amd_is_a_bijection(n in 1usize..60, density in 0.0f64..0.4, seed in any::<u64>()) {
        let (k, _) = random_quasi_definite(n, 0, density, seed);
        let p = amd_ordering(&k).unwrap();
        prop_assert!(invert_permutation(&p).is_ok());
        prop_assert_eq!(p.len(), n);
        prop_assert_eq!(amd_ordering(&k).unwrap(), p);
    }

    #[test]
    fn symbolic_count_matches_dense_fill(n in 1usize..40, density in 0.0f64..0.3, seed in any::<u64>()) {
        let (k, _) = random_quasi_definite(n, 0, density, seed);
        let p = amd_ordering(&k).unwrap();
        prop_assert_eq!(symbolic_factorize(&k, &p).unwrap().l_nnz(), dense_fill(&k, &p));
    }

    #[test]
    fn reconstruction_and_inertia(n1 in 1usize..60, n2 in 0usize..40, density in 0.0f64..0.2, seed in any::<u64>()) {
        let (k, signs) = random_quasi_definite(n1, n2, density, seed);
        let sym = symbolic_factorize(&k, &amd_ordering(&k).unwrap()).unwrap();
        let f = numeric_factorize(&k, &sym, &signs).unwrap();
        prop_assert!(reconstruction_error(&k, &f) <= 1e-10 * k.max_abs());
        prop_assert_eq!(f.inertia(), (n1, n2));
        prop_assert!(f.d.iter().all(|&d| d != 0.0));
    }

    #[test]
    fn solve_then_multiply_is_identity(n1 in 1usize..50, n2 in 0usize..30, seed in any::<u64>()) {
        let (k, signs) = random_quasi_definite(n1, n2, 0.1, seed);
        let sym = symbolic_factorize(&k, &amd_ordering(&k).unwrap()).unwrap();
        let f = numeric_factorize(&k, &sym, &signs).unwrap();
        let rhs: Vec<f64> = (0..n1 + n2).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = ldl_solve(&f, &rhs).unwrap();
        let mut kx = vec![0.0; n1 + n2];
        k.symv_upper(1.0, &x, &mut kx);
        let err = kx.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err <= 1e-9 * rhs.iter().fold(1.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn refactor_reuses_pattern(n1 in 1usize..40, n2 in 1usize..20, seed in any::<u64>()) {
        let (k, signs) = random_quasi_definite(n1, n2, 0.15, seed);
        let sym = symbolic_factorize(&k, &amd_ordering(&k).unwrap()).unwrap();
        let mut f = LdlFactorization::new(sym.clone());
        f.refactor(&k, &signs).unwrap();
        let (ptr, idx) = (f.symbolic.l_col_ptr.clone(), f.symbolic.l_row_idx.clone());
        let cap = f.l_values.capacity();
        let mut k2 = k.clone();
        for (i, v) in k2.values.iter_mut().enumerate() {
            *v *= 1.0 + 0.1 * ((i % 5) as f64);
        }
        f.refactor(&k2, &signs).unwrap();
        prop_assert_eq!(&f.symbolic.l_col_ptr, &ptr);
        prop_assert_eq!(&f.symbolic.l_row_idx, &idx);
        prop_assert_eq!(f.l_values.capacity(), cap);
        prop_assert!(reconstruction_error(&k2, &f) <= 1e-10 * k2.max_abs());
    }
}
