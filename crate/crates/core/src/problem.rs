#![allow(non_snake_case)]
//! Problem data and primal-dual iterates.

use crate::error::StructureError;
use crate::sparse::CscMatrix;

/// A convex quadratic program
///
/// ```text
/// minimize    ½ xᵀ P x + cᵀ x
/// subject to  A x = b
///             G x ≤ h
///             x_lb ≤ x ≤ x_ub        (optional, entries may be ±∞)
/// ```
///
/// `P` holds the upper triangle of a positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub P: CscMatrix,
    pub c: Vec<f64>,
    pub A: CscMatrix,
    pub b: Vec<f64>,
    pub G: CscMatrix,
    pub h: Vec<f64>,
    pub x_lb: Option<Vec<f64>>,
    pub x_ub: Option<Vec<f64>>,
}

impl QpProblem {
    /// Problem with no constraints.
    pub fn unconstrained(P: CscMatrix, c: Vec<f64>) -> Self {
        let n = c.len();
        QpProblem {
            P,
            c,
            A: CscMatrix::zeros(0, n),
            b: Vec::new(),
            G: CscMatrix::zeros(0, n),
            h: Vec::new(),
            x_lb: None,
            x_ub: None,
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Number of equality rows.
    pub fn p(&self) -> usize {
        self.b.len()
    }

    /// Number of inequality rows.
    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn with_equalities(mut self, A: CscMatrix, b: Vec<f64>) -> Self {
        self.A = A;
        self.b = b;
        self
    }

    pub fn with_inequalities(mut self, G: CscMatrix, h: Vec<f64>) -> Self {
        self.G = G;
        self.h = h;
        self
    }

    pub fn with_bounds(mut self, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        self.x_lb = Some(lb);
        self.x_ub = Some(ub);
        self
    }

    /// Checks dimensions, sparse structure, finiteness and bound consistency.
    pub fn validate(&self) -> Result<(), StructureError> {
        let n = self.n();
        let dim = |what, expected, got| {
            if expected == got {
                Ok(())
            } else {
                Err(StructureError::Dimension { what, expected, got })
            }
        };
        dim("P columns", n, self.P.ncols)?;
        self.P.check()?;
        self.P.check_upper_triangular()?;
        dim("A columns", n, self.A.ncols)?;
        dim("b", self.A.nrows, self.b.len())?;
        self.A.check()?;
        dim("G columns", n, self.G.ncols)?;
        dim("h", self.G.nrows, self.h.len())?;
        self.G.check()?;
        for (what, v) in [("c", &self.c), ("b", &self.b), ("h", &self.h)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(StructureError::NonFinite { what });
            }
        }
        if let Some(lb) = &self.x_lb {
            dim("x_lb", n, lb.len())?;
            if lb.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(StructureError::NonFinite { what: "x_lb" });
            }
        }
        if let Some(ub) = &self.x_ub {
            dim("x_ub", n, ub.len())?;
            if ub.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                return Err(StructureError::NonFinite { what: "x_ub" });
            }
        }
        if let (Some(lb), Some(ub)) = (&self.x_lb, &self.x_ub) {
            if let Some(index) = (0..n).find(|&i| lb[i] > ub[i]) {
                return Err(StructureError::InconsistentBounds { index });
            }
        }
        Ok(())
    }

    /// Objective value `½ xᵀPx + cᵀx`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut px = vec![0.0; self.n()];
        self.P.symv_upper(1.0, x, &mut px);
        0.5 * dot(x, &px) + dot(&self.c, x)
    }

    /// Equivalent problem with the box bounds appended to `G`/`h` as rows:
    /// `x_i ≤ u_i` becomes `e_iᵀ x ≤ u_i`, `x_i ≥ l_i` becomes `-e_iᵀ x ≤ -l_i`.
    /// Infinite bounds produce no row.
    pub fn with_box_as_inequalities(&self) -> QpProblem {
        let n = self.n();
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();
        if let Some(ub) = &self.x_ub {
            rows.extend((0..n).filter(|&i| ub[i].is_finite()).map(|i| (i, 1.0, ub[i])));
        }
        if let Some(lb) = &self.x_lb {
            rows.extend((0..n).filter(|&i| lb[i].is_finite()).map(|i| (i, -1.0, -lb[i])));
        }
        let trip: Vec<_> = rows.iter().enumerate().map(|(r, &(i, s, _))| (r, i, s)).collect();
        let boxes = CscMatrix::from_triplets(rows.len(), n, &trip).expect("box rows are well formed");
        let mut h = self.h.clone();
        h.extend(rows.iter().map(|r| r.2));
        QpProblem {
            P: self.P.clone(),
            c: self.c.clone(),
            A: self.A.clone(),
            b: self.b.clone(),
            G: self.G.vstack(&boxes),
            h,
            x_lb: None,
            x_ub: None,
        }
    }
}

/// Primal-dual point `(x, s, y, z)`: primal variables, inequality slacks,
/// equality multipliers, inequality multipliers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Iterate {
    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        Iterate {
            x: vec![0.0; n],
            s: vec![0.0; m],
            y: vec![0.0; p],
            z: vec![0.0; m],
        }
    }

    pub(crate) fn copy_from(&mut self, other: &Iterate) {
        self.x.copy_from_slice(&other.x);
        self.s.copy_from_slice(&other.s);
        self.y.copy_from_slice(&other.y);
        self.z.copy_from_slice(&other.z);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_conversion_drops_infinite_bounds() {
        let prob = QpProblem::unconstrained(CscMatrix::identity(2), vec![0.0, 0.0])
            .with_bounds(vec![0.0, f64::NEG_INFINITY], vec![1.0, f64::INFINITY]);
        prob.validate().unwrap();
        let conv = prob.with_box_as_inequalities();
        assert_eq!(conv.m(), 2);
        assert_eq!(conv.G.to_dense(), vec![1.0, 0.0, -1.0, 0.0]);
        assert_eq!(conv.h, vec![1.0, -0.0]);
    }

    #[test]
    fn validation_catches_mismatches() {
        let prob = QpProblem::unconstrained(CscMatrix::identity(2), vec![0.0; 2])
            .with_equalities(CscMatrix::zeros(1, 2), vec![]);
        assert_eq!(
            prob.validate(),
            Err(StructureError::Dimension { what: "b", expected: 1, got: 0 })
        );
        let prob = QpProblem::unconstrained(CscMatrix::identity(1), vec![f64::NAN]);
        assert!(prob.validate().is_err());
        let prob = QpProblem::unconstrained(CscMatrix::identity(1), vec![0.0])
            .with_bounds(vec![2.0], vec![1.0]);
        assert_eq!(prob.validate(), Err(StructureError::InconsistentBounds { index: 0 }));
    }

    #[test]
    fn objective_uses_symmetric_p() {
        let P = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap();
        let prob = QpProblem::unconstrained(P, vec![1.0, 0.0]);
        // ½ [1 1] [[2 1][1 2]] [1 1]ᵀ + 1 = 3 + 1
        assert_eq!(prob.objective(&[1.0, 1.0]), 4.0);
    }
}
