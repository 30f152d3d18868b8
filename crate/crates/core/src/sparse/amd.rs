//! Approximate minimum degree ordering.
//!
//! The ordering works on the quotient graph of the symmetric matrix: every
//! eliminated pivot becomes an *element* standing for the clique it created,
//! and variables keep two adjacency lists (remaining variable neighbours and
//! adjacent elements). Degrees are not recomputed exactly. After each pivot
//! the external degree of an affected variable `i` is bounded by
//!
//! ```text
//! min( remaining - 1,
//!      d_old(i) + |Lp \ i|,
//!      |A_i \ i| + |Lp \ i| + sum_{e in E_i, e != p} |Le \ Lp| )
//! ```
//!
//! which is the classical approximate degree. Elements whose pattern is a
//! subset of the new element are absorbed (aggressive absorption). Ties in
//! the degree are broken by the lowest variable index, so the ordering is a
//! pure function of the pattern.

use std::collections::BTreeSet;

use super::csc::CscMatrix;
use crate::error::StructureError;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Node {
    Variable,
    Element,
    Absorbed,
}

/// Computes a fill-reducing permutation of the symmetric matrix whose upper
/// triangle is `pattern`. Values are ignored.
///
/// The result `perm` maps new positions to old indices: row/column `k` of the
/// permuted matrix is row/column `perm[k]` of the input.
pub fn amd_ordering(pattern: &CscMatrix) -> Result<Vec<usize>, StructureError> {
    pattern.check_pattern()?;
    pattern.check_upper_triangular()?;
    let n = pattern.ncols;
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut adj_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, c, _) in pattern.iter() {
        if r != c {
            adj_vars[r].push(c);
            adj_vars[c].push(r);
        }
    }
    for a in adj_vars.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut adj_elems: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut kind = vec![Node::Variable; n];
    let mut degree: Vec<usize> = adj_vars.iter().map(Vec::len).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();

    let mut mark = vec![0usize; n];
    let mut w_mark = vec![0usize; n];
    let mut w = vec![0usize; n];
    let mut stamp = 0usize;
    let mut order = Vec::with_capacity(n);
    let mut lp: Vec<usize> = Vec::new();

    while let Some((_, p)) = queue.pop_first() {
        order.push(p);
        stamp += 1;
        mark[p] = stamp;

        // Pattern of the new element: variable neighbours plus every
        // adjacent element, which is absorbed into p.
        lp.clear();
        for &v in &adj_vars[p] {
            if kind[v] == Node::Variable && mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        let elems = std::mem::take(&mut adj_elems[p]);
        for &e in &elems {
            if kind[e] != Node::Element {
                continue;
            }
            for &v in &elem_vars[e] {
                if kind[v] == Node::Variable && mark[v] != stamp {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            kind[e] = Node::Absorbed;
            elem_vars[e] = Vec::new();
        }
        kind[p] = Node::Element;
        adj_vars[p] = Vec::new();
        lp.sort_unstable();
        elem_vars[p] = lp.clone();

        for &i in &lp {
            queue.remove(&(degree[i], i));
        }

        // |Le \ Lp| for every live element touching Lp.
        for &i in &lp {
            for &e in &adj_elems[i] {
                if kind[e] != Node::Element || e == p {
                    continue;
                }
                if w_mark[e] != stamp {
                    w_mark[e] = stamp;
                    w[e] = elem_vars[e].len();
                }
                w[e] -= 1;
            }
        }

        let remaining = n - order.len();
        let lp_ext = lp.len().saturating_sub(1);
        for &i in &lp {
            let mut elem_sum = 0usize;
            adj_elems[i].retain(|&e| {
                if kind[e] != Node::Element || e == p {
                    return false;
                }
                if w_mark[e] == stamp && w[e] == 0 {
                    kind[e] = Node::Absorbed;
                    return false;
                }
                elem_sum += if w_mark[e] == stamp { w[e] } else { 0 };
                true
            });
            adj_elems[i].push(p);
            adj_vars[i].retain(|&v| kind[v] == Node::Variable && mark[v] != stamp);

            let bound = adj_vars[i].len() + lp_ext + elem_sum;
            let d = bound
                .min(degree[i] + lp_ext)
                .min(remaining.saturating_sub(1));
            degree[i] = d;
            queue.insert((d, i));
        }
        // Absorbed elements may still hold storage.
        for &i in &lp {
            for &e in &adj_elems[i] {
                if kind[e] == Node::Absorbed && !elem_vars[e].is_empty() {
                    elem_vars[e] = Vec::new();
                }
            }
        }
    }
    Ok(order)
}

/// Inverse of a permutation; errors if `perm` is not a bijection on `0..n`.
pub fn invert_permutation(perm: &[usize]) -> Result<Vec<usize>, StructureError> {
    let n = perm.len();
    let mut inv = vec![usize::MAX; n];
    for (new, &old) in perm.iter().enumerate() {
        if old >= n || inv[old] != usize::MAX {
            return Err(StructureError::InvalidPermutation);
        }
        inv[old] = new;
    }
    Ok(inv)
}
