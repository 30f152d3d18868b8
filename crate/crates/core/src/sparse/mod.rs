//! Sparse symmetric linear algebra: storage, fill-reducing ordering and a
//! pivot-free `LDL^T` factorization with reusable symbolic analysis.

pub mod amd;
pub mod csc;
pub mod ldl;

pub use amd::{amd_ordering, invert_permutation};
pub use csc::CscMatrix;
pub use ldl::{
    ldl_solve, numeric_factorize, symbolic_factorize, FactorError, LdlFactorization,
    SymbolicFactorization,
};
