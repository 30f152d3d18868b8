use thiserror::Error;

/// Errors raised when input data does not describe a valid problem or matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("column pointer array has length {got}, expected {expected}")]
    ColPtrLength { expected: usize, got: usize },
    #[error("column pointers must start at 0 and be non-decreasing")]
    ColPtrOrder,
    #[error("row index and value arrays disagree with column pointers (nnz {nnz}, rows {rows}, values {values})")]
    NnzMismatch {
        nnz: usize,
        rows: usize,
        values: usize,
    },
    #[error("row index {row} out of range in column {col} (nrows = {nrows})")]
    RowOutOfRange { row: usize, col: usize, nrows: usize },
    #[error("row indices in column {col} are not strictly increasing")]
    UnsortedColumn { col: usize },
    #[error("entry ({row}, {col}) lies below the diagonal of an upper-triangular matrix")]
    NotUpperTriangular { row: usize, col: usize },
    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid permutation")]
    InvalidPermutation,
    #[error("sparsity pattern of {what} differs from the one given at setup")]
    PatternMismatch { what: &'static str },
    #[error("lower bound exceeds upper bound for variable {index}")]
    InconsistentBounds { index: usize },
    #[error("invalid setting: {0}")]
    Settings(&'static str),
}
