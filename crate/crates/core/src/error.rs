use thiserror::Error;

/// Errors produced anywhere in the kit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("invalid CSR matrix: {0}")]
    InvalidMatrix(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("hash table full ({size} slots) while inserting key {key}")]
    TableFull { key: usize, size: usize },
    #[error("row {row}: gathered {gathered} entries but {allocated} were allocated")]
    CapacityMismatch {
        row: usize,
        gathered: usize,
        allocated: usize,
    },
    #[error("row group plan does not match the operands: {0}")]
    PlanMismatch(String),
    #[error("cannot resolve {array}[{index}]")]
    ResolverFailure { array: &'static str, index: usize },
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("matrix is not square ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("label {label} of node {node} is outside 1..={max}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        max: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(what: &str, left: usize, right: usize) -> Error {
    Error::DimensionMismatch(format!("{what}: {left} != {right}"))
}
