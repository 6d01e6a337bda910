use std::path::PathBuf;

use crate::minsupport::Incumbent;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("variable count {n} outside supported range 1..={max}")]
    InvalidVariableCount { n: usize, max: usize },

    #[error("vector length {len} is not 2^n for any supported n")]
    InvalidLength { len: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("entry {value} at index {index} is not a valid {what}")]
    InvalidEntry {
        index: usize,
        value: i64,
        what: &'static str,
    },

    #[error("fid {fid:#x} out of range for n = {n}")]
    FidOutOfRange { n: usize, fid: u64 },

    #[error("inverse transform is not integral at index {index}")]
    NonIntegerResult { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bound violated: {bound} (slack {slack})")]
    BoundViolation { bound: &'static str, slack: String },

    #[error("vectors have unequal sums; majorization is undefined")]
    UnequalSums,

    #[error("strict Schur ordering contradicted: {0}")]
    SchurViolation(String),

    #[error("invalid family spec: {0}")]
    InvalidSpec(String),

    #[error("greedy repair exhausted after {iterations} iterations with {violations} violated rows")]
    RepairExhausted { iterations: usize, violations: usize },

    #[error("every synthesis strategy failed for fid {fid:#x}")]
    SynthesisFailed { fid: u64 },

    #[error("search budget exhausted at support level {level}")]
    BudgetExhausted {
        level: usize,
        best: Option<Box<Incumbent>>,
    },

    #[error("no ternary mask exists for fid {fid:#x} (n = {n})")]
    Infeasible { fid: u64, n: usize },

    #[error("margin parity contradicts support parity for fid {fid:#x} at row {row}")]
    ParityContradiction { fid: u64, row: usize },

    #[error("NPN universe for n = {n} is required but missing")]
    UniverseMissing { n: usize },

    #[error("cannot allocate {bytes} bytes for the visited bitmap")]
    OutOfMemory { bytes: usize },

    #[error("corrupt record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },

    #[error("certificate for fid {fid:#x} failed verification")]
    VerificationFailed { fid: u64 },

    #[error("unsupported format version {0}")]
    UnsupportedFormat(String),

    #[error("refusing to overwrite existing file {}", .0.display())]
    WouldOverwrite(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
