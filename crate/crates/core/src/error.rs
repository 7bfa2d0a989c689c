use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrwError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("element does not belong to group {group}: {detail}")]
    GroupMismatch { group: String, detail: String },
    #[error("invalid step distribution: {0}")]
    InvalidStep(String),
    #[error("step distribution is not symmetric: q({s}) = {a} but q({s}^-1) = {b}")]
    NonSymmetricStep { s: usize, a: f64, b: f64 },
    #[error("invalid offspring distribution: {0}")]
    InvalidOffspring(String),
    #[error("parameter {name} out of range: {detail}")]
    OutOfRange { name: &'static str, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("coupling mismatch: {0}")]
    CouplingMismatch(String),
    #[error("percolation window not closed: {0}")]
    WindowNotClosed(String),
    #[error("test function needs depth {needed} but samples have depth {depth}")]
    RadiusTooLarge { needed: u32, depth: u32 },
    #[error("no replicas to aggregate")]
    NoReplicas,
}

pub type Result<T, E = BrwError> = std::result::Result<T, E>;
