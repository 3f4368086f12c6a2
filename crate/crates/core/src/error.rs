use thiserror::Error;

/// Errors raised by model construction, solvers and checkers.
#[derive(Debug, Error)]
pub enum IrdfError {
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error(
        "{what} needs {cells} cells, over the budget of {limit} (set IRDF_MAX_CELLS to raise it)"
    )]
    Capacity {
        what: String,
        cells: u128,
        limit: u64,
    },

    #[error("oracle cap exceeded: {cap} is {value}, limit {limit}")]
    OracleCap {
        cap: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("{what} index {index} out of range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite objective {value} at parameters {params:?}")]
    NonFinite { value: f64, params: Vec<f64> },

    #[error("solve failed at s = {s}: {source}")]
    AtPoint {
        s: f64,
        #[source]
        source: Box<IrdfError>,
    },
}

impl IrdfError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        IrdfError::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = IrdfError> = std::result::Result<T, E>;
