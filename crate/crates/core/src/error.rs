use thiserror::Error;

/// Errors raised by the numerical pipelines.
///
/// Check failures (a metric that is not Ricci-flat, a matrix that is not
/// positive-definite) are not errors; they are reported as verdicts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("spectral function `{function}` has a pole at eigenvalue {eigenvalue} of ad_w")]
    SingularParameter { function: &'static str, eigenvalue: f64 },

    #[error("root clustering is ambiguous at the chosen regular element ({0}); retry with a different regular element")]
    Degeneracy(String),

    #[error("lattice enumeration for D_a did not close within bound {bound}: {detail}")]
    IncompleteEnumeration { bound: f64, detail: String },

    #[error("point lies outside the positive Weyl chamber: {0}")]
    Chamber(String),

    #[error("boundary error: {0}")]
    Boundary(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    Diagnostic(String),

    #[error("chart error: {0}")]
    Chart(String),
}

pub type Result<T> = std::result::Result<T, Error>;
