use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the formula that consumes it.
    #[error("{name} = {value} is outside the valid domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The parametric gain reaches or exceeds the oscillation threshold.
    #[error("configuration is at or above threshold (gain measure {gain} >= {limit})")]
    AboveThreshold { gain: f64, limit: f64 },

    #[error("system matrix is numerically singular at omega = {omega}")]
    Singular { omega: f64 },

    #[error("quadrature did not converge after {nodes} nodes (last change {change:e})")]
    QuadratureNonConvergence { nodes: usize, change: f64 },

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate optics: A*w + 2iB/(k*w) vanishes")]
    DegenerateOptics,

    #[error(
        "basis mismatch: covariance has {covariance} quadratures, coupling vector has {coupling}"
    )]
    BasisMismatch { covariance: usize, coupling: usize },

    #[error("complex covariance is not Hermitian (residue {residue:e})")]
    ImaginaryResidue { residue: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
