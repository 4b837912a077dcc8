use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("parameter set mismatch: {0}")]
    ParamMismatch(String),
    #[error("parameter degree cap {cap} exceeded for `{param}`")]
    DegreeCap { param: String, cap: u32 },
    #[error("unbound parameter `{0}` in evaluation")]
    UnboundParam(String),
    #[error("log power {m} exceeds cap {cap}")]
    LogCapOverflow { m: u32, cap: u32 },
    #[error("negative power {0} where a nonnegative-power series is required")]
    NegativePower(String),
    #[error("series operand must be a pure polynomial: {0}")]
    NotPolynomial(String),
    #[error("series argument must have strictly positive valuation")]
    ZeroValuation,
    #[error("evaluation point must be positive (got {0})")]
    NonPositivePoint(String),
    #[error("divergent evaluation: bare ln(x) term at x = 0")]
    DivergentAtZero,
    #[error("operation not representable on the exact rational backend: {0}")]
    RationalBackend(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("theta gate is ambiguous for power {power}: it lies inside the range ({lo}, {hi}) of the variable order")]
    GateAmbiguous {
        power: String,
        lo: String,
        hi: String,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("quadrature did not converge within {0} refinement levels")]
    QuadratureNonConvergence(usize),
    #[error("solve did not stabilize within {max_iterations} iterations; lowest still-moving power {moving_power}")]
    NonStabilized {
        max_iterations: usize,
        moving_power: String,
    },
    #[error("parameter resolution failed: {0}")]
    Resolution(String),
    #[error("expression error at {path}: {source}")]
    AtNode {
        path: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the expression-tree path it occurred at.
    pub fn at(self, path: &str) -> Error {
        match self {
            Error::AtNode { .. } => self,
            other => Error::AtNode {
                path: path.to_string(),
                source: Box::new(other),
            },
        }
    }
}
