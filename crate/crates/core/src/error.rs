use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: argument {value} is outside the domain ({expected})")]
    Domain {
        op: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "quadrature on [{lo}, {hi}] did not converge: estimated error {estimate:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error(
        "maximization hit the iteration limit ({iterations}); best so far f({argmax}) = {max}"
    )]
    IterationLimit {
        iterations: usize,
        argmax: f64,
        max: f64,
    },

    #[error("information set has zero probability, uplink power is undefined")]
    DegenerateWit,

    #[error("grid search has no feasible point")]
    EmptyGrid,

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            op,
            value,
            expected,
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
