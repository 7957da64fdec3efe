use thiserror::Error;

pub type Result<T> = std::result::Result<T, FrioError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrioError {
    #[error("parameter `{param}` = {value} out of range: {expected}")]
    Domain {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("inconclusive rate Q = {q} exceeds the maximum Q_max = {q_max}")]
    QAboveMax { q: f64, q_max: f64 },

    #[error("degenerate denominator: Q̄² − (Q₀ − Q)² = {value}")]
    DegenerateDenominator { value: f64 },

    #[error("probability {value} for {what} lies outside [0, 1] beyond tolerance")]
    Probability { what: &'static str, value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("matrix is not unitary: max |U†U − I| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("angle solver did not converge (best residual {best_residual:e})")]
    SolverFailed { best_residual: f64 },

    #[error("target probabilities are not realizable by the interferometer: {0}")]
    Infeasible(String),

    #[error("estimator undefined: zero total counts for prepared state {state}")]
    EstimatorUndefined { state: usize },

    #[error("oracle found no feasible point (best constraint violation {violation:e})")]
    OracleInfeasible { violation: f64 },

    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FrioError {
    fn from(err: std::io::Error) -> Self {
        FrioError::Io(err.to_string())
    }
}
