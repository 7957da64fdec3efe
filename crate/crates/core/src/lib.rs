//! Optimal discrimination of two pure qubit states with a fixed rate of
//! inconclusive results, and its linear-optics realization.

pub mod circuit;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod optimal;
pub mod oracle;
pub mod povm;
pub mod report;

pub use circuit::{build_unitary, solve_angles, CircuitConfig, CircuitUnitary, DetectorMode, OutcomeMap};
pub use ensemble::{born_probabilities, Ensemble, OutcomeProbabilities, StateLabel};
pub use error::{FrioError, Result};
pub use noise::{apply_white_noise, Visibility};
pub use optimal::{classify, solve, FrioSolution, Interval};
pub use povm::{effective_povm, OutcomeLabel, Povm};
