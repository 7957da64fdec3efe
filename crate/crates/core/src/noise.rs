//! White-noise (depolarizing) model parameterized by interferometer visibility.

use crate::ensemble::DensityOperator;
use crate::error::{FrioError, Result};
use crate::linalg::{real, Mat2};

/// Measured interference visibility `ε` and its uncertainty.
///
/// The uncertainty is carried for reporting only; it never enters a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    epsilon: f64,
    uncertainty: f64,
}

impl Visibility {
    /// Mean visibility measured on the Sagnac setup.
    pub const MEASURED: Visibility = Visibility {
        epsilon: 0.981,
        uncertainty: 0.006,
    };

    pub fn new(epsilon: f64, uncertainty: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(FrioError::Domain {
                param: "visibility",
                value: epsilon,
                expected: "0 ≤ ε ≤ 1",
            });
        }
        if !(uncertainty >= 0.0 && uncertainty.is_finite()) {
            return Err(FrioError::Domain {
                param: "visibility uncertainty",
                value: uncertainty,
                expected: "finite and ≥ 0",
            });
        }
        Ok(Self {
            epsilon,
            uncertainty,
        })
    }

    pub fn ideal() -> Self {
        Self {
            epsilon: 1.0,
            uncertainty: 0.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    /// Born probability of `element` on the noisy version of `rho`, in closed
    /// form: `ε tr(ρΠ) + (1 − ε) tr(Π)/2`.
    pub fn noisy_expectation(&self, rho: &DensityOperator, element: &Mat2) -> f64 {
        self.epsilon * rho.expectation(element) + (1.0 - self.epsilon) * element.trace().re / 2.0
    }
}

impl Default for Visibility {
    fn default() -> Self {
        Self::MEASURED
    }
}

/// `ρ' = ε ρ + (1 − ε) 𝟙/2`.
pub fn apply_white_noise(rho: &DensityOperator, v: &Visibility) -> DensityOperator {
    let eps = v.epsilon();
    let m = rho.matrix() * real(eps) + Mat2::identity() * real(0.5 * (1.0 - eps));
    DensityOperator::from_matrix_unchecked(m)
}
