//! POVM elements on a qubit: validation, construction from an optimal
//! solution through the interferometer dilation, and extraction of the
//! effective measurement realized by a circuit unitary.

use crate::circuit::{build_unitary, solve_angles, CircuitUnitary, DetectorMode, OutcomeMap};
use crate::ensemble::Ensemble;
use crate::error::{FrioError, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, max_abs, Mat2, C64};
use crate::optimal::FrioSolution;
use serde::Serialize;
use std::fmt;

const HERMITIAN_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeLabel {
    Identify1,
    Identify2,
    Inconclusive,
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeLabel::Identify1 => "identify-1",
            OutcomeLabel::Identify2 => "identify-2",
            OutcomeLabel::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<(OutcomeLabel, Mat2)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub element_count: usize,
    pub min_eigenvalues: Vec<f64>,
    pub hermiticity_defects: Vec<f64>,
    /// Max entrywise modulus of `Σ Π_k − 𝟙`.
    pub completeness_residual: f64,
    pub duplicate_labels: bool,
    pub passed: bool,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        if self.passed {
            return "valid".to_string();
        }
        let mut reasons = Vec::new();
        if !(2..=3).contains(&self.element_count) {
            reasons.push(format!("{} elements (expected 2 or 3)", self.element_count));
        }
        if self.duplicate_labels {
            reasons.push("duplicate outcome labels".to_string());
        }
        for (k, (&lo, &herm)) in self
            .min_eigenvalues
            .iter()
            .zip(&self.hermiticity_defects)
            .enumerate()
        {
            if herm > HERMITIAN_TOL {
                reasons.push(format!("element {k} not Hermitian ({herm:e})"));
            }
            if lo < -EIGEN_TOL {
                reasons.push(format!("element {k} has eigenvalue {lo:e}"));
            }
        }
        if self.completeness_residual > COMPLETENESS_TOL {
            reasons.push(format!(
                "completeness residual {:e}",
                self.completeness_residual
            ));
        }
        reasons.join("; ")
    }
}

impl Povm {
    /// Wraps the elements without checking them; see [`Povm::validate`].
    pub fn new(elements: Vec<(OutcomeLabel, Mat2)>) -> Self {
        Self { elements }
    }

    pub fn checked(elements: Vec<(OutcomeLabel, Mat2)>) -> Result<Self> {
        let povm = Self::new(elements);
        let report = povm.validate();
        if report.passed {
            Ok(povm)
        } else {
            Err(FrioError::InvalidPovm(report.summary()))
        }
    }

    pub fn elements(&self) -> &[(OutcomeLabel, Mat2)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element for `label`, or the zero operator if the outcome is absent.
    pub fn element(&self, label: OutcomeLabel) -> Mat2 {
        self.elements
            .iter()
            .filter(|(l, _)| *l == label)
            .fold(Mat2::zeros(), |acc, (_, m)| acc + m)
    }

    pub fn validate(&self) -> ValidationReport {
        let min_eigenvalues: Vec<f64> = self
            .elements
            .iter()
            .map(|(_, m)| hermitian_eigenvalues(m)[0])
            .collect();
        let hermiticity_defects: Vec<f64> = self
            .elements
            .iter()
            .map(|(_, m)| hermiticity_defect(m))
            .collect();
        let total = self
            .elements
            .iter()
            .fold(Mat2::zeros(), |acc, (_, m)| acc + m);
        let completeness_residual = max_abs(&(total - Mat2::identity()));
        let duplicate_labels = self
            .elements
            .iter()
            .enumerate()
            .any(|(i, (a, _))| self.elements[..i].iter().any(|(b, _)| a == b));
        let element_count = self.elements.len();
        let passed = (2..=3).contains(&element_count)
            && !duplicate_labels
            && min_eigenvalues.iter().all(|&lo| lo >= -EIGEN_TOL)
            && hermiticity_defects.iter().all(|&h| h <= HERMITIAN_TOL)
            && completeness_residual <= COMPLETENESS_TOL;
        ValidationReport {
            element_count,
            min_eigenvalues,
            hermiticity_defects,
            completeness_residual,
            duplicate_labels,
            passed,
        }
    }

    /// Row-major `[re, im]` pairs per element, for serialization.
    pub fn to_serializable(&self) -> Vec<SerializedElement> {
        self.elements
            .iter()
            .map(|(label, m)| SerializedElement {
                label: *label,
                matrix: [
                    [m[(0, 0)].re, m[(0, 0)].im],
                    [m[(0, 1)].re, m[(0, 1)].im],
                    [m[(1, 0)].re, m[(1, 0)].im],
                    [m[(1, 1)].re, m[(1, 1)].im],
                ],
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SerializedElement {
    pub label: OutcomeLabel,
    pub matrix: [[f64; 2]; 4],
}

/// Effective qubit POVM of a dilation: `Π_k = ⟨1| U† P_k U |1⟩`, with the
/// qubit entering on path 1 and detector modes grouped by `map`.
pub fn effective_povm(unitary: &CircuitUnitary, map: &OutcomeMap) -> Result<Povm> {
    unitary.check_unitary()?;
    let u = unitary.matrix();
    let mut elements: Vec<(OutcomeLabel, Mat2)> = Vec::with_capacity(3);
    for mode in DetectorMode::ALL {
        let row = mode.index();
        // columns 0, 1 are |H,1⟩, |V,1⟩: the qubit on the input path
        let amps: [C64; 2] = [u[(row, 0)], u[(row, 1)]];
        let pi = Mat2::from_fn(|i, j| amps[i].conj() * amps[j]);
        let label = map.label(mode);
        match elements.iter_mut().find(|(l, _)| *l == label) {
            Some((_, m)) => *m += pi,
            None => elements.push((label, pi)),
        }
    }
    elements.sort_by_key(|(l, _)| *l as u8);
    Ok(Povm::new(elements))
}

/// Optimal measurement for `solution`, realized through the interferometer.
pub fn from_solution(ensemble: &Ensemble, solution: &FrioSolution) -> Result<Povm> {
    let config = solve_angles(ensemble, solution)?;
    let unitary = build_unitary(&config);
    effective_povm(&unitary, &OutcomeMap::for_config(&config))
}
