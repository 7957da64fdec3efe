//! The two-state discrimination problem: states, priors, density operators
//! and Born-rule bookkeeping of success, error and inconclusive rates.

use crate::error::{FrioError, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, max_abs, real, trace_product, Mat2, C64};
use crate::noise::{apply_white_noise, Visibility};
use crate::povm::{OutcomeLabel, Povm};
use nalgebra::Vector2;

const NORM_TOL: f64 = 1e-12;
const PROB_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-10;

/// Which of the two ensemble members is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    One,
    Two,
}

impl StateLabel {
    pub fn index(self) -> usize {
        match self {
            StateLabel::One => 0,
            StateLabel::Two => 1,
        }
    }

    pub fn other(self) -> StateLabel {
        match self {
            StateLabel::One => StateLabel::Two,
            StateLabel::Two => StateLabel::One,
        }
    }

    pub const BOTH: [StateLabel; 2] = [StateLabel::One, StateLabel::Two];
}

/// Normalized pure qubit state in the logical (≡ H/V polarization) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amplitudes: Vector2<C64>,
}

impl QubitState {
    pub fn new(a0: C64, a1: C64) -> Result<Self> {
        let norm = a0.norm_sqr() + a1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(FrioError::InvalidState(format!(
                "squared norm {norm} differs from 1"
            )));
        }
        Ok(Self {
            amplitudes: Vector2::new(a0, a1),
        })
    }

    /// `cos(angle)|0⟩ + sin(angle)|1⟩`.
    pub fn from_angle(angle: f64) -> Self {
        Self {
            amplitudes: Vector2::new(real(angle.cos()), real(angle.sin())),
        }
    }

    pub fn amplitudes(&self) -> &Vector2<C64> {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> Mat2 {
        self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
        }
    }
}

/// Unit-trace positive semidefinite 2×2 operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator {
    matrix: Mat2,
}

impl DensityOperator {
    pub fn new(matrix: Mat2) -> Result<Self> {
        let herm = hermiticity_defect(&matrix);
        if herm > NORM_TOL {
            return Err(FrioError::InvalidState(format!(
                "density operator not Hermitian (defect {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(FrioError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let [lo, _] = hermitian_eigenvalues(&matrix);
        if lo < -NORM_TOL {
            return Err(FrioError::InvalidState(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(matrix: Mat2) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    /// `tr(ρ Π)`, real part.
    pub fn expectation(&self, op: &Mat2) -> f64 {
        trace_product(&self.matrix, op).re
    }

    /// Convex combination `w ρ + (1 − w) σ`.
    pub fn mix(&self, other: &DensityOperator, w: f64) -> DensityOperator {
        Self {
            matrix: self.matrix * real(w) + other.matrix * real(1.0 - w),
        }
    }
}

/// Two pure states `cos α|0⟩ ± sin α|1⟩` with priors `η₁ ≤ η₂`.
///
/// Inputs with `η₁ > ½` are relabeled so that the less likely state is
/// always state 1; [`Ensemble::swapped`] records this so per-state results
/// can be mapped back with [`OutcomeProbabilities::relabeled`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    alpha: f64,
    overlap: f64,
    eta1: f64,
    swapped: bool,
}

impl Ensemble {
    /// Builds the ensemble from the overlap `s = ⟨φ₁|φ₂⟩` and the prior of the
    /// first state.
    pub fn new(overlap: f64, eta1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&overlap) {
            return Err(FrioError::Domain {
                param: "s",
                value: overlap,
                expected: "0 ≤ s ≤ 1",
            });
        }
        if !(eta1 > 0.0 && eta1 < 1.0) {
            return Err(FrioError::Domain {
                param: "eta1",
                value: eta1,
                expected: "0 < η₁ < 1",
            });
        }
        let (eta1, swapped) = if eta1 > 0.5 {
            (1.0 - eta1, true)
        } else {
            (eta1, false)
        };
        Ok(Self {
            alpha: 0.5 * overlap.acos(),
            overlap,
            eta1,
            swapped,
        })
    }

    /// State half-angle `α`, with `s = cos 2α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        1.0 - self.eta1
    }

    pub fn eta(&self, label: StateLabel) -> f64 {
        match label {
            StateLabel::One => self.eta1(),
            StateLabel::Two => self.eta2(),
        }
    }

    /// True when the caller's first state was the more likely one.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    /// Prior of the caller's first state.
    pub fn caller_eta1(&self) -> f64 {
        if self.swapped {
            self.eta2()
        } else {
            self.eta1
        }
    }

    pub fn state(&self, label: StateLabel) -> QubitState {
        match label {
            StateLabel::One => QubitState::from_angle(self.alpha),
            StateLabel::Two => QubitState::from_angle(-self.alpha),
        }
    }

    pub fn density(&self, label: StateLabel) -> DensityOperator {
        self.state(label).density()
    }

    /// Average state `ρ = η₁ρ₁ + η₂ρ₂`.
    pub fn average_density(&self) -> DensityOperator {
        self.density(StateLabel::One)
            .mix(&self.density(StateLabel::Two), self.eta1)
    }
}

/// Per-state success `p`, error `r` and inconclusive `q` probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateOutcomes {
    pub p: f64,
    pub r: f64,
    pub q: f64,
}

impl StateOutcomes {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p, self.r, self.q]
    }
}

/// Per-state and prior-averaged outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    pub p1: f64,
    pub r1: f64,
    pub q1: f64,
    pub p2: f64,
    pub r2: f64,
    pub q2: f64,
    pub ps: f64,
    pub pe: f64,
    pub q: f64,
}

impl OutcomeProbabilities {
    /// Validates per-state completeness and derives the averages.
    pub fn from_states(eta1: f64, first: StateOutcomes, second: StateOutcomes) -> Result<Self> {
        let clamp = |what, v: f64| -> Result<f64> {
            if !v.is_finite() || !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) {
                Err(FrioError::Probability { what, value: v })
            } else {
                Ok(v.clamp(0.0, 1.0))
            }
        };
        let p1 = clamp("p1", first.p)?;
        let r1 = clamp("r1", first.r)?;
        let q1 = clamp("q1", first.q)?;
        let p2 = clamp("p2", second.p)?;
        let r2 = clamp("r2", second.r)?;
        let q2 = clamp("q2", second.q)?;
        for (what, total) in [("p1 + r1 + q1", p1 + r1 + q1), ("p2 + r2 + q2", p2 + r2 + q2)] {
            if (total - 1.0).abs() > SUM_TOL {
                return Err(FrioError::Probability { what, value: total });
            }
        }
        let eta2 = 1.0 - eta1;
        Ok(Self {
            p1,
            r1,
            q1,
            p2,
            r2,
            q2,
            ps: eta1 * p1 + eta2 * p2,
            pe: eta1 * r1 + eta2 * r2,
            q: eta1 * q1 + eta2 * q2,
        })
    }

    pub fn state(&self, label: StateLabel) -> StateOutcomes {
        match label {
            StateLabel::One => StateOutcomes {
                p: self.p1,
                r: self.r1,
                q: self.q1,
            },
            StateLabel::Two => StateOutcomes {
                p: self.p2,
                r: self.r2,
                q: self.q2,
            },
        }
    }

    /// Exchanges the state labels when `swap` is set; averages are unchanged.
    pub fn relabeled(&self, swap: bool) -> Self {
        if !swap {
            return *self;
        }
        Self {
            p1: self.p2,
            r1: self.r2,
            q1: self.q2,
            p2: self.p1,
            r2: self.r1,
            q2: self.q1,
            ..*self
        }
    }

    /// Largest absolute difference over all nine entries.
    pub fn max_deviation(&self, other: &OutcomeProbabilities) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `[p1, r1, q1, p2, r2, q2, Ps, Pe, Q]`.
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.p1, self.r1, self.q1, self.p2, self.r2, self.q2, self.ps, self.pe, self.q,
        ]
    }
}

/// Born-rule outcome probabilities of `povm` on the ensemble, optionally with
/// the white-noise channel applied to both states first.
pub fn born_probabilities(
    ensemble: &Ensemble,
    povm: &Povm,
    noise: Option<&Visibility>,
) -> Result<OutcomeProbabilities> {
    let report = povm.validate();
    if !report.passed {
        return Err(FrioError::InvalidPovm(report.summary()));
    }
    let identify1 = povm.element(OutcomeLabel::Identify1);
    let identify2 = povm.element(OutcomeLabel::Identify2);
    let inconclusive = povm.element(OutcomeLabel::Inconclusive);

    let outcomes = |label: StateLabel| {
        let mut rho = ensemble.density(label);
        if let Some(v) = noise {
            rho = apply_white_noise(&rho, v);
        }
        let (success, error) = match label {
            StateLabel::One => (&identify1, &identify2),
            StateLabel::Two => (&identify2, &identify1),
        };
        StateOutcomes {
            p: rho.expectation(success),
            r: rho.expectation(error),
            q: rho.expectation(&inconclusive),
        }
    };
    OutcomeProbabilities::from_states(
        ensemble.eta1(),
        outcomes(StateLabel::One),
        outcomes(StateLabel::Two),
    )
}

/// Max entrywise modulus of `ρ − σ`.
pub fn density_distance(a: &DensityOperator, b: &DensityOperator) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn projective(e0: Mat2, e1: Mat2) -> Povm {
        Povm::new(vec![
            (OutcomeLabel::Identify1, e0),
            (OutcomeLabel::Identify2, e1),
            (OutcomeLabel::Inconclusive, Mat2::zeros()),
        ])
    }

    #[test]
    fn orthogonal_and_identical_limits() {
        let e = Ensemble::new(0.0, 0.5).unwrap();
        assert!((e.alpha() - FRAC_PI_4).abs() < 1e-15);
        let ov = e.state(StateLabel::One).inner(&e.state(StateLabel::Two));
        assert!(ov.norm() < 1e-15);

        let e = Ensemble::new(1.0, 0.5).unwrap();
        assert_eq!(e.alpha(), 0.0);
        assert_eq!(e.state(StateLabel::One), e.state(StateLabel::Two));
    }

    #[test]
    fn half_overlap_gives_pi_over_six() {
        let e = Ensemble::new(0.5, 0.3).unwrap();
        assert!((e.alpha() - FRAC_PI_6).abs() < 1e-15);
        let ov = e.state(StateLabel::One).inner(&e.state(StateLabel::Two));
        assert!((ov.re - 0.5).abs() < 1e-15 && ov.im == 0.0);
        assert_eq!(e.eta1() + e.eta2(), 1.0);
    }

    #[test]
    fn large_prior_is_swapped() {
        let e = Ensemble::new(0.4, 0.7).unwrap();
        assert!(e.swapped());
        assert!((e.eta1() - 0.3).abs() < 1e-15);
        assert!((e.caller_eta1() - 0.7).abs() < 1e-15);
        assert!(!Ensemble::new(0.4, 0.5).unwrap().swapped());
    }

    #[test]
    fn domain_errors_name_the_parameter() {
        for (s, eta) in [(-0.1, 0.5), (1.1, 0.5), (f64::NAN, 0.5)] {
            match Ensemble::new(s, eta) {
                Err(FrioError::Domain { param: "s", .. }) => {}
                other => panic!("expected s domain error, got {other:?}"),
            }
        }
        for eta in [0.0, 1.0, -0.2, f64::NAN] {
            match Ensemble::new(0.5, eta) {
                Err(FrioError::Domain { param: "eta1", .. }) => {}
                other => panic!("expected eta1 domain error, got {other:?}"),
            }
        }
    }

    #[test]
    fn qubit_state_rejects_unnormalized() {
        assert!(QubitState::new(real(1.0), real(0.1)).is_err());
        assert!(QubitState::new(real(0.6), real(0.8)).is_ok());
    }

    #[test]
    fn density_operator_validation() {
        let bad_trace = Mat2::identity();
        assert!(DensityOperator::new(bad_trace).is_err());
        let negative = Mat2::new(real(1.5), real(0.0), real(0.0), real(-0.5));
        assert!(DensityOperator::new(negative).is_err());
        let mixed = Mat2::identity() * real(0.5);
        assert!(DensityOperator::new(mixed).is_ok());
    }

    #[test]
    fn computational_basis_measurement_on_orthogonal_states() {
        // |φ₁,₂⟩ = (|0⟩ ± |1⟩)/√2: the Z basis gives 1/2 everywhere.
        let e = Ensemble::new(0.0, 0.5).unwrap();
        let zero = QubitState::from_angle(0.0).projector();
        let one = QubitState::from_angle(std::f64::consts::FRAC_PI_2).projector();
        let probs = born_probabilities(&e, &projective(zero, one), None).unwrap();
        for v in [probs.p1, probs.r1, probs.p2, probs.r2] {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert_eq!(probs.q, 0.0);
    }

    #[test]
    fn all_inconclusive_povm() {
        let e = Ensemble::new(0.3, 0.4).unwrap();
        let povm = Povm::new(vec![
            (OutcomeLabel::Identify1, Mat2::zeros()),
            (OutcomeLabel::Identify2, Mat2::zeros()),
            (OutcomeLabel::Inconclusive, Mat2::identity()),
        ]);
        let probs = born_probabilities(&e, &povm, None).unwrap();
        for q in [probs.q1, probs.q2, probs.q] {
            assert!((q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_povm_is_rejected() {
        let e = Ensemble::new(0.3, 0.4).unwrap();
        let zero = QubitState::from_angle(0.0).projector();
        let povm = projective(zero * real(1.2), Mat2::zeros());
        assert!(matches!(
            born_probabilities(&e, &povm, None),
            Err(FrioError::InvalidPovm(_))
        ));
    }

    #[test]
    fn probability_tolerance_clamps_only_tiny_excursions() {
        let ok = OutcomeProbabilities::from_states(
            0.5,
            StateOutcomes { p: 1.0 + 5e-13, r: -5e-13, q: 0.0 },
            StateOutcomes { p: 1.0, r: 0.0, q: 0.0 },
        )
        .unwrap();
        assert_eq!((ok.p1, ok.r1), (1.0, 0.0));
        let err = OutcomeProbabilities::from_states(
            0.5,
            StateOutcomes { p: 1.0 + 1e-9, r: -1e-9, q: 0.0 },
            StateOutcomes { p: 1.0, r: 0.0, q: 0.0 },
        );
        assert!(matches!(err, Err(FrioError::Probability { what: "p1", .. })));
    }

    #[test]
    fn relabeling_swaps_states_and_keeps_averages() {
        let probs = OutcomeProbabilities::from_states(
            0.3,
            StateOutcomes { p: 0.6, r: 0.1, q: 0.3 },
            StateOutcomes { p: 0.8, r: 0.05, q: 0.15 },
        )
        .unwrap();
        let swapped = probs.relabeled(true);
        assert_eq!(swapped.p1, 0.8);
        assert_eq!(swapped.q2, 0.3);
        assert_eq!(swapped.pe, probs.pe);
        assert_eq!(probs.relabeled(false), probs);
    }
}
