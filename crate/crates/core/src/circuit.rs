//! Double-path Sagnac dilation on polarization ⊗ path.
//!
//! Basis order is `|H,1⟩, |V,1⟩, |H,2⟩, |V,2⟩`. The global unitary is
//! `U = C(θ₃) · CNOT · C(θ₂) · CNOT · C(θ₁)` where
//!
//! * `C(θ₁)` acts on the polarization in both paths (HWP₁ before the loop),
//! * the PBS acts as a CNOT controlled by polarization that sends `|H⟩` into
//!   path 2 and leaves `|V⟩` on path 1 (`|H,1⟩ ↔ |H,2⟩`),
//! * `C(θ₂)` acts on path 2 only (HWP₂ inside the loop),
//! * `C(θ₃)` acts on path 1 only (HWP₃ before the output PBS).
//!
//! Every plate is a half-wave retarder, i.e. the reflection
//! `[[cos θ, sin θ], [sin θ, −cos θ]]` in the effective angle `θ`, which is
//! twice the mechanical plate angle (see [`waveplate_angle`]). With the qubit
//! entering on path 1 the `|H,2⟩` port stays dark for every setting.

use crate::ensemble::{Ensemble, QubitState, StateLabel};
use crate::error::{FrioError, Result};
use crate::linalg::{max_abs, real, Mat2, Mat4, C64};
use crate::optimal::{FrioSolution, Interval};
use crate::povm::OutcomeLabel;
use nalgebra::{Matrix3, Vector3, Vector4};
use std::f64::consts::{FRAC_PI_4, PI};

const UNITARY_TOL: f64 = 1e-10;
/// Largest per-probability mismatch accepted from the angle solver.
pub const SOLVER_TOLERANCE: f64 = 1e-9;

/// Output ports of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorMode {
    H1,
    V1,
    H2,
    V2,
}

impl DetectorMode {
    pub const ALL: [DetectorMode; 4] = [
        DetectorMode::H1,
        DetectorMode::V1,
        DetectorMode::H2,
        DetectorMode::V2,
    ];

    pub fn index(self) -> usize {
        match self {
            DetectorMode::H1 => 0,
            DetectorMode::V1 => 1,
            DetectorMode::H2 => 2,
            DetectorMode::V2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectorMode::H1 => "H1",
            DetectorMode::V1 => "V1",
            DetectorMode::H2 => "H2",
            DetectorMode::V2 => "V2",
        }
    }
}

/// Assignment of detector ports to measurement outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeMap {
    labels: [OutcomeLabel; 4],
}

impl OutcomeMap {
    /// Three-outcome wiring: `V1` identifies state 1, `H1` state 2, `V2` is
    /// inconclusive.
    pub const THREE_OUTCOME: OutcomeMap = OutcomeMap {
        labels: [
            OutcomeLabel::Identify2,
            OutcomeLabel::Identify1,
            OutcomeLabel::Inconclusive,
            OutcomeLabel::Inconclusive,
        ],
    };

    /// Two-outcome wiring: `H1` identifies state 2, everything else is
    /// inconclusive.
    pub const TWO_OUTCOME: OutcomeMap = OutcomeMap {
        labels: [
            OutcomeLabel::Identify2,
            OutcomeLabel::Inconclusive,
            OutcomeLabel::Inconclusive,
            OutcomeLabel::Inconclusive,
        ],
    };

    pub fn for_config(config: &CircuitConfig) -> Self {
        if config.two_outcome {
            Self::TWO_OUTCOME
        } else {
            Self::THREE_OUTCOME
        }
    }

    pub fn from_modes(pairs: [(DetectorMode, OutcomeLabel); 4]) -> Self {
        let mut labels = [OutcomeLabel::Inconclusive; 4];
        for (mode, label) in pairs {
            labels[mode.index()] = label;
        }
        Self { labels }
    }

    pub fn label(&self, mode: DetectorMode) -> OutcomeLabel {
        self.labels[mode.index()]
    }
}

/// Waveplate settings. `theta` is the mechanical angle of the preparation
/// plate (`s = cos 4θ`); `theta1..theta3` are effective reflection angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitConfig {
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub two_outcome: bool,
}

impl CircuitConfig {
    pub fn new(theta: f64, theta1: f64, theta2: f64, theta3: f64, two_outcome: bool) -> Self {
        Self {
            theta,
            theta1,
            theta2,
            theta3,
            two_outcome,
        }
    }

    /// Preparation angle for `ensemble`: `θ = arccos(s)/4`.
    pub fn preparation_angle(ensemble: &Ensemble) -> f64 {
        0.5 * ensemble.alpha()
    }

    /// Signed plate angle producing `label`: `+θ` for state 1, `−θ` for state 2.
    pub fn preparation_setting(&self, label: StateLabel) -> f64 {
        match label {
            StateLabel::One => self.theta,
            StateLabel::Two => -self.theta,
        }
    }

    /// `cos 2θ|H⟩ ± sin 2θ|V⟩`.
    pub fn prepared_state(&self, label: StateLabel) -> QubitState {
        QubitState::from_angle(2.0 * self.preparation_setting(label))
    }

    pub fn effective_angles(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    /// Mechanical plate angles of HWP₁..HWP₃ in degrees.
    pub fn waveplate_degrees(&self) -> [f64; 3] {
        self.effective_angles()
            .map(|t| waveplate_angle(t).to_degrees())
    }
}

/// Mechanical half-wave-plate angle for an effective reflection angle.
pub fn waveplate_angle(effective: f64) -> f64 {
    0.5 * effective
}

/// Half-wave plate as a reflection on (H, V).
fn half_wave(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(real(c), real(s), real(s), real(-c))
}

fn on_both_paths(plate: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(plate);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(plate);
    m
}

fn on_path(plate: &Mat2, path: usize) -> Mat4 {
    let mut m = Mat4::identity();
    let off = 2 * path;
    m.fixed_view_mut::<2, 2>(off, off).copy_from(plate);
    m
}

/// Polarization-controlled path swap `|H,1⟩ ↔ |H,2⟩`.
fn pbs_cnot() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(2, 0)] = real(1.0);
    m[(0, 2)] = real(1.0);
    m[(1, 1)] = real(1.0);
    m[(3, 3)] = real(1.0);
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitUnitary {
    matrix: Mat4,
}

impl CircuitUnitary {
    pub fn new(matrix: Mat4) -> Result<Self> {
        let u = Self { matrix };
        u.check_unitary()?;
        Ok(u)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        max_abs(&(self.matrix.adjoint() * self.matrix - Mat4::identity()))
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_defect();
        if deviation.is_finite() && deviation <= UNITARY_TOL {
            Ok(())
        } else {
            Err(FrioError::NonUnitary { deviation })
        }
    }
}

pub fn build_unitary(config: &CircuitConfig) -> CircuitUnitary {
    let cnot = pbs_cnot();
    let matrix = on_path(&half_wave(config.theta3), 0)
        * cnot
        * on_path(&half_wave(config.theta2), 1)
        * cnot
        * on_both_paths(&half_wave(config.theta1));
    CircuitUnitary { matrix }
}

/// Output amplitudes on the four detector ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeAmplitudes {
    amplitudes: [C64; 4],
}

impl OutcomeAmplitudes {
    pub fn amplitude(&self, mode: DetectorMode) -> C64 {
        self.amplitudes[mode.index()]
    }

    pub fn probability(&self, mode: DetectorMode) -> f64 {
        self.amplitude(mode).norm_sqr()
    }

    pub fn total(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of `label` under `map`.
    pub fn outcome(&self, map: &OutcomeMap, label: OutcomeLabel) -> f64 {
        DetectorMode::ALL
            .iter()
            .filter(|m| map.label(**m) == label)
            .map(|m| self.probability(*m))
            .sum()
    }
}

/// `U (|state⟩ ⊗ |1⟩)`.
pub fn propagate(config: &CircuitConfig, state: &QubitState) -> OutcomeAmplitudes {
    propagate_with(&build_unitary(config), state)
}

pub fn propagate_with(unitary: &CircuitUnitary, state: &QubitState) -> OutcomeAmplitudes {
    let a = state.amplitudes();
    let input = Vector4::new(a[0], a[1], real(0.0), real(0.0));
    let out = unitary.matrix() * input;
    OutcomeAmplitudes {
        amplitudes: [out[0], out[1], out[2], out[3]],
    }
}

/// Success, error and inconclusive probabilities the configured circuit
/// produces on the ensemble states, `[[p₁, r₁, q₁], [p₂, r₂, q₂]]`.
pub fn circuit_outcomes(config: &CircuitConfig, ensemble: &Ensemble) -> [[f64; 3]; 2] {
    let unitary = build_unitary(config);
    let map = OutcomeMap::for_config(config);
    StateLabel::BOTH.map(|label| {
        let out = propagate_with(&unitary, &ensemble.state(label));
        let (success, error) = match label {
            StateLabel::One => (OutcomeLabel::Identify1, OutcomeLabel::Identify2),
            StateLabel::Two => (OutcomeLabel::Identify2, OutcomeLabel::Identify1),
        };
        [
            out.outcome(&map, success),
            out.outcome(&map, error),
            out.outcome(&map, OutcomeLabel::Inconclusive),
        ]
    })
}

/// Largest mismatch between the circuit statistics and the solution.
pub fn fit_residual(ensemble: &Ensemble, solution: &FrioSolution, config: &CircuitConfig) -> f64 {
    let got = circuit_outcomes(config, ensemble);
    let want = [
        solution.probs.state(StateLabel::One).as_array(),
        solution.probs.state(StateLabel::Two).as_array(),
    ];
    got.iter()
        .flatten()
        .zip(want.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Waveplate settings whose output statistics reproduce `solution`.
///
/// Equal priors use the closed form `θ₁ = 0`, `θ₃ = π/4`,
/// `θ₂ = arcsin(√q / cos 2θ)`. Otherwise the analytic inversion of the
/// port probabilities supplies up to eight branch seeds that are polished by
/// damped Gauss–Newton; interval III uses the two-outcome setting with
/// `θ₁ = θ₂ = 0`.
pub fn solve_angles(ensemble: &Ensemble, solution: &FrioSolution) -> Result<CircuitConfig> {
    check_realizable(ensemble, solution)?;
    let theta = CircuitConfig::preparation_angle(ensemble);
    let alpha = ensemble.alpha();
    let probs = &solution.probs;

    let mut best = Best::default();
    let consider = |best: &mut Best, cfg: CircuitConfig| best.offer(ensemble, solution, cfg);

    if solution.interval() == Interval::III {
        let base = probs.r1.sqrt().clamp(0.0, 1.0).acos();
        for theta3 in [base - alpha, -base - alpha] {
            let cfg = CircuitConfig::new(theta, 0.0, 0.0, wrap(theta3), true);
            if let Some(cfg) = consider(&mut best, cfg) {
                return Ok(cfg);
            }
        }
        let seed = best.config.expect("two candidates evaluated");
        let polished = polish(ensemble, solution, seed, [false, false, true]);
        return consider(&mut best, polished).ok_or(FrioError::SolverFailed {
            best_residual: best.residual,
        });
    }

    let cos_alpha = alpha.cos();
    let equal_priors = (ensemble.eta1() - 0.5).abs() <= 1e-15;
    let equal_prior_seed = CircuitConfig::new(
        theta,
        0.0,
        (probs.q1.sqrt() / cos_alpha).clamp(0.0, 1.0).asin(),
        FRAC_PI_4,
        false,
    );
    if equal_priors {
        if let Some(cfg) = consider(&mut best, equal_prior_seed) {
            return Ok(cfg);
        }
    }

    let mut seeds = analytic_seeds(ensemble, solution);
    seeds.push(equal_prior_seed);
    seeds.extend(seed_grid(theta));
    for seed in seeds {
        if let Some(cfg) = consider(&mut best, seed) {
            return Ok(cfg);
        }
        let polished = polish(ensemble, solution, seed, [true, true, true]);
        if let Some(cfg) = consider(&mut best, polished) {
            return Ok(cfg);
        }
    }
    Err(FrioError::SolverFailed {
        best_residual: best.residual,
    })
}

struct Best {
    residual: f64,
    config: Option<CircuitConfig>,
}

impl Default for Best {
    fn default() -> Self {
        Self {
            residual: f64::INFINITY,
            config: None,
        }
    }
}

impl Best {
    fn offer(
        &mut self,
        ensemble: &Ensemble,
        solution: &FrioSolution,
        cfg: CircuitConfig,
    ) -> Option<CircuitConfig> {
        let res = fit_residual(ensemble, solution, &cfg);
        if res < self.residual || self.config.is_none() {
            self.residual = res;
            self.config = Some(cfg);
        }
        (res <= SOLVER_TOLERANCE).then_some(cfg)
    }
}

/// Output vectors with inner product `s` must satisfy
/// `s ≤ √(p₁r₂) + √(r₁p₂) + √(q₁q₂)`.
fn check_realizable(ensemble: &Ensemble, solution: &FrioSolution) -> Result<()> {
    let p = &solution.probs;
    let bound = (p.p1 * p.r2).sqrt() + (p.r1 * p.p2).sqrt() + (p.q1 * p.q2).sqrt();
    let s = ensemble.overlap();
    if s > bound + SOLVER_TOLERANCE {
        return Err(FrioError::Infeasible(format!(
            "overlap {s} exceeds the achievable output overlap {bound}"
        )));
    }
    Ok(())
}

fn wrap(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Closed-form branch candidates.
///
/// After HWP₁ the states sit at polarization angles `θ₁ ∓ α`; HWP₂ diverts
/// the fraction `sin²θ₂ cos²(θ₁ ∓ α)` to `V2`, which fixes `θ₁` and `θ₂`
/// from `q₁, q₂`. HWP₃ then rotates the remaining path-1 vector of state 1
/// so that `V1` carries `p₁`.
fn analytic_seeds(ensemble: &Ensemble, solution: &FrioSolution) -> Vec<CircuitConfig> {
    let theta = CircuitConfig::preparation_angle(ensemble);
    let alpha = ensemble.alpha();
    let (cos_a, sin_a) = (alpha.cos(), alpha.sin());
    let p = &solution.probs;
    let mut seeds = Vec::with_capacity(8);

    let mut push_theta3 = |theta1: f64, theta2: f64| {
        let h1 = (theta1 - alpha).cos() * theta2.cos();
        let v1 = (theta1 - alpha).sin();
        let rho = h1.hypot(v1);
        let psi = v1.atan2(h1);
        let turn = if rho > 0.0 {
            (p.p1.sqrt() / rho).clamp(0.0, 1.0).asin()
        } else {
            0.0
        };
        for theta3 in [psi + turn, psi + PI - turn] {
            seeds.push(CircuitConfig::new(
                theta,
                wrap(theta1),
                wrap(theta2),
                wrap(theta3),
                false,
            ));
        }
    };

    if p.q1 <= 0.0 && p.q2 <= 0.0 {
        push_theta3(0.0, 0.0);
        return seeds;
    }
    if sin_a <= 1e-12 {
        return seeds;
    }
    let (x, y_abs) = (p.q1.sqrt(), p.q2.sqrt());
    for sign in [1.0, -1.0] {
        let y = sign * y_abs;
        let k2 = ((x + y) / (2.0 * cos_a)).powi(2) + ((x - y) / (2.0 * sin_a)).powi(2);
        if k2 > 1.0 + 1e-12 {
            continue;
        }
        let k = k2.sqrt().min(1.0);
        let theta1 = ((x - y) / (2.0 * sin_a)).atan2((x + y) / (2.0 * cos_a));
        let theta2 = k.asin();
        push_theta3(theta1, theta2);
        push_theta3(theta1, PI - theta2);
    }
    seeds
}

fn seed_grid(theta: f64) -> Vec<CircuitConfig> {
    let steps = [-0.6, 0.3, 1.2];
    let mut grid = Vec::new();
    for &t1 in &steps {
        for &t2 in &[0.4, 1.1] {
            for &t3 in &steps {
                grid.push(CircuitConfig::new(theta, t1, t2, t3 + FRAC_PI_4, false));
            }
        }
    }
    grid
}

/// Port probabilities `(p₁, q₁, p₂, q₂)` of a three-outcome setting, or
/// `(p₁, r₁, p₂, q₂)` of a two-outcome one, matched against the solution.
fn residual_vector(ensemble: &Ensemble, solution: &FrioSolution, cfg: &CircuitConfig) -> Vector4<f64> {
    let got = circuit_outcomes(cfg, ensemble);
    let p = &solution.probs;
    Vector4::new(
        got[0][0] - p.p1,
        got[0][2] - p.q1,
        got[1][0] - p.p2,
        got[1][2] - p.q2,
    ) + if cfg.two_outcome {
        Vector4::new(0.0, got[0][1] - p.r1, 0.0, 0.0)
    } else {
        Vector4::zeros()
    }
}

fn with_angles(cfg: &CircuitConfig, x: &Vector3<f64>) -> CircuitConfig {
    CircuitConfig {
        theta1: x[0],
        theta2: x[1],
        theta3: x[2],
        ..*cfg
    }
}

/// Levenberg–Marquardt on the port-probability residual over the free angles.
fn polish(
    ensemble: &Ensemble,
    solution: &FrioSolution,
    seed: CircuitConfig,
    free: [bool; 3],
) -> CircuitConfig {
    const STEP: f64 = 1e-6;
    let mut x = Vector3::new(seed.theta1, seed.theta2, seed.theta3);
    let eval = |x: &Vector3<f64>| residual_vector(ensemble, solution, &with_angles(&seed, x));
    let mut f = eval(&x);
    let mut cost = f.norm_squared();
    let mut lambda = 1e-3;

    for _ in 0..200 {
        if f.amax() < 1e-15 {
            break;
        }
        let mut jac = nalgebra::Matrix4x3::<f64>::zeros();
        for k in 0..3 {
            if !free[k] {
                continue;
            }
            let mut hi = x;
            let mut lo = x;
            hi[k] += STEP;
            lo[k] -= STEP;
            jac.set_column(k, &((eval(&hi) - eval(&lo)) / (2.0 * STEP)));
        }
        let grad = jac.transpose() * f;
        let normal = jac.transpose() * jac;
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = normal;
            for k in 0..3 {
                damped[(k, k)] += if free[k] { lambda * (1.0 + normal[(k, k)]) } else { 1.0 };
            }
            let Some(step) = solve3(&damped, &(-grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = x + step;
            let f_trial = eval(&trial);
            let c_trial = f_trial.norm_squared();
            if c_trial < cost {
                x = trial;
                f = f_trial;
                cost = c_trial;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let out = with_angles(&seed, &x);
    CircuitConfig {
        theta1: wrap(out.theta1),
        theta2: wrap(out.theta2),
        theta3: wrap(out.theta3),
        ..out
    }
}

fn solve3(a: &Matrix3<f64>, b: &Vector3<f64>) -> Option<Vector3<f64>> {
    a.lu().solve(b)
}
