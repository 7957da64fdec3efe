//! Brute-force minimum-error search over qubit POVMs at a fixed
//! inconclusive rate.
//!
//! The search works directly on measurement operators and the Born rule and
//! shares no code with the closed-form solver, so agreement between the two
//! is an independent check.
//!
//! Two rank-one elements `Π₁ = w₁|π₁⟩⟨π₁|`, `Π₂ = w₂|π₂⟩⟨π₂|` are encoded
//! by six unconstrained reals. The weights are squashed so that
//! `Π₀ = 𝟙 − Π₁ − Π₂` is positive semidefinite for every parameter vector:
//! `w₁ = sin²a₁` and `w₂ = sin²a₂ · (1 − w₁)/(1 − w₁ + w₁k)` with
//! `k = |⟨π₁|π₂⟩|²`, which is exactly the condition `det Π₀ ≥ 0`.
//!
//! The search itself runs over 3×2 isometries `V` (a product of complex
//! Givens rotations), with `Πₖ = V†|k⟩⟨k|V`. Projective measurements are
//! interior points there, while in the weight encoding they sit in a corner.

pub mod nelder_mead;

use crate::ensemble::Ensemble;
use crate::error::{FrioError, Result};
use crate::linalg::{hermitian_eigenvalues, real, Mat2, C64};
use crate::povm::{OutcomeLabel, Povm};
use nalgebra::{Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Budgets below this are accepted but flagged as possibly unconverged.
pub const RECOMMENDED_BUDGET: usize = 10_000;
/// Budgets below this are rejected.
pub const MINIMUM_BUDGET: usize = 500;
/// Constraint tolerance on the achieved inconclusive rate.
pub const Q_TOLERANCE: f64 = 1e-6;

const STARTS: usize = 32;
const FINALISTS: usize = 4;
const INITIAL_PENALTY: f64 = 1e3;
const PENALTY_LADDER: [f64; 3] = [1e5, 1e7, 1e9];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Total objective evaluations per grid point.
    pub budget: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            budget: 100_000,
            seed: 0,
        }
    }
}

/// Six-parameter rank-one POVM encoding `(a₁, ϑ₁, φ₁, a₂, ϑ₂, φ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PovmAnsatz {
    pub parameters: [f64; 6],
}

/// Decoded weights and unit vectors of a [`PovmAnsatz`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneElements {
    pub w1: f64,
    pub pi1: Vector2<C64>,
    pub w2: f64,
    pub pi2: Vector2<C64>,
}

fn bloch_vector(polar: f64, azimuth: f64) -> Vector2<C64> {
    let (s, c) = (0.5 * polar).sin_cos();
    Vector2::new(real(c), C64::from_polar(s, azimuth))
}

fn bloch_angles(v: &Vector2<C64>) -> (f64, f64) {
    let polar = 2.0 * v[1].norm().atan2(v[0].norm());
    let azimuth = if v[1].norm() == 0.0 {
        0.0
    } else {
        v[1].arg() - v[0].arg()
    };
    (polar, azimuth)
}

fn overlap_sq(a: &Vector2<C64>, b: &Vector2<C64>) -> f64 {
    a.dotc(b).norm_sqr()
}

const SEARCH_DIM: usize = 7;

fn givens(i: usize, j: usize, angle: f64, phase: f64) -> Matrix3<C64> {
    let mut g = Matrix3::<C64>::identity();
    let (s, c) = angle.sin_cos();
    g[(i, i)] = real(c);
    g[(j, j)] = real(c);
    g[(i, j)] = -C64::from_polar(s, -phase);
    g[(j, i)] = C64::from_polar(s, phase);
    g
}

/// Rank-one elements from isometry coordinates; row 0 is the inconclusive
/// outcome.
fn isometry_elements(x: &[f64]) -> RankOneElements {
    let mut u = givens(0, 1, x[0], x[3]) * givens(0, 2, x[1], x[4]) * givens(1, 2, x[2], x[5]);
    let right = C64::from_polar(1.0, x[6]);
    for k in 0..3 {
        u[(k, 1)] *= right;
    }
    let row = |k: usize| -> (f64, Vector2<C64>) {
        let v = Vector2::new(u[(k, 0)].conj(), u[(k, 1)].conj());
        let norm = v.norm();
        if norm == 0.0 {
            (0.0, Vector2::new(real(1.0), real(0.0)))
        } else {
            (norm * norm, v / real(norm))
        }
    };
    let (w1, pi1) = row(1);
    let (w2, pi2) = row(2);
    RankOneElements {
        w1: w1.min(1.0),
        pi1,
        w2: w2.min(max_partner_weight(w1.min(1.0), overlap_sq(&pi1, &pi2))),
        pi2,
    }
}

fn random_search_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..SEARCH_DIM)
        .map(|k| {
            if k < 3 {
                rng.random_range(0.0..PI)
            } else {
                rng.random_range(-PI..PI)
            }
        })
        .collect()
}

/// Largest `w₂` with `𝟙 − w₁P₁ − w₂P₂ ⪰ 0`.
fn max_partner_weight(w: f64, k: f64) -> f64 {
    if k <= 1e-15 {
        return 1.0;
    }
    let denom = 1.0 - w + w * k;
    if denom <= 0.0 {
        0.0
    } else {
        ((1.0 - w) / denom).clamp(0.0, 1.0)
    }
}

impl PovmAnsatz {
    pub fn decode(&self) -> RankOneElements {
        let [a1, t1, f1, a2, t2, f2] = self.parameters;
        let pi1 = bloch_vector(t1, f1);
        let pi2 = bloch_vector(t2, f2);
        let w1 = a1.sin().powi(2);
        let w2 = a2.sin().powi(2) * max_partner_weight(w1, overlap_sq(&pi1, &pi2));
        RankOneElements { w1, pi1, w2, pi2 }
    }

    /// Inverse of [`decode`](Self::decode) up to the parameter redundancy.
    pub fn encode(elements: &RankOneElements) -> Result<Self> {
        let RankOneElements { w1, pi1, w2, pi2 } = *elements;
        if !(0.0..=1.0).contains(&w1) {
            return Err(FrioError::Domain {
                param: "w1",
                value: w1,
                expected: "0 ≤ w₁ ≤ 1",
            });
        }
        let (n1, n2) = (pi1.norm(), pi2.norm());
        if (n1 - 1.0).abs() > 1e-12 || (n2 - 1.0).abs() > 1e-12 {
            return Err(FrioError::InvalidState(format!(
                "element vectors must be unit, got norms {n1} and {n2}"
            )));
        }
        let w2max = max_partner_weight(w1, overlap_sq(&pi1, &pi2));
        if w2 < 0.0 || w2 > w2max + 1e-12 {
            return Err(FrioError::Domain {
                param: "w2",
                value: w2,
                expected: "0 ≤ w₂ ≤ (1 − w₁)/(1 − w₁ + w₁|⟨π₁|π₂⟩|²)",
            });
        }
        let ratio = if w2max > 0.0 { (w2 / w2max).min(1.0) } else { 0.0 };
        let (t1, f1) = bloch_angles(&pi1);
        let (t2, f2) = bloch_angles(&pi2);
        Ok(Self {
            parameters: [w1.sqrt().asin(), t1, f1, ratio.sqrt().asin(), t2, f2],
        })
    }

    pub fn to_povm(&self) -> Povm {
        let el = self.decode();
        let p1 = el.pi1 * el.pi1.adjoint() * real(el.w1);
        let p2 = el.pi2 * el.pi2.adjoint() * real(el.w2);
        Povm::new(vec![
            (OutcomeLabel::Identify1, p1),
            (OutcomeLabel::Identify2, p2),
            (OutcomeLabel::Inconclusive, Mat2::identity() - p1 - p2),
        ])
    }

    /// Smallest eigenvalue of `Π₀`.
    pub fn inconclusive_min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.to_povm().element(OutcomeLabel::Inconclusive))[0]
    }
}

/// Ensemble data in the form the objective needs.
#[derive(Debug, Clone, Copy)]
struct Problem {
    phi: [Vector2<C64>; 2],
    eta: [f64; 2],
    target: f64,
}

impl Problem {
    fn new(ensemble: &Ensemble, target: f64) -> Self {
        use crate::ensemble::StateLabel::{One, Two};
        Self {
            phi: [*ensemble.state(One).amplitudes(), *ensemble.state(Two).amplitudes()],
            eta: [ensemble.eta1(), ensemble.eta2()],
            target,
        }
    }

    fn weight_on(&self, v: &Vector2<C64>) -> [f64; 2] {
        [overlap_sq(v, &self.phi[0]), overlap_sq(v, &self.phi[1])]
    }

    /// `(Pe, Q)` for rank-one elements.
    fn evaluate(&self, el: &RankOneElements) -> (f64, f64) {
        let a = self.weight_on(&el.pi1);
        let b = self.weight_on(&el.pi2);
        let pe = self.eta[0] * el.w2 * b[0] + self.eta[1] * el.w1 * a[1];
        let t1 = self.eta[0] * a[0] + self.eta[1] * a[1];
        let t2 = self.eta[0] * b[0] + self.eta[1] * b[1];
        (pe, 1.0 - el.w1 * t1 - el.w2 * t2)
    }

    fn penalized(&self, x: &[f64], mu: f64) -> f64 {
        let (pe, q) = self.evaluate(&isometry_elements(x));
        pe + mu * (q - self.target).powi(2)
    }

    /// Exact rate repair, falling back to the unrepaired point when it is
    /// already within [`Q_TOLERANCE`].
    /// Otherwise completes either element to an orthonormal pair and scales
    /// that back onto the constraint.
    fn repair(&self, el: &RankOneElements) -> Option<RankOneElements> {
        self.enforce_rate(el)
            .or_else(|| ((self.evaluate(el).1 - self.target).abs() <= Q_TOLERANCE).then_some(*el))
            .or_else(|| {
                let completions = [
                    RankOneElements {
                        w1: 1.0,
                        w2: 1.0,
                        pi2: orthogonal(&el.pi1),
                        ..*el
                    },
                    RankOneElements {
                        w1: 1.0,
                        w2: 1.0,
                        pi1: orthogonal(&el.pi2),
                        ..*el
                    },
                ];
                completions
                    .iter()
                    .filter_map(|c| self.enforce_rate(c))
                    .min_by(|x, y| self.evaluate(x).0.total_cmp(&self.evaluate(y).0))
            })
    }

    /// Moves one weight, or scales both, so that `Q` hits the target exactly,
    /// keeping the cheapest feasible variant.
    fn enforce_rate(&self, el: &RankOneElements) -> Option<RankOneElements> {
        let a = self.weight_on(&el.pi1);
        let b = self.weight_on(&el.pi2);
        let t1 = self.eta[0] * a[0] + self.eta[1] * a[1];
        let t2 = self.eta[0] * b[0] + self.eta[1] * b[1];
        let k = overlap_sq(&el.pi1, &el.pi2);
        let need = 1.0 - self.target;
        let mut candidates = Vec::with_capacity(3);
        if t2 > 0.0 {
            candidates.push(RankOneElements {
                w2: (need - el.w1 * t1) / t2,
                ..*el
            });
        }
        if t1 > 0.0 {
            candidates.push(RankOneElements {
                w1: (need - el.w2 * t2) / t1,
                ..*el
            });
        }
        let current = el.w1 * t1 + el.w2 * t2;
        if current > 0.0 {
            let lambda = need / current;
            candidates.push(RankOneElements {
                w1: lambda * el.w1,
                w2: lambda * el.w2,
                ..*el
            });
        }
        candidates
            .into_iter()
            .filter(|c| {
                c.w1 >= 0.0
                    && c.w2 >= 0.0
                    && c.w1 <= 1.0
                    && c.w2 <= max_partner_weight(c.w1, k) + 1e-15
            })
            .map(|c| RankOneElements {
                w2: c.w2.min(max_partner_weight(c.w1, k)),
                ..c
            })
            .filter(|c| (self.evaluate(c).1 - self.target).abs() <= 1e-12)
            .min_by(|x, y| self.evaluate(x).0.total_cmp(&self.evaluate(y).0))
    }
}

fn orthogonal(v: &Vector2<C64>) -> Vector2<C64> {
    Vector2::new(-v[1].conj(), v[0].conj())
}

/// Best rank-one POVM found at the requested inconclusive rate.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Upper bound on the optimal average error.
    pub pe: f64,
    pub q: f64,
    pub ansatz: PovmAnsatz,
    pub evaluations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn check_inputs(q: f64, budget: usize) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(FrioError::Domain {
            param: "Q",
            value: q,
            expected: "0 ≤ Q ≤ 1",
        });
    }
    if budget < MINIMUM_BUDGET {
        return Err(FrioError::Domain {
            param: "budget",
            value: budget as f64,
            expected: "at least 500 evaluations",
        });
    }
    let mut warnings = Vec::new();
    if budget < RECOMMENDED_BUDGET {
        warnings.push(format!(
            "budget {budget} is below {RECOMMENDED_BUDGET}; the result may be unconverged"
        ));
    }
    Ok(warnings)
}

#[cfg(test)]
fn random_parameters(rng: &mut ChaCha8Rng) -> [f64; 6] {
    [
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        rng.random_range(0.0..PI),
        rng.random_range(-PI..PI),
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        rng.random_range(0.0..PI),
        rng.random_range(-PI..PI),
    ]
}

/// [`minimize_error_with`] at the given budget and seed 0.
pub fn minimize_error(ensemble: &Ensemble, q: f64, budget: usize) -> Result<OracleResult> {
    minimize_error_with(
        ensemble,
        q,
        &OracleOptions {
            budget,
            ..OracleOptions::default()
        },
    )
}

/// Multi-start simplex search with an escalating quadratic penalty on `Q`,
/// followed by an exact repair of the rate constraint.
pub fn minimize_error_with(ensemble: &Ensemble, q: f64, opts: &OracleOptions) -> Result<OracleResult> {
    let mut warnings = check_inputs(q, opts.budget)?;
    let problem = Problem::new(ensemble, q);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_starts = (opts.budget / 300).clamp(FINALISTS, STARTS);
    let starts: Vec<Vec<f64>> = (0..n_starts).map(|_| random_search_point(&mut rng)).collect();

    let coarse_budget = (opts.budget / 2 / n_starts).max(20);
    let mut coarse: Vec<(f64, Vec<f64>, usize)> = starts
        .par_iter()
        .map(|x0| {
            let mut f = |x: &[f64]| problem.penalized(x, INITIAL_PENALTY);
            let m = nelder_mead::minimize(&mut f, x0, 0.3, coarse_budget, 1e-16);
            (m.value, m.x, m.evaluations)
        })
        .collect();
    let mut evaluations: usize = coarse.iter().map(|c| c.2).sum();
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    coarse.truncate(FINALISTS);

    let stage_budget = (opts.budget.saturating_sub(evaluations) / FINALISTS / PENALTY_LADDER.len()).max(20);
    let refined: Vec<(Vec<f64>, usize)> = coarse
        .into_par_iter()
        .map(|(_, mut x, _)| {
            let mut used = 0;
            let mut step = 0.05;
            for mu in PENALTY_LADDER {
                let mut f = |p: &[f64]| problem.penalized(p, mu);
                let half = stage_budget / 2;
                for run_budget in [half, stage_budget - half] {
                    let m = nelder_mead::minimize(&mut f, &x, step, run_budget, 0.0);
                    used += m.evaluations;
                    x = m.x;
                    step *= 0.3;
                }
            }
            (x, used)
        })
        .collect();
    evaluations += refined.iter().map(|r| r.1).sum::<usize>();

    let mut best: Option<(f64, RankOneElements)> = None;
    let mut violation = f64::INFINITY;
    for (x, _) in &refined {
        let el = isometry_elements(x);
        violation = violation.min((problem.evaluate(&el).1 - q).abs());
        if let Some(fixed) = problem.repair(&el) {
            let pe = problem.evaluate(&fixed).0;
            if best.is_none_or(|(b, _)| pe < b) {
                best = Some((pe, fixed));
            }
        }
    }
    let (_, elements) = best.ok_or(FrioError::OracleInfeasible { violation })?;
    let ansatz = PovmAnsatz::encode(&elements)?;
    let (pe, achieved) = problem.evaluate(&ansatz.decode());
    if (achieved - q).abs() > Q_TOLERANCE {
        return Err(FrioError::OracleInfeasible {
            violation: (achieved - q).abs(),
        });
    }
    let converged = opts.budget >= RECOMMENDED_BUDGET;
    if !converged && warnings.is_empty() {
        warnings.push("result may be unconverged".into());
    }
    Ok(OracleResult {
        pe,
        q: achieved,
        ansatz,
        evaluations,
        converged,
        warnings,
    })
}

/// `n` random rank-one POVMs repaired onto the `Q` constraint, with their
/// average error.
pub fn sample_feasible(ensemble: &Ensemble, q: f64, n: usize, seed: u64) -> Result<Vec<(PovmAnsatz, f64)>> {
    check_inputs(q, MINIMUM_BUDGET)?;
    let problem = Problem::new(ensemble, q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut violation = f64::INFINITY;
    for _ in 0..n.saturating_mul(1000).max(1000) {
        if out.len() == n {
            break;
        }
        let el = isometry_elements(&random_search_point(&mut rng));
        violation = violation.min((problem.evaluate(&el).1 - q).abs());
        if let Some(fixed) = problem.repair(&el) {
            let ansatz = PovmAnsatz::encode(&fixed)?;
            let (pe, achieved) = problem.evaluate(&ansatz.decode());
            if (achieved - q).abs() <= Q_TOLERANCE {
                out.push((ansatz, pe));
            }
        }
    }
    if out.len() < n {
        return Err(FrioError::OracleInfeasible { violation });
    }
    Ok(out)
}

/// General (full-rank) two-element search result.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRankResult {
    pub pe: f64,
    pub q: f64,
    /// Smallest eigenvalue of the inconclusive element.
    pub min_eigenvalue: f64,
    pub povm: Povm,
}

/// Cholesky parameters of `w |v⟩⟨v|`.
fn cholesky_rank_one(w: f64, v: &Vector2<C64>) -> [f64; 4] {
    let a = v[0].norm();
    if a < 1e-12 {
        return [0.0, 0.0, 0.0, w.sqrt() * v[1].norm()];
    }
    let b = v[1] * v[0].conj() / a;
    [w.sqrt() * a, w.sqrt() * b.re, w.sqrt() * b.im, 0.0]
}

fn cholesky_element(p: &[f64]) -> Mat2 {
    let l = Mat2::new(real(p[0]), real(0.0), C64::new(p[1], p[2]), real(p[3]));
    l * l.adjoint()
}

/// Cross-check without the rank-one restriction: `Π_i = L_i L_i†` with
/// lower-triangular `L_i`, and penalties on both `Q` and positivity of `Π₀`.
/// Random starts are refined alongside the rank-one optimum.
pub fn minimize_error_full_rank(
    ensemble: &Ensemble,
    q: f64,
    opts: &OracleOptions,
) -> Result<FullRankResult> {
    check_inputs(q, opts.budget)?;
    use crate::ensemble::StateLabel::{One, Two};
    let rho = [ensemble.density(One), ensemble.density(Two)];
    let eta = [ensemble.eta1(), ensemble.eta2()];
    let avg = ensemble.average_density();

    let measure = |pi1: &Mat2, pi2: &Mat2| {
        let pe = eta[0] * rho[0].expectation(pi2) + eta[1] * rho[1].expectation(pi1);
        let q_got = 1.0 - avg.expectation(pi1) - avg.expectation(pi2);
        let pi0 = Mat2::identity() - pi1 - pi2;
        (pe, q_got, hermitian_eigenvalues(&pi0)[0])
    };
    let objective = |x: &[f64], mu: f64| {
        let (pe, q_got, lo) = measure(&cholesky_element(&x[..4]), &cholesky_element(&x[4..]));
        pe + mu * ((q_got - q).powi(2) + lo.min(0.0).powi(2))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..STARTS)
        .map(|_| (0..8).map(|_| rng.random_range(-0.7..0.7)).collect())
        .collect();
    let coarse_budget = (opts.budget / 2 / STARTS).max(20);
    let mut coarse: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|x0| {
            let mut f = |x: &[f64]| objective(x, INITIAL_PENALTY);
            let m = nelder_mead::minimize(&mut f, x0, 0.2, coarse_budget, 1e-16);
            (m.value, m.x)
        })
        .collect();
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0));
    coarse.truncate(FINALISTS);
    let warm = minimize_error_with(ensemble, q, opts)?.ansatz.decode();
    let x_warm: Vec<f64> = [cholesky_rank_one(warm.w1, &warm.pi1), cholesky_rank_one(warm.w2, &warm.pi2)].concat();
    coarse.push((objective(&x_warm, INITIAL_PENALTY), x_warm));
    let stage_budget = (opts.budget / 2 / coarse.len() / PENALTY_LADDER.len()).max(20);

    let finals: Vec<Option<(f64, Mat2, Mat2)>> = coarse
        .into_par_iter()
        .map(|(_, mut x)| {
            let mut step = 0.05;
            for mu in PENALTY_LADDER {
                let mut f = |p: &[f64]| objective(p, mu);
                let m = nelder_mead::minimize(&mut f, &x, step, stage_budget, 0.0);
                x = m.x;
                step *= 0.2;
            }
            let (mut pi1, mut pi2) = (cholesky_element(&x[..4]), cholesky_element(&x[4..]));
            // Largest admissible uniform scale of Π₁ + Π₂, then hit Q exactly.
            let top = hermitian_eigenvalues(&(pi1 + pi2))[1];
            let cap = if top > 0.0 { 1.0 / top } else { f64::INFINITY };
            let used = avg.expectation(&pi1) + avg.expectation(&pi2);
            let lambda = if used > 0.0 { (1.0 - q) / used } else { 1.0 };
            if lambda > cap * (1.0 + 1e-9) {
                return None;
            }
            let lambda = lambda.min(cap);
            pi1 *= real(lambda);
            pi2 *= real(lambda);
            let (pe, _, _) = measure(&pi1, &pi2);
            Some((pe, pi1, pi2))
        })
        .collect();

    let (_, pi1, pi2) = finals
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(FrioError::OracleInfeasible { violation: f64::NAN })?;
    let (pe, q_got, lo) = measure(&pi1, &pi2);
    Ok(FullRankResult {
        pe,
        q: q_got,
        min_eigenvalue: lo,
        povm: Povm::new(vec![
            (OutcomeLabel::Identify1, pi1),
            (OutcomeLabel::Identify2, pi2),
            (OutcomeLabel::Inconclusive, Mat2::identity() - pi1 - pi2),
        ]),
    })
}
