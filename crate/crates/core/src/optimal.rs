//! Closed-form optimal FRIO solution for two pure states.
//!
//! For a fixed inconclusive rate `Q` the minimum average error splits into
//! three regimes. With `Q₀ = 2s√(η₁η₂)`:
//!
//! * interval I (`η₁ ≥ s²/(1+s²)`, `0 ≤ Q ≤ Q₀`) and interval II
//!   (`η₁ < s²/(1+s²)`, `0 ≤ Q ≤ Q_th`) share one three-outcome solution with
//!   `q_i = Q/2η_i`;
//! * interval III (`η₁ < s²/(1+s²)`, `Q_th < Q ≤ η₁ + η₂s²`) is reached by a
//!   two-outcome projective measurement that never identifies state 1.
//!
//! All functions assume the canonical ordering `η₁ ≤ η₂` enforced by
//! [`Ensemble`].

use crate::ensemble::{Ensemble, OutcomeProbabilities, StateOutcomes};
use crate::error::{FrioError, Result};
use std::fmt;

const Q_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interval {
    I,
    II,
    III,
}

impl Interval {
    pub fn as_str(self) -> &'static str {
        match self {
            Interval::I => "I",
            Interval::II => "II",
            Interval::III => "III",
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boundary values of the admissible inconclusive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEndpoints {
    pub q0: f64,
    /// II/III threshold; `None` when the ensemble lies in the interval-I regime.
    pub qth: Option<f64>,
    pub qmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalTag {
    pub interval: Interval,
    pub endpoints: QEndpoints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrioSolution {
    pub tag: IntervalTag,
    /// Requested inconclusive rate.
    pub target_q: f64,
    pub probs: OutcomeProbabilities,
    /// `c = η₁η₂(1 − s²)`, reported for interval III only.
    pub cbar: Option<f64>,
    /// Set when `s = 1`: the states cannot be told apart at all.
    pub indistinguishable: bool,
}

impl FrioSolution {
    pub fn interval(&self) -> Interval {
        self.tag.interval
    }

    pub fn error_rate(&self) -> f64 {
        self.probs.pe
    }
}

/// `η₁ ≥ s²/(1+s²)`: the three-outcome solution covers the whole range of `Q`.
pub fn in_interval_one_regime(ensemble: &Ensemble) -> bool {
    let s2 = ensemble.overlap().powi(2);
    ensemble.eta1() >= s2 / (1.0 + s2)
}

pub fn q_endpoints(ensemble: &Ensemble) -> QEndpoints {
    let s = ensemble.overlap();
    let (eta1, eta2) = (ensemble.eta1(), ensemble.eta2());
    let q0 = 2.0 * s * (eta1 * eta2).sqrt();
    if in_interval_one_regime(ensemble) {
        QEndpoints {
            q0,
            qth: None,
            qmax: q0,
        }
    } else {
        QEndpoints {
            q0,
            qth: Some(2.0 * eta1 * eta2 * (1.0 - s * s) / (1.0 - q0)),
            qmax: eta1 + eta2 * s * s,
        }
    }
}

pub fn classify(ensemble: &Ensemble, q: f64) -> Result<IntervalTag> {
    let endpoints = q_endpoints(ensemble);
    if !(0.0..).contains(&q) || !q.is_finite() {
        return Err(FrioError::Domain {
            param: "Q",
            value: q,
            expected: "0 ≤ Q ≤ Q_max",
        });
    }
    if q > endpoints.qmax + Q_TOL {
        return Err(FrioError::QAboveMax {
            q,
            q_max: endpoints.qmax,
        });
    }
    let interval = match endpoints.qth {
        None => Interval::I,
        Some(qth) if q <= qth => Interval::II,
        Some(_) => Interval::III,
    };
    Ok(IntervalTag {
        interval,
        endpoints,
    })
}

/// Average error of the three-outcome solution (intervals I and II):
/// `½(Q̄ − √(Q̄² − (Q₀ − Q)²))`.
pub fn error_rate_three_outcome(ensemble: &Ensemble, q: f64) -> Result<f64> {
    let q0 = q_endpoints(ensemble).q0;
    let qbar = 1.0 - q;
    let disc = discriminant(qbar, q0 - q)?;
    Ok(0.5 * (qbar - disc.sqrt()))
}

/// Average error of the two-outcome solution (interval III).
pub fn error_rate_two_outcome(ensemble: &Ensemble, q: f64) -> f64 {
    let (eta1, eta2) = (ensemble.eta1(), ensemble.eta2());
    let s = ensemble.overlap();
    let q0 = q_endpoints(ensemble).q0;
    let qbar = 1.0 - q;
    let c = eta1 * eta2 * (1.0 - s * s);
    let root = (c * (q * qbar - c)).max(0.0).sqrt();
    (eta1 * qbar + c * (eta2 - eta1 - 2.0 * qbar) - q0 * root) / (1.0 - 4.0 * c)
}

fn discriminant(qbar: f64, gap: f64) -> Result<f64> {
    let d = qbar * qbar - gap * gap;
    if d < -Q_TOL {
        return Err(FrioError::DegenerateDenominator { value: d });
    }
    Ok(d.max(0.0))
}

/// Optimal FRIO probabilities at inconclusive rate `q`.
pub fn solve(ensemble: &Ensemble, q: f64) -> Result<FrioSolution> {
    let tag = classify(ensemble, q)?;
    let q = q.min(tag.endpoints.qmax);
    let s = ensemble.overlap();
    let (eta1, eta2) = (ensemble.eta1(), ensemble.eta2());
    let indistinguishable = s >= 1.0;

    let (first, second, cbar) = match tag.interval {
        Interval::I | Interval::II => {
            let q0 = tag.endpoints.q0;
            let qbar = 1.0 - q;
            let disc = discriminant(qbar, q0 - q)?;
            let root = disc.sqrt();
            let per_state = |eta: f64| {
                let qi = q / (2.0 * eta);
                let ri = if root > 0.0 {
                    0.5 * (1.0 - qi - ((1.0 - qi) * qbar - (q0 - q).powi(2) / (2.0 * eta)) / root)
                } else {
                    // Q₀ = 1 (identical states, equal priors): symmetric limit.
                    0.5 * (1.0 - qi)
                };
                StateOutcomes {
                    p: 1.0 - qi - ri,
                    r: ri,
                    q: qi,
                }
            };
            (per_state(eta1), per_state(eta2), None)
        }
        Interval::III => {
            let pe = error_rate_two_outcome(ensemble, q);
            let r1 = (pe / eta1).clamp(0.0, 1.0);
            let p2 = (s * r1.sqrt() + ((1.0 - r1) * (1.0 - s * s)).sqrt()).powi(2);
            (
                StateOutcomes {
                    p: 0.0,
                    r: r1,
                    q: 1.0 - r1,
                },
                StateOutcomes {
                    p: p2,
                    r: 0.0,
                    q: 1.0 - p2,
                },
                Some(eta1 * eta2 * (1.0 - s * s)),
            )
        }
    };

    Ok(FrioSolution {
        tag,
        target_q: q,
        probs: OutcomeProbabilities::from_states(eta1, first, second)?,
        cbar,
        indistinguishable,
    })
}

/// Minimum-error (Helstrom) bound `½(1 − √(1 − 4η₁η₂s²))`.
pub fn helstrom_bound(ensemble: &Ensemble) -> f64 {
    let s = ensemble.overlap();
    0.5 * (1.0 - (1.0 - 4.0 * ensemble.eta1() * ensemble.eta2() * s * s).sqrt())
}
