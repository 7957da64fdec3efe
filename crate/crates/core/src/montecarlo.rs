//! Photon-counting simulation of the discrimination experiment.
//!
//! Each prepared state is measured for its own integration time. The total
//! number of coincidences is Poisson with mean `rate · time`, and is split
//! over the four detector ports multinomially with the noisy Born
//! probabilities.

use crate::circuit::{build_unitary, CircuitConfig, DetectorMode, OutcomeMap};
use crate::ensemble::{Ensemble, StateLabel};
use crate::error::{FrioError, Result};
use crate::linalg::Mat2;
use crate::noise::Visibility;
use crate::povm::OutcomeLabel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Serialize;

pub const DEFAULT_RATE: f64 = 1400.0;
pub const DEFAULT_BASE_TIME: f64 = 10.0;

/// SplitMix64 of `seed` mixed with `index`; used to derive independent
/// streams for states, grid points and repetitions.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcquisitionPlan {
    pub rate: f64,
    pub time1: f64,
    pub time2: f64,
    pub seed: u64,
}

impl AcquisitionPlan {
    pub fn new(rate: f64, time1: f64, time2: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FrioError::Domain {
                param: "rate",
                value: rate,
                expected: "finite and > 0",
            });
        }
        for t in [time1, time2] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(FrioError::Domain {
                    param: "time",
                    value: t,
                    expected: "finite and > 0",
                });
            }
        }
        Ok(Self {
            rate,
            time1,
            time2,
            seed,
        })
    }

    /// Prior-weighted times `time_i = 2 η_i T_base` for the ensemble's
    /// (internal) state order.
    pub fn for_priors(ensemble: &Ensemble, rate: f64, base_time: f64, seed: u64) -> Result<Self> {
        Self::new(
            rate,
            2.0 * ensemble.eta1() * base_time,
            2.0 * ensemble.eta2() * base_time,
            seed,
        )
    }

    /// 1400 coincidences per second and a 10 s base time.
    pub fn laboratory(ensemble: &Ensemble, seed: u64) -> Self {
        Self::for_priors(ensemble, DEFAULT_RATE, DEFAULT_BASE_TIME, seed)
            .expect("default plan is valid")
    }

    pub fn time(&self, label: StateLabel) -> f64 {
        match label {
            StateLabel::One => self.time1,
            StateLabel::Two => self.time2,
        }
    }

    pub fn expected_counts(&self, label: StateLabel) -> f64 {
        self.rate * self.time(label)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// A probability estimate with its propagated standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
    /// Set when the estimate sits at 0 or 1, where the binomial error vanishes.
    pub boundary: bool,
}

impl Estimate {
    fn binomial(k: u64, n: u64) -> Self {
        let value = k as f64 / n as f64;
        Self {
            value,
            sigma: (value * (1.0 - value) / n as f64).sqrt(),
            boundary: k == 0 || k == n,
        }
    }

    /// `η₁x₁ + η₂x₂` with `σ = √(η₁²σ₁² + η₂²σ₂²)`.
    fn weighted(eta1: f64, a: &Estimate, b: &Estimate) -> Self {
        let eta2 = 1.0 - eta1;
        Self {
            value: eta1 * a.value + eta2 * b.value,
            sigma: ((eta1 * a.sigma).powi(2) + (eta2 * b.sigma).powi(2)).sqrt(),
            boundary: a.boundary && b.boundary,
        }
    }

    /// `|value − reference| ≤ k σ`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateEstimates {
    pub p: Estimate,
    pub r: Estimate,
    pub q: Estimate,
}

impl StateEstimates {
    pub fn as_array(&self) -> [Estimate; 3] {
        [self.p, self.r, self.q]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimates {
    pub states: [StateEstimates; 2],
    pub ps: Estimate,
    pub pe: Estimate,
    pub q: Estimate,
}

/// Counts for one prepared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateCounts {
    /// Indexed by [`DetectorMode::index`].
    pub modes: [u64; 4],
    /// `[success, error, inconclusive]` after applying the outcome map.
    pub outcomes: [u64; 3],
}

impl StateCounts {
    pub fn total(&self) -> u64 {
        self.modes.iter().sum()
    }

    pub fn mode(&self, mode: DetectorMode) -> u64 {
        self.modes[mode.index()]
    }

    /// Counts grouped by outcome only, for hand-built records.
    pub fn from_outcomes(success: u64, error: u64, inconclusive: u64) -> Self {
        Self {
            modes: [success + error + inconclusive, 0, 0, 0],
            outcomes: [success, error, inconclusive],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord {
    pub counts: [StateCounts; 2],
    pub estimates: Option<Estimates>,
}

impl CountRecord {
    pub fn new(first: StateCounts, second: StateCounts) -> Self {
        Self {
            counts: [first, second],
            estimates: None,
        }
    }

    pub fn state(&self, label: StateLabel) -> &StateCounts {
        &self.counts[label.index()]
    }
}

/// Port probabilities `tr(ρ'_i Π_k)` for both states, `[state][mode]`.
pub fn port_probabilities(
    ensemble: &Ensemble,
    config: &CircuitConfig,
    visibility: &Visibility,
) -> [[f64; 4]; 2] {
    let u = *build_unitary(config).matrix();
    let elements: [Mat2; 4] = std::array::from_fn(|k| {
        let row = [u[(k, 0)], u[(k, 1)]];
        Mat2::from_fn(|i, j| row[i].conj() * row[j])
    });
    StateLabel::BOTH.map(|label| {
        let rho = ensemble.density(label);
        elements.map(|el| visibility.noisy_expectation(&rho, &el).clamp(0.0, 1.0))
    })
}

fn outcome_slot(label: StateLabel, outcome: OutcomeLabel) -> usize {
    match (label, outcome) {
        (StateLabel::One, OutcomeLabel::Identify1) | (StateLabel::Two, OutcomeLabel::Identify2) => 0,
        (_, OutcomeLabel::Inconclusive) => 2,
        _ => 1,
    }
}

fn multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == probs.len() - 1 || mass <= 0.0 {
            out[k] = remaining;
            break;
        }
        let frac = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, frac)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        out[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    out
}

/// Draws detector counts for both prepared states. Deterministic in
/// `plan.seed`.
pub fn simulate_counts(
    ensemble: &Ensemble,
    config: &CircuitConfig,
    visibility: &Visibility,
    plan: &AcquisitionPlan,
) -> CountRecord {
    let probs = port_probabilities(ensemble, config, visibility);
    let map = OutcomeMap::for_config(config);
    let counts = StateLabel::BOTH.map(|label| {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(plan.seed, label.index() as u64));
        let mean = plan.expected_counts(label);
        let total = Poisson::new(mean)
            .expect("plan validated positive")
            .sample(&mut rng) as u64;
        let modes = multinomial(&mut rng, total, &probs[label.index()]);
        let mut outcomes = [0u64; 3];
        for mode in DetectorMode::ALL {
            outcomes[outcome_slot(label, map.label(mode))] += modes[mode.index()];
        }
        StateCounts { modes, outcomes }
    });
    CountRecord {
        counts,
        estimates: None,
    }
}

/// Fills binomial estimates and their prior-weighted averages.
pub fn propagate_errors(record: &CountRecord, ensemble: &Ensemble) -> Result<CountRecord> {
    let mut states = [None; 2];
    for label in StateLabel::BOTH {
        let c = record.state(label);
        let n: u64 = c.outcomes.iter().sum();
        if n == 0 {
            return Err(FrioError::EstimatorUndefined {
                state: label.index() + 1,
            });
        }
        states[label.index()] = Some(StateEstimates {
            p: Estimate::binomial(c.outcomes[0], n),
            r: Estimate::binomial(c.outcomes[1], n),
            q: Estimate::binomial(c.outcomes[2], n),
        });
    }
    let [Some(a), Some(b)] = states else {
        unreachable!("both states filled")
    };
    let eta1 = ensemble.eta1();
    Ok(CountRecord {
        counts: record.counts,
        estimates: Some(Estimates {
            states: [a, b],
            ps: Estimate::weighted(eta1, &a.p, &b.p),
            pe: Estimate::weighted(eta1, &a.r, &b.r),
            q: Estimate::weighted(eta1, &a.q, &b.q),
        }),
    })
}

/// Simulation followed by error propagation.
pub fn run_experiment(
    ensemble: &Ensemble,
    config: &CircuitConfig,
    visibility: &Visibility,
    plan: &AcquisitionPlan,
) -> Result<CountRecord> {
    propagate_errors(&simulate_counts(ensemble, config, visibility, plan), ensemble)
}
