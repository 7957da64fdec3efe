//! Parameter sweeps, angle tables, oracle certification and simulated
//! experiments, as consumed by the `frio` binary.

pub mod cli;
pub mod config;
pub mod format;

use crate::circuit::{fit_residual, solve_angles, CircuitConfig};
use crate::ensemble::{born_probabilities, Ensemble, OutcomeProbabilities};
use crate::error::{FrioError, Result};
use crate::montecarlo::{run_experiment, sub_seed, Estimates, StateCounts, DEFAULT_BASE_TIME, DEFAULT_RATE};
use crate::montecarlo::AcquisitionPlan;
use crate::noise::Visibility;
use crate::optimal::{q_endpoints, solve, Interval};
use crate::oracle::{minimize_error_with, OracleOptions};
use crate::povm::from_solution;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

pub use format::{Cell, Format};

pub const SCHEMA_VERSION: u32 = 1;

/// Overlap grid approximating the experimental abscissae.
pub const DEFAULT_S_VALUES: [f64; 7] = [0.0, 0.25, 0.38, 0.5, 0.71, 0.87, 1.0];
pub const DEFAULT_VERIFY_ETAS: [f64; 3] = [0.5, 0.3, 0.1];

/// How the inconclusive rate is chosen at each overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QMode {
    /// `Q = 0`.
    Med,
    /// `Q = Q₀/2`.
    Half,
    /// `Q = Q_max`.
    Ud,
    Absolute(f64),
}

impl QMode {
    pub fn resolve(&self, ensemble: &Ensemble) -> Result<f64> {
        let ep = q_endpoints(ensemble);
        match *self {
            QMode::Med => Ok(0.0),
            QMode::Half => Ok(0.5 * ep.q0),
            QMode::Ud => Ok(ep.qmax),
            QMode::Absolute(q) => {
                if !(0.0..).contains(&q) {
                    Err(FrioError::Domain {
                        param: "Q",
                        value: q,
                        expected: "Q ≥ 0",
                    })
                } else if q > ep.qmax {
                    Err(FrioError::QAboveMax { q, q_max: ep.qmax })
                } else {
                    Ok(q)
                }
            }
        }
    }
}

impl fmt::Display for QMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QMode::Med => f.write_str("med"),
            QMode::Half => f.write_str("half"),
            QMode::Ud => f.write_str("ud"),
            QMode::Absolute(q) => write!(f, "absolute:{q}"),
        }
    }
}

impl FromStr for QMode {
    type Err = FrioError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let number = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| FrioError::Usage(format!("invalid Q value `{v}`")))
        };
        match s {
            "med" => Ok(QMode::Med),
            "half" => Ok(QMode::Half),
            "ud" => Ok(QMode::Ud),
            _ => match s.strip_prefix("absolute:") {
                Some(v) => number(v).map(QMode::Absolute),
                None => number(s).map(QMode::Absolute).map_err(|_| {
                    FrioError::Usage(format!(
                        "unknown q-mode `{s}` (expected med, half, ud or absolute:<value>)"
                    ))
                }),
            },
        }
    }
}

impl Serialize for QMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Counting-experiment settings of a sweep. Times are `2 η_i · base_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSpec {
    pub rate: f64,
    pub base_time: f64,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            rate: DEFAULT_RATE,
            base_time: DEFAULT_BASE_TIME,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub s_values: Vec<f64>,
    pub eta1: f64,
    pub q_mode: QMode,
    pub visibility: f64,
    pub montecarlo: Option<SimulationSpec>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            s_values: DEFAULT_S_VALUES.to_vec(),
            eta1: 0.5,
            q_mode: QMode::Med,
            visibility: Visibility::MEASURED.epsilon(),
            montecarlo: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(FrioError::Usage("no overlap values given".into()));
        }
        for &s in &self.s_values {
            Ensemble::new(s, self.eta1)?;
        }
        Visibility::new(self.visibility, 0.0)?;
        if let Some(mc) = &self.montecarlo {
            AcquisitionPlan::new(mc.rate, mc.base_time, mc.base_time, mc.seed)?;
        }
        Ok(())
    }
}

/// Simulated counts and estimates at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationColumns {
    pub counts: [StateCounts; 2],
    pub estimates: Estimates,
}

/// One sweep row. Probabilities use the caller's state labels and include
/// the white-noise channel at the sweep visibility; `pe_ideal` is the
/// noiseless optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub s: f64,
    pub eta1: f64,
    pub q: f64,
    pub interval: Interval,
    pub probs: OutcomeProbabilities,
    pub pe_ideal: f64,
    pub config: CircuitConfig,
    pub residual: f64,
    pub simulation: Option<SimulationColumns>,
}

impl ReportRow {
    pub fn cells(&self) -> Vec<(&'static str, Cell)> {
        let p = &self.probs;
        let deg = self.config.waveplate_degrees();
        let mut cells = vec![
            ("s", Cell::Num(self.s)),
            ("eta1", Cell::Num(self.eta1)),
            ("Q", Cell::Num(self.q)),
            ("interval", Cell::Text(self.interval.as_str().into())),
            ("p1", Cell::Num(p.p1)),
            ("r1", Cell::Num(p.r1)),
            ("q1", Cell::Num(p.q1)),
            ("p2", Cell::Num(p.p2)),
            ("r2", Cell::Num(p.r2)),
            ("q2", Cell::Num(p.q2)),
            ("Ps", Cell::Num(p.ps)),
            ("Pe", Cell::Num(p.pe)),
            ("Q_avg", Cell::Num(p.q)),
            ("pe_ideal", Cell::Num(self.pe_ideal)),
            ("theta", Cell::Num(self.config.theta)),
            ("theta1", Cell::Num(self.config.theta1)),
            ("theta2", Cell::Num(self.config.theta2)),
            ("theta3", Cell::Num(self.config.theta3)),
            ("hwp_prep_deg", Cell::Num(self.config.theta.to_degrees())),
            ("hwp1_deg", Cell::Num(deg[0])),
            ("hwp2_deg", Cell::Num(deg[1])),
            ("hwp3_deg", Cell::Num(deg[2])),
            ("outcomes", Cell::Int(if self.config.two_outcome { 2 } else { 3 })),
            ("residual", Cell::Num(self.residual)),
        ];
        if let Some(sim) = &self.simulation {
            let est = &sim.estimates;
            cells.push(("n1", Cell::Int(sim.counts[0].total())));
            cells.push(("n2", Cell::Int(sim.counts[1].total())));
            let named = [
                ("est_p1", "err_p1", est.states[0].p),
                ("est_r1", "err_r1", est.states[0].r),
                ("est_q1", "err_q1", est.states[0].q),
                ("est_p2", "err_p2", est.states[1].p),
                ("est_r2", "err_r2", est.states[1].r),
                ("est_q2", "err_q2", est.states[1].q),
                ("est_Ps", "err_Ps", est.ps),
                ("est_Pe", "err_Pe", est.pe),
                ("est_Q", "err_Q", est.q),
            ];
            for (value, error, e) in named {
                cells.push((value, Cell::Num(e.value)));
                cells.push((error, Cell::Num(e.sigma)));
            }
        }
        cells
    }
}

/// A grid point that failed, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct PointError {
    pub s: f64,
    pub eta1: f64,
    pub error: FrioError,
}

impl fmt::Display for PointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grid point s={}, eta1={}: {}", self.s, self.eta1, self.error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub spec: SweepSpec,
    pub rows: Vec<ReportRow>,
}

fn sweep_point(spec: &SweepSpec, index: usize, s: f64) -> Result<ReportRow> {
    let ensemble = Ensemble::new(s, spec.eta1)?;
    let q = spec.q_mode.resolve(&ensemble)?;
    let solution = solve(&ensemble, q)?;
    let config = solve_angles(&ensemble, &solution)?;
    let residual = fit_residual(&ensemble, &solution, &config);
    let visibility = Visibility::new(spec.visibility, 0.0)?;
    let povm = from_solution(&ensemble, &solution)?;
    let noisy = born_probabilities(&ensemble, &povm, Some(&visibility))?;

    let simulation = match &spec.montecarlo {
        None => None,
        Some(mc) => {
            let plan = AcquisitionPlan::for_priors(
                &ensemble,
                mc.rate,
                mc.base_time,
                sub_seed(mc.seed, index as u64),
            )?;
            let record = run_experiment(&ensemble, &config, &visibility, &plan)?;
            let mut counts = record.counts;
            let mut estimates = record.estimates.expect("errors propagated");
            if ensemble.swapped() {
                counts.swap(0, 1);
                estimates.states.swap(0, 1);
            }
            Some(SimulationColumns { counts, estimates })
        }
    };

    Ok(ReportRow {
        s,
        eta1: spec.eta1,
        q,
        interval: solution.interval(),
        probs: noisy.relabeled(ensemble.swapped()),
        pe_ideal: solution.error_rate(),
        config,
        residual,
        simulation,
    })
}

/// Evaluates every overlap of the sweep; rows keep the input order.
pub fn run_sweep(spec: &SweepSpec) -> std::result::Result<Report, PointError> {
    spec.validate().map_err(|error| PointError {
        s: f64::NAN,
        eta1: spec.eta1,
        error,
    })?;
    let rows = spec
        .s_values
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            sweep_point(spec, i, s).map_err(|error| PointError {
                s,
                eta1: spec.eta1,
                error,
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for row in &rows {
        if let Some((name, _)) = row
            .cells()
            .into_iter()
            .find(|(_, c)| matches!(c, Cell::Num(v) if !v.is_finite()))
        {
            return Err(PointError {
                s: row.s,
                eta1: row.eta1,
                error: FrioError::InvalidState(format!("non-finite value in column {name}")),
            });
        }
    }
    Ok(Report {
        spec: spec.clone(),
        rows,
    })
}

/// Waveplate settings for one ensemble and rate, for lab use.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleTable {
    pub s: f64,
    pub eta1: f64,
    pub q: f64,
    pub interval: String,
    pub outcomes: u8,
    /// Preparation plate angle for state 1 and state 2, radians and degrees.
    pub prep_rad: [f64; 2],
    pub prep_deg: [f64; 2],
    /// Effective angles `θ₁, θ₂, θ₃`.
    pub effective_rad: [f64; 3],
    /// Mechanical plate angles, degrees.
    pub waveplate_deg: [f64; 3],
    pub residual: f64,
}

impl fmt::Display for AngleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "s = {}, eta1 = {}, Q = {} (interval {}, {} outcomes)",
            self.s, self.eta1, self.q, self.interval, self.outcomes
        )?;
        writeln!(f, "{:<12}{:>22}{:>22}", "plate", "effective [rad]", "physical [deg]")?;
        for (i, label) in ["prep, state 1", "prep, state 2"].iter().enumerate() {
            writeln!(
                f,
                "{:<12}{:>22.12}{:>22.12}",
                label,
                2.0 * self.prep_rad[i],
                self.prep_deg[i]
            )?;
        }
        for i in 0..3 {
            writeln!(
                f,
                "{:<12}{:>22.12}{:>22.12}",
                format!("HWP{}", i + 1),
                self.effective_rad[i],
                self.waveplate_deg[i]
            )?;
        }
        write!(f, "max probability residual = {:.3e}", self.residual)
    }
}

pub fn run_angles(s: f64, eta1: f64, q_mode: QMode) -> Result<AngleTable> {
    let ensemble = Ensemble::new(s, eta1)?;
    let q = q_mode.resolve(&ensemble)?;
    let solution = solve(&ensemble, q)?;
    let config = solve_angles(&ensemble, &solution)?;
    let mut prep = [config.theta, -config.theta];
    if ensemble.swapped() {
        prep.swap(0, 1);
    }
    Ok(AngleTable {
        s,
        eta1,
        q,
        interval: solution.interval().as_str().into(),
        outcomes: if config.two_outcome { 2 } else { 3 },
        prep_rad: prep,
        prep_deg: prep.map(f64::to_degrees),
        effective_rad: config.effective_angles(),
        waveplate_deg: config.waveplate_degrees(),
        residual: fit_residual(&ensemble, &solution, &config),
    })
}

/// Agreement threshold between the oracle and the closed form.
pub const VERIFY_GAP: f64 = 1e-4;
/// Largest amount by which the oracle may undercut the closed form.
pub const VERIFY_DOMINANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub s_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            s_values: DEFAULT_S_VALUES.to_vec(),
            eta_values: DEFAULT_VERIFY_ETAS.to_vec(),
            budget: 100_000,
            seed: 0,
        }
    }
}

/// Inconclusive rates probed per ensemble: five points across the whole
/// admissible range, including the interval boundaries.
pub fn verify_rates(ensemble: &Ensemble) -> Vec<f64> {
    let ep = q_endpoints(ensemble);
    match ep.qth {
        None => vec![0.0, 0.25 * ep.q0, 0.5 * ep.q0, 0.75 * ep.q0, 0.999 * ep.q0],
        Some(qth) => vec![0.0, 0.5 * qth, qth, 0.5 * (qth + ep.qmax), 0.999 * ep.qmax],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyPoint {
    pub s: f64,
    pub eta1: f64,
    pub q: f64,
    pub interval: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub gap: f64,
    pub converged: bool,
    pub passed: bool,
}

impl fmt::Display for VerifyPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s={} eta1={} Q={:.6} ({}) closed={:.10} oracle={:.10} gap={:.3e}",
            self.s, self.eta1, self.q, self.interval, self.closed_form, self.oracle, self.gap
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub options: VerifyOptions,
    pub points: Vec<VerifyPoint>,
    pub warnings: Vec<String>,
    pub max_gap: f64,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &VerifyPoint> {
        self.points.iter().filter(|p| !p.passed)
    }
}

/// Reference error rate used by [`run_verify_with`].
pub type ClosedForm = fn(&Ensemble, f64) -> Result<f64>;

fn closed_form_error(ensemble: &Ensemble, q: f64) -> Result<f64> {
    Ok(solve(ensemble, q)?.error_rate())
}

/// Certifies the closed-form error rates against the brute-force oracle.
pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    run_verify_with(opts, closed_form_error)
}

/// As [`run_verify`] with an injectable reference, so that a deliberately
/// wrong formula can be shown to fail.
pub fn run_verify_with(opts: &VerifyOptions, reference: ClosedForm) -> Result<VerifyReport> {
    let mut grid = Vec::new();
    for &eta1 in &opts.eta_values {
        for &s in &opts.s_values {
            let ensemble = Ensemble::new(s, eta1)?;
            for q in verify_rates(&ensemble) {
                grid.push((ensemble, s, eta1, q));
            }
        }
    }
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, (ensemble, s, eta1, q))| -> Result<(VerifyPoint, Vec<String>)> {
            let closed = reference(ensemble, *q)?;
            let interval = solve(ensemble, *q)?.interval();
            let oracle_opts = OracleOptions {
                budget: opts.budget,
                seed: sub_seed(opts.seed, i as u64),
            };
            let found = minimize_error_with(ensemble, *q, &oracle_opts)?;
            let gap = (found.pe - closed).abs();
            let passed = gap <= VERIFY_GAP && found.pe >= closed - VERIFY_DOMINANCE;
            let point = VerifyPoint {
                s: *s,
                eta1: *eta1,
                q: *q,
                interval: interval.as_str().into(),
                closed_form: closed,
                oracle: found.pe,
                gap,
                converged: found.converged,
                passed,
            };
            let warnings = if found.converged {
                Vec::new()
            } else {
                vec![format!("unconverged: {point}")]
            };
            Ok((point, warnings))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings: Vec<String> = Vec::new();
    if opts.budget < crate::oracle::RECOMMENDED_BUDGET {
        warnings.push(format!(
            "budget {} is below {}; points may be unconverged",
            opts.budget,
            crate::oracle::RECOMMENDED_BUDGET
        ));
    }
    let mut out = Vec::with_capacity(points.len());
    for (p, w) in points {
        warnings.extend(w);
        out.push(p);
    }
    let max_gap = out.iter().map(|p| p.gap).fold(0.0, f64::max);
    let passed = out.iter().all(|p| p.passed);
    Ok(VerifyReport {
        schema: SCHEMA_VERSION,
        options: opts.clone(),
        points: out,
        warnings,
        max_gap,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_mode_parsing() {
        assert_eq!("med".parse::<QMode>().unwrap(), QMode::Med);
        assert_eq!("half".parse::<QMode>().unwrap(), QMode::Half);
        assert_eq!("ud".parse::<QMode>().unwrap(), QMode::Ud);
        assert_eq!("absolute:0.25".parse::<QMode>().unwrap(), QMode::Absolute(0.25));
        assert_eq!("0.1".parse::<QMode>().unwrap(), QMode::Absolute(0.1));
        assert!("often".parse::<QMode>().is_err());
        assert!("absolute:x".parse::<QMode>().is_err());
        for m in [QMode::Med, QMode::Half, QMode::Ud, QMode::Absolute(0.3)] {
            assert_eq!(m.to_string().parse::<QMode>().unwrap(), m);
        }
    }

    #[test]
    fn absolute_rate_above_maximum_is_rejected() {
        let e = Ensemble::new(0.5, 0.5).unwrap();
        assert!(matches!(
            QMode::Absolute(0.6).resolve(&e),
            Err(FrioError::QAboveMax { .. })
        ));
        assert!((QMode::Ud.resolve(&e).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ideal_ud_sweep_has_no_error() {
        let spec = SweepSpec {
            q_mode: QMode::Ud,
            visibility: 1.0,
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 7);
        for row in &report.rows {
            assert!(row.probs.pe <= 1e-10, "s={} Pe={}", row.s, row.probs.pe);
        }
    }

    #[test]
    fn unequal_prior_half_rate_spans_all_intervals() {
        let spec = SweepSpec {
            eta1: 0.3,
            q_mode: QMode::Half,
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap();
        let tags: Vec<Interval> = report.rows.iter().map(|r| r.interval).collect();
        // s ≤ √(η₁/η₂) ≈ 0.6547 is interval I
        for (row, tag) in report.rows.iter().zip(&tags) {
            if row.s <= (0.3f64 / 0.7).sqrt() {
                assert_eq!(*tag, Interval::I, "s={}", row.s);
            } else {
                assert_ne!(*tag, Interval::I, "s={}", row.s);
            }
        }
    }

    #[test]
    fn minimum_error_sweep_rises_to_half() {
        let report = run_sweep(&SweepSpec::default()).unwrap();
        let pe: Vec<f64> = report.rows.iter().map(|r| r.probs.pe).collect();
        assert!(pe.windows(2).all(|w| w[1] >= w[0]));
        assert!((pe[6] - 0.5).abs() < 1e-12);
        // noise floor at orthogonal states: (1 − ε)/2
        assert!((pe[0] - 0.5 * (1.0 - 0.981)).abs() < 1e-12);
    }

    #[test]
    fn caller_labels_are_kept_for_large_first_prior() {
        let a = run_sweep(&SweepSpec {
            eta1: 0.3,
            s_values: vec![0.5],
            q_mode: QMode::Absolute(0.1),
            ..SweepSpec::default()
        })
        .unwrap();
        let b = run_sweep(&SweepSpec {
            eta1: 0.7,
            s_values: vec![0.5],
            q_mode: QMode::Absolute(0.1),
            ..SweepSpec::default()
        })
        .unwrap();
        let (pa, pb) = (a.rows[0].probs, b.rows[0].probs);
        assert!((pa.p1 - pb.p2).abs() < 1e-12);
        assert!((pa.q2 - pb.q1).abs() < 1e-12);
        assert!((pa.pe - pb.pe).abs() < 1e-12);
    }

    #[test]
    fn angle_table_examples() {
        let t = run_angles(0.5, 0.5, QMode::Med).unwrap();
        assert_eq!(t.effective_rad[1], 0.0);
        let t = run_angles(0.0, 0.5, QMode::Med).unwrap();
        assert!((t.prep_deg[0] - 22.5).abs() < 1e-12);
        assert!((t.prep_deg[1] + 22.5).abs() < 1e-12);
        let t = run_angles(1.0, 0.5, QMode::Med).unwrap();
        assert_eq!(t.prep_rad, [0.0, 0.0]);
        assert!(run_angles(0.5, 0.5, QMode::Absolute(0.9)).is_err());
        assert!(t.to_string().contains("HWP2"));
    }

    #[test]
    fn verify_rates_cover_both_regimes() {
        let e = Ensemble::new(0.5, 0.5).unwrap();
        assert_eq!(verify_rates(&e).len(), 5);
        let e = Ensemble::new(0.87, 0.1).unwrap();
        let rates = verify_rates(&e);
        let tags: Vec<Interval> = rates.iter().map(|&q| solve(&e, q).unwrap().interval()).collect();
        assert!(tags.contains(&Interval::II));
        assert!(tags.contains(&Interval::III));
    }
}
