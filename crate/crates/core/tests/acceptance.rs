//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use frio::circuit::{propagate, CircuitConfig, DetectorMode};
use frio::ensemble::{born_probabilities, DensityOperator, Ensemble, StateLabel};
use frio::montecarlo::{run_experiment, AcquisitionPlan, Estimate};
use frio::noise::{apply_white_noise, Visibility};
use frio::optimal::{error_rate_three_outcome, error_rate_two_outcome, solve};
use frio::povm::from_solution;
use frio::report::{run_verify, VerifyOptions};
use frio::circuit::solve_angles;
use nalgebra::{Complex, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

type C = Complex<f64>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random overlap and prior, both strictly inside their ranges.
fn random_point(r: &mut ChaCha8Rng) -> (f64, f64) {
    (r.random_range(0.0..1.0), r.random_range(0.001..0.999))
}

fn minimum_error_reduction() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (s, eta1) = random_point(&mut r);
        let eta2 = 1.0 - eta1;
        let reference = 0.5 * (1.0 - (1.0 - 4.0 * eta1 * eta2 * s * s).sqrt());
        let e = Ensemble::new(s, eta1).unwrap();
        let pe = solve(&e, 0.0).unwrap().probs.pe;
        worst = worst.max((pe - reference).abs());
    }
    check(worst <= 1e-12, format!("max |Pe − Helstrom| = {worst:.2e} over 1000 points"))
}

fn unambiguous_endpoint() -> Outcome {
    let mut r = rng(2);
    let (mut worst_pe, mut n_one, mut n_three, mut exact) = (0.0f64, 0, 0, true);
    while n_one < 500 || n_three < 500 {
        let (s, eta1) = random_point(&mut r);
        let (lo, hi) = (eta1.min(1.0 - eta1), eta1.max(1.0 - eta1));
        let e = Ensemble::new(s, eta1).unwrap();
        if lo >= s * s / (1.0 + s * s) {
            if n_one == 500 {
                continue;
            }
            n_one += 1;
            let q0 = 2.0 * s * (lo * hi).sqrt();
            worst_pe = worst_pe.max(solve(&e, q0).unwrap().probs.pe);
        } else {
            if n_three == 500 {
                continue;
            }
            n_three += 1;
            let sol = solve(&e, lo + hi * s * s).unwrap();
            // internal labels: state 1 is the less likely one
            let p = sol.probs;
            exact &= p.r2 == 0.0 && p.p1 == 0.0;
        }
    }
    check(
        worst_pe <= 1e-12 && exact,
        format!("interval I: max Pe(Q₀) = {worst_pe:.2e}; interval III: r₂ = p₁ = 0 exactly: {exact}"),
    )
}

fn interval_continuity() -> Outcome {
    let mut r = rng(3);
    let (mut worst, mut n) = (0.0f64, 0);
    while n < 500 {
        let (s, eta1) = random_point(&mut r);
        let (lo, hi) = (eta1.min(1.0 - eta1), eta1.max(1.0 - eta1));
        if lo >= s * s / (1.0 + s * s) {
            continue;
        }
        n += 1;
        let e = Ensemble::new(s, eta1).unwrap();
        let q0 = 2.0 * s * (lo * hi).sqrt();
        let qth = 2.0 * lo * hi * (1.0 - s * s) / (1.0 - q0);
        let three = error_rate_three_outcome(&e, qth).unwrap();
        let two = error_rate_two_outcome(&e, qth);
        worst = worst.max((three - two).abs());
    }
    check(worst <= 1e-9, format!("max |Pe_II − Pe_III| at Q_th = {worst:.2e} over 500 points"))
}

fn ports(cfg: &CircuitConfig, label: StateLabel) -> [f64; 4] {
    let out = propagate(cfg, &cfg.prepared_state(label));
    DetectorMode::ALL.map(|m| out.probability(m))
}

fn circuit_formula_equivalence() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut angle = || r.random_range(-PI..PI);

    // Equal priors: θ₁ = 0, θ₃ = π/4.
    for _ in 0..1000 {
        let (theta, t2) = (angle(), angle());
        let cfg = CircuitConfig::new(theta, 0.0, t2, FRAC_PI_4, false);
        let (a, b) = ((2.0 * theta).cos(), (2.0 * theta).sin());
        let success = 0.5 * (a * t2.cos() + b).powi(2);
        let error = 0.5 * (a * t2.cos() - b).powi(2);
        let q = (t2.sin() * a).powi(2);
        let one = ports(&cfg, StateLabel::One);
        let two = ports(&cfg, StateLabel::Two);
        for (got, want) in [
            (one[1], success),
            (one[0], error),
            (one[3], q),
            (two[0], success),
            (two[1], error),
            (two[3], q),
        ] {
            worst = worst.max((got - want).abs());
        }
    }

    // General three-outcome setting.
    for _ in 0..1000 {
        let (theta, t1, t2, t3) = (angle(), angle(), angle(), angle());
        let cfg = CircuitConfig::new(theta, t1, t2, t3, false);
        let (a, b) = ((2.0 * theta).cos(), (2.0 * theta).sin());
        let (s1, c1, s2, c2, s3, c3) = (t1.sin(), t1.cos(), t2.sin(), t2.cos(), t3.sin(), t3.cos());
        let v1 = |sign: f64| (a * (s3 * c2 * c1 - c3 * s1) + sign * b * (s3 * c2 * s1 + c3 * c1)).powi(2);
        let h1 = |sign: f64| (a * (c3 * c2 * c1 + s3 * s1) + sign * b * (s3 * c1 - c3 * c2 * s1)).powi(2);
        let v2 = |sign: f64| s2 * s2 * (a * c1 + sign * b * s1).powi(2);
        let one = ports(&cfg, StateLabel::One);
        let two = ports(&cfg, StateLabel::Two);
        for (got, want) in [
            (one[1], v1(1.0)),  // p₁
            (two[1], v1(-1.0)), // r₂
            (two[0], h1(1.0)),  // p₂
            (one[0], h1(-1.0)), // r₁
            (one[3], v2(1.0)),  // q₁
            (two[3], v2(-1.0)), // q₂
        ] {
            worst = worst.max((got - want).abs());
        }
        worst = worst.max(one[2]).max(two[2]);
    }

    // Two-outcome setting: θ₁ = θ₂ = 0.
    for _ in 0..1000 {
        let (theta, t3) = (angle(), angle());
        let cfg = CircuitConfig::new(theta, 0.0, 0.0, t3, true);
        let (a, b) = ((2.0 * theta).cos(), (2.0 * theta).sin());
        let one = ports(&cfg, StateLabel::One);
        let two = ports(&cfg, StateLabel::Two);
        for (got, want) in [
            (two[0], (a * t3.cos() + b * t3.sin()).powi(2)), // p₂
            (one[0], (a * t3.cos() - b * t3.sin()).powi(2)), // r₁
            (one[1], (a * t3.sin() + b * t3.cos()).powi(2)), // q₁
            (one[3], 0.0),
            (two[3], 0.0),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    check(worst <= 1e-10, format!("max port deviation = {worst:.2e} over 3×1000 angle tuples"))
}

const GRID_S: [f64; 7] = [0.0, 0.25, 0.38, 0.5, 0.71, 0.87, 1.0];
const GRID_ETA: [f64; 3] = [0.5, 0.3, 0.1];

/// Rates spanning every interval the ensemble has.
fn grid_rates(s: f64, eta1: f64) -> Vec<f64> {
    let eta2 = 1.0 - eta1;
    let q0 = 2.0 * s * (eta1 * eta2).sqrt();
    if eta1 >= s * s / (1.0 + s * s) {
        vec![0.0, 0.25 * q0, 0.5 * q0, 0.75 * q0, 0.999 * q0]
    } else {
        let qth = 2.0 * eta1 * eta2 * (1.0 - s * s) / (1.0 - q0);
        let qmax = eta1 + eta2 * s * s;
        vec![0.0, 0.5 * qth, qth, 0.5 * (qth + qmax), 0.999 * qmax, qmax]
    }
}

fn dilation_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut failures = Vec::new();
    for eta1 in GRID_ETA {
        for s in GRID_S {
            let e = Ensemble::new(s, eta1).unwrap();
            for q in grid_rates(s, eta1) {
                count += 1;
                let result = solve(&e, q).and_then(|sol| {
                    let povm = from_solution(&e, &sol)?;
                    Ok(born_probabilities(&e, &povm, None)?.max_deviation(&sol.probs))
                });
                match result {
                    Ok(d) => worst = worst.max(d),
                    Err(err) => failures.push(format!("s={s} eta1={eta1} Q={q}: {err}")),
                }
            }
        }
    }
    check(
        worst <= 1e-9 && failures.is_empty(),
        format!("max deviation = {worst:.2e} over {count} points; failures: {failures:?}"),
    )
}

fn oracle_certification() -> Outcome {
    let report = run_verify(&VerifyOptions {
        budget: 100_000,
        ..VerifyOptions::default()
    })
    .unwrap();
    let undercut = report
        .points
        .iter()
        .map(|p| p.closed_form - p.oracle)
        .fold(f64::NEG_INFINITY, f64::max);
    let failed: Vec<String> = report.failures().map(|p| p.to_string()).collect();
    check(
        report.points.len() == 105 && report.passed && report.max_gap <= 1e-4 && undercut <= 1e-6,
        format!(
            "{} points, max gap = {:.2e}, largest undercut = {undercut:.2e}; failures: {failed:?}",
            report.points.len(),
            report.max_gap
        ),
    )
}

fn figure_regeneration() -> Outcome {
    let visibility = Visibility::new(0.981, 0.0).unwrap();
    let (mut inside, mut total) = (0usize, 0usize);
    let mut times_ok = true;
    for (eta1, t1, t2) in [(0.5, 10.0, 10.0), (0.3, 6.0, 14.0)] {
        for s in GRID_S {
            let e = Ensemble::new(s, eta1).unwrap();
            let eta2 = 1.0 - eta1;
            let q0 = 2.0 * s * (eta1 * eta2).sqrt();
            let qmax = if eta1 >= s * s / (1.0 + s * s) { q0 } else { eta1 + eta2 * s * s };
            for q in [0.0, 0.5 * q0, qmax] {
                let sol = solve(&e, q).unwrap();
                let cfg = solve_angles(&e, &sol).unwrap();
                let theory =
                    born_probabilities(&e, &from_solution(&e, &sol).unwrap(), Some(&visibility))
                        .unwrap();
                let plan0 = AcquisitionPlan::for_priors(&e, 1400.0, 10.0, 0).unwrap();
                times_ok &= (plan0.time1 - t1).abs() < 1e-9 && (plan0.time2 - t2).abs() < 1e-9;
                for seed in 0..200u64 {
                    let plan = plan0.with_seed(seed);
                    let est = run_experiment(&e, &cfg, &visibility, &plan)
                        .unwrap()
                        .estimates
                        .unwrap();
                    let pairs: [(Estimate, f64); 9] = [
                        (est.states[0].p, theory.p1),
                        (est.states[0].r, theory.r1),
                        (est.states[0].q, theory.q1),
                        (est.states[1].p, theory.p2),
                        (est.states[1].r, theory.r2),
                        (est.states[1].q, theory.q2),
                        (est.ps, theory.ps),
                        (est.pe, theory.pe),
                        (est.q, theory.q),
                    ];
                    for (estimate, reference) in pairs {
                        total += 1;
                        inside += usize::from(estimate.within(reference, 3.0));
                    }
                }
            }
        }
    }
    let frac = inside as f64 / total as f64;
    check(
        frac >= 0.95 && times_ok,
        format!("{:.2}% of {total} estimates within 3σ; plan times 10/10 s and 6/14 s: {times_ok}", 100.0 * frac),
    )
}

fn random_density(r: &mut ChaCha8Rng) -> DensityOperator {
    let mut c = || C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let a = Matrix2::new(c(), c(), c(), c());
    let m = a * a.adjoint();
    let tr = m.trace();
    DensityOperator::new(m / tr).unwrap()
}

fn noise_oracle() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let rho = random_density(&mut r);
        // 0 ⪯ Π ⪯ 𝟙: a random state scaled by a random weight
        let pi = random_density(&mut r).matrix() * C::new(r.random_range(0.0..1.0), 0.0);
        let eps = r.random_range(0.0..=1.0);
        let v = Visibility::new(eps, 0.0).unwrap();
        let noisy = apply_white_noise(&rho, &v);
        let lhs = (noisy.matrix() * pi).trace().re;
        let rhs = eps * (rho.matrix() * pi).trace().re + (1.0 - eps) * pi.trace().re / 2.0;
        worst = worst.max((lhs - rhs).abs());
        worst = worst.max((v.noisy_expectation(&rho, &pi) - rhs).abs());
    }
    check(worst <= 1e-12, format!("max |tr(ρ'Π) − formula| = {worst:.2e} over 1000 triples"))
}

fn data_section(path: &std::path::Path) -> Vec<u8> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with("# generated="))
        .flat_map(|l| l.bytes().chain(std::iter::once(b'\n')))
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_frio");
    let runs: [&[&str]; 2] = [
        &["sweep", "--seed", "42"],
        &["simulate", "--seed", "42", "--eta1", "0.3", "--q-mode", "half"],
    ];
    let mut identical = Vec::new();
    for (n, args) in runs.iter().enumerate() {
        let mut data = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("run{n}{k}.csv"));
            let status = Command::new(bin).args(*args).arg("--out").arg(&out).status().unwrap();
            assert!(status.success());
            data.push(data_section(&out));
        }
        identical.push(data[0] == data[1] && !data[0].is_empty());
    }
    check(
        identical.iter().all(|&x| x),
        format!("`sweep --seed 42` identical: {}; `simulate --seed 42 --eta1 0.3` identical: {}", identical[0], identical[1]),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 minimum-error reduction", Duration::from_secs(1), minimum_error_reduction),
        ("2 unambiguous endpoint", Duration::from_secs(1), unambiguous_endpoint),
        ("3 interval continuity", Duration::from_secs(1), interval_continuity),
        ("4 circuit-formula equivalence", Duration::from_secs(5), circuit_formula_equivalence),
        ("5 dilation round trip", Duration::from_secs(10), dilation_round_trip),
        ("6 oracle certification", Duration::from_secs(300), oracle_certification),
        ("7 figure regeneration (Monte Carlo)", Duration::from_secs(120), figure_regeneration),
        ("8 noise oracle", Duration::from_secs(1), noise_oracle),
        ("9 determinism", Duration::from_secs(60), determinism),
    ];
    let mut all = true;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let passed = outcome.passed && in_time;
        all &= passed;
        println!(
            "{} criterion {name}: {} [{:.3} s, limit {} s]",
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if !all {
        eprintln!("acceptance suite failed");
        std::process::exit(1);
    }
}
