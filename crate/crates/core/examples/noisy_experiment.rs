//! Simulated photon counting with imperfect interference visibility.

use frio::montecarlo::{run_experiment, AcquisitionPlan};
use frio::povm::from_solution;
use frio::{born_probabilities, solve, solve_angles, Ensemble, Visibility};

fn main() -> frio::Result<()> {
    let e = Ensemble::new(0.5, 0.3)?;
    let v = Visibility::MEASURED;
    let sol = solve(&e, 0.2)?;
    let cfg = solve_angles(&e, &sol)?;
    let theory = born_probabilities(&e, &from_solution(&e, &sol)?, Some(&v))?;
    let plan = AcquisitionPlan::laboratory(&e, 7);
    let record = run_experiment(&e, &cfg, &v, &plan)?;
    let est = record.estimates.expect("estimates");
    for (i, st) in est.states.iter().enumerate() {
        let c = &record.counts[i];
        println!("state {} ({} counts, modes {:?})", i + 1, c.total(), c.modes);
        for (name, x) in ["p", "r", "q"].iter().zip(st.as_array()) {
            println!("  {name} = {:.4} ± {:.4}", x.value, x.sigma);
        }
    }
    println!("Pe = {:.4} ± {:.4}  (expected {:.4})", est.pe.value, est.pe.sigma, theory.pe);
    println!("Q  = {:.4} ± {:.4}  (expected {:.4})", est.q.value, est.q.sigma, theory.q);
    Ok(())
}
