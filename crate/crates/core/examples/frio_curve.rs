//! Optimal error rate as a function of the inconclusive rate, with the
//! interval boundaries marked.

use frio::optimal::q_endpoints;
use frio::{solve, Ensemble};

fn main() -> frio::Result<()> {
    let e = Ensemble::new(0.5, 0.1)?;
    let ep = q_endpoints(&e);
    println!("Q0 = {:.6}, Q_th = {:?}, Q_max = {:.6}", ep.q0, ep.qth, ep.qmax);
    let steps = 20;
    for k in 0..=steps {
        let q = ep.qmax * k as f64 / steps as f64;
        let sol = solve(&e, q)?;
        println!("Q = {q:.4}  Pe = {:.8}  interval {}", sol.probs.pe, sol.interval().as_str());
    }
    Ok(())
}
