//! Zero inconclusive rate reduces to the minimum-error measurement.

use frio::optimal::helstrom_bound;
use frio::{solve, Ensemble};

fn main() -> frio::Result<()> {
    println!("{:>6} {:>6} {:>14} {:>14}", "s", "eta1", "Pe(Q=0)", "bound");
    for eta1 in [0.5, 0.3, 0.1] {
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let e = Ensemble::new(s, eta1)?;
            let pe = solve(&e, 0.0)?.probs.pe;
            println!("{s:>6.2} {eta1:>6.2} {pe:>14.10} {:>14.10}", helstrom_bound(&e));
        }
    }
    Ok(())
}
