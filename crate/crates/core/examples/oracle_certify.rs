//! Brute-force search over measurements compared with the closed form.

use frio::oracle::{minimize_error_full_rank, minimize_error_with, OracleOptions};
use frio::{solve, Ensemble};

fn main() -> frio::Result<()> {
    let opts = OracleOptions { budget: 50_000, seed: 1 };
    for (s, eta1, q) in [(0.5, 0.5, 0.2), (0.71, 0.3, 0.4), (0.87, 0.1, 0.05)] {
        let e = Ensemble::new(s, eta1)?;
        let closed = solve(&e, q)?.probs.pe;
        let rank_one = minimize_error_with(&e, q, &opts)?;
        let full = minimize_error_full_rank(&e, q, &opts)?;
        println!(
            "s={s} eta1={eta1} Q={q}: closed {closed:.10}  rank-one {:.10}  full-rank {:.10}",
            rank_one.pe, full.pe
        );
    }
    Ok(())
}
