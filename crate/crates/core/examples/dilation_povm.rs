//! The measurement implemented by the circuit, read off its unitary, and the
//! outcome statistics it produces.

use frio::povm::from_solution;
use frio::{born_probabilities, solve, Ensemble, OutcomeLabel};

fn main() -> frio::Result<()> {
    let e = Ensemble::new(0.71, 0.3)?;
    let sol = solve(&e, 0.3)?;
    let povm = from_solution(&e, &sol)?;
    let report = povm.validate();
    println!("{}", report.summary());
    for label in [OutcomeLabel::Identify1, OutcomeLabel::Identify2, OutcomeLabel::Inconclusive] {
        println!("{label:?}:{}", povm.element(label));
    }
    let born = born_probabilities(&e, &povm, None)?;
    println!("closed form : {:?}", sol.probs.to_array());
    println!("Born rule   : {:?}", born.to_array());
    println!("max deviation {:.2e}", born.max_deviation(&sol.probs));
    Ok(())
}
