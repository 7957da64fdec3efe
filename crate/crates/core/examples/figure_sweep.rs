//! Theory and simulated data over the overlap grid, written as CSV.

use frio::report::format::{render, Format};
use frio::report::{run_sweep, QMode, SimulationSpec, SweepSpec};

fn main() {
    for (eta1, mode) in [(0.5, QMode::Med), (0.3, QMode::Half), (0.3, QMode::Ud)] {
        let spec = SweepSpec {
            eta1,
            q_mode: mode,
            montecarlo: Some(SimulationSpec { seed: 42, ..SimulationSpec::default() }),
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap_or_else(|e| panic!("{e}"));
        print!("{}", render(&report, Format::Csv, None).expect("render"));
        println!();
    }
}
