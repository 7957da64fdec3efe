//! Half-wave plate settings that realize the optimum in the interferometer.

use frio::report::{run_angles, QMode};

fn main() -> frio::Result<()> {
    for (s, eta1, mode) in [
        (0.5, 0.5, QMode::Med),
        (0.5, 0.5, QMode::Half),
        (0.71, 0.3, QMode::Half),
        (0.5, 0.1, QMode::Ud),
    ] {
        println!("{}\n", run_angles(s, eta1, mode)?);
    }
    Ok(())
}
