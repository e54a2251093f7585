//! The variance functional along the manufactured solution for both demo
//! families, and its vanishing for the single full batch.

use metric_rbm::decomposition::{demo_partition, option_one, option_two, BatchFamily};
use metric_rbm::graph::demo_graph;
use metric_rbm::manufactured::{uniform_times, ManufacturedSolution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let partition = demo_partition(&graph)?;
    let solution = ManufacturedSolution::demo(&graph)?;
    let times = uniform_times(1.0, 1000);
    let families = [
        ("single batch", BatchFamily::single(&partition)),
        ("option 1", option_one(&partition)?),
        ("option 2", option_two(&partition)?),
    ];
    for (label, family) in &families {
        let profile = solution.lambda_profile(&partition, family, &times)?;
        let peak = profile.values.iter().copied().fold(0.0, f64::max);
        println!("{label:<13} L1 {:.4e}  peak {:.4e}", profile.l1, peak);
        for k in (0..=1000).step_by(250) {
            println!("    t={:.2}  {:.4e}", profile.times[k], profile.values[k]);
        }
    }
    Ok(())
}
