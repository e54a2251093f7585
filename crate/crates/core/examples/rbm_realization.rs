//! A single random batch trajectory: sampled schedule, batch frequencies,
//! active system sizes and the error against the exact solution over time.

use metric_rbm::decomposition::{demo_partition, option_two};
use metric_rbm::fem::Mesh;
use metric_rbm::graph::demo_graph;
use metric_rbm::manufactured::ManufacturedSolution;
use metric_rbm::rbm::{batch_frequencies, Discretization, RbmConfig, RbmEngine};
use metric_rbm::timestep::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let partition = demo_partition(&graph)?;
    let family = option_two(&partition)?;
    let solution = ManufacturedSolution::demo(&graph)?;
    let disc = Discretization::new(&graph, Mesh::new(100)?, solution.derive_data())?;

    let engine = RbmEngine::new(&disc, &partition, &family, Scheme::CrankNicolson, 1e-3)?;
    for j in 0..engine.len() {
        let sys = engine.system(j);
        println!("batch {}: {} dofs, factor entries {}", j + 1, sys.restriction.n_dofs(), sys.stepper.factor_entries());
    }

    let config = RbmConfig::new(2e-3, 1e-3, 1.0, Scheme::CrankNicolson).with_seed(31).with_stride(100);
    let traj = engine.run(&disc, &config)?;
    let schedule = traj.schedule.as_ref().ok_or("missing schedule")?;
    let head: Vec<_> = schedule.omega.iter().take(20).map(|j| j + 1).collect();
    println!("first windows: {head:?}");
    println!("frequencies: {:?}", batch_frequencies(schedule, engine.len()));
    println!("active dofs: max {} mean {:.1}", traj.stats.max_active_dofs, traj.stats.mean_active_dofs);
    for (&t, u) in traj.times.iter().zip(&traj.states) {
        println!("t={t:.2}  ||y - z||^2 = {:.4e}", disc.l2_error_sq(u, |e, x| solution.exact(e, x, t)));
    }
    Ok(())
}
