//! Deterministic full-graph solves of the manufactured problem with every
//! time scheme, reporting the sup-in-time squared L2 error and wall time.

use metric_rbm::fem::Mesh;
use metric_rbm::graph::demo_graph;
use metric_rbm::harness::benchmark;
use metric_rbm::manufactured::ManufacturedSolution;
use metric_rbm::rbm::{run_full, Discretization, RbmConfig};
use metric_rbm::timestep::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let solution = ManufacturedSolution::demo(&graph)?;
    let disc = Discretization::new(&graph, Mesh::new(100)?, solution.derive_data())?;
    println!("dofs: {}", disc.n_dofs());

    let dt = 0.002;
    for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson, Scheme::Theta(0.75), Scheme::SemiImplicitEuler] {
        let config = RbmConfig::new(dt, dt, 1.0, scheme);
        let (traj, bench) = benchmark(|| run_full(&disc, &config));
        let traj = traj?;
        let error = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, u)| solution.l2_error(&disc.dofmap, u, t))
            .fold(0.0, f64::max);
        println!("{:<12} error {:.3e}  time {:.3}s", scheme.to_string(), error, bench.wall_seconds);
    }
    Ok(())
}
