//! Wall time, active system size and factorization size of the full solve
//! against random batch realizations for both demo families.

use metric_rbm::decomposition::{demo_partition, option_one, option_two};
use metric_rbm::fem::Mesh;
use metric_rbm::graph::demo_graph;
use metric_rbm::harness::benchmark;
use metric_rbm::manufactured::ManufacturedSolution;
use metric_rbm::rbm::{run_full, Discretization, RbmConfig, RbmEngine};
use metric_rbm::timestep::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let partition = demo_partition(&graph)?;
    let solution = ManufacturedSolution::demo(&graph)?;
    let disc = Discretization::new(&graph, Mesh::new(100)?, solution.derive_data())?;
    let scheme = Scheme::ImplicitEuler;
    let config = RbmConfig::new(2e-3, 1e-3, 1.0, scheme).with_stride(50);

    let (full, bench) = benchmark(|| run_full(&disc, &config));
    let full = full?;
    println!(
        "full      time {:.3}s  dofs {}  factor entries {}",
        bench.wall_seconds, full.stats.max_active_dofs, full.stats.max_factor_entries
    );

    for (label, family) in [("option 1", option_one(&partition)?), ("option 2", option_two(&partition)?)] {
        let (engine, setup) = benchmark(|| RbmEngine::new(&disc, &partition, &family, scheme, 1e-3));
        let engine = engine?;
        let runs = 10;
        let mut total = 0.0;
        let mut mean_active = 0.0;
        for r in 0..runs {
            let (traj, b) = benchmark(|| engine.run(&disc, &config.with_seed(500 + r)));
            mean_active += traj?.stats.mean_active_dofs / runs as f64;
            total += b.wall_seconds;
        }
        let sizes: Vec<_> = (0..engine.len()).map(|j| engine.system(j).restriction.n_dofs()).collect();
        println!(
            "{label}  time {:.3}s per run (+{:.3}s setup)  mean active dofs {mean_active:.1}  batch sizes {sizes:?}",
            total / runs as f64,
            setup.wall_seconds
        );
    }
    Ok(())
}
