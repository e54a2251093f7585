//! A user-defined graph and batch family loaded from JSON, solved with a
//! variable diffusion and a time-dependent inflow, and compared with the
//! full solve over several realizations.

use std::path::Path;

use metric_rbm::decomposition::check_vertex_coverage;
use metric_rbm::fem::{CoefficientSet, Mesh};
use metric_rbm::io::{load_batches, load_graph};
use metric_rbm::rbm::{monte_carlo, run_full, Discretization, RbmConfig, RbmEngine, Reference};
use metric_rbm::timestep::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let graph = load_graph(&dir.join("star.json"))?.graph;
    let batches = load_batches(&graph, &dir.join("star_batches.json"))?;
    let report = check_vertex_coverage(&graph, &batches.partition, batches.family.batches())?;
    println!("{} vertices, {} edges, coverage {}", graph.n_vertices(), graph.n_edges(), report.holds);

    let source = graph.vertex_by_name("source").ok_or("no source vertex")?;
    let coeffs = CoefficientSet::heat(1.0)
        .with_a(|_, x| 0.5 + 0.25 * x)
        .with_p(|_, _| 0.1)
        .with_boundary(move |v, t| if v == source { (3.0 * t).sin() } else { 0.0 });
    let disc = Discretization::new(&graph, Mesh::new(40)?, coeffs)?;

    let scheme = Scheme::CrankNicolson;
    let engine = RbmEngine::new(&disc, &batches.partition, &batches.family, scheme, 1e-3)?;
    for h in [1e-3, 4e-3, 1.6e-2] {
        let config = RbmConfig::new(h, 1e-3, 0.96, scheme).with_seed(77).with_stride(10);
        let baseline = run_full(&disc, &config)?;
        let mc = monte_carlo(&disc, &engine, &config, 16, &Reference::Baseline(&baseline))?;
        println!(
            "h={h:<6} error1 {:.4e}  error2 {:.4e}  variance {:.4e}",
            mc.estimate.error1, mc.estimate.error2, mc.estimate.variance
        );
    }
    Ok(())
}
