//! Lower-order coefficients of the quartic manufactured solution on the demo
//! graph, with vertex residuals and the derived source at a few points.

use metric_rbm::graph::demo_graph;
use metric_rbm::manufactured::ManufacturedSolution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let solution = ManufacturedSolution::demo(&graph)?;
    println!("{:<4} {:>9} {:>9} {:>11} {:>11} {:>11}", "edge", "alpha", "beta", "gamma", "delta", "epsilon");
    for e in graph.edge_ids() {
        let [alpha, beta, gamma, delta, epsilon] = solution.polynomial(e);
        println!("{:<4} {alpha:>9.3} {beta:>9.3} {gamma:>11.5} {delta:>11.5} {epsilon:>11.5}", graph.edge_name(e));
    }
    let (continuity, flux) = solution.vertex_residuals();
    println!("continuity residual {continuity:.2e}, flux residual {flux:.2e}");
    for e in graph.edge_ids().take(3) {
        for x in [0.25, 0.5, 0.75] {
            println!(
                "{} x={x}: y(0.3)={:+.5}  f(0.3)={:+.5}",
                graph.edge_name(e),
                solution.exact(e, x, 0.3),
                solution.source(e, x, 0.3)
            );
        }
    }
    Ok(())
}
