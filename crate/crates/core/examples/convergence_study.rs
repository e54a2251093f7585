//! Monte-Carlo convergence of the random batch method in the window length
//! `h`, with a log-log slope fit of both error measures.

use metric_rbm::decomposition::{demo_partition, option_two};
use metric_rbm::graph::demo_graph;
use metric_rbm::harness::{fit_slope, run_study, ExperimentSpec, Problem};
use metric_rbm::manufactured::ManufacturedSolution;
use metric_rbm::timestep::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let graph = demo_graph();
    let partition = demo_partition(&graph)?;
    let family = option_two(&partition)?;
    let solution = ManufacturedSolution::demo(&graph)?;
    let spec = ExperimentSpec {
        graph,
        partition,
        family,
        problem: Problem::Manufactured(solution),
        schemes: vec![Scheme::ImplicitEuler],
        dt: 1e-3,
        t_final: 0.996,
        h_list: vec![1e-3, 2e-3, 3e-3, 4e-3, 6e-3],
        realizations: 20,
        seed,
        nodes_per_edge: 100,
        snapshot_stride: 1,
    };
    let out = run_study(&spec)?;
    for b in &out.baselines {
        println!("full {:<5} error {:.3e}  time {:.3}s", b.scheme, b.error.unwrap_or(f64::NAN), b.wall_time_s);
    }
    println!("{:>8} {:>11} {:>11} {:>11} {:>9}", "h", "error1", "error2", "variance", "time_s");
    for r in &out.records {
        println!("{:>8.0e} {:>11.3e} {:>11.3e} {:>11.3e} {:>9.4}", r.h, r.error1, r.error2, r.variance, r.avg_time_s);
    }
    let h: Vec<f64> = out.records.iter().map(|r| r.h).collect();
    let e1: Vec<f64> = out.records.iter().map(|r| r.error1).collect();
    let e2: Vec<f64> = out.records.iter().map(|r| r.error2).collect();
    println!("slope error1 {:.3}", fit_slope(&h, &e1)?.slope);
    println!("slope error2 {:.3}", fit_slope(&h, &e2)?.slope);
    Ok(())
}
