//! The demo graph, its four-part partition and the vertex classification of
//! every batch in both demo families.

use metric_rbm::decomposition::{check_vertex_coverage, demo_partition, option_one, option_two, BatchFamily};
use metric_rbm::graph::{demo_graph, MetricGraph, VertexId};
use std::collections::BTreeSet;

fn names(graph: &MetricGraph, set: &BTreeSet<VertexId>) -> String {
    let v: Vec<_> = set.iter().map(|&v| graph.vertex_name(v)).collect();
    format!("{{{}}}", v.join(","))
}

fn show(graph: &MetricGraph, label: &str, family: &BatchFamily) -> Result<(), Box<dyn std::error::Error>> {
    let partition = demo_partition(graph)?;
    println!("{label}: normalizers {:?}", family.normalizers());
    for j in 0..family.len() {
        let view = family.view(graph, &partition, j)?;
        let parts: Vec<_> = family.batch(j).iter().map(|i| i + 1).collect();
        println!(
            "  B{} parts {:?} p={:.4}  V0={} interface={} exterior={}",
            j + 1,
            parts,
            family.probs()[j],
            names(graph, &view.interior),
            names(graph, &view.interface),
            names(graph, &view.exterior_boundary)
        );
    }
    let report = check_vertex_coverage(graph, &partition, family.batches())?;
    println!("  every interior vertex covered: {}", report.holds);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = demo_graph();
    let partition = demo_partition(&graph)?;
    for i in 0..partition.n_parts() {
        let edges: Vec<_> = partition.part(i).iter().map(|&e| graph.edge_name(e)).collect();
        println!(
            "part {}: edges {:?} vertices {} interior {}",
            i + 1,
            edges,
            names(&graph, partition.part_vertices(i)),
            names(&graph, partition.part_interior(i))
        );
    }
    show(&graph, "option 1", &option_one(&partition)?)?;
    show(&graph, "option 2", &option_two(&partition)?)?;

    let singletons = BatchFamily::uniform(&partition, (0..4).map(|i| vec![i]).collect())?;
    let report = check_vertex_coverage(&graph, &partition, singletons.batches())?;
    let missing: BTreeSet<_> = report.violations.into_iter().collect();
    println!("singletons only: uncovered {}", names(&graph, &missing));
    Ok(())
}
