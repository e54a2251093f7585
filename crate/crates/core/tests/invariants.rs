use metric_rbm::decomposition::{batch_view, demo_partition, verify_unbiased, BatchFamily, EdgeField};
use metric_rbm::fem::{assemble, build_dofmap, CoefficientSet, Mesh};
use metric_rbm::graph::{build_graph, demo_graph, EdgeId, MetricGraph, VertexId};
use metric_rbm::harness::{read_csv_from, write_csv, ExperimentRecord};
use metric_rbm::manufactured::ManufacturedSolution;
use metric_rbm::rbm::{Discretization, RbmConfig, RbmEngine};
use metric_rbm::timestep::{step, Scheme};
use proptest::prelude::*;

/// A random connected graph: a random tree plus a few chords, with every leaf
/// on the boundary.
fn arb_graph() -> impl Strategy<Value = MetricGraph> {
    (3usize..9)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let lengths = prop::collection::vec(0.2f64..2.0, n - 1 + 3);
            let chords = prop::collection::vec((0..n, 0..n), 0..3);
            (Just(n), parents, lengths, chords)
        })
        .prop_map(|(n, parents, lengths, chords)| {
            let mut edges: Vec<(usize, usize, f64)> =
                parents.iter().enumerate().map(|(i, &p)| (p, i + 1, lengths[i])).collect();
            for (k, &(a, b)) in chords.iter().enumerate() {
                if a != b {
                    edges.push((a, b, lengths[n - 1 + k]));
                }
            }
            let mut degree = vec![0; n];
            for &(a, b, _) in &edges {
                degree[a] += 1;
                degree[b] += 1;
            }
            let mut boundary: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            if boundary.is_empty() {
                boundary.push(0);
            }
            build_graph(&edges, &boundary).unwrap()
        })
}

/// Random batches over the four demo parts, completed so every part is covered,
/// with random positive probabilities.
fn arb_family() -> impl Strategy<Value = (Vec<Vec<usize>>, Vec<f64>)> {
    prop::collection::vec(prop::collection::btree_set(0usize..4, 1..=4), 1..6).prop_flat_map(|sets| {
        let mut batches: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        for i in 0..4 {
            if !batches.iter().any(|b| b.contains(&i)) {
                batches.push(vec![i]);
            }
        }
        let n = batches.len();
        (Just(batches), prop::collection::vec(0.05f64..1.0, n))
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incidence_is_signed_and_matches_degree(graph in arb_graph()) {
        for e in graph.edge_ids() {
            let edge = graph.edge(e);
            prop_assert_eq!(graph.incidence(e, edge.tail) * graph.incidence(e, edge.head), -1);
            let total: i32 = graph.vertex_ids().map(|v| graph.incidence(e, v).abs() as i32).sum();
            prop_assert_eq!(total, 2);
        }
        for v in graph.vertex_ids() {
            let nonzero = graph.edge_ids().filter(|&e| graph.incidence(e, v) != 0).count();
            prop_assert_eq!(graph.degree(v), nonzero);
        }
        let boundary = graph.boundary_vertices();
        let interior = graph.interior_vertices();
        prop_assert_eq!(boundary.len() + interior.len(), graph.n_vertices());
        prop_assert!(boundary.iter().all(|v| !interior.contains(v)));
    }

    #[test]
    fn mass_is_positive_and_stiffness_semidefinite(
        graph in arb_graph(),
        n in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mesh = Mesh::new(n).unwrap();
        let map = build_dofmap(&graph, mesh, &[]).unwrap();
        let coeffs = CoefficientSet::heat(1.0).with_a(|_, x| 0.5 + x * x);
        let ops = assemble(&graph, mesh, &map, &coeffs, None).unwrap();
        prop_assert!(ops.mass.is_symmetric(1e-14));
        let x: Vec<f64> = (0..map.n_dofs()).map(|i| ((seed as f64 + i as f64) * 0.61803).sin()).collect();
        prop_assert!(dot(&x, &ops.mass.mul_vec(&x)) > 0.0);
        prop_assert!(dot(&x, &ops.stiffness.mul_vec(&x)) >= -1e-12);
        let ones = vec![1.0; map.n_dofs()];
        prop_assert!(ops.stiffness.mul_vec(&ones).iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn theta_endpoints_are_the_named_schemes(graph in arb_graph(), seed in any::<u32>(), dt in 1e-3f64..0.5) {
        let mesh = Mesh::new(3).unwrap();
        let map = build_dofmap(&graph, mesh, &[]).unwrap();
        let coeffs = CoefficientSet::heat(1.0).with_b(|_, x| x - 0.5).with_p(|_, x| 1.0 + x);
        let ops = assemble(&graph, mesh, &map, &coeffs, None).unwrap();
        let s = seed as f64;
        let u: Vec<f64> = (0..map.n_dofs()).map(|i| (s + i as f64).cos()).collect();
        let f0: Vec<f64> = (0..map.n_dofs()).map(|i| (s * 0.5 + i as f64).sin()).collect();
        let f1: Vec<f64> = (0..map.n_dofs()).map(|i| (s * 0.25 - i as f64).sin()).collect();
        for (named, theta) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 0.5)] {
            let a = step(named, &ops, &f0, &f1, &u, dt).unwrap();
            let b = step(Scheme::Theta(theta), &ops, &f0, &f1, &u, dt).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn random_families_are_unbiased_and_localized(
        (batches, weights) in arb_family(),
        points in prop::collection::vec((0usize..10, 0.001f64..0.999), 1..30),
    ) {
        let graph = demo_graph();
        let partition = demo_partition(&graph).unwrap();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let family = BatchFamily::new(&partition, batches.clone(), probs).unwrap();

        for j in 0..family.len() {
            let view = batch_view(&graph, &partition, &batches, j).unwrap();
            let parts = [&view.interior, &view.interface, &view.exterior_boundary];
            let count: usize = parts.iter().map(|s| s.len()).sum();
            prop_assert_eq!(count, view.vertices.len());
            let union: std::collections::BTreeSet<VertexId> = parts.iter().flat_map(|s| s.iter().copied()).collect();
            prop_assert_eq!(&union, &view.vertices);

            let zeta = family.zeta(&graph, &partition, j).unwrap();
            for e in graph.edge_ids() {
                prop_assert_eq!(zeta.edge_factor(e) == 0.0, !view.is_active(e));
            }
            for &v in &view.interface {
                let e = graph.incident_edges(v).iter().copied().find(|&e| view.is_active(e)).unwrap();
                prop_assert_eq!(zeta.at_vertex(v, e, 1.0), 0.0);
            }
        }

        let one = |_: EdgeId, _: f64| 1.0;
        let wave = |e: EdgeId, x: f64| (3.0 * x + e.0 as f64).sin();
        let fields: [EdgeField<'_>; 2] = [&one, &wave];
        let pts: Vec<(EdgeId, f64)> = points.iter().map(|&(e, x)| (EdgeId(e), x)).collect();
        let bias = verify_unbiased(&graph, &partition, &family, &fields, &pts).unwrap();
        prop_assert!(bias <= 1e-13, "bias {}", bias);
    }

    #[test]
    fn csv_round_trips(
        rows in prop::collection::vec(
            (0usize..4, 1e-6f64..1.0, 1e-6f64..1.0, 1usize..100, any::<f64>(), 0.0f64..1e6,
             prop::option::of(0.0f64..1e5), any::<u64>()),
            1..8,
        ),
    ) {
        let labels = ["ie", "cn", "theta", "siem"];
        let records: Vec<ExperimentRecord> = rows
            .iter()
            .map(|&(s, h, dt, r, e1, t, rss, seed)| ExperimentRecord {
                scheme: labels[s].into(),
                h,
                dt,
                realizations: r,
                error1: if e1.is_finite() { e1 } else { 0.0 },
                error2: h * dt,
                variance: h / dt,
                avg_time_s: t,
                mem_proxy: r * 17,
                peak_rss_mb: rss,
                seed,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, records);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rbm_runs_freeze_inactive_edges_and_hold_data(seed in any::<u64>(), ratio in 1usize..4) {
        let graph = demo_graph();
        let partition = demo_partition(&graph).unwrap();
        let family = BatchFamily::uniform(
            &partition,
            vec![vec![0], vec![1], vec![2], vec![3], vec![0, 1, 2], vec![1, 2, 3]],
        ).unwrap();
        let solution = ManufacturedSolution::demo(&graph).unwrap();
        let disc = Discretization::new(&graph, Mesh::new(4).unwrap(), solution.derive_data()).unwrap();
        let dt = 0.01;
        let h = dt * ratio as f64;
        let t_final = h * 6.0;
        let engine = RbmEngine::new(&disc, &partition, &family, Scheme::ImplicitEuler, dt).unwrap();
        let config = RbmConfig::new(h, dt, t_final, Scheme::ImplicitEuler).with_seed(seed);
        let traj = engine.run(&disc, &config).unwrap();
        let again = engine.run(&disc, &config).unwrap();
        prop_assert_eq!(&traj.states, &again.states);

        let omega = &traj.schedule.as_ref().unwrap().omega;
        for s in 1..traj.states.len() {
            let window = (s - 1) / ratio;
            let view = family.view(&graph, &partition, omega[window]).unwrap();
            let (before, after) = (&traj.states[s - 1], &traj.states[s]);
            for e in graph.edge_ids().filter(|&e| !view.is_active(e)) {
                for d in disc.dofmap.interior_dofs(e) {
                    prop_assert_eq!(before[d].to_bits(), after[d].to_bits());
                }
            }
            for &v in &view.interface {
                let d = disc.dofmap.vertex_dof(v);
                let frozen = &traj.states[window * ratio];
                prop_assert_eq!(after[d].to_bits(), frozen[d].to_bits());
            }
            for &v in &view.exterior_boundary {
                let d = disc.dofmap.vertex_dof(v);
                prop_assert_eq!(after[d], (disc.coeffs.g)(v, traj.times[s]));
            }
        }
    }
}
