use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::sparse::CsrMatrix;

use super::{AssembledOperators, DofMap};

/// Operators split into free and constrained blocks by algebraic elimination
/// of the Dirichlet dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
    /// Prescribed values, aligned with `constrained`.
    pub values: Vec<f64>,
    /// Free-free blocks.
    pub ops: AssembledOperators,
    /// Free-constrained blocks.
    pub coupling: AssembledOperators,
    n_dofs: usize,
}

pub fn apply_dirichlet(
    ops: &AssembledOperators,
    dofmap: &DofMap,
    g_values: &BTreeMap<VertexId, f64>,
) -> Result<ReducedSystem> {
    let free = dofmap.free_dofs();
    let constrained = dofmap.constrained_dofs();
    let values = dofmap
        .dirichlet_vertices()
        .iter()
        .map(|v| g_values.get(v).copied().ok_or(Error::MissingBoundaryValue(v.0)))
        .collect::<Result<Vec<_>>>()?;
    let block = |rows: &[usize], cols: &[usize]| AssembledOperators {
        mass: ops.mass.submatrix(rows, cols),
        stiffness: ops.stiffness.submatrix(rows, cols),
        convection: ops.convection.submatrix(rows, cols),
        reaction: ops.reaction.submatrix(rows, cols),
    };
    Ok(ReducedSystem {
        ops: block(&free, &free),
        coupling: block(&free, &constrained),
        free,
        constrained,
        values,
        n_dofs: dofmap.n_dofs(),
    })
}

impl ReducedSystem {
    /// Lifting `-(w_m M_fc + w_k K_fc + w_c C_fc + w_p P_fc) g` moved to the load.
    pub fn lifting(&self, weights: [f64; 4]) -> Vec<f64> {
        let combined = CsrMatrix::linear_combination(&[
            (weights[0], &self.coupling.mass),
            (weights[1], &self.coupling.stiffness),
            (weights[2], &self.coupling.convection),
            (weights[3], &self.coupling.reaction),
        ]);
        combined.mul_vec(&self.values).into_iter().map(|v| -v).collect()
    }

    /// Embeds free values and the prescribed data into a full dof vector.
    pub fn reconstruct(&self, free_values: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n_dofs];
        for (&d, &v) in self.free.iter().zip(free_values) {
            u[d] = v;
        }
        for (&d, &v) in self.constrained.iter().zip(&self.values) {
            u[d] = v;
        }
        u
    }

    pub fn restrict_free(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| full[d]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_dofmap, interpolate, CoefficientSet, ElementCache, Mesh};
    use crate::graph::{build_graph, demo_graph, EdgeId};
    use crate::sparse::solve_linear;
    use std::sync::Arc;

    #[test]
    fn zero_data_gives_plain_submatrices() {
        let g = demo_graph();
        let mesh = Mesh::new(4).unwrap();
        let map = build_dofmap(&g, mesh, &g.boundary_vertices()).unwrap();
        let ops = assemble(&g, mesh, &map, &CoefficientSet::heat(1.0), None).unwrap();
        let zeros = g.boundary_vertices().into_iter().map(|v| (v, 0.0)).collect();
        let red = apply_dirichlet(&ops, &map, &zeros).unwrap();
        assert!(red.lifting([1.0; 4]).iter().all(|&v| v == 0.0));
        assert_eq!(red.ops.stiffness, ops.stiffness.submatrix(&red.free, &red.free));
    }

    #[test]
    fn missing_value_is_an_error() {
        let g = demo_graph();
        let mesh = Mesh::new(2).unwrap();
        let map = build_dofmap(&g, mesh, &g.boundary_vertices()).unwrap();
        let ops = assemble(&g, mesh, &map, &CoefficientSet::heat(1.0), None).unwrap();
        let partial = [(VertexId(0), 0.0)].into_iter().collect();
        assert!(matches!(apply_dirichlet(&ops, &map, &partial), Err(Error::MissingBoundaryValue(1))));
    }

    #[test]
    fn linear_solution_is_exact_on_single_edge() {
        let g = build_graph(&[(0, 1, 1.0)], &[0, 1]).unwrap();
        let mesh = Mesh::new(7).unwrap();
        let map = build_dofmap(&g, mesh, &g.boundary_vertices()).unwrap();
        let ops = assemble(&g, mesh, &map, &CoefficientSet::heat(1.0), None).unwrap();
        let g_values = [(VertexId(0), 0.0), (VertexId(1), 1.0)].into_iter().collect();
        let red = apply_dirichlet(&ops, &map, &g_values).unwrap();
        let x = solve_linear(&red.ops.stiffness, &red.lifting([0.0, 1.0, 0.0, 0.0])).unwrap();
        let u = red.reconstruct(&x);
        let exact = interpolate(&g, &map, |_, x| x);
        for (a, b) in u.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    /// Pointwise-scaled residual `(K u_I - F) / (M 1)` of the interpolated
    /// exact steady solution `sin(pi s / 3)` along a three-edge path.
    fn steady_residual(n: usize) -> f64 {
        use std::f64::consts::PI;
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], &[0, 3]).unwrap();
        let mesh = Mesh::new(n).unwrap();
        let map = build_dofmap(&g, mesh, &g.boundary_vertices()).unwrap();
        let k = PI / 3.0;
        let exact = |e: EdgeId, x: f64| (k * (e.0 as f64 + x)).sin();
        let coeffs = CoefficientSet {
            f: Arc::new(move |e: EdgeId, x, _| k * k * (k * (e.0 as f64 + x)).sin()),
            ..CoefficientSet::heat(1.0)
        };
        let cache = ElementCache::new(&g, mesh, &coeffs).unwrap();
        let identity: Vec<usize> = (0..map.n_dofs()).collect();
        let edges: Vec<_> = g.edge_ids().map(|e| (e, 1.0)).collect();
        let ops = cache.assemble_local(&map, &identity, map.n_dofs(), &edges);
        let mut load = vec![0.0; map.n_dofs()];
        cache.load_local(&map, &coeffs.f, 0.0, &identity, &edges, &mut load);
        let u = interpolate(&g, &map, exact);
        let ku = ops.stiffness.mul_vec(&u);
        let lumped = ops.mass.mul_vec(&vec![1.0; map.n_dofs()]);
        map.free_dofs().iter().map(|&d| ((ku[d] - load[d]) / lumped[d]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn interpolant_satisfies_discrete_equations_across_vertices() {
        for n in [4, 9, 19] {
            let r = steady_residual(n);
            assert!(r < 1e-6, "n={n}: residual {r:e}");
        }
    }
}
