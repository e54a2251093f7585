use crate::decomposition::BatchView;
use crate::graph::{MetricGraph, VertexId};

use super::DofMap;

/// Marker for local indices absent from a restriction.
const ABSENT: usize = usize::MAX;

/// Why a vertex of an active subgraph carries a Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletKind {
    /// Boundary vertex of the full graph: the data `g(t)`.
    Exterior,
    /// Interior vertex cut by the batch: its frozen value.
    Interface,
}

/// The dofs of one active subgraph in a compact local numbering.
#[derive(Debug, Clone)]
pub struct Restriction {
    /// Global dofs, ascending; local index `k` is `dofs[k]`.
    pub dofs: Vec<usize>,
    local: Vec<usize>,
    /// `(local index, vertex, kind)`, ordered by vertex.
    pub dirichlet: Vec<(usize, VertexId, DirichletKind)>,
    /// Local indices of unconstrained dofs, ascending.
    pub free: Vec<usize>,
}

pub fn restrict_to_batch(graph: &MetricGraph, dofmap: &DofMap, view: &BatchView) -> Restriction {
    let mut dofs: Vec<usize> = view.vertices.iter().map(|&v| dofmap.vertex_dof(v)).collect();
    for &e in &view.active_edges {
        dofs.extend(dofmap.interior_dofs(e));
    }
    dofs.sort_unstable();
    let mut local = vec![ABSENT; dofmap.n_dofs()];
    for (k, &d) in dofs.iter().enumerate() {
        local[d] = k;
    }
    let mut dirichlet = Vec::new();
    for &v in &view.boundary {
        let kind = if view.interface.contains(&v) {
            DirichletKind::Interface
        } else if graph.is_boundary(v) && dofmap.is_constrained(dofmap.vertex_dof(v)) {
            DirichletKind::Exterior
        } else {
            continue;
        };
        dirichlet.push((local[dofmap.vertex_dof(v)], v, kind));
    }
    let mut constrained = vec![false; dofs.len()];
    for &(k, _, _) in &dirichlet {
        constrained[k] = true;
    }
    let free = (0..dofs.len()).filter(|&k| !constrained[k]).collect();
    Restriction { dofs, local, dirichlet, free }
}

impl Restriction {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// Global-to-local map, `usize::MAX` for dofs outside the subgraph.
    pub fn local_map(&self) -> &[usize] {
        &self.local
    }

    pub fn local_of(&self, global: usize) -> Option<usize> {
        self.local.get(global).copied().filter(|&k| k != ABSENT)
    }

    /// Gathers the subgraph's values from a global vector.
    pub fn extract(&self, global: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&d| global[d]).collect()
    }

    /// Scatters local values into a global vector.
    pub fn inject(&self, local: &[f64], global: &mut [f64]) {
        for (&d, &v) in self.dofs.iter().zip(local) {
            global[d] = v;
        }
    }
}
