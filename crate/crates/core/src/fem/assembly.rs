use crate::decomposition::ZetaWeights;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph};
use crate::quadrature::gauss_legendre;
use crate::sparse::CsrMatrix;

use super::{CoefficientSet, DofMap, Mesh, SourceFn};

/// Points of the element quadrature rule; exact for the quadratic diffusion
/// coefficient against P1 gradients.
const QUAD_POINTS: usize = 3;

type Block = [[f64; 2]; 2];

/// Mass, stiffness, convection and potential matrices on a dof numbering.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub convection: CsrMatrix,
    pub reaction: CsrMatrix,
}

impl AssembledOperators {
    /// `K + C + P`.
    pub fn spatial(&self) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(1.0, &self.stiffness), (1.0, &self.convection), (1.0, &self.reaction)])
    }

    /// `C + P`, the part treated explicitly by the semi-implicit scheme.
    pub fn transport(&self) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(1.0, &self.convection), (1.0, &self.reaction)])
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }
}

#[derive(Debug, Clone)]
struct EdgeElements {
    dx: f64,
    stiffness: Vec<Block>,
    convection: Vec<Block>,
    reaction: Vec<Block>,
}

/// Element matrices of every edge, integrated once and reused by every
/// assembly (full graph or any active batch).
#[derive(Debug, Clone)]
pub struct ElementCache {
    nodes_per_edge: usize,
    edges: Vec<EdgeElements>,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl ElementCache {
    pub fn new(graph: &MetricGraph, mesh: Mesh, coeffs: &CoefficientSet) -> Result<Self> {
        let (quad_nodes, quad_weights) = gauss_legendre(QUAD_POINTS);
        let n_el = mesh.elements_per_edge();
        let mut edges = Vec::with_capacity(graph.n_edges());
        for e in graph.edge_ids() {
            let dx = mesh.spacing(graph.edge(e).length);
            let mut stiffness = Vec::with_capacity(n_el);
            let mut convection = Vec::with_capacity(n_el);
            let mut reaction = Vec::with_capacity(n_el);
            for k in 0..n_el {
                let mut k_el = [[0.0; 2]; 2];
                let mut c_el = [[0.0; 2]; 2];
                let mut p_el = [[0.0; 2]; 2];
                for (&s, &w) in quad_nodes.iter().zip(&quad_weights) {
                    let x = (k as f64 + s) * dx;
                    let a = (coeffs.a)(e, x);
                    if !(a > 0.0) {
                        return Err(Error::NonellipticCoefficient { edge: e.0, x, value: a });
                    }
                    let b = (coeffs.b)(e, x);
                    let p = (coeffs.p)(e, x);
                    let phi = [1.0 - s, s];
                    let dphi = [-1.0 / dx, 1.0 / dx];
                    let wx = w * dx;
                    for i in 0..2 {
                        for j in 0..2 {
                            k_el[i][j] += wx * a * dphi[i] * dphi[j];
                            c_el[i][j] += wx * b * dphi[j] * phi[i];
                            p_el[i][j] += wx * p * phi[i] * phi[j];
                        }
                    }
                }
                stiffness.push(k_el);
                convection.push(c_el);
                reaction.push(p_el);
            }
            edges.push(EdgeElements { dx, stiffness, convection, reaction });
        }
        Ok(Self { nodes_per_edge: mesh.nodes_per_edge, edges, quad_nodes, quad_weights })
    }

    pub fn spacing(&self, e: EdgeId) -> f64 {
        self.edges[e.0].dx
    }

    /// Assembles the operators of the given `(edge, factor)` list into a local
    /// numbering. `local[global]` is the local index of a global dof. The mass
    /// matrix is not scaled; stiffness, convection and potential are.
    pub fn assemble_local(
        &self,
        dofmap: &DofMap,
        local: &[usize],
        n_local: usize,
        edges: &[(EdgeId, f64)],
    ) -> AssembledOperators {
        debug_assert_eq!(self.nodes_per_edge, dofmap.nodes_per_edge());
        let cap = edges.len() * (self.nodes_per_edge + 1) * 4;
        let mut m = Vec::with_capacity(cap);
        let mut kk = Vec::with_capacity(cap);
        let mut c = Vec::with_capacity(cap);
        let mut p = Vec::with_capacity(cap);
        for &(e, factor) in edges {
            let el = &self.edges[e.0];
            let mass: Block = [[el.dx / 3.0, el.dx / 6.0], [el.dx / 6.0, el.dx / 3.0]];
            for k in 0..=self.nodes_per_edge {
                let dofs = [local[dofmap.node_dof(e, k)], local[dofmap.node_dof(e, k + 1)]];
                for i in 0..2 {
                    for j in 0..2 {
                        let (r, s) = (dofs[i], dofs[j]);
                        m.push((r, s, mass[i][j]));
                        kk.push((r, s, factor * el.stiffness[k][i][j]));
                        c.push((r, s, factor * el.convection[k][i][j]));
                        p.push((r, s, factor * el.reaction[k][i][j]));
                    }
                }
            }
        }
        AssembledOperators {
            mass: CsrMatrix::from_triplets(n_local, n_local, &m),
            stiffness: CsrMatrix::from_triplets(n_local, n_local, &kk),
            convection: CsrMatrix::from_triplets(n_local, n_local, &c),
            reaction: CsrMatrix::from_triplets(n_local, n_local, &p),
        }
    }

    /// Load vector `(factor * f(., t), phi_i)` over the listed edges, written
    /// into `out` (local numbering, overwritten).
    pub fn load_local(
        &self,
        dofmap: &DofMap,
        source: &SourceFn,
        t: f64,
        local: &[usize],
        edges: &[(EdgeId, f64)],
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(e, factor) in edges {
            let dx = self.edges[e.0].dx;
            for k in 0..=self.nodes_per_edge {
                let mut el = [0.0; 2];
                for (&s, &w) in self.quad_nodes.iter().zip(&self.quad_weights) {
                    let fx = source(e, (k as f64 + s) * dx, t);
                    el[0] += w * dx * fx * (1.0 - s);
                    el[1] += w * dx * fx * s;
                }
                out[local[dofmap.node_dof(e, k)]] += factor * el[0];
                out[local[dofmap.node_dof(e, k + 1)]] += factor * el[1];
            }
        }
    }
}

/// Assembles the global operators. With `scale`, each edge's stiffness,
/// convection and potential contributions are multiplied by its batch factor;
/// edges with factor zero (inactive) contribute nothing, mass included.
pub fn assemble(
    graph: &MetricGraph,
    mesh: Mesh,
    dofmap: &DofMap,
    coeffs: &CoefficientSet,
    scale: Option<&ZetaWeights>,
) -> Result<AssembledOperators> {
    let cache = ElementCache::new(graph, mesh, coeffs)?;
    let identity: Vec<usize> = (0..dofmap.n_dofs()).collect();
    let edges: Vec<(EdgeId, f64)> = graph
        .edge_ids()
        .map(|e| (e, scale.map_or(1.0, |z| z.edge_factor(e))))
        .filter(|&(_, f)| f != 0.0)
        .collect();
    Ok(cache.assemble_local(dofmap, &identity, dofmap.n_dofs(), &edges))
}
