//! Non-overlapping subgraph partitions, batch families and the random
//! localization weights built on top of them.
//!
//! Parts and batches are 0-based here; the batch file format and the
//! presentation helpers use 1-based indices.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, VertexId};

/// Tolerance on `|sum(p) - 1|` below which a probability vector is renormalized.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A pairwise edge-disjoint cover of the graph by subgraphs.
#[derive(Debug, Clone)]
pub struct SubgraphPartition {
    parts: Vec<Vec<EdgeId>>,
    owner: Vec<usize>,
    part_vertices: Vec<BTreeSet<VertexId>>,
    part_interior: Vec<BTreeSet<VertexId>>,
}

pub fn validate_partition(graph: &MetricGraph, parts: Vec<Vec<EdgeId>>) -> Result<SubgraphPartition> {
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::InvalidBatch("partition parts must be nonempty".into()));
    }
    let mut owner = vec![usize::MAX; graph.n_edges()];
    for (i, part) in parts.iter().enumerate() {
        for &e in part {
            if e.0 >= graph.n_edges() {
                return Err(Error::UnknownEdge(format!("#{}", e.0)));
            }
            if owner[e.0] != usize::MAX {
                return Err(Error::OverlappingParts { edge: e.0, first: owner[e.0], second: i });
            }
            owner[e.0] = i;
        }
    }
    if let Some(e) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::UncoveredEdge(e));
    }

    let mut part_vertices = Vec::with_capacity(parts.len());
    let mut part_interior = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let mut local_degree: BTreeMap<VertexId, usize> = BTreeMap::new();
        for &e in part {
            let edge = graph.edge(e);
            *local_degree.entry(edge.tail).or_default() += 1;
            *local_degree.entry(edge.head).or_default() += 1;
        }
        // A vertex is interior to a part when the part reaches it through at
        // least two edges; such a vertex must keep every incident edge.
        let mut interior = BTreeSet::new();
        for (&v, &deg) in &local_degree {
            if graph.is_boundary(v) || deg < 2 {
                continue;
            }
            if deg != graph.degree(v) {
                return Err(Error::InteriorVertexMissingEdge { vertex: v.0, part: i });
            }
            interior.insert(v);
        }
        part_vertices.push(local_degree.into_keys().collect());
        part_interior.push(interior);
    }

    let mut parts = parts;
    for p in &mut parts {
        p.sort();
    }
    Ok(SubgraphPartition { parts, owner, part_vertices, part_interior })
}

impl SubgraphPartition {
    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part(&self, i: usize) -> &[EdgeId] {
        &self.parts[i]
    }

    pub fn parts(&self) -> &[Vec<EdgeId>] {
        &self.parts
    }

    /// Index of the part owning edge `e`.
    pub fn owner(&self, e: EdgeId) -> usize {
        self.owner[e.0]
    }

    pub fn part_vertices(&self, i: usize) -> &BTreeSet<VertexId> {
        &self.part_vertices[i]
    }

    pub fn part_interior(&self, i: usize) -> &BTreeSet<VertexId> {
        &self.part_interior[i]
    }
}

/// Computes `pi_i = sum_{j : i in B_j} p_j` for every part.
pub fn normalizers(n_parts: usize, batches: &[Vec<usize>], probs: &[f64]) -> Result<Vec<f64>> {
    let probs = checked_probabilities(probs)?;
    if probs.len() != batches.len() {
        return Err(Error::BadProbabilityVector(format!(
            "{} probabilities for {} batches",
            probs.len(),
            batches.len()
        )));
    }
    let mut pi = vec![0.0; n_parts];
    for (batch, p) in batches.iter().zip(&probs) {
        for &i in batch {
            if i >= n_parts {
                return Err(Error::InvalidBatch(format!("part index {} out of range", i + 1)));
            }
            pi[i] += p;
        }
    }
    if let Some(i) = pi.iter().position(|&x| x <= 0.0) {
        return Err(Error::ZeroNormalizer(i));
    }
    Ok(pi)
}

fn checked_probabilities(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::BadProbabilityVector("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0)) {
        return Err(Error::BadProbabilityVector(format!("entry {p} outside (0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::BadProbabilityVector(format!("entries sum to {sum}")));
    }
    Ok(probs.iter().map(|p| p / sum).collect())
}

/// Batches `B_j` with selection probabilities `p_j` and derived normalizers.
#[derive(Debug, Clone)]
pub struct BatchFamily {
    batches: Vec<Vec<usize>>,
    probs: Vec<f64>,
    normalizers: Vec<f64>,
}

impl BatchFamily {
    pub fn new(partition: &SubgraphPartition, batches: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self> {
        let batches = checked_batches(partition.n_parts(), batches)?;
        let probs = checked_probabilities(&probs)?;
        let normalizers = normalizers(partition.n_parts(), &batches, &probs)?;
        Ok(Self { batches, probs, normalizers })
    }

    /// Equal probability `1/N` for every batch.
    pub fn uniform(partition: &SubgraphPartition, batches: Vec<Vec<usize>>) -> Result<Self> {
        let n = batches.len().max(1);
        Self::new(partition, batches, vec![1.0 / n as f64; n])
    }

    /// The single batch `B_1 = [M]` selected with probability one.
    pub fn single(partition: &SubgraphPartition) -> Self {
        Self::new(partition, vec![(0..partition.n_parts()).collect()], vec![1.0]).expect("single batch is valid")
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batch(&self, j: usize) -> &[usize] {
        &self.batches[j]
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn normalizers(&self) -> &[f64] {
        &self.normalizers
    }

    pub fn view(&self, graph: &MetricGraph, partition: &SubgraphPartition, j: usize) -> Result<BatchView> {
        batch_view(graph, partition, &self.batches, j)
    }

    pub fn zeta(&self, graph: &MetricGraph, partition: &SubgraphPartition, j: usize) -> Result<ZetaWeights> {
        zeta_weights(graph, partition, &self.batches, &self.normalizers, j)
    }
}

fn checked_batches(n_parts: usize, batches: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
    if batches.is_empty() {
        return Err(Error::InvalidBatch("no batches".into()));
    }
    let mut out = Vec::with_capacity(batches.len());
    for (j, b) in batches.into_iter().enumerate() {
        let set: BTreeSet<usize> = b.iter().copied().collect();
        if set.is_empty() {
            return Err(Error::InvalidBatch(format!("batch {} is empty", j + 1)));
        }
        if set.len() != b.len() {
            return Err(Error::InvalidBatch(format!("batch {} repeats a part", j + 1)));
        }
        if let Some(&i) = set.iter().find(|&&i| i >= n_parts) {
            return Err(Error::InvalidBatch(format!("batch {} references part {}", j + 1, i + 1)));
        }
        out.push(set.into_iter().collect());
    }
    Ok(out)
}

/// The active subgraph of one batch and its vertex classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchView {
    pub index: usize,
    pub active_edges: Vec<EdgeId>,
    pub vertices: BTreeSet<VertexId>,
    /// `V_0^j`: vertices of the full interior set whose incident edges are all active.
    pub interior: BTreeSet<VertexId>,
    /// `V_b^j = V^j \ V_0^j`.
    pub boundary: BTreeSet<VertexId>,
    /// `V_b^j ∩ V_0`: interior vertices of the full graph cut by the batch.
    pub interface: BTreeSet<VertexId>,
    /// `V_b^j ∩ V_b`.
    pub exterior_boundary: BTreeSet<VertexId>,
    edge_active: Vec<bool>,
}

impl BatchView {
    pub fn is_active(&self, e: EdgeId) -> bool {
        self.edge_active[e.0]
    }
}

pub fn batch_view(
    graph: &MetricGraph,
    partition: &SubgraphPartition,
    batches: &[Vec<usize>],
    j: usize,
) -> Result<BatchView> {
    let batch = batches.get(j).ok_or(Error::BadBatchIndex { index: j, len: batches.len() })?;
    let mut edge_active = vec![false; graph.n_edges()];
    let mut vertices = BTreeSet::new();
    for &i in batch {
        if i >= partition.n_parts() {
            return Err(Error::InvalidBatch(format!("part index {} out of range", i + 1)));
        }
        for &e in partition.part(i) {
            edge_active[e.0] = true;
        }
        vertices.extend(partition.part_vertices(i).iter().copied());
    }
    let active_edges: Vec<_> = graph.edge_ids().filter(|e| edge_active[e.0]).collect();

    // Boundary vertices of the full graph stay boundary vertices of every
    // active subgraph, even when all of their edges are active.
    let interior: BTreeSet<_> = vertices
        .iter()
        .copied()
        .filter(|&v| !graph.is_boundary(v) && graph.incident_edges(v).iter().all(|e| edge_active[e.0]))
        .collect();
    let boundary: BTreeSet<_> = vertices.difference(&interior).copied().collect();
    let (exterior_boundary, interface): (BTreeSet<_>, BTreeSet<_>) =
        boundary.iter().copied().partition(|&v| graph.is_boundary(v));

    Ok(BatchView { index: j, active_edges, vertices, interior, boundary, interface, exterior_boundary, edge_active })
}

/// Outcome of the structural check that every interior vertex is interior to
/// the active subgraph of at least one batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub holds: bool,
    /// Interior vertex -> lowest batch index witnessing it.
    pub witnesses: BTreeMap<VertexId, usize>,
    pub violations: Vec<VertexId>,
}

pub fn check_vertex_coverage(
    graph: &MetricGraph,
    partition: &SubgraphPartition,
    batches: &[Vec<usize>],
) -> Result<CoverageReport> {
    let views = (0..batches.len())
        .map(|j| batch_view(graph, partition, batches, j))
        .collect::<Result<Vec<_>>>()?;
    let mut witnesses = BTreeMap::new();
    let mut violations = Vec::new();
    for v in graph.interior_vertices() {
        match views.iter().find(|view| view.interior.contains(&v)) {
            Some(view) => {
                witnesses.insert(v, view.index);
            }
            None => violations.push(v),
        }
    }
    Ok(CoverageReport { holds: violations.is_empty(), witnesses, violations })
}

/// Batch-localized scaling `zeta^j`: a per-edge factor `1/pi_i` on active edges
/// (owning part `i`), zero on inactive edges, and a mask removing the interface
/// vertices `V_b^j ∩ V_0`.
///
/// At a vertex shared by two active parts with different normalizers the value
/// is taken through an adjacent edge, so each edge endpoint carries the factor
/// of the edge's owning part.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaWeights {
    pub batch: Option<usize>,
    edge_factor: Vec<f64>,
    masked: BTreeSet<VertexId>,
}

impl ZetaWeights {
    /// The identity scaling: factor one on every edge, nothing masked.
    pub fn unit(graph: &MetricGraph) -> Self {
        Self { batch: None, edge_factor: vec![1.0; graph.n_edges()], masked: BTreeSet::new() }
    }

    /// Explicit per-edge factors with no vertex mask.
    pub fn from_factors(edge_factor: Vec<f64>) -> Self {
        Self { batch: None, edge_factor, masked: BTreeSet::new() }
    }

    pub fn edge_factor(&self, e: EdgeId) -> f64 {
        self.edge_factor[e.0]
    }

    pub fn edge_factors(&self) -> &[f64] {
        &self.edge_factor
    }

    pub fn masked_vertices(&self) -> &BTreeSet<VertexId> {
        &self.masked
    }

    /// `zeta_psi` at an interior point of edge `e` where `psi = psi_value`.
    pub fn on_edge(&self, e: EdgeId, psi_value: f64) -> f64 {
        self.edge_factor[e.0] * psi_value
    }

    /// `zeta_psi` at vertex `v` seen through the adjacent edge `e`.
    pub fn at_vertex(&self, v: VertexId, e: EdgeId, psi_value: f64) -> f64 {
        if self.masked.contains(&v) {
            0.0
        } else {
            self.edge_factor[e.0] * psi_value
        }
    }
}

pub fn zeta_weights(
    graph: &MetricGraph,
    partition: &SubgraphPartition,
    batches: &[Vec<usize>],
    pi: &[f64],
    j: usize,
) -> Result<ZetaWeights> {
    let view = batch_view(graph, partition, batches, j)?;
    let mut edge_factor = vec![0.0; graph.n_edges()];
    for &i in &batches[j] {
        for &e in partition.part(i) {
            edge_factor[e.0] = 1.0 / pi[i];
        }
    }
    Ok(ZetaWeights { batch: Some(j), edge_factor, masked: view.interface })
}

/// A scalar field evaluated at local coordinate `x` of an edge.
pub type EdgeField<'a> = &'a dyn Fn(EdgeId, f64) -> f64;

/// Largest `|sum_j p_j zeta^j_psi(x) - psi(x)|` over the given interior edge
/// points and fields.
pub fn verify_unbiased(
    graph: &MetricGraph,
    partition: &SubgraphPartition,
    family: &BatchFamily,
    fields: &[EdgeField<'_>],
    points: &[(EdgeId, f64)],
) -> Result<f64> {
    let zetas = (0..family.len())
        .map(|j| family.zeta(graph, partition, j))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for psi in fields {
        for &(e, x) in points {
            let value = psi(e, x);
            let mean: f64 = zetas.iter().zip(family.probs()).map(|(z, p)| p * z.on_edge(e, value)).sum();
            worst = worst.max((mean - value).abs());
        }
    }
    Ok(worst)
}

/// The four-part partition `{e1,e2,e3}, {e4,e5}, {e6,e7}, {e8,e9,e10}` of the demo graph.
pub fn demo_partition(graph: &MetricGraph) -> Result<SubgraphPartition> {
    let parts = [&[1, 2, 3][..], &[4, 5], &[6, 7], &[8, 9, 10]]
        .iter()
        .map(|p| p.iter().map(|&k| EdgeId(k - 1)).collect())
        .collect();
    validate_partition(graph, parts)
}

/// Singletons plus `{1,2,3}` and `{2,3,4}`, each with probability 1/6.
pub fn option_one(partition: &SubgraphPartition) -> Result<BatchFamily> {
    BatchFamily::uniform(partition, vec![vec![0], vec![1], vec![2], vec![3], vec![0, 1, 2], vec![1, 2, 3]])
}

/// Singletons plus the full index set, each with probability 1/5.
pub fn option_two(partition: &SubgraphPartition) -> Result<BatchFamily> {
    BatchFamily::uniform(partition, vec![vec![0], vec![1], vec![2], vec![3], vec![0, 1, 2, 3]])
}
