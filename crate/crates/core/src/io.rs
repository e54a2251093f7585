//! JSON descriptions of graphs and batch families.
//!
//! Graph file:
//!
//! ```json
//! {
//!   "edges": [
//!     { "name": "e1", "tail": "v1", "head": "v3", "length": 1.0, "alpha": 10, "beta": -12 }
//!   ],
//!   "boundary": ["v1"]
//! }
//! ```
//!
//! Vertices are named by the edges that reference them. `name`, `length`
//! (default 1), `alpha` and `beta` are optional; when every edge carries
//! `alpha` and `beta` they define a manufactured solution.
//!
//! Batch file:
//!
//! ```json
//! {
//!   "parts": [["e1", "e2", "e3"], ["e4", "e5"]],
//!   "batches": [[1], [2], [1, 2]],
//!   "probs": ["1/3", "1/3", 0.3333333333333333]
//! }
//! ```
//!
//! Batches list 1-based part indices. `probs` may hold numbers or `"a/b"`
//! fractions and defaults to uniform.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decomposition::{validate_partition, BatchFamily, SubgraphPartition};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub tail: String,
    pub head: String,
    #[serde(default = "unit_length")]
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn unit_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub edges: Vec<EdgeSpec>,
    pub boundary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probability {
    Number(f64),
    Fraction(String),
}

impl Probability {
    pub fn value(&self) -> Result<f64> {
        match self {
            Probability::Number(p) => Ok(*p),
            Probability::Fraction(s) => {
                let bad = || Error::BadProbabilityVector(format!("cannot parse `{s}`"));
                match s.split_once('/') {
                    Some((a, b)) => {
                        let a: f64 = a.trim().parse().map_err(|_| bad())?;
                        let b: f64 = b.trim().parse().map_err(|_| bad())?;
                        if b == 0.0 {
                            return Err(bad());
                        }
                        Ok(a / b)
                    }
                    None => s.trim().parse().map_err(|_| bad()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub parts: Vec<Vec<String>>,
    pub batches: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<Probability>>,
}

/// A parsed graph with optional manufactured coefficients.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: MetricGraph,
    /// Per-edge `(alpha, beta)` when every edge supplies both.
    pub quartic: Option<(Vec<f64>, Vec<f64>)>,
}

fn json_error(context: &str) -> impl FnOnce(serde_json::Error) -> Error + '_ {
    move |source| Error::Json { context: context.to_string(), source }
}

pub fn parse_graph(text: &str) -> Result<LoadedGraph> {
    let spec: GraphSpec = serde_json::from_str(text).map_err(json_error("graph file"))?;
    graph_from_spec(&spec)
}

pub fn graph_from_spec<'a>(spec: &'a GraphSpec) -> Result<LoadedGraph> {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut vertex_names = Vec::new();
    let mut id_of = |name: &'a str| -> usize {
        let next = vertex_names.len();
        *ids.entry(name).or_insert_with(|| {
            vertex_names.push(name.to_string());
            next
        })
    };
    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        let tail = id_of(&e.tail);
        let head = id_of(&e.head);
        edges.push((tail, head, e.length));
    }
    let edge_names: Vec<String> = spec
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| e.name.clone().unwrap_or_else(|| format!("e{}", k + 1)))
        .collect();
    let mut seen = BTreeMap::new();
    for (k, name) in edge_names.iter().enumerate() {
        if let Some(first) = seen.insert(name.as_str(), k) {
            return Err(Error::Config(format!("edge name `{name}` used by edges {} and {}", first + 1, k + 1)));
        }
    }
    let boundary = spec
        .boundary
        .iter()
        .map(|name| ids.get(name.as_str()).copied().ok_or_else(|| Error::BoundaryVertexUnknown(name.clone())))
        .collect::<Result<Vec<_>>>()?;
    let graph = MetricGraph::from_parts(&edges, &boundary, vertex_names, edge_names)?;
    let quartic = spec
        .edges
        .iter()
        .map(|e| e.alpha.zip(e.beta))
        .collect::<Option<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip());
    Ok(LoadedGraph { graph, quartic })
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

/// A validated partition with its batch family.
#[derive(Debug, Clone)]
pub struct LoadedBatches {
    pub partition: SubgraphPartition,
    pub family: BatchFamily,
}

pub fn parse_batches(graph: &MetricGraph, text: &str) -> Result<LoadedBatches> {
    let spec: BatchSpec = serde_json::from_str(text).map_err(json_error("batch file"))?;
    batches_from_spec(graph, &spec)
}

pub fn batches_from_spec(graph: &MetricGraph, spec: &BatchSpec) -> Result<LoadedBatches> {
    let parts = spec
        .parts
        .iter()
        .map(|p| {
            p.iter()
                .map(|name| graph.edge_by_name(name).ok_or_else(|| Error::UnknownEdge(name.clone())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let partition = validate_partition(graph, parts)?;
    let batches = spec
        .batches
        .iter()
        .enumerate()
        .map(|(j, b)| {
            b.iter()
                .map(|&i| {
                    i.checked_sub(1).ok_or_else(|| {
                        Error::InvalidBatch(format!("batch {} uses part index 0; indices are 1-based", j + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let family = match &spec.probs {
        None => BatchFamily::uniform(&partition, batches)?,
        Some(probs) => {
            if probs.len() != batches.len() {
                return Err(Error::BadProbabilityVector(format!(
                    "{} probabilities for {} batches",
                    probs.len(),
                    batches.len()
                )));
            }
            let values = probs.iter().map(Probability::value).collect::<Result<Vec<_>>>()?;
            BatchFamily::new(&partition, batches, values)?
        }
    };
    Ok(LoadedBatches { partition, family })
}

pub fn load_batches(graph: &MetricGraph, path: &Path) -> Result<LoadedBatches> {
    parse_batches(graph, &std::fs::read_to_string(path)?)
}

/// The demo graph in file form, with its quartic table.
pub fn demo_graph_spec() -> GraphSpec {
    let ends = [(1, 3), (2, 3), (3, 4), (4, 5), (5, 7), (4, 6), (6, 7), (7, 8), (8, 9), (8, 10)];
    let edges = ends
        .iter()
        .enumerate()
        .map(|(k, &(t, h))| EdgeSpec {
            name: Some(format!("e{}", k + 1)),
            tail: format!("v{t}"),
            head: format!("v{h}"),
            length: 1.0,
            alpha: Some(crate::manufactured::DEMO_ALPHA[k]),
            beta: Some(crate::manufactured::DEMO_BETA[k]),
        })
        .collect();
    GraphSpec { edges, boundary: ["v1", "v2", "v9", "v10"].iter().map(|s| s.to_string()).collect() }
}

/// Batch files for the two demo families (`option1`, `option2`).
pub fn demo_batch_spec(option: u8) -> Result<BatchSpec> {
    let parts = [&["e1", "e2", "e3"][..], &["e4", "e5"], &["e6", "e7"], &["e8", "e9", "e10"]]
        .iter()
        .map(|p| p.iter().map(|s| s.to_string()).collect())
        .collect();
    let (batches, p) = match option {
        1 => (vec![vec![1], vec![2], vec![3], vec![4], vec![1, 2, 3], vec![2, 3, 4]], "1/6"),
        2 => (vec![vec![1], vec![2], vec![3], vec![4], vec![1, 2, 3, 4]], "1/5"),
        other => return Err(Error::Config(format!("unknown demo batch option {other}"))),
    };
    let probs = Some(vec![Probability::Fraction(p.into()); batches.len()]);
    Ok(BatchSpec { parts, batches, probs })
}
