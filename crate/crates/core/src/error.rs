use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph is disconnected: vertex {0} is not reachable from vertex 0")]
    DisconnectedGraph(usize),
    #[error("edge {edge} is a self-loop at vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} has invalid length {length}")]
    InvalidLength { edge: usize, length: f64 },
    #[error("boundary vertex {0} does not belong to any edge")]
    BoundaryVertexUnknown(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("edge {edge} belongs to parts {first} and {second}")]
    OverlappingParts { edge: usize, first: usize, second: usize },
    #[error("edge {0} is not covered by any part")]
    UncoveredEdge(usize),
    #[error("vertex {vertex} is interior to part {part} but not all of its edges belong to that part")]
    InteriorVertexMissingEdge { vertex: usize, part: usize },
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("batch index {index} out of range (family has {len} batches)")]
    BadBatchIndex { index: usize, len: usize },
    #[error("part {0} is never selected by any batch")]
    ZeroNormalizer(usize),
    #[error("invalid probability vector: {0}")]
    BadProbabilityVector(String),

    #[error("coefficient a is not elliptic on edge {edge}: a({x}) = {value}")]
    NonellipticCoefficient { edge: usize, x: f64, value: f64 },
    #[error("missing Dirichlet value for vertex {0}")]
    MissingBoundaryValue(usize),
    #[error("singular system: zero pivot at row {0}")]
    SingularSystem(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),
    #[error("time {0} is not on the stored grid")]
    GridMismatch(f64),
    #[error("manufactured constraints are inconsistent (residual {0:e})")]
    InconsistentConstraints(f64),
    #[error("degenerate slope fit: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures, as opposed to invalid input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem(_)
                | Error::NonellipticCoefficient { .. }
                | Error::InconsistentConstraints(_)
                | Error::DegenerateFit(_)
        )
    }
}
