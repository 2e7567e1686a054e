use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node {node} out of range for graph with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("self-loop at node {node} is not allowed")]
    SelfLoop { node: usize },

    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },

    #[error("edge ({u}, {v}) has invalid weight {w}; weights must be finite and > 0")]
    InvalidWeight { u: usize, v: usize, w: f64 },

    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("graph is disconnected ({components} components); node {witness} is separated from node 0")]
    Disconnected { components: usize, witness: usize },

    #[error("node {node} has no outgoing edges, so no row-stochastic matrix exists")]
    IsolatedNode { node: usize },

    #[error("{op} requires an undirected graph")]
    DirectedUnsupported { op: &'static str },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("opinion entry {value} at index {index} lies outside [0, 1]")]
    OpinionOutOfRange { index: usize, value: f64 },

    #[error("opinion vector has Euclidean norm {norm}, expected 1")]
    OpinionNotNormalized { norm: f64 },

    #[error("transition matrix row {row} sums to {sum}, expected 1")]
    RowSumInvalid { row: usize, sum: f64 },

    #[error("transition matrix entry ({row}, {col}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("chain is reducible: {stranded} states cannot reach state {witness} and back")]
    ReducibleChain { stranded: usize, witness: usize },

    #[error("group {group} has zero {what}, so the construction is undefined")]
    ZeroGroupMass { group: char, what: &'static str },

    #[error("group {group} is empty ({context})")]
    EmptyGroup { group: char, context: &'static str },

    #[error("metropolis diagonal at node {node} is {value} < 0; use neighbor-count degrees or rescale weights")]
    NegativeDiagonal { node: usize, value: f64 },

    #[error("exact DP table needs {cells} cells (limit {limit}); use the FPTAS mode instead")]
    DpTooLarge { cells: u128, limit: u128 },

    #[error("brute-force partition search only supports n <= {limit}, got n = {n}")]
    BruteForceTooLarge { n: usize, limit: usize },

    #[error("{what} did not converge within {iters} iterations")]
    NotConverged { what: &'static str, iters: usize },

    #[error("contraction step {index} references node {node}, which was already merged away")]
    StaleContraction { index: usize, node: usize },

    #[error("dense routine limited to n <= {limit}, got n = {n}")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("invalid parameter {name}: {msg}")]
    InvalidParameter { name: &'static str, msg: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
