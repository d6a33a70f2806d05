use thiserror::Error;

use crate::certify::EquilibriumPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge} is a self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },

    #[error("edge {edge} references node {node}, but the network has {n} nodes")]
    NodeOutOfRange { edge: usize, node: usize, n: usize },

    #[error("non-inductive line: edge {edge} has omega_g*L = {reactance} <= r = {resistance}")]
    NonInductiveLine {
        edge: usize,
        reactance: f64,
        resistance: f64,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("constant power load undefined at node {node}: |v|^2 = {norm_sq:e} is below the singularity threshold")]
    CplSingularity { node: usize, norm_sq: f64 },

    #[error("invalid parameter {name} at node {node}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        node: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("gain bound denominator is nonpositive at node {node} for z_d = {z_d} (value {denominator})")]
    BoundDenominator {
        node: usize,
        z_d: f64,
        denominator: f64,
    },

    #[error("integrator state sigma_d[{node}] = {value} left [-1, 1]")]
    IntegratorInvariance { node: usize, value: f64 },

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("equilibrium is saturated at nodes {nodes:?} (reference outside the nominal constraint set)")]
    SaturatedEquilibrium {
        nodes: Vec<usize>,
        point: Box<EquilibriumPoint>,
    },

    #[error("eigenvalue computation failed")]
    EigenSolver,

    #[error("state became non-finite at t = {t}")]
    Divergence { t: f64, last_state: Vec<f64> },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
