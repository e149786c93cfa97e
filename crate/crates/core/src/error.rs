use thiserror::Error;

use crate::grid::{BusId, GenId, LineId};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("malformed case document: {0}")]
    Schema(String),
    #[error("{record} references bus {bus}, which does not exist")]
    DanglingBus { record: String, bus: BusId },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("line {0}: susceptance must be positive and finite")]
    BadSusceptance(LineId),
    #[error("line {0}: capacity must be positive")]
    BadCapacity(LineId),
    #[error("line {0}: both ends on the same bus")]
    SelfLoop(LineId),
    #[error("bus {0}: load must be finite and non-negative")]
    BadLoad(BusId),
    #[error("generator {0}: need 0 <= pmin <= pmax and cost >= 0")]
    BadGenerator(GenId),
    #[error("network has no generators")]
    NoGenerators,
    #[error("topology does not cover line {0}")]
    TopologyMissing(LineId),
    #[error("topology names line {0}, which is not in the network")]
    TopologyUnknown(LineId),
    #[error("legacy case: missing table `{0}`")]
    MissingTable(&'static str),
    #[error("legacy case: generator {gen} has nonlinear cost (quadratic coefficient {coeff})")]
    NonlinearCost { gen: GenId, coeff: f64 },
    #[error("legacy case: {0}")]
    Legacy(String),
    #[error("reading {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("in-service network is not connected")]
    Disconnected,
    #[error("injections do not balance (net {0:.6} MW)")]
    Unbalanced(f64),
    #[error("reduced Laplacian is singular")]
    Singular,
    #[error("removing edge {0} would disconnect the circuit")]
    BridgeEdge(u32),
    #[error("unknown edge {0}")]
    UnknownEdge(u32),
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("LP solver failed numerically: {0}")]
    Numerical(String),
}

#[derive(Debug, Error)]
pub enum SwitchError {
    #[error("initial DCOPF is infeasible")]
    InitialInfeasible,
    #[error("{0}")]
    Config(String),
    #[error("no certificate: {0}")]
    NoCertificate(String),
    #[error("enumeration bound exceeded: {lines} lines (limit {limit})")]
    TooManyLines { lines: usize, limit: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("base case is infeasible")]
    InfeasibleBase,
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
