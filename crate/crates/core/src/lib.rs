//! Topology control for DC power-grid models.

pub mod circuit;
pub mod dcopf;
pub mod error;
pub mod grid;
pub mod harness;
pub mod laplacian;
pub mod lp;
pub mod matpower;
pub mod paradox;
pub mod rating;
pub mod reduction;
pub mod switching;

pub use dcopf::{line_profits, solve_dc_flow, solve_dcopf, DcFlow, DispatchSolution};
pub use error::{FlowError, GridError, HarnessError, SolveError, SwitchError};
pub use grid::{
    apply_topology, check_relaxed_n1, emit_case, parse_case, Bus, BusId, GenId, Generator, Line,
    LineId, LineStatus, Network, NetworkView, Topology,
};

/// Read a case file: `.m` files as legacy tables, anything else as the
/// native JSON document.
pub fn load_case(path: impl AsRef<std::path::Path>) -> Result<Network, GridError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| GridError::Io { path: path.to_path_buf(), source })?;
    if path.extension().is_some_and(|e| e == "m") {
        matpower::import_legacy_case(&text)
    } else {
        parse_case(&text)
    }
}
