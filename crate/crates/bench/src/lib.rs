//! Fixtures shared by the criterion benchmarks under `benches/`.

use std::path::PathBuf;

use toposwitch_core::paradox::ParadoxCertificate;
use toposwitch_core::{load_case, Network};

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn ieee118() -> Network {
    load_case(data_path("ieee118.json")).expect("bundled 118-bus case")
}

/// Five-line case from the bundled non-commutativity certificate.
pub fn small_case() -> Network {
    let text = std::fs::read_to_string(data_path("paradox/non_commutativity.json")).expect("bundled certificate");
    ParadoxCertificate::from_json(&text).expect("valid certificate").instance
}
