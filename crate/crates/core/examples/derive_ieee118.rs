//! Rebuild `data/ieee118.json` from `data/case118.m`:
//! linear costs (quadratic terms dropped) and ratings from
//! `RatingRule::IEEE118`.
//!
//!     cargo run -p toposwitch-core --example derive_ieee118 -- data/case118.m data/ieee118.json

use toposwitch_core::matpower::{import_legacy_case_with, ImportOptions};
use toposwitch_core::rating::{rate_lines, RatingRule};
use toposwitch_core::emit_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let [_, input, output] = args.as_slice() else {
        return Err("usage: derive_ieee118 <case118.m> <out.json>".into());
    };
    let text = std::fs::read_to_string(input)?;
    let net = import_legacy_case_with(&text, ImportOptions { drop_nonlinear_costs: true })?;
    let rated = rate_lines(&net, RatingRule::IEEE118)?;
    std::fs::write(output, emit_case(&rated))?;
    Ok(())
}
