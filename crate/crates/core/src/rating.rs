//! Line ratings for cases that ship without them.
//!
//! Reference flows come from a dispatch in which every unit produces the
//! same fraction of its `p_max`, enough to cover the load. Each line is
//! rated at `factor` times its reference flow, rounded up to a whole MW,
//! and never below `floor`.

use crate::dcopf::solve_dc_flow;
use crate::error::FlowError;
use crate::grid::{Line, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRule {
    pub factor: f64,
    pub floor: f64,
}

impl RatingRule {
    /// Rule used for the bundled 118-bus case.
    pub const IEEE118: RatingRule = RatingRule { factor: 3.5, floor: 50.0 };
}

/// Injections of the proportional reference dispatch.
pub fn proportional_injections(net: &Network) -> Vec<f64> {
    let capacity: f64 = net.generators().iter().map(|g| g.p_max).sum();
    let share = net.total_load() / capacity;
    let mut inj: Vec<f64> = net.buses().iter().map(|b| -b.load).collect();
    for (g, gen) in net.generators().iter().enumerate() {
        inj[net.generator_bus(g)] += gen.p_max * share;
    }
    inj
}

/// Round up to a whole MW, treating values within 1e-6 of an integer as
/// that integer.
fn whole_mw_up(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-6 {
        v.round()
    } else {
        v.ceil()
    }
}

/// Copy of `net` with every line rated by `rule`.
pub fn rate_lines(net: &Network, rule: RatingRule) -> Result<Network, FlowError> {
    let flow = solve_dc_flow(&net.view(), &proportional_injections(net))?;
    let lines: Vec<Line> = net
        .lines()
        .iter()
        .zip(&flow.flows)
        .map(|(l, f)| Line { capacity: whole_mw_up(rule.factor * f.abs()).max(rule.floor), ..l.clone() })
        .collect();
    Ok(Network::new(
        net.buses().to_vec(),
        lines,
        net.generators().to_vec(),
        Some(net.reference_bus()),
    )
    .expect("rated copy of a valid network is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{bus, gen, line};

    #[test]
    fn rates_by_reference_flow() {
        let net = Network::new(
            vec![bus(1, 0.0), bus(2, 30.0)],
            vec![line(1, 1, 2, 1.0, f64::INFINITY), line(2, 1, 2, 2.0, f64::INFINITY)],
            vec![gen(1, 1, 10.0, 60.0)],
            None,
        )
        .unwrap();
        let rated = rate_lines(&net, RatingRule { factor: 1.5, floor: 16.0 }).unwrap();
        // Reference flows 10 and 20 MW.
        assert_eq!(rated.lines()[0].capacity, 16.0);
        assert_eq!(rated.lines()[1].capacity, 30.0);
    }
}
