//! DC power flow and DC optimal power flow.
//!
//! The OPF is a linear program over generator outputs. Nodal balance is
//! enforced per island, and line limits enter lazily as PTDF rows: solve,
//! look for overloaded lines, add their rows, repeat. Because the rows
//! added are exact (not linearized approximations) the final solution is
//! optimal for the full problem, and nodal prices follow from the duals as
//! `price_b = lambda_island + sum_l y_l * ptdf_{l,b}`.

use crate::error::{FlowError, SolveError};
use crate::grid::NetworkView;
use crate::laplacian::LaplacianSystem;
use crate::lp::{LinearProgram, LpOutcome};

/// A line is treated as overloaded above `capacity + LIMIT_TOL`.
pub const LIMIT_TOL: f64 = 1e-9;
const BALANCE_TOL: f64 = 1e-6;
/// Line-limit rows added per lazy round, most overloaded first.
const ROWS_PER_ROUND: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DcFlow {
    /// Radians per bus index; island references at zero.
    pub angles: Vec<f64>,
    /// MW per line index, positive from `from` to `to`; zero when out of service.
    pub flows: Vec<f64>,
}

/// Result of a DCOPF solve. Vectors are aligned with the network's bus,
/// line and generator order. An infeasible solve carries empty vectors
/// and an infinite cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSolution {
    pub feasible: bool,
    pub angles: Vec<f64>,
    pub flows: Vec<f64>,
    pub gen_output: Vec<f64>,
    /// Nodal prices, $/MWh.
    pub prices: Vec<f64>,
    /// Shadow price of each line's capacity (>= 0), $/MWh.
    pub capacity_prices: Vec<f64>,
    pub total_cost: f64,
}

impl DispatchSolution {
    fn infeasible() -> Self {
        DispatchSolution {
            feasible: false,
            angles: Vec::new(),
            flows: Vec::new(),
            gen_output: Vec::new(),
            prices: Vec::new(),
            capacity_prices: Vec::new(),
            total_cost: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OpfOptions {
    pub enforce_limits: bool,
}

impl Default for OpfOptions {
    fn default() -> Self {
        OpfOptions { enforce_limits: true }
    }
}

fn laplacian(view: &NetworkView<'_>) -> Result<LaplacianSystem, FlowError> {
    let net = view.network();
    let edges: Vec<(usize, usize, f64)> = view
        .in_service_lines()
        .map(|l| {
            let (a, b) = net.line_ends(l);
            (a, b, net.lines()[l].susceptance)
        })
        .collect();
    LaplacianSystem::new(net.buses().len(), &edges, net.reference_index())
}

fn flows_from_angles(view: &NetworkView<'_>, angles: &[f64]) -> Vec<f64> {
    let net = view.network();
    (0..net.lines().len())
        .map(|l| {
            if !view.is_in_service(l) {
                return 0.0;
            }
            let (a, b) = net.line_ends(l);
            net.lines()[l].susceptance * (angles[a] - angles[b])
        })
        .collect()
}

/// Power flow for fixed injections (MW per bus index, positive = injection).
/// Line limits are not enforced.
pub fn solve_dc_flow(view: &NetworkView<'_>, injections: &[f64]) -> Result<DcFlow, FlowError> {
    let net = view.network();
    assert_eq!(injections.len(), net.buses().len());
    let net_sum: f64 = injections.iter().sum();
    let scale: f64 = injections.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if net_sum.abs() > BALANCE_TOL * scale {
        return Err(FlowError::Unbalanced(net_sum));
    }
    let sys = laplacian(view)?;
    if sys.island_count() > 1 {
        return Err(FlowError::Disconnected);
    }
    let angles = sys.potentials(injections);
    let flows = flows_from_angles(view, &angles);
    Ok(DcFlow { angles, flows })
}

pub fn solve_dcopf(view: &NetworkView<'_>) -> Result<DispatchSolution, SolveError> {
    solve_dcopf_with(view, OpfOptions::default())
}

/// DCOPF with line limits removed.
pub fn solve_dcopf_unconstrained(view: &NetworkView<'_>) -> Result<DispatchSolution, SolveError> {
    solve_dcopf_with(view, OpfOptions { enforce_limits: false })
}

pub fn solve_dcopf_with(
    view: &NetworkView<'_>,
    opts: OpfOptions,
) -> Result<DispatchSolution, SolveError> {
    let net = view.network();
    let nb = net.buses().len();
    let sys = laplacian(view).map_err(|e| SolveError::Numerical(e.to_string()))?;
    let loads: Vec<f64> = net.buses().iter().map(|b| b.load).collect();

    let mut lp = LinearProgram::new();
    for g in net.generators() {
        lp.add_var(g.cost, g.p_min, g.p_max);
    }
    let mut island_row = vec![usize::MAX; sys.island_count()];
    for (isl, slot) in island_row.iter_mut().enumerate() {
        let coeffs: Vec<(usize, f64)> = (0..net.generators().len())
            .filter(|&g| sys.island_of(net.generator_bus(g)) == isl)
            .map(|g| (g, 1.0))
            .collect();
        let demand: f64 = sys.island_nodes(isl).iter().map(|&b| loads[b]).sum();
        if coeffs.is_empty() && demand == 0.0 {
            continue;
        }
        *slot = lp.add_row(coeffs, demand, demand);
    }

    // (line index, ptdf row, lp row)
    let mut active: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    let mut is_active = vec![false; net.lines().len()];
    loop {
        let sol = match lp.solve()? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => return Ok(DispatchSolution::infeasible()),
            LpOutcome::Unbounded => {
                return Err(SolveError::Numerical("DCOPF reported unbounded".into()))
            }
        };
        let mut injections: Vec<f64> = loads.iter().map(|d| -d).collect();
        for (g, &p) in sol.x.iter().enumerate() {
            injections[net.generator_bus(g)] += p;
        }
        let angles = sys.potentials(&injections);
        let flows = flows_from_angles(view, &angles);

        let mut overloaded: Vec<(usize, f64)> = if opts.enforce_limits {
            view.in_service_lines()
                .filter(|&l| {
                    !is_active[l] && flows[l].abs() > net.lines()[l].capacity + LIMIT_TOL
                })
                .map(|l| (l, flows[l].abs() / net.lines()[l].capacity))
                .collect()
        } else {
            Vec::new()
        };
        // Worst first; ties by line index keep the row order deterministic.
        overloaded.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        overloaded.truncate(ROWS_PER_ROUND);

        if overloaded.is_empty() {
            let mut prices = vec![0.0; nb];
            for (b, price) in prices.iter_mut().enumerate() {
                let row = island_row[sys.island_of(b)];
                if row != usize::MAX {
                    *price = sol.row_duals[row];
                }
            }
            let mut capacity_prices = vec![0.0; net.lines().len()];
            for (l, ptdf, row) in &active {
                let y = sol.row_duals[*row];
                capacity_prices[*l] = y.abs();
                for (price, p) in prices.iter_mut().zip(ptdf) {
                    *price += y * p;
                }
            }
            return Ok(DispatchSolution {
                feasible: true,
                angles,
                flows,
                gen_output: sol.x,
                prices,
                capacity_prices,
                total_cost: sol.objective,
            });
        }

        for (l, _) in overloaded {
            let (a, b) = net.line_ends(l);
            let line = &net.lines()[l];
            let ptdf: Vec<f64> = sys
                .transfer_row(a, b)
                .into_iter()
                .map(|v| v * line.susceptance)
                .collect();
            let coeffs: Vec<(usize, f64)> = (0..net.generators().len())
                .map(|g| (g, ptdf[net.generator_bus(g)]))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            let shift: f64 = ptdf.iter().zip(&loads).map(|(p, d)| p * d).sum();
            let row = lp.add_row(coeffs, shift - line.capacity, shift + line.capacity);
            is_active[l] = true;
            active.push((l, ptdf, row));
        }
    }
}

/// Value of the Lagrangian dual built from the solution's prices and
/// capacity prices. Equals `total_cost` at an optimum.
pub fn dual_objective(view: &NetworkView<'_>, sol: &DispatchSolution) -> f64 {
    let net = view.network();
    let mut value: f64 = net
        .buses()
        .iter()
        .zip(&sol.prices)
        .map(|(b, p)| b.load * p)
        .sum();
    for l in view.in_service_lines() {
        if sol.capacity_prices[l] > 0.0 {
            value -= sol.capacity_prices[l] * net.lines()[l].capacity;
        }
    }
    for (g, gen) in net.generators().iter().enumerate() {
        let reduced = gen.cost - sol.prices[net.generator_bus(g)];
        value += if reduced >= 0.0 { reduced * gen.p_min } else { reduced * gen.p_max };
    }
    value
}

/// Line profit `f_l * (price_to - price_from)` for every in-service line,
/// indexed by line; out-of-service entries are zero. For flow running
/// against the line's orientation this is the same oriented quantity.
pub fn line_profits(view: &NetworkView<'_>, sol: &DispatchSolution) -> Vec<f64> {
    assert!(sol.feasible, "line profits need a feasible dispatch");
    let net = view.network();
    (0..net.lines().len())
        .map(|l| {
            if !view.is_in_service(l) {
                return 0.0;
            }
            let (a, b) = net.line_ends(l);
            sol.flows[l] * (sol.prices[b] - sol.prices[a])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::{bus, gen, line};
    use crate::grid::{Generator, GenId, BusId, Network};

    fn two_bus(cap: f64, local_gen: bool) -> Network {
        let mut gens = vec![gen(1, 1, 10.0, 100.0)];
        if local_gen {
            gens.push(gen(2, 2, 80.0, 100.0));
        }
        Network::new(vec![bus(1, 0.0), bus(2, 2.0)], vec![line(1, 1, 2, 1.0, cap)], gens, None)
            .unwrap()
    }

    #[test]
    fn single_line_flow() {
        let net = two_bus(10.0, false);
        let f = solve_dc_flow(&net.view(), &[1.0, -1.0]).unwrap();
        assert!((f.flows[0] - 1.0).abs() < 1e-12);
        assert_eq!(f.angles[0], 0.0);
        assert!((f.angles[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_split() {
        // Hand Laplacian solve: A-C carries 2/3, A-B-C carries 1/3.
        let net = Network::new(
            vec![bus(1, 0.0), bus(2, 0.0), bus(3, 0.0)],
            vec![line(1, 1, 2, 1.0, 9.0), line(2, 2, 3, 1.0, 9.0), line(3, 1, 3, 1.0, 9.0)],
            vec![gen(1, 1, 1.0, 1.0)],
            None,
        )
        .unwrap();
        let f = solve_dc_flow(&net.view(), &[1.0, 0.0, -1.0]).unwrap();
        assert!((f.flows[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.flows[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((f.flows[1] - 1.0 / 3.0).abs() < 1e-12);
        let zero = solve_dc_flow(&net.view(), &[0.0; 3]).unwrap();
        assert!(zero.flows.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dc_flow_errors() {
        let net = two_bus(10.0, false);
        assert!(matches!(solve_dc_flow(&net.view(), &[1.0, 0.0]), Err(FlowError::Unbalanced(_))));
        let view = net.view().with_mask(vec![false]);
        assert_eq!(solve_dc_flow(&view, &[0.0, 0.0]), Err(FlowError::Disconnected));
    }

    #[test]
    fn capacity_cut_is_infeasible() {
        let net = two_bus(1.0, false);
        let sol = solve_dcopf(&net.view()).unwrap();
        assert!(!sol.feasible);
        assert!(sol.total_cost.is_infinite());
    }

    #[test]
    fn congested_two_bus_prices_and_profit() {
        // Hand LP: cheap gen limited to 1 MW by the line, expensive local gen
        // covers the rest. Prices: 10 at the cheap bus, 80 at the load bus.
        let net = two_bus(1.0, true);
        let view = net.view();
        let sol = solve_dcopf(&view).unwrap();
        assert!(sol.feasible);
        assert!((sol.gen_output[0] - 1.0).abs() < 1e-9);
        assert!((sol.total_cost - 90.0).abs() < 1e-9);
        assert!((sol.prices[0] - 10.0).abs() < 1e-9);
        assert!((sol.prices[1] - 80.0).abs() < 1e-9);
        assert!((sol.capacity_prices[0] - 70.0).abs() < 1e-9);
        assert!((line_profits(&view, &sol)[0] - 70.0).abs() < 1e-9);
        assert!((dual_objective(&view, &sol) - sol.total_cost).abs() < 1e-9);
    }

    #[test]
    fn uncongested_prices_coincide_and_profits_vanish() {
        let net = two_bus(10.0, true);
        let view = net.view();
        let sol = solve_dcopf(&view).unwrap();
        assert!((sol.total_cost - 20.0).abs() < 1e-9);
        assert!(sol.prices.iter().all(|p| (p - 10.0).abs() < 1e-9));
        assert!(line_profits(&view, &sol).iter().all(|p| p.abs() < 1e-9));
    }

    #[test]
    fn zero_flow_line_has_zero_profit() {
        // Line 2 joins two buses with no net injection; it never carries flow.
        let net = Network::new(
            vec![bus(1, 0.0), bus(2, 5.0), bus(3, 0.0)],
            vec![line(1, 1, 2, 1.0, 3.0), line(2, 2, 3, 1.0, 3.0)],
            vec![gen(1, 1, 10.0, 100.0), gen(2, 2, 50.0, 100.0)],
            None,
        )
        .unwrap();
        let view = net.view();
        let sol = solve_dcopf(&view).unwrap();
        assert!(sol.flows[1].abs() < 1e-12);
        assert_eq!(line_profits(&view, &sol)[1], 0.0);
    }

    #[test]
    fn islands_balance_separately() {
        let net = Network::new(
            vec![bus(1, 0.0), bus(2, 3.0), bus(3, 0.0), bus(4, 2.0)],
            vec![line(1, 1, 2, 1.0, 10.0), line(2, 3, 4, 1.0, 10.0)],
            vec![gen(1, 1, 10.0, 100.0), Generator { id: GenId(2), bus: BusId(3), cost: 30.0, p_min: 0.0, p_max: 100.0 }],
            None,
        )
        .unwrap();
        let sol = solve_dcopf(&net.view()).unwrap();
        assert!(sol.feasible);
        assert!((sol.total_cost - (30.0 + 60.0)).abs() < 1e-9);
        assert!((sol.prices[3] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn prices_do_not_depend_on_reference() {
        let mk = |r: u32| {
            Network::new(
                vec![bus(1, 0.0), bus(2, 0.0), bus(3, 15.0)],
                vec![line(1, 1, 2, 1.0, 4.0), line(2, 2, 3, 1.0, 10.0), line(3, 1, 3, 1.0, 10.0)],
                vec![gen(1, 1, 10.0, 100.0), gen(2, 3, 80.0, 100.0)],
                Some(BusId(r)),
            )
            .unwrap()
        };
        let base = solve_dcopf(&mk(1).view()).unwrap();
        for r in [2, 3] {
            let other = solve_dcopf(&mk(r).view()).unwrap();
            assert!((other.total_cost - base.total_cost).abs() < 1e-9);
            for (a, b) in other.prices.iter().zip(&base.prices) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
