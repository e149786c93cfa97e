//! Line-switching heuristics and the exhaustive optimum they are judged
//! against.
//!
//! Three families share one loop: solve, pick a move, accept it only if the
//! DCOPF cost drops by more than the improvement tolerance, repeat.
//!
//! * `Random` tries switchable lines with negative line profit in a random
//!   order and takes the first improving removal.
//! * `LineProfit` tries the same lines in ascending profit order.
//! * `Greedy` trial-solves every admissible move (removals of up to `K`
//!   lines, optionally reconnections) and takes the best one.
//!
//! A move is admissible when the resulting topology stays connected and no
//! load or generator bus drops below two in-service lines. Buses that
//! already had fewer than two lines in the case's own topology are held to
//! that count instead, since radial buses cannot satisfy the rule at all.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcopf::{line_profits, solve_dcopf, DispatchSolution};
use crate::error::{SolveError, SwitchError};
use crate::grid::{LineId, Network, NetworkView, Topology};

pub const DEFAULT_IMPROVEMENT_TOL: f64 = 1e-6;
/// Exhaustive search refuses networks with more lines than this.
pub const ENUMERATION_LIMIT: usize = 24;
/// Line profits within this of zero count as zero.
const PROFIT_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Random,
    LineProfit,
    Greedy,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::LineProfit => "profit",
            Family::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Family::Random),
            "profit" | "line_profit" | "line-profit" => Ok(Family::LineProfit),
            "greedy" => Ok(Family::Greedy),
            other => Err(format!("unknown heuristic family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveSet {
    pub max_removals: usize,
    pub allow_reconnect: bool,
}

impl Default for MoveSet {
    fn default() -> Self {
        MoveSet { max_removals: 1, allow_reconnect: false }
    }
}

/// Structural rule every accepted topology must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchRule {
    /// Connected, and load/generator buses keep two or more lines.
    #[default]
    RelaxedN1,
    /// Connected; no degree requirement. Used by the small paradox
    /// instances, whose traces isolate generator buses down to one line.
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub family: Family,
    pub move_set: MoveSet,
    #[serde(default)]
    pub rule: SwitchRule,
    pub seed: u64,
    pub improvement_tolerance: f64,
}

impl HeuristicConfig {
    pub fn new(family: Family) -> Self {
        HeuristicConfig {
            family,
            move_set: MoveSet::default(),
            rule: SwitchRule::RelaxedN1,
            seed: 0,
            improvement_tolerance: DEFAULT_IMPROVEMENT_TOL,
        }
    }

    pub fn greedy(max_removals: usize, allow_reconnect: bool) -> Self {
        HeuristicConfig {
            move_set: MoveSet { max_removals, allow_reconnect },
            ..Self::new(Family::Greedy)
        }
    }

    pub fn random(seed: u64) -> Self {
        HeuristicConfig { seed, ..Self::new(Family::Random) }
    }

    pub fn with_rule(self, rule: SwitchRule) -> Self {
        HeuristicConfig { rule, ..self }
    }

    fn validate(&self) -> Result<(), SwitchError> {
        if self.move_set.max_removals == 0 {
            return Err(SwitchError::Config("max_removals must be at least 1".into()));
        }
        if self.family != Family::Greedy
            && (self.move_set.max_removals != 1 || self.move_set.allow_reconnect)
        {
            return Err(SwitchError::Config(format!(
                "the {} heuristic only removes single lines",
                self.family.name()
            )));
        }
        if !(self.improvement_tolerance >= 0.0) {
            return Err(SwitchError::Config("improvement tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Remove,
    Reconnect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchAction {
    pub kind: ActionKind,
    pub lines: Vec<LineId>,
    pub cost_before: f64,
    pub cost_after: f64,
    pub solves_so_far: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicTrace {
    pub initial_cost: f64,
    pub actions: Vec<SwitchAction>,
    pub final_topology: Topology,
    pub final_cost: f64,
    pub final_solution: DispatchSolution,
    pub dcopf_solve_count: usize,
}

impl HeuristicTrace {
    /// Lines out of service at the end that were in service in the case.
    pub fn lines_disconnected(&self, net: &Network) -> usize {
        net.lines()
            .iter()
            .filter(|l| {
                l.status == crate::grid::LineStatus::InService
                    && self.final_topology.is_in(l.id) == Some(false)
            })
            .count()
    }
}

/// Structural admissibility of topologies, relative to the case's own
/// line statuses.
#[derive(Debug, Clone)]
pub struct Admissibility {
    min_degree: Vec<usize>,
    rule: SwitchRule,
}

impl Admissibility {
    pub fn new(net: &Network, rule: SwitchRule) -> Self {
        let base = net.view().degrees();
        let protected = net.protected_buses();
        let min_degree = base
            .iter()
            .zip(&protected)
            .map(|(&d, &p)| if p && rule == SwitchRule::RelaxedN1 { d.min(2) } else { 0 })
            .collect();
        Admissibility { min_degree, rule }
    }

    pub fn rule(&self) -> SwitchRule {
        self.rule
    }

    pub fn admits(&self, view: &NetworkView<'_>) -> bool {
        view.degrees()
            .iter()
            .zip(&self.min_degree)
            .all(|(d, m)| d >= m)
            && view.is_connected()
    }
}

/// In-service lines whose individual removal keeps the network connected
/// and every load or generator bus at two or more lines. Ordered by id.
pub fn switchable_set(view: &NetworkView<'_>) -> Vec<LineId> {
    switchable_set_with(view, SwitchRule::RelaxedN1)
}

pub fn switchable_set_with(view: &NetworkView<'_>, rule: SwitchRule) -> Vec<LineId> {
    let net = view.network();
    switchable_indices(view, rule)
        .into_iter()
        .map(|l| net.lines()[l].id)
        .collect()
}

fn switchable_indices(view: &NetworkView<'_>, rule: SwitchRule) -> Vec<usize> {
    let strict = rule == SwitchRule::RelaxedN1;
    let net = view.network();
    let bridges = view.bridges();
    let deg = view.degrees();
    let protected = net.protected_buses();
    let mut out: Vec<usize> = view
        .in_service_lines()
        .filter(|l| bridges.binary_search(l).is_err())
        .filter(|&l| {
            let (a, b) = net.line_ends(l);
            !strict || ((!protected[a] || deg[a] > 2) && (!protected[b] || deg[b] > 2))
        })
        .collect();
    out.sort_by_key(|&l| net.lines()[l].id);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Move {
    kind: ActionKind,
    /// Line indices, sorted by line id.
    lines: Vec<usize>,
}

fn apply_move(mask: &[bool], mv: &Move) -> Vec<bool> {
    let mut next = mask.to_vec();
    for &l in &mv.lines {
        next[l] = mv.kind == ActionKind::Reconnect;
    }
    next
}

fn combinations(items: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), out);
}

/// Candidate greedy moves in tie-break order: fewer lines first, then
/// lexicographic by line id, removals before reconnections.
fn greedy_moves(view: &NetworkView<'_>, rules: &Admissibility, moves: MoveSet) -> Vec<Move> {
    let net = view.network();
    let singles = switchable_indices(view, rules.rule());
    let mut out = Vec::new();
    for k in 1..=moves.max_removals {
        let mut combos = Vec::new();
        combinations(&singles, k, &mut combos);
        for lines in combos {
            let mv = Move { kind: ActionKind::Remove, lines };
            if k == 1 || rules.admits(&view.with_mask(apply_move(view.mask(), &mv))) {
                out.push(mv);
            }
        }
        if k == 1 && moves.allow_reconnect {
            let mut outs: Vec<usize> = (0..net.lines().len()).filter(|&l| !view.is_in_service(l)).collect();
            outs.sort_by_key(|&l| net.lines()[l].id);
            out.extend(outs.into_iter().map(|l| Move { kind: ActionKind::Reconnect, lines: vec![l] }));
        }
    }
    let key = |m: &Move| -> (usize, Vec<LineId>, ActionKind) {
        (m.lines.len(), m.lines.iter().map(|&l| net.lines()[l].id).collect(), m.kind)
    };
    out.sort_by_key(key);
    out
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

struct Runner<'a> {
    net: &'a Network,
    cfg: HeuristicConfig,
    rules: Admissibility,
    mask: Vec<bool>,
    current: DispatchSolution,
    initial_cost: f64,
    actions: Vec<SwitchAction>,
    solves: usize,
}

impl<'a> Runner<'a> {
    fn solve(&mut self, mask: Vec<bool>) -> Result<DispatchSolution, SolveError> {
        self.solves += 1;
        solve_dcopf(&NetworkView::from_mask(self.net, mask))
    }

    fn improves(&self, sol: &DispatchSolution) -> bool {
        sol.feasible && self.current.total_cost - sol.total_cost > self.cfg.improvement_tolerance
    }

    fn accept(&mut self, mv: Move, sol: DispatchSolution) {
        self.mask = apply_move(&self.mask, &mv);
        self.actions.push(SwitchAction {
            kind: mv.kind,
            lines: mv.lines.iter().map(|&l| self.net.lines()[l].id).collect(),
            cost_before: self.current.total_cost,
            cost_after: sol.total_cost,
            solves_so_far: self.solves,
        });
        self.current = sol;
    }

    /// One iteration; returns false when no move improves.
    fn step(&mut self, rng: &mut ChaCha8Rng) -> Result<bool, SolveError> {
        let view = NetworkView::from_mask(self.net, self.mask.clone());
        match self.cfg.family {
            Family::Greedy => {
                let moves = greedy_moves(&view, &self.rules, self.cfg.move_set);
                let results: Vec<Result<DispatchSolution, SolveError>> = moves
                    .par_iter()
                    .map(|mv| solve_dcopf(&view.with_mask(apply_move(view.mask(), mv))))
                    .collect();
                self.solves += moves.len();
                let mut best: Option<(usize, DispatchSolution)> = None;
                for (i, r) in results.into_iter().enumerate() {
                    let sol = r?;
                    if !sol.feasible {
                        continue;
                    }
                    let better = match &best {
                        None => true,
                        Some((_, b)) => {
                            sol.total_cost < b.total_cost && !ties(sol.total_cost, b.total_cost)
                        }
                    };
                    if better {
                        best = Some((i, sol));
                    }
                }
                match best {
                    Some((i, sol)) if self.improves(&sol) => {
                        self.accept(moves[i].clone(), sol);
                        Ok(true)
                    }
                    _ => Ok(false),
                }
            }
            Family::LineProfit | Family::Random => {
                let profits = line_profits(&view, &self.current);
                let mut cands: Vec<usize> = switchable_indices(&view, self.cfg.rule)
                    .into_iter()
                    .filter(|&l| profits[l] < -PROFIT_ZERO)
                    .collect();
                if self.cfg.family == Family::LineProfit {
                    // Stable sort keeps id order among equal profits.
                    cands.sort_by(|&a, &b| profits[a].total_cmp(&profits[b]));
                } else {
                    cands.shuffle(rng);
                }
                for l in cands {
                    let mv = Move { kind: ActionKind::Remove, lines: vec![l] };
                    let sol = self.solve(apply_move(&self.mask, &mv))?;
                    if self.improves(&sol) {
                        self.accept(mv, sol);
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

/// Run one heuristic from the case's own topology to a local optimum.
pub fn run_heuristic(net: &Network, cfg: &HeuristicConfig) -> Result<HeuristicTrace, SwitchError> {
    cfg.validate()?;
    let mask = net.initial_mask();
    let mut runner = Runner {
        net,
        cfg: *cfg,
        rules: Admissibility::new(net, cfg.rule),
        mask: mask.clone(),
        current: DispatchSolution {
            feasible: false,
            angles: vec![],
            flows: vec![],
            gen_output: vec![],
            prices: vec![],
            capacity_prices: vec![],
            total_cost: f64::INFINITY,
        },
        initial_cost: f64::INFINITY,
        actions: Vec::new(),
        solves: 0,
    };
    let initial = runner.solve(mask)?;
    if !initial.feasible {
        return Err(SwitchError::InitialInfeasible);
    }
    runner.initial_cost = initial.total_cost;
    runner.current = initial;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while runner.step(&mut rng)? {}
    Ok(HeuristicTrace {
        initial_cost: runner.initial_cost,
        final_topology: Topology::from_mask(net, &runner.mask),
        final_cost: runner.current.total_cost,
        final_solution: runner.current,
        actions: runner.actions,
        dcopf_solve_count: runner.solves,
    })
}

/// Exact optimum over every admissible topology.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub topology: Topology,
    pub cost: f64,
    pub topologies_evaluated: usize,
}

/// Enumerate every topology (every on/off pattern of every line) and keep
/// the cheapest admissible feasible one. Ties go to fewer lines out, then
/// the lexicographically smallest list of out-of-service ids.
pub fn brute_force_optimum(net: &Network) -> Result<BruteForceResult, SwitchError> {
    brute_force_optimum_with(net, SwitchRule::RelaxedN1)
}

pub fn brute_force_optimum_with(net: &Network, rule: SwitchRule) -> Result<BruteForceResult, SwitchError> {
    let nl = net.lines().len();
    if nl > ENUMERATION_LIMIT {
        return Err(SwitchError::TooManyLines { lines: nl, limit: ENUMERATION_LIMIT });
    }
    let rules = Admissibility::new(net, rule);
    let ids: Vec<LineId> = net.lines().iter().map(|l| l.id).collect();
    let results: Vec<Option<(f64, Vec<LineId>, u64)>> = (0..1u64 << nl)
        .into_par_iter()
        .map(|bits| {
            let mask: Vec<bool> = (0..nl).map(|l| bits & (1 << l) == 0).collect();
            let view = NetworkView::from_mask(net, mask);
            if !rules.admits(&view) {
                return Ok(None);
            }
            let sol = solve_dcopf(&view)?;
            if !sol.feasible {
                return Ok(None);
            }
            let mut out: Vec<LineId> = (0..nl).filter(|&l| bits & (1 << l) != 0).map(|l| ids[l]).collect();
            out.sort();
            Ok(Some((sol.total_cost, out, bits)))
        })
        .collect::<Result<_, SolveError>>()?;
    let evaluated = results.iter().filter(|r| r.is_some()).count();
    let best = results
        .into_iter()
        .flatten()
        .reduce(|a, b| {
            if ties(a.0, b.0) {
                if (a.1.len(), &a.1) <= (b.1.len(), &b.1) { a } else { b }
            } else if a.0 < b.0 {
                a
            } else {
                b
            }
        })
        .ok_or(SwitchError::InitialInfeasible)?;
    let mask: Vec<bool> = (0..nl).map(|l| best.2 & (1 << l) == 0).collect();
    Ok(BruteForceResult {
        topology: Topology::from_mask(net, &mask),
        cost: best.0,
        topologies_evaluated: evaluated,
    })
}

/// Cheapest admissible removal of exactly `k` lines from the case's own
/// topology; ties broken lexicographically by line id. `None` when no
/// admissible feasible removal of that size exists.
pub fn best_removal(
    net: &Network,
    k: usize,
    rule: SwitchRule,
) -> Result<Option<(Vec<LineId>, DispatchSolution)>, SwitchError> {
    let view = net.view();
    let rules = Admissibility::new(net, rule);
    let moves: Vec<Move> = greedy_moves(&view, &rules, MoveSet { max_removals: k, allow_reconnect: false })
        .into_iter()
        .filter(|m| m.lines.len() == k)
        .collect();
    let mut best: Option<(usize, DispatchSolution)> = None;
    for (i, mv) in moves.iter().enumerate() {
        let sol = solve_dcopf(&view.with_mask(apply_move(view.mask(), mv)))?;
        if !sol.feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => sol.total_cost < b.total_cost && !ties(sol.total_cost, b.total_cost),
        };
        if better {
            best = Some((i, sol));
        }
    }
    Ok(best.map(|(i, sol)| {
        (moves[i].lines.iter().map(|&l| net.lines()[l].id).collect(), sol)
    }))
}
