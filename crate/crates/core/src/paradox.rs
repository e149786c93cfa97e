//! Small instances on which the switching heuristics misbehave, with
//! replayable certificates and a constrained layout search.
//!
//! Four behaviours are certified:
//!
//! * non-commutativity: the best single removal is not part of the best
//!   pair removal;
//! * non-monotonicity: greedy with reconnection reconnects a line it removed
//!   earlier in the same run;
//! * non-consistency A: greedy removing one line per step beats greedy that
//!   may also reconnect;
//! * non-consistency B: greedy removing one line per step beats greedy that
//!   may remove two.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcopf::{solve_dc_flow, solve_dcopf};
use crate::error::{GridError, SwitchError};
use crate::grid::{
    emit_case, parse_case, Bus, BusId, GenId, Generator, Line, LineId, LineStatus, Network,
    NetworkView,
};
use crate::switching::{
    best_removal, run_heuristic, ActionKind, HeuristicConfig, HeuristicTrace, SwitchRule,
    ENUMERATION_LIMIT,
};

/// Minimum saving for an effect to count.
const EFFECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadoxKind {
    NonCommutativity,
    NonMonotonicity,
    #[serde(rename = "non_consistency_a")]
    NonConsistencyA,
    #[serde(rename = "non_consistency_b")]
    NonConsistencyB,
}

impl ParadoxKind {
    pub const ALL: [ParadoxKind; 4] = [
        ParadoxKind::NonCommutativity,
        ParadoxKind::NonMonotonicity,
        ParadoxKind::NonConsistencyA,
        ParadoxKind::NonConsistencyB,
    ];
}

/// A heuristic run reduced to what a certificate needs to replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: HeuristicConfig,
    pub actions: Vec<(ActionKind, Vec<LineId>)>,
    pub costs: Vec<f64>,
    pub final_cost: f64,
    pub final_dispatch: Vec<f64>,
}

impl RunSummary {
    fn from_trace(config: HeuristicConfig, t: &HeuristicTrace) -> Self {
        let mut costs = vec![t.initial_cost];
        costs.extend(t.actions.iter().map(|a| a.cost_after));
        RunSummary {
            config,
            actions: t.actions.iter().map(|a| (a.kind, a.lines.clone())).collect(),
            costs,
            final_cost: t.final_cost,
            final_dispatch: t.final_solution.gen_output.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    BestSingleVsPair {
        base_cost: f64,
        best_single: Vec<LineId>,
        single_cost: f64,
        best_pair: Vec<LineId>,
        pair_cost: f64,
    },
    Reconnection {
        run: RunSummary,
        reconnected: LineId,
    },
    Comparison {
        simpler: RunSummary,
        richer: RunSummary,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParadoxCertificate {
    pub kind: ParadoxKind,
    pub rule: SwitchRule,
    pub instance: Network,
    pub evidence: Evidence,
    /// True when the instance came from the generic fallback rather than a
    /// layout search against published operating points.
    pub fallback: bool,
}

#[derive(Serialize, Deserialize)]
struct CertificateDocument {
    kind: ParadoxKind,
    rule: SwitchRule,
    fallback: bool,
    evidence: Evidence,
    case: serde_json::Value,
}

impl ParadoxCertificate {
    pub fn to_json(&self) -> String {
        let doc = CertificateDocument {
            kind: self.kind,
            rule: self.rule,
            fallback: self.fallback,
            evidence: self.evidence.clone(),
            case: serde_json::from_str(&emit_case(&self.instance)).expect("case is valid JSON"),
        };
        serde_json::to_string_pretty(&doc).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        let doc: CertificateDocument =
            serde_json::from_str(text).map_err(|e| GridError::Schema(e.to_string()))?;
        Ok(ParadoxCertificate {
            kind: doc.kind,
            rule: doc.rule,
            instance: parse_case(&doc.case.to_string())?,
            evidence: doc.evidence,
            fallback: doc.fallback,
        })
    }

    /// Re-derive the evidence from the stored instance and compare exactly.
    pub fn replay(&self) -> Result<bool, SwitchError> {
        let again = certify(&self.instance, self.kind, self.rule)?;
        Ok(again.is_some_and(|c| c.evidence == self.evidence))
    }
}

fn check_size(net: &Network) -> Result<(), SwitchError> {
    let lines = net.lines().len();
    if lines > ENUMERATION_LIMIT {
        return Err(SwitchError::TooManyLines { lines, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

fn summary(net: &Network, cfg: HeuristicConfig) -> Result<RunSummary, SwitchError> {
    Ok(RunSummary::from_trace(cfg, &run_heuristic(net, &cfg)?))
}

pub fn certify_non_commutativity(
    net: &Network,
    rule: SwitchRule,
) -> Result<Option<ParadoxCertificate>, SwitchError> {
    check_size(net)?;
    let base = solve_dcopf(&net.view())?;
    if !base.feasible {
        return Err(SwitchError::InitialInfeasible);
    }
    let (Some((single, s)), Some((pair, p))) = (best_removal(net, 1, rule)?, best_removal(net, 2, rule)?)
    else {
        return Ok(None);
    };
    let improves = |c: f64| base.total_cost - c > EFFECT_TOL;
    if !improves(s.total_cost) || !improves(p.total_cost) || pair.contains(&single[0]) {
        return Ok(None);
    }
    Ok(Some(ParadoxCertificate {
        kind: ParadoxKind::NonCommutativity,
        rule,
        instance: net.clone(),
        evidence: Evidence::BestSingleVsPair {
            base_cost: base.total_cost,
            best_single: single,
            single_cost: s.total_cost,
            best_pair: pair,
            pair_cost: p.total_cost,
        },
        fallback: false,
    }))
}

pub fn certify_non_monotonicity(
    net: &Network,
    rule: SwitchRule,
) -> Result<Option<ParadoxCertificate>, SwitchError> {
    check_size(net)?;
    let run = summary(net, HeuristicConfig::greedy(1, true).with_rule(rule))?;
    let mut removed = Vec::new();
    let mut reconnected = None;
    for (kind, lines) in &run.actions {
        match kind {
            ActionKind::Remove => removed.extend(lines.iter().copied()),
            ActionKind::Reconnect => {
                if let Some(l) = lines.iter().find(|l| removed.contains(l)) {
                    reconnected = Some(*l);
                    break;
                }
            }
        }
    }
    Ok(reconnected.map(|reconnected| ParadoxCertificate {
        kind: ParadoxKind::NonMonotonicity,
        rule,
        instance: net.clone(),
        evidence: Evidence::Reconnection { run, reconnected },
        fallback: false,
    }))
}

pub fn certify_non_consistency(
    net: &Network,
    kind: ParadoxKind,
    rule: SwitchRule,
) -> Result<Option<ParadoxCertificate>, SwitchError> {
    check_size(net)?;
    let richer_cfg = match kind {
        ParadoxKind::NonConsistencyA => HeuristicConfig::greedy(1, true),
        ParadoxKind::NonConsistencyB => HeuristicConfig::greedy(2, false),
        _ => return Err(SwitchError::Config(format!("{kind:?} is not a non-consistency variant"))),
    };
    let simpler = summary(net, HeuristicConfig::greedy(1, false).with_rule(rule))?;
    let richer = summary(net, richer_cfg.with_rule(rule))?;
    if richer.final_cost - simpler.final_cost <= EFFECT_TOL {
        return Ok(None);
    }
    Ok(Some(ParadoxCertificate {
        kind,
        rule,
        instance: net.clone(),
        evidence: Evidence::Comparison { simpler, richer },
        fallback: false,
    }))
}

pub fn certify(
    net: &Network,
    kind: ParadoxKind,
    rule: SwitchRule,
) -> Result<Option<ParadoxCertificate>, SwitchError> {
    match kind {
        ParadoxKind::NonCommutativity => certify_non_commutativity(net, rule),
        ParadoxKind::NonMonotonicity => certify_non_monotonicity(net, rule),
        k => certify_non_consistency(net, k, rule),
    }
}

// ---------------------------------------------------------------------------
// Layout search

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub cost: f64,
    pub dispatch: f64,
}

impl Tolerance {
    pub const EXACT: Tolerance = Tolerance { cost: 1e-4, dispatch: 1e-6 };
}

/// A required optimal operating point: with the listed labels removed, the
/// DCOPF must reach this cost with this dispatch (generator order).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPoint {
    pub removed: Vec<u32>,
    pub dispatch: Vec<f64>,
    pub cost: f64,
    pub tol: Tolerance,
}

/// A required heuristic run: exact action sequence plus final point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTarget {
    pub config: HeuristicConfig,
    pub actions: Vec<(ActionKind, Vec<u32>)>,
    pub final_cost: f64,
    pub final_dispatch: Vec<f64>,
    pub tol: Tolerance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapacitySpace {
    /// Integer capacities in `min..=max`, narrowed to values that bind at a
    /// target point plus `max` itself.
    Integer { min: u32, max: u32 },
    /// One capacity per labelled line (`INFINITY` for unrated).
    Fixed(Vec<f64>),
}

/// Bus and generator skeleton plus the space of line layouts to search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTemplate {
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    /// Endpoint pairs a line may take, in enumeration order.
    pub pairs: Vec<(BusId, BusId)>,
    pub min_lines: usize,
    pub max_lines: usize,
    /// Per-label susceptance; equal unit susceptances when `None`.
    pub susceptances: Option<Vec<f64>>,
    pub capacities: CapacitySpace,
    /// An extra unlabelled line of large susceptance, id `k + 1`.
    pub strong_line: Option<f64>,
    pub rule: SwitchRule,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTargets {
    pub points: Vec<TargetPoint>,
    pub traces: Vec<TraceTarget>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub network: Network,
    /// Candidate networks whose operating points were solved.
    pub examined: usize,
}

fn mixed_radix(mut i: usize, radix: usize, digits: usize) -> Vec<usize> {
    let mut out = vec![0; digits];
    for d in (0..digits).rev() {
        out[d] = i % radix;
        i /= radix;
    }
    out
}

impl SearchTemplate {
    fn build(&self, layout: &[usize], strong: Option<usize>, caps: &[f64]) -> Result<Network, GridError> {
        let k = layout.len();
        let mut lines: Vec<Line> = layout
            .iter()
            .enumerate()
            .map(|(i, &p)| Line {
                id: LineId(i as u32 + 1),
                from: self.pairs[p].0,
                to: self.pairs[p].1,
                susceptance: self.susceptances.as_ref().map_or(1.0, |s| s[i]),
                capacity: caps[i],
                status: LineStatus::InService,
            })
            .collect();
        if let (Some(b), Some(p)) = (self.strong_line, strong) {
            lines.push(Line {
                id: LineId(k as u32 + 1),
                from: self.pairs[p].0,
                to: self.pairs[p].1,
                susceptance: b,
                capacity: caps[k],
                status: LineStatus::InService,
            });
        }
        Network::new(self.buses.clone(), lines, self.generators.clone(), None)
    }

    /// Capacity candidates per line for one layout, or `None` when some
    /// target point is structurally impossible on it.
    fn candidates(&self, layout: &[usize], strong: Option<usize>, targets: &SearchTargets) -> Option<Vec<Vec<f64>>> {
        let k = layout.len();
        let n = k + usize::from(strong.is_some());
        let (min, max) = match &self.capacities {
            CapacitySpace::Fixed(c) => {
                let mut v: Vec<Vec<f64>> = c[..k].iter().map(|&x| vec![x]).collect();
                if strong.is_some() {
                    v.push(vec![f64::INFINITY]);
                }
                return Some(v);
            }
            CapacitySpace::Integer { min, max } => (*min as f64, *max as f64),
        };
        let probe = self.build(layout, strong, &vec![f64::INFINITY; n]).ok()?;
        let mut lower = vec![min; n];
        let mut binding: Vec<Vec<f64>> = vec![Vec::new(); n];
        for point in &targets.points {
            let mask: Vec<bool> = (0..n).map(|l| !point.removed.contains(&(l as u32 + 1))).collect();
            let view = NetworkView::from_mask(&probe, mask);
            let mut inj: Vec<f64> = probe.buses().iter().map(|b| -b.load).collect();
            for (g, &p) in point.dispatch.iter().enumerate() {
                inj[probe.generator_bus(g)] += p;
            }
            let flow = solve_dc_flow(&view, &inj).ok()?;
            for l in view.in_service_lines() {
                let f = flow.flows[l].abs();
                let v = if (f - f.round()).abs() < 1e-6 { f.round() } else { f.ceil() };
                lower[l] = lower[l].max(v);
                binding[l].push(v);
            }
        }
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            if lower[l] > max {
                return None;
            }
            let mut c: Vec<f64> = binding[l].iter().copied().filter(|&v| v >= lower[l]).collect();
            c.push(lower[l]);
            c.push(max);
            c.sort_by(f64::total_cmp);
            c.dedup();
            out.push(c);
        }
        Some(out)
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Whether `net` reproduces every target.
pub fn matches_targets(net: &Network, targets: &SearchTargets) -> Result<bool, SwitchError> {
    for point in &targets.points {
        let mask: Vec<bool> = net
            .lines()
            .iter()
            .map(|l| !point.removed.contains(&l.id.0))
            .collect();
        let sol = solve_dcopf(&NetworkView::from_mask(net, mask))?;
        if !sol.feasible
            || (sol.total_cost - point.cost).abs() > point.tol.cost
            || !close(&sol.gen_output, &point.dispatch, point.tol.dispatch)
        {
            return Ok(false);
        }
    }
    for trace in &targets.traces {
        let t = match run_heuristic(net, &trace.config) {
            Ok(t) => t,
            Err(SwitchError::InitialInfeasible) => return Ok(false),
            Err(e) => return Err(e),
        };
        let actions: Vec<(ActionKind, Vec<u32>)> = t
            .actions
            .iter()
            .map(|a| (a.kind, a.lines.iter().map(|l| l.0).collect()))
            .collect();
        if actions != trace.actions
            || (t.final_cost - trace.final_cost).abs() > trace.tol.cost
            || !close(&t.final_solution.gen_output, &trace.final_dispatch, trace.tol.dispatch)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First network, in lexicographic order of (line count, strong-line pair,
/// per-line pairs, per-line capacities), that reproduces every target.
pub fn search_instance(template: &SearchTemplate, targets: &SearchTargets) -> Result<Option<SearchOutcome>, SwitchError> {
    let radix = template.pairs.len();
    let strong_choices: Vec<Option<usize>> = if template.strong_line.is_some() {
        (0..radix).map(Some).collect()
    } else {
        vec![None]
    };
    let mut examined = 0;
    for k in template.min_lines..=template.max_lines {
        let layouts = radix.pow(k as u32);
        let jobs: Vec<(Option<usize>, usize)> = strong_choices
            .iter()
            .flat_map(|&s| (0..layouts).map(move |i| (s, i)))
            .collect();
        let results: Vec<Result<(Option<Network>, usize), SwitchError>> = jobs
            .par_iter()
            .map(|&(strong, i)| {
                let layout = mixed_radix(i, radix, k);
                let Some(cands) = template.candidates(&layout, strong, targets) else {
                    return Ok((None, 0));
                };
                let sizes: Vec<usize> = cands.iter().map(Vec::len).collect();
                let total: usize = sizes.iter().product();
                let mut seen = 0;
                for c in 0..total {
                    let mut rem = c;
                    let mut caps = vec![0.0; sizes.len()];
                    for d in (0..sizes.len()).rev() {
                        caps[d] = cands[d][rem % sizes[d]];
                        rem /= sizes[d];
                    }
                    let Ok(net) = template.build(&layout, strong, &caps) else { continue };
                    seen += 1;
                    if matches_targets(&net, targets)? {
                        return Ok((Some(net), seen));
                    }
                }
                Ok((None, seen))
            })
            .collect();
        for r in results {
            let (net, seen) = r?;
            examined += seen;
            if let Some(network) = net {
                return Ok(Some(SearchOutcome { network, examined }));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Random small instances

/// A random small instance on three or four buses: generators at 10, 20
/// and 80 $/MWh on buses 1 to 3, one load, and 3 to 6 lines with
/// susceptances drawn from {1, 2, 5, 10} and integer capacities in
/// 1..=10 MW.
pub fn random_small_instance<R: Rng>(rng: &mut R) -> Network {
    loop {
        let n = rng.gen_range(3..=4u32);
        let load_bus = rng.gen_range(1..=n);
        let load = rng.gen_range(5..=20) as f64;
        let buses = (1..=n)
            .map(|i| Bus { id: BusId(i), load: if i == load_bus { load } else { 0.0 } })
            .collect();
        let gens = [10.0, 20.0, 80.0]
            .iter()
            .enumerate()
            .map(|(i, &cost)| Generator {
                id: GenId(i as u32 + 1),
                bus: BusId(i as u32 + 1),
                cost,
                p_min: 0.0,
                p_max: load,
            })
            .collect();
        let pairs: Vec<(u32, u32)> = (1..=n).flat_map(|a| (a + 1..=n).map(move |b| (a, b))).collect();
        let count = rng.gen_range(3..=6);
        let lines = (0..count)
            .map(|i| {
                let (a, b) = pairs[rng.gen_range(0..pairs.len())];
                Line {
                    id: LineId(i + 1),
                    from: BusId(a),
                    to: BusId(b),
                    susceptance: [1.0, 2.0, 5.0, 10.0][rng.gen_range(0..4)],
                    capacity: rng.gen_range(1..=10) as f64,
                    status: LineStatus::InService,
                }
            })
            .collect();
        let net = Network::new(buses, lines, gens, None).expect("generated case is valid");
        if net.view().is_connected() {
            return net;
        }
    }
}

/// A random three-bus instance on the three-generator skeleton: mid-cost
/// (20 $/MWh) unit at bus 1, cheapest (10 $/MWh) at bus 2, most expensive
/// (80 $/MWh) at bus 3 with 100 MW of load. Six unit-susceptance lines plus
/// one stiffer line (susceptance 2, 3, 5 or 10), capacities in 1..=100 MW.
pub fn random_wide_instance<R: Rng>(rng: &mut R) -> Network {
    let pairs = [(1, 2), (1, 3), (2, 3)];
    loop {
        let lines = (1..=7u32)
            .map(|i| {
                let (a, b) = pairs[rng.gen_range(0..3)];
                Line {
                    id: LineId(i),
                    from: BusId(a),
                    to: BusId(b),
                    susceptance: if i == 7 { [2.0, 3.0, 5.0, 10.0][rng.gen_range(0..4)] } else { 1.0 },
                    capacity: rng.gen_range(1..=100) as f64,
                    status: LineStatus::InService,
                }
            })
            .collect();
        let buses = vec![
            Bus { id: BusId(1), load: 0.0 },
            Bus { id: BusId(2), load: 0.0 },
            Bus { id: BusId(3), load: 100.0 },
        ];
        let gens = [(1, 20.0), (2, 10.0), (3, 80.0)]
            .iter()
            .map(|&(i, cost)| Generator { id: GenId(i), bus: BusId(i), cost, p_min: 0.0, p_max: 100.0 })
            .collect();
        let net = Network::new(buses, lines, gens, None).expect("generated case is valid");
        if net.view().is_connected() {
            return net;
        }
    }
}

/// Which random generator a fallback certificate draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomFamily {
    /// [`random_small_instance`]: at most six lines.
    Small,
    /// [`random_wide_instance`]: seven lines.
    Wide,
}

impl RandomFamily {
    /// The family used for the fallback certificate of `kind`. Inconsistency
    /// A needs the greedy run to make at least four removals and still leave
    /// a spanning tree, which the small family practically never produces.
    pub fn for_kind(kind: ParadoxKind) -> Self {
        match kind {
            ParadoxKind::NonConsistencyA => RandomFamily::Wide,
            _ => RandomFamily::Small,
        }
    }

    pub fn sample<R: Rng>(self, rng: &mut R) -> Network {
        match self {
            RandomFamily::Small => random_small_instance(rng),
            RandomFamily::Wide => random_wide_instance(rng),
        }
    }
}

/// First certified random instance for `kind`, drawing from a ChaCha8
/// stream seeded with `seed`.
pub fn random_certificate(
    kind: ParadoxKind,
    family: RandomFamily,
    rule: SwitchRule,
    seed: u64,
    attempts: usize,
) -> Result<Option<ParadoxCertificate>, SwitchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let net = family.sample(&mut rng);
        if !solve_dcopf(&net.view())?.feasible {
            continue;
        }
        if let Some(mut cert) = certify(&net, kind, rule)? {
            cert.fallback = true;
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

/// Seed of the fallback draw in [`reference_certificate`].
pub const FALLBACK_SEED: u64 = 2;
/// Draws allowed before the fallback gives up.
pub const FALLBACK_ATTEMPTS: usize = 200_000;

/// Certificate for `kind`: the first layout matching the reference operating
/// points if the search finds one, otherwise the first certified draw from
/// the kind's random family (marked as a fallback).
pub fn reference_certificate(kind: ParadoxKind) -> Result<ParadoxCertificate, SwitchError> {
    let (template, targets) = catalog::template(kind);
    if let Some(found) = search_instance(&template, &targets)? {
        return certify(&found.network, kind, template.rule)?.ok_or_else(|| {
            SwitchError::NoCertificate(format!("{kind:?}: searched instance does not certify"))
        });
    }
    random_certificate(kind, RandomFamily::for_kind(kind), template.rule, FALLBACK_SEED, FALLBACK_ATTEMPTS)?
        .ok_or_else(|| SwitchError::NoCertificate(format!("{kind:?}: fallback draws exhausted")))
}


/// Reference templates and operating-point targets, one per paradox kind.
pub mod catalog {
    use super::*;

    /// Susceptance of the stiff tie line in the three-generator templates.
    pub const STRONG_SUSCEPTANCE: f64 = 1000.0;

    fn gen(id: u32, bus: u32, cost: f64, p_max: f64) -> Generator {
        Generator { id: GenId(id), bus: BusId(bus), cost, p_min: 0.0, p_max }
    }

    fn buses(loads: &[f64]) -> Vec<Bus> {
        loads
            .iter()
            .enumerate()
            .map(|(i, &load)| Bus { id: BusId(i as u32 + 1), load })
            .collect()
    }

    fn triangle_pairs() -> Vec<(BusId, BusId)> {
        vec![(BusId(1), BusId(2)), (BusId(1), BusId(3)), (BusId(2), BusId(3))]
    }

    fn removes(ids: &[&[u32]]) -> Vec<(ActionKind, Vec<u32>)> {
        ids.iter().map(|l| (ActionKind::Remove, l.to_vec())).collect()
    }

    fn greedy(k: usize, reconnect: bool) -> HeuristicConfig {
        HeuristicConfig::greedy(k, reconnect).with_rule(SwitchRule::Connected)
    }

    /// Cheap generator (10 $/MWh) at bus 1, expensive (80 $/MWh) at bus 3,
    /// 15 MW of load at bus 3, unit susceptances, capacities 1..=10 MW.
    pub fn non_commutativity() -> (SearchTemplate, SearchTargets) {
        let exact = Tolerance::EXACT;
        let template = SearchTemplate {
            buses: buses(&[0.0, 0.0, 15.0]),
            generators: vec![gen(1, 1, 10.0, 15.0), gen(2, 3, 80.0, 15.0)],
            pairs: triangle_pairs(),
            min_lines: 3,
            max_lines: 6,
            susceptances: None,
            capacities: CapacitySpace::Integer { min: 1, max: 10 },
            strong_line: None,
            rule: SwitchRule::Connected,
        };
        let targets = SearchTargets {
            points: vec![
                TargetPoint { removed: vec![], dispatch: vec![7.0, 8.0], cost: 710.0, tol: exact },
                TargetPoint { removed: vec![1], dispatch: vec![10.0, 5.0], cost: 500.0, tol: exact },
                TargetPoint { removed: vec![3, 4], dispatch: vec![15.0, 0.0], cost: 150.0, tol: exact },
            ],
            traces: vec![
                TraceTarget {
                    config: greedy(1, false),
                    actions: removes(&[&[1]]),
                    final_cost: 500.0,
                    final_dispatch: vec![10.0, 5.0],
                    tol: exact,
                },
                TraceTarget {
                    config: greedy(2, false),
                    actions: removes(&[&[3, 4]]),
                    final_cost: 150.0,
                    final_dispatch: vec![15.0, 0.0],
                    tol: exact,
                },
            ],
        };
        (template, targets)
    }

    /// Mid-cost (20 $/MWh) generator at bus 1, cheapest (10 $/MWh) at bus 2,
    /// most expensive (80 $/MWh) at bus 3 with 100 MW of load; unit
    /// susceptances plus one stiff line, capacities 1..=100 MW.
    fn three_generator_template() -> SearchTemplate {
        SearchTemplate {
            buses: buses(&[0.0, 0.0, 100.0]),
            generators: vec![gen(1, 1, 20.0, 100.0), gen(2, 2, 10.0, 100.0), gen(3, 3, 80.0, 100.0)],
            pairs: triangle_pairs(),
            min_lines: 3,
            max_lines: 6,
            susceptances: None,
            capacities: CapacitySpace::Integer { min: 1, max: 100 },
            strong_line: Some(STRONG_SUSCEPTANCE),
            rule: SwitchRule::Connected,
        }
    }

    pub fn non_monotonicity() -> (SearchTemplate, SearchTargets) {
        let exact = Tolerance::EXACT;
        let mut actions = removes(&[&[1], &[2], &[3]]);
        actions.push((ActionKind::Reconnect, vec![1]));
        let targets = SearchTargets {
            points: vec![
                TargetPoint { removed: vec![], dispatch: vec![0.0, 5.0, 95.0], cost: 7650.0, tol: exact },
                TargetPoint { removed: vec![2, 3], dispatch: vec![0.0, 30.0, 70.0], cost: 5900.0, tol: exact },
            ],
            traces: vec![TraceTarget {
                config: greedy(1, true),
                actions,
                final_cost: 5900.0,
                final_dispatch: vec![0.0, 30.0, 70.0],
                tol: exact,
            }],
        };
        (three_generator_template(), targets)
    }

    pub fn non_consistency_a() -> (SearchTemplate, SearchTargets) {
        let exact = Tolerance::EXACT;
        let mut reconnecting = removes(&[&[1], &[2], &[3]]);
        reconnecting.push((ActionKind::Reconnect, vec![1]));
        let template = SearchTemplate { min_lines: 6, ..three_generator_template() };
        let targets = SearchTargets {
            points: vec![
                TargetPoint { removed: vec![], dispatch: vec![0.0, 6.0, 94.0], cost: 7580.0, tol: exact },
                TargetPoint {
                    removed: vec![1, 2, 3, 5, 6],
                    dispatch: vec![10.0, 35.0, 55.0],
                    cost: 4950.0,
                    tol: exact,
                },
                TargetPoint { removed: vec![2, 3], dispatch: vec![0.0, 40.0, 60.0], cost: 5200.0, tol: exact },
            ],
            traces: vec![
                TraceTarget {
                    config: greedy(1, false),
                    actions: removes(&[&[1], &[2], &[3], &[5], &[6]]),
                    final_cost: 4950.0,
                    final_dispatch: vec![10.0, 35.0, 55.0],
                    tol: exact,
                },
                TraceTarget {
                    config: greedy(1, true),
                    actions: reconnecting,
                    final_cost: 5200.0,
                    final_dispatch: vec![0.0, 40.0, 60.0],
                    tol: exact,
                },
            ],
        };
        (template, targets)
    }

    /// Two generators (10 and 80 $/MWh), 100 MW of load at the lower bus,
    /// seven lines with fixed susceptances 8, 1.1, 1.1, 5, 5, 5, 10; the
    /// last two rated 10 MW, the rest unrated. Bus 1 is the upper bus, bus 3
    /// the lower bus, bus 2 an optional middle bus.
    pub fn non_consistency_b() -> (SearchTemplate, SearchTargets) {
        let tol = Tolerance { cost: 1.0, dispatch: 0.1 };
        let template = SearchTemplate {
            buses: buses(&[0.0, 0.0, 100.0]),
            generators: vec![gen(1, 1, 10.0, 100.0), gen(2, 3, 80.0, 100.0)],
            pairs: triangle_pairs(),
            min_lines: 7,
            max_lines: 7,
            susceptances: Some(vec![8.0, 1.1, 1.1, 5.0, 5.0, 5.0, 10.0]),
            capacities: CapacitySpace::Fixed(vec![
                f64::INFINITY,
                f64::INFINITY,
                f64::INFINITY,
                f64::INFINITY,
                f64::INFINITY,
                10.0,
                10.0,
            ]),
            strong_line: None,
            rule: SwitchRule::Connected,
        };
        let targets = SearchTargets {
            points: vec![TargetPoint {
                removed: vec![],
                dispatch: vec![17.5, 82.5],
                // A 0.1 MW shift between the two units moves cost by $7.
                cost: 6775.0,
                tol: Tolerance { cost: 7.0, dispatch: 0.1 },
            }],
            traces: vec![
                TraceTarget {
                    config: greedy(1, false),
                    actions: removes(&[&[1], &[2], &[3]]),
                    final_cost: 6600.0,
                    final_dispatch: vec![20.0, 80.0],
                    tol,
                },
                TraceTarget {
                    config: greedy(2, false),
                    actions: removes(&[&[4, 5]]),
                    final_cost: 6607.0,
                    final_dispatch: vec![19.9, 80.1],
                    tol,
                },
            ],
        };
        (template, targets)
    }

    pub fn template(kind: ParadoxKind) -> (SearchTemplate, SearchTargets) {
        match kind {
            ParadoxKind::NonCommutativity => non_commutativity(),
            ParadoxKind::NonMonotonicity => non_monotonicity(),
            ParadoxKind::NonConsistencyA => non_consistency_a(),
            ParadoxKind::NonConsistencyB => non_consistency_b(),
        }
    }
}
