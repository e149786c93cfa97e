//! Grid data model: buses, lines, generators, topology overlays and the
//! structural checks (connectivity, bridges, relaxed N-1) that every
//! switching decision goes through.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GridError;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(BusId);
id_type!(LineId);
id_type!(GenId);

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Withdrawal in MW.
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    /// Linear marginal cost, $/MWh.
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineStatus {
    InService,
    OutOfService,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: LineId,
    pub from: BusId,
    pub to: BusId,
    pub susceptance: f64,
    /// MW; `f64::INFINITY` for an unrated line.
    pub capacity: f64,
    pub status: LineStatus,
}

/// Immutable grid description. Construct through [`Network::new`] or
/// [`parse_case`] so that referential integrity is guaranteed.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    reference_bus: BusId,
    bus_index: HashMap<BusId, usize>,
    line_ends: Vec<(usize, usize)>,
    gen_bus: Vec<usize>,
}

impl Network {
    /// Validates and indexes a grid. `reference_bus` defaults to the bus of
    /// the first generator.
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        reference_bus: Option<BusId>,
    ) -> Result<Self, GridError> {
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if bus_index.insert(b.id, i).is_some() {
                return Err(GridError::DuplicateId { kind: "bus", id: b.id.0 });
            }
            if !b.load.is_finite() || b.load < 0.0 {
                return Err(GridError::BadLoad(b.id));
            }
        }
        let lookup = |record: String, bus: BusId| {
            bus_index
                .get(&bus)
                .copied()
                .ok_or(GridError::DanglingBus { record, bus })
        };

        let mut seen = HashMap::new();
        let mut line_ends = Vec::with_capacity(lines.len());
        for l in &lines {
            if seen.insert(l.id, ()).is_some() {
                return Err(GridError::DuplicateId { kind: "line", id: l.id.0 });
            }
            let a = lookup(format!("line {}", l.id), l.from)?;
            let b = lookup(format!("line {}", l.id), l.to)?;
            if a == b {
                return Err(GridError::SelfLoop(l.id));
            }
            if !(l.susceptance.is_finite() && l.susceptance > 0.0) {
                return Err(GridError::BadSusceptance(l.id));
            }
            if l.capacity.is_nan() || l.capacity <= 0.0 {
                return Err(GridError::BadCapacity(l.id));
            }
            line_ends.push((a, b));
        }

        if generators.is_empty() {
            return Err(GridError::NoGenerators);
        }
        let mut seen = HashMap::new();
        let mut gen_bus = Vec::with_capacity(generators.len());
        for g in &generators {
            if seen.insert(g.id, ()).is_some() {
                return Err(GridError::DuplicateId { kind: "generator", id: g.id.0 });
            }
            gen_bus.push(lookup(format!("generator {}", g.id), g.bus)?);
            let ok = g.p_min.is_finite()
                && g.p_max.is_finite()
                && 0.0 <= g.p_min
                && g.p_min <= g.p_max
                && g.cost.is_finite()
                && g.cost >= 0.0;
            if !ok {
                return Err(GridError::BadGenerator(g.id));
            }
        }

        let reference_bus = reference_bus.unwrap_or(generators[0].bus);
        lookup("reference_bus".into(), reference_bus)?;

        Ok(Network {
            buses,
            lines,
            generators,
            reference_bus,
            bus_index,
            line_ends,
            gen_bus,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn reference_bus(&self) -> BusId {
        self.reference_bus
    }

    pub fn reference_index(&self) -> usize {
        self.bus_index[&self.reference_bus]
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Bus indices (not ids) of a line's endpoints.
    pub fn line_ends(&self, line: usize) -> (usize, usize) {
        self.line_ends[line]
    }

    pub fn generator_bus(&self, gen: usize) -> usize {
        self.gen_bus[gen]
    }

    pub fn total_load(&self) -> f64 {
        self.buses.iter().map(|b| b.load).sum()
    }

    /// Buses the relaxed N-1 rule protects: those with load or a generator.
    pub fn protected_buses(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.buses.iter().map(|b| b.load > 0.0).collect();
        for &b in &self.gen_bus {
            out[b] = true;
        }
        out
    }

    /// Copy with generator costs replaced, in generator order.
    pub fn with_costs(&self, costs: &[f64]) -> Network {
        assert_eq!(costs.len(), self.generators.len());
        let mut net = self.clone();
        for (g, &c) in net.generators.iter_mut().zip(costs) {
            g.cost = c;
        }
        net
    }

    /// Copy with all line limits removed.
    pub fn unconstrained(&self) -> Network {
        let mut net = self.clone();
        for l in &mut net.lines {
            l.capacity = f64::INFINITY;
        }
        net
    }

    /// Mask of in-service lines as recorded in the case.
    pub fn initial_mask(&self) -> Vec<bool> {
        self.lines
            .iter()
            .map(|l| l.status == LineStatus::InService)
            .collect()
    }

    pub fn view(&self) -> NetworkView<'_> {
        NetworkView::from_mask(self, self.initial_mask())
    }

    pub fn view_all_in(&self) -> NetworkView<'_> {
        NetworkView::from_mask(self, vec![true; self.lines.len()])
    }
}

/// Line-status overlay keyed by line id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub statuses: BTreeMap<LineId, bool>,
}

impl Topology {
    pub fn all_in(net: &Network) -> Self {
        Topology {
            statuses: net.lines().iter().map(|l| (l.id, true)).collect(),
        }
    }

    pub fn initial(net: &Network) -> Self {
        Self::from_mask(net, &net.initial_mask())
    }

    pub fn from_mask(net: &Network, mask: &[bool]) -> Self {
        Topology {
            statuses: net.lines().iter().zip(mask).map(|(l, &s)| (l.id, s)).collect(),
        }
    }

    pub fn with_removed(mut self, ids: &[LineId]) -> Self {
        for id in ids {
            self.statuses.insert(*id, false);
        }
        self
    }

    pub fn removed(&self) -> Vec<LineId> {
        self.statuses
            .iter()
            .filter(|(_, &s)| !s)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn is_in(&self, id: LineId) -> Option<bool> {
        self.statuses.get(&id).copied()
    }

    pub fn to_mask(&self, net: &Network) -> Result<Vec<bool>, GridError> {
        for id in self.statuses.keys() {
            if net.line_index(*id).is_none() {
                return Err(GridError::TopologyUnknown(*id));
            }
        }
        net.lines()
            .iter()
            .map(|l| {
                self.statuses
                    .get(&l.id)
                    .copied()
                    .ok_or(GridError::TopologyMissing(l.id))
            })
            .collect()
    }
}

/// Overlay the topology on the network. The network itself is untouched.
pub fn apply_topology<'a>(net: &'a Network, topo: &Topology) -> Result<NetworkView<'a>, GridError> {
    Ok(NetworkView::from_mask(net, topo.to_mask(net)?))
}

/// Read-only network with a line-status mask. Out-of-service lines are
/// invisible to every downstream computation.
#[derive(Debug, Clone)]
pub struct NetworkView<'a> {
    net: &'a Network,
    mask: Vec<bool>,
}

impl<'a> NetworkView<'a> {
    pub fn from_mask(net: &'a Network, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), net.lines().len(), "mask length mismatch");
        NetworkView { net, mask }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_in_service(&self, line: usize) -> bool {
        self.mask[line]
    }

    pub fn topology(&self) -> Topology {
        Topology::from_mask(self.net, &self.mask)
    }

    pub fn in_service_lines(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(move |&l| self.mask[l])
    }

    pub fn in_service_count(&self) -> usize {
        self.mask.iter().filter(|&&s| s).count()
    }

    /// Same network, different mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> NetworkView<'a> {
        NetworkView::from_mask(self.net, mask)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.net.buses().len()];
        for l in self.in_service_lines() {
            let (a, b) = self.net.line_ends(l);
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Incidence list: for each bus, (neighbour, line index) pairs.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.net.buses().len()];
        for l in self.in_service_lines() {
            let (a, b) = self.net.line_ends(l);
            adj[a].push((b, l));
            adj[b].push((a, l));
        }
        adj
    }

    /// Connected component label per bus and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.net.buses().len();
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.components().1 <= 1
    }

    /// In-service lines whose removal would split their component.
    /// Parallel lines are never bridges.
    pub fn bridges(&self) -> Vec<usize> {
        find_bridges(self.net.buses().len(), &self.adjacency())
    }
}

/// Lowlink bridge search keyed on edge ids, so parallel edges are handled.
pub(crate) fn find_bridges(n: usize, adj: &[Vec<(usize, usize)>]) -> Vec<usize> {
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut out = Vec::new();
    let mut clock = 0;
    // (node, edge used to enter, next adjacency slot)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = clock;
        low[root] = clock;
        clock += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (u, via, ref mut slot)) = stack.last_mut() {
            if *slot < adj[u].len() {
                let (v, e) = adj[u][*slot];
                *slot += 1;
                if e == via {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = clock;
                    low[v] = clock;
                    clock += 1;
                    stack.push((v, e, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        out.push(via);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Outcome of the relaxed N-1 rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct N1Report {
    pub connected: bool,
    /// Load or generator buses with fewer than two in-service lines.
    pub low_degree: Vec<BusId>,
}

impl N1Report {
    pub fn is_pass(&self) -> bool {
        self.connected && self.low_degree.is_empty()
    }
}

/// Relaxed N-1: the in-service graph is connected and every load or
/// generator bus has at least two in-service lines.
pub fn check_relaxed_n1(view: &NetworkView<'_>) -> N1Report {
    let net = view.network();
    let deg = view.degrees();
    let protected = net.protected_buses();
    let low_degree = net
        .buses()
        .iter()
        .enumerate()
        .filter(|&(i, _)| protected[i] && deg[i] < 2)
        .map(|(_, b)| b.id)
        .collect();
    N1Report {
        connected: view.is_connected(),
        low_degree,
    }
}

// ---------------------------------------------------------------------------
// Native case format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDocument {
    buses: Vec<BusRecord>,
    lines: Vec<LineRecord>,
    generators: Vec<GenRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_bus: Option<BusId>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRecord {
    id: BusId,
    #[serde(default)]
    load_mw: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineRecord {
    id: LineId,
    from: BusId,
    to: BusId,
    susceptance: f64,
    /// `null` means unrated.
    capacity_mw: Option<f64>,
    #[serde(default = "in_service")]
    status: LineStatus,
}

fn in_service() -> LineStatus {
    LineStatus::InService
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenRecord {
    id: GenId,
    bus: BusId,
    cost_per_mwh: f64,
    #[serde(default)]
    pmin_mw: f64,
    pmax_mw: f64,
}

/// Parse a native JSON case document.
pub fn parse_case(text: &str) -> Result<Network, GridError> {
    let doc: CaseDocument =
        serde_json::from_str(text).map_err(|e| GridError::Schema(e.to_string()))?;
    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus { id: b.id, load: b.load_mw })
        .collect();
    let lines = doc
        .lines
        .into_iter()
        .map(|l| Line {
            id: l.id,
            from: l.from,
            to: l.to,
            susceptance: l.susceptance,
            capacity: l.capacity_mw.unwrap_or(f64::INFINITY),
            status: l.status,
        })
        .collect();
    let generators = doc
        .generators
        .into_iter()
        .map(|g| Generator {
            id: g.id,
            bus: g.bus,
            cost: g.cost_per_mwh,
            p_min: g.pmin_mw,
            p_max: g.pmax_mw,
        })
        .collect();
    Network::new(buses, lines, generators, doc.reference_bus)
}

/// Serialize to the native JSON case format.
pub fn emit_case(net: &Network) -> String {
    let doc = CaseDocument {
        buses: net
            .buses()
            .iter()
            .map(|b| BusRecord { id: b.id, load_mw: b.load })
            .collect(),
        lines: net
            .lines()
            .iter()
            .map(|l| LineRecord {
                id: l.id,
                from: l.from,
                to: l.to,
                susceptance: l.susceptance,
                capacity_mw: l.capacity.is_finite().then_some(l.capacity),
                status: l.status,
            })
            .collect(),
        generators: net
            .generators()
            .iter()
            .map(|g| GenRecord {
                id: g.id,
                bus: g.bus,
                cost_per_mwh: g.cost,
                pmin_mw: g.p_min,
                pmax_mw: g.p_max,
            })
            .collect(),
        reference_bus: Some(net.reference_bus()),
    };
    serde_json::to_string_pretty(&doc).expect("case document serializes")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn bus(id: u32, load: f64) -> Bus {
        Bus { id: BusId(id), load }
    }

    pub fn line(id: u32, from: u32, to: u32, b: f64, cap: f64) -> Line {
        Line {
            id: LineId(id),
            from: BusId(from),
            to: BusId(to),
            susceptance: b,
            capacity: cap,
            status: LineStatus::InService,
        }
    }

    pub fn gen(id: u32, bus: u32, cost: f64, pmax: f64) -> Generator {
        Generator { id: GenId(id), bus: BusId(bus), cost, p_min: 0.0, p_max: pmax }
    }

    fn triangle(loads: [f64; 3]) -> Network {
        Network::new(
            vec![bus(1, loads[0]), bus(2, loads[1]), bus(3, loads[2])],
            vec![line(1, 1, 2, 1.0, 10.0), line(2, 2, 3, 1.0, 10.0), line(3, 1, 3, 1.0, 10.0)],
            vec![gen(1, 1, 10.0, 100.0)],
            None,
        )
        .unwrap()
    }

    const TWO_BUS: &str = r#"{
        "buses": [{"id": 1, "load_mw": 0}, {"id": 2, "load_mw": 5}],
        "lines": [{"id": 1, "from": 1, "to": 2, "susceptance": 1, "capacity_mw": 10, "status": "in_service"}],
        "generators": [{"id": 1, "bus": 1, "cost_per_mwh": 10, "pmin_mw": 0, "pmax_mw": 20}]
    }"#;

    #[test]
    fn parses_minimal_case() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(net.buses().len(), 2);
        assert_eq!(net.lines().len(), 1);
        assert_eq!(net.generators().len(), 1);
        assert_eq!(net.reference_bus(), BusId(1));
        assert!(net.lines().iter().all(|l| l.status == LineStatus::InService));
    }

    #[test]
    fn dangling_bus_is_named() {
        let text = TWO_BUS.replace(r#""to": 2"#, r#""to": 999"#);
        match parse_case(&text) {
            Err(GridError::DanglingBus { bus, record }) => {
                assert_eq!(bus, BusId(999));
                assert_eq!(record, "line 1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_line_parameters() {
        let text = TWO_BUS.replace(r#""susceptance": 1"#, r#""susceptance": -1"#);
        assert!(matches!(parse_case(&text), Err(GridError::BadSusceptance(LineId(1)))));
        let text = TWO_BUS.replace(r#""capacity_mw": 10"#, r#""capacity_mw": 0"#);
        assert!(matches!(parse_case(&text), Err(GridError::BadCapacity(LineId(1)))));
        let text = TWO_BUS.replace(r#""buses""#, r#""busses""#);
        assert!(matches!(parse_case(&text), Err(GridError::Schema(_))));
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(parse_case(&emit_case(&net)).unwrap(), net);
    }

    #[test]
    fn topology_must_cover_lines() {
        let net = triangle([1.0, 1.0, 1.0]);
        let mut topo = Topology::all_in(&net);
        topo.statuses.remove(&LineId(2));
        assert!(matches!(apply_topology(&net, &topo), Err(GridError::TopologyMissing(LineId(2)))));
        let mut topo = Topology::all_in(&net);
        topo.statuses.insert(LineId(9), true);
        assert!(matches!(apply_topology(&net, &topo), Err(GridError::TopologyUnknown(LineId(9)))));
    }

    #[test]
    fn apply_topology_excludes_line() {
        let net = triangle([1.0, 1.0, 1.0]);
        let before = net.clone();
        let topo = Topology::all_in(&net).with_removed(&[LineId(2)]);
        let view = apply_topology(&net, &topo).unwrap();
        assert_eq!(view.in_service_count(), 2);
        assert!(view.adjacency().iter().flatten().all(|&(_, l)| net.lines()[l].id != LineId(2)));
        assert_eq!(net, before);
    }

    #[test]
    fn relaxed_n1_triangle() {
        let net = triangle([1.0, 1.0, 1.0]);
        assert!(check_relaxed_n1(&net.view()).is_pass());
        let topo = Topology::all_in(&net).with_removed(&[LineId(2)]);
        let report = check_relaxed_n1(&apply_topology(&net, &topo).unwrap());
        assert!(report.connected);
        assert_eq!(report.low_degree, vec![BusId(2), BusId(3)]);
    }

    #[test]
    fn relaxed_n1_flags_islands() {
        let net = triangle([0.0, 0.0, 0.0]);
        let topo = Topology::all_in(&net).with_removed(&[LineId(2), LineId(3)]);
        let report = check_relaxed_n1(&apply_topology(&net, &topo).unwrap());
        assert!(!report.connected);
        assert!(!report.is_pass());
    }

    #[test]
    fn bridges_respect_parallel_lines() {
        let net = Network::new(
            vec![bus(1, 0.0), bus(2, 0.0), bus(3, 0.0), bus(4, 0.0)],
            vec![
                line(1, 1, 2, 1.0, 1.0),
                line(2, 1, 2, 1.0, 1.0),
                line(3, 2, 3, 1.0, 1.0),
                line(4, 3, 4, 1.0, 1.0),
                line(5, 4, 2, 1.0, 1.0),
                line(6, 1, 4, 1.0, 1.0),
            ],
            vec![gen(1, 1, 1.0, 1.0)],
            None,
        )
        .unwrap();
        assert!(net.view().bridges().is_empty());
        let view = net.view().with_mask(vec![true, true, true, false, true, false]);
        assert_eq!(view.bridges(), vec![2, 4]);
        let view = net.view().with_mask(vec![true, false, true, true, true, false]);
        assert_eq!(view.bridges(), vec![0]);
    }
}
