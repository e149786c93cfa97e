//! Current-driven resistive circuits and the congestion laws they obey.
//!
//! A DC grid with fixed injections is the same object as a circuit of
//! current sources and resistors: angle ↔ potential, injection ↔ current,
//! susceptance ↔ conductance. Removing a non-bridge edge never lowers the
//! total `I²R` (equivalently `Σ f²/b`), and the increase equals
//! `|I_mn · V'_mn|`, the pre-removal edge current times the post-removal
//! potential difference across its endpoints.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::FlowError;
use crate::grid::{find_bridges, NetworkView};

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitEdge {
    pub id: u32,
    pub a: u32,
    pub b: u32,
    pub conductance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentCircuit {
    nodes: Vec<u32>,
    edges: Vec<CircuitEdge>,
    /// Amperes per node, aligned with `nodes`.
    injections: Vec<f64>,
    index: HashMap<u32, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSolution {
    /// Aligned with the circuit's nodes; the first node is grounded.
    pub potentials: Vec<f64>,
    /// Aligned with the circuit's edges, positive from `a` to `b`.
    pub currents: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovalDelta {
    /// loss(after) - loss(before).
    pub delta_loss: f64,
    pub current_before: f64,
    pub voltage_after: f64,
    /// `|delta_loss| - |current_before * voltage_after|`.
    pub identity_check: f64,
    pub loss_before: f64,
}

impl CurrentCircuit {
    pub fn new(
        nodes: Vec<u32>,
        edges: Vec<CircuitEdge>,
        injections: Vec<f64>,
    ) -> Result<Self, FlowError> {
        assert_eq!(nodes.len(), injections.len());
        let index: HashMap<u32, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        for e in &edges {
            assert!(e.conductance > 0.0, "edge {} has non-positive conductance", e.id);
            assert!(index.contains_key(&e.a) && index.contains_key(&e.b), "edge {} dangles", e.id);
        }
        let sum: f64 = injections.iter().sum();
        let scale = injections.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-9 * scale {
            return Err(FlowError::Unbalanced(sum));
        }
        let c = CurrentCircuit { nodes, edges, injections, index };
        if !c.connected_without(None) {
            return Err(FlowError::Disconnected);
        }
        Ok(c)
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CircuitEdge] {
        &self.edges
    }

    pub fn injections(&self) -> &[f64] {
        &self.injections
    }

    fn ends(&self, e: &CircuitEdge) -> (usize, usize) {
        (self.index[&e.a], self.index[&e.b])
    }

    fn adjacency(&self, skip: Option<usize>) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, e) in self.edges.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            let (a, b) = self.ends(e);
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        adj
    }

    fn connected_without(&self, skip: Option<usize>) -> bool {
        let adj = self.adjacency(skip);
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        if self.nodes.is_empty() {
            return true;
        }
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Edge ids whose removal disconnects the circuit.
    pub fn bridges(&self) -> Vec<u32> {
        find_bridges(self.nodes.len(), &self.adjacency(None))
            .into_iter()
            .map(|k| self.edges[k].id)
            .collect()
    }

    fn solve_skipping(&self, skip: Option<usize>) -> Result<CircuitSolution, FlowError> {
        let n = self.nodes.len();
        if n == 0 {
            return Ok(CircuitSolution { potentials: vec![], currents: vec![] });
        }
        // Node 0 is grounded; the reduced conductance matrix is solved by LU.
        let mut g = DMatrix::<f64>::zeros(n - 1, n - 1);
        for (k, e) in self.edges.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            let (a, b) = self.ends(e);
            let w = e.conductance;
            if a > 0 {
                g[(a - 1, a - 1)] += w;
            }
            if b > 0 {
                g[(b - 1, b - 1)] += w;
            }
            if a > 0 && b > 0 {
                g[(a - 1, b - 1)] -= w;
                g[(b - 1, a - 1)] -= w;
            }
        }
        let rhs = DVector::from_iterator(n - 1, self.injections[1..].iter().copied());
        let v = g.lu().solve(&rhs).ok_or(FlowError::Singular)?;
        let mut potentials = vec![0.0];
        potentials.extend(v.iter().copied());
        let currents = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                if Some(k) == skip {
                    return 0.0;
                }
                let (a, b) = self.ends(e);
                e.conductance * (potentials[a] - potentials[b])
            })
            .collect();
        Ok(CircuitSolution { potentials, currents })
    }
}

pub fn solve_current_circuit(c: &CurrentCircuit) -> Result<CircuitSolution, FlowError> {
    c.solve_skipping(None)
}

/// Σ I²/G over the edges.
pub fn total_loss(c: &CurrentCircuit, sol: &CircuitSolution) -> f64 {
    c.edges
        .iter()
        .zip(&sol.currents)
        .map(|(e, i)| i * i / e.conductance)
        .sum()
}

/// Loss change from removing one edge, with the `|I_mn V'_mn|` identity
/// evaluated alongside.
pub fn removal_delta(c: &CurrentCircuit, edge: u32) -> Result<RemovalDelta, FlowError> {
    let k = c
        .edges
        .iter()
        .position(|e| e.id == edge)
        .ok_or(FlowError::UnknownEdge(edge))?;
    if !c.connected_without(Some(k)) {
        return Err(FlowError::BridgeEdge(edge));
    }
    let before = c.solve_skipping(None)?;
    let after = c.solve_skipping(Some(k))?;
    let loss_before = total_loss(c, &before);
    let loss_after = total_loss(c, &after);
    let (a, b) = c.ends(&c.edges[k]);
    let current_before = before.currents[k];
    let voltage_after = after.potentials[a] - after.potentials[b];
    let delta_loss = loss_after - loss_before;
    Ok(RemovalDelta {
        delta_loss,
        current_before,
        voltage_after,
        identity_check: delta_loss.abs() - (current_before * voltage_after).abs(),
        loss_before,
    })
}

/// Totals of `f²/b` (actual) and `f̄²/b` (capacity) over in-service lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CongestionReport {
    pub total_loss: f64,
    pub total_capacity: f64,
    pub margin: f64,
}

pub fn congestion_report(view: &NetworkView<'_>, flows: &[f64]) -> CongestionReport {
    let net = view.network();
    let mut total_loss = 0.0;
    let mut total_capacity = 0.0;
    for l in view.in_service_lines() {
        let line = &net.lines()[l];
        total_loss += flows[l] * flows[l] / line.susceptance;
        total_capacity += line.capacity * line.capacity / line.susceptance;
    }
    CongestionReport {
        total_loss,
        total_capacity,
        margin: total_capacity - total_loss,
    }
}

/// Random connected circuit: Erdős–Rényi edges with rejection sampling for
/// connectivity, conductances uniform in [0.1, 10], balanced injections.
pub fn random_circuit<R: Rng>(rng: &mut R, max_nodes: usize) -> CurrentCircuit {
    loop {
        let n = rng.gen_range(2..=max_nodes.max(2));
        let p: f64 = rng.gen_range(0.2..0.8);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push(CircuitEdge {
                        id: edges.len() as u32,
                        a: a as u32,
                        b: b as u32,
                        conductance: rng.gen_range(0.1..10.0),
                    });
                }
            }
        }
        let mut injections: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mean = injections.iter().sum::<f64>() / n as f64;
        injections.iter_mut().for_each(|v| *v -= mean);
        let nodes = (0..n as u32).collect();
        if let Ok(c) = CurrentCircuit::new(nodes, edges, injections) {
            return c;
        }
    }
}

/// Worst observed deviations over a random corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LawReport {
    pub circuits: usize,
    pub removals: usize,
    /// Largest `-delta_loss / loss_before` seen (positive means a decrease).
    pub max_decrease: f64,
    /// Largest `|identity_check| / loss_before`.
    pub max_identity_error: f64,
}

/// Exercise both laws on every non-bridge edge of `trials` random circuits.
pub fn run_law_corpus(trials: usize, seed: u64, max_nodes: usize) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LawReport { max_decrease: f64::NEG_INFINITY, ..Default::default() };
    for _ in 0..trials {
        let c = random_circuit(&mut rng, max_nodes);
        report.circuits += 1;
        let bridges = c.bridges();
        for e in c.edges() {
            if bridges.contains(&e.id) {
                continue;
            }
            let d = removal_delta(&c, e.id).expect("non-bridge removal");
            let scale = d.loss_before.max(f64::MIN_POSITIVE);
            report.removals += 1;
            report.max_decrease = report.max_decrease.max(-d.delta_loss / scale);
            report.max_identity_error = report.max_identity_error.max(d.identity_check.abs() / scale);
        }
    }
    report
}
