//! Subset-sum to topology-control feasibility reduction.
//!
//! Gadget, four buses:
//!
//! ```text
//!            G (generator, 2 MW)
//!          /   \
//!   bank x_i    bank -y_j      one switchable line per value
//!        A       B
//!         \     /
//!      L1  \   /  L2           1 MW each, susceptance 1e6, fixed
//!            D (2 MW load)
//! ```
//!
//! Both structural lines must carry exactly 1 MW, so the two in-service
//! banks need equal total susceptance and neither may be empty. That is a
//! non-empty zero-sum subset of the values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dcopf::solve_dcopf;
use crate::error::{GridError, SolveError};
use crate::grid::{Bus, BusId, GenId, Generator, Line, LineId, LineStatus, Network, NetworkView};

/// Susceptance of the two structural lines.
pub const STRUCTURAL_SUSCEPTANCE: f64 = 1e6;
/// Largest instance `verify_reduction` will enumerate.
pub const VERIFY_LIMIT: usize = 12;

const GEN_BUS: BusId = BusId(1);
const LEFT_BUS: BusId = BusId(2);
const RIGHT_BUS: BusId = BusId(3);
const LOAD_BUS: BusId = BusId(4);

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("instance has no values")]
    Empty,
    #[error("value {0} is zero or not finite")]
    BadValue(f64),
    #[error("{size} values exceed the verification budget of {limit}")]
    Budget { size: usize, limit: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSumInstance {
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl SubsetSumInstance {
    /// Split `values` by sign, keeping their relative order.
    pub fn from_values(values: &[f64]) -> Result<Self, ReductionError> {
        if values.is_empty() {
            return Err(ReductionError::Empty);
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v == 0.0) {
            return Err(ReductionError::BadValue(v));
        }
        Ok(SubsetSumInstance {
            positives: values.iter().copied().filter(|&v| v > 0.0).collect(),
            negatives: values.iter().copied().filter(|&v| v < 0.0).collect(),
        })
    }

    /// Positives then negatives; bank line `i` carries value `i`.
    pub fn values(&self) -> Vec<f64> {
        self.positives.iter().chain(&self.negatives).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<(), ReductionError> {
        if self.is_empty() {
            return Err(ReductionError::Empty);
        }
        let bad = self.positives.iter().find(|v| !v.is_finite() || **v <= 0.0);
        let bad = bad.or_else(|| self.negatives.iter().find(|v| !v.is_finite() || **v >= 0.0));
        match bad {
            Some(&v) => Err(ReductionError::BadValue(v)),
            None => Ok(()),
        }
    }
}

/// Id of the bank line for value index `i` (see [`SubsetSumInstance::values`]).
pub fn bank_line(i: usize) -> LineId {
    LineId(i as u32 + 3)
}

pub fn reduce_subset_sum(inst: &SubsetSumInstance) -> Result<Network, ReductionError> {
    inst.validate()?;
    let buses = vec![
        Bus { id: GEN_BUS, load: 0.0 },
        Bus { id: LEFT_BUS, load: 0.0 },
        Bus { id: RIGHT_BUS, load: 0.0 },
        Bus { id: LOAD_BUS, load: 2.0 },
    ];
    let structural = |id, from| Line {
        id: LineId(id),
        from,
        to: LOAD_BUS,
        susceptance: STRUCTURAL_SUSCEPTANCE,
        capacity: 1.0,
        status: LineStatus::InService,
    };
    let mut lines = vec![structural(1, LEFT_BUS), structural(2, RIGHT_BUS)];
    for (i, v) in inst.values().into_iter().enumerate() {
        lines.push(Line {
            id: bank_line(i),
            from: GEN_BUS,
            to: if v > 0.0 { LEFT_BUS } else { RIGHT_BUS },
            susceptance: v.abs(),
            capacity: f64::INFINITY,
            status: LineStatus::InService,
        });
    }
    let gens = vec![Generator { id: GenId(1), bus: GEN_BUS, cost: 1.0, p_min: 0.0, p_max: 2.0 }];
    Ok(Network::new(buses, lines, gens, Some(GEN_BUS))?)
}

fn subset(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Masks in lexicographic order of their sorted index lists.
fn lexicographic_first(masks: impl Iterator<Item = u64>, n: usize) -> Option<u64> {
    masks.min_by(|a, b| subset(*a, n).cmp(&subset(*b, n)))
}

/// Lexicographically smallest non-empty zero-sum subset, as value indices.
pub fn zero_sum_subset(inst: &SubsetSumInstance) -> Option<Vec<usize>> {
    let values = inst.values();
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let hits = (1..1u64 << n).filter(|&m| {
        let s: f64 = subset(m, n).iter().map(|&i| values[i]).sum();
        s.abs() <= 1e-9 * scale
    });
    lexicographic_first(hits, n).map(|m| subset(m, n))
}

/// Whether the gadget with exactly the bank lines in `bank` in service has a
/// feasible DCOPF.
pub fn bank_topology_feasible(net: &Network, n: usize, bank: &[usize]) -> Result<bool, SolveError> {
    let mut mask = vec![true, true];
    mask.extend((0..n).map(|i| bank.contains(&i)));
    Ok(solve_dcopf(&NetworkView::from_mask(net, mask))?.feasible)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionVerdict {
    pub agree: bool,
    pub subset_sum_yes: bool,
    pub topology_yes: bool,
    /// Zero-sum subset, as values in ascending order.
    pub witness_subset: Option<Vec<f64>>,
    /// In-service bank lines of the lexicographically first feasible topology.
    pub witness_topology: Option<Vec<LineId>>,
}

/// Decide both problems by exhaustive enumeration and compare.
pub fn verify_reduction(inst: &SubsetSumInstance) -> Result<ReductionVerdict, ReductionError> {
    inst.validate()?;
    let n = inst.len();
    if n > VERIFY_LIMIT {
        return Err(ReductionError::Budget { size: n, limit: VERIFY_LIMIT });
    }
    let net = reduce_subset_sum(inst)?;
    let values = inst.values();
    let subset_witness = zero_sum_subset(inst);

    let feasible: Vec<u64> = (0..1u64 << n)
        .into_par_iter()
        .map(|m| bank_topology_feasible(&net, n, &subset(m, n)).map(|ok| ok.then_some(m)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let topology = lexicographic_first(feasible.iter().copied(), n);

    let subset_sum_yes = subset_witness.is_some();
    let topology_yes = topology.is_some();
    Ok(ReductionVerdict {
        agree: subset_sum_yes == topology_yes,
        subset_sum_yes,
        topology_yes,
        witness_subset: subset_witness.map(|idx| {
            let mut w: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            w.sort_by(f64::total_cmp);
            w
        }),
        witness_topology: topology.map(|m| subset(m, n).into_iter().map(bank_line).collect()),
    })
}
