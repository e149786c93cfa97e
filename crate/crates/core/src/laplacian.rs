//! Weighted graph Laplacian systems, one grounded block per connected
//! component. Shared by the DC power flow (weights are susceptances) and
//! the current-driven circuit solver (weights are conductances).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::FlowError;

struct Island {
    nodes: Vec<usize>,
    reference: usize,
    factor: Option<Cholesky<f64, Dyn>>,
}

pub struct LaplacianSystem {
    n: usize,
    component: Vec<usize>,
    /// Position of a node inside its island's grounded block; `usize::MAX`
    /// for the island reference.
    local: Vec<usize>,
    islands: Vec<Island>,
}

impl LaplacianSystem {
    /// `edges` are `(a, b, weight)` with positive weights. Each island is
    /// grounded at `preferred_reference` when it contains it, otherwise at
    /// its lowest-index node.
    pub fn new(
        n: usize,
        edges: &[(usize, usize, f64)],
        preferred_reference: usize,
    ) -> Result<Self, FlowError> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut component = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = vec![start];
            component[start] = id;
            let mut k = 0;
            while k < members.len() {
                let u = members[k];
                k += 1;
                for &v in &adj[u] {
                    if component[v] == usize::MAX {
                        component[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }

        let mut local = vec![usize::MAX; n];
        let mut refs = Vec::with_capacity(groups.len());
        for members in &groups {
            let reference = if members.contains(&preferred_reference) {
                preferred_reference
            } else {
                members[0]
            };
            let mut pos = 0;
            for &u in members {
                if u != reference {
                    local[u] = pos;
                    pos += 1;
                }
            }
            refs.push(reference);
        }

        let mut mats: Vec<DMatrix<f64>> = groups
            .iter()
            .map(|g| DMatrix::zeros(g.len() - 1, g.len() - 1))
            .collect();
        for &(a, b, w) in edges {
            let m = &mut mats[component[a]];
            let (la, lb) = (local[a], local[b]);
            if la != usize::MAX {
                m[(la, la)] += w;
            }
            if lb != usize::MAX {
                m[(lb, lb)] += w;
            }
            if la != usize::MAX && lb != usize::MAX {
                m[(la, lb)] -= w;
                m[(lb, la)] -= w;
            }
        }

        let islands = groups
            .into_iter()
            .zip(refs)
            .zip(mats)
            .map(|((nodes, reference), mat)| {
                let factor = if mat.nrows() == 0 {
                    None
                } else {
                    Some(mat.cholesky().ok_or(FlowError::Singular)?)
                };
                Ok(Island { nodes, reference, factor })
            })
            .collect::<Result<Vec<_>, FlowError>>()?;

        Ok(LaplacianSystem { n, component, local, islands })
    }

    pub fn island_count(&self) -> usize {
        self.islands.len()
    }

    pub fn island_of(&self, node: usize) -> usize {
        self.component[node]
    }

    pub fn island_nodes(&self, island: usize) -> &[usize] {
        &self.islands[island].nodes
    }

    pub fn island_reference(&self, island: usize) -> usize {
        self.islands[island].reference
    }

    /// Potentials for the given injections; each island's reference sits at
    /// zero. Injections must balance per island (not checked here).
    pub fn potentials(&self, injections: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for isl in &self.islands {
            let Some(factor) = &isl.factor else { continue };
            let mut rhs = DVector::zeros(isl.nodes.len() - 1);
            for &u in &isl.nodes {
                if u != isl.reference {
                    rhs[self.local[u]] = injections[u];
                }
            }
            let sol = factor.solve(&rhs);
            for &u in &isl.nodes {
                if u != isl.reference {
                    out[u] = sol[self.local[u]];
                }
            }
        }
        out
    }

    /// Sensitivity of `potential[a] - potential[b]` to a unit injection at
    /// every node (withdrawn at the island reference). Zero outside the
    /// island; `a` and `b` must share an island.
    pub fn transfer_row(&self, a: usize, b: usize) -> Vec<f64> {
        debug_assert_eq!(self.component[a], self.component[b]);
        let isl = &self.islands[self.component[a]];
        let mut out = vec![0.0; self.n];
        let Some(factor) = &isl.factor else { return out };
        let mut rhs = DVector::zeros(isl.nodes.len() - 1);
        if self.local[a] != usize::MAX {
            rhs[self.local[a]] += 1.0;
        }
        if self.local[b] != usize::MAX {
            rhs[self.local[b]] -= 1.0;
        }
        let sol = factor.solve(&rhs);
        for &u in &isl.nodes {
            if u != isl.reference {
                out[u] = sol[self.local[u]];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_potentials() {
        let sys = LaplacianSystem::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 2).unwrap();
        let v = sys.potentials(&[1.0, 0.0, -1.0]);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn islands_are_grounded_separately() {
        let sys = LaplacianSystem::new(4, &[(0, 1, 2.0), (2, 3, 1.0)], 1).unwrap();
        assert_eq!(sys.island_count(), 2);
        assert_eq!(sys.island_reference(0), 1);
        assert_eq!(sys.island_reference(1), 2);
        let v = sys.potentials(&[1.0, -1.0, -3.0, 3.0]);
        assert!((v[0] - 0.5).abs() < 1e-12);
        assert!((v[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_row_matches_potential_difference() {
        let edges = [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0), (2, 3, 1.5)];
        let sys = LaplacianSystem::new(4, &edges, 0).unwrap();
        let inj = [0.0, 0.7, -1.2, 0.5];
        let v = sys.potentials(&inj);
        let row = sys.transfer_row(1, 3);
        let lhs: f64 = row.iter().zip(&inj).map(|(r, i)| r * i).sum();
        assert!((lhs - (v[1] - v[3])).abs() < 1e-12);
    }
}
