//! Shortest-path swap chains for remote two-qubit gates.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::network::topology::LatticeTopology;

/// Hop counts from `from` over lattice links; `None` for unreachable sites.
pub fn bfs_distances(topology: &LatticeTopology, from: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; topology.num_sites()];
    let mut queue = VecDeque::from([from]);
    dist[from] = Some(0);
    while let Some(s) = queue.pop_front() {
        let d = dist[s].expect("visited");
        for &(_, nb) in topology.neighbors(s) {
            if dist[nb].is_none() {
                dist[nb] = Some(d + 1);
                queue.push_back(nb);
            }
        }
    }
    dist
}

/// Shortest path `from → to` (both ends included); ties broken by the
/// lowest neighbor index.
pub fn shortest_path(topology: &LatticeTopology, from: usize, to: usize) -> Result<Vec<usize>> {
    let n = topology.num_sites();
    if from >= n || to >= n {
        return Err(Error::Routing(format!("site out of range ({from}, {to}) for {n} sites")));
    }
    let mut parent = vec![usize::MAX; n];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        if s == to {
            break;
        }
        for &(_, nb) in topology.neighbors(s) {
            if parent[nb] == usize::MAX {
                parent[nb] = s;
                queue.push_back(nb);
            }
        }
    }
    if parent[to] == usize::MAX {
        return Err(Error::Routing(format!("sites {from} and {to} are not connected")));
    }
    let mut path = vec![to];
    while *path.last().expect("non-empty") != from {
        path.push(parent[*path.last().expect("non-empty")]);
    }
    path.reverse();
    Ok(path)
}

/// Full swaps that walk the first qubit next to the second, the
/// interaction itself, and the swaps undoing the walk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SwapChain {
    pub path: Vec<usize>,
    pub forward: Vec<(usize, usize)>,
    /// `(site now holding qa, qb)`.
    pub interaction: (usize, usize),
    pub restore: Vec<(usize, usize)>,
}

impl SwapChain {
    /// Hop distance between the two qubits.
    pub fn distance(&self) -> usize {
        self.path.len() - 1
    }

    pub fn swap_count(&self) -> usize {
        self.forward.len() + self.restore.len()
    }

    /// Swaps plus the interaction.
    pub fn step_count(&self) -> usize {
        self.swap_count() + 1
    }
}

pub fn route_swap_chain(topology: &LatticeTopology, qa: usize, qb: usize) -> Result<SwapChain> {
    if qa == qb {
        return Err(Error::Routing(format!("both qubits sit on site {qa}")));
    }
    let path = shortest_path(topology, qa, qb)?;
    let d = path.len() - 1;
    let forward: Vec<(usize, usize)> = (0..d - 1).map(|j| (path[j], path[j + 1])).collect();
    let restore = forward.iter().rev().copied().collect();
    Ok(SwapChain { interaction: (path[d - 1], qb), path, forward, restore })
}

/// Mean chain lengths over all unordered pairs of distinct sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainStats {
    pub sites: usize,
    pub pairs: usize,
    /// Mean forward swaps (`distance − 1`).
    pub mean_one_way: f64,
    /// Mean routed steps (`2(distance − 1) + 1`).
    pub mean_steps: f64,
}

pub fn chain_stats(topology: &LatticeTopology, mode: ExecMode) -> Result<ChainStats> {
    let n = topology.num_sites();
    if n < 2 {
        return Err(Error::Routing("need at least two sites".into()));
    }
    let sums: Vec<Option<(usize, usize)>> = map_indexed(mode, n, |a| {
        let dist = bfs_distances(topology, a);
        let mut s = (0usize, 0usize);
        for d in &dist[a + 1..] {
            let d = (*d)?;
            s.0 += d - 1;
            s.1 += 1;
        }
        Some(s)
    });
    let (mut one_way, mut pairs) = (0usize, 0usize);
    for s in sums {
        let (o, p) = s.ok_or_else(|| Error::Routing("lattice is disconnected".into()))?;
        one_way += o;
        pairs += p;
    }
    let mean_one_way = one_way as f64 / pairs as f64;
    Ok(ChainStats { sites: n, pairs, mean_one_way, mean_steps: 2.0 * mean_one_way + 1.0 })
}
