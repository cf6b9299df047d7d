//! Hypercubic cell lattices with nearest-neighbor interaction links.
//!
//! Sites are numbered with the x coordinate fastest. Each used direction
//! gets one port slot of the cell template: `+axis` slots first (axes with
//! extent ≥ 2), then `−axis` slots (axes with extent ≥ 3). An axis of extent
//! 2 reuses its `+` slot for the single backward link.

use serde::{Deserialize, Serialize};

use crate::cell::CellSpec;
use crate::error::{Error, Result};

/// Link between two neighboring cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    /// Lower cell along `axis`.
    pub a: usize,
    pub b: usize,
    pub axis: usize,
    pub port_a: usize,
    pub port_b: usize,
}

impl Link {
    pub fn port_of(&self, cell: usize) -> Option<usize> {
        if cell == self.a {
            Some(self.port_a)
        } else if cell == self.b {
            Some(self.port_b)
        } else {
            None
        }
    }

    pub fn other(&self, cell: usize) -> Option<usize> {
        if cell == self.a {
            Some(self.b)
        } else if cell == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeTopology {
    extents: Vec<usize>,
    cells: Vec<CellSpec>,
    links: Vec<Link>,
    /// Per site: `(link index, neighbor)` in a fixed order.
    adjacency: Vec<Vec<(usize, usize)>>,
}

type AxisSlots = (Option<usize>, Option<usize>);

/// `(plus_slot, minus_slot)` port index per axis; `None` for unused.
fn port_slots(extents: &[usize], first_port: usize) -> (Vec<AxisSlots>, usize) {
    let mut next = first_port;
    let mut slots = vec![(None, None); extents.len()];
    for (k, &e) in extents.iter().enumerate() {
        if e >= 2 {
            slots[k].0 = Some(next);
            next += 1;
        }
    }
    for (k, &e) in extents.iter().enumerate() {
        if e >= 3 {
            slots[k].1 = Some(next);
            next += 1;
        } else if e == 2 {
            slots[k].1 = slots[k].0;
        }
    }
    (slots, next - first_port)
}

/// Builds the lattice; every cell gets a copy of `template` with its port
/// energies matched across each link.
pub fn build_lattice(d: usize, extents: &[usize], template: &CellSpec) -> Result<LatticeTopology> {
    if !(1..=3).contains(&d) {
        return Err(Error::Topology(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    if extents.len() != d {
        return Err(Error::Topology(format!("{} extents for dimension {d}", extents.len())));
    }
    if extents.contains(&0) {
        return Err(Error::Topology("extents must be positive".into()));
    }
    template.validate().map_err(|e| Error::Topology(e.to_string()))?;
    let n: usize = extents
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::Topology("lattice too large".into()))?;

    let (slots, needed) = port_slots(extents, crate::cell::FIRST_PORT);
    let available = template.ports().len();
    if needed > available {
        return Err(Error::Topology(format!(
            "insufficient ports: lattice needs {needed} per cell, template has {available}"
        )));
    }

    let delta = template.min_gap() / 4.0;
    let coord = |site: usize| -> Vec<usize> {
        let mut rem = site;
        extents
            .iter()
            .map(|&e| {
                let c = rem % e;
                rem /= e;
                c
            })
            .collect()
    };
    let strides: Vec<usize> = extents
        .iter()
        .scan(1usize, |acc, &e| {
            let s = *acc;
            *acc *= e;
            Some(s)
        })
        .collect();

    let mut cells = vec![template.clone(); n];
    let mut links = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for site in 0..n {
        let c = coord(site);
        for (k, &(plus, minus)) in slots.iter().enumerate() {
            let e = extents[k];
            if c[k] + 1 < e {
                let (pa, pb) = (plus.expect("plus slot"), minus.expect("minus slot"));
                let other = site + strides[k];
                let eps = template.energies[pa] + delta * (c[k] % 2) as f64;
                cells[site].energies[pa] = eps;
                cells[other].energies[pb] = eps;
                links.push(Link { a: site, b: other, axis: k, port_a: pa, port_b: pb });
            } else if let (Some(pa), Some(pb)) = (plus, minus) {
                if pa != pb {
                    // Unused + port on the upper boundary.
                    cells[site].energies[pa] = template.energies[pa] + delta * (c[k] % 2) as f64;
                }
            }
        }
    }
    for (idx, l) in links.iter().enumerate() {
        adjacency[l.a].push((idx, l.b));
        adjacency[l.b].push((idx, l.a));
    }
    for adj in &mut adjacency {
        adj.sort_by_key(|&(_, nb)| nb);
    }
    for (site, cell) in cells.iter().enumerate() {
        cell.validate()
            .map_err(|e| Error::Topology(format!("cell {site} after port matching: {e}")))?;
    }
    Ok(LatticeTopology { extents: extents.to_vec(), cells, links, adjacency })
}

impl LatticeTopology {
    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn num_sites(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, site: usize) -> &CellSpec {
        &self.cells[site]
    }

    pub fn cells(&self) -> &[CellSpec] {
        &self.cells
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn coord(&self, site: usize) -> Vec<usize> {
        let mut rem = site;
        self.extents
            .iter()
            .map(|&e| {
                let c = rem % e;
                rem /= e;
                c
            })
            .collect()
    }

    pub fn site(&self, coord: &[usize]) -> Option<usize> {
        if coord.len() != self.extents.len() || coord.iter().zip(&self.extents).any(|(c, e)| c >= e) {
            return None;
        }
        Some(coord.iter().zip(&self.extents).rev().fold(0, |acc, (&c, &e)| acc * e + c))
    }

    /// Neighbors of `site` with the connecting link index, sorted by site.
    pub fn neighbors(&self, site: usize) -> &[(usize, usize)] {
        &self.adjacency[site]
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<(usize, &Link)> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(_, nb)| nb == b)
            .map(|&(idx, _)| (idx, &self.links[idx]))
    }

    pub fn chebyshev(&self, a: usize, b: usize) -> usize {
        self.coord(a)
            .iter()
            .zip(self.coord(b))
            .map(|(&x, y)| x.abs_diff(y))
            .max()
            .unwrap_or(0)
    }

    pub fn manhattan(&self, a: usize, b: usize) -> usize {
        self.coord(a).iter().zip(self.coord(b)).map(|(&x, y)| x.abs_diff(y)).sum()
    }

    /// Largest Chebyshev distance between two sites.
    pub fn diameter(&self) -> usize {
        self.extents.iter().map(|e| e - 1).max().unwrap_or(0)
    }

    /// Checks that ports across every link carry equal energies and that no
    /// cell uses a port twice.
    pub fn check_invariants(&self) -> Result<()> {
        for l in &self.links {
            if self.manhattan(l.a, l.b) != 1 {
                return Err(Error::Topology(format!("link {}-{} joins non-neighbors", l.a, l.b)));
            }
            let (ea, eb) = (self.cells[l.a].energies[l.port_a], self.cells[l.b].energies[l.port_b]);
            if ea != eb {
                return Err(Error::Topology(format!(
                    "link {}-{}: port energies {ea} and {eb} differ",
                    l.a, l.b
                )));
            }
        }
        for site in 0..self.num_sites() {
            let mut ports: Vec<usize> = self.adjacency[site]
                .iter()
                .map(|&(idx, _)| self.links[idx].port_of(site).expect("incident link"))
                .collect();
            ports.sort_unstable();
            if ports.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Topology(format!("cell {site} uses a port twice")));
            }
        }
        Ok(())
    }
}

/// JSON description of a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub dimension: usize,
    pub extents: Vec<usize>,
    pub cell_template: CellSpec,
    #[serde(default = "default_spot_radius")]
    pub spot_radius: usize,
}

fn default_spot_radius() -> usize {
    1
}

impl TopologyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.cell_template.validate()?;
        if cfg.spot_radius == 0 {
            return Err(Error::Topology("spot_radius must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<LatticeTopology> {
        build_lattice(self.dimension, &self.extents, &self.cell_template)
    }
}

/// Parses a placement file: a JSON array of coordinate arrays, one per
/// qubit.
pub fn placement_from_json(text: &str, topology: &LatticeTopology) -> Result<Vec<usize>> {
    let coords: Vec<Vec<usize>> = serde_json::from_str(text)?;
    coords
        .iter()
        .enumerate()
        .map(|(q, c)| {
            topology
                .site(c)
                .ok_or_else(|| Error::Topology(format!("qubit {q}: coordinate {c:?} is outside the lattice")))
        })
        .collect()
}

pub fn placement_to_json(placement: &[usize], topology: &LatticeTopology) -> Result<String> {
    let coords: Vec<Vec<usize>> = placement.iter().map(|&s| topology.coord(s)).collect();
    Ok(serde_json::to_string(&coords)?)
}
