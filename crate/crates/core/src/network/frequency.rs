//! Pulse-frequency labels with reuse beyond the laser spot.
//!
//! Two ancilla dots conflict when they sit in the same cell or in cells at
//! Chebyshev distance at most `spot_radius`. Labels are handed out greedily
//! (cells in site order, ancillas in index order, smallest free label).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::topology::LatticeTopology;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyMap {
    spot_radius: usize,
    /// `labels[site][i - 1]` for ancilla `i ≥ 1`.
    labels: Vec<Vec<u32>>,
}

impl FrequencyMap {
    pub fn spot_radius(&self) -> usize {
        self.spot_radius
    }

    /// Label of ancilla `i` (≥ 1) of `site`.
    pub fn label(&self, site: usize, ancilla: usize) -> Option<u32> {
        if ancilla == 0 {
            return None;
        }
        self.labels.get(site)?.get(ancilla - 1).copied()
    }

    pub fn label_count(&self) -> usize {
        self.labels.iter().flatten().collect::<BTreeSet<_>>().len()
    }

    pub fn labels(&self) -> &[Vec<u32>] {
        &self.labels
    }
}

/// Sites within Chebyshev distance `r` of `site` (including itself).
pub(crate) fn spot_neighborhood(topology: &LatticeTopology, site: usize, r: usize) -> Vec<usize> {
    let c = topology.coord(site);
    let ranges: Vec<(usize, usize)> = c
        .iter()
        .zip(topology.extents())
        .map(|(&x, &e)| (x.saturating_sub(r), (x + r).min(e - 1)))
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<usize> = ranges.iter().map(|&(lo, _)| lo).collect();
    loop {
        out.push(topology.site(&cur).expect("in range"));
        let mut k = 0;
        loop {
            if k == cur.len() {
                return out;
            }
            if cur[k] < ranges[k].1 {
                cur[k] += 1;
                break;
            }
            cur[k] = ranges[k].0;
            k += 1;
        }
    }
}

pub fn assign_frequencies(topology: &LatticeTopology, spot_radius: usize) -> Result<FrequencyMap> {
    if spot_radius == 0 {
        return Err(Error::InvalidParams("spot_radius must be at least 1".into()));
    }
    let n = topology.num_sites();
    let mut labels: Vec<Vec<u32>> = vec![Vec::new(); n];
    for site in 0..n {
        let mut used = BTreeSet::new();
        for nb in spot_neighborhood(topology, site, spot_radius) {
            used.extend(labels[nb].iter().copied());
        }
        let m = topology.cell(site).m;
        let mut next = 0u32;
        for _ in 1..=m {
            while used.contains(&next) {
                next += 1;
            }
            labels[site].push(next);
            used.insert(next);
        }
    }
    Ok(FrequencyMap { spot_radius, labels })
}

/// Exhaustive pairwise conflict scan.
pub fn check_frequency_map(topology: &LatticeTopology, map: &FrequencyMap) -> Result<()> {
    let n = topology.num_sites();
    if map.labels.len() != n {
        return Err(Error::ScheduleInvariant("frequency map does not cover the lattice".into()));
    }
    for a in 0..n {
        if map.labels[a].len() != topology.cell(a).m {
            return Err(Error::ScheduleInvariant(format!("cell {a}: wrong number of labels")));
        }
        for b in a..n {
            if topology.chebyshev(a, b) > map.spot_radius {
                continue;
            }
            for (i, la) in map.labels[a].iter().enumerate() {
                for (j, lb) in map.labels[b].iter().enumerate() {
                    if (a, i) != (b, j) && la == lb {
                        return Err(Error::ScheduleInvariant(format!(
                            "label {la} shared by cell {a} ancilla {} and cell {b} ancilla {}",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellSpec;
    use crate::network::topology::build_lattice;

    #[test]
    fn single_cell_gets_distinct_labels() {
        let t = build_lattice(1, &[1], &CellSpec::uniform(7).unwrap()).unwrap();
        let map = assign_frequencies(&t, 1).unwrap();
        assert_eq!(map.label_count(), 7);
        assert_eq!(map.label(0, 0), None);
        assert_eq!(map.label(0, 7), Some(6));
    }

    #[test]
    fn maps_are_conflict_free() {
        let tpl = CellSpec::uniform(9).unwrap();
        for l in 2..=8 {
            let t = build_lattice(2, &[l, l], &tpl).unwrap();
            for r in 1..=3 {
                check_frequency_map(&t, &assign_frequencies(&t, r).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn label_count_saturates_with_lattice_size() {
        let tpl = CellSpec::uniform(9).unwrap();
        let counts: Vec<usize> = [6, 8, 12, 16]
            .iter()
            .map(|&l| assign_frequencies(&build_lattice(2, &[l, l], &tpl).unwrap(), 1).unwrap().label_count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn large_spot_makes_everything_distinct() {
        let tpl = CellSpec::uniform(9).unwrap();
        let t = build_lattice(2, &[4, 3], &tpl).unwrap();
        let map = assign_frequencies(&t, t.diameter()).unwrap();
        assert_eq!(map.label_count(), 12 * 9);
    }

    #[test]
    fn detects_conflicts_and_rejects_zero_radius() {
        let tpl = CellSpec::uniform(9).unwrap();
        let t = build_lattice(2, &[3, 3], &tpl).unwrap();
        assert!(assign_frequencies(&t, 0).is_err());
        let mut map = assign_frequencies(&t, 1).unwrap();
        map.labels[1][0] = map.labels[0][0];
        assert!(check_frequency_map(&t, &map).is_err());
    }
}
