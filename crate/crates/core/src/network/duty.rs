//! Duty-ratio accounting.
//!
//! A cell is active from the start of an activation π-pulse to the end of
//! the matching deactivation pulse. The total time is the span during which
//! any cell is active (the union of all active intervals); idle gaps and
//! trailing damping windows are reported through `makespan` only.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::schedule::{EventKind, PulseSchedule};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDuty {
    pub cell: usize,
    pub active_time: f64,
    pub duty_ratio: f64,
    /// `τ_a / R_d`; `None` when the cell is never active or no `τ_a` given.
    pub effective_coherence_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DutyReport {
    pub cells: Vec<CellDuty>,
    pub total_time: f64,
    pub makespan: f64,
    /// Mean `R_d` over the cells holding qubits.
    pub mean_duty_ratio: f64,
}

impl DutyReport {
    pub fn cell(&self, cell: usize) -> Option<&CellDuty> {
        self.cells.iter().find(|c| c.cell == cell)
    }
}

/// Active intervals per cell, in schedule order.
pub fn active_intervals(schedule: &PulseSchedule) -> Result<BTreeMap<usize, Vec<(f64, f64)>>> {
    let mut open: BTreeMap<usize, f64> = BTreeMap::new();
    let mut out: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for e in &schedule.events {
        if let EventKind::PiPulse { cell, from, to, .. } = e.kind {
            if from == 0 {
                if open.insert(cell, e.start_time).is_some() {
                    return Err(Error::ScheduleInvariant(format!("cell {cell} activated twice")));
                }
            } else if to == 0 {
                let start = open
                    .remove(&cell)
                    .ok_or_else(|| Error::ScheduleInvariant(format!("cell {cell} deactivated while idle")))?;
                out.entry(cell).or_default().push((start, e.end_time()));
            }
        }
    }
    if let Some((&cell, _)) = open.iter().next() {
        return Err(Error::ScheduleInvariant(format!("cell {cell} never deactivated")));
    }
    Ok(out)
}

fn union_length(mut intervals: Vec<(f64, f64)>) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in intervals {
        cur = match cur {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = cur {
        total += e - s;
    }
    total
}

/// Duty ratios for every cell touched by `schedule`; the mean runs over the
/// `n_qubits` placed cells.
pub fn duty_ratio_report(schedule: &PulseSchedule, n_qubits: usize, tau_a: Option<f64>) -> Result<DutyReport> {
    if n_qubits != schedule.placement.len() {
        return Err(Error::InvalidParams(format!(
            "schedule places {} qubits, report asked for {n_qubits}",
            schedule.placement.len()
        )));
    }
    if tau_a.is_some_and(|t| !(t > 0.0)) {
        return Err(Error::InvalidParams("tau_a must be positive".into()));
    }
    let intervals = active_intervals(schedule)?;
    let total_time = union_length(intervals.values().flatten().copied().collect());
    let cells: Vec<CellDuty> = schedule
        .cells()
        .into_iter()
        .map(|cell| {
            let active_time: f64 = intervals.get(&cell).map_or(0.0, |v| v.iter().map(|(a, b)| b - a).sum());
            let duty_ratio = if total_time > 0.0 { active_time / total_time } else { 0.0 };
            let effective_coherence_time = tau_a.filter(|_| duty_ratio > 0.0).map(|t| t / duty_ratio);
            CellDuty { cell, active_time, duty_ratio, effective_coherence_time }
        })
        .collect();
    let mean_duty_ratio = if n_qubits == 0 {
        0.0
    } else {
        schedule
            .placement
            .iter()
            .map(|&s| cells.iter().find(|c| c.cell == s).map_or(0.0, |c| c.duty_ratio))
            .sum::<f64>()
            / n_qubits as f64
    };
    Ok(DutyReport { cells, total_time, makespan: schedule.makespan(), mean_duty_ratio })
}
