//! Timed pulse schedules, their JSON form and an independent validator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::Axis;
use crate::network::frequency::{assign_frequencies, FrequencyMap};
use crate::network::topology::LatticeTopology;

/// Absolute slack used when comparing event times.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// Transfers ancilla population `from → to`; `spin` restricts the pulse
    /// to one qubit value.
    PiPulse { cell: usize, from: usize, to: usize, spin: Option<u8> },
    GatingWindow { link: usize, cell_a: usize, cell_b: usize, theta: f64 },
    RotationWindow { cell: usize, axis: Axis, theta: f64 },
    PhaseWindow { cell: usize, phi: f64 },
    DampingWindow { cell: usize },
    Readout { cell: usize },
}

impl EventKind {
    /// Primary cell of the event.
    pub fn cell(&self) -> usize {
        match *self {
            EventKind::PiPulse { cell, .. }
            | EventKind::RotationWindow { cell, .. }
            | EventKind::PhaseWindow { cell, .. }
            | EventKind::DampingWindow { cell }
            | EventKind::Readout { cell } => cell,
            EventKind::GatingWindow { cell_a, .. } => cell_a,
        }
    }

    pub fn cells(&self) -> Vec<usize> {
        match *self {
            EventKind::GatingWindow { cell_a, cell_b, .. } => vec![cell_a, cell_b],
            _ => vec![self.cell()],
        }
    }

    /// Excited dot addressed by a π-pulse.
    pub fn ancilla(&self) -> Option<usize> {
        match *self {
            EventKind::PiPulse { from, to, .. } => Some(from.max(to)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PiPulse { .. } => "pi_pulse",
            EventKind::GatingWindow { .. } => "gating_window",
            EventKind::RotationWindow { .. } => "rotation_window",
            EventKind::PhaseWindow { .. } => "phase_window",
            EventKind::DampingWindow { .. } => "damping_window",
            EventKind::Readout { .. } => "readout",
        }
    }

    fn is_window(&self) -> bool {
        matches!(
            self,
            EventKind::GatingWindow { .. }
                | EventKind::RotationWindow { .. }
                | EventKind::PhaseWindow { .. }
                | EventKind::Readout { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseEvent {
    pub start_time: f64,
    pub duration: f64,
    pub kind: EventKind,
    pub frequency_label: Option<u32>,
}

impl PulseEvent {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub qubits: usize,
    /// Site holding each logical qubit.
    pub placement: Vec<usize>,
    pub spot_radius: usize,
    pub events: Vec<PulseEvent>,
}

impl PulseSchedule {
    pub fn empty(placement: Vec<usize>, spot_radius: usize) -> Self {
        Self { qubits: placement.len(), placement, spot_radius, events: Vec::new() }
    }

    /// Time of the last event end.
    pub fn makespan(&self) -> f64 {
        self.events.iter().map(PulseEvent::end_time).fold(0.0, f64::max)
    }

    /// Cells touched by events or holding qubits, ascending.
    pub fn cells(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .placement
            .iter()
            .copied()
            .chain(self.events.iter().flat_map(|e| e.kind.cells()))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScheduleFile {
            qubits: self.qubits,
            placement: self.placement.clone(),
            spot_radius: self.spot_radius,
            events: self.events.iter().map(EventRecord::from_event).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScheduleFile = serde_json::from_str(text)?;
        let events = file
            .events
            .iter()
            .enumerate()
            .map(|(k, r)| r.to_event().map_err(|m| Error::ScheduleInvariant(format!("event {k}: {m}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { qubits: file.qubits, placement: file.placement, spot_radius: file.spot_radius, events })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    qubits: usize,
    placement: Vec<usize>,
    spot_radius: usize,
    events: Vec<EventRecord>,
}

/// Flat JSON record of one event; times are decimal strings.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    start_time: String,
    duration: String,
    kind: String,
    cell: usize,
    ancilla: Option<usize>,
    theta: Option<f64>,
    phi: Option<f64>,
    frequency_label: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    from: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spin: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    link: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<Axis>,
}

impl EventRecord {
    fn from_event(e: &PulseEvent) -> Self {
        let mut r = EventRecord {
            start_time: format!("{}", e.start_time),
            duration: format!("{}", e.duration),
            kind: e.kind.name().to_string(),
            cell: e.kind.cell(),
            ancilla: e.kind.ancilla(),
            theta: None,
            phi: None,
            frequency_label: e.frequency_label,
            from: None,
            to: None,
            spin: None,
            partner: None,
            link: None,
            axis: None,
        };
        match e.kind {
            EventKind::PiPulse { from, to, spin, .. } => {
                r.from = Some(from);
                r.to = Some(to);
                r.spin = spin;
            }
            EventKind::GatingWindow { link, cell_b, theta, .. } => {
                r.link = Some(link);
                r.partner = Some(cell_b);
                r.theta = Some(theta);
            }
            EventKind::RotationWindow { axis, theta, .. } => {
                r.axis = Some(axis);
                r.theta = Some(theta);
            }
            EventKind::PhaseWindow { phi, .. } => r.phi = Some(phi),
            EventKind::DampingWindow { .. } | EventKind::Readout { .. } => {}
        }
        r
    }

    fn to_event(&self) -> std::result::Result<PulseEvent, String> {
        let time = |s: &str, what: &str| -> std::result::Result<f64, String> {
            s.trim().parse::<f64>().map_err(|_| format!("{what} {s:?} is not a decimal number"))
        };
        let need = |v: Option<f64>, what: &str| v.ok_or_else(|| format!("{} needs {what}", self.kind));
        let needu = |v: Option<usize>, what: &str| v.ok_or_else(|| format!("{} needs {what}", self.kind));
        let cell = self.cell;
        let kind = match self.kind.as_str() {
            "pi_pulse" => {
                let from = needu(self.from, "from")?;
                let to = needu(self.to, "to")?;
                if self.ancilla.is_some_and(|a| a != from.max(to)) {
                    return Err("ancilla disagrees with from/to".into());
                }
                EventKind::PiPulse { cell, from, to, spin: self.spin }
            }
            "gating_window" => EventKind::GatingWindow {
                link: needu(self.link, "link")?,
                cell_a: cell,
                cell_b: needu(self.partner, "partner")?,
                theta: need(self.theta, "theta")?,
            },
            "rotation_window" => EventKind::RotationWindow {
                cell,
                axis: self.axis.ok_or("rotation_window needs axis")?,
                theta: need(self.theta, "theta")?,
            },
            "phase_window" => EventKind::PhaseWindow { cell, phi: need(self.phi, "phi")? },
            "damping_window" => EventKind::DampingWindow { cell },
            "readout" => EventKind::Readout { cell },
            other => return Err(format!("unknown event kind {other:?}")),
        };
        Ok(PulseEvent {
            start_time: time(&self.start_time, "start_time")?,
            duration: time(&self.duration, "duration")?,
            kind,
            frequency_label: self.frequency_label,
        })
    }
}

/// Per-cell bookkeeping while replaying a schedule.
#[derive(Clone, Debug, Default)]
struct CellTrack {
    level: usize,
    /// The current excitation came from a spin-selective pulse.
    selective: bool,
    session_start: Option<f64>,
    window_time: f64,
    last_window_end: f64,
    last_pulse_end: f64,
    /// `(deactivation time, required duration)` awaiting a damping window.
    pending_damping: Option<(f64, f64)>,
    busy_until: f64,
}

fn fail<T>(k: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::ScheduleInvariant(format!("event {k}: {}", msg.into())))
}

/// Checks every schedule invariant against `topology`; independent of the
/// compiler.
pub fn validate_schedule(schedule: &PulseSchedule, topology: &LatticeTopology) -> Result<()> {
    let n = topology.num_sites();
    if schedule.placement.len() != schedule.qubits {
        return Err(Error::ScheduleInvariant(format!(
            "placement lists {} sites for {} qubits",
            schedule.placement.len(),
            schedule.qubits
        )));
    }
    let mut seen = vec![false; n];
    for (q, &s) in schedule.placement.iter().enumerate() {
        if s >= n {
            return Err(Error::ScheduleInvariant(format!("qubit {q} placed off the lattice")));
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::ScheduleInvariant(format!("site {s} holds two qubits")));
        }
    }
    let freq = assign_frequencies(topology, schedule.spot_radius)
        .map_err(|e| Error::ScheduleInvariant(e.to_string()))?;

    let mut tracks = vec![CellTrack::default(); n];
    let mut sessions: Vec<(f64, f64)> = Vec::new();
    let mut prev_start = 0.0;
    for (k, e) in schedule.events.iter().enumerate() {
        if !(e.start_time.is_finite() && e.duration.is_finite()) || e.start_time < 0.0 || e.duration < 0.0 {
            return fail(k, "times must be finite and non-negative");
        }
        if e.start_time < prev_start {
            return fail(k, "events are not sorted by start time");
        }
        prev_start = e.start_time;
        if let Some(&c) = e.kind.cells().iter().find(|&&c| c >= n) {
            return fail(k, format!("cell {c} is off the lattice"));
        }
        let t0 = e.start_time;
        match e.kind {
            EventKind::PiPulse { cell, from, to, spin } => {
                let m = topology.cell(cell).m;
                if from > m || to > m || from == to {
                    return fail(k, format!("transfer {from}->{to} invalid for m = {m}"));
                }
                if e.frequency_label != freq.label(cell, from.max(to)) {
                    return fail(k, "frequency label does not match the assigned label");
                }
                let tr = &mut tracks[cell];
                if t0 < tr.last_pulse_end - TIME_EPS || t0 < tr.last_window_end - TIME_EPS {
                    return fail(k, format!("cell {cell} pulse overlaps its previous event"));
                }
                if tr.level != from {
                    return fail(k, format!("cell {cell} is in level {}, pulse starts from {from}", tr.level));
                }
                let measurement_path = (from == 0 && to == 2) || (from == 2 && to == 0) || (from == 2 && to == 5) || (from == 5 && to == 2);
                if spin.is_some() && !((from, to) == (0, 2) || (from, to) == (2, 0)) {
                    return fail(k, "spin-selective pulses only shelve 0 <-> 2");
                }
                if spin.is_some_and(|s| s > 1) {
                    return fail(k, "spin selector must be 0 or 1");
                }
                if from == 0 {
                    if tr.pending_damping.is_some() || t0 < tr.busy_until - TIME_EPS {
                        return fail(k, format!("cell {cell} reactivated before its damping window ended"));
                    }
                    tr.selective = spin.is_some();
                    tr.session_start = Some(t0);
                    tr.window_time = 0.0;
                } else if to == 0 {
                    if spin.is_some() != tr.selective {
                        return fail(k, "deactivation selectivity differs from activation");
                    }
                    let start = tr.session_start.expect("active session");
                    sessions.push((start, e.end_time()));
                    tr.pending_damping = Some((e.end_time(), tr.window_time));
                    tr.session_start = None;
                } else if !(measurement_path && tr.selective) {
                    return fail(k, format!("transfer {from}->{to} is not allowed"));
                }
                tr.level = to;
                tr.last_pulse_end = e.end_time();
            }
            EventKind::DampingWindow { cell } => {
                let tr = &mut tracks[cell];
                match tr.pending_damping.take() {
                    Some((at, need)) => {
                        if (t0 - at).abs() > TIME_EPS {
                            return fail(k, format!("cell {cell} damping starts at {t0}, deactivation ended at {at}"));
                        }
                        if e.duration < need - TIME_EPS {
                            return fail(k, format!("cell {cell} damping lasts {} < {need}", e.duration));
                        }
                        tr.busy_until = e.end_time();
                    }
                    None => return fail(k, format!("cell {cell} has no deactivation to damp")),
                }
                if e.frequency_label.is_some() {
                    return fail(k, "damping windows carry no frequency label");
                }
            }
            _ => {
                if e.frequency_label.is_some() {
                    return fail(k, "windows carry no frequency label");
                }
                let required: Vec<(usize, usize)> = match e.kind {
                    EventKind::RotationWindow { cell, axis, .. } => vec![(cell, axis.role().index().expect("fixed role"))],
                    EventKind::PhaseWindow { cell, .. } => vec![(cell, 1)],
                    EventKind::Readout { cell } => vec![(cell, 5)],
                    EventKind::GatingWindow { link, cell_a, cell_b, .. } => {
                        let l = match topology.links().get(link) {
                            Some(l) => l,
                            None => return fail(k, format!("link {link} does not exist")),
                        };
                        match (l.port_of(cell_a), l.port_of(cell_b)) {
                            (Some(pa), Some(pb)) if cell_a != cell_b => vec![(cell_a, pa), (cell_b, pb)],
                            _ => return fail(k, format!("link {link} does not join {cell_a} and {cell_b}")),
                        }
                    }
                    _ => unreachable!("pulses and damping handled above"),
                };
                let readout = matches!(e.kind, EventKind::Readout { .. });
                for (cell, level) in required {
                    let tr = &mut tracks[cell];
                    if tr.level != level {
                        return fail(k, format!("{} needs cell {cell} in level {level}, found {}", e.kind.name(), tr.level));
                    }
                    if tr.selective != readout {
                        return fail(k, format!("{} on cell {cell} has the wrong activation path", e.kind.name()));
                    }
                    if t0 < tr.last_pulse_end - TIME_EPS || t0 < tr.last_window_end - TIME_EPS {
                        return fail(k, format!("{} on cell {cell} overlaps a previous event", e.kind.name()));
                    }
                    tr.window_time += e.duration;
                    tr.last_window_end = e.end_time();
                }
            }
        }
        debug_assert!(e.kind.is_window() || e.kind.ancilla().is_some() || matches!(e.kind, EventKind::DampingWindow { .. }));
    }
    for (cell, tr) in tracks.iter().enumerate() {
        if tr.level != 0 {
            return Err(Error::ScheduleInvariant(format!("cell {cell} ends in level {}", tr.level)));
        }
        if tr.pending_damping.is_some() {
            return Err(Error::ScheduleInvariant(format!("cell {cell} ends without its damping window")));
        }
    }
    check_active_cap(&sessions)?;
    check_label_reuse(schedule, topology, &freq)?;
    Ok(())
}

/// At most two cells may be active at once.
fn check_active_cap(sessions: &[(f64, f64)]) -> Result<()> {
    let mut edges: Vec<(f64, i32)> = sessions.iter().flat_map(|&(a, b)| [(a, 1), (b, -1)]).collect();
    // Closing edges sort before opening edges at equal times.
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut active = 0;
    for (t, d) in edges {
        active += d;
        if active > 2 {
            return Err(Error::ScheduleInvariant(format!("{active} cells active at t = {t}")));
        }
    }
    Ok(())
}

/// No two overlapping pulses on different dots within one laser spot share
/// a label.
fn check_label_reuse(schedule: &PulseSchedule, topology: &LatticeTopology, freq: &FrequencyMap) -> Result<()> {
    let pulses: Vec<&PulseEvent> = schedule.events.iter().filter(|e| e.kind.ancilla().is_some()).collect();
    for (i, a) in pulses.iter().enumerate() {
        for b in &pulses[i + 1..] {
            if b.start_time > a.end_time() + TIME_EPS {
                break;
            }
            let overlap = b.start_time <= a.end_time() + TIME_EPS && a.start_time <= b.end_time() + TIME_EPS;
            let same_dot = a.kind.cell() == b.kind.cell() && a.kind.ancilla() == b.kind.ancilla();
            if overlap
                && !same_dot
                && a.frequency_label == b.frequency_label
                && topology.chebyshev(a.kind.cell(), b.kind.cell()) <= freq.spot_radius()
            {
                return Err(Error::ScheduleInvariant(format!(
                    "simultaneous pulses on cells {} and {} share label {:?}",
                    a.kind.cell(),
                    b.kind.cell(),
                    a.frequency_label
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellSpec;
    use crate::gates::GateKind;
    use crate::network::circuit::Circuit;
    use crate::network::compile::{compile_circuit, CompileOptions};
    use crate::network::topology::build_lattice;

    fn setup() -> (LatticeTopology, PulseSchedule) {
        let t = build_lattice(2, &[3, 3], &CellSpec::uniform(9).unwrap()).unwrap();
        let mut c = Circuit::new(2);
        c.push(GateKind::rx(0.5), &[0]).unwrap();
        c.push_cnot(0, 1).unwrap();
        c.push(GateKind::Phase { phi: 0.3 }, &[1]).unwrap();
        c.push(GateKind::Measure, &[1]).unwrap();
        let s = compile_circuit(&c, &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
        (t, s)
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (t, s) = setup();
        let text = s.to_json().unwrap();
        assert!(text.contains("\"start_time\": \""));
        let back = PulseSchedule::from_json(&text).unwrap();
        assert_eq!(back, s);
        validate_schedule(&back, &t).unwrap();
    }

    #[test]
    fn json_rejects_unknown_kinds_and_fields() {
        let (_, s) = setup();
        let text = s.to_json().unwrap();
        assert!(PulseSchedule::from_json(&text.replacen("rotation_window", "laser_window", 1)).is_err());
        assert!(PulseSchedule::from_json(&text.replacen("\"cell\"", "\"site\"", 1)).is_err());
        assert!(PulseSchedule::from_json(&text.replacen("\"start_time\": \"0\"", "\"start_time\": \"soon\"", 1)).is_err());
    }

    #[test]
    fn detects_missing_damping() {
        let (t, mut s) = setup();
        let k = s.events.iter().position(|e| matches!(e.kind, EventKind::DampingWindow { .. })).unwrap();
        s.events.remove(k);
        assert!(matches!(validate_schedule(&s, &t), Err(Error::ScheduleInvariant(_))));
    }

    #[test]
    fn detects_three_active_cells() {
        let (t, mut s) = setup();
        let label = |cell: usize, i: usize| assign_frequencies(&t, 1).unwrap().label(cell, i);
        let end = s.makespan() + 1.0;
        for cell in [4, 5, 6] {
            s.events.push(PulseEvent { start_time: end, duration: 0.0, kind: EventKind::PiPulse { cell, from: 0, to: 2, spin: None }, frequency_label: label(cell, 2) });
        }
        for cell in [4, 5, 6] {
            s.events.push(PulseEvent { start_time: end + 1.0, duration: 0.0, kind: EventKind::PiPulse { cell, from: 2, to: 0, spin: None }, frequency_label: label(cell, 2) });
        }
        for cell in [4, 5, 6] {
            s.events.push(PulseEvent { start_time: end + 1.0, duration: 0.0, kind: EventKind::DampingWindow { cell }, frequency_label: None });
        }
        match validate_schedule(&s, &t) {
            Err(Error::ScheduleInvariant(m)) => assert!(m.contains("cells active"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_wrong_label_and_unsorted_events() {
        let (t, mut s) = setup();
        let mut bad = s.clone();
        bad.events[0].frequency_label = Some(999);
        assert!(validate_schedule(&bad, &t).is_err());
        s.events.swap(0, 3);
        assert!(validate_schedule(&s, &t).is_err());
    }

    #[test]
    fn empty_schedule_is_valid() {
        let t = build_lattice(1, &[2], &CellSpec::uniform(6).unwrap()).unwrap();
        validate_schedule(&PulseSchedule::empty(vec![1], 1), &t).unwrap();
        assert!(validate_schedule(&PulseSchedule::empty(vec![1, 1], 1), &t).is_err());
    }
}
