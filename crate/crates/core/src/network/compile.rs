//! Lowering of gate circuits to serial π-pulse schedules.
//!
//! Each gate becomes activation π-pulse(s), one window, deactivation
//! π-pulse(s) and a damping window as long as the gate window. Only one gate
//! is active at a time; a cell is not reactivated before its damping window
//! has ended.

use serde::{Deserialize, Serialize};

use crate::cell::Role;
use crate::error::{Error, Result};
use crate::gates::{exact_swap_sequence, swap_time_for_theta, GateKind, StepTarget, SHELF_INTERMEDIATE, SHELF_READOUT, SHELVED_SPIN};
use crate::network::circuit::Circuit;
use crate::network::frequency::{assign_frequencies, FrequencyMap};
use crate::network::routing::route_swap_chain;
use crate::network::schedule::{validate_schedule, EventKind, PulseEvent, PulseSchedule};
use crate::network::topology::LatticeTopology;

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    #[default]
    Serial,
    /// Reserved; rejected by the compiler.
    Parallel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompileOptions {
    /// Exchange energy `J` of a gating window.
    pub j: f64,
    /// Rotation rate: window time is `θ / rotation_rate`.
    pub rotation_rate: f64,
    pub phase_rate: f64,
    pub pi_pulse_duration: f64,
    pub readout_duration: f64,
    pub spot_radius: usize,
    pub mode: ScheduleMode,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            j: 1.0,
            rotation_rate: 1.0,
            phase_rate: 1.0,
            pi_pulse_duration: 0.0,
            readout_duration: 1.0,
            spot_radius: 1,
            mode: ScheduleMode::Serial,
        }
    }
}

impl CompileOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [("j", self.j), ("rotation_rate", self.rotation_rate), ("phase_rate", self.phase_rate)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("pi_pulse_duration", self.pi_pulse_duration), ("readout_duration", self.readout_duration)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.spot_radius == 0 {
            return Err(Error::InvalidParams("spot_radius must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rotation_time(&self, theta: f64) -> f64 {
        theta.rem_euclid(4.0 * PI) / self.rotation_rate
    }

    pub fn swap_time(&self, theta: f64) -> f64 {
        swap_time_for_theta(self.j, theta.rem_euclid(2.0 * PI))
    }

    pub fn phase_time(&self, phi: f64) -> f64 {
        phi.rem_euclid(2.0 * PI) / self.phase_rate
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledCircuit {
    pub schedule: PulseSchedule,
    /// Full routing swaps inserted for remote two-qubit gates.
    pub routing_swaps: usize,
}

struct Emitter<'a> {
    topology: &'a LatticeTopology,
    freq: FrequencyMap,
    opts: &'a CompileOptions,
    events: Vec<PulseEvent>,
    cursor: f64,
    /// Per site: end of the latest damping window.
    ready_at: Vec<f64>,
}

impl Emitter<'_> {
    fn pulse(&mut self, t: f64, cell: usize, from: usize, to: usize, spin: Option<u8>) {
        self.events.push(PulseEvent {
            start_time: t,
            duration: self.opts.pi_pulse_duration,
            kind: EventKind::PiPulse { cell, from, to, spin },
            frequency_label: self.freq.label(cell, from.max(to)),
        });
    }

    fn plain(&mut self, t: f64, duration: f64, kind: EventKind) {
        self.events.push(PulseEvent { start_time: t, duration, kind, frequency_label: None });
    }

    /// Activate `(cell, ancilla)` pairs together, run `window`, deactivate,
    /// damp.
    fn session(&mut self, targets: &[(usize, usize)], duration: f64, window: EventKind) {
        let p = self.opts.pi_pulse_duration;
        let t0 = targets.iter().map(|&(c, _)| self.ready_at[c]).fold(self.cursor, f64::max);
        for &(c, i) in targets {
            self.pulse(t0, c, 0, i, None);
        }
        self.plain(t0 + p, duration, window);
        let t_off = t0 + p + duration;
        for &(c, i) in targets {
            self.pulse(t_off, c, i, 0, None);
        }
        let t_damp = t_off + p;
        for &(c, _) in targets {
            self.plain(t_damp, duration, EventKind::DampingWindow { cell: c });
            self.ready_at[c] = t_damp + duration;
        }
        self.cursor = t_damp;
    }

    fn role_ancilla(&self, cell: usize, role: Role) -> std::result::Result<usize, String> {
        self.topology
            .cell(cell)
            .ancilla_for(role)
            .ok_or_else(|| format!("cell {cell} has no {role:?} ancilla"))
    }

    fn single(&mut self, gate: GateKind, cell: usize) -> std::result::Result<(), String> {
        match gate {
            GateKind::Rot { axis, theta } => {
                let i = self.role_ancilla(cell, axis.role())?;
                let d = self.opts.rotation_time(theta);
                self.session(&[(cell, i)], d, EventKind::RotationWindow { cell, axis, theta });
            }
            GateKind::Phase { phi } => {
                let i = self.role_ancilla(cell, Role::Phase)?;
                let d = self.opts.phase_time(phi);
                self.session(&[(cell, i)], d, EventKind::PhaseWindow { cell, phi });
            }
            GateKind::Measure => self.measure(cell)?,
            other => return Err(format!("{other} is not a single-cell gate")),
        }
        Ok(())
    }

    fn adjacent_swap(&mut self, a: usize, b: usize, theta: f64) -> std::result::Result<(), String> {
        let (link, l) = self
            .topology
            .link_between(a, b)
            .ok_or_else(|| format!("cells {a} and {b} are not linked"))?;
        let (pa, pb) = (l.port_of(a).expect("endpoint"), l.port_of(b).expect("endpoint"));
        let d = self.opts.swap_time(theta);
        self.session(&[(a, pa), (b, pb)], d, EventKind::GatingWindow { link, cell_a: a, cell_b: b, theta });
        Ok(())
    }

    fn measure(&mut self, cell: usize) -> std::result::Result<(), String> {
        if self.topology.cell(cell).m < SHELF_READOUT {
            return Err(format!("cell {cell} has no readout ancilla"));
        }
        let p = self.opts.pi_pulse_duration;
        let r = self.opts.readout_duration;
        let spin = Some(SHELVED_SPIN as u8);
        let t0 = self.ready_at[cell].max(self.cursor);
        self.pulse(t0, cell, 0, SHELF_INTERMEDIATE, spin);
        self.pulse(t0 + p, cell, SHELF_INTERMEDIATE, SHELF_READOUT, None);
        self.plain(t0 + 2.0 * p, r, EventKind::Readout { cell });
        let t1 = t0 + 2.0 * p + r;
        self.pulse(t1, cell, SHELF_READOUT, SHELF_INTERMEDIATE, None);
        self.pulse(t1 + p, cell, SHELF_INTERMEDIATE, 0, spin);
        let t_damp = t1 + 2.0 * p;
        self.plain(t_damp, r, EventKind::DampingWindow { cell });
        self.ready_at[cell] = t_damp + r;
        self.cursor = t_damp;
        Ok(())
    }

    /// Exact SWAP between linked cells `a` and `b`.
    fn full_swap(&mut self, a: usize, b: usize) -> std::result::Result<(), String> {
        for step in exact_swap_sequence() {
            match step.cells {
                StepTarget::First => self.single(step.gate, a)?,
                StepTarget::Second => self.single(step.gate, b)?,
                StepTarget::Pair => match step.gate {
                    GateKind::Swap { theta } => self.adjacent_swap(a, b, theta)?,
                    other => return Err(format!("unexpected pair step {other}")),
                },
            }
        }
        Ok(())
    }
}

/// Compiles `circuit` for qubits placed at `placement[q]` and validates the
/// result.
pub fn compile_circuit(
    circuit: &Circuit,
    topology: &LatticeTopology,
    placement: &[usize],
    opts: &CompileOptions,
) -> Result<CompiledCircuit> {
    opts.validate()?;
    if opts.mode != ScheduleMode::Serial {
        return Err(Error::InvalidParams("only serial scheduling is supported".into()));
    }
    circuit.validate()?;
    if placement.len() != circuit.num_qubits {
        return Err(Error::Topology(format!(
            "placement has {} sites for {} qubits",
            placement.len(),
            circuit.num_qubits
        )));
    }
    let n = topology.num_sites();
    let mut used = vec![false; n];
    for (q, &s) in placement.iter().enumerate() {
        if s >= n {
            return Err(Error::Topology(format!("qubit {q} placed on missing site {s}")));
        }
        if std::mem::replace(&mut used[s], true) {
            return Err(Error::Topology(format!("site {s} holds two qubits")));
        }
    }

    let mut em = Emitter {
        topology,
        freq: assign_frequencies(topology, opts.spot_radius)?,
        opts,
        events: Vec::new(),
        cursor: 0.0,
        ready_at: vec![0.0; n],
    };
    let mut routing_swaps = 0;
    for (index, inst) in circuit.instructions.iter().enumerate() {
        let fail = |reason: String| Error::Compile { index, reason };
        match inst.gate {
            GateKind::Swap { theta } => {
                let (a, b) = (placement[inst.qubits[0]], placement[inst.qubits[1]]);
                let chain = route_swap_chain(topology, a, b)?;
                for &(x, y) in &chain.forward {
                    em.full_swap(x, y).map_err(fail)?;
                }
                em.adjacent_swap(chain.interaction.0, chain.interaction.1, theta).map_err(fail)?;
                for &(x, y) in &chain.restore {
                    em.full_swap(x, y).map_err(fail)?;
                }
                routing_swaps += chain.swap_count();
            }
            gate => em.single(gate, placement[inst.qubits[0]]).map_err(fail)?,
        }
    }
    let mut events = em.events;
    events.sort_by(|x, y| x.start_time.total_cmp(&y.start_time));
    let schedule = PulseSchedule { qubits: circuit.num_qubits, placement: placement.to_vec(), spot_radius: opts.spot_radius, events };
    validate_schedule(&schedule, topology)?;
    log::debug!("compiled {} instructions into {} events", circuit.instructions.len(), schedule.events.len());
    Ok(CompiledCircuit { schedule, routing_swaps })
}
