//! Qubit-level replay of pulse schedules, and a direct gate-by-gate
//! state-vector reference.
//!
//! The register holds one qubit per cell touched by the schedule, ordered by
//! site index with the first cell as the slowest factor. π-pulses and
//! damping windows leave the qubits alone; windows apply their gate, and a
//! readout is a projective measurement of the qubit value. With a noise
//! model each rotation or gating window is replaced by the damped channel of
//! its cell(s), ancillas traced out.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::decoherence::{gated_channel, Superoperator};
use crate::error::{Error, Result};
use crate::gates::{exchange_hamiltonian, rotation_unitary, swap_unitary, Axis, GateKind};
use crate::linalg::{fidelity, partial_trace, DensityMatrix, Ket, C64, ZERO};
use crate::network::circuit::Circuit;
use crate::network::schedule::{validate_schedule, EventKind, PulseSchedule};
use crate::network::topology::LatticeTopology;

use std::f64::consts::PI;

/// Largest register the dense simulator accepts.
pub const MAX_REGISTER_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub tau_a: f64,
    /// Integration step inside each window.
    pub dt: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_a > 0.0) || !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("need tau_a > 0 and dt > 0, got {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReadoutRecord {
    pub time: f64,
    pub cell: usize,
    /// Logical qubit held by the cell at readout time, if any.
    pub qubit: Option<usize>,
    pub outcome: u8,
    pub probabilities: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct ScheduleRun {
    /// Cells in register order.
    pub register: Vec<usize>,
    pub final_state: DensityMatrix,
    /// Reduced state of the placed qubits, qubit 0 slowest.
    pub logical_state: DensityMatrix,
    pub readouts: Vec<ReadoutRecord>,
    /// Fidelity of the logical state against a noiseless replay with the
    /// same outcomes; 1 in noiseless mode, 0 when the noiseless replay
    /// cannot produce those outcomes.
    pub fidelity: f64,
}

impl ScheduleRun {
    /// Outcomes in readout order.
    pub fn outcomes(&self) -> Vec<u8> {
        self.readouts.iter().map(|r| r.outcome).collect()
    }
}

fn offsets(positions: &[usize], n: usize) -> (Vec<usize>, usize) {
    let masks: Vec<usize> = positions.iter().map(|&p| 1usize << (n - 1 - p)).collect();
    let k = masks.len();
    let offs = (0..1usize << k)
        .map(|a| (0..k).filter(|t| a >> (k - 1 - t) & 1 == 1).map(|t| masks[t]).sum())
        .collect();
    (offs, masks.iter().fold(0, |x, m| x | m))
}

/// `m ← U·m` with `U` acting on the register `positions` (first slowest).
fn left_apply(m: &mut DMatrix<C64>, u: &DMatrix<C64>, positions: &[usize], n: usize) {
    let (offs, all) = offsets(positions, n);
    let k = offs.len();
    let mut v = vec![ZERO; k];
    for base in (0..m.nrows()).filter(|b| b & all == 0) {
        for col in 0..m.ncols() {
            for (a, &o) in offs.iter().enumerate() {
                v[a] = m[(base + o, col)];
            }
            for (a, &o) in offs.iter().enumerate() {
                m[(base + o, col)] = (0..k).map(|b| u[(a, b)] * v[b]).sum();
            }
        }
    }
}

fn conjugate(rho: &mut DMatrix<C64>, u: &DMatrix<C64>, positions: &[usize], n: usize) {
    left_apply(rho, u, positions, n);
    *rho = rho.adjoint();
    left_apply(rho, u, positions, n);
}

/// Applies a local channel block by block.
fn apply_channel(rho: &mut DMatrix<C64>, s: &Superoperator, positions: &[usize], n: usize) {
    let (offs, all) = offsets(positions, n);
    let k = offs.len();
    let bases: Vec<usize> = (0..rho.nrows()).filter(|b| b & all == 0).collect();
    let mut block = DMatrix::<C64>::zeros(k, k);
    for &r in &bases {
        for &c in &bases {
            for j in 0..k {
                for i in 0..k {
                    block[(i, j)] = rho[(r + offs[i], c + offs[j])];
                }
            }
            let out = s.apply(&block);
            for j in 0..k {
                for i in 0..k {
                    rho[(r + offs[i], c + offs[j])] = out[(i, j)];
                }
            }
        }
    }
}

/// Probability of reading 0 on `position`.
fn prob_zero(diag: impl Fn(usize) -> f64, dim: usize, position: usize, n: usize) -> f64 {
    let mask = 1usize << (n - 1 - position);
    (0..dim).filter(|i| i & mask == 0).map(diag).sum::<f64>().clamp(0.0, 1.0)
}

fn check_outcome(outcome: u8, probs: [f64; 2]) -> Result<f64> {
    let p = probs[outcome as usize];
    if p <= 1e-14 {
        return Err(Error::UnsupportedState(format!("outcome {outcome} has probability {p:e}")));
    }
    Ok(p)
}

/// Reorders qubit subsystems: new subsystem `j` is old subsystem `perm[j]`.
pub fn permute_qubits(rho: &DMatrix<C64>, perm: &[usize]) -> DMatrix<C64> {
    let n = perm.len();
    let dim = 1usize << n;
    let map = |i: usize| -> usize {
        (0..n).fold(0, |acc, j| {
            let bit = i >> (n - 1 - perm[j]) & 1;
            acc | bit << (n - 1 - j)
        })
    };
    let idx: Vec<usize> = (0..dim).map(map).collect();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(idx[i], idx[j])] = rho[(i, j)];
        }
    }
    out
}

type ChannelKey = (u8, u64, u64);

/// A validated schedule with its noisy channels built once, ready to be
/// replayed any number of times.
pub struct ScheduleSimulator<'a> {
    schedule: &'a PulseSchedule,
    initial: Vec<Ket>,
    register: Vec<usize>,
    n: usize,
    noise: Option<NoiseModel>,
    cache: HashMap<ChannelKey, Superoperator>,
}

fn rotation_key(axis: Axis, theta: f64, duration: f64) -> ChannelKey {
    (axis as u8, theta.to_bits(), duration.to_bits())
}

fn gating_key(theta: f64, duration: f64) -> ChannelKey {
    (3, theta.to_bits(), duration.to_bits())
}

impl<'a> ScheduleSimulator<'a> {
    /// Validates `schedule` and, with a noise model, integrates the channel
    /// of every distinct window.
    pub fn new(
        schedule: &'a PulseSchedule,
        topology: &LatticeTopology,
        initial: &[Ket],
        noise: Option<&NoiseModel>,
    ) -> Result<Self> {
        validate_schedule(schedule, topology)?;
        if initial.len() != schedule.qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} initial states for {} qubits",
                initial.len(),
                schedule.qubits
            )));
        }
        if let Some(k) = initial.iter().find(|k| k.dim() != 2 || !k.is_normalized()) {
            return Err(Error::UnsupportedState(format!(
                "initial qubit state must be a normalized 2-vector, got dim {}",
                k.dim()
            )));
        }
        if let Some(nm) = noise {
            nm.validate()?;
        }
        let register = schedule.cells();
        if register.len() > MAX_REGISTER_QUBITS {
            return Err(Error::DimensionOverflow { dim: 1 << register.len(), cap: 1 << MAX_REGISTER_QUBITS });
        }
        let mut sim = Self {
            schedule,
            initial: initial.to_vec(),
            n: register.len(),
            register,
            noise: noise.copied(),
            cache: HashMap::new(),
        };
        sim.build_channels()?;
        Ok(sim)
    }

    /// Cells in register order.
    pub fn register(&self) -> &[usize] {
        &self.register
    }

    fn build_channels(&mut self) -> Result<()> {
        let Some(noise) = self.noise else { return Ok(()) };
        let steps = |time: f64| ((time / noise.dt).ceil() as usize).max(1);
        for e in &self.schedule.events {
            if e.duration <= 0.0 {
                continue;
            }
            let (key, h, ancillas) = match e.kind {
                EventKind::RotationWindow { axis, theta, .. } => {
                    let rate = theta.rem_euclid(4.0 * PI) / e.duration;
                    (rotation_key(axis, theta, e.duration), axis.pauli().scale(C64::new(rate / 2.0, 0.0)), 1)
                }
                EventKind::GatingWindow { theta, .. } => {
                    let j = 2.0 * theta.rem_euclid(2.0 * PI) / e.duration;
                    (gating_key(theta, e.duration), exchange_hamiltonian(j), 2)
                }
                _ => continue,
            };
            if let Entry::Vacant(slot) = self.cache.entry(key) {
                slot.insert(gated_channel(&h, ancillas, noise.tau_a, e.duration, steps(e.duration))?);
            }
        }
        log::debug!("built {} noisy window channels", self.cache.len());
        Ok(())
    }

    fn pos(&self, cell: usize) -> usize {
        self.register.binary_search(&cell).expect("cell in register")
    }

    fn replay(
        &self,
        noisy: bool,
        choose: &mut dyn FnMut(usize, [f64; 2]) -> Result<u8>,
    ) -> Result<(DMatrix<C64>, Vec<ReadoutRecord>)> {
        let n = self.n;
        let noisy = noisy && self.noise.is_some();
        let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
        let zero = DVector::from_vec(vec![C64::new(1.0, 0.0), ZERO]);
        for &cell in &self.register {
            let k = match self.schedule.placement.iter().position(|&s| s == cell) {
                Some(q) => self.initial[q].amplitudes().clone(),
                None => zero.clone(),
            };
            psi = psi.kronecker(&k);
        }
        let mut rho = &psi * psi.adjoint();
        let mut readouts = Vec::new();
        for e in &self.schedule.events {
            match e.kind {
                EventKind::RotationWindow { cell, axis, theta } => {
                    let p = self.pos(cell);
                    if noisy && e.duration > 0.0 {
                        apply_channel(&mut rho, &self.cache[&rotation_key(axis, theta, e.duration)], &[p], n);
                    } else {
                        conjugate(&mut rho, rotation_unitary(axis, theta).matrix(), &[p], n);
                    }
                }
                EventKind::GatingWindow { cell_a, cell_b, theta, .. } => {
                    let ps = [self.pos(cell_a), self.pos(cell_b)];
                    if noisy && e.duration > 0.0 {
                        apply_channel(&mut rho, &self.cache[&gating_key(theta, e.duration)], &ps, n);
                    } else {
                        conjugate(&mut rho, swap_unitary(theta).matrix(), &ps, n);
                    }
                }
                EventKind::PhaseWindow { cell, phi } => {
                    let u = GateKind::Phase { phi }.qubit_unitary().expect("phase has a unitary");
                    conjugate(&mut rho, u.matrix(), &[self.pos(cell)], n);
                }
                EventKind::Readout { cell } => {
                    let p = self.pos(cell);
                    let p0 = prob_zero(|i| rho[(i, i)].re, rho.nrows(), p, n);
                    let probs = [p0, 1.0 - p0];
                    let outcome = choose(readouts.len(), probs)?;
                    let keep = check_outcome(outcome, probs)?;
                    let mask = 1usize << (n - 1 - p);
                    let bit = |i: usize| (i & mask != 0) as u8;
                    let scale = C64::new(1.0 / keep, 0.0);
                    for j in 0..rho.ncols() {
                        for i in 0..rho.nrows() {
                            rho[(i, j)] = if bit(i) == outcome && bit(j) == outcome { rho[(i, j)] * scale } else { ZERO };
                        }
                    }
                    readouts.push(ReadoutRecord {
                        time: e.start_time,
                        cell,
                        qubit: self.schedule.placement.iter().position(|&s| s == cell),
                        outcome,
                        probabilities: probs,
                    });
                }
                EventKind::PiPulse { .. } | EventKind::DampingWindow { .. } => {}
            }
        }
        Ok((rho, readouts))
    }

    fn logical(&self, full: &DMatrix<C64>) -> Result<DensityMatrix> {
        let dm = DensityMatrix::new(full.clone(), vec![2; self.n])?;
        let q = self.schedule.qubits;
        if q == 0 {
            return DensityMatrix::new(DMatrix::from_element(1, 1, C64::new(1.0, 0.0)), vec![1]);
        }
        let mut keep: Vec<usize> = self.schedule.placement.iter().map(|&s| self.pos(s)).collect();
        keep.sort_unstable();
        let reduced = if keep.len() == self.n { dm } else { partial_trace(&dm, &keep)? };
        let perm: Vec<usize> = self
            .schedule
            .placement
            .iter()
            .map(|&s| keep.binary_search(&self.pos(s)).expect("kept"))
            .collect();
        DensityMatrix::new(permute_qubits(reduced.matrix(), &perm), vec![2; q])
    }

    fn finish(&self, full: DMatrix<C64>, readouts: Vec<ReadoutRecord>) -> Result<ScheduleRun> {
        let logical_state = self.logical(&full)?;
        let fid = if self.noise.is_some() {
            let outcomes: Vec<u8> = readouts.iter().map(|r| r.outcome).collect();
            match self.replay(false, &mut |k, _| Ok(outcomes[k])) {
                Ok((ideal, _)) => fidelity(&logical_state, &self.logical(&ideal)?)?,
                // The noiseless device never produces this record.
                Err(Error::UnsupportedState(_)) => 0.0,
                Err(e) => return Err(e),
            }
        } else {
            1.0
        };
        Ok(ScheduleRun {
            register: self.register.clone(),
            final_state: DensityMatrix::new(full, vec![2; self.n])?,
            logical_state,
            readouts,
            fidelity: fid,
        })
    }

    /// One replay with readout outcomes drawn from `rng`.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ScheduleRun> {
        let (full, readouts) = self.replay(true, &mut |_, p| Ok(if rng.random::<f64>() < p[0] { 0 } else { 1 }))?;
        self.finish(full, readouts)
    }

    /// One replay with prescribed readout outcomes.
    pub fn run_with_outcomes(&self, outcomes: &[u8]) -> Result<ScheduleRun> {
        let (full, readouts) = self.replay(true, &mut |k, _| {
            outcomes
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidParams(format!("no outcome given for readout {k}")))
        })?;
        self.finish(full, readouts)
    }
}

/// Replays `schedule` from product state `initial[q]` on each placed qubit,
/// sampling readout outcomes from `rng`.
pub fn simulate_schedule<R: Rng + ?Sized>(
    schedule: &PulseSchedule,
    topology: &LatticeTopology,
    initial: &[Ket],
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<ScheduleRun> {
    ScheduleSimulator::new(schedule, topology, initial, noise)?.run(rng)
}

/// Like [`simulate_schedule`] with prescribed readout outcomes.
pub fn simulate_schedule_with_outcomes(
    schedule: &PulseSchedule,
    topology: &LatticeTopology,
    initial: &[Ket],
    noise: Option<&NoiseModel>,
    outcomes: &[u8],
) -> Result<ScheduleRun> {
    ScheduleSimulator::new(schedule, topology, initial, noise)?.run_with_outcomes(outcomes)
}

/// Gate-by-gate state-vector run of `circuit` with prescribed measurement
/// outcomes; qubit 0 is the slowest factor.
pub fn direct_simulate(circuit: &Circuit, initial: &[Ket], outcomes: &[u8]) -> Result<Ket> {
    circuit.validate()?;
    let n = circuit.num_qubits;
    if initial.len() != n {
        return Err(Error::DimensionMismatch(format!("{} initial states for {n} qubits", initial.len())));
    }
    if n > 2 * MAX_REGISTER_QUBITS {
        return Err(Error::DimensionOverflow { dim: usize::MAX, cap: 1 << (2 * MAX_REGISTER_QUBITS) });
    }
    let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
    for k in initial {
        psi = psi.kronecker(k.amplitudes());
    }
    let mut psi = DMatrix::from_column_slice(psi.len(), 1, psi.as_slice());
    let mut measured = 0;
    for inst in &circuit.instructions {
        match inst.gate {
            GateKind::Measure => {
                let p = inst.qubits[0];
                let p0 = prob_zero(|i| psi[(i, 0)].norm_sqr(), psi.nrows(), p, n);
                let outcome = *outcomes
                    .get(measured)
                    .ok_or_else(|| Error::InvalidParams(format!("no outcome given for measurement {measured}")))?;
                measured += 1;
                let keep = check_outcome(outcome, [p0, 1.0 - p0])?;
                let mask = 1usize << (n - 1 - p);
                let s = C64::new(1.0 / keep.sqrt(), 0.0);
                for i in 0..psi.nrows() {
                    psi[(i, 0)] = if ((i & mask != 0) as u8) == outcome { psi[(i, 0)] * s } else { ZERO };
                }
            }
            gate => {
                let u = gate.qubit_unitary().ok_or_else(|| Error::InvalidParams(format!("{gate} has no qubit unitary")))?;
                left_apply(&mut psi, u.matrix(), &inst.qubits, n);
            }
        }
    }
    Ok(Ket::from_vector(psi.column(0).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellSpec;
    use crate::gates::cnot_matrix;
    use crate::linalg::{fidelity_with_pure, tensor_product, ComplexOperator, ONE};
    use crate::network::compile::{compile_circuit, CompileOptions};
    use crate::network::topology::build_lattice;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lattice(l: usize) -> LatticeTopology {
        build_lattice(2, &[l, l], &CellSpec::uniform(9).unwrap()).unwrap()
    }

    fn zero() -> Ket {
        Ket::basis(2, 0).unwrap()
    }

    fn bell_circuit() -> Circuit {
        let mut c = Circuit::new(2);
        c.push(GateKind::ry(PI / 2.0), &[0]).unwrap();
        c.push(GateKind::rx(PI), &[0]).unwrap();
        c.push_cnot(0, 1).unwrap();
        c
    }

    #[test]
    fn bell_pair_matches_matrix_oracle() {
        let h = ComplexOperator::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]])
            .unwrap()
            .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let oracle_u = cnot_matrix().mul(&tensor_product(&h, &ComplexOperator::identity(2)).unwrap()).unwrap();
        let oracle = oracle_u.apply(&Ket::basis(4, 0).unwrap()).unwrap();
        let t = lattice(2);
        let s = compile_circuit(&bell_circuit(), &t, &[0, 3], &CompileOptions::default()).unwrap().schedule;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = simulate_schedule(&s, &t, &[zero(), zero()], None, &mut rng).unwrap();
        let f = fidelity_with_pure(&run.logical_state, &oracle).unwrap();
        assert!(1.0 - f <= 1e-8, "{f}");
        let direct = direct_simulate(&bell_circuit(), &[zero(), zero()], &[]).unwrap();
        assert!((direct.inner(&oracle).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measuring_one_always_reads_one() {
        let t = lattice(2);
        let mut c = Circuit::new(1);
        c.push(GateKind::Measure, &[0]).unwrap();
        let s = compile_circuit(&c, &t, &[2], &CompileOptions::default()).unwrap().schedule;
        let one = Ket::basis(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let run = simulate_schedule(&s, &t, std::slice::from_ref(&one), None, &mut rng).unwrap();
            assert_eq!(run.outcomes(), vec![1]);
            assert_eq!(run.readouts[0].qubit, Some(0));
        }
        assert!(simulate_schedule_with_outcomes(&s, &t, &[one], None, &[0]).is_err());
    }

    #[test]
    fn remote_gate_uses_spare_cells_and_restores_them() {
        let t = lattice(3);
        let mut c = Circuit::new(2);
        c.push(GateKind::ry(1.1), &[0]).unwrap();
        c.push(GateKind::Swap { theta: 0.7 }, &[0, 1]).unwrap();
        c.push(GateKind::rz(0.4), &[1]).unwrap();
        let s = compile_circuit(&c, &t, &[8, 0], &CompileOptions::default()).unwrap().schedule;
        let init = [Ket::normalized(vec![ONE, C64::new(0.3, 0.2)]).unwrap(), zero()];
        let run = simulate_schedule_with_outcomes(&s, &t, &init, None, &[]).unwrap();
        assert!(run.register.len() > 2);
        let direct = direct_simulate(&c, &init, &[]).unwrap();
        assert!(1.0 - fidelity_with_pure(&run.logical_state, &direct).unwrap() < 1e-10);
    }

    #[test]
    fn long_lifetime_noise_matches_noiseless() {
        let t = lattice(2);
        let s = compile_circuit(&bell_circuit(), &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
        let init = [zero(), zero()];
        let noiseless = simulate_schedule_with_outcomes(&s, &t, &init, None, &[]).unwrap();
        let nm = NoiseModel { tau_a: 1e12, dt: 1e-2 };
        let noisy = simulate_schedule_with_outcomes(&s, &t, &init, Some(&nm), &[]).unwrap();
        assert!(noisy.logical_state.max_abs_diff(&noiseless.logical_state) < 1e-8);
        assert!(1.0 - noisy.fidelity < 1e-8);
        let lossy = simulate_schedule_with_outcomes(&s, &t, &init, Some(&NoiseModel { tau_a: 5.0, dt: 1e-2 }), &[]).unwrap();
        assert!(lossy.fidelity < 0.99, "{}", lossy.fidelity);
    }

    #[test]
    fn records_impossible_without_noise_have_zero_fidelity() {
        let t = lattice(2);
        let mut c = bell_circuit();
        c.push(GateKind::Measure, &[0]).unwrap();
        c.push(GateKind::Measure, &[1]).unwrap();
        let s = compile_circuit(&c, &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
        let sim = ScheduleSimulator::new(&s, &t, &[zero(), zero()], Some(&NoiseModel { tau_a: 5.0, dt: 1e-2 })).unwrap();
        let run = sim.run_with_outcomes(&[0, 1]).unwrap();
        assert!(run.readouts[1].probabilities[1] > 1e-6);
        assert_eq!(run.fidelity, 0.0);
        assert!(sim.run_with_outcomes(&[1, 1]).unwrap().fidelity > 0.5);
    }

    #[test]
    fn simulator_reuse_matches_one_shot_runs() {
        let t = lattice(2);
        let mut c = bell_circuit();
        c.push(GateKind::Measure, &[1]).unwrap();
        let s = compile_circuit(&c, &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
        let nm = NoiseModel { tau_a: 20.0, dt: 1e-2 };
        let init = [zero(), zero()];
        let sim = ScheduleSimulator::new(&s, &t, &init, Some(&nm)).unwrap();
        assert_eq!(sim.register(), &[0, 1]);
        for seed in 0..4 {
            let a = sim.run(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = simulate_schedule(&s, &t, &init, Some(&nm), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(a.outcomes(), b.outcomes());
            assert_eq!(a.fidelity, b.fidelity);
            assert_eq!(a.logical_state.matrix(), b.logical_state.matrix());
        }
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let t = lattice(2);
        let mut s = compile_circuit(&bell_circuit(), &t, &[0, 1], &CompileOptions::default()).unwrap().schedule;
        s.events.pop();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            simulate_schedule(&s, &t, &[zero(), zero()], None, &mut rng),
            Err(Error::ScheduleInvariant(_))
        ));
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = Ket::normalized(vec![ONE, C64::new(0.5, 0.0)]).unwrap();
        let b = Ket::basis(2, 1).unwrap();
        let ab = a.tensor(&b).projector();
        let ba = b.tensor(&a).projector();
        assert!((permute_qubits(&ab, &[1, 0]) - ba).norm() < 1e-15);
    }
}
