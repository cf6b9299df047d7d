//! Gate set on contracted cell states and the shelving measurement.
//!
//! Qubit-level gates are plain 2×2 / 4×4 matrices. The cell-level builders
//! ([`pi_pulse_unitary`], [`transfer_pulse`], [`gated_operator`]) act on the
//! contracted space `{|w, i⟩}` of one cell.
//!
//! π-pulse convention: a transfer pulse between ancilla levels `a → b` maps
//! `|w, a⟩ ↦ +|w, b⟩` and `|w, b⟩ ↦ −|w, a⟩`. For activation (`0 → i`) this is
//! the matrix `[[0, 1], [−1, 0]]` in the ordered pair `(|w, i⟩, |w, 0⟩)`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cell::{basis_index, CellSpec, CellState, Role};
use crate::error::{Error, Result};
use crate::linalg::{tensor_product, ComplexOperator, DensityMatrix, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Role (and so the ancilla) that switches this rotation on.
    pub fn role(self) -> Role {
        match self {
            Axis::X => Role::RotX,
            Axis::Y => Role::RotY,
            Axis::Z => Role::RotZ,
        }
    }

    pub fn pauli(self) -> ComplexOperator {
        match self {
            Axis::X => crate::linalg::pauli_x(),
            Axis::Y => crate::linalg::pauli_y(),
            Axis::Z => crate::linalg::pauli_z(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A gate, without its targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateKind {
    PiPulse { ancilla: usize },
    Swap { theta: f64 },
    Rot { axis: Axis, theta: f64 },
    Phase { phi: f64 },
    Measure,
}

impl GateKind {
    pub fn rx(theta: f64) -> Self {
        GateKind::Rot { axis: Axis::X, theta }
    }

    pub fn ry(theta: f64) -> Self {
        GateKind::Rot { axis: Axis::Y, theta }
    }

    pub fn rz(theta: f64) -> Self {
        GateKind::Rot { axis: Axis::Z, theta }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, GateKind::Swap { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            GateKind::Swap { theta } | GateKind::Rot { theta, .. } => theta.is_finite(),
            GateKind::Phase { phi } => phi.is_finite(),
            GateKind::PiPulse { .. } | GateKind::Measure => true,
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{self} has a non-finite angle")))
        }
    }

    /// Unitary on the qubit register: 2×2 for single-cell gates, 4×4 for
    /// swaps. `None` for π-pulses and measurement.
    pub fn qubit_unitary(&self) -> Option<ComplexOperator> {
        match *self {
            GateKind::Swap { theta } => Some(swap_unitary(theta)),
            GateKind::Rot { axis, theta } => Some(rotation_unitary(axis, theta)),
            // The whole qubit state sits in ancilla level 1 while the phase
            // window is open, so it picks up e^{iφ} on both branches.
            GateKind::Phase { phi } => Some(ComplexOperator::identity(2).scale(C64::from_polar(1.0, phi))),
            GateKind::PiPulse { .. } | GateKind::Measure => None,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateKind::PiPulse { ancilla } => write!(f, "PI {ancilla}"),
            GateKind::Swap { theta } => write!(f, "SWAP {theta}"),
            GateKind::Rot { axis: Axis::X, theta } => write!(f, "RX {theta}"),
            GateKind::Rot { axis: Axis::Y, theta } => write!(f, "RY {theta}"),
            GateKind::Rot { axis: Axis::Z, theta } => write!(f, "RZ {theta}"),
            GateKind::Phase { phi } => write!(f, "PHASE {phi}"),
            GateKind::Measure => write!(f, "MEASURE"),
        }
    }
}

/// Exchange gate on `|00⟩, |01⟩, |10⟩, |11⟩` (first qubit slowest).
pub fn swap_unitary(theta: f64) -> ComplexOperator {
    let (s, c) = theta.sin_cos();
    let cc = C64::new(c, 0.0);
    let ms = C64::new(0.0, -s);
    ComplexOperator::from_matrix_unchecked(DMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, cc, ms, ZERO, //
            ZERO, ms, cc, ZERO, //
            ZERO, ZERO, ZERO, ONE,
        ],
    ))
}

/// `exp(−iθσ/2)`.
pub fn rotation_unitary(axis: Axis, theta: f64) -> ComplexOperator {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexOperator::identity(2)
        .scale(C64::new(c, 0.0))
        .add(&axis.pauli().scale(C64::new(0.0, -s)))
        .expect("2x2 operands")
}

/// `diag(1, e^{iφ})` on the ancilla pair `(|w,0⟩, |w,1⟩)`.
pub fn phase_unitary(phi: f64) -> ComplexOperator {
    ComplexOperator::diagonal(&[ONE, C64::from_polar(1.0, phi)])
}

/// Literal CNOT, control first.
pub fn cnot_matrix() -> ComplexOperator {
    ComplexOperator::from_real_rows(&[
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
    ])
    .expect("literal matrix")
}

/// Literal SWAP.
pub fn swap_matrix() -> ComplexOperator {
    ComplexOperator::from_real_rows(&[
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ])
    .expect("literal matrix")
}

/// Exchange generator `−J/4·I + (J/2)(|01⟩⟨10| + |10⟩⟨01|)`.
pub fn exchange_hamiltonian(j: f64) -> ComplexOperator {
    let mut h = DMatrix::<C64>::identity(4, 4) * C64::new(-j / 4.0, 0.0);
    h[(1, 2)] = C64::new(j / 2.0, 0.0);
    h[(2, 1)] = C64::new(j / 2.0, 0.0);
    ComplexOperator::from_matrix_unchecked(h)
}

/// Swap angle reached after gating for `time` with exchange energy `j`.
pub fn swap_theta_for_time(j: f64, time: f64) -> f64 {
    j * time / 2.0
}

/// Gating time needed for swap angle `theta`.
pub fn swap_time_for_theta(j: f64, theta: f64) -> f64 {
    2.0 * theta / j
}

fn check_ancilla(m: usize, i: usize) -> Result<()> {
    if i > m {
        return Err(Error::InvalidAncilla { index: i, m });
    }
    Ok(())
}

/// Transfer pulse `from → to` on a cell with `m` ancillas. With
/// `spin = Some(w)` only the branch with qubit value `w` is addressed.
pub fn transfer_pulse(m: usize, from: usize, to: usize, spin: Option<usize>) -> Result<ComplexOperator> {
    check_ancilla(m, from)?;
    check_ancilla(m, to)?;
    if from == to {
        return Err(Error::InvalidAncilla { index: to, m });
    }
    if matches!(spin, Some(w) if w > 1) {
        return Err(Error::InvalidParams(format!("spin selector {spin:?} must be 0 or 1")));
    }
    let dim = 2 * (m + 1);
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for w in 0..2 {
        if spin.is_some_and(|s| s != w) {
            continue;
        }
        let a = basis_index(m, w, from);
        let b = basis_index(m, w, to);
        u[(a, a)] = ZERO;
        u[(b, b)] = ZERO;
        u[(b, a)] = ONE;
        u[(a, b)] = -ONE;
    }
    Ok(ComplexOperator::from_matrix_unchecked(u))
}

/// Activation pulse `0 → i` on the contracted cell space.
pub fn pi_pulse_unitary(spec: &CellSpec, i: usize) -> Result<ComplexOperator> {
    if i == 0 || i > spec.m {
        return Err(Error::InvalidAncilla { index: i, m: spec.m });
    }
    transfer_pulse(spec.m, 0, i, None)
}

/// `U ⊗ |i⟩⟨i| + I ⊗ (1 − |i⟩⟨i|)`: the qubit gate `u` acts only while
/// ancilla `i` is excited.
pub fn gated_operator(m: usize, ancilla: usize, u: &ComplexOperator) -> Result<ComplexOperator> {
    check_ancilla(m, ancilla)?;
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("single-qubit gate expected, got {}", u.dim())));
    }
    let n = m + 1;
    let mut out = DMatrix::<C64>::identity(2 * n, 2 * n);
    for w in 0..2 {
        for v in 0..2 {
            out[(basis_index(m, w, ancilla), basis_index(m, v, ancilla))] = u.get(w, v);
        }
    }
    Ok(ComplexOperator::from_matrix_unchecked(out))
}

/// Two-cell operator: `u` (4×4 on the qubits) acts on the component with
/// cell a at port `k` and cell b at port `l`, identity elsewhere.
pub fn gated_pair_operator(
    m_a: usize,
    k: usize,
    m_b: usize,
    l: usize,
    u: &ComplexOperator,
) -> Result<ComplexOperator> {
    check_ancilla(m_a, k)?;
    check_ancilla(m_b, l)?;
    if u.dim() != 4 {
        return Err(Error::DimensionMismatch(format!("two-qubit gate expected, got {}", u.dim())));
    }
    let da = 2 * (m_a + 1);
    let db = 2 * (m_b + 1);
    let idx = |q: usize| basis_index(m_a, q >> 1, k) * db + basis_index(m_b, q & 1, l);
    let mut out = DMatrix::<C64>::identity(da * db, da * db);
    for r in 0..4 {
        for c in 0..4 {
            out[(idx(r), idx(c))] = u.get(r, c);
        }
    }
    Ok(ComplexOperator::from_matrix_unchecked(out))
}

/// Which cell(s) of a two-cell program a step addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepTarget {
    First,
    Second,
    Pair,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    pub gate: GateKind,
    pub cells: StepTarget,
}

impl ProgramStep {
    pub fn on_first(gate: GateKind) -> Self {
        Self { gate, cells: StepTarget::First }
    }

    pub fn on_second(gate: GateKind) -> Self {
        Self { gate, cells: StepTarget::Second }
    }

    pub fn on_pair(gate: GateKind) -> Self {
        Self { gate, cells: StepTarget::Pair }
    }
}

/// CNOT (first cell controls) as rotations around two `Swap(π/4)` steps, in
/// time order.
pub fn cnot_from_sqrt_swap() -> Vec<ProgramStep> {
    use ProgramStep as S;
    vec![
        S::on_first(GateKind::rx(PI / 2.0)),
        S::on_first(GateKind::rz(PI / 2.0)),
        S::on_pair(GateKind::Swap { theta: PI / 4.0 }),
        S::on_first(GateKind::rx(PI)),
        S::on_pair(GateKind::Swap { theta: PI / 4.0 }),
        S::on_first(GateKind::ry(-PI / 2.0)),
        S::on_second(GateKind::rx(-PI / 2.0)),
    ]
}

/// Exact SWAP from exchange steps and rotations, in time order.
///
/// `Swap(π/2)` alone equals SWAP·diag(1, −i, −i, 1); the preceding steps
/// cancel that entangling phase.
pub fn exact_swap_sequence() -> Vec<ProgramStep> {
    use ProgramStep as S;
    vec![
        S::on_first(GateKind::ry(PI / 2.0)),
        S::on_second(GateKind::ry(PI / 2.0)),
        S::on_pair(GateKind::Swap { theta: PI / 4.0 }),
        S::on_first(GateKind::rx(PI)),
        S::on_pair(GateKind::Swap { theta: PI / 4.0 }),
        S::on_first(GateKind::rx(PI)),
        S::on_first(GateKind::ry(-PI / 2.0)),
        S::on_second(GateKind::ry(-PI / 2.0)),
        S::on_pair(GateKind::Swap { theta: PI / 2.0 }),
    ]
}

/// Unitary of a two-cell program on the qubit pair (first cell slowest).
pub fn compose_two_cell(steps: &[ProgramStep]) -> Result<ComplexOperator> {
    let id2 = ComplexOperator::identity(2);
    steps.iter().try_fold(ComplexOperator::identity(4), |acc, step| {
        let u = step.gate.qubit_unitary().ok_or_else(|| {
            Error::InvalidParams(format!("{} has no unitary on the qubit register", step.gate))
        })?;
        let full = match (step.cells, u.dim()) {
            (StepTarget::First, 2) => tensor_product(&u, &id2)?,
            (StepTarget::Second, 2) => tensor_product(&id2, &u)?,
            (StepTarget::Pair, 4) => u,
            _ => {
                return Err(Error::InvalidParams(format!(
                    "{} cannot target {:?}",
                    step.gate, step.cells
                )))
            }
        };
        full.mul(&acc)
    })
}

/// Ancilla levels used by the measurement protocol.
pub const SHELF_INTERMEDIATE: usize = 2;
pub const SHELF_READOUT: usize = 5;
/// Qubit value shelved by the spin-selective first pulse.
pub const SHELVED_SPIN: usize = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// Measured qubit value `w`; `0` when the cell is found in ancilla 5.
    pub outcome: u8,
    /// Born probabilities `(p0, p1)` before readout.
    pub probabilities: (f64, f64),
    pub after_pi1: CellState,
    pub after_pi2: CellState,
    pub collapsed_state: CellState,
}

fn apply_to_cell(state: &CellState, u: &ComplexOperator) -> Result<CellState> {
    let m = u.matrix() * state.rho().matrix() * u.matrix().adjoint();
    CellState::new(state.m(), DensityMatrix::new(m, vec![2, state.m() + 1])?)
}

/// States after the spin-selective `0 → 2` pulse and the `2 → 5` pulse.
pub fn measurement_stages(state: &CellState) -> Result<(CellState, CellState)> {
    let m = state.m();
    if m < SHELF_READOUT {
        return Err(Error::UnsupportedState(format!(
            "measurement needs ancilla {SHELF_READOUT}, cell has m = {m}"
        )));
    }
    let rho = state.rho().matrix();
    let ground: Vec<usize> = (0..2).map(|w| basis_index(m, w, 0)).collect();
    for r in 0..rho.nrows() {
        for c in 0..rho.ncols() {
            if !(ground.contains(&r) && ground.contains(&c)) && rho[(r, c)].norm() > 1e-12 {
                return Err(Error::UnsupportedState(
                    "the cell must be asleep (ancilla in level 0) before measurement".into(),
                ));
            }
        }
    }
    let pi1 = transfer_pulse(m, 0, SHELF_INTERMEDIATE, Some(SHELVED_SPIN))?;
    let pi2 = transfer_pulse(m, SHELF_INTERMEDIATE, SHELF_READOUT, None)?;
    let after1 = apply_to_cell(state, &pi1)?;
    let after2 = apply_to_cell(&after1, &pi2)?;
    Ok((after1, after2))
}

/// A cell after both shelving pulses, ready for repeated readout draws.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedMeasurement {
    after_pi1: CellState,
    after_pi2: CellState,
    p0: f64,
}

impl PreparedMeasurement {
    pub fn new(state: &CellState) -> Result<Self> {
        let (after_pi1, after_pi2) = measurement_stages(state)?;
        let p0 = after_pi2.population(SHELVED_SPIN, SHELF_READOUT);
        Ok(Self { after_pi1, after_pi2, p0 })
    }

    /// Born probabilities `(p0, p1)`.
    pub fn probabilities(&self) -> (f64, f64) {
        (self.p0, 1.0 - self.p0)
    }

    /// Draws one outcome.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        if rng.random::<f64>() < self.p0 {
            0
        } else {
            1
        }
    }

    pub fn record(self, outcome: u8) -> Result<MeasurementRecord> {
        finish_measurement(self.after_pi1, self.after_pi2, outcome)
    }
}

/// Runs the protocol with the outcome drawn from `rng`.
pub fn measure_cell<R: Rng + ?Sized>(state: &CellState, rng: &mut R) -> Result<MeasurementRecord> {
    let prep = PreparedMeasurement::new(state)?;
    let outcome = prep.draw(rng);
    prep.record(outcome)
}

/// Runs the protocol with a prescribed outcome; fails if it has zero
/// probability.
pub fn measure_cell_with_outcome(state: &CellState, outcome: u8) -> Result<MeasurementRecord> {
    PreparedMeasurement::new(state)?.record(outcome)
}

fn finish_measurement(after1: CellState, after2: CellState, outcome: u8) -> Result<MeasurementRecord> {
    let m = after2.m();
    let shelf = basis_index(m, SHELVED_SPIN, SHELF_READOUT);
    let rest = basis_index(m, 1 - SHELVED_SPIN, 0);
    let p0 = after2.rho().population(shelf);
    let p1 = after2.rho().population(rest);
    let keep = match outcome {
        0 => shelf,
        1 => rest,
        _ => return Err(Error::InvalidParams(format!("outcome {outcome} is not a bit"))),
    };
    let p = after2.rho().population(keep);
    if p <= 1e-15 {
        return Err(Error::InvalidParams(format!("outcome {outcome} has zero probability")));
    }
    let dim = after2.rho().dim();
    let mut collapsed = DMatrix::<C64>::zeros(dim, dim);
    collapsed[(keep, keep)] = ONE;
    let collapsed = CellState::new(m, DensityMatrix::new(collapsed, vec![2, m + 1])?)?;
    Ok(MeasurementRecord {
        outcome,
        probabilities: (p0, p1),
        after_pi1: after1,
        after_pi2: after2,
        collapsed_state: collapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{propagator, Ket};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn spec(m: usize) -> CellSpec {
        CellSpec::uniform(m).unwrap()
    }

    #[test]
    fn swap_examples() {
        assert!(swap_unitary(0.0).max_abs_diff(&ComplexOperator::identity(4)) < TOL);
        let full = swap_unitary(PI / 2.0);
        assert!((full.get(2, 1) - C64::new(0.0, -1.0)).norm() < TOL);
        assert!(full.get(1, 1).norm() < TOL);
        let r = swap_unitary(PI / 4.0);
        let h = 1.0 / 2f64.sqrt();
        assert!((r.get(1, 1) - C64::new(h, 0.0)).norm() < TOL);
        assert!((r.get(1, 2) - C64::new(0.0, -h)).norm() < TOL);
        assert!(r.mul(&r).unwrap().max_abs_diff(&swap_unitary(PI / 2.0)) < TOL);
    }

    #[test]
    fn rotation_examples() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert!(rotation_unitary(axis, 0.0).max_abs_diff(&ComplexOperator::identity(2)) < TOL);
        }
        let minus = ComplexOperator::identity(2).scale(-ONE);
        assert!(rotation_unitary(Axis::X, 2.0 * PI).max_abs_diff(&minus) < TOL);
        let rz = rotation_unitary(Axis::Z, PI);
        let want = ComplexOperator::diagonal(&[C64::new(0.0, -1.0), C64::new(0.0, 1.0)]);
        assert!(rz.max_abs_diff(&want) < TOL);
    }

    #[test]
    fn phase_examples() {
        assert!(phase_unitary(0.0).max_abs_diff(&ComplexOperator::identity(2)) < TOL);
        assert!(phase_unitary(PI).max_abs_diff(&ComplexOperator::diagonal(&[ONE, -ONE])) < TOL);
        let prod = phase_unitary(0.4).mul(&phase_unitary(1.1)).unwrap();
        assert!(prod.max_abs_diff(&phase_unitary(1.5)) < TOL);
    }

    #[test]
    fn pi_pulse_convention() {
        let s = spec(7);
        let u = pi_pulse_unitary(&s, 3).unwrap();
        assert!(u.is_unitary(TOL));
        for w in 0..2 {
            let ground = Ket::basis(16, basis_index(7, w, 0)).unwrap();
            let excited = Ket::basis(16, basis_index(7, w, 3)).unwrap();
            let out = u.apply(&ground).unwrap();
            assert!((out.amplitude(basis_index(7, w, 3)) - ONE).norm() < TOL);
            let back = u.apply(&excited).unwrap();
            assert!((back.amplitude(basis_index(7, w, 0)) + ONE).norm() < TOL);
            for j in [1, 2, 4, 5, 6, 7] {
                let k = basis_index(7, w, j);
                assert_eq!(u.apply(&Ket::basis(16, k).unwrap()).unwrap(), Ket::basis(16, k).unwrap());
            }
        }
        let twice = u.mul(&u).unwrap();
        for k in 0..16 {
            let affected = [0, 3, 8, 11].contains(&k);
            assert_eq!(twice.get(k, k), if affected { -ONE } else { ONE });
        }
        assert!(pi_pulse_unitary(&s, 0).is_err());
        assert!(pi_pulse_unitary(&s, 8).is_err());
    }

    #[test]
    fn pi_pulse_two_by_two_block_matches_matrix() {
        // Ordered pair (|w,i⟩, |w,0⟩).
        let u = pi_pulse_unitary(&spec(2), 1).unwrap();
        let m = 2;
        for w in 0..2 {
            let order = [basis_index(m, w, 1), basis_index(m, w, 0)];
            let lit = [[0.0, 1.0], [-1.0, 0.0]];
            for r in 0..2 {
                for c in 0..2 {
                    assert_eq!(u.get(order[r], order[c]).re, lit[r][c]);
                }
            }
        }
    }

    #[test]
    fn cnot_sequence_matches_oracle() {
        let u = compose_two_cell(&cnot_from_sqrt_swap()).unwrap();
        assert!(u.phase_aligned_diff(&cnot_matrix()) < 1e-8);
        let swaps = cnot_from_sqrt_swap()
            .iter()
            .filter(|s| s.gate == GateKind::Swap { theta: PI / 4.0 })
            .count();
        assert_eq!(swaps, 2);
        // |10⟩ → |11⟩, |11⟩ → |10⟩, |00⟩ and |01⟩ fixed, one common phase.
        let phase = u.get(0, 0);
        assert!((phase.norm() - 1.0).abs() < 1e-8);
        for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            assert!((u.get(to, from) - phase).norm() < 1e-8);
        }
    }

    #[test]
    fn exact_swap_sequence_matches_swap() {
        let u = compose_two_cell(&exact_swap_sequence()).unwrap();
        assert!(u.phase_aligned_diff(&swap_matrix()) < TOL);
        // The bare full exchange is not a SWAP.
        assert!(swap_unitary(PI / 2.0).phase_aligned_diff(&swap_matrix()) > 0.5);
    }

    #[test]
    fn exchange_calibration() {
        let j = 0.7;
        for t in [0.3, 1.0, PI / j, 4.2] {
            let u = propagator(&exchange_hamiltonian(j), t).unwrap();
            let target = swap_unitary(swap_theta_for_time(j, t));
            assert!(u.phase_aligned_diff(&target) < 1e-12);
            assert!((swap_time_for_theta(j, swap_theta_for_time(j, t)) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn gated_operators_act_only_when_active() {
        let m = 5;
        let r = rotation_unitary(Axis::Y, 0.9);
        let g = gated_operator(m, 3, &r).unwrap();
        assert!(g.is_unitary(TOL));
        for i in [0, 1, 2, 4, 5] {
            for w in 0..2 {
                let k = basis_index(m, w, i);
                assert_eq!(g.get(k, k), ONE);
            }
        }
        assert_eq!(g.get(basis_index(m, 1, 3), basis_index(m, 0, 3)), r.get(1, 0));
        let p = gated_pair_operator(1, 1, 2, 2, &swap_unitary(0.4)).unwrap();
        assert!(p.is_unitary(TOL));
        assert_eq!(p.dim(), 24);
    }

    #[test]
    fn transfer_pulse_rejections() {
        assert!(transfer_pulse(5, 2, 2, None).is_err());
        assert!(transfer_pulse(5, 2, 6, None).is_err());
        assert!(transfer_pulse(5, 0, 2, Some(2)).is_err());
    }

    #[test]
    fn measurement_stage_amplitudes() {
        let m = 5;
        let (c1, c2) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let state = CellState::from_qubit(m, c1, c2).unwrap();
        let (after1, after2) = measurement_stages(&state).unwrap();
        let mut want1 = vec![ZERO; 12];
        want1[basis_index(m, 0, 2)] = c1;
        want1[basis_index(m, 1, 0)] = c2;
        let k1 = Ket::new(want1).unwrap();
        assert!(after1.rho().max_abs_diff(&DensityMatrix::new(k1.projector(), vec![2, 6]).unwrap()) < TOL);
        let mut want2 = vec![ZERO; 12];
        want2[basis_index(m, 0, 5)] = c1;
        want2[basis_index(m, 1, 0)] = c2;
        let k2 = Ket::new(want2).unwrap();
        assert!(after2.rho().max_abs_diff(&DensityMatrix::new(k2.projector(), vec![2, 6]).unwrap()) < TOL);
    }

    #[test]
    fn measurement_of_up_state_is_certain() {
        let state = CellState::from_qubit(7, ONE, ZERO).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rec = measure_cell(&state, &mut rng).unwrap();
            assert_eq!(rec.outcome, 0);
            assert!((rec.collapsed_state.population(0, 5) - 1.0).abs() < TOL);
        }
        assert!(measure_cell_with_outcome(&state, 1).is_err());
    }

    #[test]
    fn measurement_rejects_unsupported_states() {
        assert!(measurement_stages(&CellState::from_qubit(4, ONE, ONE).unwrap()).is_err());
        let excited = CellState::from_ket(6, &Ket::basis(14, basis_index(6, 0, 3)).unwrap()).unwrap();
        assert!(matches!(measurement_stages(&excited), Err(Error::UnsupportedState(_))));
    }

    #[test]
    fn measurement_frequencies_follow_born_rule() {
        let h = 1.0 / 2f64.sqrt();
        let state = CellState::from_qubit(5, C64::new(h, 0.0), C64::new(h, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let zeros = (0..n).filter(|_| measure_cell(&state, &mut rng).unwrap().outcome == 0).count();
        let f = zeros as f64 / n as f64;
        assert!((f - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    proptest! {
        #[test]
        fn constructed_gates_are_unitary(theta in -20.0f64..20.0) {
            prop_assert!(swap_unitary(theta).is_unitary(TOL));
            prop_assert!(phase_unitary(theta).is_unitary(TOL));
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                prop_assert!(rotation_unitary(axis, theta).is_unitary(TOL));
            }
        }

        #[test]
        fn swap_composition(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let prod = swap_unitary(a).mul(&swap_unitary(b)).unwrap();
            prop_assert!(prod.max_abs_diff(&swap_unitary(a + b)) < TOL);
            let u = swap_unitary(a);
            prop_assert_eq!(u.get(0, 0), ONE);
            prop_assert_eq!(u.get(3, 3), ONE);
            for k in 1..4 {
                prop_assert_eq!(u.get(0, k), ZERO);
                prop_assert_eq!(u.get(3, k - 1), ZERO);
            }
        }

        #[test]
        fn rotation_inverse(theta in -10.0f64..10.0) {
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let p = rotation_unitary(axis, theta).mul(&rotation_unitary(axis, -theta)).unwrap();
                prop_assert!(p.max_abs_diff(&ComplexOperator::identity(2)) < TOL);
            }
        }

        #[test]
        fn cell_gates_preserve_the_contracted_space(m in 1usize..=10, theta in -5.0f64..5.0, seed in 0usize..1000) {
            let i = 1 + seed % m;
            let ops = [
                pi_pulse_unitary(&spec(m), i).unwrap(),
                gated_operator(m, i, &rotation_unitary(Axis::X, theta)).unwrap(),
                transfer_pulse(m, 0, i, Some(seed % 2)).unwrap(),
            ];
            for op in ops {
                prop_assert_eq!(op.dim(), 2 * (m + 1));
                prop_assert!(op.is_unitary(TOL));
            }
        }
    }
}
