//! Amplitude-damped ancilla: master equation, the gated operation procedure
//! and purity curves.
//!
//! The qubit ⊗ ancilla space is ordered `(|0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩)` with
//! ancilla level 1 excited. The ancilla decays through `L = a/√τ_a`,
//! `a = |0⟩⟨1|`; the qubit has no direct bath.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, ExecMode};
use crate::linalg::{
    hermitize, partial_trace, purity, tensor_product, ComplexOperator, DensityMatrix, C64, ONE, ZERO,
};

/// Largest `|Tr ρ − 1|` tolerated during integration before giving up.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
/// Default number of integrator steps per gating window.
pub const DEFAULT_STEPS_PER_WINDOW: usize = 2000;

/// Ancilla lowering operator `|0⟩⟨1|` (ground first).
pub fn lowering_operator() -> ComplexOperator {
    ComplexOperator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).expect("literal matrix")
}

/// Activation pulse on a lone ancilla: `|0⟩ ↦ |1⟩`, `|1⟩ ↦ −|0⟩`.
pub fn ancilla_pi_pulse() -> ComplexOperator {
    ComplexOperator::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).expect("literal matrix")
}

/// Qubit block of the gated flip: `(J/4)[[−1, 2], [2, −1]]`.
pub fn operation_hamiltonian(j: f64) -> ComplexOperator {
    ComplexOperator::from_real_rows(&[vec![-j / 4.0, j / 2.0], vec![j / 2.0, -j / 4.0]])
        .expect("literal matrix")
}

/// Qubit ⊗ ancilla Hamiltonian: identity on the ancilla-ground states and
/// the operation block on `{|0,1⟩, |1,1⟩}`.
pub fn embedded_operation_hamiltonian(j: f64) -> ComplexOperator {
    let hop = operation_hamiltonian(j);
    let mut h = DMatrix::<C64>::zeros(4, 4);
    h[(0, 0)] = ONE;
    h[(2, 2)] = ONE;
    for (r, rr) in [(0, 1), (1, 3)] {
        for (c, cc) in [(0, 1), (1, 3)] {
            h[(rr, cc)] = hop.get(r, c);
        }
    }
    ComplexOperator::new(h).expect("finite")
}

/// Right-hand side `−i[H, ρ] − ½ Σ_k ([L_k†, L_k ρ] + h.c.)`.
#[derive(Clone, Debug)]
pub struct Generator {
    h: DMatrix<C64>,
    jumps: Vec<DMatrix<C64>>,
}

impl Generator {
    pub fn new(h: &ComplexOperator, jumps: Vec<ComplexOperator>) -> Result<Self> {
        let err = h.hermiticity_error();
        if err > crate::linalg::HERMITIAN_TOL {
            return Err(Error::NotHermitian(err));
        }
        if jumps.iter().any(|l| l.dim() != h.dim()) {
            return Err(Error::DimensionMismatch("jump operator dimension".into()));
        }
        Ok(Self { h: h.matrix().clone(), jumps: jumps.into_iter().map(|l| l.into_matrix()).collect() })
    }

    /// Generator with `ancillas` two-level ancillas, the fastest tensor
    /// factors of `h`'s space, each decaying with lifetime `tau_a`.
    pub fn damped(h: &ComplexOperator, ancillas: usize, tau_a: f64) -> Result<Self> {
        let jumps = if tau_a.is_infinite() {
            Vec::new()
        } else {
            ancilla_jumps(h.dim(), ancillas, tau_a)?
        };
        Self::new(h, jumps)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let hr = &self.h * rho;
        let mut out = (&hr - hr.adjoint()) * C64::new(0.0, -1.0);
        for l in &self.jumps {
            let lr = l * rho;
            let comm = l.adjoint() * &lr - &lr * l.adjoint();
            out -= (&comm + comm.adjoint()) * C64::new(0.5, 0.0);
        }
        out
    }

    /// Column-stacked superoperator matrix of the generator.
    pub fn liouvillian(&self) -> DMatrix<C64> {
        let n = self.dim();
        let id = DMatrix::<C64>::identity(n, n);
        let mut out = (id.kronecker(&self.h) - self.h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
        for l in &self.jumps {
            let ldl = l.adjoint() * l;
            out += l.conjugate().kronecker(l);
            out -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
        }
        out
    }
}

/// `a_k/√τ` for each of `ancillas` two-level factors at the fast end of a
/// space of dimension `dim`.
fn ancilla_jumps(dim: usize, ancillas: usize, tau_a: f64) -> Result<Vec<ComplexOperator>> {
    let anc_dim = 1usize << ancillas;
    if !dim.is_multiple_of(anc_dim) {
        return Err(Error::DimensionMismatch(format!("{dim} is not divisible by {anc_dim}")));
    }
    let rate = C64::new(1.0 / tau_a.sqrt(), 0.0);
    let a = lowering_operator();
    (0..ancillas)
        .map(|k| {
            // Ancilla k counted from the slowest of the ancilla factors.
            let before = ComplexOperator::identity((dim / anc_dim) << k);
            let after = ComplexOperator::identity(1 << (ancillas - 1 - k));
            let op = tensor_product(&tensor_product(&before, &a)?, &after)?;
            Ok(op.scale(rate))
        })
        .collect()
}

/// `dρ/dt` on the qubit ⊗ ancilla space (dimension 4) or a lone two-level
/// system (dimension 2). `tau_a = ∞` switches the dissipator off.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &ComplexOperator, tau_a: f64) -> Result<DMatrix<C64>> {
    if !(tau_a > 0.0) {
        return Err(Error::InvalidParams(format!("tau_a must be positive, got {tau_a}")));
    }
    if rho.dim() != h.dim() || !(rho.dim() == 2 || rho.dim() == 4) {
        return Err(Error::DimensionMismatch(format!(
            "state {} / Hamiltonian {}; expected 2 or 4",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(Generator::damped(h, 1, tau_a)?.rhs(rho.matrix()))
}

/// Diagnostics gathered during integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationStats {
    pub steps: usize,
    pub max_symmetrization: f64,
    pub max_trace_error: f64,
}

impl Default for IntegrationStats {
    fn default() -> Self {
        Self { steps: 0, max_symmetrization: 0.0, max_trace_error: 0.0 }
    }
}

fn rk4_step(gen: &Generator, rho: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
    let half = C64::new(h / 2.0, 0.0);
    let full = C64::new(h, 0.0);
    let k1 = gen.rhs(rho);
    let k2 = gen.rhs(&(rho + &k1 * half));
    let k3 = gen.rhs(&(rho + &k2 * half));
    let k4 = gen.rhs(&(rho + &k3 * full));
    rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
}

/// One sampled point of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub purity: f64,
    pub trace: f64,
}

fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParams(format!("duration must be finite and >= 0, got {duration}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    Ok((duration / dt).ceil() as usize)
}

type Sampler<'s> = Option<&'s mut dyn FnMut(f64, &DMatrix<C64>)>;

/// Fixed-step RK4 of `gen` for `duration`, symmetrizing every step.
fn integrate(
    rho0: &DMatrix<C64>,
    gen: &Generator,
    duration: f64,
    dt: f64,
    t0: f64,
    stats: &mut IntegrationStats,
    mut sample: Sampler<'_>,
) -> Result<DMatrix<C64>> {
    let n = step_count(duration, dt)?;
    let mut rho = rho0.clone();
    if n == 0 {
        return Ok(rho);
    }
    let h = duration / n as f64;
    for k in 1..=n {
        rho = rk4_step(gen, &rho, h);
        let sym = hermitize(&mut rho);
        stats.max_symmetrization = stats.max_symmetrization.max(sym);
        let drift = (rho.trace().re - 1.0).abs();
        stats.max_trace_error = stats.max_trace_error.max(drift);
        let time = t0 + k as f64 * h;
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::TraceDrift { drift, time });
        }
        if let Some(f) = sample.as_deref_mut() {
            f(time, &rho);
        }
    }
    stats.steps += n;
    log::debug!(
        "integrated {n} steps, max symmetrization {:e}, max trace error {:e}",
        stats.max_symmetrization,
        stats.max_trace_error
    );
    Ok(rho)
}

/// Solves the master equation for `duration` with a fixed RK4 step no larger
/// than `dt`; requires `dt ≤ duration/1000`.
pub fn integrate_master_equation(
    rho0: &DensityMatrix,
    h: &ComplexOperator,
    tau_a: f64,
    duration: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if duration > 0.0 && dt > duration / 1000.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "dt = {dt} exceeds duration/1000 = {}",
            duration / 1000.0
        )));
    }
    if !(tau_a > 0.0) {
        return Err(Error::InvalidParams(format!("tau_a must be positive, got {tau_a}")));
    }
    if h.dim() != rho0.dim() || !(h.dim() == 2 || h.dim() == 4) {
        return Err(Error::DimensionMismatch(format!(
            "state {} / Hamiltonian {}; expected 2 or 4",
            rho0.dim(),
            h.dim()
        )));
    }
    let gen = Generator::damped(h, 1, tau_a)?;
    let mut stats = IntegrationStats::default();
    let out = integrate(rho0.matrix(), &gen, duration, dt, 0.0, &mut stats, None)?;
    DensityMatrix::with_labels(out, rho0.dims().to_vec(), rho0.labels().to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    /// Ancilla coherence time; `f64::INFINITY` disables damping.
    pub tau_a: f64,
    /// Exchange energy of the gated operation.
    pub j: f64,
    pub gate_time: f64,
    pub dt: f64,
}

impl DecoherenceParams {
    /// Full flip (`gate_time = π/J`) with `dt = gate_time/2000`.
    pub fn full_flip(j: f64, tau_a: f64) -> Self {
        let gate_time = PI / j;
        Self { tau_a, j, gate_time, dt: gate_time / DEFAULT_STEPS_PER_WINDOW as f64 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_a > 0.0) {
            return Err(Error::InvalidParams(format!("tau_a must be positive, got {}", self.tau_a)));
        }
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::InvalidParams(format!("J must be positive, got {}", self.j)));
        }
        if !(self.gate_time.is_finite() && self.gate_time > 0.0) {
            return Err(Error::InvalidParams(format!(
                "gate_time must be positive, got {}",
                self.gate_time
            )));
        }
        if !(self.dt > 0.0) || self.dt > self.gate_time / 1000.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "dt must lie in (0, gate_time/1000], got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Inverse time ratio `gate_time / tau_a`.
    pub fn rt_inverse(&self) -> f64 {
        self.gate_time / self.tau_a
    }

    /// Copy with `tau_a = gate_time / r` (`r = 0` meaning no damping).
    pub fn with_rt_inverse(&self, r: f64) -> Self {
        let tau_a = if r == 0.0 { f64::INFINITY } else { self.gate_time / r };
        Self { tau_a, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcedureResult {
    /// Qubit state after the damping step.
    pub final_rho: DensityMatrix,
    pub final_purity: f64,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    /// Ancilla excited population right after the return pulse.
    pub ancilla_excited_after_return: f64,
    /// Ancilla excited population at the end.
    pub ancilla_excited_final: f64,
    /// `max |ρ̃_f − ρ_f ⊗ |0⟩⟨0||`.
    pub reset_residual: f64,
    /// Smallest eigenvalue over all integrator outputs.
    pub min_eigenvalue: f64,
    /// Largest `|Tr ρ − 1|` seen during integration.
    pub trace_error: f64,
}

fn conj_by(u: &ComplexOperator, rho: &DMatrix<C64>) -> DMatrix<C64> {
    u.matrix() * rho * u.matrix().adjoint()
}

fn min_eig(m: &DMatrix<C64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Activate, gate with damping, deactivate, then let the ancilla relax for
/// another `gate_time`. `w0` is the initial qubit state.
pub fn run_operation_procedure(
    w0: &DensityMatrix,
    params: &DecoherenceParams,
    record_trajectory: bool,
) -> Result<ProcedureResult> {
    params.validate()?;
    if w0.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("qubit state expected, got dim {}", w0.dim())));
    }
    let ground = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ZERO]));
    let mut rho = w0.matrix().kronecker(&ground);
    let pulse = tensor_product(&ComplexOperator::identity(2), &ancilla_pi_pulse())?;

    let gate = Generator::damped(&embedded_operation_hamiltonian(params.j), 1, params.tau_a)?;
    let idle = Generator::damped(&ComplexOperator::zeros(4), 1, params.tau_a)?;

    let mut stats = IntegrationStats::default();
    let mut trajectory = Vec::new();
    let every = (params.gate_time / params.dt).ceil().max(1.0) as usize / 100;
    let mut counter = 0usize;
    let mut sampler = |time: f64, r: &DMatrix<C64>| {
        counter += 1;
        if counter.is_multiple_of(every.max(1)) {
            trajectory.push(TrajectoryPoint {
                time,
                purity: r.iter().map(|z| z.norm_sqr()).sum(),
                trace: r.trace().re,
            });
        }
    };
    let mut min_eigenvalue = f64::INFINITY;

    rho = conj_by(&pulse, &rho);
    let sample: Sampler<'_> =
        if record_trajectory { Some(&mut sampler) } else { None };
    rho = integrate(&rho, &gate, params.gate_time, params.dt, 0.0, &mut stats, sample)?;
    min_eigenvalue = min_eigenvalue.min(min_eig(&rho));
    rho = conj_by(&pulse, &rho);
    let excited = |r: &DMatrix<C64>| r[(1, 1)].re + r[(3, 3)].re;
    let ancilla_excited_after_return = excited(&rho);

    let sample: Sampler<'_> =
        if record_trajectory { Some(&mut sampler) } else { None };
    rho = integrate(&rho, &idle, params.gate_time, params.dt, params.gate_time, &mut stats, sample)?;
    min_eigenvalue = min_eigenvalue.min(min_eig(&rho));

    let full = DensityMatrix::new(rho, vec![2, 2])?;
    let final_rho = partial_trace(&full, &[0])?;
    let product = final_rho.matrix().kronecker(&ground);
    let reset_residual = full
        .matrix()
        .iter()
        .zip(product.iter())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
    Ok(ProcedureResult {
        final_purity: purity(&final_rho),
        ancilla_excited_final: excited(full.matrix()),
        final_rho,
        trajectory: record_trajectory.then_some(trajectory),
        ancilla_excited_after_return,
        reset_residual,
        min_eigenvalue,
        trace_error: stats.max_trace_error,
    })
}

/// One row of a purity curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rt_inverse: f64,
    pub purity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty grid".into()));
    }
    if grid.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParams("grid values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Final purity of the procedure started from `|0,0⟩` for each inverse time
/// ratio in `grid`, with `tau_a = gate_time / r`.
pub fn purity_vs_time_ratio(grid: &[f64], template: &DecoherenceParams, mode: ExecMode) -> Result<Vec<CurvePoint>> {
    check_grid(grid)?;
    template.with_rt_inverse(0.0).validate()?;
    let start = DensityMatrix::pure_basis(0, vec![2])?;
    try_map_indexed(mode, grid.len(), |k| {
        let r = grid[k];
        let res = run_operation_procedure(&start, &template.with_rt_inverse(r), false)?;
        Ok(CurvePoint {
            rt_inverse: r,
            purity: res.final_purity,
            trace_error: res.trace_error,
            min_eigenvalue: res.min_eigenvalue,
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoLevelInitial {
    /// `|1⟩`.
    Excited,
    /// `(|0⟩ + |1⟩)/√2`.
    Superposition,
}

impl TwoLevelInitial {
    fn state(self) -> Result<DensityMatrix> {
        match self {
            TwoLevelInitial::Excited => DensityMatrix::pure_basis(1, vec![2]),
            TwoLevelInitial::Superposition => {
                DensityMatrix::new(DMatrix::from_element(2, 2, C64::new(0.5, 0.0)), vec![2])
            }
        }
    }
}

/// Closed-form purity of an amplitude-damped two-level system after
/// `t/τ = r`.
pub fn two_level_closed_form(initial: TwoLevelInitial, r: f64) -> f64 {
    let p = (-r).exp();
    match initial {
        TwoLevelInitial::Excited => p * p + (1.0 - p) * (1.0 - p),
        TwoLevelInitial::Superposition => {
            let pe = p / 2.0;
            let coh2 = p / 4.0;
            (1.0 - pe).powi(2) + pe * pe + 2.0 * coh2
        }
    }
}

/// Integrated purity of a damped two-level system over one `gate_time`.
pub fn two_level_reference(
    initial: TwoLevelInitial,
    grid: &[f64],
    template: &DecoherenceParams,
    mode: ExecMode,
) -> Result<Vec<CurvePoint>> {
    check_grid(grid)?;
    template.with_rt_inverse(0.0).validate()?;
    let start = initial.state()?;
    let zero = ComplexOperator::zeros(2);
    try_map_indexed(mode, grid.len(), |k| {
        let p = template.with_rt_inverse(grid[k]);
        let gen = Generator::damped(&zero, 1, p.tau_a)?;
        let mut stats = IntegrationStats::default();
        let out = integrate(start.matrix(), &gen, p.gate_time, p.dt, 0.0, &mut stats, None)?;
        let rho = DensityMatrix::new(out, vec![2])?;
        Ok(CurvePoint {
            rt_inverse: grid[k],
            purity: purity(&rho),
            trace_error: stats.max_trace_error,
            min_eigenvalue: rho.min_eigenvalue(),
        })
    })
}

/// Linear map on `n × n` matrices, stored column-stacked.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    n: usize,
    mat: DMatrix<C64>,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.mat * v;
        DMatrix::from_column_slice(self.n, self.n, out.as_slice())
    }

    pub fn unitary(u: &ComplexOperator) -> Self {
        let m = u.matrix();
        Self { n: u.dim(), mat: m.conjugate().kronecker(m) }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Superoperator) -> Superoperator {
        Superoperator { n: self.n, mat: &next.mat * &self.mat }
    }
}

fn matrix_power(m: &DMatrix<C64>, mut n: usize) -> DMatrix<C64> {
    let dim = m.nrows();
    let mut result = DMatrix::<C64>::identity(dim, dim);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Exact `n`-fold RK4 map for the linear generator over `duration`.
pub fn rk4_propagator(gen: &Generator, duration: f64, steps: usize) -> Superoperator {
    Superoperator { n: gen.dim(), mat: rk4_matrix(&gen.liouvillian(), duration, steps) }
}

fn rk4_matrix(l: &DMatrix<C64>, duration: f64, steps: usize) -> DMatrix<C64> {
    let dim = l.nrows();
    if steps == 0 || duration == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let hl = l * C64::new(duration / steps as f64, 0.0);
    let mut one = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for k in 1..=4 {
        term = &term * &hl * C64::new(1.0 / k as f64, 0.0);
        one += &term;
    }
    matrix_power(&one, steps)
}

fn restrict(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Channel on the qubits of a gated window: embed with every ancilla in the
/// ground level, activate, evolve under `h_qubits` (acting while all
/// ancillas are excited) for `gate_time`, deactivate, relax for `gate_time`,
/// trace out the ancillas.
pub fn gated_channel(
    h_qubits: &ComplexOperator,
    ancillas: usize,
    tau_a: f64,
    gate_time: f64,
    steps: usize,
) -> Result<Superoperator> {
    if !(tau_a > 0.0) {
        return Err(Error::InvalidParams(format!("tau_a must be positive, got {tau_a}")));
    }
    if !(gate_time >= 0.0) || !gate_time.is_finite() {
        return Err(Error::InvalidParams(format!("gate_time must be >= 0, got {gate_time}")));
    }
    if !(1..=2).contains(&ancillas) {
        return Err(Error::InvalidParams(format!("{ancillas} ancillas per window")));
    }
    let q = h_qubits.dim();
    let a = 1usize << ancillas;
    let dim = q * a;
    let mut all_excited = DMatrix::<C64>::zeros(a, a);
    all_excited[(a - 1, a - 1)] = ONE;
    let h = ComplexOperator::new(h_qubits.matrix().kronecker(&all_excited))?;

    let mut pulse = ComplexOperator::identity(q);
    for _ in 0..ancillas {
        pulse = tensor_product(&pulse, &ancilla_pi_pulse())?;
    }

    // States |i,α⟩⟨j,α| span an invariant subspace of every map below.
    let sub = |i: usize, j: usize, t: usize| (j * a + t) * dim + (i * a + t);
    let idx: Vec<usize> = (0..a).flat_map(|t| (0..q).flat_map(move |j| (0..q).map(move |i| sub(i, j, t)))).collect();
    let k = |i: usize, j: usize, t: usize| t * q * q + j * q + i;

    let pulse = restrict(&Superoperator::unitary(&pulse).mat, &idx);
    let gate = rk4_matrix(&restrict(&Generator::damped(&h, ancillas, tau_a)?.liouvillian(), &idx), gate_time, steps);
    let idle = Generator::damped(&ComplexOperator::zeros(dim), ancillas, tau_a)?;
    let relax = rk4_matrix(&restrict(&idle.liouvillian(), &idx), gate_time, steps);
    let window = &relax * &pulse * &gate * &pulse;

    let mut out = DMatrix::<C64>::zeros(q * q, q * q);
    for c in 0..q {
        for r in 0..q {
            let col = k(r, c, 0);
            for j in 0..q {
                for i in 0..q {
                    out[(j * q + i, c * q + r)] = (0..a).map(|t| window[(k(i, j, t), col)]).sum();
                }
            }
        }
    }
    Ok(Superoperator { n: q, mat: out })
}
