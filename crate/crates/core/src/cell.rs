//! Cell description, contracted cell basis and the three-site model.
//!
//! A cell holds a qubit `w ∈ {0, 1}` and ancilla levels `0..=m`. Only states
//! with at most one excited ancilla are represented, so the cell space is
//! `{|w, i⟩}` of dimension `2(m + 1)` with index `w·(m + 1) + i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecMode};
use crate::linalg::{hermitian_eigen, ComplexOperator, DensityMatrix, Ket, C64};

/// Largest ancilla count accepted for a cell.
pub const MAX_ANCILLAS: usize = 10;
/// First ancilla index usable as an interaction port.
pub const FIRST_PORT: usize = 6;

/// Operation switched on by an excited ancilla level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sleep,
    Phase,
    RotX,
    RotY,
    RotZ,
    Measure,
    Port,
}

impl Role {
    /// Role carried by ancilla index `i`.
    pub fn for_index(i: usize) -> Role {
        match i {
            0 => Role::Sleep,
            1 => Role::Phase,
            2 => Role::RotX,
            3 => Role::RotY,
            4 => Role::RotZ,
            5 => Role::Measure,
            _ => Role::Port,
        }
    }

    /// Ancilla index of a non-port role.
    pub fn index(self) -> Option<usize> {
        match self {
            Role::Sleep => Some(0),
            Role::Phase => Some(1),
            Role::RotX => Some(2),
            Role::RotY => Some(3),
            Role::RotZ => Some(4),
            Role::Measure => Some(5),
            Role::Port => None,
        }
    }
}

/// Static description of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub m: usize,
    /// `E_0..E_m`.
    pub energies: Vec<f64>,
    /// Role of every ancilla index `0..=m`.
    pub roles: Vec<Role>,
}

impl CellSpec {
    /// Cell with the canonical role map.
    pub fn new(m: usize, energies: Vec<f64>) -> Result<Self> {
        let roles = (0..=m).map(Role::for_index).collect();
        Self::with_roles(m, energies, roles)
    }

    pub fn with_roles(m: usize, energies: Vec<f64>, roles: Vec<Role>) -> Result<Self> {
        let spec = Self { m, energies, roles };
        spec.validate()?;
        Ok(spec)
    }

    /// Cell with energies `E_i = i` (evenly spaced, ground lowest).
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(m, (0..=m).map(|i| i as f64).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > MAX_ANCILLAS {
            return Err(Error::InvalidCellSpec(format!(
                "m = {} exceeds the maximum of {MAX_ANCILLAS}",
                self.m
            )));
        }
        if self.energies.len() != self.m + 1 {
            return Err(Error::InvalidCellSpec(format!(
                "expected {} energies, got {}",
                self.m + 1,
                self.energies.len()
            )));
        }
        if self.roles.len() != self.m + 1 {
            return Err(Error::InvalidCellSpec(format!(
                "expected {} roles, got {}",
                self.m + 1,
                self.roles.len()
            )));
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidCellSpec("energies must be finite".into()));
        }
        for i in 0..=self.m {
            for j in (i + 1)..=self.m {
                if self.energies[i] == self.energies[j] {
                    return Err(Error::InvalidCellSpec(format!(
                        "E_{i} and E_{j} coincide ({})",
                        self.energies[i]
                    )));
                }
            }
            if i > 0 && self.energies[i] < self.energies[0] {
                return Err(Error::InvalidCellSpec(format!("E_{i} lies below E_0")));
            }
        }
        for (i, &role) in self.roles.iter().enumerate() {
            if role != Role::for_index(i) {
                return Err(Error::InvalidCellSpec(format!(
                    "ancilla {i} must have role {:?}, got {role:?}",
                    Role::for_index(i)
                )));
            }
        }
        Ok(())
    }

    /// Dimension of the contracted cell space.
    pub fn dim(&self) -> usize {
        2 * (self.m + 1)
    }

    /// Ancilla indices usable as interaction ports.
    pub fn ports(&self) -> Vec<usize> {
        (FIRST_PORT..=self.m).collect()
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.roles.contains(&role)
    }

    /// Ancilla carrying `role`, if this cell has one (ports excluded).
    pub fn ancilla_for(&self, role: Role) -> Option<usize> {
        role.index().filter(|&i| i <= self.m)
    }

    /// Smallest spacing between any two levels.
    pub fn min_gap(&self) -> f64 {
        let mut e = self.energies.clone();
        e.sort_by(f64::total_cmp);
        e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Index of `|w, i⟩` in the contracted basis of a cell with `m` ancillas.
pub fn basis_index(m: usize, w: usize, i: usize) -> usize {
    w * (m + 1) + i
}

/// Labels `|w,i⟩` of the contracted basis, `w`-major.
pub fn contracted_basis(spec: &CellSpec) -> Vec<String> {
    labels_for(spec.m)
}

pub(crate) fn labels_for(m: usize) -> Vec<String> {
    (0..2)
        .flat_map(|w| (0..=m).map(move |i| format!("|{w},{i}⟩")))
        .collect()
}

/// Density matrix of one cell over its contracted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    m: usize,
    rho: DensityMatrix,
}

impl CellState {
    pub fn new(m: usize, rho: DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 * (m + 1) {
            return Err(Error::DimensionMismatch(format!(
                "cell with m = {m} needs dimension {}, got {}",
                2 * (m + 1),
                rho.dim()
            )));
        }
        let rho = DensityMatrix::with_labels(rho.into_matrix(), vec![2, m + 1], labels_for(m))?;
        Ok(Self { m, rho })
    }

    /// `(c0|0⟩ + c1|1⟩) ⊗ |0⟩_a`, normalized.
    pub fn from_qubit(m: usize, c0: C64, c1: C64) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); 2 * (m + 1)];
        amps[basis_index(m, 0, 0)] = c0;
        amps[basis_index(m, 1, 0)] = c1;
        Self::from_ket(m, &Ket::normalized(amps)?)
    }

    pub fn from_ket(m: usize, ket: &Ket) -> Result<Self> {
        let rho = DensityMatrix::from_ket(ket, vec![2, m + 1])?;
        Self::new(m, rho)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> DensityMatrix {
        self.rho
    }

    /// Population of `|w, i⟩`.
    pub fn population(&self, w: usize, i: usize) -> f64 {
        self.rho.population(basis_index(self.m, w, i))
    }

    /// Total population of ancilla level `i`.
    pub fn ancilla_population(&self, i: usize) -> f64 {
        self.population(0, i) + self.population(1, i)
    }

    /// Reduced qubit state.
    pub fn qubit_state(&self) -> Result<DensityMatrix> {
        crate::linalg::partial_trace(&self.rho, &[0])
    }
}

/// Parameters of the left/center/right dot model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeSiteParams {
    pub e_l: f64,
    pub e_c: f64,
    pub e_r: f64,
    /// Transfer through the center dot.
    pub t: f64,
    /// Direct transfer between the outer dots.
    pub s: f64,
}

impl ThreeSiteParams {
    pub fn new(e_l: f64, e_c: f64, e_r: f64, t: f64, s: f64) -> Result<Self> {
        let p = Self { e_l, e_c, e_r, t, s };
        p.validate()?;
        Ok(p)
    }

    /// Working point for the contraction curves: `t = 1`, `s = 0.001`,
    /// degenerate outer dots and the center dot 100 above them.
    pub fn contraction_default() -> Self {
        Self { e_l: 0.0, e_c: 100.0, e_r: 0.0, t: 1.0, s: 0.001 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.e_l, self.e_c, self.e_r, self.t, self.s];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("three-site parameters must be finite".into()));
        }
        if self.t == 0.0 {
            return Err(Error::InvalidParams("t must be nonzero".into()));
        }
        Ok(())
    }

    /// Outer-dot detuning `E_l − E_r`.
    pub fn detuning(&self) -> f64 {
        self.e_l - self.e_r
    }

    /// Copy with `E_l − E_r = x`, keeping the outer-dot mean.
    pub fn with_detuning(&self, x: f64) -> Self {
        let mean = 0.5 * (self.e_l + self.e_r);
        Self { e_l: mean + 0.5 * x, e_r: mean - 0.5 * x, ..*self }
    }

    pub fn with_s(&self, s: f64) -> Self {
        Self { s, ..*self }
    }
}

/// Hamiltonian in the ordered basis `(l, c, r)`.
///
/// Same-site validation as [`ThreeSiteParams::validate`] is not repeated;
/// `t = 0` is allowed here so the bare site energies can be inspected.
pub fn three_site_hamiltonian(p: &ThreeSiteParams) -> ComplexOperator {
    let (t, s) = (p.t, p.s);
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            [p.e_l, t, s],
            [t, p.e_c, -t],
            [s, -t, p.e_r],
        ]
        .concat()
        .into_iter()
        .map(|x| C64::new(x, 0.0))
        .collect::<Vec<_>>(),
    );
    ComplexOperator::from_matrix_unchecked(m)
}

/// Which eigenstate of the three-site Hamiltonian is analysed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LevelSelector {
    Lowest,
    /// Middle eigenvalue (the default).
    #[default]
    Middle,
    Highest,
}

impl LevelSelector {
    fn index(self) -> usize {
        match self {
            LevelSelector::Lowest => 0,
            LevelSelector::Middle => 1,
            LevelSelector::Highest => 2,
        }
    }
}

/// Eigenvalues within this distance are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Best squared overlap below which level tracking is flagged.
pub const TRACKING_MIN_OVERLAP: f64 = 0.5;

/// `P_l · P_r` for one eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationResult {
    pub product: f64,
    /// Eigenvalue index (ascending) of the selected level.
    pub level: usize,
    pub energy: f64,
    /// The selected eigenvalue has a neighbor within [`DEGENERACY_TOL`].
    pub degenerate: bool,
    /// Products of the degenerate partner levels, when `degenerate`.
    pub alternatives: Vec<f64>,
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    fn of(p: &ThreeSiteParams) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(&three_site_hamiltonian(p))?;
        Ok(Self { values, vectors })
    }

    fn product(&self, k: usize) -> f64 {
        self.vectors[(0, k)].norm_sqr() * self.vectors[(2, k)].norm_sqr()
    }

    fn overlap(&self, k: usize, v: &[C64; 3]) -> f64 {
        (0..3)
            .map(|r| self.vectors[(r, k)].conj() * v[r])
            .sum::<C64>()
            .norm_sqr()
    }

    fn vector(&self, k: usize) -> [C64; 3] {
        [self.vectors[(0, k)], self.vectors[(1, k)], self.vectors[(2, k)]]
    }

    fn result(&self, k: usize) -> OccupationResult {
        let partners: Vec<usize> = (0..3)
            .filter(|&j| j != k && (self.values[j] - self.values[k]).abs() <= DEGENERACY_TOL)
            .collect();
        OccupationResult {
            product: self.product(k),
            level: k,
            energy: self.values[k],
            degenerate: !partners.is_empty(),
            alternatives: partners.iter().map(|&j| self.product(j)).collect(),
        }
    }
}

/// Product of outer-dot occupations of the selected eigenstate.
pub fn occupation_product(p: &ThreeSiteParams, selector: LevelSelector) -> Result<OccupationResult> {
    p.validate()?;
    Ok(Spectrum::of(p)?.result(selector.index()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Direct transfer `s`.
    S,
    /// Outer-dot detuning `E_l − E_r`.
    Detuning,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(SweepAxis::S),
            "detuning" => Ok(SweepAxis::Detuning),
            other => Err(Error::InvalidParams(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub product: f64,
    pub energy: f64,
    pub degenerate: bool,
    /// Level tracking could not find a clear continuation.
    pub ambiguous: bool,
    pub alternatives: Vec<f64>,
}

fn sweep_params(base: &ThreeSiteParams, axis: SweepAxis, x: f64) -> ThreeSiteParams {
    match axis {
        SweepAxis::S => base.with_s(x),
        SweepAxis::Detuning => base.with_detuning(x),
    }
}

/// Occupation product along `grid`, starting from `selector` at the first
/// point and following that level by eigenvector overlap.
pub fn contraction_sweep(
    base: &ThreeSiteParams,
    axis: SweepAxis,
    grid: &[f64],
    selector: LevelSelector,
    mode: ExecMode,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParams("grid values must be finite".into()));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("grid must be sorted ascending".into()));
    }
    base.validate()?;
    let spectra: Vec<Spectrum> = map_slice(mode, grid, |&x| Spectrum::of(&sweep_params(base, axis, x)))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(grid.len());
    let mut level = selector.index();
    let mut prev = spectra[0].vector(level);
    for (k, (spec, &x)) in spectra.iter().zip(grid).enumerate() {
        let mut ambiguous = false;
        if k > 0 {
            let (best, ov) = (0..3)
                .map(|j| (j, spec.overlap(j, &prev)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("three levels");
            level = best;
            ambiguous = ov < TRACKING_MIN_OVERLAP;
        }
        prev = spec.vector(level);
        let r = spec.result(level);
        out.push(SweepPoint {
            x,
            product: r.product,
            energy: r.energy,
            degenerate: r.degenerate,
            ambiguous,
            alternatives: r.alternatives,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Eigenvalues of a real symmetric 3x3 via the trigonometric cubic solution.
    fn cubic_eigenvalues(a: [[f64; 3]; 3]) -> [f64; 3] {
        let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        if p == 0.0 {
            return [q, q, q];
        }
        let mut b = a;
        for (i, row) in b.iter_mut().enumerate() {
            row[i] -= q;
            for x in row.iter_mut() {
                *x /= p;
            }
        }
        let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
            - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        [lo, 3.0 * q - hi - lo, hi]
    }

    /// Product for the middle level via an eigenvector from a cross product.
    fn oracle_middle_product(p: &ThreeSiteParams) -> f64 {
        let a = [[p.e_l, p.t, p.s], [p.t, p.e_c, -p.t], [p.s, -p.t, p.e_r]];
        let lam = cubic_eigenvalues(a)[1];
        let rows: Vec<[f64; 3]> = (0..3)
            .map(|i| {
                let mut r = a[i];
                r[i] -= lam;
                r
            })
            .collect();
        let cross = |u: [f64; 3], v: [f64; 3]| {
            [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
        };
        let cands = [cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])];
        let v = cands
            .iter()
            .max_by(|x, y| {
                let nx: f64 = x.iter().map(|c| c * c).sum();
                let ny: f64 = y.iter().map(|c| c * c).sum();
                nx.total_cmp(&ny)
            })
            .unwrap();
        let n2: f64 = v.iter().map(|c| c * c).sum();
        (v[0] * v[0] / n2) * (v[2] * v[2] / n2)
    }

    #[test]
    fn contracted_basis_labels() {
        let one = CellSpec::uniform(1).unwrap();
        assert_eq!(contracted_basis(&one), vec!["|0,0⟩", "|0,1⟩", "|1,0⟩", "|1,1⟩"]);
        assert_eq!(contracted_basis(&CellSpec::uniform(7).unwrap()).len(), 16);
        assert_eq!(contracted_basis(&CellSpec::uniform(0).unwrap()), vec!["|0,0⟩", "|1,0⟩"]);
    }

    #[test]
    fn cell_spec_validation() {
        assert!(CellSpec::uniform(10).is_ok());
        assert!(CellSpec::uniform(11).is_err());
        assert!(CellSpec::new(2, vec![0.0, 1.0, 1.0]).is_err());
        assert!(CellSpec::new(2, vec![0.5, 0.0, 1.0]).is_err());
        assert!(CellSpec::new(2, vec![0.0, 1.0]).is_err());
        let bad_roles = vec![Role::Sleep, Role::RotX, Role::Phase];
        assert!(CellSpec::with_roles(2, vec![0.0, 1.0, 2.0], bad_roles).is_err());
        let spec = CellSpec::uniform(9).unwrap();
        assert_eq!(spec.ports(), vec![6, 7, 8, 9]);
        assert_eq!(spec.ancilla_for(Role::Measure), Some(5));
        assert_eq!(CellSpec::uniform(3).unwrap().ancilla_for(Role::Measure), None);
    }

    #[test]
    fn cell_state_from_qubit() {
        let s = CellState::from_qubit(3, C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
        assert!((s.population(0, 0) - 0.5).abs() < 1e-15);
        assert!((s.population(1, 0) - 0.5).abs() < 1e-15);
        let q = s.qubit_state().unwrap();
        assert!((q.get(0, 1) - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert_eq!(s.rho().labels()[5], "|1,1⟩");
    }

    #[test]
    fn hamiltonian_structure() {
        let p = ThreeSiteParams::new(0.3, -0.2, 0.7, 1.5, 0.25).unwrap();
        let h = three_site_hamiltonian(&p);
        assert_eq!(h.hermiticity_error(), 0.0);
        assert_eq!(h.get(0, 1).re, 1.5);
        assert_eq!(h.get(1, 2).re, -1.5);
        assert_eq!(h.get(0, 2).re, 0.25);
    }

    #[test]
    fn spectrum_at_zero_energies() {
        let p = ThreeSiteParams::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let (ev, vecs) = hermitian_eigen(&three_site_hamiltonian(&p)).unwrap();
        let r2 = 2f64.sqrt();
        for (got, want) in ev.iter().zip([-r2, 0.0, r2]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(vecs[(1, 1)].norm() < 1e-12);
        assert!((vecs[(0, 1)].norm() - vecs[(2, 1)].norm()).abs() < 1e-12);
        let r = occupation_product(&p, LevelSelector::Middle).unwrap();
        assert!((r.product - 0.25).abs() < 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn zero_coupling_returns_site_energies() {
        let p = ThreeSiteParams { e_l: 2.0, e_c: -1.0, e_r: 0.5, t: 0.0, s: 0.0 };
        let (ev, _) = hermitian_eigen(&three_site_hamiltonian(&p)).unwrap();
        assert_eq!(ev, vec![-1.0, 0.5, 2.0]);
        assert!(ThreeSiteParams::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn large_detuning_localizes() {
        let base = ThreeSiteParams::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        for sel in [LevelSelector::Lowest, LevelSelector::Middle, LevelSelector::Highest] {
            let r = occupation_product(&base.with_detuning(100.0), sel).unwrap();
            assert!(r.product < 1e-3, "{sel:?}: {}", r.product);
        }
    }

    #[test]
    fn degeneracy_is_flagged() {
        let p = ThreeSiteParams::new(1.0, 1.0, 5.0, 1e-30, 0.0).unwrap();
        let r = occupation_product(&p, LevelSelector::Lowest).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.alternatives.len(), 1);
    }

    #[test]
    fn matches_cubic_oracle() {
        let cases = [
            ThreeSiteParams::contraction_default(),
            ThreeSiteParams::contraction_default().with_detuning(0.07),
            ThreeSiteParams::new(0.2, 3.0, -0.4, 0.8, 0.1).unwrap(),
            ThreeSiteParams::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap(),
        ];
        for p in cases {
            let got = occupation_product(&p, LevelSelector::Middle).unwrap().product;
            assert!((got - oracle_middle_product(&p)).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn sweep_single_point_equals_base() {
        let base = ThreeSiteParams::contraction_default();
        let pts = contraction_sweep(&base, SweepAxis::Detuning, &[0.0], LevelSelector::Middle, ExecMode::Sequential)
            .unwrap();
        assert_eq!(pts.len(), 1);
        let direct = occupation_product(&base, LevelSelector::Middle).unwrap().product;
        assert_eq!(pts[0].product, direct);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let base = ThreeSiteParams::contraction_default();
        let run = |g: &[f64]| contraction_sweep(&base, SweepAxis::S, g, LevelSelector::Middle, ExecMode::Sequential);
        assert!(run(&[]).is_err());
        assert!(run(&[0.2, 0.1]).is_err());
        assert!(run(&[f64::NAN]).is_err());
    }

    #[test]
    fn detuning_sweep_is_monotone_and_matches_oracle() {
        let base = ThreeSiteParams::contraction_default();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.005).collect();
        let seq = contraction_sweep(&base, SweepAxis::Detuning, &grid, LevelSelector::Middle, ExecMode::Sequential)
            .unwrap();
        let par = contraction_sweep(&base, SweepAxis::Detuning, &grid, LevelSelector::Middle, ExecMode::Parallel)
            .unwrap();
        assert_eq!(seq, par);
        for w in seq.windows(2) {
            assert!(w[1].product <= w[0].product + 1e-12);
        }
        for pt in &seq {
            let oracle = oracle_middle_product(&base.with_detuning(pt.x));
            assert!((pt.product - oracle).abs() < 1e-9);
            assert!(!pt.ambiguous && !pt.degenerate);
        }
    }

    #[test]
    fn s_sweep_is_monotone_at_fixed_detuning() {
        let base = ThreeSiteParams::contraction_default().with_detuning(0.05);
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.0025).collect();
        let pts = contraction_sweep(&base, SweepAxis::S, &grid, LevelSelector::Middle, ExecMode::Sequential)
            .unwrap();
        for w in pts.windows(2) {
            assert!(w[1].product >= w[0].product - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trace_identity(el in -5.0f64..5.0, ec in -5.0f64..5.0, er in -5.0f64..5.0,
                          t in 0.1f64..3.0, s in -1.0f64..1.0) {
            let p = ThreeSiteParams::new(el, ec, er, t, s).unwrap();
            let (ev, _) = hermitian_eigen(&three_site_hamiltonian(&p)).unwrap();
            prop_assert!((ev.iter().sum::<f64>() - (el + ec + er)).abs() < 1e-10);
        }

        #[test]
        fn shift_invariance(el in -2.0f64..2.0, ec in -2.0f64..2.0, er in -2.0f64..2.0,
                            t in 0.2f64..2.0, s in 0.0f64..0.5) {
            let p = ThreeSiteParams::new(el, ec, er, t, s).unwrap();
            let r0 = occupation_product(&p, LevelSelector::Middle).unwrap();
            prop_assume!(!r0.degenerate);
            for c in [-5.0, 1.0, 17.0] {
                let q = ThreeSiteParams { e_l: el + c, e_c: ec + c, e_r: er + c, ..p };
                let r = occupation_product(&q, LevelSelector::Middle).unwrap();
                prop_assert!((r.product - r0.product).abs() < 1e-10);
            }
        }

        #[test]
        fn mirror_symmetry(el in -2.0f64..2.0, ec in -2.0f64..2.0, er in -2.0f64..2.0,
                           t in 0.2f64..2.0, s in -0.5f64..0.5) {
            let p = ThreeSiteParams::new(el, ec, er, t, s).unwrap();
            let q = ThreeSiteParams::new(er, ec, el, -t, s).unwrap();
            for sel in [LevelSelector::Lowest, LevelSelector::Middle, LevelSelector::Highest] {
                let a = occupation_product(&p, sel).unwrap().product;
                let b = occupation_product(&q, sel).unwrap().product;
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
