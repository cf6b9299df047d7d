//! Complex operators, kets and density matrices.
//!
//! Index convention, used everywhere in the crate: for a tensor product
//! `A ⊗ B` the combined index is `i_a * dim_b + i_b`, i.e. the left factor
//! varies slowest. A cell's qubit is always the left (slowest) factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default cap on the dimension produced by [`tensor_product`].
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

/// Unitarity tolerance for constructed gates.
pub const UNITARY_TOL: f64 = 1e-12;
/// Hermiticity tolerance (max elementwise deviation).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    mat: DMatrix<C64>,
}

impl ComplexOperator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { mat })
    }

    /// Builds an operator from row slices.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self { mat: DMatrix::from_diagonal(&DVector::from_column_slice(entries)) }
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim(), rhs.dim())));
        }
        Ok(Self { mat: &self.mat * &rhs.mat })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { mat: &self.mat * s }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim(), rhs.dim())));
        }
        Ok(Self { mat: &self.mat + &rhs.mat })
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `max |self_ij - other_ij|`; infinite when dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.mat - &other.mat))
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.mat - self.mat.adjoint()))
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.mat.adjoint() * &self.mat - DMatrix::<C64>::identity(n, n)))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// Distance to `other` after removing the best global phase:
    /// `min_α ‖self − e^{iα} other‖_max`, with `α` taken from `Tr(other† self)`.
    pub fn phase_aligned_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let overlap = (other.mat.adjoint() * &self.mat).trace();
        if overlap.norm() < 1e-300 {
            return max_abs(&(&self.mat - &other.mat)).max(1.0);
        }
        let phase = overlap / overlap.norm();
        max_abs(&(&self.mat - &other.mat * phase))
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator {} vs ket {}",
                self.dim(),
                ket.dim()
            )));
        }
        Ok(Ket { amps: &self.mat * &ket.amps })
    }
}

/// Kronecker product `a ⊗ b` with the default dimension cap.
pub fn tensor_product(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    tensor_product_capped(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_product_capped(
    a: &ComplexOperator,
    b: &ComplexOperator,
    cap: usize,
) -> Result<ComplexOperator> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::DimensionOverflow { dim: usize::MAX, cap })?;
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    Ok(ComplexOperator { mat: a.mat.kronecker(&b.mat) })
}

/// Folds [`tensor_product`] over a list, left to right.
pub fn tensor_all(ops: &[ComplexOperator]) -> Result<ComplexOperator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::DimensionMismatch("empty tensor product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, op| tensor_product(&acc, op))
}

/// State vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: DVector<C64>,
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionMismatch("empty ket".into()));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { amps: DVector::from_vec(amps) })
    }

    /// Normalized copy; fails on a zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let k = Self::new(amps)?;
        let n = k.norm();
        if n < 1e-300 {
            return Err(Error::InvalidParams("cannot normalize a zero vector".into()));
        }
        Ok(Self { amps: k.amps / C64::new(n, 0.0) })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub(crate) fn from_vector(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.amps[i]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-9
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket { amps: self.amps.kronecker(&other.amps) }
    }

    /// `|ψ⟩⟨ψ|` as a raw matrix.
    pub fn projector(&self) -> DMatrix<C64> {
        &self.amps * self.amps.adjoint()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix over a declared
/// tensor structure.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
    dims: Vec<usize>,
    labels: Vec<String>,
}

fn default_labels(dims: &[usize]) -> Vec<String> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut digits = vec![0; dims.len()];
            for (k, &d) in dims.iter().enumerate().rev() {
                digits[k] = idx % d;
                idx /= d;
            }
            let body: Vec<String> = digits.iter().map(|d| d.to_string()).collect();
            format!("|{}⟩", body.join(","))
        })
        .collect()
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(mat: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let labels = default_labels(&dims);
        Self::with_labels(mat, dims, labels)
    }

    pub fn with_labels(mat: DMatrix<C64>, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let op = ComplexOperator::new(mat)?;
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) || total != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {:?} do not factor dimension {}",
                dims,
                op.dim()
            )));
        }
        if labels.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for dimension {}",
                labels.len(),
                total
            )));
        }
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} is not 1")));
        }
        let rho = Self { mat: op.mat, dims, labels };
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`; the ket is normalized first.
    pub fn from_ket(ket: &Ket, dims: Vec<usize>) -> Result<Self> {
        let k = Ket::normalized(ket.amps.iter().copied().collect())?;
        Self::new(k.projector(), dims)
    }

    pub fn pure_basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let total = dims.iter().product();
        Self::from_ket(&Ket::basis(total, index)?, dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        let mat = DMatrix::<C64>::identity(n, n) * C64::new(1.0 / n as f64, 0.0);
        Self::new(mat, dims)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn population(&self, i: usize) -> f64 {
        self.mat[(i, i)].re
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.mat.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs(&(&self.mat - &other.mat))
    }
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.mat.iter().map(|z| z.norm_sqr()).sum()
}

/// Hermitian eigendecomposition `h = V diag(λ) V†`; eigenvalues ascending.
pub fn hermitian_eigen(h: &ComplexOperator) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    let eig = h.mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.dim(), h.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `e^{−iHt}` via the Hermitian eigendecomposition of `h`.
pub fn propagator(h: &ComplexOperator, t: f64) -> Result<ComplexOperator> {
    let (values, v) = hermitian_eigen(h)?;
    let phases = DVector::from_iterator(values.len(), values.iter().map(|&e| (-I * e * t).exp()));
    let u = &v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(ComplexOperator::from_matrix_unchecked(u))
}

/// `e^{−iHt} ρ e^{+iHt}`.
pub fn evolve_unitary(rho: &DensityMatrix, h: &ComplexOperator, t: f64) -> Result<DensityMatrix> {
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian {} vs state {}",
            h.dim(),
            rho.dim()
        )));
    }
    let u = propagator(h, t)?;
    let mut out = &u.mat * &rho.mat * u.mat.adjoint();
    hermitize(&mut out);
    DensityMatrix::with_labels(out, rho.dims.clone(), rho.labels.clone())
}

/// Replaces `m` by `(m + m†)/2` and returns the removed anti-Hermitian size.
pub(crate) fn hermitize(m: &mut DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        let d = m[(i, i)];
        dev = dev.max(d.im.abs());
        m[(i, i)] = C64::new(d.re, 0.0);
        for j in (i + 1)..n {
            let a = m[(i, j)];
            let b = m[(j, i)].conj();
            dev = dev.max((a - b).norm() / 2.0);
            let avg = (a + b) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    dev
}

/// Reduced density matrix over the subsystems listed in `keep` (strictly
/// ascending indices into `rho.dims()`).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if keep.is_empty() {
        return Err(Error::InvalidSelector("nothing to keep".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSelector(format!("{keep:?} is not strictly ascending")));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidSelector(format!(
            "subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();

    // Offsets of every multi-index of a subsystem group inside the full index.
    let offsets = |group: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &k in group {
            let stride = strides[k];
            offs = offs
                .iter()
                .flat_map(|&o| (0..dims[k]).map(move |v| o + v * stride))
                .collect();
        }
        offs
    };
    let kept_offs = offsets(keep);
    let traced_offs = offsets(&traced);

    let n = kept_offs.len();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (a, &ra) in kept_offs.iter().enumerate() {
        for (b, &rb) in kept_offs.iter().enumerate() {
            out[(a, b)] = traced_offs.iter().map(|&t| rho.mat[(ra + t, rb + t)]).sum();
        }
    }
    hermitize(&mut out);
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    DensityMatrix::new(out, kept_dims)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| C64::new(e.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let s = psd_sqrt(&rho.mat);
    let mut inner = &s * &sigma.mat * &s;
    hermitize(&mut inner);
    let f: f64 = inner.symmetric_eigen().eigenvalues.iter().map(|&e| e.max(0.0).sqrt()).sum();
    Ok((f * f).min(1.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_with_pure(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), psi.dim())));
    }
    Ok(psi.amps.dotc(&(&rho.mat * &psi.amps)).re)
}

pub fn pauli_x() -> ComplexOperator {
    ComplexOperator::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
}

pub fn pauli_y() -> ComplexOperator {
    ComplexOperator::from_matrix_unchecked(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
}

pub fn pauli_z() -> ComplexOperator {
    ComplexOperator::diagonal(&[ONE, -ONE])
}
