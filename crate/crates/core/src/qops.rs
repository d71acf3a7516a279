//! Dense complex-matrix kernel: Hermitian spectral calculus and the three
//! distinguishability measures (trace distance, fidelity, hockey-stick
//! divergence) used throughout the crate.
//!
//! Every spectral computation symmetrizes its input, `H <- (H + H^dagger)/2`,
//! before calling the Hermitian eigensolver. Square roots clamp negative
//! eigenvalues to zero.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{QldpError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max-abs deviation from Hermiticity accepted by [`HermitianOperator::new`].
pub const TOL_HERM: f64 = 1e-10;
/// Most negative eigenvalue accepted for a positive semidefinite operator.
pub const TOL_PSD: f64 = 1e-10;
/// Tolerance for analytic identities (unitarity, trace preservation, involutions).
pub const TOL_IDENTITY: f64 = 1e-9;
/// Norm tolerance for pure-state amplitudes.
pub const TOL_NORM: f64 = 1e-12;

/// A real number as a complex scalar.
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(u.nrows(), u.ncols())) <= tol
}

pub(crate) fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// `Re Tr[a b]` without forming the product.
pub(crate) fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub(crate) fn eigvals_sorted(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigendecomposition of the Hermitian part of `m`, sorted ascending.
pub(crate) fn eigh_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `Σ_i f(λ_i) |i⟩⟨i|` for the Hermitian part of `m`.
pub(crate) fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()).scale(w);
    }
    out
}

pub(crate) fn psd_sqrt(m: &CMatrix) -> CMatrix {
    spectral_map(m, |l| l.max(0.0).sqrt())
}

/// `Tr[(a - γ b)_+]` on raw matrices; callers guarantee Hermitian inputs.
pub(crate) fn hockey_stick_raw(a: &CMatrix, b: &CMatrix, gamma: f64) -> f64 {
    let diff = a - b.scale(gamma);
    eigvals_sorted(&diff).into_iter().filter(|&l| l > 0.0).sum::<f64>()
}

pub(crate) fn trace_distance_raw(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * eigvals_sorted(&(a - b)).into_iter().map(f64::abs).sum::<f64>()
}

/// Eigenvalues below this fraction of the largest are treated as round-off.
/// Square roots amplify `1e-17` noise to `3e-9`, so fidelity drops them.
const SPECTRAL_FLOOR: f64 = 1e-14;

pub(crate) fn fidelity_raw(a: &CMatrix, b: &CMatrix) -> f64 {
    // restrict to the support of `a`: the nonzero spectrum of √a b √a equals
    // that of W† b W with W = V_k diag(√λ_k)
    let (vals, vecs) = eigh_sorted(a);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > SPECTRAL_FLOOR * top).collect();
    if keep.is_empty() {
        return 0.0;
    }
    let w = CMatrix::from_fn(a.nrows(), keep.len(), |r, j| vecs[(r, keep[j])] * vals[keep[j]].sqrt());
    let inner = w.adjoint() * b * &w;
    let mu = eigvals_sorted(&inner);
    let mu_top = mu.last().copied().unwrap_or(0.0).max(0.0);
    let root_sum: f64 = mu.into_iter().filter(|&l| l > SPECTRAL_FLOOR * mu_top).map(f64::sqrt).sum();
    (root_sum * root_sum).clamp(0.0, 1.0)
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity within [`TOL_HERM`] and stores the symmetrized matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QldpError::invalid(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QldpError::invalid("operator has non-finite entries"));
        }
        let dev = max_abs_diff(&matrix, &matrix.adjoint());
        if dev > TOL_HERM {
            return Err(QldpError::invalid(format!(
                "operator is not Hermitian (max |H - H^dagger| = {dev:.3e})"
            )));
        }
        Ok(Self {
            matrix: hermitian_part(&matrix),
        })
    }

    pub(crate) fn from_hermitian_unchecked(matrix: CMatrix) -> Self {
        Self {
            matrix: hermitian_part(&matrix),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            matrix: CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i]) } else { c(0.0) }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.matrix)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvals_sorted(&self.matrix)
    }

    /// Ascending eigenvalues with matching orthonormal eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        eigh_sorted(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("non-empty operator")
    }

    /// `Tr[self · ρ]`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product_re(&self.matrix, rho.matrix())
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        Self::from_hermitian_unchecked(&self.matrix - &other.matrix)
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self {
            matrix: self.matrix.scale(s),
        }
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> HermitianOperator {
        Self::from_hermitian_unchecked(u * &self.matrix * u.adjoint())
    }
}

/// A positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::from_operator(HermitianOperator::new(matrix)?)
    }

    pub fn from_operator(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TOL_PSD {
            return Err(QldpError::invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let lmin = op.min_eigenvalue();
        if lmin < -TOL_PSD {
            return Err(QldpError::invalid(format!(
                "density matrix is not positive semidefinite (min eigenvalue {lmin:.3e})"
            )));
        }
        Ok(Self { op })
    }

    /// Wraps a matrix already known to be a state (channel outputs, convex mixtures).
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self {
            op: HermitianOperator::from_hermitian_unchecked(matrix),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self::from_matrix_unchecked(psi.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        Self::from_pure(&PureState::basis(dim, index))
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::from_operator(HermitianOperator::from_real_diagonal(probs))
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> DensityMatrix {
        Self::from_matrix_unchecked(u * self.matrix() * u.adjoint())
    }

    /// Diagonal of the matrix in the computational basis (Born probabilities).
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        self.matrix().diagonal().iter().map(|z| z.re.max(0.0)).collect()
    }
}

/// A unit vector in `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || (norm - 1.0).abs() > TOL_NORM {
            return Err(QldpError::invalid(format!("pure state must have unit norm, got {norm}")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(QldpError::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            amplitudes: v.unscale(norm),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

fn check_same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(QldpError::invalid(format!(
            "dimension mismatch: {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// `(H)_+ = Σ_{λ_i ≥ 0} λ_i |i⟩⟨i|`.
pub fn positive_part(h: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_hermitian_unchecked(spectral_map(h.matrix(), |l| if l >= 0.0 { l } else { 0.0 }))
}

/// Normalized trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    Ok(trace_distance_raw(rho.matrix(), sigma.matrix()).clamp(0.0, 1.0))
}

/// Uhlmann fidelity `‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    Ok(fidelity_raw(rho.matrix(), sigma.matrix()))
}

/// Quantum hockey-stick divergence `E_γ(ρ‖σ) = Tr[(ρ − γσ)_+]`.
pub fn hockey_stick(rho: &DensityMatrix, sigma: &DensityMatrix, gamma: f64) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(QldpError::invalid(format!("hockey-stick parameter must satisfy gamma >= 1, got {gamma}")));
    }
    Ok(hockey_stick_raw(rho.matrix(), sigma.matrix(), gamma).clamp(0.0, 1.0))
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| complex_gaussian(rng))
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        if let Ok(psi) = PureState::normalized(gaussian_vector(dim, rng)) {
            return psi;
        }
    }
}

/// Mixture of `rank` Haar-random pure states with Dirichlet(1, …, 1) weights.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(QldpError::invalid(format!(
            "random_density needs 1 <= rank <= dim, got dim={dim}, rank={rank}"
        )));
    }
    let raw: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut m = CMatrix::zeros(dim, dim);
    for w in raw {
        m += random_pure(dim, rng).projector().scale(w / total);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Orthonormalizes the columns of `m` (modified Gram-Schmidt). Returns `None`
/// if the columns are numerically dependent.
pub(crate) fn orthonormalize_columns(m: &CMatrix) -> Option<CMatrix> {
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for k in 0..j {
            let proj = q.column(k).dotc(&q.column(j));
            let qk = q.column(k).clone_owned();
            let mut col = q.column_mut(j);
            col -= qk * proj;
        }
        let norm = q.column(j).norm();
        if norm < 1e-12 {
            return None;
        }
        let mut col = q.column_mut(j);
        col.unscale_mut(norm);
    }
    Some(q)
}
