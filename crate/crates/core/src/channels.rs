//! CPTP channels stored as Kraus lists with a lazily built superoperator.
//!
//! Superoperators use the column-stacking convention, `vec(ρ)[i + j·d] = ρ[i, j]`,
//! so `vec(K ρ K†) = (conj(K) ⊗ K) vec(ρ)`. nalgebra stores matrices
//! column-major, which makes `vec` a plain view of the storage.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{QldpError, Result};
use crate::qops::{
    c, eigh_sorted, hermitian_part, is_unitary, max_abs_diff, psd_sqrt, random_unitary, CMatrix, CVector,
    DensityMatrix, HermitianOperator, TOL_IDENTITY,
};

/// Max-abs superoperator distance under which two channels are considered equal.
pub const CHANNEL_EQ_TOL: f64 = 1e-9;

/// A completely positive, trace-preserving map `L(C^dim_in) -> L(C^dim_out)`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
    superop: OnceLock<CMatrix>,
}

impl QuantumChannel {
    /// Builds a channel from Kraus operators of shape `dim_out x dim_in`,
    /// checking `Σ K†K = I` within [`TOL_IDENTITY`].
    pub fn from_kraus(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(QldpError::invalid("channel dimensions must be positive"));
        }
        if kraus.is_empty() {
            return Err(QldpError::invalid("channel needs at least one Kraus operator"));
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(QldpError::invalid(format!(
                    "Kraus operator {i} has shape {:?}, expected ({dim_out}, {dim_in})",
                    k.shape()
                )));
            }
        }
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &CMatrix::identity(dim_in, dim_in));
        if dev > TOL_IDENTITY {
            return Err(QldpError::invalid(format!(
                "Kraus operators are not trace preserving (max |ΣK†K - I| = {dev:.3e})"
            )));
        }
        Ok(Self::from_kraus_unchecked(dim_in, dim_out, kraus))
    }

    fn from_kraus_unchecked(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Self {
        Self {
            dim_in,
            dim_out,
            kraus,
            superop: OnceLock::new(),
        }
    }

    /// Recovers a Kraus representation from a superoperator via the Choi matrix.
    pub fn from_superoperator(dim_in: usize, dim_out: usize, superop: CMatrix) -> Result<Self> {
        if superop.shape() != (dim_out * dim_out, dim_in * dim_in) {
            return Err(QldpError::invalid("superoperator shape does not match dimensions"));
        }
        let n = dim_in * dim_out;
        // J[(i·d_out + a, j·d_out + b)] = N(|i><j|)[a, b]
        let mut choi = CMatrix::zeros(n, n);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let col = superop.column(i + j * dim_in);
                for a in 0..dim_out {
                    for b in 0..dim_out {
                        choi[(i * dim_out + a, j * dim_out + b)] = col[a + b * dim_out];
                    }
                }
            }
        }
        let (values, vectors) = eigh_sorted(&choi);
        if values[0] < -1e-9 {
            return Err(QldpError::invalid(format!(
                "superoperator is not completely positive (Choi eigenvalue {:.3e})",
                values[0]
            )));
        }
        let kraus: Vec<CMatrix> = values
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-14)
            .map(|(k, &l)| {
                let s = l.sqrt();
                CMatrix::from_fn(dim_out, dim_in, |a, i| vectors[(i * dim_out + a, k)] * s)
            })
            .collect();
        let ch = Self::from_kraus(dim_in, dim_out, kraus)?;
        let _ = ch.superop.set(superop);
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kraus_unchecked(dim, dim, vec![CMatrix::identity(dim, dim)])
    }

    /// Replacement channel `ρ ↦ Tr(ρ) σ`.
    pub fn replacement(dim_in: usize, sigma: &DensityMatrix) -> Self {
        let d_out = sigma.dim();
        let (values, vectors) = eigh_sorted(sigma.matrix());
        let mut kraus = Vec::new();
        for (k, &l) in values.iter().enumerate() {
            if l <= 1e-15 {
                continue;
            }
            let v = vectors.column(k);
            for j in 0..dim_in {
                let mut m = CMatrix::zeros(d_out, dim_in);
                m.set_column(j, &(v * c(l.sqrt())));
                kraus.push(m);
            }
        }
        Self::from_kraus_unchecked(dim_in, d_out, kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ conj(K) ⊗ K`, built on first use.
    pub fn superoperator(&self) -> &CMatrix {
        self.superop.get_or_init(|| {
            let mut s = CMatrix::zeros(self.dim_out * self.dim_out, self.dim_in * self.dim_in);
            for k in &self.kraus {
                s += k.conjugate().kronecker(k);
            }
            s
        })
    }

    fn check_input(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.dim_in {
            return Err(QldpError::invalid(format!(
                "state dimension {} does not match channel input dimension {}",
                rho.dim(),
                self.dim_in
            )));
        }
        Ok(())
    }

    /// `Σ K ρ K†`.
    pub fn apply_kraus(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_input(rho)?;
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        Ok(DensityMatrix::from_matrix_unchecked(hermitian_part(&out)))
    }

    /// Superoperator action on `vec(ρ)`.
    pub fn apply_superop(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_input(rho)?;
        Ok(DensityMatrix::from_matrix_unchecked(hermitian_part(&self.apply_superop_raw(rho.matrix()))))
    }

    fn apply_superop_raw(&self, rho: &CMatrix) -> CMatrix {
        let v = self.superoperator() * CVector::from_column_slice(rho.as_slice());
        CMatrix::from_column_slice(self.dim_out, self.dim_out, v.as_slice())
    }

    fn kraus_cost(&self) -> usize {
        self.kraus.len() * self.dim_out * self.dim_in * (self.dim_in + self.dim_out)
    }

    /// Applies the channel through whichever representation is cheaper.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.kraus_cost() > (self.dim_out * self.dim_in).pow(2) {
            self.apply_superop(rho)
        } else {
            self.apply_kraus(rho)
        }
    }

    /// Output on the pure input `|ψ⟩⟨ψ|`, computed as `Σ (Kψ)(Kψ)†`.
    pub(crate) fn apply_pure_raw(&self, psi: &CVector) -> CMatrix {
        if self.kraus.len() * self.dim_out * (self.dim_in + self.dim_out) > (self.dim_out * self.dim_in).pow(2) {
            return hermitian_part(&self.apply_superop_raw(&(psi * psi.adjoint())));
        }
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            let v = k * psi;
            out += &v * v.adjoint();
        }
        out
    }

    /// Max-abs superoperator distance to `other` is below [`CHANNEL_EQ_TOL`].
    pub fn approx_eq(&self, other: &QuantumChannel) -> bool {
        self.superop_distance(other).is_some_and(|d| d < CHANNEL_EQ_TOL)
    }

    pub fn superop_distance(&self, other: &QuantumChannel) -> Option<f64> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return None;
        }
        Some(max_abs_diff(self.superoperator(), other.superoperator()))
    }
}

/// `A_p(ρ) = (1 − p) ρ + p Tr(ρ) I/d`.
pub fn depolarizing(d: usize, p: f64) -> Result<QuantumChannel> {
    if d < 2 {
        return Err(QldpError::invalid(format!("depolarizing channel needs d >= 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(QldpError::invalid(format!("depolarizing parameter must lie in [0, 1], got {p}")));
    }
    let mut kraus = Vec::with_capacity(d * d + 1);
    if p < 1.0 {
        kraus.push(CMatrix::identity(d, d).scale((1.0 - p).sqrt()));
    }
    if p > 0.0 {
        let w = (p / d as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let mut m = CMatrix::zeros(d, d);
                m[(i, j)] = c(w);
                kraus.push(m);
            }
        }
    }
    Ok(QuantumChannel::from_kraus_unchecked(d, d, kraus))
}

/// Unitary channel `ρ ↦ U ρ U†`.
pub fn unitary_conjugate(u: &CMatrix) -> Result<QuantumChannel> {
    if !is_unitary(u, TOL_IDENTITY) {
        return Err(QldpError::invalid("matrix is not unitary"));
    }
    Ok(QuantumChannel::from_kraus_unchecked(u.ncols(), u.nrows(), vec![u.clone()]))
}

/// `N_U = U† N(U · U†) U`.
pub fn conjugated_channel(n: &QuantumChannel, u: &CMatrix) -> Result<QuantumChannel> {
    if !is_unitary(u, TOL_IDENTITY) {
        return Err(QldpError::invalid("matrix is not unitary"));
    }
    if n.dim_in != n.dim_out || n.dim_in != u.nrows() {
        return Err(QldpError::invalid("conjugation needs a square channel matching the unitary dimension"));
    }
    let ud = u.adjoint();
    let kraus = n.kraus.iter().map(|k| &ud * k * u).collect();
    Ok(QuantumChannel::from_kraus_unchecked(n.dim_in, n.dim_out, kraus))
}

/// Two-outcome measurement of an involution `P`, recording the outcome in a qubit:
/// `M_P(ρ) = Tr[(I+P)/2 ρ] |0⟩⟨0| + Tr[(I−P)/2 ρ] |1⟩⟨1|`.
pub fn pauli_measurement_channel(p: &HermitianOperator) -> Result<QuantumChannel> {
    let d = p.dim();
    let id = CMatrix::identity(d, d);
    if max_abs_diff(&(p.matrix() * p.matrix()), &id) > TOL_IDENTITY {
        return Err(QldpError::invalid("measured operator must square to the identity"));
    }
    let plus = (&id + p.matrix()).scale(0.5);
    let minus = (&id - p.matrix()).scale(0.5);
    Ok(two_outcome_channel(&plus, &minus))
}

/// Two-outcome POVM channel `M_O(ρ) = Tr[Oρ] |0⟩⟨0| + Tr[(I−O)ρ] |1⟩⟨1|` for `0 ≤ O ≤ I`.
pub fn povm_measurement_channel(o: &HermitianOperator) -> Result<QuantumChannel> {
    let ev = o.eigenvalues();
    if ev[0] < -TOL_IDENTITY || *ev.last().unwrap() > 1.0 + TOL_IDENTITY {
        return Err(QldpError::invalid("POVM element must satisfy 0 <= O <= I"));
    }
    let d = o.dim();
    let id = CMatrix::identity(d, d);
    let e0 = psd_sqrt(o.matrix());
    let e1 = psd_sqrt(&(&id - o.matrix()));
    // square roots of the effects, so that Σ K†K = O + (I − O)
    Ok(two_outcome_from_roots(&e0, &e1))
}

fn two_outcome_channel(plus: &CMatrix, minus: &CMatrix) -> QuantumChannel {
    // projectors are their own square roots
    two_outcome_from_roots(plus, minus)
}

fn two_outcome_from_roots(root0: &CMatrix, root1: &CMatrix) -> QuantumChannel {
    let d = root0.nrows();
    let mut kraus = Vec::with_capacity(2 * d);
    for (outcome, root) in [(0usize, root0), (1usize, root1)] {
        for j in 0..d {
            let mut k = CMatrix::zeros(2, d);
            k.set_row(outcome, &root.row(j));
            kraus.push(k);
        }
    }
    QuantumChannel::from_kraus_unchecked(d, 2, kraus)
}

/// Dephasing measurement in the computational basis, `ρ ↦ Σ_b ⟨b|ρ|b⟩ |b⟩⟨b|`.
pub fn computational_measurement(d: usize) -> QuantumChannel {
    let kraus = (0..d)
        .map(|b| {
            let mut m = CMatrix::zeros(d, d);
            m[(b, b)] = c(1.0);
            m
        })
        .collect();
    QuantumChannel::from_kraus_unchecked(d, d, kraus)
}

/// `A ∘ B`: apply `b` first, then `a`.
pub fn compose(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    if b.dim_out != a.dim_in {
        return Err(QldpError::invalid(format!(
            "cannot compose: inner output dim {} != outer input dim {}",
            b.dim_out, a.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
    for ka in &a.kraus {
        for kb in &b.kraus {
            kraus.push(ka * kb);
        }
    }
    Ok(QuantumChannel::from_kraus_unchecked(b.dim_in, a.dim_out, kraus))
}

/// Convex combination `Σ w_i N_i`.
pub fn mixture(parts: &[(f64, &QuantumChannel)]) -> Result<QuantumChannel> {
    let first = parts.first().ok_or_else(|| QldpError::invalid("empty mixture"))?.1;
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TOL_IDENTITY {
        return Err(QldpError::invalid("mixture weights must be nonnegative and sum to 1"));
    }
    let mut kraus = Vec::new();
    for (w, ch) in parts {
        if ch.dim_in != first.dim_in || ch.dim_out != first.dim_out {
            return Err(QldpError::invalid("mixture components have different dimensions"));
        }
        if *w == 0.0 {
            continue;
        }
        kraus.extend(ch.kraus.iter().map(|k| k.scale(w.sqrt())));
    }
    Ok(QuantumChannel::from_kraus_unchecked(first.dim_in, first.dim_out, kraus))
}

/// Random channel from a Haar-random Stinespring isometry with `kraus_rank` outputs.
pub fn random_channel<R: Rng + ?Sized>(dim_in: usize, dim_out: usize, kraus_rank: usize, rng: &mut R) -> QuantumChannel {
    assert!(dim_in >= 1 && dim_out >= 1 && kraus_rank >= 1);
    let big = (dim_out * kraus_rank).max(dim_in);
    let u = random_unitary(big, rng);
    let kraus = (0..kraus_rank)
        .filter_map(|k| {
            let rows = k * dim_out..(k + 1) * dim_out;
            (rows.end <= big).then(|| CMatrix::from_fn(dim_out, dim_in, |a, i| u[(rows.start + a, i)]))
        })
        .collect::<Vec<_>>();
    // when dim_out·rank < dim_in the isometry does not fit; fall back to a
    // channel that is trace preserving by construction
    QuantumChannel::from_kraus(dim_in, dim_out, kraus)
        .unwrap_or_else(|_| QuantumChannel::replacement(dim_in, &DensityMatrix::maximally_mixed(dim_out)))
}

/// Phase-canonical hash key: the first entry (row-major) with modulus above
/// `1e-6` is rotated to the positive real axis, then entries are rounded to
/// a `1e-6` grid.
pub fn phase_key(u: &CMatrix) -> Vec<i64> {
    let canon = phase_canonical(u);
    let mut key = Vec::with_capacity(2 * canon.len());
    for i in 0..canon.nrows() {
        for j in 0..canon.ncols() {
            let z = canon[(i, j)];
            key.push((z.re * 1e6).round() as i64);
            key.push((z.im * 1e6).round() as i64);
        }
    }
    key
}

/// `u` multiplied by the global phase that makes its first nonzero entry real positive.
pub fn phase_canonical(u: &CMatrix) -> CMatrix {
    for i in 0..u.nrows() {
        for j in 0..u.ncols() {
            let z = u[(i, j)];
            if z.norm() > 1e-6 {
                return u * (z.conj() / z.norm());
            }
        }
    }
    u.clone()
}

/// A finite set of unitaries averaged uniformly when twirling.
#[derive(Clone, Debug)]
pub struct FiniteUnitaryGroup {
    dim: usize,
    elements: Vec<CMatrix>,
    exact: bool,
}

impl FiniteUnitaryGroup {
    /// Validates unitarity of every element; when `exact` is set, also checks
    /// closure under multiplication up to global phase.
    pub fn new(elements: Vec<CMatrix>, exact: bool) -> Result<Self> {
        let dim = elements.first().ok_or_else(|| QldpError::invalid("group must be nonempty"))?.nrows();
        for (i, u) in elements.iter().enumerate() {
            if u.shape() != (dim, dim) || !is_unitary(u, TOL_IDENTITY) {
                return Err(QldpError::invalid(format!("group element {i} is not a {dim}x{dim} unitary")));
            }
        }
        if exact {
            let keys: HashMap<Vec<i64>, usize> = elements.iter().enumerate().map(|(i, u)| (phase_key(u), i)).collect();
            for a in &elements {
                for b in &elements {
                    if !keys.contains_key(&phase_key(&(a * b))) {
                        return Err(QldpError::invalid("element set is not closed under multiplication"));
                    }
                }
            }
        }
        Ok(Self { dim, elements, exact })
    }

    /// The group generated by `generators`, enumerated breadth-first up to
    /// global phase. Closure holds by construction.
    pub fn generated_by(generators: &[CMatrix]) -> Result<Self> {
        let dim = generators.first().ok_or_else(|| QldpError::invalid("need at least one generator"))?.nrows();
        for g in generators {
            if g.shape() != (dim, dim) || !is_unitary(g, TOL_IDENTITY) {
                return Err(QldpError::invalid("generators must be unitaries of equal dimension"));
            }
        }
        let id = CMatrix::identity(dim, dim);
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut elements = vec![id.clone()];
        seen.insert(phase_key(&id), 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in generators {
                let next = phase_canonical(&(g * &elements[i]));
                let key = phase_key(&next);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
                    e.insert(elements.len());
                    queue.push_back(elements.len());
                    elements.push(next);
                }
            }
        }
        Ok(Self {
            dim,
            elements,
            exact: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }
}

/// Group twirl `N_G = (1/|G|) Σ_g Ad(U_g†) ∘ N ∘ Ad(U_g)`, averaged in the
/// superoperator picture and converted back to Kraus form.
pub fn twirl(n: &QuantumChannel, group: &FiniteUnitaryGroup) -> Result<QuantumChannel> {
    if n.dim_in != n.dim_out || n.dim_in != group.dim {
        return Err(QldpError::invalid("twirl needs a square channel matching the group dimension"));
    }
    let s = n.superoperator();
    let d2 = n.dim_in * n.dim_in;
    let mut acc = CMatrix::zeros(d2, d2);
    for u in &group.elements {
        if !is_unitary(u, TOL_IDENTITY) {
            return Err(QldpError::invalid("group element is not unitary"));
        }
        let pre = u.conjugate().kronecker(u);
        let post = u.transpose().kronecker(&u.adjoint());
        acc += post * s * pre;
    }
    let acc = acc.unscale(group.len() as f64);
    QuantumChannel::from_superoperator(n.dim_in, n.dim_out, acc)
}

/// Least-squares fit of a square channel to `(1 − p) id + p · (Tr(·) I/d)`.
/// Returns `(p, residual)` with the residual measured as max-abs superoperator
/// deviation. `p` may exceed 1 (up to `d²/(d²−1)`) for channels twirled from
/// non-identity unitaries.
pub fn fit_depolarizing(n: &QuantumChannel) -> Result<(f64, f64)> {
    if n.dim_in != n.dim_out {
        return Err(QldpError::invalid("depolarizing fit needs a square channel"));
    }
    let d = n.dim_in;
    let id = CMatrix::identity(d * d, d * d);
    let vec_i = CVector::from_column_slice(CMatrix::identity(d, d).as_slice());
    let replace = (&vec_i * vec_i.transpose()).unscale(d as f64);
    let dir = &id - &replace;
    let target = &id - n.superoperator();
    let num: f64 = dir.iter().zip(target.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    let den: f64 = dir.iter().map(|a| a.norm_sqr()).sum();
    let p = num / den;
    let model = id.scale(1.0 - p) + replace.scale(p);
    Ok((p, max_abs_diff(&model, n.superoperator())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{pauli_matrix, PauliLabel};
    use crate::qops::{random_density, random_pure};
    use crate::stats::stream_rng;

    fn close_state(a: &DensityMatrix, b: &DensityMatrix, tol: f64) -> bool {
        max_abs_diff(a.matrix(), b.matrix()) <= tol
    }

    #[test]
    fn depolarizing_endpoints_and_qubit_value() {
        let mut rng = stream_rng(1, 0);
        let rho = random_density(3, 3, &mut rng).unwrap();
        let id = depolarizing(3, 0.0).unwrap();
        assert!(close_state(&id.apply(&rho).unwrap(), &rho, 1e-12));
        let full = depolarizing(3, 1.0).unwrap();
        assert!(close_state(&full.apply(&rho).unwrap(), &DensityMatrix::maximally_mixed(3), 1e-12));

        let out = depolarizing(2, 0.5).unwrap().apply(&DensityMatrix::basis_state(2, 0)).unwrap();
        assert!(close_state(&out, &DensityMatrix::diagonal(&[0.75, 0.25]).unwrap(), 1e-12));
    }

    #[test]
    fn depolarizing_rejects_bad_parameters() {
        assert!(depolarizing(2, -0.1).is_err());
        assert!(depolarizing(2, 1.1).is_err());
        assert!(depolarizing(1, 0.5).is_err());
    }

    #[test]
    fn depolarizing_formula_holds_exactly() {
        let mut rng = stream_rng(2, 0);
        for d in [2, 3, 5] {
            for p in [0.1, 0.37, 0.9] {
                let ch = depolarizing(d, p).unwrap();
                let rho = random_density(d, 2, &mut rng).unwrap();
                let want = rho.matrix().scale(1.0 - p) + CMatrix::identity(d, d).scale(p / d as f64);
                assert!(max_abs_diff(ch.apply_kraus(&rho).unwrap().matrix(), &want) < 1e-12);
            }
        }
    }

    #[test]
    fn kraus_and_superoperator_paths_agree() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..10 {
            let ch = random_channel(3, 2, 3, &mut rng);
            let rho = random_density(3, 3, &mut rng).unwrap();
            let a = ch.apply_kraus(&rho).unwrap();
            let b = ch.apply_superop(&rho).unwrap();
            assert!(close_state(&a, &b, 1e-12));
        }
    }

    #[test]
    fn unitary_round_trip_and_rejection() {
        let mut rng = stream_rng(4, 0);
        let u = random_unitary(3, &mut rng);
        let fwd = unitary_conjugate(&u).unwrap();
        let back = unitary_conjugate(&u.adjoint()).unwrap();
        let rho = random_density(3, 2, &mut rng).unwrap();
        let out = compose(&back, &fwd).unwrap().apply(&rho).unwrap();
        assert!(close_state(&out, &rho, 1e-12));
        assert!(unitary_conjugate(&CMatrix::identity(2, 2).scale(2.0)).is_err());
    }

    #[test]
    fn conjugation_leaves_identity_and_depolarizing_invariant() {
        let mut rng = stream_rng(5, 0);
        let u = random_unitary(3, &mut rng);
        let id = QuantumChannel::identity(3);
        assert!(conjugated_channel(&id, &u).unwrap().approx_eq(&id));
        let dep = depolarizing(3, 0.4).unwrap();
        let dist = conjugated_channel(&dep, &u).unwrap().superop_distance(&dep).unwrap();
        assert!(dist < 1e-10, "{dist}");
    }

    #[test]
    fn conjugated_channel_matches_definition() {
        let mut rng = stream_rng(6, 0);
        let n = random_channel(2, 2, 2, &mut rng);
        let u = random_unitary(2, &mut rng);
        let nu = conjugated_channel(&n, &u).unwrap();
        let rho = random_density(2, 2, &mut rng).unwrap();
        let want = n.apply(&rho.conjugate_by(&u)).unwrap().conjugate_by(&u.adjoint());
        assert!(close_state(&nu.apply(&rho).unwrap(), &want, 1e-12));
    }

    #[test]
    fn pauli_measurement_examples() {
        let z = pauli_matrix(&"Z".parse::<PauliLabel>().unwrap());
        let x = pauli_matrix(&"X".parse::<PauliLabel>().unwrap());
        let mz = pauli_measurement_channel(&z).unwrap();
        let zero = DensityMatrix::basis_state(2, 0);
        assert!(close_state(&mz.apply(&zero).unwrap(), &zero, 1e-12));
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(close_state(&mz.apply(&mixed).unwrap(), &mixed, 1e-12));
        let mx = pauli_measurement_channel(&x).unwrap();
        assert!(close_state(&mx.apply(&zero).unwrap(), &mixed, 1e-12));

        let not_involution = HermitianOperator::from_real_diagonal(&[1.0, 0.5]);
        assert!(pauli_measurement_channel(&not_involution).is_err());
    }

    #[test]
    fn composition_rules() {
        let mut rng = stream_rng(7, 0);
        let n = random_channel(2, 2, 3, &mut rng);
        assert!(compose(&QuantumChannel::identity(2), &n).unwrap().approx_eq(&n));
        let (p, q) = (0.3, 0.45);
        let lhs = compose(&depolarizing(3, p).unwrap(), &depolarizing(3, q).unwrap()).unwrap();
        let rhs = depolarizing(3, p + q - p * q).unwrap();
        assert!(lhs.approx_eq(&rhs));
        assert!(compose(&depolarizing(3, p).unwrap(), &depolarizing(2, q).unwrap()).is_err());
    }

    #[test]
    fn measurement_then_depolarizing_gives_biased_bit() {
        // Pr(Y=0 | P) = 1/2 + (1−q)/2 · Tr[Pρ]
        let mut rng = stream_rng(8, 0);
        let q = 0.35;
        for label in ["X", "Y", "Z"] {
            let p = pauli_matrix(&label.parse::<PauliLabel>().unwrap());
            let ch = compose(&depolarizing(2, q).unwrap(), &pauli_measurement_channel(&p).unwrap()).unwrap();
            let rho = random_density(2, 2, &mut rng).unwrap();
            let pr0 = ch.apply(&rho).unwrap().matrix()[(0, 0)].re;
            assert!((pr0 - (0.5 + 0.5 * (1.0 - q) * p.expectation(&rho))).abs() < 1e-12);
        }
    }

    #[test]
    fn superoperator_round_trip_through_choi() {
        let mut rng = stream_rng(9, 0);
        let n = random_channel(2, 3, 2, &mut rng);
        let rebuilt = QuantumChannel::from_superoperator(2, 3, n.superoperator().clone()).unwrap();
        let fresh = QuantumChannel::from_kraus(2, 3, rebuilt.kraus().to_vec()).unwrap();
        assert!(fresh.approx_eq(&n));
    }

    #[test]
    fn from_kraus_rejects_non_trace_preserving() {
        let k = CMatrix::identity(2, 2).scale(0.5);
        assert!(QuantumChannel::from_kraus(2, 2, vec![k]).is_err());
    }

    #[test]
    fn mixture_is_convex_combination() {
        let a = depolarizing(2, 0.2).unwrap();
        let b = depolarizing(2, 0.8).unwrap();
        let m = mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!(m.approx_eq(&depolarizing(2, 0.5).unwrap()));
        assert!(mixture(&[(0.7, &a), (0.7, &b)]).is_err());
    }

    #[test]
    fn outputs_remain_states() {
        let mut rng = stream_rng(10, 0);
        let chans = [
            depolarizing(2, 0.3).unwrap(),
            random_channel(2, 2, 4, &mut rng),
            unitary_conjugate(&random_unitary(2, &mut rng)).unwrap(),
        ];
        for ch in &chans {
            for _ in 0..100 {
                let rho = random_density(2, 1 + rng.random_range(0..2), &mut rng).unwrap();
                let out = ch.apply(&rho).unwrap();
                assert!(DensityMatrix::new(out.matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn twirl_of_identity_and_depolarizing() {
        let group = crate::pauli::clifford_group(1).unwrap();
        let id = QuantumChannel::identity(2);
        assert!(twirl(&id, group).unwrap().approx_eq(&id));
        let dep = depolarizing(2, 0.37).unwrap();
        assert!(twirl(&dep, group).unwrap().approx_eq(&dep));
    }

    #[test]
    fn twirl_is_idempotent_and_depolarizing() {
        let mut rng = stream_rng(11, 0);
        let group = crate::pauli::clifford_group(1).unwrap();
        let n = random_channel(2, 2, 3, &mut rng);
        let once = twirl(&n, group).unwrap();
        let twice = twirl(&once, group).unwrap();
        assert!(once.superop_distance(&twice).unwrap() < 1e-10);
        let (_, residual) = fit_depolarizing(&once).unwrap();
        assert!(residual < 1e-9);
    }

    #[test]
    fn exact_group_closure_check() {
        let group = crate::pauli::clifford_group(1).unwrap();
        assert!(FiniteUnitaryGroup::new(group.elements().to_vec(), true).is_ok());
        let partial = group.elements()[..5].to_vec();
        assert!(FiniteUnitaryGroup::new(partial.clone(), false).is_ok());
        assert!(FiniteUnitaryGroup::new(partial, true).is_err());
    }

    #[test]
    fn apply_pure_matches_general_apply() {
        let mut rng = stream_rng(12, 0);
        let ch = random_channel(3, 3, 2, &mut rng);
        let psi = random_pure(3, &mut rng);
        let a = ch.apply_pure_raw(psi.amplitudes());
        let b = ch.apply(&DensityMatrix::from_pure(&psi)).unwrap();
        assert!(max_abs_diff(&a, b.matrix()) < 1e-12);
    }
}
