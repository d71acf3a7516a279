//! Pauli operators, Pauli decompositions of observables, and Clifford groups.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! computational-basis index, so the label `"XZ"` is `X ⊗ Z`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::channels::FiniteUnitaryGroup;
use crate::error::{QldpError, Result};
use crate::qops::{c, is_unitary, CMatrix, HermitianOperator, TOL_HERM, TOL_IDENTITY};

/// Largest qubit count accepted by [`decompose`] (4^m coefficients).
pub const MAX_DECOMPOSE_QUBITS: usize = 6;
/// Generator depth used when sampling Cliffords for m ∈ {3, 4}.
pub const CLIFFORD_MIXING_DEPTH: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    fn code(self) -> u64 {
        self as u64
    }

    /// `(column, value)` of the single nonzero entry in `row` of the 2x2 matrix.
    fn entry(self, row: usize) -> (usize, Complex64) {
        match (self, row) {
            (PauliLetter::I, r) => (r, c(1.0)),
            (PauliLetter::X, r) => (1 - r, c(1.0)),
            (PauliLetter::Y, 0) => (1, Complex64::new(0.0, -1.0)),
            (PauliLetter::Y, _) => (0, Complex64::new(0.0, 1.0)),
            (PauliLetter::Z, 0) => (0, c(1.0)),
            (PauliLetter::Z, _) => (1, c(-1.0)),
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis, packed two bits per qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliLabel {
    qubits: u8,
    code: u64,
}

impl PauliLabel {
    pub fn new(letters: &[PauliLetter]) -> Result<Self> {
        if letters.is_empty() || letters.len() > 32 {
            return Err(QldpError::invalid("Pauli label needs between 1 and 32 qubits"));
        }
        let code = letters.iter().fold(0u64, |acc, l| acc * 4 + l.code());
        Ok(Self {
            qubits: letters.len() as u8,
            code,
        })
    }

    /// The `index`-th label of `m` qubits in lexicographic (`I < X < Y < Z`) order.
    pub fn from_index(m: usize, index: u64) -> Self {
        debug_assert!((1..=32).contains(&m) && (m == 32 || index < 4u64.pow(m as u32)));
        Self {
            qubits: m as u8,
            code: index,
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_index(m, 0)
    }

    /// Every label on `m` qubits, in index order.
    pub fn all(m: usize) -> impl Iterator<Item = PauliLabel> {
        (0..4u64.pow(m as u32)).map(move |i| PauliLabel::from_index(m, i))
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits as usize
    }

    pub fn index(&self) -> u64 {
        self.code
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        let shift = 2 * (self.num_qubits() - 1 - qubit);
        PauliLetter::ALL[((self.code >> shift) & 3) as usize]
    }

    pub fn letters(&self) -> Vec<PauliLetter> {
        (0..self.num_qubits()).map(|j| self.letter(j)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.code == 0
    }

    /// Column and value of the nonzero entry in `row` of the operator matrix.
    pub fn entry(&self, row: usize) -> (usize, Complex64) {
        let m = self.num_qubits();
        let mut col = 0usize;
        let mut val = c(1.0);
        for j in 0..m {
            let bit = (row >> (m - 1 - j)) & 1;
            let (cb, v) = self.letter(j).entry(bit);
            col |= cb << (m - 1 - j);
            val *= v;
        }
        (col, val)
    }

    /// `Tr[P · A]` in O(d·m) using the one-nonzero-per-row structure of `P`.
    pub fn trace_with(&self, a: &CMatrix) -> Complex64 {
        let d = 1usize << self.num_qubits();
        assert_eq!(a.nrows(), d, "operator dimension does not match label");
        (0..d)
            .map(|i| {
                let (k, v) = self.entry(i);
                v * a[(k, i)]
            })
            .sum()
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliLabel {
    type Err = QldpError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(PauliLetter::I),
                'X' => Ok(PauliLetter::X),
                'Y' => Ok(PauliLetter::Y),
                'Z' => Ok(PauliLetter::Z),
                other => Err(QldpError::invalid(format!("invalid Pauli letter {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliLabel::new(&letters)
    }
}

/// Dense matrix of a Pauli label.
pub fn pauli_matrix(label: &PauliLabel) -> HermitianOperator {
    let d = 1usize << label.num_qubits();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let (k, v) = label.entry(i);
        m[(i, k)] = v;
    }
    HermitianOperator::from_hermitian_unchecked(m)
}

/// `O = Σ_P α_P P` with the derived weight `S = Σ|α_P|` and spectral extremes.
#[derive(Clone, Debug)]
pub struct PauliDecomposition {
    qubits: usize,
    terms: Vec<(PauliLabel, f64)>,
    weight: f64,
    lambda_max: f64,
    lambda_min: f64,
    sampler: Option<WeightedIndex<f64>>,
}

impl PauliDecomposition {
    /// Builds a decomposition from explicit coefficients. Duplicate labels are
    /// summed; zero coefficients are dropped.
    pub fn from_terms(m: usize, terms: &[(PauliLabel, f64)]) -> Result<Self> {
        if m == 0 || m > MAX_DECOMPOSE_QUBITS {
            return Err(QldpError::invalid(format!("qubit count must be in 1..={MAX_DECOMPOSE_QUBITS}")));
        }
        let mut merged: Vec<(PauliLabel, f64)> = Vec::new();
        let mut sorted = terms.to_vec();
        sorted.sort_by_key(|(l, _)| *l);
        for (label, coeff) in sorted {
            if label.num_qubits() != m {
                return Err(QldpError::invalid(format!("label {label} does not act on {m} qubits")));
            }
            if !coeff.is_finite() {
                return Err(QldpError::invalid("Pauli coefficients must be finite"));
            }
            match merged.last_mut() {
                Some((l, a)) if *l == label => *a += coeff,
                _ => merged.push((label, coeff)),
            }
        }
        merged.retain(|(_, a)| a.abs() > 1e-13);
        Ok(Self::assemble(m, merged))
    }

    fn assemble(m: usize, terms: Vec<(PauliLabel, f64)>) -> Self {
        let weight: f64 = terms.iter().map(|(_, a)| a.abs()).sum();
        let sampler = if weight > 0.0 {
            WeightedIndex::new(terms.iter().map(|(_, a)| a.abs())).ok()
        } else {
            None
        };
        let mut s = Self {
            qubits: m,
            terms,
            weight,
            lambda_max: 0.0,
            lambda_min: 0.0,
            sampler,
        };
        let ev = s.reconstruct().eigenvalues();
        s.lambda_min = ev[0];
        s.lambda_max = *ev.last().unwrap();
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Nonzero terms in label order.
    pub fn terms(&self) -> &[(PauliLabel, f64)] {
        &self.terms
    }

    pub fn coefficient(&self, label: &PauliLabel) -> f64 {
        self.terms
            .binary_search_by_key(label, |(l, _)| *l)
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    /// `S = Σ_P |α_P|`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `p(P) = |α_P| / S`.
    pub fn probability(&self, label: &PauliLabel) -> f64 {
        if self.weight == 0.0 {
            0.0
        } else {
            self.coefficient(label).abs() / self.weight
        }
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (label, a) in &self.terms {
            for i in 0..d {
                let (k, v) = label.entry(i);
                m[(i, k)] += v * *a;
            }
        }
        HermitianOperator::from_hermitian_unchecked(m)
    }

    /// Index into [`terms`](Self::terms) drawn with probability `|α_P|/S`.
    pub(crate) fn sample_term<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.sampler
            .as_ref()
            .map(|s| s.sample(rng))
            .ok_or_else(|| QldpError::DegenerateObservable("observable is zero (S = 0)".into()))
    }
}

/// `α_P = Tr[P·O] / 2^m` for every Pauli label on `m` qubits.
pub fn decompose(o: &HermitianOperator, m: usize) -> Result<PauliDecomposition> {
    if m == 0 || m > MAX_DECOMPOSE_QUBITS || o.dim() != 1 << m {
        return Err(QldpError::invalid(format!(
            "observable of dimension {} is not a {m}-qubit operator (supported m: 1..={MAX_DECOMPOSE_QUBITS})",
            o.dim()
        )));
    }
    let d = (1u64 << m) as f64;
    let mut terms = Vec::new();
    for label in PauliLabel::all(m) {
        let t = label.trace_with(o.matrix()) / d;
        if t.im.abs() > TOL_HERM {
            return Err(QldpError::invalid(format!("coefficient of {label} is not real")));
        }
        if t.re.abs() > 1e-13 {
            terms.push((label, t.re));
        }
    }
    Ok(PauliDecomposition::assemble(m, terms))
}

/// Decomposes an operator whose dimension must be a power of two.
pub fn decompose_auto(o: &HermitianOperator) -> Result<PauliDecomposition> {
    let d = o.dim();
    if !d.is_power_of_two() || d < 2 {
        return Err(QldpError::invalid(format!("dimension {d} is not a power of two")));
    }
    decompose(o, d.trailing_zeros() as usize)
}

/// Draws `P` with probability `|α_P| / S`.
pub fn sample_pauli<R: Rng + ?Sized>(decomp: &PauliDecomposition, rng: &mut R) -> Result<PauliLabel> {
    Ok(decomp.terms[decomp.sample_term(rng)?].0)
}

/// A unitary mapping Paulis to Paulis (up to phase) under conjugation.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement {
    qubits: usize,
    matrix: CMatrix,
}

impl CliffordElement {
    /// Checks unitarity and that `U X_j U†`, `U Z_j U†` are signed Paulis for
    /// every qubit `j`; conjugation is a homomorphism, so the generators suffice.
    pub fn new(m: usize, matrix: CMatrix) -> Result<Self> {
        if m == 0 || matrix.shape() != (1 << m, 1 << m) || !is_unitary(&matrix, TOL_IDENTITY) {
            return Err(QldpError::invalid(format!("not a {m}-qubit unitary")));
        }
        let el = Self { qubits: m, matrix };
        for j in 0..m {
            for letter in [PauliLetter::X, PauliLetter::Z] {
                let mut letters = vec![PauliLetter::I; m];
                letters[j] = letter;
                let p = PauliLabel::new(&letters)?;
                if el.conjugate_pauli(&p).is_none() {
                    return Err(QldpError::invalid(format!("conjugation does not map {p} to a Pauli")));
                }
            }
        }
        Ok(el)
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U P U† = s · Q` with `s ∈ {±1, ±i}`; returns `(s, Q)` or `None` if the
    /// image is not a phased Pauli.
    pub fn conjugate_pauli(&self, p: &PauliLabel) -> Option<(Complex64, PauliLabel)> {
        let m = self.qubits;
        let img = &self.matrix * pauli_matrix(p).matrix() * self.matrix.adjoint();
        let d = (1u64 << m) as f64;
        let mut found = None;
        for q in PauliLabel::all(m) {
            let t = q.trace_with(&img) / d;
            if t.norm() > 1e-9 {
                if found.is_some() || (t.norm() - 1.0).abs() > 1e-9 {
                    return None;
                }
                let phases = [c(1.0), c(-1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
                let s = *phases.iter().find(|ph| (t - **ph).norm() < 1e-9)?;
                found = Some((s, q));
            }
        }
        found
    }
}

fn single_qubit_gate(m: usize, qubit: usize, gate: &CMatrix) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for j in 0..m {
        let factor = if j == qubit { gate.clone() } else { CMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

fn cnot(m: usize, control: usize, target: usize) -> CMatrix {
    let d = 1usize << m;
    let cbit = 1usize << (m - 1 - control);
    let tbit = 1usize << (m - 1 - target);
    let mut u = CMatrix::zeros(d, d);
    for b in 0..d {
        let out = if b & cbit != 0 { b ^ tbit } else { b };
        u[(out, b)] = c(1.0);
    }
    u
}

fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
}

fn phase_gate() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), Complex64::new(0.0, 1.0)])
}

/// `H_j`, `S_j` for every qubit and `CNOT_{jk}` for every ordered pair.
pub fn clifford_generators(m: usize) -> Vec<CMatrix> {
    let mut gens = Vec::new();
    for j in 0..m {
        gens.push(single_qubit_gate(m, j, &hadamard()));
        gens.push(single_qubit_gate(m, j, &phase_gate()));
    }
    for a in 0..m {
        for b in 0..m {
            if a != b {
                gens.push(cnot(m, a, b));
            }
        }
    }
    gens
}

static CLIFFORD_1: OnceLock<FiniteUnitaryGroup> = OnceLock::new();
static CLIFFORD_2: OnceLock<FiniteUnitaryGroup> = OnceLock::new();

/// The Clifford group on `m ∈ {1, 2}` qubits modulo global phase
/// (24 and 11520 elements), enumerated once and shared.
pub fn clifford_group(m: usize) -> Result<&'static FiniteUnitaryGroup> {
    let cell = match m {
        1 => &CLIFFORD_1,
        2 => &CLIFFORD_2,
        _ => return Err(QldpError::invalid(format!("Clifford enumeration supports m in {{1, 2}}, got {m}"))),
    };
    Ok(cell.get_or_init(|| {
        FiniteUnitaryGroup::generated_by(&clifford_generators(m)).expect("Clifford generators are unitary")
    }))
}

pub fn enumerate_cliffords(m: usize) -> Result<Vec<CliffordElement>> {
    Ok(clifford_group(m)?
        .elements()
        .iter()
        .map(|u| CliffordElement {
            qubits: m,
            matrix: u.clone(),
        })
        .collect())
}

/// A Clifford element; exactly uniform for `m ≤ 2` (index into the enumerated
/// group), and a product of [`CLIFFORD_MIXING_DEPTH`] uniformly chosen
/// generators for `m ∈ {3, 4}`. The latter is only approximately uniform.
pub fn random_clifford<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<CliffordElement> {
    match m {
        1 | 2 => {
            let g = clifford_group(m)?;
            let idx = rng.random_range(0..g.len());
            Ok(CliffordElement {
                qubits: m,
                matrix: g.elements()[idx].clone(),
            })
        }
        3 | 4 => {
            let gens = clifford_generators(m);
            let d = 1 << m;
            let mut u = CMatrix::identity(d, d);
            for _ in 0..CLIFFORD_MIXING_DEPTH {
                u = &gens[rng.random_range(0..gens.len())] * u;
            }
            Ok(CliffordElement { qubits: m, matrix: u })
        }
        _ => Err(QldpError::invalid(format!("Clifford sampling supports m in 1..=4, got {m}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qops::max_abs_diff;
    use crate::stats::stream_rng;

    fn kron_oracle(label: &str) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        label.chars().fold(CMatrix::identity(1, 1), |acc, ch| {
            let m = match ch {
                'I' => CMatrix::identity(2, 2),
                'X' => CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
                'Y' => CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
                'Z' => CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
                _ => unreachable!(),
            };
            acc.kronecker(&m)
        })
    }

    #[test]
    fn pauli_matrices_match_tensor_products() {
        for s in ["Z", "II", "XZ", "YXZ", "ZYIX"] {
            let label: PauliLabel = s.parse().unwrap();
            assert_eq!(label.to_string(), s);
            assert!(max_abs_diff(pauli_matrix(&label).matrix(), &kron_oracle(s)) < 1e-15);
        }
        let z = pauli_matrix(&"Z".parse().unwrap());
        assert!(max_abs_diff(z.matrix(), HermitianOperator::from_real_diagonal(&[1.0, -1.0]).matrix()) == 0.0);
        let xz = pauli_matrix(&"XZ".parse().unwrap());
        assert!(xz.trace().abs() < 1e-15);
        assert!(max_abs_diff(&(xz.matrix() * xz.matrix()), &CMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn pauli_orthogonality() {
        for m in 1..=2 {
            let d = (1u64 << m) as f64;
            for p in PauliLabel::all(m) {
                for q in PauliLabel::all(m) {
                    let t = q.trace_with(pauli_matrix(&p).matrix());
                    let want = if p == q { d } else { 0.0 };
                    assert!((t - c(want)).norm() < 1e-12, "{p} {q}");
                }
            }
        }
    }

    #[test]
    fn bad_labels_rejected() {
        assert!("XQ".parse::<PauliLabel>().is_err());
        assert!("".parse::<PauliLabel>().is_err());
    }

    #[test]
    fn decomposition_examples() {
        let z = pauli_matrix(&"Z".parse().unwrap());
        let dz = decompose(&z, 1).unwrap();
        assert_eq!(dz.terms(), &[("Z".parse().unwrap(), 1.0)]);
        assert_eq!(dz.weight(), 1.0);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = pauli_matrix(&"X".parse().unwrap());
        let o = HermitianOperator::new((x.matrix() + z.matrix()).scale(s)).unwrap();
        let d = decompose(&o, 1).unwrap();
        assert!((d.coefficient(&"X".parse().unwrap()) - s).abs() < 1e-15);
        assert!((d.coefficient(&"Z".parse().unwrap()) - s).abs() < 1e-15);
        assert!((d.weight() - 2f64.sqrt()).abs() < 1e-14);

        let di = decompose(&HermitianOperator::identity(2), 1).unwrap();
        assert_eq!(di.weight(), 1.0);
        assert!((di.lambda_max() - 1.0).abs() < 1e-14 && (di.lambda_min() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_rejects_non_power_of_two() {
        assert!(decompose_auto(&HermitianOperator::identity(3)).is_err());
        assert!(decompose(&HermitianOperator::identity(4), 1).is_err());
    }

    #[test]
    fn decompose_reconstruct_round_trip() {
        let mut rng = stream_rng(21, 0);
        for m in 1..=3 {
            let d = 1 << m;
            let g = CMatrix::from_fn(d, d, |_, _| crate::qops::complex_gaussian(&mut rng));
            let o = HermitianOperator::new(crate::qops::hermitian_part(&g)).unwrap();
            let dec = decompose(&o, m).unwrap();
            assert!(max_abs_diff(dec.reconstruct().matrix(), o.matrix()) < 1e-10);
            let again = decompose(&dec.reconstruct(), m).unwrap();
            for ((l1, a1), (l2, a2)) in dec.terms().iter().zip(again.terms()) {
                assert_eq!(l1, l2);
                assert!((a1 - a2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampling_single_term_and_degenerate() {
        let mut rng = stream_rng(22, 0);
        let x: PauliLabel = "X".parse().unwrap();
        let d = PauliDecomposition::from_terms(1, &[(x, 3.0)]).unwrap();
        for _ in 0..50 {
            assert_eq!(sample_pauli(&d, &mut rng).unwrap(), x);
        }
        let zero = PauliDecomposition::from_terms(1, &[]).unwrap();
        assert!(matches!(sample_pauli(&zero, &mut rng), Err(QldpError::DegenerateObservable(_))));
    }

    #[test]
    fn sampling_frequencies_chi_square() {
        // (X + Z)/√2 plus a small Y term; chi-square with 2 dof, 99.9% quantile 13.8
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let labels: Vec<PauliLabel> = ["X", "Y", "Z"].iter().map(|l| l.parse().unwrap()).collect();
        let d = PauliDecomposition::from_terms(1, &[(labels[0], s), (labels[1], -0.2), (labels[2], s)]).unwrap();
        let mut rng = stream_rng(23, 0);
        let n = 20000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let p = sample_pauli(&d, &mut rng).unwrap();
            counts[labels.iter().position(|l| *l == p).unwrap()] += 1;
        }
        let chi2: f64 = labels
            .iter()
            .zip(counts)
            .map(|(l, k)| {
                let e = n as f64 * d.probability(l);
                (k as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 13.8, "chi2 = {chi2}");
    }

    #[test]
    fn sampling_reproducible() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = PauliDecomposition::from_terms(1, &[("X".parse().unwrap(), s), ("Z".parse().unwrap(), s)]).unwrap();
        let draw = || {
            let mut rng = stream_rng(24, 0);
            (0..32).map(|_| sample_pauli(&d, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn clifford_group_sizes() {
        assert_eq!(clifford_group(1).unwrap().len(), 24);
        assert_eq!(clifford_group(2).unwrap().len(), 11520);
        assert!(clifford_group(3).is_err());
    }

    #[test]
    fn enumerated_cliffords_satisfy_invariant() {
        for el in enumerate_cliffords(1).unwrap() {
            assert!(CliffordElement::new(1, el.matrix().clone()).is_ok());
        }
        let all2 = enumerate_cliffords(2).unwrap();
        for el in all2.iter().step_by(97) {
            assert!(CliffordElement::new(2, el.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn sampled_cliffords_map_z_to_signed_pauli() {
        let mut rng = stream_rng(25, 0);
        for m in 1..=4 {
            for _ in 0..3 {
                let u = random_clifford(m, &mut rng).unwrap();
                let mut letters = vec![PauliLetter::I; m];
                letters[0] = PauliLetter::Z;
                let (s, _) = u.conjugate_pauli(&PauliLabel::new(&letters).unwrap()).unwrap();
                assert!((s.re.abs() - 1.0).abs() < 1e-9);
            }
        }
        assert!(random_clifford(5, &mut rng).is_err());
    }

    #[test]
    fn t_gate_is_not_clifford() {
        let t = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0), c(0.0), c(0.0), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
        );
        assert!(CliffordElement::new(1, t).is_err());
    }
}
