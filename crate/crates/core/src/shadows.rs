//! Private classical shadows.
//!
//! Each user applies a random Clifford `U`, a depolarizing channel of
//! strength `p̂`, and measures in the computational basis. The pair `(U, b)`
//! is inverted into an unbiased snapshot
//! `ρ̂ = x U†|b⟩⟨b|U − (x − 1) I/d`, `x = (d+1)/(1−p̂)`,
//! and snapshots are combined by median of means.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channels::{computational_measurement, depolarizing, unitary_conjugate, QuantumChannel};
use crate::error::{QldpError, Result};
use crate::estimate::{AccuracyDemand, CoverageReport, TrialRecord};
use crate::pauli::{clifford_group, random_clifford, CliffordElement};
use crate::privacy::PrivacyBudget;
use crate::qops::{c, CMatrix, DensityMatrix, HermitianOperator};
use crate::stats::{median, stream_rng};

/// Largest qubit count the shadow sampler accepts.
pub const MAX_SHADOW_QUBITS: usize = 4;

/// One privatized shadow record.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSample {
    pub clifford: CliffordElement,
    /// Position in the enumerated Clifford group (available for `m ≤ 2`).
    pub clifford_index: Option<usize>,
    /// Measured basis state `b`, most significant bit = first qubit.
    pub outcome: usize,
}

impl ShadowSample {
    pub fn num_qubits(&self) -> usize {
        self.clifford.num_qubits()
    }

    /// `b` as an `m`-character string of `0`/`1`.
    pub fn bitstring(&self) -> String {
        format!("{:0width$b}", self.outcome, width = self.num_qubits())
    }
}

/// Depolarizing strength and median-of-means batching, `N = K·ℓ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowConfig {
    pub p_hat: f64,
    pub batch_size: usize,
    pub n_batches: usize,
}

impl ShadowConfig {
    pub fn new(p_hat: f64, batch_size: usize, n_batches: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&p_hat) {
            return Err(QldpError::NoninvertibleMechanism(format!(
                "snapshot inversion needs p_hat in [0, 1), got {p_hat}"
            )));
        }
        if batch_size == 0 || n_batches == 0 {
            return Err(QldpError::invalid("batch size and batch count must be at least 1"));
        }
        Ok(Self {
            p_hat,
            batch_size,
            n_batches,
        })
    }

    pub fn total(&self) -> usize {
        self.batch_size * self.n_batches
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(QldpError::invalid(format!("dimension must be >= 2, got {d}")));
    }
    Ok(())
}

fn qubits_of(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(QldpError::invalid(format!("dimension {d} is not a power of two >= 2")));
    }
    let m = d.trailing_zeros() as usize;
    if m > MAX_SHADOW_QUBITS {
        return Err(QldpError::invalid(format!("shadows support at most {MAX_SHADOW_QUBITS} qubits, got {m}")));
    }
    Ok(m)
}

/// Depolarizing strength making the shadow mechanism `(ε, δ)`-private:
/// `1 − min{1, (e^ε − 1 + dδ)(d+1)/(e^ε + d − 1)}`.
pub fn private_shadow_p_hat(d: usize, budget: &PrivacyBudget) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    let g = budget.gamma();
    let ratio = (g - 1.0 + df * budget.delta()) * (df + 1.0) / (g + df - 1.0);
    Ok((1.0 - ratio.min(1.0)).max(0.0))
}

/// The Clifford-averaged measure-and-prepare map is depolarizing with
/// `q = 1 − (1 − p̂)/(d + 1)`.
pub fn effective_depolarizing_q(p_hat: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(QldpError::invalid(format!("p_hat must lie in [0, 1], got {p_hat}")));
    }
    Ok(1.0 - (1.0 - p_hat) / (d as f64 + 1.0))
}

/// `Σ_U (1/|G|) Ad(U†) ∘ Meas ∘ A_p̂ ∘ Ad(U)` by exhaustive enumeration over
/// the Clifford group (`m ≤ 2`).
pub fn shadow_composite_channel(m: usize, p_hat: f64) -> Result<QuantumChannel> {
    let group = clifford_group(m)?;
    let d = 1usize << m;
    // noise first, then measurement
    let core = computational_measurement(d).superoperator() * depolarizing(d, p_hat)?.superoperator();
    let mut total = CMatrix::zeros(d * d, d * d);
    for u in group.elements() {
        let fwd = unitary_conjugate(u)?;
        let back = unitary_conjugate(&u.adjoint())?;
        total += back.superoperator() * &core * fwd.superoperator();
    }
    total /= c(group.len() as f64);
    QuantumChannel::from_superoperator(d, d, total)
}

/// Born probabilities of `b` after `A_p̂(UρU†)`.
fn outcome_distribution(rho: &CMatrix, u: &CMatrix, p_hat: f64) -> Vec<f64> {
    let d = rho.nrows();
    let rotated = u * rho * u.adjoint();
    (0..d)
        .map(|b| (1.0 - p_hat) * rotated[(b, b)].re.max(0.0) + p_hat / d as f64)
        .collect()
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One privatized copy: uniform Clifford (exact for `m ≤ 2`,
/// generator walk for `m ≤ 4`), depolarize, measure.
pub fn shadow_sample<R: Rng + ?Sized>(rho: &DensityMatrix, p_hat: f64, rng: &mut R) -> Result<ShadowSample> {
    let m = qubits_of(rho.dim())?;
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(QldpError::invalid(format!("p_hat must lie in [0, 1], got {p_hat}")));
    }
    let (clifford, clifford_index) = if m <= 2 {
        let group = clifford_group(m)?;
        let idx = rng.random_range(0..group.len());
        (CliffordElement::new(m, group.elements()[idx].clone())?, Some(idx))
    } else {
        (random_clifford(m, rng)?, None)
    };
    let probs = outcome_distribution(rho.matrix(), clifford.matrix(), p_hat);
    let outcome = draw(&probs, rng);
    Ok(ShadowSample {
        clifford,
        clifford_index,
        outcome,
    })
}

fn inversion_factor(p_hat: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(QldpError::invalid(format!("p_hat must lie in [0, 1], got {p_hat}")));
    }
    if p_hat >= 1.0 {
        return Err(QldpError::NoninvertibleMechanism(
            "p_hat = 1 outputs uniformly random outcomes; snapshots cannot be inverted".into(),
        ));
    }
    Ok((d as f64 + 1.0) / (1.0 - p_hat))
}

/// `ρ̂ = x U†|b⟩⟨b|U − (x − 1) I/d` with `x = (d+1)/(1−p̂)`; unit trace and
/// unbiased for ρ.
pub fn snapshot_inverse(s: &ShadowSample, p_hat: f64, d: usize) -> Result<HermitianOperator> {
    let u = s.clifford.matrix();
    if u.nrows() != d {
        return Err(QldpError::invalid("snapshot dimension does not match the Clifford"));
    }
    let x = inversion_factor(p_hat, d)?;
    let row = u.row(s.outcome);
    let v = row.adjoint();
    let mut m = (&v * v.adjoint()).scale(x);
    let shift = (x - 1.0) / d as f64;
    for i in 0..d {
        m[(i, i)] -= c(shift);
    }
    HermitianOperator::new(m)
}

/// `Tr[O ρ̂]` without forming the snapshot.
pub fn snapshot_expectation(s: &ShadowSample, o: &HermitianOperator, p_hat: f64) -> Result<f64> {
    let d = o.dim();
    let u = s.clifford.matrix();
    if u.nrows() != d {
        return Err(QldpError::invalid("observable dimension does not match the Clifford"));
    }
    let x = inversion_factor(p_hat, d)?;
    let row = u.row(s.outcome);
    let val: Complex64 = (row * o.matrix() * row.adjoint())[(0, 0)];
    Ok(x * val.re - (x - 1.0) * o.trace() / d as f64)
}

/// Median over consecutive batches of `batch_size` values of the batch means.
pub fn median_of_means(values: &[f64], batch_size: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(QldpError::invalid("no values"));
    }
    if batch_size == 0 || !values.len().is_multiple_of(batch_size) {
        return Err(QldpError::invalid(format!(
            "batch size {batch_size} does not divide the sample count {}",
            values.len()
        )));
    }
    let means: Vec<f64> = values
        .chunks(batch_size)
        .map(|chunk| chunk.iter().sum::<f64>() / batch_size as f64)
        .collect();
    Ok(median(&means))
}

pub fn median_of_means_estimate(snapshots: &[HermitianOperator], o: &HermitianOperator, batch_size: usize) -> Result<f64> {
    let values = snapshots
        .iter()
        .map(|s| {
            if s.dim() != o.dim() {
                return Err(QldpError::invalid("snapshot and observable dimensions differ"));
            }
            Ok(crate::qops::trace_product_re(o.matrix(), s.matrix()))
        })
        .collect::<Result<Vec<_>>>()?;
    median_of_means(&values, batch_size)
}

/// Sufficient snapshot count
/// `⌈204 Tr[O²]/β² · max{1, ((e^ε+d−1)/((e^ε−1+dδ)(d+1)))²} · ln(2/η)⌉`.
pub fn shadow_required_samples(tr_o2: f64, d: usize, budget: &PrivacyBudget, demand: &AccuracyDemand) -> Result<u64> {
    check_dim(d)?;
    if !(tr_o2 > 0.0) || !tr_o2.is_finite() {
        return Err(QldpError::invalid(format!("Tr[O^2] must be positive, got {tr_o2}")));
    }
    let df = d as f64;
    let g = budget.gamma();
    let denom = g - 1.0 + df * budget.delta();
    if denom <= 0.0 {
        return Err(QldpError::Infeasible(
            "epsilon = 0 and delta = 0 force p_hat = 1; shadows carry no information".into(),
        ));
    }
    let factor = ((g + df - 1.0) / (denom * (df + 1.0))).powi(2).max(1.0);
    let n = 204.0 * tr_o2 / demand.beta().powi(2) * factor * (2.0 / demand.eta()).ln();
    Ok(n.ceil() as u64)
}

/// Snapshot count when `p̂` is set to the depolarizing optimum `p*` instead:
/// `⌈204 Tr[O²]/β² · ((e^ε+d−1)/(e^ε−1+dδ))² · ln(2/η)⌉`.
pub fn naive_shadow_required_samples(tr_o2: f64, d: usize, budget: &PrivacyBudget, demand: &AccuracyDemand) -> Result<u64> {
    check_dim(d)?;
    if !(tr_o2 > 0.0) || !tr_o2.is_finite() {
        return Err(QldpError::invalid(format!("Tr[O^2] must be positive, got {tr_o2}")));
    }
    let df = d as f64;
    let g = budget.gamma();
    let denom = g - 1.0 + df * budget.delta();
    if denom <= 0.0 {
        return Err(QldpError::Infeasible("epsilon = 0 and delta = 0 force p = 1".into()));
    }
    let n = 204.0 * tr_o2 / demand.beta().powi(2) * ((g + df - 1.0) / denom).powi(2) * (2.0 / demand.eta()).ln();
    Ok(n.ceil() as u64)
}

/// Pure-privacy small-ε form `⌈3264 Tr[O²] ln(2/η)/(β²ε²)⌉`, valid for
/// `δ = 0`, `0 < ε ≤ ln 2`.
pub fn shadow_small_epsilon_samples(tr_o2: f64, budget: &PrivacyBudget, demand: &AccuracyDemand) -> Result<u64> {
    if budget.delta() != 0.0 {
        return Err(QldpError::regime("delta = 0"));
    }
    let e = budget.epsilon();
    if !(e > 0.0 && e <= std::f64::consts::LN_2) {
        return Err(QldpError::regime("0 < epsilon <= ln 2"));
    }
    if !(tr_o2 > 0.0) {
        return Err(QldpError::invalid("Tr[O^2] must be positive"));
    }
    Ok((3264.0 * tr_o2 * (2.0 / demand.eta()).ln() / (demand.beta().powi(2) * e * e)).ceil() as u64)
}

/// Default median-of-means batching for a target of `n` snapshots:
/// `K = max(1, ⌊2 ln(2/η)⌋)` batches, `n` rounded up to a multiple of `K`.
/// Returns `(batch_size, n_batches)`.
pub fn default_batching(n: u64, eta: f64) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(QldpError::invalid("need at least one snapshot"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(QldpError::invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    let k = ((2.0 * (2.0 / eta).ln()).floor() as usize).max(1);
    let ell = (n as usize).div_ceil(k);
    Ok((ell, k))
}

/// Per-Clifford lookup tables of outcome probabilities and `⟨b|UOU†|b⟩`,
/// turning each Monte Carlo snapshot into two table reads. Exact group
/// enumeration, so `m ≤ 2`.
#[derive(Clone, Debug)]
pub struct ShadowSimulator {
    d: usize,
    p_hat: f64,
    x: f64,
    trace_o: f64,
    probs: Vec<Vec<f64>>,
    diag_o: Vec<Vec<f64>>,
}

impl ShadowSimulator {
    pub fn new(rho: &DensityMatrix, o: &HermitianOperator, p_hat: f64) -> Result<Self> {
        let d = rho.dim();
        let m = qubits_of(d)?;
        if o.dim() != d {
            return Err(QldpError::invalid("state and observable dimensions differ"));
        }
        let x = inversion_factor(p_hat, d)?;
        let group = clifford_group(m)?;
        let mut probs = Vec::with_capacity(group.len());
        let mut diag_o = Vec::with_capacity(group.len());
        for u in group.elements() {
            probs.push(outcome_distribution(rho.matrix(), u, p_hat));
            let rot = u * o.matrix() * u.adjoint();
            diag_o.push((0..d).map(|b| rot[(b, b)].re).collect());
        }
        Ok(Self {
            d,
            p_hat,
            x,
            trace_o: o.trace(),
            probs,
            diag_o,
        })
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    /// `Tr[O ρ̂]` for one freshly drawn snapshot.
    pub fn sample_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random_range(0..self.probs.len());
        let b = draw(&self.probs[u], rng);
        self.x * self.diag_o[u][b] - (self.x - 1.0) * self.trace_o / self.d as f64
    }

    pub fn estimate<R: Rng + ?Sized>(&self, config: &ShadowConfig, rng: &mut R) -> Result<f64> {
        let values: Vec<f64> = (0..config.total()).map(|_| self.sample_value(rng)).collect();
        median_of_means(&values, config.batch_size)
    }
}

/// Full private-shadow protocol repeated `trials` times. With `n = None` the
/// snapshot count comes from [`shadow_required_samples`]. Uses the lookup
/// tables for `m ≤ 2` and direct sampling above that.
pub fn shadow_coverage(
    rho: &DensityMatrix,
    o: &HermitianOperator,
    budget: &PrivacyBudget,
    demand: &AccuracyDemand,
    n: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(QldpError::invalid("need at least one trial"));
    }
    let d = rho.dim();
    let p_hat = private_shadow_p_hat(d, budget)?;
    let target = match n {
        Some(n) => n,
        None => shadow_required_samples(o.matrix().norm_squared(), d, budget, demand)?,
    };
    let (ell, k) = default_batching(target, demand.eta())?;
    let config = ShadowConfig::new(p_hat, ell, k)?;
    if o.dim() != d {
        return Err(QldpError::invalid("state and observable dimensions differ"));
    }
    let sim = if qubits_of(d)? <= 2 {
        Some(ShadowSimulator::new(rho, o, p_hat)?)
    } else {
        None
    };
    let truth = o.expectation(rho);
    let n_used = config.total() as u64;
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let estimate = match &sim {
                Some(sim) => sim.estimate(&config, &mut rng)?,
                None => {
                    let values = (0..config.total())
                        .map(|_| snapshot_expectation(&shadow_sample(rho, p_hat, &mut rng)?, o, p_hat))
                        .collect::<Result<Vec<_>>>()?;
                    median_of_means(&values, config.batch_size)?
                }
            };
            let abs_error = (estimate - truth).abs();
            Ok(TrialRecord {
                trial,
                n: n_used,
                estimate,
                true_value: truth,
                abs_error,
                within_beta: abs_error <= demand.beta(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport {
        records,
        n: n_used,
        beta: demand.beta(),
        eta: demand.eta(),
    })
}

pub const SHADOW_CSV_HEADER: &str = "sample,clifford_index,outcome";

/// Snapshot records as `(Clifford index, bitstring)`; requires enumerated
/// Cliffords (`m ≤ 2`).
pub fn write_shadow_samples_csv<W: Write>(samples: &[ShadowSample], mut out: W) -> Result<()> {
    let io = |e: std::io::Error| QldpError::invalid(format!("write failed: {e}"));
    writeln!(out, "{SHADOW_CSV_HEADER}").map_err(io)?;
    for (i, s) in samples.iter().enumerate() {
        let idx = s
            .clifford_index
            .ok_or_else(|| QldpError::invalid("only enumerated Cliffords (m <= 2) can be serialized"))?;
        writeln!(out, "{i},{idx},{}", s.bitstring()).map_err(io)?;
    }
    Ok(())
}

/// Inverse of [`write_shadow_samples_csv`].
pub fn read_shadow_samples_csv<R: BufRead>(m: usize, input: R) -> Result<Vec<ShadowSample>> {
    let group = clifford_group(m)?;
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| QldpError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line == SHADOW_CSV_HEADER) {
            continue;
        }
        let parse_err = |message: String| QldpError::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
        }
        let idx: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad Clifford index '{}'", fields[1])))?;
        if idx >= group.len() {
            return Err(parse_err(format!("Clifford index {idx} out of range")));
        }
        let bits = fields[2];
        if bits.len() != m || !bits.chars().all(|ch| ch == '0' || ch == '1') {
            return Err(parse_err(format!("outcome '{bits}' is not a {m}-bit string")));
        }
        let outcome = usize::from_str_radix(bits, 2).expect("validated bitstring");
        out.push(ShadowSample {
            clifford: CliffordElement::new(m, group.elements()[idx].clone())?,
            clifford_index: Some(idx),
            outcome,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::depolarizing;
    use crate::qops::{max_abs_diff, random_density, random_unitary};

    fn b(e: f64, d: f64) -> PrivacyBudget {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn p_hat_examples() {
        assert_eq!(private_shadow_p_hat(2, &b(1.0, 0.0)).unwrap(), 0.0);
        let g = 0.1f64.exp();
        let want = 1.0 - 3.0 * (g - 1.0) / (g + 1.0);
        assert!((private_shadow_p_hat(2, &b(0.1, 0.0)).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.850125).abs() < 1e-6);
        assert_eq!(private_shadow_p_hat(4, &b(0.0, 0.0)).unwrap(), 1.0);
        // clamp branch exactly when e^ε + δ(d+1) >= 2
        for d in [2usize, 4, 8] {
            for e in [0.05f64, 0.3, 0.69, 0.7, 1.5] {
                for dl in [0.0, 0.05, 0.2] {
                    let clamp = e.exp() + dl * (d as f64 + 1.0) >= 2.0;
                    let p = private_shadow_p_hat(d, &b(e, dl)).unwrap();
                    assert_eq!(p == 0.0, clamp, "d={d} e={e} dl={dl} p={p}");
                }
            }
        }
    }

    #[test]
    fn composite_is_depolarizing() {
        assert!((effective_depolarizing_q(0.0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(effective_depolarizing_q(1.0, 2).unwrap(), 1.0);
        for p_hat in [0.0, 0.3, 0.85] {
            let comp = shadow_composite_channel(1, p_hat).unwrap();
            let dep = depolarizing(2, effective_depolarizing_q(p_hat, 2).unwrap()).unwrap();
            assert!(max_abs_diff(comp.superoperator(), dep.superoperator()) < 1e-9);
        }
    }

    // Exact E[ρ̂] over all Cliffords and outcomes at m = 1.
    fn exact_snapshot_mean(rho: &DensityMatrix, p_hat: f64) -> CMatrix {
        let g = clifford_group(1).unwrap();
        let mut acc = CMatrix::zeros(2, 2);
        for (idx, u) in g.elements().iter().enumerate() {
            let probs = outcome_distribution(rho.matrix(), u, p_hat);
            for (bit, p) in probs.iter().enumerate() {
                let s = ShadowSample {
                    clifford: CliffordElement::new(1, u.clone()).unwrap(),
                    clifford_index: Some(idx),
                    outcome: bit,
                };
                acc += snapshot_inverse(&s, p_hat, 2).unwrap().matrix().scale(*p);
            }
        }
        acc / c(g.len() as f64)
    }

    #[test]
    fn snapshots_are_unbiased() {
        let zero = DensityMatrix::basis_state(2, 0);
        for p_hat in [0.0, 0.5] {
            assert!(max_abs_diff(&exact_snapshot_mean(&zero, p_hat), zero.matrix()) < 1e-10);
        }
        let mut rng = stream_rng(12, 0);
        for _ in 0..4 {
            let rho = random_density(2, 2, &mut rng).unwrap();
            for p_hat in [0.0, 0.3, 0.85] {
                assert!(max_abs_diff(&exact_snapshot_mean(&rho, p_hat), rho.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn snapshot_trace_and_expectation_agree() {
        let mut rng = stream_rng(13, 0);
        let rho = random_density(4, 4, &mut rng).unwrap();
        let g = random_unitary(4, &mut rng);
        let o = HermitianOperator::new(&g + g.adjoint()).unwrap();
        for _ in 0..20 {
            let s = shadow_sample(&rho, 0.4, &mut rng).unwrap();
            let snap = snapshot_inverse(&s, 0.4, 4).unwrap();
            assert!((snap.trace() - 1.0).abs() < 1e-12);
            let direct = crate::qops::trace_product_re(o.matrix(), snap.matrix());
            assert!((snapshot_expectation(&s, &o, 0.4).unwrap() - direct).abs() < 1e-10);
        }
        let s = shadow_sample(&rho, 0.4, &mut rng).unwrap();
        assert!(matches!(snapshot_inverse(&s, 1.0, 4), Err(QldpError::NoninvertibleMechanism(_))));
    }

    #[test]
    fn identity_clifford_on_zero_state() {
        let g = clifford_group(1).unwrap();
        let id_idx = g
            .elements()
            .iter()
            .position(|u| max_abs_diff(&crate::channels::phase_canonical(u), &CMatrix::identity(2, 2)) < 1e-9)
            .unwrap();
        let probs = outcome_distribution(DensityMatrix::basis_state(2, 0).matrix(), &g.elements()[id_idx], 0.0);
        assert_eq!(probs, vec![1.0, 0.0]);
    }

    #[test]
    fn uniform_outcomes_when_fully_depolarized() {
        let mut rng = stream_rng(14, 0);
        let rho = DensityMatrix::basis_state(4, 2);
        let n = 20_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[shadow_sample(&rho, 1.0, &mut rng).unwrap().outcome] += 1;
        }
        for cnt in counts {
            let f = cnt as f64 / n as f64;
            assert!((f - 0.25).abs() < 4.0 * crate::stats::binomial_sigma(0.25, n));
        }
        assert!(shadow_sample(&DensityMatrix::maximally_mixed(3), 0.0, &mut rng).is_err());
    }

    #[test]
    fn median_of_means_cases() {
        assert_eq!(median_of_means(&[1.0, 2.0, 100.0], 1).unwrap(), 2.0);
        assert_eq!(median_of_means(&[1.0, 2.0, 3.0, 6.0], 4).unwrap(), 3.0);
        assert!(median_of_means(&[1.0, 2.0, 3.0], 2).is_err());
        let snap = HermitianOperator::from_real_diagonal(&[0.7, 0.3]);
        let z = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        for ell in [1, 2, 3, 6] {
            let v = median_of_means_estimate(&vec![snap.clone(); 6], &z, ell).unwrap();
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_count_examples() {
        let demand = AccuracyDemand::new(0.2, 0.05).unwrap();
        // 204·2/0.04·ln 40 = 37627.0…
        assert_eq!(shadow_required_samples(2.0, 2, &b(1.0, 0.0), &demand).unwrap(), 37627);
        assert!(matches!(
            shadow_required_samples(2.0, 2, &b(0.0, 0.0), &demand),
            Err(QldpError::Infeasible(_))
        ));
        for d in [2usize, 4, 16] {
            for e in [0.1, 0.5, 1.0, 2.0] {
                for dl in [0.0, 0.1] {
                    let bb = b(e, dl);
                    assert!(
                        naive_shadow_required_samples(2.0, d, &bb, &demand).unwrap()
                            >= shadow_required_samples(2.0, d, &bb, &demand).unwrap()
                    );
                }
            }
        }
        let small = shadow_small_epsilon_samples(2.0, &b(0.5, 0.0), &demand).unwrap();
        assert!(small >= shadow_required_samples(2.0, 2, &b(0.5, 0.0), &demand).unwrap());
    }

    #[test]
    fn batching_covers_target() {
        let (ell, k) = default_batching(37627, 0.05).unwrap();
        assert_eq!(k, 7);
        assert!(ell * k >= 37627 && ell * k < 37627 + k);
        assert_eq!(default_batching(5, 0.9).unwrap(), (5, 1));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = stream_rng(15, 0);
        let rho = DensityMatrix::basis_state(4, 1);
        let samples: Vec<_> = (0..10).map(|_| shadow_sample(&rho, 0.2, &mut rng).unwrap()).collect();
        let mut buf = Vec::new();
        write_shadow_samples_csv(&samples, &mut buf).unwrap();
        let back = read_shadow_samples_csv(2, buf.as_slice()).unwrap();
        assert_eq!(back, samples);
        let bad = format!("{SHADOW_CSV_HEADER}\n0,3,01\n1,2,2\n");
        match read_shadow_samples_csv(2, bad.as_bytes()) {
            Err(QldpError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn simulator_matches_generic_path() {
        let rho = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let z = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        let sim = ShadowSimulator::new(&rho, &z, 0.3).unwrap();
        let mut rng = stream_rng(16, 0);
        let n = 60_000;
        let mean = (0..n).map(|_| sim.sample_value(&mut rng)).sum::<f64>() / n as f64;
        // per-snapshot variance is at most x² ≈ 18.4
        assert!((mean - 0.8).abs() < 4.0 * (18.4f64 / n as f64).sqrt());
    }

    #[test]
    fn coverage_runs_above_two_qubits() {
        let rho = DensityMatrix::basis_state(8, 0);
        let zzz = HermitianOperator::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0]);
        let demand = AccuracyDemand::new(0.5, 0.1).unwrap();
        let r = shadow_coverage(&rho, &zzz, &b(2.0, 0.0), &demand, Some(600), 4, 3).unwrap();
        assert_eq!(r.records.len(), 4);
        assert!(r.records.iter().all(|t| t.true_value == 1.0 && t.estimate.is_finite()));
    }
}
