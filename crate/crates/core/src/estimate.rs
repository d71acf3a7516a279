//! Private estimation of `Tr[Oρ]`.
//!
//! Each copy of ρ goes through the mechanism `A_q^O`: a Pauli `P` is drawn
//! with probability `|α_P|/S`, measured, and the outcome bit is flipped with
//! probability `q/2`. The estimator only ever sees the `(y, P)` records, and
//! the sample-size calculators bound how many records are needed.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{QldpError, Result};
use crate::pauli::{PauliDecomposition, PauliLabel};
use crate::privacy::{qubit_depolarizing_q, PrivacyBudget};
use crate::qops::{DensityMatrix, HermitianOperator};
use crate::stats::{format_significant, stream_rng};

/// What the data collector receives from one user.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrivatizedSample {
    pub y: u8,
    pub pauli: PauliLabel,
}

/// Additive error `β` to be met with probability at least `1 − η`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyDemand {
    beta: f64,
    eta: f64,
}

impl AccuracyDemand {
    pub fn new(beta: f64, eta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(QldpError::invalid(format!("beta must be positive, got {beta}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(QldpError::invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(Self { beta, eta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(QldpError::invalid(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(())
}

/// Sampler for `A_q^O(ρ)`. It holds ρ only through the per-term expectations
/// `Tr[Pρ]`; callers downstream see nothing but [`PrivatizedSample`]s.
#[derive(Clone, Debug)]
pub struct PauliMechanism {
    decomp: PauliDecomposition,
    q: f64,
    pauli_expectations: Vec<f64>,
}

impl PauliMechanism {
    pub fn new(rho: &DensityMatrix, decomp: &PauliDecomposition, q: f64) -> Result<Self> {
        check_q(q)?;
        if rho.dim() != decomp.dim() {
            return Err(QldpError::invalid(format!(
                "state dimension {} does not match observable dimension {}",
                rho.dim(),
                decomp.dim()
            )));
        }
        if decomp.weight() == 0.0 {
            return Err(QldpError::DegenerateObservable("observable is zero (S = 0)".into()));
        }
        let pauli_expectations = decomp
            .terms()
            .iter()
            .map(|(label, _)| label.trace_with(rho.matrix()).re.clamp(-1.0, 1.0))
            .collect();
        Ok(Self {
            decomp: decomp.clone(),
            q,
            pauli_expectations,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn decomposition(&self) -> &PauliDecomposition {
        &self.decomp
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PrivatizedSample {
        let k = self.decomp.sample_term(rng).expect("nonzero observable");
        let t = self.pauli_expectations[k];
        let outcome = u8::from(rng.random::<f64>() >= 0.5 * (1.0 + t));
        let flip = u8::from(rng.random::<f64>() < 0.5 * self.q);
        PrivatizedSample {
            y: outcome ^ flip,
            pauli: self.decomp.terms()[k].0,
        }
    }

    pub fn samples<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<PrivatizedSample> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// One draw from `A_q^O(ρ)`: `Pr(y = 0 | P) = ½ + ½(1 − q)Tr[Pρ]`.
pub fn privatize_sample<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    decomp: &PauliDecomposition,
    q: f64,
    rng: &mut R,
) -> Result<PrivatizedSample> {
    Ok(PauliMechanism::new(rho, decomp, q)?.sample(rng))
}

/// Mean of `Z_i = S/(1−q) · sgn(α_{P_i}) · (−1)^{y_i}`; unbiased for `Tr[Oρ]`.
pub fn estimate_expectation(samples: &[PrivatizedSample], decomp: &PauliDecomposition, q: f64) -> Result<f64> {
    check_q(q)?;
    if q == 1.0 {
        return Err(QldpError::NoninvertibleMechanism(
            "q = 1 erases the measured bit; no unbiased estimator exists".into(),
        ));
    }
    if samples.is_empty() {
        return Err(QldpError::invalid("no samples"));
    }
    let scale = decomp.weight() / (1.0 - q);
    let mut total = 0.0;
    for s in samples {
        let a = decomp.coefficient(&s.pauli);
        if a == 0.0 {
            return Err(QldpError::invalid(format!("sample Pauli {} is not a term of the observable", s.pauli)));
        }
        if s.y > 1 {
            return Err(QldpError::invalid(format!("sample bit must be 0 or 1, got {}", s.y)));
        }
        let sign = if s.y == 0 { 1.0 } else { -1.0 };
        total += a.signum() * sign;
    }
    Ok(scale * total / samples.len() as f64)
}

/// Sufficient sample count for the Pauli protocol:
/// `⌈2S²(e^ε+1)² / (β²(e^ε−1+2δ)²) · ln(2/η)⌉`.
pub fn required_samples_upper(s: f64, budget: &PrivacyBudget, demand: &AccuracyDemand) -> Result<u64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(QldpError::invalid(format!("observable weight S must be positive, got {s}")));
    }
    let g = budget.gamma();
    let denom = g - 1.0 + 2.0 * budget.delta();
    if denom <= 0.0 {
        return Err(QldpError::Infeasible(
            "epsilon = 0 and delta = 0 leave no information in the output".into(),
        ));
    }
    let n = 2.0 * s * s * (g + 1.0).powi(2) / (demand.beta.powi(2) * denom * denom) * (2.0 / demand.eta).ln();
    Ok(n.ceil() as u64)
}

/// Lower bound on the sample count of any `ε`-QLDP protocol (pure privacy):
/// `⌈ln(1/(4η(1−η))) e^ε (λmax−λmin)² / (32(e^ε−1)²β²)⌉`.
pub fn required_samples_lower(lmax: f64, lmin: f64, budget: &PrivacyBudget, demand: &AccuracyDemand) -> Result<u64> {
    if budget.delta() != 0.0 {
        return Err(QldpError::regime("delta = 0"));
    }
    if !(budget.epsilon() > 0.0) {
        return Err(QldpError::regime("epsilon > 0"));
    }
    let gap = lmax - lmin;
    if !(gap > 0.0) {
        return Err(QldpError::regime("lambda_max > lambda_min"));
    }
    if demand.beta > gap / 4.0 {
        return Err(QldpError::regime("beta <= (lambda_max - lambda_min) / 4"));
    }
    if !(demand.eta < 0.25) {
        return Err(QldpError::regime("eta < 1/4"));
    }
    let g = budget.gamma();
    let eta = demand.eta;
    let n = (1.0 / (4.0 * eta * (1.0 - eta))).ln() * g * gap * gap / (32.0 * (g - 1.0).powi(2) * demand.beta.powi(2));
    Ok(n.ceil() as u64)
}

/// Privacy-free lower bound from the fidelity of the two-point reduction:
/// `⌈ln(4η(1−η)) / ln(1 − 4α′²)⌉` with `α′ = 2β/(λmax − λmin)`.
pub fn fidelity_lower_bound(lmax: f64, lmin: f64, demand: &AccuracyDemand) -> Result<u64> {
    let gap = lmax - lmin;
    if !(gap > 0.0) {
        return Err(QldpError::regime("lambda_max > lambda_min"));
    }
    if !(demand.eta < 0.25) {
        return Err(QldpError::regime("eta < 1/4"));
    }
    let alpha = 2.0 * demand.beta / gap;
    if alpha >= 0.5 {
        return Err(QldpError::DegenerateObservable(
            "beta >= (lambda_max - lambda_min)/4 makes the reduction states orthogonal (zero fidelity)".into(),
        ));
    }
    let eta = demand.eta;
    let n = (4.0 * eta * (1.0 - eta)).ln() / (1.0 - 4.0 * alpha * alpha).ln();
    Ok(n.ceil() as u64)
}

/// Private binary hypothesis testing sample-count bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QhtBounds {
    pub lower: f64,
    pub upper: f64,
    pub c_const: f64,
}

/// Bounds for distinguishing two states at trace distance `t` under `ε`-QLDP
/// with priors `(p, 1−p)` and target error `α`.
pub fn qht_sample_bounds(t: f64, epsilon: f64, p: f64, alpha: f64) -> Result<QhtBounds> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(QldpError::regime("trace distance in (0, 1]"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(QldpError::regime("epsilon > 0"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(QldpError::regime("prior p in (0, 1)"));
    }
    let q = 1.0 - p;
    let pq = p * q;
    if !(alpha > 0.0 && alpha < pq) {
        return Err(QldpError::regime("0 < alpha < p(1 - p)"));
    }
    let g = epsilon.exp();
    let log_ratio = (pq / (alpha * (1.0 - alpha))).ln();
    let c1 = log_ratio * (g + 1.0) / (epsilon * (g - 1.0));
    let c2 = (1.0 - alpha * (1.0 - alpha) / pq) * (g + 1.0) / (2.0 * ((epsilon / 2.0).exp() - 1.0).powi(2));
    let c_const = c1.max(c2);
    let lower = (c_const / t).max(log_ratio * g / (2.0 * (g - 1.0).powi(2) * t * t));
    let upper = (2.0 * (pq.sqrt() / alpha).ln() * ((g + 1.0) / ((g - 1.0) * t)).powi(2)).ceil();
    Ok(QhtBounds { lower, upper, c_const })
}

/// Two states whose `O`-expectations differ by exactly `4β`, so an
/// estimator with error `< 2β` decides between them.
#[derive(Clone, Debug)]
pub struct QhtReduction {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub alpha_prime: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

pub fn build_qht_reduction(o: &HermitianOperator, beta: f64) -> Result<QhtReduction> {
    let (vals, vecs) = o.eigh();
    let lmin = vals[0];
    let lmax = *vals.last().expect("nonempty spectrum");
    let gap = lmax - lmin;
    if gap <= 1e-12 * lmax.abs().max(lmin.abs()).max(1.0) {
        return Err(QldpError::DegenerateObservable(
            "observable is proportional to the identity; its expectation is known without data".into(),
        ));
    }
    if !(beta > 0.0) {
        return Err(QldpError::invalid("beta must be positive"));
    }
    if beta > gap / 4.0 {
        return Err(QldpError::regime("beta <= (lambda_max - lambda_min) / 4"));
    }
    let alpha_prime = 2.0 * beta / gap;
    let d = o.dim();
    let psi_max = vecs.column(d - 1).clone_owned();
    let psi_min = vecs.column(0).clone_owned();
    let pmax = &psi_max * psi_max.adjoint();
    let pmin = &psi_min * psi_min.adjoint();
    let mix = |a: f64| {
        let m = pmax.scale(0.5 + a) + pmin.scale(0.5 - a);
        DensityMatrix::new(m)
    };
    Ok(QhtReduction {
        rho0: mix(alpha_prime)?,
        rho1: mix(-alpha_prime)?,
        alpha_prime,
        threshold: 0.5 * (lmax + lmin),
    })
}

/// `H0` iff `estimate ≥ threshold`.
pub fn threshold_test(estimate: f64, reduction: &QhtReduction) -> Hypothesis {
    if estimate >= reduction.threshold {
        Hypothesis::H0
    } else {
        Hypothesis::H1
    }
}

fn check_effect(o: &HermitianOperator) -> Result<()> {
    let ev = o.eigenvalues();
    if ev[0] < -1e-9 || *ev.last().unwrap() > 1.0 + 1e-9 {
        return Err(QldpError::invalid("measurement operator must satisfy 0 <= O <= I"));
    }
    Ok(())
}

/// Two-outcome measurement `{O, I − O}` followed by a flip with probability
/// `q/2`, run on `n` copies; returns the debiased frequency `(p̂₀ − q/2)/(1 − q)`.
pub fn measurement_operator_estimate<R: Rng + ?Sized>(
    o: &HermitianOperator,
    rho: &DensityMatrix,
    q: f64,
    n: u64,
    rng: &mut R,
) -> Result<f64> {
    check_effect(o)?;
    check_q(q)?;
    if q == 1.0 {
        return Err(QldpError::NoninvertibleMechanism("q = 1 erases the measured bit".into()));
    }
    if o.dim() != rho.dim() {
        return Err(QldpError::invalid("operator and state dimensions differ"));
    }
    if n == 0 {
        return Err(QldpError::invalid("need at least one sample"));
    }
    let p0 = o.expectation(rho).clamp(0.0, 1.0);
    let mut zeros = 0u64;
    for _ in 0..n {
        let outcome = rng.random::<f64>() >= p0;
        let flip = rng.random::<f64>() < 0.5 * q;
        if outcome == flip {
            zeros += 1;
        }
    }
    let freq = zeros as f64 / n as f64;
    Ok((freq - 0.5 * q) / (1.0 - q))
}

/// Measurement-operator protocol at the sufficient sample count
/// `⌈2(e^ε+1)²/(β²(e^ε−1+2δ)²) ln(2/η)⌉`. Returns `(estimate, n_used)`.
pub fn measurement_operator_protocol<R: Rng + ?Sized>(
    o: &HermitianOperator,
    rho: &DensityMatrix,
    budget: &PrivacyBudget,
    demand: &AccuracyDemand,
    rng: &mut R,
) -> Result<(f64, u64)> {
    check_effect(o)?;
    let n = required_samples_upper(1.0, budget, demand)?;
    let q = qubit_depolarizing_q(budget);
    Ok((measurement_operator_estimate(o, rho, q, n, rng)?, n))
}

/// Pauli-sampling protocol at the sufficient sample count. Returns
/// `(estimate, n_used)`.
pub fn pauli_protocol<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    decomp: &PauliDecomposition,
    budget: &PrivacyBudget,
    demand: &AccuracyDemand,
    rng: &mut R,
) -> Result<(f64, u64)> {
    let n = required_samples_upper(decomp.weight(), budget, demand)?;
    let q = qubit_depolarizing_q(budget);
    let mech = PauliMechanism::new(rho, decomp, q)?;
    let samples = mech.samples(n as usize, rng);
    Ok((estimate_expectation(&samples, decomp, q)?, n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub n: u64,
    pub estimate: f64,
    pub true_value: f64,
    pub abs_error: f64,
    pub within_beta: bool,
}

#[derive(Clone, Debug)]
pub struct CoverageReport {
    pub records: Vec<TrialRecord>,
    pub n: u64,
    pub beta: f64,
    pub eta: f64,
}

impl CoverageReport {
    pub fn fraction_within(&self) -> f64 {
        self.records.iter().filter(|r| r.within_beta).count() as f64 / self.records.len() as f64
    }

    /// Coverage target `1 − η` with a three-sigma binomial allowance.
    pub fn meets_target(&self) -> bool {
        let sigma = crate::stats::binomial_sigma(self.eta, self.records.len());
        self.fraction_within() >= 1.0 - self.eta - 3.0 * sigma
    }
}

/// Repeats the Pauli protocol `trials` times with `n` samples each (the
/// sufficient count when `n` is `None`). Trial `i` uses RNG stream `i` of
/// `seed`, so results do not depend on scheduling.
pub fn pauli_coverage(
    rho: &DensityMatrix,
    decomp: &PauliDecomposition,
    budget: &PrivacyBudget,
    demand: &AccuracyDemand,
    n: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<CoverageReport> {
    if trials == 0 {
        return Err(QldpError::invalid("need at least one trial"));
    }
    let n = match n {
        Some(0) => return Err(QldpError::invalid("need at least one sample per trial")),
        Some(n) => n,
        None => required_samples_upper(decomp.weight(), budget, demand)?,
    };
    let q = qubit_depolarizing_q(budget);
    let mech = PauliMechanism::new(rho, decomp, q)?;
    let truth = decomp.reconstruct().expectation(rho);
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let samples = mech.samples(n as usize, &mut rng);
            let estimate = estimate_expectation(&samples, decomp, q)?;
            let abs_error = (estimate - truth).abs();
            Ok(TrialRecord {
                trial,
                n,
                estimate,
                true_value: truth,
                abs_error,
                within_beta: abs_error <= demand.beta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport {
        records,
        n,
        beta: demand.beta,
        eta: demand.eta,
    })
}

pub const TRIAL_CSV_HEADER: &str = "trial,n,estimate,true_value,abs_error,within_beta";

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRIAL_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.n,
            format_significant(r.estimate, 12),
            format_significant(r.true_value, 12),
            format_significant(r.abs_error, 12),
            r.within_beta
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{decompose, pauli_matrix};
    use crate::qops::PureState;

    fn z_decomp() -> PauliDecomposition {
        decompose(&HermitianOperator::from_real_diagonal(&[1.0, -1.0]), 1).unwrap()
    }

    fn b(e: f64, d: f64) -> PrivacyBudget {
        PrivacyBudget::new(e, d).unwrap()
    }

    #[test]
    fn noiseless_z_on_zero_state() {
        let mut rng = stream_rng(1, 0);
        let rho = DensityMatrix::basis_state(2, 0);
        for _ in 0..50 {
            let s = privatize_sample(&rho, &z_decomp(), 0.0, &mut rng).unwrap();
            assert_eq!(s.y, 0);
            assert_eq!(s.pauli.to_string(), "Z");
        }
    }

    #[test]
    fn flip_rate_matches_formula() {
        let mut rng = stream_rng(2, 0);
        let mech = PauliMechanism::new(&DensityMatrix::basis_state(2, 0), &z_decomp(), 0.5).unwrap();
        let n = 40_000;
        let zeros = mech.samples(n, &mut rng).iter().filter(|s| s.y == 0).count() as f64 / n as f64;
        assert!((zeros - 0.75).abs() < 4.0 * crate::stats::binomial_sigma(0.75, n));
    }

    #[test]
    fn estimator_formula() {
        let z: PauliLabel = "Z".parse().unwrap();
        let d = z_decomp();
        assert_eq!(estimate_expectation(&[PrivatizedSample { y: 0, pauli: z }; 4], &d, 0.0).unwrap(), 1.0);
        assert_eq!(estimate_expectation(&[PrivatizedSample { y: 1, pauli: z }], &d, 0.5).unwrap(), -2.0);
        assert!(matches!(
            estimate_expectation(&[PrivatizedSample { y: 1, pauli: z }], &d, 1.0),
            Err(QldpError::NoninvertibleMechanism(_))
        ));
        let x: PauliLabel = "X".parse().unwrap();
        assert!(estimate_expectation(&[PrivatizedSample { y: 0, pauli: x }], &d, 0.1).is_err());
    }

    #[test]
    fn zero_observable_is_degenerate() {
        let d = PauliDecomposition::from_terms(1, &[]).unwrap();
        let err = privatize_sample(&DensityMatrix::maximally_mixed(2), &d, 0.2, &mut stream_rng(0, 0));
        assert!(matches!(err, Err(QldpError::DegenerateObservable(_))));
    }

    #[test]
    fn sample_size_examples() {
        let demand = AccuracyDemand::new(0.1, 0.05).unwrap();
        assert_eq!(required_samples_upper(1.0, &b(1.0, 0.0), &demand).unwrap(), 3455);
        assert!(matches!(
            required_samples_upper(1.0, &b(0.0, 0.0), &demand),
            Err(QldpError::Infeasible(_))
        ));
        let d2 = AccuracyDemand::new(0.1, 0.1).unwrap();
        assert_eq!(required_samples_lower(1.0, -1.0, &b(1.0, 0.0), &d2).unwrap(), 12);
        assert_eq!(fidelity_lower_bound(1.0, -1.0, &d2).unwrap(), 26);
    }

    #[test]
    fn delta_one_reduces_to_hoeffding() {
        let demand = AccuracyDemand::new(0.05, 0.01).unwrap();
        let expect = (2.0 * 3.0f64.powi(2) * (200.0f64).ln() / 0.05f64.powi(2)).ceil() as u64;
        assert_eq!(required_samples_upper(3.0, &b(0.7, 1.0), &demand).unwrap(), expect);
    }

    #[test]
    fn lower_bound_regimes_are_named() {
        let demand = AccuracyDemand::new(0.1, 0.1).unwrap();
        let cases = [
            required_samples_lower(1.0, -1.0, &b(1.0, 0.1), &demand),
            required_samples_lower(1.0, -1.0, &b(0.0, 0.0), &demand),
            required_samples_lower(0.1, -0.1, &b(1.0, 0.0), &demand),
            required_samples_lower(1.0, -1.0, &b(1.0, 0.0), &AccuracyDemand::new(0.1, 0.3).unwrap()),
        ];
        for c in cases {
            match c {
                Err(QldpError::OutOfRegime { condition }) => assert!(!condition.is_empty()),
                other => panic!("expected out-of-regime, got {other:?}"),
            }
        }
        let near = required_samples_lower(1.0, -1.0, &b(1.0, 0.0), &AccuracyDemand::new(0.1, 0.2499999).unwrap()).unwrap();
        assert!(near >= 1);
        assert!(fidelity_lower_bound(1.0, -1.0, &AccuracyDemand::new(0.5, 0.1).unwrap()).is_err());
    }

    #[test]
    fn qht_bounds() {
        let r = qht_sample_bounds(1.0, 1.0, 0.5, 0.05).unwrap();
        assert_eq!(r.upper, 22.0);
        assert!(r.lower <= r.upper);
        assert!(qht_sample_bounds(1.0, 1.0, 0.5, 0.25).is_err());
        for i in 1..=20 {
            let eps = 0.1 * i as f64;
            for j in 1..=10 {
                let t = 0.1 * j as f64;
                let r = qht_sample_bounds(t, eps, 0.5, 0.125).unwrap();
                assert!(r.lower <= r.upper, "eps={eps} t={t}: {r:?}");
            }
        }
    }

    #[test]
    fn reduction_for_z() {
        let o = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        let r = build_qht_reduction(&o, 0.25).unwrap();
        assert!((r.alpha_prime - 0.25).abs() < 1e-15);
        assert!((r.rho0.matrix()[(0, 0)].re - 0.75).abs() < 1e-12);
        assert!((r.rho1.matrix()[(0, 0)].re - 0.25).abs() < 1e-12);
        assert!(r.threshold.abs() < 1e-15);
        assert!((crate::qops::trace_distance(&r.rho0, &r.rho1).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(threshold_test(r.threshold, &r), Hypothesis::H0);
        assert_eq!(threshold_test(r.threshold + 1.0, &r), Hypothesis::H0);
        assert_eq!(threshold_test(r.threshold - 1.0, &r), Hypothesis::H1);
        assert!(matches!(
            build_qht_reduction(&HermitianOperator::identity(2).scale(3.0), 0.1),
            Err(QldpError::DegenerateObservable(_))
        ));
    }

    #[test]
    fn measurement_operator_cases() {
        let mut rng = stream_rng(4, 0);
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let id = HermitianOperator::identity(2);
        assert_eq!(measurement_operator_estimate(&id, &rho, 0.0, 100, &mut rng).unwrap(), 1.0);
        let p0 = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        let zero = DensityMatrix::basis_state(2, 0);
        assert_eq!(measurement_operator_estimate(&p0, &zero, 0.0, 100, &mut rng).unwrap(), 1.0);
        let bad = HermitianOperator::from_real_diagonal(&[1.5, 0.0]);
        assert!(measurement_operator_estimate(&bad, &zero, 0.1, 10, &mut rng).is_err());
        let budget = b(1.0, 0.0);
        let demand = AccuracyDemand::new(0.1, 0.05).unwrap();
        let (est, n) = measurement_operator_protocol(&p0, &rho, &budget, &demand, &mut rng).unwrap();
        assert_eq!(n, 3455);
        assert!((est - 0.3).abs() < 0.1);
    }

    // Independent dense oracle: enumerate (y, P) with probability
    // p(P) * Pr(y | P) and average the estimator value.
    fn exact_mean(o: &HermitianOperator, rho: &DensityMatrix, q: f64, m: usize) -> f64 {
        let d = decompose(o, m).unwrap();
        let s = d.weight();
        let mut total = 0.0;
        for (label, a) in d.terms() {
            let tp = (pauli_matrix(label).matrix() * rho.matrix()).trace().re;
            let p0 = 0.5 + 0.5 * (1.0 - q) * tp;
            let prob_p = a.abs() / s;
            for (y, py) in [(0u8, p0), (1u8, 1.0 - p0)] {
                let z = estimate_expectation(&[PrivatizedSample { y, pauli: *label }], &d, q).unwrap();
                total += prob_p * py * z;
            }
        }
        total
    }

    #[test]
    fn estimator_is_unbiased_exactly() {
        let rho = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let z = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        assert!((exact_mean(&z, &rho, 0.5, 1) - 0.6).abs() < 1e-12);
        let mut rng = stream_rng(17, 0);
        for m in 1..=2usize {
            let dim = 1 << m;
            for _ in 0..5 {
                let g = crate::qops::random_unitary(dim, &mut rng);
                let o = HermitianOperator::new(&g + g.adjoint()).unwrap();
                let rho = crate::qops::random_density(dim, dim, &mut rng).unwrap();
                for q in [0.0, 0.3, 0.9] {
                    assert!((exact_mean(&o, &rho, q, m) - o.expectation(&rho)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn debiased_frequency_is_unbiased_exactly() {
        // two-outcome enumeration of the flipped POVM bit
        let exact = |o: &HermitianOperator, rho: &DensityMatrix, q: f64| {
            let p0 = o.expectation(rho);
            let pr_zero = p0 * (1.0 - q / 2.0) + (1.0 - p0) * q / 2.0;
            (pr_zero - q / 2.0) / (1.0 - q)
        };
        let rho = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
        let p0 = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        assert!((exact(&p0, &rho, 0.5) - 0.8).abs() < 1e-12);
        let id = HermitianOperator::identity(2);
        for q in [0.0, 0.4, 0.99] {
            assert!((exact(&id, &rho, q) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_is_reproducible() {
        let rho = DensityMatrix::from_pure(&PureState::basis(2, 0));
        let demand = AccuracyDemand::new(0.2, 0.1).unwrap();
        let a = pauli_coverage(&rho, &z_decomp(), &b(1.0, 0.0), &demand, None, 50, 9).unwrap();
        let c = pauli_coverage(&rho, &z_decomp(), &b(1.0, 0.0), &demand, None, 50, 9).unwrap();
        assert_eq!(a.records, c.records);
        assert!(a.meets_target());
        let mut buf = Vec::new();
        write_trials_csv(&a.records[..1], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(TRIAL_CSV_HEADER));
    }
}
