//! Privacy budgets, the depolarizing privacy profile and numerical
//! certification of `(ε, δ)`-QLDP for arbitrary channels.
//!
//! A channel `N` is `(ε, δ)`-QLDP iff `sup_{φ₁ ⊥ φ₂} E_{e^ε}(N(φ₁) ‖ N(φ₂)) ≤ δ`,
//! the supremum running over orthogonal pure states.

use crate::channels::QuantumChannel;
use crate::error::{QldpError, Result};
use crate::qops::{hockey_stick_raw, CMatrix, PureState};
use crate::search::{maximize, pair_states, perturb_pair, random_pair, SearchConfig};

/// Margin separating "satisfied" from "violated" in [`certify_qldp`].
pub const CERT_TOL: f64 = 1e-7;

/// `(ε, δ)` with the derived `γ = e^ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
    gamma: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(QldpError::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(QldpError::invalid(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(Self {
            epsilon,
            delta,
            gamma: epsilon.exp(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `γ = e^ε ≥ 1`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(QldpError::invalid(format!("dimension must be >= 2, got {d}")));
    }
    Ok(())
}

/// Smallest depolarizing parameter achieving the budget: `p* = d(1−δ)/(e^ε + d − 1)`.
pub fn optimal_depolarizing_p(d: usize, budget: &PrivacyBudget) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    Ok((d * (1.0 - budget.delta) / (budget.gamma + d - 1.0)).clamp(0.0, 1.0))
}

/// Worst-case hockey-stick divergence of `A_p` over orthogonal pure inputs,
/// `(1 − p(d − 1 + γ)/d)_+`.
pub fn depolarizing_privacy_profile(d: usize, p: f64, gamma: f64) -> Result<f64> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(QldpError::invalid(format!("depolarizing parameter must lie in [0, 1], got {p}")));
    }
    if !(gamma >= 1.0) {
        return Err(QldpError::invalid(format!("gamma must be >= 1, got {gamma}")));
    }
    let d = d as f64;
    Ok((1.0 - p * (d - 1.0 + gamma) / d).max(0.0))
}

/// Qubit depolarizing strength used after a two-outcome measurement:
/// `q = 2(1−δ)/(e^ε + 1)`.
pub fn qubit_depolarizing_q(budget: &PrivacyBudget) -> f64 {
    2.0 * (1.0 - budget.delta) / (budget.gamma + 1.0)
}

/// Outcome of [`certify_qldp`].
#[derive(Clone, Debug)]
pub struct CertificationResult {
    /// Best value of `E_γ(N(φ₁)‖N(φ₂))` found; a lower bound on the supremum.
    pub sup_estimate: f64,
    /// The orthogonal pair attaining `sup_estimate`, in divergence order.
    pub witness: (PureState, PureState),
    pub restarts_used: usize,
    /// `sup_estimate ≤ δ + CERT_TOL`.
    pub satisfied: bool,
    /// `|sup_estimate − δ| ≤ CERT_TOL`: the verdict sits on the boundary.
    pub borderline: bool,
}

/// `E_γ(N(φ₁)‖N(φ₂))` for the two columns of an isometry.
pub fn pair_divergence(channel: &QuantumChannel, pair: &CMatrix, gamma: f64) -> f64 {
    let a = channel.apply_pure_raw(&pair.column(0).clone_owned());
    let b = channel.apply_pure_raw(&pair.column(1).clone_owned());
    hockey_stick_raw(&a, &b, gamma).clamp(0.0, 1.0)
}

fn swap_columns(pair: &CMatrix) -> CMatrix {
    let mut s = pair.clone();
    s.swap_columns(0, 1);
    s
}

/// Searches orthogonal pure pairs for the largest hockey-stick divergence at
/// `γ = e^ε`. The result is a certified lower bound on the supremum with a
/// heuristic claim of attainment; more restarts buy confidence.
pub fn certify_qldp(channel: &QuantumChannel, budget: &PrivacyBudget, search: &SearchConfig) -> Result<CertificationResult> {
    search.validate()?;
    let d = channel.dim_in();
    if d < 2 {
        return Err(QldpError::invalid("certification needs input dimension >= 2"));
    }
    let gamma = budget.gamma;
    let objective = |pair: &CMatrix| {
        pair_divergence(channel, pair, gamma).max(pair_divergence(channel, &swap_columns(pair), gamma))
    };
    let best = maximize(search, |rng| random_pair(d, rng), perturb_pair, objective)?;
    let forward = pair_divergence(channel, &best.point, gamma);
    let backward = pair_divergence(channel, &swap_columns(&best.point), gamma);
    let (pair, sup) = if forward >= backward {
        (best.point, forward)
    } else {
        (swap_columns(&best.point), backward)
    };
    Ok(CertificationResult {
        sup_estimate: sup,
        witness: pair_states(&pair),
        restarts_used: best.restarts_used,
        satisfied: sup <= budget.delta + CERT_TOL,
        borderline: (sup - budget.delta).abs() <= CERT_TOL,
    })
}
