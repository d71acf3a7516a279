//! Worst-case utility of channels and its optimum under a privacy budget.
//!
//! Fidelity utility is `min_ρ F(N(ρ), ρ)`, trace utility is
//! `max_ρ ½‖N(ρ) − ρ‖₁`. Both extrema sit on pure states, so the searches run
//! over the unit sphere only.

use std::io::Write;

use rand::Rng;

use crate::channels::QuantumChannel;
use crate::error::{QldpError, Result};
use crate::privacy::{optimal_depolarizing_p, PrivacyBudget};
use crate::qops::{random_density, trace_distance_raw, CVector, PureState};
use crate::search::{maximize, perturb_unit, random_unit, SearchConfig};
use crate::stats::{format_significant, stream_rng};

/// One side of a utility search: the value and the state attaining it.
#[derive(Clone, Debug)]
pub struct UtilityExtremum {
    pub value: f64,
    pub witness: PureState,
    pub restarts_used: usize,
}

#[derive(Clone, Debug)]
pub struct UtilityReport {
    /// Upper bound on `min_ψ F(N(ψ), ψ)`.
    pub fidelity_utility: f64,
    /// Lower bound on `max_ψ T(N(ψ), ψ)`.
    pub trace_utility: f64,
    pub anti_trace_utility: f64,
    /// State minimizing the fidelity.
    pub minimizer: PureState,
    /// State maximizing the trace distance.
    pub maximizer: PureState,
}

fn check_square(n: &QuantumChannel) -> Result<()> {
    if n.dim_in() != n.dim_out() {
        return Err(QldpError::invalid(format!(
            "utility needs equal input and output dimension, got {} -> {}",
            n.dim_in(),
            n.dim_out()
        )));
    }
    Ok(())
}

fn fidelity_at(n: &QuantumChannel, psi: &CVector) -> f64 {
    let out = n.apply_pure_raw(psi);
    (psi.adjoint() * out * psi)[(0, 0)].re.clamp(0.0, 1.0)
}

fn trace_distance_at(n: &QuantumChannel, psi: &CVector) -> f64 {
    let out = n.apply_pure_raw(psi);
    trace_distance_raw(&out, &(psi * psi.adjoint())).clamp(0.0, 1.0)
}

/// `F(N(ψ), ψ) = ⟨ψ|N(ψ)|ψ⟩`.
pub fn pure_fidelity(n: &QuantumChannel, psi: &PureState) -> Result<f64> {
    check_square(n)?;
    if psi.dim() != n.dim_in() {
        return Err(QldpError::invalid("state dimension does not match channel"));
    }
    Ok(fidelity_at(n, psi.amplitudes()))
}

/// `½‖N(ψ) − ψ‖₁`.
pub fn pure_trace_distance(n: &QuantumChannel, psi: &PureState) -> Result<f64> {
    check_square(n)?;
    if psi.dim() != n.dim_in() {
        return Err(QldpError::invalid("state dimension does not match channel"));
    }
    Ok(trace_distance_at(n, psi.amplitudes()))
}

fn search_sphere(n: &QuantumChannel, search: &SearchConfig, objective: impl Fn(&CVector) -> f64 + Sync) -> Result<(CVector, usize)> {
    let d = n.dim_in();
    let best = maximize(search, |rng| random_unit(d, rng), perturb_unit, objective)?;
    Ok((best.point, best.restarts_used))
}

/// Fidelity utility by minimization over pure states. The reported value is
/// attained by the witness, hence an upper bound on the true minimum.
pub fn fidelity_utility(n: &QuantumChannel, search: &SearchConfig) -> Result<UtilityExtremum> {
    check_square(n)?;
    let (psi, restarts_used) = search_sphere(n, search, |v| -fidelity_at(n, v))?;
    Ok(UtilityExtremum {
        value: fidelity_at(n, &psi),
        witness: PureState::normalized(psi)?,
        restarts_used,
    })
}

/// Trace utility by maximization over pure states; a lower bound on the true
/// maximum.
pub fn trace_utility(n: &QuantumChannel, search: &SearchConfig) -> Result<UtilityExtremum> {
    check_square(n)?;
    let (psi, restarts_used) = search_sphere(n, search, |v| trace_distance_at(n, v))?;
    Ok(UtilityExtremum {
        value: trace_distance_at(n, &psi),
        witness: PureState::normalized(psi)?,
        restarts_used,
    })
}

pub fn utility_report(n: &QuantumChannel, search: &SearchConfig) -> Result<UtilityReport> {
    let f = fidelity_utility(n, search)?;
    let t = trace_utility(n, search)?;
    Ok(UtilityReport {
        fidelity_utility: f.value,
        trace_utility: t.value,
        anti_trace_utility: 1.0 - t.value,
        minimizer: f.witness,
        maximizer: t.witness,
    })
}

/// Debugging aid: random full-rank mixed inputs, returning the smallest
/// fidelity and largest trace distance seen. Not a certified bound on
/// anything the pure-state searches do not already cover.
pub fn mixed_state_scan(n: &QuantumChannel, samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_square(n)?;
    let d = n.dim_in();
    let mut rng = stream_rng(seed, 0);
    let mut min_f = f64::INFINITY;
    let mut max_t = 0.0f64;
    for _ in 0..samples {
        let rank = rng.random_range(1..=d);
        let rho = random_density(d, rank, &mut rng)?;
        let out = n.apply(&rho)?;
        min_f = min_f.min(crate::qops::fidelity(&out, &rho)?);
        max_t = max_t.max(crate::qops::trace_distance(&out, &rho)?);
    }
    Ok((min_f, max_t))
}

fn check_budget_dim(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(QldpError::invalid(format!("dimension must be >= 2, got {d}")));
    }
    Ok(d as f64)
}

/// Best fidelity utility over all `(ε, δ)`-QLDP channels on `C^d`:
/// `(e^ε + δ(d−1)) / (e^ε + d − 1)`.
pub fn optimal_fidelity_utility(d: usize, budget: &PrivacyBudget) -> Result<f64> {
    let df = check_budget_dim(d)?;
    let g = budget.gamma();
    Ok((g + budget.delta() * (df - 1.0)) / (g + df - 1.0))
}

/// Smallest trace utility over all `(ε, δ)`-QLDP channels: `(d−1)(1−δ)/(e^ε + d − 1)`.
pub fn optimal_trace_utility(d: usize, budget: &PrivacyBudget) -> Result<f64> {
    let df = check_budget_dim(d)?;
    Ok((df - 1.0) * (1.0 - budget.delta()) / (budget.gamma() + df - 1.0))
}

/// Optimum when the receiver may post-process the output. Depolarizing at
/// `p*` stays optimal, so this is `F(A_{p*}) = 1 − p*(d−1)/d`.
pub fn postprocessed_fidelity_utility(d: usize, budget: &PrivacyBudget) -> Result<f64> {
    let df = check_budget_dim(d)?;
    let p = optimal_depolarizing_p(d, budget)?;
    Ok(1.0 - p * (df - 1.0) / df)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilityRow {
    pub epsilon: f64,
    pub delta: f64,
    pub optimal_fidelity: f64,
    pub optimal_trace: f64,
}

/// Closed-form optimum on a grid; rows run over `deltas` (outer) and
/// `eps_grid` (inner) in the order given.
pub fn utility_curve(d: usize, deltas: &[f64], eps_grid: &[f64]) -> Result<Vec<UtilityRow>> {
    if deltas.is_empty() || eps_grid.is_empty() {
        return Err(QldpError::invalid("utility curve needs nonempty delta and epsilon grids"));
    }
    let mut rows = Vec::with_capacity(deltas.len() * eps_grid.len());
    for &delta in deltas {
        for &epsilon in eps_grid {
            let b = PrivacyBudget::new(epsilon, delta)?;
            rows.push(UtilityRow {
                epsilon,
                delta,
                optimal_fidelity: optimal_fidelity_utility(d, &b)?,
                optimal_trace: optimal_trace_utility(d, &b)?,
            });
        }
    }
    Ok(rows)
}

pub const UTILITY_CSV_HEADER: &str = "epsilon,delta,optimal_fidelity,optimal_trace";

/// CSV with 12 significant digits per value.
pub fn write_utility_csv<W: Write>(rows: &[UtilityRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{UTILITY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_significant(r.epsilon, 12),
            format_significant(r.delta, 12),
            format_significant(r.optimal_fidelity, 12),
            format_significant(r.optimal_trace, 12)
        )?;
    }
    Ok(())
}
