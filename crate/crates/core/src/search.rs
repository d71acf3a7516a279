//! Derivative-free search over pure states and orthogonal pure-state pairs.
//!
//! Each restart draws a random starting point and refines it with a (1+1)
//! evolution strategy: Gaussian perturbation of the amplitudes, exact
//! re-normalization (or re-orthonormalization for pairs), and step-size
//! adaptation by the one-fifth success rule. Every evaluated point is
//! feasible, so the best value found is a certified bound in the direction
//! of the search (lower bound for maximization, upper bound for minimization).

use rand::Rng;
use rayon::prelude::*;

use crate::error::{QldpError, Result};
use crate::qops::{gaussian_vector, orthonormalize_columns, CMatrix, CVector, PureState};
use crate::stats::stream_rng;

/// Knobs for the restart/refinement engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub local_steps: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            local_steps: 300,
            step_size: 0.5,
            seed: 0x5eed,
        }
    }
}

impl SearchConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(QldpError::invalid("search needs at least one restart"));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(QldpError::invalid("search step size must be positive"));
        }
        Ok(())
    }
}

/// Best point found by [`maximize`].
#[derive(Clone, Debug)]
pub struct Optimum<P> {
    pub point: P,
    pub value: f64,
    pub restarts_used: usize,
}

const STEP_GROW: f64 = 1.5;
const MIN_STEP: f64 = 1e-9;

/// Multi-start maximization. Restarts run in parallel, each on its own RNG
/// stream; ties are broken toward the lowest restart index.
pub fn maximize<P, I, S, F>(config: &SearchConfig, init: I, perturb: S, objective: F) -> Result<Optimum<P>>
where
    P: Send,
    I: Fn(&mut rand_chacha::ChaCha8Rng) -> P + Sync,
    S: Fn(&P, f64, &mut rand_chacha::ChaCha8Rng) -> P + Sync,
    F: Fn(&P) -> f64 + Sync,
{
    config.validate()?;
    let shrink = STEP_GROW.powf(-0.25);
    let results: Vec<(usize, P, f64)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.seed, r as u64);
            let mut x = init(&mut rng);
            let mut fx = objective(&x);
            let mut step = config.step_size;
            for _ in 0..config.local_steps {
                let y = perturb(&x, step, &mut rng);
                let fy = objective(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    step = (step * STEP_GROW).min(2.0);
                } else {
                    step *= shrink;
                    if step < MIN_STEP {
                        break;
                    }
                }
            }
            (r, x, fx)
        })
        .collect();
    let (_, point, value) = results
        .into_iter()
        .reduce(|a, b| if b.2 > a.2 { b } else { a })
        .expect("at least one restart");
    Ok(Optimum {
        point,
        value,
        restarts_used: config.restarts,
    })
}

/// Random unit vector in `C^dim`.
pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = gaussian_vector(dim, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v.unscale(n);
        }
    }
}

pub fn perturb_unit<R: Rng + ?Sized>(v: &CVector, step: f64, rng: &mut R) -> CVector {
    let w = v + gaussian_vector(v.len(), rng).scale(step);
    let n = w.norm();
    if n > 1e-12 {
        w.unscale(n)
    } else {
        v.clone()
    }
}

/// A `dim x 2` isometry whose columns are an orthonormal pure-state pair.
pub fn random_pair<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(dim, 2, |_, _| crate::qops::complex_gaussian(rng));
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

pub fn perturb_pair<R: Rng + ?Sized>(pair: &CMatrix, step: f64, rng: &mut R) -> CMatrix {
    let noise = CMatrix::from_fn(pair.nrows(), 2, |_, _| crate::qops::complex_gaussian(rng));
    orthonormalize_columns(&(pair + noise.scale(step))).unwrap_or_else(|| pair.clone())
}

/// Splits an isometry into its two column states.
pub fn pair_states(pair: &CMatrix) -> (PureState, PureState) {
    let a = PureState::normalized(pair.column(0).clone_owned()).expect("unit column");
    let b = PureState::normalized(pair.column(1).clone_owned()).expect("unit column");
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_maximum_of_simple_overlap() {
        // max |<0|v>|^2 over unit vectors is 1
        let cfg = SearchConfig::default().with_restarts(4);
        let opt = maximize(&cfg, |r| random_unit(3, r), perturb_unit, |v| v[0].norm_sqr()).unwrap();
        assert!((opt.value - 1.0).abs() < 1e-8, "{}", opt.value);
    }

    #[test]
    fn pairs_stay_orthonormal() {
        let mut rng = stream_rng(1, 0);
        let mut p = random_pair(4, &mut rng);
        for _ in 0..50 {
            p = perturb_pair(&p, 0.3, &mut rng);
        }
        let gram = p.adjoint() * &p;
        assert!(crate::qops::max_abs_diff(&gram, &CMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn zero_restarts_rejected() {
        let cfg = SearchConfig::default().with_restarts(0);
        assert!(maximize(&cfg, |r| random_unit(2, r), perturb_unit, |_| 0.0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SearchConfig::default().with_restarts(8).with_seed(3);
        let run = || {
            maximize(&cfg, |r| random_unit(4, r), perturb_unit, |v| v[1].re).unwrap().value
        };
        assert_eq!(run(), run());
    }
}
