//! Quantum local differential privacy (QLDP) toolkit.
//!
//! The crate certifies privacy of finite-dimensional quantum channels,
//! evaluates the optimal privacy-utility formulas for `(ε, δ)`-QLDP
//! mechanisms, and simulates two private protocols for estimating
//! `Tr[Oρ]`: a Pauli-sampling mechanism and private classical shadows.
//!
//! Module map:
//!
//! - [`qops`]: dense Hermitian kernel, trace distance, fidelity, hockey-stick divergence.
//! - [`channels`]: CPTP maps (Kraus + lazily cached superoperator), depolarizing,
//!   Pauli measurement channels, composition and finite-group twirls.
//! - [`privacy`]: privacy budgets, the optimal depolarizing parameter and
//!   numerical certification of arbitrary channels.
//! - [`utility`]: fidelity / trace-distance utilities and their private optima.
//! - [`pauli`]: Pauli labels, decompositions, sampling and Clifford groups.
//! - [`estimate`]: the Pauli-sampling mechanism, its estimator and all
//!   sample-complexity calculators.
//! - [`shadows`]: private classical shadows and median-of-means aggregation.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod estimate;
pub mod pauli;
pub mod privacy;
pub mod qops;
pub mod search;
pub mod shadows;
pub mod stats;
pub mod utility;

pub use error::{QldpError, Result};
pub use qops::{CMatrix, CVector, DensityMatrix, HermitianOperator, PureState};
