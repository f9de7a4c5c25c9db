//! Outage probability analysis for fluid antenna system (FAS) receivers
//! over spatially correlated Nakagami-m fading.
//!
//! The crate provides four evaluation routes for the outage probability:
//!
//! * [`exact`] — numerically exact single-integral form for a non-diversity
//!   FAS tube, plus the closed-form uncorrelated MRC baseline;
//! * [`gamma_fit`] — closed-form Gamma approximation of branch and
//!   branch-sum gain distributions by asymptotic matching, with the
//!   resulting outage law, high-SNR asymptote, diversity order and array
//!   gain;
//! * [`montecarlo`] — a brute-force oracle for every scheme with
//!   deterministic parallel sampling;
//! * [`sweep`] — the experiment runner behind the `fasop` CLI, emitting CSV
//!   curves and validation reports.

// negated comparisons like `!(x > 0.0)` are used on purpose: they reject
// NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod exact;
pub mod gamma_fit;
pub mod montecarlo;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
