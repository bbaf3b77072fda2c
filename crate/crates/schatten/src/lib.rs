//! Exact and Monte Carlo analysis of a Gaussian-sketch estimator for
//! `Tr(S^p)`, the 2p-th power of the Schatten 2p-norm of a matrix `B`
//! with `S = BᵀB`.
//!
//! The estimator draws a sketching matrix `X` of shape `n×d` with i.i.d.
//! standard normal entries, forms `W = X S Xᵀ`, and averages cycle
//! products of `W` over all increasing p-cycles:
//!
//! ```text
//! V = C(n,p)⁻¹ · Σ_{i₁<…<i_p}  W_{i₁i₂} W_{i₂i₃} ⋯ W_{i_p i₁}
//! ```
//!
//! `V` is unbiased for `Tr(S^p)`. Everything else in this crate exists to
//! pin down its variance:
//!
//! * [`cycles`] enumerates increasing cycles and reduces ordered cycle
//!   pairs to overlap patterns `(q; k₀..k_q; m₀..m_q)` that determine the
//!   pair expectation completely.
//! * [`moments`] evaluates the two-pass Gaussian chain moments (second
//!   pass in the same or reversed order) by exact recursions, plus a
//!   closed form for the reversed kind built on the word algebra in
//!   [`words`].
//! * [`variance`] aggregates pair expectations into the exact variance,
//!   with closed-form fast paths, a literal transcription of an
//!   alternative expansion kept as a diagnostic, and naive oracle routes.
//! * [`bounds`] evaluates two variance upper bounds and the moment
//!   sandwich inequalities used to derive them.
//! * [`oracle`] recomputes every moment from scratch with the Wick
//!   (Isserlis) theorem; it validates all other modules.
//! * [`sketch`] is a seeded, reproducible Monte Carlo harness.
//!
//! Numeric policy: trace powers come from eigenvalues (never repeated
//! matrix products), combinatorial weights are exact big integers
//! converted to `f64` once per use, and every accumulation that feeds a
//! reported number uses compensated summation in a fixed order, so
//! results are bit-reproducible regardless of thread count.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod cycles;
pub mod error;
pub mod kahan;
pub mod matrix;
pub mod moments;
pub mod oracle;
pub mod sketch;
pub mod spectrum;
pub mod variance;
pub mod words;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use spectrum::{gram_spectrum, schatten_2p_power, schatten_norm, trace_powers, Spectrum, TracePowerTable};
