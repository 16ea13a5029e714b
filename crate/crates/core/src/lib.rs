//! Point probabilities of the simple symmetric random walk, computed three ways:
//! exactly (dyadic rationals over big integers), through the corrected exponent
//! `e^{−b_{k,n}}/√(πn)`, and through the classical Gaussian form `e^{−k²/n}/√(πn)`.
//!
//! The floating point layers ([`approx`], [`envelope`]) are generic over
//! [`Real`] and can be instantiated at `f32` or `f64`; the aliases below fix
//! them to `f64`, which is what the verification sweep uses.
//!
//! ```
//! use symwalk::{approx_prob, certificate, exact_even, log_dyadic, BoundVariant, GridPoint};
//!
//! let p = GridPoint::even(10, 5).unwrap();
//! let exact = log_dyadic(&exact_even(10, 5).unwrap()).unwrap().value;
//! let point = approx_prob::<f64>(&p).unwrap().value;
//! assert!(exact <= point);
//!
//! let cert = certificate::<f64>(&p, BoundVariant::CorrectedTrapezoid).unwrap();
//! assert!(cert.envelope.log_lower.le(exact));
//! ```

// `!(x < y)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod envelope;
pub mod error;
pub mod exact;
pub mod grid;
pub mod precise;
pub mod scalar;
pub mod sweep;

pub use approx::{
    approx_prob, b_even, b_even_expanded, b_even_series, b_odd, b_odd_expanded, b_odd_series,
    exponent, gaussian_prob, integral_i, trapezoid_row, trapezoid_t, Method, SeriesControl,
};
pub use envelope::{
    central_bounds, certificate, dml_bounds, dml_window_contains, envelope, stirling_bounds,
    theorem_lower, theorem_upper, trapezoid_error_bound, BoundVariant,
};
pub use error::{Error, Result};
pub use exact::{
    binomial, binomial_row, exact_even, exact_odd, factorial, log_biguint, log_dyadic,
    log_even_recurrence_row, log_even_via_recurrence, log_factorial, walk_prob, DyadicRational,
};
pub use grid::{GridPoint, Parity};
pub use scalar::{NeumaierSum, Real};
pub use sweep::{
    emit_csv, emit_json, run_sweep, summarize, write_csv, write_json, CheckStatus, KPolicy,
    SuiteId, SuiteReport, SweepRecord, SweepSpec,
};

pub type LogProb = exact::LogProb<f64>;
pub type LogProb32 = exact::LogProb<f32>;
pub type Exponent = approx::Exponent<f64>;
pub type Exponent32 = approx::Exponent<f32>;
pub type Envelope = envelope::Envelope<f64>;
pub type Envelope32 = envelope::Envelope<f32>;
pub type Certificate = envelope::Certificate<f64>;
pub type Certificate32 = envelope::Certificate<f32>;
pub type LogBound = envelope::LogBound<f64>;
