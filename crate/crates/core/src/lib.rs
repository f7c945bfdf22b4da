//! Outage analysis of an optical-RIS assisted free-space-optical NOMA downlink.
//!
//! The end-to-end channel of each receiver is `h = h_l · h_s · h_g`:
//! deterministic atmospheric/reflection loss, Gamma-Gamma turbulence, and
//! 3D pointing errors driven by building sway. The crate provides
//!
//! * [`channel`]: geometry → distribution parameters,
//! * [`specfun`]: log-Gamma, Bessel functions, Mellin-Barnes quadrature,
//! * [`stats`]: exact series PDF/CDF, a brute-force integration oracle and
//!   the small-`h` asymptote,
//! * [`outage`]: single-receiver, NOMA and OMA outage probabilities,
//! * [`mc`]: an independent, seeded Monte Carlo engine,
//! * [`scenario`]: JSON scenarios, figure presets and CSV sweeps.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod mc;
pub mod outage;
pub mod quad;
pub mod scenario;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
