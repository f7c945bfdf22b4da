//! Special-function kernel: complex log-Gamma, modified Bessel functions and
//! the Mellin-Barnes evaluation of the Meijer-G families used by [`crate::stats`].

mod bessel;
mod gamma;
pub mod mellin;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_k, bessel_k_scaled, ln_bessel_k_scaled};
pub use gamma::{gamma, ln_gamma, log_gamma};
pub use mellin::{
    meijer_g_cdf_family, meijer_g_pdf_family, ContourSpec, Family, MeijerSeries, MellinEval,
    MellinIntegrand, SeriesEval,
};

/// Error function, re-exported so callers need not depend on `libm` directly.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
