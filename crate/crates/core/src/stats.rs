//! End-to-end channel statistics of `h = h_l h_s h_g`.
//!
//! With `χ = h / (A0 h_l)` and `z = αβχ`, the exact CDF and PDF are
//!
//! ```text
//! F_h(h) = ω / (Γ(α)Γ(β)) · Σ_k binom(2k,k) (v/2)^{2k} G^{cdf}_k(z)
//! f_h(h) = ωαβ / (h_l A0 Γ(α)Γ(β)) · Σ_k binom(2k,k) (v/2)^{2k} G^{pdf}_k(z)
//! ```
//!
//! truncated after `n_terms` terms. The brute-force oracles integrate the
//! product density directly and share no code with the series.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::channel::{cdf_pointing, cdf_turbulence, pdf_turbulence, ChannelParams};
use crate::error::{Error, Result};
use crate::quad::{integrate_to_infinity, QuadOptions};
use crate::specfun::{bessel_i0_scaled, ln_gamma, Family, MeijerSeries, SeriesEval};

/// Series truncation used unless overridden.
pub const DEFAULT_TERMS: usize = 10;
/// Relative quadrature tolerance for each series evaluation.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Terms kept in the log-power series of the pointing-limited asymptote.
pub const DEFAULT_LOG_SERIES_TERMS: usize = 10;
/// Hard cap for [`terms_for`].
pub const MAX_TERMS: usize = 2000;

/// Evaluator for the end-to-end distribution of one path.
#[derive(Clone, Copy, Debug)]
pub struct E2EChannelDist {
    pub params: ChannelParams,
    pub n_terms: usize,
    pub tol: f64,
    pub log_series_terms: usize,
    /// When set, `n_terms` is only the starting truncation; see
    /// [`with_auto_terms`](Self::with_auto_terms).
    pub auto_terms: Option<f64>,
}

/// Smallest `N` for which the discarded tail of the series is below `eps`
/// relative to its leading term.
///
/// Term `k` is bounded by `(|v| / c)^{2k}` times a `k`-independent factor
/// (take the contour towards `Re s = 0`), so the tail after `N` terms is at
/// most `r^{2N} / (1 - r²)` with `r = |v| / c = (1 - q²)/(1 + q²)`.
pub fn terms_for(params: &ChannelParams, eps: f64) -> usize {
    let r = params.v.abs() / params.c;
    if r < 1e-300 {
        return 1;
    }
    let r2 = r * r;
    let n = ((eps * (1.0 - r2)).ln() / r2.ln()).ceil();
    (n.max(1.0) as usize + 1).min(MAX_TERMS)
}

impl E2EChannelDist {
    pub fn new(params: ChannelParams) -> Self {
        Self {
            params,
            n_terms: DEFAULT_TERMS,
            tol: DEFAULT_TOL,
            log_series_terms: DEFAULT_LOG_SERIES_TERMS,
            auto_terms: None,
        }
    }

    pub fn with_terms(mut self, n_terms: usize) -> Self {
        self.n_terms = n_terms.max(1);
        self
    }

    /// Truncation chosen by [`terms_for`] so that the dropped tail is below `eps`.
    pub fn with_converged_terms(self, eps: f64) -> Self {
        let n = terms_for(&self.params, eps);
        self.with_terms(n)
    }

    /// Doubles the truncation at each evaluation until the estimated tail
    /// is below `eps` relative to the value, up to [`MAX_TERMS`].
    ///
    /// Needed in the pointing-limited regime (`c < min(α, β)`) at small
    /// `h`: there the `k`-th term behaves like `z^c ln^{2k} z`, so any fixed
    /// truncation has the wrong small-`h` exponent (`c` instead of `c − |v|`).
    pub fn with_auto_terms(mut self, eps: f64) -> Self {
        self.auto_terms = Some(eps);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_log_series_terms(mut self, n: usize) -> Self {
        self.log_series_terms = n.max(1);
        self
    }

    /// `h / (A0 h_l)`.
    pub fn chi(&self, h: f64) -> f64 {
        h / (self.params.a0 * self.params.h_l)
    }

    /// Meijer-G argument `αβχ`.
    pub fn z(&self, h: f64) -> f64 {
        self.params.alpha * self.params.beta * self.chi(h)
    }

    fn ln_gammas(&self) -> f64 {
        ln_gamma(self.params.alpha) + ln_gamma(self.params.beta)
    }

    fn series(&self, family: Family, h: f64) -> Result<SeriesEval> {
        let p = &self.params;
        let log_scale = match family {
            Family::Cdf => p.omega.ln() - self.ln_gammas(),
            Family::Pdf => (p.omega * p.alpha * p.beta / (p.h_l * p.a0)).ln() - self.ln_gammas(),
        };
        let series =
            MeijerSeries::new(p.alpha, p.beta, p.c, p.v, family)?.with_log_scale(log_scale);
        let z = self.z(h);
        let Some(eps) = self.auto_terms else {
            return series.evaluate_rel(z, self.n_terms, self.tol);
        };
        let shifted_c = match family {
            Family::Cdf => p.c,
            Family::Pdf => p.c - 1.0,
        };
        let mut n = self.n_terms.max(3);
        loop {
            let eval = series.evaluate_rel(z, n, self.tol)?;
            // On the line the weights shrink at worst like r^{2k}, r = |v| / |c' - s|.
            let r = p.v.abs() / (shifted_c - eval.contour.abscissa);
            let ps = &eval.partial_sums;
            let last = ps[n - 1];
            let tail = (last - ps[n - 3]).abs() / (1.0 - r * r).max(1e-12);
            if tail <= eps * last.abs() || last == 0.0 {
                return Ok(eval);
            }
            if n >= MAX_TERMS {
                log::warn!(
                    "h = {h:e}: series tail {:.2e} relative after {n} terms",
                    tail / last.abs()
                );
                return Ok(eval);
            }
            n = (2 * n).min(MAX_TERMS);
        }
    }

    /// Partial sums of the CDF series, `F_N(h)` for `N = 1..=n_terms`.
    pub fn cdf_partial_sums(&self, h: f64) -> Result<Vec<f64>> {
        if h <= 0.0 {
            return Ok(vec![0.0; self.n_terms]);
        }
        Ok(self.series(Family::Cdf, h)?.partial_sums)
    }

    pub fn cdf(&self, h: f64) -> Result<f64> {
        if h.is_nan() {
            return Err(Error::Domain {
                func: "cdf",
                detail: "argument is NaN".into(),
            });
        }
        if h <= 0.0 {
            return Ok(0.0);
        }
        let eval = self.series(Family::Cdf, h)?;
        let value = eval.value();
        if self.auto_terms.is_none() {
            truncation_check("cdf", h, &eval.partial_sums);
        }
        if value < -1e-8 {
            log::warn!("cdf({h:e}) = {value:e} before clamping");
        }
        Ok(value.clamp(0.0, 1.0))
    }

    pub fn pdf(&self, h: f64) -> Result<f64> {
        if h.is_nan() {
            return Err(Error::Domain {
                func: "pdf",
                detail: "argument is NaN".into(),
            });
        }
        if h <= 0.0 {
            return Ok(0.0);
        }
        let eval = self.series(Family::Pdf, h)?;
        let value = eval.value();
        if self.auto_terms.is_none() {
            truncation_check("pdf", h, &eval.partial_sums);
        }
        if value < -1e-8 {
            log::warn!("pdf({h:e}) = {value:e} before clamping");
        }
        Ok(value.max(0.0))
    }

    /// The small-`h` asymptote of the CDF with its branch diagnostics.
    pub fn asymptote(&self) -> Result<AsymptoticCdf> {
        let p = &self.params;
        let m = p.alpha.min(p.beta);
        let big = p.alpha.max(p.beta);
        if (m - p.c).abs() < 1e-6 {
            return Err(Error::DegenerateAsymptote(format!(
                "min(alpha, beta) = {m} coincides with c = {}",
                p.c
            )));
        }
        let scale = p.alpha * p.beta / (p.a0 * p.h_l);
        if m < p.c {
            if big - m < 1e-6 {
                return Err(Error::DegenerateAsymptote(format!(
                    "alpha = {} and beta = {} coincide; the leading pole is double",
                    p.alpha, p.beta
                )));
            }
            let gap = p.c - m;
            let converges = p.v.abs() < gap;
            let ln_coefficient = if converges {
                p.omega.ln() + ln_gamma(big - m)
                    - 0.5 * (gap * gap - p.v * p.v).ln()
                    - ln_gamma(m + 1.0)
                    - ln_gamma(big)
            } else {
                f64::NAN
            };
            Ok(AsymptoticCdf {
                branch: AsymptoticBranch::TurbulenceLimited,
                coefficient: ln_coefficient.exp(),
                ln_coefficient,
                exponent: m,
                log_series_terms: self.log_series_terms,
                converges,
                scale,
                log_series: Vec::new(),
            })
        } else {
            let ln_coefficient = p.omega.ln() + ln_gamma(p.alpha - p.c) + ln_gamma(p.beta - p.c)
                - p.c.ln()
                - self.ln_gammas();
            // (2k+1)^{2k} (v/2)^{2k} / ((2k)!² (k!)²), in log space.
            let mut log_series = Vec::with_capacity(self.log_series_terms);
            let half_v = 0.5 * p.v.abs();
            for k in 0..self.log_series_terms {
                let kf = k as f64;
                let two_k = 2.0 * kf;
                let ln_b = if k == 0 {
                    0.0
                } else {
                    two_k * (two_k + 1.0).ln() + two_k * half_v.ln()
                        - 2.0 * ln_gamma(two_k + 1.0)
                        - 2.0 * ln_gamma(kf + 1.0)
                };
                log_series.push(ln_b);
            }
            Ok(AsymptoticCdf {
                branch: AsymptoticBranch::PointingLimited,
                coefficient: ln_coefficient.exp(),
                ln_coefficient,
                exponent: p.c,
                log_series_terms: self.log_series_terms,
                converges: true,
                scale,
                log_series,
            })
        }
    }

    /// Asymptote evaluated at `h`. Errors when the turbulence-limited branch
    /// applies but its defining series diverges (`|v| ≥ c − min(α, β)`).
    pub fn cdf_asymptotic(&self, h: f64) -> Result<(AsymptoticCdf, f64)> {
        let a = self.asymptote()?;
        if !a.converges {
            let p = &self.params;
            return Err(Error::NonConvergent(format!(
                "turbulence-limited branch needs v < c - min(alpha, beta); v = {}, c - min = {}",
                p.v,
                p.c - p.alpha.min(p.beta)
            )));
        }
        let value = a.value(h);
        Ok((a, value))
    }
}

fn truncation_check(what: &str, h: f64, partial: &[f64]) {
    let n = partial.len();
    if n < 3 {
        return;
    }
    let last = partial[n - 1];
    let gap = (last - partial[n - 3]).abs();
    if gap > 1e-6 * last.abs() && last.abs() > 0.0 {
        // A sweep trips this at every point; only the first few reach warn.
        let seen = TRUNCATION_WARNINGS.fetch_add(1, Ordering::Relaxed);
        let level = if seen < 3 {
            log::Level::Warn
        } else {
            log::Level::Debug
        };
        log::log!(
            level,
            "{what}({h:e}): N = {n} and N - 2 partial sums differ by {:.2e} relative",
            gap / last.abs()
        );
        if seen == 2 {
            log::warn!("further truncation warnings logged at debug level");
        }
    }
}

static TRUNCATION_WARNINGS: AtomicUsize = AtomicUsize::new(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AsymptoticBranch {
    /// `min(α, β) < c`: decay set by turbulence, exponent `min(α, β)`.
    TurbulenceLimited,
    /// `c < min(α, β)`: decay set by pointing errors, exponent `c`.
    PointingLimited,
}

/// Leading small-`h` behaviour `coefficient · [log series] · z^exponent`,
/// `z = scale · h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticCdf {
    pub branch: AsymptoticBranch,
    pub coefficient: f64,
    pub ln_coefficient: f64,
    pub exponent: f64,
    pub log_series_terms: usize,
    pub converges: bool,
    /// `αβ / (A0 h_l)`.
    pub scale: f64,
    /// Log-coefficients `ln b_k` of `Σ_k b_k ln^{2k} z` (pointing-limited only).
    pub log_series: Vec<f64>,
}

impl AsymptoticCdf {
    /// `ln` of the bracketed log-power sum at `z`, and the ratio of its last
    /// two terms.
    fn log_bracket(&self, z: f64) -> (f64, f64) {
        if self.log_series.is_empty() {
            return (0.0, 0.0);
        }
        let ln_abs = z.ln().abs().ln();
        let terms: Vec<f64> = self
            .log_series
            .iter()
            .enumerate()
            .map(|(k, b)| {
                if k == 0 {
                    0.0
                } else {
                    b + 2.0 * k as f64 * ln_abs
                }
            })
            .collect();
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
        let ratio = match terms.len() {
            0 | 1 => 0.0,
            n => (terms[n - 1] - terms[n - 2]).exp(),
        };
        (top + sum.ln(), ratio)
    }

    pub fn value(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let z = self.scale * h;
        let (ln_bracket, ratio) = self.log_bracket(z);
        if ratio > 0.1 {
            log::warn!(
                "asymptote at h = {h:e}: log-series term ratio at cutoff is {ratio:.3} with {} terms",
                self.log_series_terms
            );
        }
        (self.ln_coefficient + ln_bracket + self.exponent * z.ln()).exp()
    }

    /// Ratio of the last two log-series terms at `h` (0 for the
    /// turbulence-limited branch).
    pub fn cutoff_ratio(&self, h: f64) -> f64 {
        self.log_bracket(self.scale * h).1
    }
}

/// Density of `Y = -ln(h_g / A0)`: `ω e^{-cy} I0(vy)`.
fn pdf_log_pointing(y: f64, p: &ChannelParams) -> f64 {
    p.omega * (-(p.c - p.v.abs()) * y).exp() * bessel_i0_scaled(p.v * y)
}

const ORACLE_OPTS: QuadOptions = QuadOptions {
    abs_tol: 1e-300,
    rel_tol: 1e-9,
    max_intervals: 4000,
};

/// Brute-force `F_h(h)`: with `x = χ e^y`,
/// `F_h(h) = F_{h_s}(χ) + ∫_0^∞ P(Y ≥ y) f_{h_s}(χ e^y) χ e^y dy`.
pub fn oracle_cdf(params: &ChannelParams, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Ok(0.0);
    }
    let chi = h / (params.a0 * params.h_l);
    let head = cdf_turbulence(chi, params)?;
    let mut failure = None;
    let tail = integrate_to_infinity(
        |y| {
            let x = chi * y.exp();
            let f = pdf_turbulence(x, params);
            if f == 0.0 || !x.is_finite() {
                return 0.0;
            }
            // P(Y ≥ y) = P(h_g ≤ A0 e^{-y})
            match cdf_pointing(params.a0 * (-y).exp(), params) {
                Ok(surv) => surv * f * x,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        ORACLE_OPTS,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((head + tail.value).clamp(0.0, 1.0))
}

/// Brute-force `f_h(h) = (1/(h_l A0)) ∫_0^∞ f_Y(y) e^y f_{h_s}(χ e^y) dy`.
pub fn oracle_pdf(params: &ChannelParams, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Ok(0.0);
    }
    let chi = h / (params.a0 * params.h_l);
    let r = integrate_to_infinity(
        |y| {
            let x = chi * y.exp();
            if !x.is_finite() {
                return 0.0;
            }
            pdf_log_pointing(y, params) * y.exp() * pdf_turbulence(x, params)
        },
        0.0,
        ORACLE_OPTS,
    )?;
    Ok(r.value / (params.h_l * params.a0))
}
