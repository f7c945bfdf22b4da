//! Mellin-Barnes quadrature for the two Meijer-G families that make up the
//! end-to-end channel statistics.
//!
//! Writing `s = a + iy`, both families are integrals of the form
//! `(1/2π) ∫ g(a + iy) dy` along a vertical line. The Gamma-ratio products are
//! cancelled analytically before integrating:
//!
//! * CDF family, `G^{2k+3,1}_{2k+2,2k+4}(z | 1, {c+1}; α, β, {c}, 0)`:
//!   `g(s) = Γ(α-s) Γ(β-s) z^s / (s (c-s)^{2k+1})`, valid for `0 < a < min(α, β, c)`.
//! * PDF family, `G^{2k+3,0}_{2k+1,2k+3}(z | {c}; α-1, β-1, {c-1})`:
//!   `g(s) = Γ(α-1-s) Γ(β-1-s) z^s / (c-1-s)^{2k+1}`, valid for `a < min(α, β, c) - 1`.
//!
//! The two Gamma factors decay like `e^{-π|y|}`, so a trapezoid rule on a
//! truncated line converges geometrically in both the step size and the
//! truncation height. Gamma products are formed in log space and
//! exponentiated once per node.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::gamma::log_gamma_unchecked;
use crate::error::{Error, Result};

/// Default trapezoid node count on the vertical line.
pub const DEFAULT_NODES: usize = 2001;
/// Default truncation of `Im(s)`.
pub const DEFAULT_HALF_HEIGHT: f64 = 60.0;
/// Refinement stops once the line reaches this height.
pub const MAX_HALF_HEIGHT: f64 = 480.0;
/// Refinement stops once the node count would exceed this.
pub const MAX_NODES: usize = 262_145;

/// Distance kept between the PDF-family contour and its nearest pole.
const PDF_POLE_CLEARANCE: f64 = 0.5;

/// Which Meijer-G family an integrand belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Pdf,
    Cdf,
}

/// Parameters of one series term `k` of either family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MellinIntegrand {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub k: usize,
    pub family: Family,
}

/// A truncated vertical integration line `Re(s) = abscissa`, `|Im(s)| <= half_height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourSpec {
    pub abscissa: f64,
    pub half_height: f64,
    pub nodes: usize,
}

/// Result of one contour quadrature.
#[derive(Clone, Copy, Debug)]
pub struct MellinEval {
    pub value: f64,
    /// Imaginary part left in the quadrature sum. Zero in exact arithmetic
    /// because the integrand is conjugate-symmetric about the real axis.
    pub imag_residual: f64,
    /// Discretisation estimate plus truncated-tail estimate.
    pub error_estimate: f64,
    /// The contour the estimate was finally obtained on.
    pub contour: ContourSpec,
}

/// Partial sums `Σ_{k<N} binom(2k,k) (v/2)^{2k} G_k(z)` for `N = 1..=n_terms`.
#[derive(Clone, Debug)]
pub struct SeriesEval {
    pub partial_sums: Vec<f64>,
    pub imag_residual: f64,
    pub error_estimate: f64,
    pub contour: ContourSpec,
}

impl SeriesEval {
    pub fn value(&self) -> f64 {
        *self.partial_sums.last().expect("at least one series term")
    }
}

fn check_shape(alpha: f64, beta: f64, c: f64) -> Result<()> {
    for (name, x) in [("alpha", alpha), ("beta", beta), ("c", c)] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Contour(format!(
                "{name} must be finite and positive, got {x}"
            )));
        }
    }
    Ok(())
}

fn pole_bound(alpha: f64, beta: f64, c: f64, family: Family) -> f64 {
    let m = alpha.min(beta).min(c);
    match family {
        Family::Cdf => m,
        Family::Pdf => m - 1.0,
    }
}

fn default_contour(alpha: f64, beta: f64, c: f64, family: Family) -> ContourSpec {
    let bound = pole_bound(alpha, beta, c, family);
    let abscissa = match family {
        Family::Cdf => 0.5 * bound,
        Family::Pdf => bound - PDF_POLE_CLEARANCE,
    };
    ContourSpec {
        abscissa,
        half_height: DEFAULT_HALF_HEIGHT,
        nodes: DEFAULT_NODES,
    }
}

fn check_contour(
    contour: &ContourSpec,
    alpha: f64,
    beta: f64,
    c: f64,
    family: Family,
) -> Result<()> {
    let bound = pole_bound(alpha, beta, c, family);
    let a = contour.abscissa;
    let ok = match family {
        Family::Cdf => a > 0.0 && a < bound,
        Family::Pdf => a < bound,
    };
    if !ok || !a.is_finite() {
        let range = match family {
            Family::Cdf => format!("(0, {bound})"),
            Family::Pdf => format!("(-inf, {bound})"),
        };
        return Err(Error::Contour(format!(
            "abscissa {a} does not separate the pole families; valid range is {range}"
        )));
    }
    if !(contour.half_height > 0.0) || contour.nodes < 3 || contour.nodes.is_multiple_of(2) {
        return Err(Error::Contour(format!(
            "need half_height > 0 and an odd node count >= 3, got {} / {}",
            contour.half_height, contour.nodes
        )));
    }
    Ok(())
}

impl MellinIntegrand {
    pub fn new(alpha: f64, beta: f64, c: f64, k: usize, family: Family) -> Result<Self> {
        check_shape(alpha, beta, c)?;
        Ok(Self {
            alpha,
            beta,
            c,
            k,
            family,
        })
    }

    /// Supremum of admissible abscissae (the leftmost right-hand pole).
    pub fn pole_bound(&self) -> f64 {
        pole_bound(self.alpha, self.beta, self.c, self.family)
    }

    pub fn default_contour(&self) -> ContourSpec {
        default_contour(self.alpha, self.beta, self.c, self.family)
    }

    /// Evaluate the Meijer-G term at `z` with the default contour.
    pub fn evaluate(&self, z: f64, tol: f64) -> Result<MellinEval> {
        self.evaluate_on(z, self.default_contour(), tol)
    }

    pub fn evaluate_on(&self, z: f64, contour: ContourSpec, tol: f64) -> Result<MellinEval> {
        let kernel = Kernel::new(self.alpha, self.beta, self.c, self.family, z)?;
        check_contour(&contour, self.alpha, self.beta, self.c, self.family)?;
        let order = (2 * self.k + 1) as f64;
        let shifted_c = kernel.shifted_c;
        let run = adaptive(contour, tol, 0.0, 1, |s, out| {
            out[0] = (kernel.log_base(s) - order * (shifted_c - s).ln()).exp();
        })?;
        Ok(MellinEval {
            value: run.sums[0].re,
            imag_residual: run.sums[0].im,
            error_estimate: run.error_estimate,
            contour: run.contour,
        })
    }
}

/// The weighted series `Σ_k binom(2k,k) (v/2)^{2k} G_k(z)` of one family,
/// integrated term by term on a single shared contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeijerSeries {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub v: f64,
    pub family: Family,
    /// Added to the log-integrand before exponentiation, so a large or tiny
    /// prefactor (e.g. `1/(Γ(α)Γ(β))`) never meets the Gamma products in
    /// linear space.
    pub log_scale: f64,
}

impl MeijerSeries {
    pub fn new(alpha: f64, beta: f64, c: f64, v: f64, family: Family) -> Result<Self> {
        check_shape(alpha, beta, c)?;
        if !(v.is_finite() && v.abs() < c) {
            return Err(Error::Contour(format!(
                "need |v| < c, got v = {v}, c = {c}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            c,
            v,
            family,
            log_scale: 0.0,
        })
    }

    pub fn with_log_scale(mut self, log_scale: f64) -> Self {
        self.log_scale = log_scale;
        self
    }

    /// Largest abscissa on which the weighted terms shrink geometrically in
    /// `k`. Past `c - |v|` (the branch point of the summed series) the terms
    /// grow on the line and only cancel after summation.
    pub fn stable_bound(&self) -> f64 {
        let m = self.alpha.min(self.beta).min(self.c - self.v.abs());
        match self.family {
            Family::Cdf => m,
            Family::Pdf => m - 1.0,
        }
    }

    pub fn default_contour(&self) -> ContourSpec {
        let bound = self.stable_bound();
        let abscissa = match self.family {
            Family::Cdf => 0.5 * bound,
            Family::Pdf => bound - PDF_POLE_CLEARANCE,
        };
        ContourSpec {
            abscissa,
            half_height: DEFAULT_HALF_HEIGHT,
            nodes: DEFAULT_NODES,
        }
    }

    /// Line adapted to the argument. For small `z` the value is of order
    /// `z^bound` while the integrand is of order `z^a`; moving the line
    /// towards the bound keeps that cancellation small.
    pub fn contour_for(&self, z: f64) -> ContourSpec {
        let mut contour = self.default_contour();
        if z < 1.0 {
            let bound = self.stable_bound();
            let gap = (2.0 / z.ln().abs()).max(0.15);
            contour.abscissa = match self.family {
                Family::Cdf => bound - gap.min(0.5 * bound),
                Family::Pdf => bound - gap.min(PDF_POLE_CLEARANCE),
            };
        }
        contour
    }

    pub fn evaluate(&self, z: f64, n_terms: usize, tol: f64) -> Result<SeriesEval> {
        self.evaluate_on(z, n_terms, self.default_contour(), tol)
    }

    /// Evaluate on [`contour_for`](Self::contour_for) to a relative tolerance.
    pub fn evaluate_rel(&self, z: f64, n_terms: usize, rel_tol: f64) -> Result<SeriesEval> {
        self.run(z, n_terms, self.contour_for(z), 0.0, rel_tol)
    }

    pub fn evaluate_on(
        &self,
        z: f64,
        n_terms: usize,
        contour: ContourSpec,
        tol: f64,
    ) -> Result<SeriesEval> {
        self.run(z, n_terms, contour, tol, 0.0)
    }

    fn run(
        &self,
        z: f64,
        n_terms: usize,
        contour: ContourSpec,
        tol: f64,
        rel_tol: f64,
    ) -> Result<SeriesEval> {
        if n_terms == 0 {
            return Err(Error::Contour("series needs at least one term".into()));
        }
        let mut kernel = Kernel::new(self.alpha, self.beta, self.c, self.family, z)?;
        kernel.log_scale = self.log_scale;
        check_contour(&contour, self.alpha, self.beta, self.c, self.family)?;
        let half_v = 0.5 * self.v;
        let shifted_c = kernel.shifted_c;
        let run = adaptive(contour, tol, rel_tol, n_terms, |s, out| {
            let base = kernel.log_base(s).exp();
            let inv = 1.0 / (shifted_c - s);
            let rho2 = (half_v * inv) * (half_v * inv);
            // binom(2k,k) ρ^{2k} / (c'-s) by recurrence, no large powers formed.
            let mut term = inv;
            out[0] = base * term;
            for (k, slot) in out.iter_mut().enumerate().skip(1) {
                let kf = k as f64;
                term *= rho2 * (2.0 * (2.0 * kf - 1.0) / kf);
                *slot = base * term;
            }
        })?;
        let mut partial_sums = Vec::with_capacity(n_terms);
        let mut acc = 0.0;
        for s in &run.sums {
            acc += s.re;
            partial_sums.push(acc);
        }
        let imag_residual = run.sums.iter().map(|s| s.im).sum();
        Ok(SeriesEval {
            partial_sums,
            imag_residual,
            error_estimate: run.error_estimate,
            contour: run.contour,
        })
    }
}

/// Shared part of both families: `ln[Γ(α'-s) Γ(β'-s) z^s]`, minus `ln s`
/// for the CDF family.
struct Kernel {
    alpha_shifted: f64,
    beta_shifted: f64,
    shifted_c: f64,
    ln_z: f64,
    family: Family,
    log_scale: f64,
}

impl Kernel {
    fn new(alpha: f64, beta: f64, c: f64, family: Family, z: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain {
                func: "meijer_g",
                detail: format!("argument must be positive and finite, got {z}"),
            });
        }
        let shift = match family {
            Family::Cdf => 0.0,
            Family::Pdf => 1.0,
        };
        Ok(Self {
            alpha_shifted: alpha - shift,
            beta_shifted: beta - shift,
            shifted_c: c - shift,
            ln_z: z.ln(),
            family,
            log_scale: 0.0,
        })
    }

    fn log_base(&self, s: Complex64) -> Complex64 {
        let mut l = log_gamma_unchecked(self.alpha_shifted - s)
            + log_gamma_unchecked(self.beta_shifted - s)
            + s * self.ln_z
            + self.log_scale;
        if self.family == Family::Cdf {
            l -= s.ln();
        }
        l
    }
}

struct Run {
    sums: Vec<Complex64>,
    error_estimate: f64,
    contour: ContourSpec,
}

/// Trapezoid rule on the line, refined until both the discretisation
/// estimate `|T_h - T_2h|` and the tail estimate fall below `tol` (or below
/// the round-off floor of the sum, whichever is larger).
fn adaptive<F>(start: ContourSpec, tol: f64, rel_tol: f64, n_out: usize, f: F) -> Result<Run>
where
    F: Fn(Complex64, &mut [Complex64]),
{
    if !(tol >= 0.0 && rel_tol >= 0.0) || !(tol > 0.0 || rel_tol > 0.0) {
        return Err(Error::Contour(format!(
            "tolerance must be positive, got abs {tol} / rel {rel_tol}"
        )));
    }
    let mut contour = start;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_out];
    loop {
        let n = contour.nodes;
        let step = 2.0 * contour.half_height / (n - 1) as f64;
        let mut fine = vec![Complex64::new(0.0, 0.0); n_out];
        let mut coarse = vec![Complex64::new(0.0, 0.0); n_out];
        let mut abs_sum = 0.0;
        let mut tail = 0.0;
        for j in 0..n {
            let y = -contour.half_height + j as f64 * step;
            let s = Complex64::new(contour.abscissa, y);
            f(s, &mut buf);
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let mut node_total = Complex64::new(0.0, 0.0);
            for (k, g) in buf.iter().enumerate() {
                fine[k] += w * g;
                if j % 2 == 0 {
                    coarse[k] += w * g;
                }
                node_total += g;
            }
            abs_sum += w * node_total.norm();
            if j == 0 || j == n - 1 {
                // ∫_Y^∞ |g| ≈ |g(Y)| / π for e^{-π y} decay.
                tail += node_total.norm() / PI;
            }
        }
        let scale = step / (2.0 * PI);
        let mut total_fine = Complex64::new(0.0, 0.0);
        let mut total_coarse = Complex64::new(0.0, 0.0);
        for k in 0..n_out {
            fine[k] *= scale;
            coarse[k] *= 2.0 * scale;
            total_fine += fine[k];
            total_coarse += coarse[k];
        }
        let disc = (total_fine.re - total_coarse.re).abs();
        let tail = tail / (2.0 * PI);
        let floor = 64.0 * f64::EPSILON * abs_sum * scale;
        let allowed = tol.max(rel_tol * total_fine.re.abs()).max(floor);
        if !(total_fine.re.is_finite()) {
            return Err(Error::ToleranceNotMet {
                tol,
                estimate: f64::INFINITY,
            });
        }
        if disc <= allowed && tail <= allowed {
            return Ok(Run {
                sums: fine,
                error_estimate: disc + tail,
                contour,
            });
        }
        let mut next = contour;
        if tail > allowed {
            next.half_height *= 2.0;
            next.nodes = 2 * (next.nodes - 1) + 1;
        }
        if disc > allowed {
            next.nodes = 2 * (next.nodes - 1) + 1;
        }
        if next.half_height > MAX_HALF_HEIGHT || next.nodes > MAX_NODES {
            return Err(Error::ToleranceNotMet {
                tol,
                estimate: disc + tail,
            });
        }
        contour = next;
    }
}

/// `G^{2k+3,1}_{2k+2,2k+4}(z | 1, {c+1}_{2k+1}; α, β, {c}_{2k+1}, 0)`.
pub fn meijer_g_cdf_family(
    k: usize,
    alpha: f64,
    beta: f64,
    c: f64,
    z: f64,
    tol: f64,
) -> Result<f64> {
    Ok(MellinIntegrand::new(alpha, beta, c, k, Family::Cdf)?
        .evaluate(z, tol)?
        .value)
}

/// `G^{2k+3,0}_{2k+1,2k+3}(z | {c}_{2k+1}; α-1, β-1, {c-1}_{2k+1})`.
pub fn meijer_g_pdf_family(
    k: usize,
    alpha: f64,
    beta: f64,
    c: f64,
    z: f64,
    tol: f64,
) -> Result<f64> {
    Ok(MellinIntegrand::new(alpha, beta, c, k, Family::Pdf)?
        .evaluate(z, tol)?
        .value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::gamma::{gamma, log_gamma};

    /// Direct trapezoid of the *unreduced* Gamma-ratio integrand of the CDF
    /// family, with every Gamma factor kept:
    /// Γ(α-s)Γ(β-s)Γ(c-s)^{2k+1}Γ(s) z^s / (Γ(1+s) Γ(c+1-s)^{2k+1}).
    fn unreduced_cdf(k: usize, alpha: f64, beta: f64, c: f64, z: f64) -> f64 {
        let a = 0.5 * alpha.min(beta).min(c);
        let n = 40_001;
        let height = 80.0;
        let step = 2.0 * height / (n - 1) as f64;
        let order = (2 * k + 1) as f64;
        let mut acc = 0.0;
        for j in 0..n {
            let s = Complex64::new(a, -height + j as f64 * step);
            let one = Complex64::new(1.0, 0.0);
            let l = log_gamma(alpha - s).unwrap()
                + log_gamma(beta - s).unwrap()
                + order * log_gamma(c - s).unwrap()
                + log_gamma(s).unwrap()
                + s * z.ln()
                - log_gamma(one + s).unwrap()
                - order * log_gamma(c + 1.0 - s).unwrap();
            acc += l.exp().re;
        }
        acc * step / (2.0 * PI)
    }

    #[test]
    fn small_argument_leading_term() {
        let (alpha, beta, c, z) = (2.0, 4.0, 6.0, 1e-6);
        let got = meijer_g_cdf_family(0, alpha, beta, c, z, 1e-24).unwrap();
        let lead = gamma(beta - alpha) / (alpha * (c - alpha)) * z.powf(alpha);
        assert!(((got - lead) / lead).abs() < 0.01, "{got} vs {lead}");
    }

    #[test]
    fn real_and_positive_on_unit_interval() {
        for k in 0..4 {
            for &z in &[1e-4, 0.01, 0.2, 0.5, 0.9, 1.0] {
                let ev = MellinIntegrand::new(3.3, 1.7, 2.4, k, Family::Cdf)
                    .unwrap()
                    .evaluate(z, 1e-14)
                    .unwrap();
                assert!(ev.value > 0.0, "k={k} z={z}: {}", ev.value);
                assert!(ev.imag_residual.abs() <= 1e-10 * ev.value.abs());
            }
        }
    }

    #[test]
    fn reduced_matches_unreduced_integrand() {
        let (alpha, beta, c, z) = (4.2, 1.4, 2.8, 0.3);
        let reduced = meijer_g_cdf_family(1, alpha, beta, c, z, 1e-14).unwrap();
        let full = unreduced_cdf(1, alpha, beta, c, z);
        assert!((reduced - full).abs() < 1e-8, "{reduced} vs {full}");
        let reduced0 = meijer_g_cdf_family(0, 2.0, 4.0, 6.0, 0.7, 1e-14).unwrap();
        let full0 = unreduced_cdf(0, 2.0, 4.0, 6.0, 0.7);
        assert!((reduced0 - full0).abs() < 1e-8);
    }

    #[test]
    fn pdf_family_is_derivative_of_cdf_family() {
        // d/dz of the CDF-family integrand z^s / s shifts s by one and
        // leaves exactly the PDF-family integrand.
        for (k, alpha, beta, c, z) in [
            (0, 2.0, 4.0, 6.0, 0.5),
            (2, 4.2, 2.9, 3.6, 1.7),
            (1, 5.5, 3.1, 8.0, 0.05),
        ] {
            let dz = 1e-4 * z;
            let up = meijer_g_cdf_family(k, alpha, beta, c, z + dz, 1e-15).unwrap();
            let dn = meijer_g_cdf_family(k, alpha, beta, c, z - dz, 1e-15).unwrap();
            let fd = (up - dn) / (2.0 * dz);
            let pdf = meijer_g_pdf_family(k, alpha, beta, c, z, 1e-15).unwrap();
            assert!(
                ((fd - pdf) / pdf).abs() < 1e-6,
                "k={k}: fd {fd} vs pdf {pdf}"
            );
        }
    }

    #[test]
    fn refinement_is_self_consistent() {
        let tol = 1e-12;
        for family in [Family::Cdf, Family::Pdf] {
            let g = MellinIntegrand::new(3.0, 2.2, 5.0, 2, family).unwrap();
            let base = g.evaluate(0.8, tol).unwrap();
            let mut wide = base.contour;
            wide.nodes = 2 * (wide.nodes - 1) + 1;
            wide.half_height *= 2.0;
            wide.nodes = 2 * (wide.nodes - 1) + 1;
            let refined = g.evaluate_on(0.8, wide, tol).unwrap();
            assert!((base.value - refined.value).abs() < tol);
        }
    }

    #[test]
    fn series_partial_sums_match_individual_terms() {
        let (alpha, beta, c, v) = (3.9, 2.1, 4.5, 1.3);
        let z = 0.6;
        let series = MeijerSeries::new(alpha, beta, c, v, Family::Cdf).unwrap();
        let ev = series.evaluate(z, 5, 1e-14).unwrap();
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..5 {
            if k > 0 {
                binom *= (2.0 * k as f64) * (2.0 * k as f64 - 1.0) / (k as f64 * k as f64);
            }
            let w = binom * (v / 2.0).powi(2 * k as i32);
            acc += w * meijer_g_cdf_family(k, alpha, beta, c, z, 1e-15).unwrap();
            assert!((ev.partial_sums[k] - acc).abs() < 1e-12, "N={}", k + 1);
        }
    }

    #[test]
    fn invalid_contours_are_rejected() {
        let g = MellinIntegrand::new(2.0, 3.0, 1.5, 0, Family::Cdf).unwrap();
        let mut bad = g.default_contour();
        bad.abscissa = 1.5;
        assert!(matches!(
            g.evaluate_on(0.4, bad, 1e-10),
            Err(Error::Contour(_))
        ));
        bad.abscissa = -0.1;
        assert!(matches!(
            g.evaluate_on(0.4, bad, 1e-10),
            Err(Error::Contour(_))
        ));
        let p = MellinIntegrand::new(2.0, 3.0, 1.5, 0, Family::Pdf).unwrap();
        let mut bad = p.default_contour();
        bad.abscissa = 0.6;
        assert!(matches!(
            p.evaluate_on(0.4, bad, 1e-10),
            Err(Error::Contour(_))
        ));
        assert!(MellinIntegrand::new(0.0, 3.0, 1.5, 0, Family::Cdf).is_err());
        assert!(meijer_g_cdf_family(0, 2.0, 3.0, 1.5, -1.0, 1e-10).is_err());
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        // A pole almost on the line needs more nodes than the refinement cap.
        let g = MellinIntegrand::new(2.0, 3.0, 1e-4, 0, Family::Cdf).unwrap();
        let r = g.evaluate(0.5, 1e-15);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })), "{r:?}");
    }
}
