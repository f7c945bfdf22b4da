//! Physical scenario → distribution parameters of the three channel factors.
//!
//! For one Tx → ORIS → Rx path the channel gain is `h = h_l · h_s · h_g`:
//! a deterministic loss `h_l`, unit-mean Gamma-Gamma turbulence `h_s`, and
//! pointing-error attenuation `h_g ∈ (0, A0]` caused by building sway at the
//! transmitter, the ORIS and the receiver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_to_infinity, QuadOptions};
use crate::specfun::{bessel_i0_scaled, erf, ln_bessel_k_scaled, ln_gamma};

/// Refraction-structure range outside which a warning is logged.
pub const CN2_TYPICAL: (f64, f64) = (1e-17, 1e-13);

/// Beam width at the receiver plane, either given directly or derived from
/// the laser waist by Gaussian-beam spreading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamWidth {
    /// `w(d_z)` in meters.
    Width(f64),
    /// Beam waist `w0` in meters; see [`gaussian_beam_width`].
    Waist(f64),
}

/// Gaussian-beam width after `distance` meters: `w0 √(1 + (λd / (π w0²))²)`.
pub fn gaussian_beam_width(w0: f64, wavelength: f64, distance: f64) -> f64 {
    let zr = wavelength * distance / (PI * w0 * w0);
    w0 * (1.0 + zr * zr).sqrt()
}

/// One Tx → ORIS → Rx path. All quantities in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Tx → ORIS distance (m).
    pub d_to: f64,
    /// ORIS → Rx distance (m).
    pub d_or: f64,
    /// Angle between the reflected beam and the PD plane (rad).
    pub phi_p: f64,
    /// Angle between the incident beam and the ORIS plane (rad).
    pub phi_r: f64,
    /// Lens / PD length (m).
    pub l_d: f64,
    pub beam: BeamWidth,
    /// Building-sway standard deviations (m) at the Tx, the ORIS and the Rx.
    pub sigma_s: f64,
    pub sigma_r: f64,
    pub sigma_p: f64,
    /// Optical wavelength (m).
    pub wavelength: f64,
    /// Refraction-structure parameter `C_n²` (m^{-2/3}).
    pub cn2: f64,
    /// Attenuation coefficient (1/m).
    pub sigma_atm: f64,
    /// Reflection efficiency of the ORIS, in (0, 1].
    pub rho: f64,
    /// Replaces the default `A0 = erf(ν1) erf(ν2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    /// Replaces the Rytov variance computed from `cn2`; lets a scenario pin
    /// `σ_R` directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rytov_sq: Option<f64>,
}

/// A single failed invariant, named by its config key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
    /// The invariant is a degenerate-geometry condition rather than a plain
    /// range check.
    pub degenerate: bool,
}

impl Violation {
    pub(crate) fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
            degenerate: false,
        }
    }

    pub fn into_error(self) -> Error {
        if self.degenerate {
            Error::DegenerateGeometry(format!("{}: {}", self.field, self.message))
        } else {
            Error::config(self.field, self.message)
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl GeometryConfig {
    /// Rx1 path of the reference parameter set: 1000 m end to end, beam
    /// width 0.45 m, sway 0.375·l_d at every node.
    pub fn table1_rx1() -> Self {
        Self::reference(1000.0, PI / 6.0, 0.45)
    }

    /// Rx2 path of the reference parameter set: 800 m, beam width 0.35 m.
    pub fn table1_rx2() -> Self {
        Self::reference(800.0, PI / 4.0, 0.35)
    }

    fn reference(d_z: f64, phi_r: f64, width: f64) -> Self {
        let l_d = 0.05;
        let sway = 0.375 * l_d;
        Self {
            d_to: 0.5 * d_z,
            d_or: 0.5 * d_z,
            phi_p: PI / 3.0,
            phi_r,
            l_d,
            beam: BeamWidth::Width(width),
            sigma_s: sway,
            sigma_r: sway,
            sigma_p: sway,
            wavelength: 1550e-9,
            cn2: 5e-14,
            sigma_atm: 0.43e-3,
            rho: 0.8,
            a0: None,
            rytov_sq: None,
        }
    }

    /// End-to-end distance `d_z = d_to + d_or`.
    pub fn d_z(&self) -> f64 {
        self.d_to + self.d_or
    }

    /// Rescales both legs so that `d_z` becomes `d_z`, keeping their ratio.
    pub fn with_d_z(mut self, d_z: f64) -> Self {
        let total = self.d_z();
        self.d_to *= d_z / total;
        self.d_or *= d_z / total;
        self
    }

    /// Sets the same sway `σ` at the Tx, the ORIS and the Rx.
    pub fn with_sway(mut self, sigma: f64) -> Self {
        self.sigma_s = sigma;
        self.sigma_r = sigma;
        self.sigma_p = sigma;
        self
    }

    /// Beam width at the receiver plane.
    pub fn beam_width(&self) -> f64 {
        match self.beam {
            BeamWidth::Width(w) => w,
            BeamWidth::Waist(w0) => gaussian_beam_width(w0, self.wavelength, self.d_z()),
        }
    }

    /// Every failed invariant; empty when the config is usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                out.push(Violation::new(
                    name,
                    format!("must be positive and finite, got {x}"),
                ));
            }
        };
        positive("d_to", self.d_to);
        positive("d_or", self.d_or);
        positive("l_d", self.l_d);
        positive("wavelength", self.wavelength);
        positive("cn2", self.cn2);
        match self.beam {
            BeamWidth::Width(w) => positive("beam.width", w),
            BeamWidth::Waist(w) => positive("beam.waist", w),
        }
        for (name, x) in [
            ("sigma_s", self.sigma_s),
            ("sigma_r", self.sigma_r),
            ("sigma_p", self.sigma_p),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                out.push(Violation::new(
                    name,
                    format!("must be nonnegative and finite, got {x}"),
                ));
            }
        }
        if !(self.sigma_s.hypot(self.sigma_p) > 0.0) {
            out.push(Violation {
                field: "sigma_s".into(),
                message: "sigma_s and sigma_p cannot both be zero (no misalignment)".into(),
                degenerate: true,
            });
        }
        if !(self.sigma_atm >= 0.0 && self.sigma_atm.is_finite()) {
            out.push(Violation::new(
                "sigma_atm",
                format!("must be nonnegative and finite, got {}", self.sigma_atm),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            out.push(Violation::new(
                "rho",
                format!("must lie in (0, 1], got {}", self.rho),
            ));
        }
        for (name, phi) in [("phi_p", self.phi_p), ("phi_r", self.phi_r)] {
            if !(phi > 0.0 && phi < PI) {
                out.push(Violation {
                    field: name.into(),
                    message: format!("must lie strictly inside (0, π), got {phi}"),
                    degenerate: name == "phi_p",
                });
            }
        }
        if self.phi_p.sin().abs() < 1e-12 && self.phi_p > 0.0 && self.phi_p < PI {
            out.push(Violation {
                field: "phi_p".into(),
                message: "sin(phi_p) vanishes".into(),
                degenerate: true,
            });
        }
        if let Some(a0) = self.a0 {
            if !(a0 > 0.0 && a0 <= 1.0) {
                out.push(Violation::new(
                    "a0",
                    format!("must lie in (0, 1], got {a0}"),
                ));
            }
        }
        if let Some(r) = self.rytov_sq {
            if !(r > 0.0 && r.is_finite()) {
                out.push(Violation::new(
                    "rytov_sq",
                    format!("must be positive and finite, got {r}"),
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => {
                if self.rytov_sq.is_none() && !(CN2_TYPICAL.0..=CN2_TYPICAL.1).contains(&self.cn2) {
                    log::warn!(
                        "cn2 = {:e} lies outside the typical range [{:e}, {:e}]",
                        self.cn2,
                        CN2_TYPICAL.0,
                        CN2_TYPICAL.1
                    );
                }
                Ok(())
            }
            Some(v) => Err(v.into_error()),
        }
    }
}

/// `h_l = ρ 10^{-σ d_z / 10}`.
pub fn path_loss(g: &GeometryConfig) -> Result<f64> {
    g.validate()?;
    Ok(g.rho * 10f64.powf(-g.sigma_atm * g.d_z() / 10.0))
}

/// Pointing-error parameters of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointingParams {
    pub omega: f64,
    pub q: f64,
    pub c: f64,
    pub v: f64,
    pub a0: f64,
    pub sigma_u1_sq: f64,
    pub sigma_u2_sq: f64,
    pub t1: f64,
    pub t2: f64,
    pub t: f64,
    pub nu1: f64,
    pub nu2: f64,
}

/// `√π erf(ν) / (2ν e^{-ν²})`, with its limit 1 at ν → 0.
fn erf_ratio(nu: f64) -> f64 {
    if nu < 1e-4 {
        // erf(ν)√π/(2ν) = 1 - ν²/3 + …, times e^{ν²} = 1 + 2ν²/3 + …
        return 1.0 + 2.0 * nu * nu / 3.0;
    }
    PI.sqrt() * erf(nu) / (2.0 * nu) * (nu * nu).exp()
}

pub fn pointing_params(g: &GeometryConfig) -> Result<PointingParams> {
    g.validate()?;
    let sin_p = g.phi_p.sin();
    let sin2 = sin_p * sin_p;
    let cos_r = g.phi_r.cos();
    let base = g.sigma_s * g.sigma_s + g.sigma_p * g.sigma_p;
    let sigma_u1_sq = (base + 4.0 * cos_r * cos_r * g.sigma_r * g.sigma_r) / sin2;
    let sigma_u2_sq = base / sin2;
    let q = (sigma_u2_sq / sigma_u1_sq).sqrt();
    let big_omega = sigma_u1_sq + sigma_u2_sq;
    let w = g.beam_width();
    let nu1 = g.l_d / (2.0 * w) * (PI / 2.0).sqrt();
    let nu2 = nu1 * sin_p.abs();
    let t1 = erf_ratio(nu1);
    let t2 = erf_ratio(nu2) / sin2;
    let t = (t1 * t2).sqrt();
    let omega = (1.0 + q * q) * t * w * w / (4.0 * q * big_omega);
    let (c, v) = shape_cv(omega, q);
    let a0 = g.a0.unwrap_or_else(|| erf(nu1) * erf(nu2));
    Ok(PointingParams {
        omega,
        q,
        c,
        v,
        a0,
        sigma_u1_sq,
        sigma_u2_sq,
        t1,
        t2,
        t,
        nu1,
        nu2,
    })
}

fn shape_cv(omega: f64, q: f64) -> (f64, f64) {
    let c = (1.0 + q * q) * omega / (2.0 * q);
    let v = (1.0 - q * q) * omega / (2.0 * q);
    (c, v)
}

/// Gamma-Gamma shapes and the Rytov variance of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TurbulenceParams {
    pub alpha: f64,
    pub beta: f64,
    pub rytov_sq: f64,
}

/// `σ_R² = 1.23 C_n² k^{7/6} d_z^{11/6}` with `k = 2π/λ`.
pub fn rytov_variance(cn2: f64, wavelength: f64, d_z: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    1.23 * cn2 * k.powf(7.0 / 6.0) * d_z.powf(11.0 / 6.0)
}

/// Gamma-Gamma shapes `(α, β)` for a given Rytov variance.
pub fn gamma_gamma_shapes(rytov_sq: f64) -> (f64, f64) {
    let s125 = rytov_sq.powf(1.2);
    let alpha = 1.0 / (0.49 * rytov_sq / (1.0 + 1.11 * s125).powf(7.0 / 6.0)).exp_m1();
    let beta = 1.0 / (0.51 * rytov_sq / (1.0 + 0.69 * s125).powf(5.0 / 6.0)).exp_m1();
    (alpha, beta)
}

pub fn turbulence_params(g: &GeometryConfig) -> Result<TurbulenceParams> {
    g.validate()?;
    let rytov_sq = g
        .rytov_sq
        .unwrap_or_else(|| rytov_variance(g.cn2, g.wavelength, g.d_z()));
    let (alpha, beta) = gamma_gamma_shapes(rytov_sq);
    Ok(TurbulenceParams {
        alpha,
        beta,
        rytov_sq,
    })
}

/// Geometry-level quantities kept alongside the shapes when the parameters
/// come from a [`GeometryConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derivation {
    pub pointing: PointingParams,
    pub turbulence: TurbulenceParams,
    pub d_z: f64,
    pub beam_width: f64,
}

/// Distribution parameters of `h = h_l h_s h_g` for one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelParams {
    pub h_l: f64,
    pub a0: f64,
    pub omega: f64,
    pub q: f64,
    pub c: f64,
    pub v: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Present when built by [`ChannelParams::from_geometry`].
    pub derivation: Option<Derivation>,
}

impl ChannelParams {
    pub fn from_geometry(g: &GeometryConfig) -> Result<Self> {
        let h_l = path_loss(g)?;
        let pointing = pointing_params(g)?;
        let turbulence = turbulence_params(g)?;
        if !(pointing.omega > 0.0 && pointing.omega.is_finite()) {
            return Err(Error::DegenerateGeometry(format!(
                "pointing shape omega = {} is not a positive finite number",
                pointing.omega
            )));
        }
        Ok(Self {
            h_l,
            a0: pointing.a0,
            omega: pointing.omega,
            q: pointing.q,
            c: pointing.c,
            v: pointing.v,
            alpha: turbulence.alpha,
            beta: turbulence.beta,
            derivation: Some(Derivation {
                pointing,
                turbulence,
                d_z: g.d_z(),
                beam_width: g.beam_width(),
            }),
        })
    }

    /// Parameters given directly by their shapes; `c` and `v` follow from
    /// `ω` and `q`.
    pub fn from_shape(
        alpha: f64,
        beta: f64,
        omega: f64,
        q: f64,
        a0: f64,
        h_l: f64,
    ) -> Result<Self> {
        for (name, x) in [("alpha", alpha), ("beta", beta), ("omega", omega), ("q", q)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::config(
                    name,
                    format!("must be positive and finite, got {x}"),
                ));
            }
        }
        for (name, x) in [("a0", a0), ("h_l", h_l)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::config(name, format!("must lie in (0, 1], got {x}")));
            }
        }
        let (c, v) = shape_cv(omega, q);
        Ok(Self {
            h_l,
            a0,
            omega,
            q,
            c,
            v,
            alpha,
            beta,
            derivation: None,
        })
    }

    /// Rytov variance, when known.
    pub fn rytov_sq(&self) -> Option<f64> {
        self.derivation.map(|d| d.turbulence.rytov_sq)
    }
}

/// Pointing-error density `(ω/A0) u^{c-1} I0(v ln u)`, `u = h_g / A0`.
pub fn pdf_pointing(h_g: f64, p: &ChannelParams) -> f64 {
    if !(h_g > 0.0 && h_g <= p.a0) {
        return 0.0;
    }
    let lu = (h_g / p.a0).ln();
    let arg = p.v * lu;
    let log = (p.omega / p.a0).ln() + (p.c - 1.0) * lu + bessel_i0_scaled(arg).ln() + arg.abs();
    log.exp()
}

/// `P(h_g ≤ x)` by quadrature of the density of `Y = -ln(h_g / A0)`,
/// `ω e^{-cy} I0(vy)`.
pub fn cdf_pointing(h_g: f64, p: &ChannelParams) -> Result<f64> {
    if h_g <= 0.0 {
        return Ok(0.0);
    }
    if h_g >= p.a0 {
        return Ok(1.0);
    }
    let y0 = -(h_g / p.a0).ln();
    let decay = p.c - p.v.abs();
    let r = integrate_to_infinity(
        |y| p.omega * (-decay * y).exp() * bessel_i0_scaled(p.v * y),
        y0,
        QuadOptions::tol(1e-15, 1e-12),
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Gamma-Gamma density with unit mean.
pub fn pdf_turbulence(h_s: f64, p: &ChannelParams) -> f64 {
    ln_pdf_turbulence(h_s, p.alpha, p.beta).exp()
}

pub(crate) fn ln_pdf_turbulence(h_s: f64, alpha: f64, beta: f64) -> f64 {
    if !(h_s > 0.0) || !h_s.is_finite() {
        return f64::NEG_INFINITY;
    }
    let ab = alpha * beta;
    let mid = 0.5 * (alpha + beta);
    let x = 2.0 * (ab * h_s).sqrt();
    let Ok(ln_k) = ln_bessel_k_scaled(alpha - beta, x) else {
        return f64::NEG_INFINITY;
    };
    std::f64::consts::LN_2 + mid * ab.ln() - ln_gamma(alpha) - ln_gamma(beta)
        + (mid - 1.0) * h_s.ln()
        + ln_k
        - x
}

/// `P(h_s ≤ x)` by quadrature in log coordinates.
pub fn cdf_turbulence(h_s: f64, p: &ChannelParams) -> Result<f64> {
    if h_s <= 0.0 {
        return Ok(0.0);
    }
    let top = h_s.ln();
    let r = integrate_to_infinity(
        |u| {
            let t = top - u;
            (ln_pdf_turbulence(t.exp(), p.alpha, p.beta) + t).exp()
        },
        0.0,
        QuadOptions::tol(1e-15, 1e-12),
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}
