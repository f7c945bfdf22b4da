use std::f64::consts::PI;

use super::gamma::temme_gammas;
use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 25.0;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        i0_series(ax)
    } else {
        ax.exp() * i0_asymptotic_scaled(ax)
    }
}

/// Exponentially scaled I₀: `e^{-|x|} I₀(x)`. Finite for every finite `x`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        i0_series(ax) * (-ax).exp()
    } else {
        i0_asymptotic_scaled(ax)
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > EPS * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let inv8x = 1.0 / (8.0 * x);
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) * inv8x / kf;
        if next.abs() > term.abs() || next.abs() < EPS * sum {
            break;
        }
        term = next;
        sum += term;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Modified Bessel function of the second kind, `K_ν(x)`, real order.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

/// `e^{x} K_ν(x)`, stable for large `x`.
///
/// Temme's series for the fractional order below `x = 2`, Steed's continued
/// fraction above, then forward recurrence in the integer part of the order.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    Ok(ln_bessel_k_scaled(nu, x)?.exp())
}

/// `ln(e^{x} K_ν(x))`. Finite where `K_ν` itself overflows (large order,
/// tiny argument).
pub fn ln_bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            func: "bessel_k",
            detail: format!("argument must be positive and finite, got {x}"),
        });
    }
    if !nu.is_finite() {
        return Err(Error::Domain {
            func: "bessel_k",
            detail: format!("order must be finite, got {nu}"),
        });
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let (mut k_mu, mut k_mu1, mut ln_scale) = if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2) = temme_gammas(mu);
        let gampl = gam2 - mu * gam1;
        let gammi = gam2 + mu * gam1;
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Domain {
                func: "bessel_k",
                detail: format!("Temme series did not converge for nu={nu}, x={x}"),
            });
        }
        let scale = x.exp();
        // Both values carry a factor 2/x, taken out as a log so that
        // K_{μ+1} cannot overflow at tiny x.
        (sum * scale * 0.5 * x, sum1 * scale, xi2.ln())
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Domain {
                func: "bessel_k",
                detail: format!("Steed continued fraction did not converge for nu={nu}, x={x}"),
            });
        }
        h *= a1;
        let k = (PI / (2.0 * x)).sqrt() / s;
        (k, k * (mu + x + 0.5 - h) * xi, 0.0)
    };

    // Each step grows by about 2i/x; renormalize every time.
    for i in 1..=nl {
        let next = (mu + i as f64) * xi2 + k_mu / k_mu1;
        k_mu = 1.0;
        ln_scale += k_mu1.ln();
        k_mu1 = next;
    }
    if !(k_mu.is_finite() && k_mu > 0.0) {
        return Err(Error::Domain {
            func: "bessel_k",
            detail: format!("overflow for nu={nu}, x={x}"),
        });
    }
    Ok(k_mu.ln() + ln_scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫₀^∞ e^{-x cosh t} cosh(νt) dt by a plain trapezoid rule; the integrand
    /// is entire and decays doubly exponentially, so the rule converges fast.
    fn k_integral_oracle(nu: f64, x: f64) -> f64 {
        let h: f64 = 1e-3;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let v = (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
            sum += v;
            if v < 1e-300 || t > 40.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    fn i0_power_series(x: f64, terms: usize) -> f64 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut s = 1.0;
        for k in 1..terms {
            term *= q / (k * k) as f64;
            s += term;
        }
        s
    }

    #[test]
    fn i0_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        let want = i0_power_series(1.0, 30);
        assert!((bessel_i0(1.0) - want).abs() < 1e-15 * want);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert_eq!(bessel_i0(-2.0), bessel_i0(2.0));
    }

    #[test]
    fn i0_relative_accuracy_up_to_fifty() {
        // Straight power series with generous term count as the reference.
        let mut x = 0.0;
        while x <= 50.0 {
            let want = i0_power_series(x, 200);
            let got = bessel_i0(x);
            assert!((got - want).abs() <= 1e-12 * want, "x={x}: {got} vs {want}");
            let scaled = bessel_i0_scaled(x);
            assert!((scaled - want * (-x).exp()).abs() <= 1e-12 * scaled);
            x += 0.73;
        }
    }

    #[test]
    fn k_closed_form_half_order() {
        let got = bessel_k(0.5, 1.0).unwrap();
        let want = (PI / 2.0).sqrt() * (-1.0f64).exp();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.461_068_504_447_894_56).abs() < 1e-15);
    }

    #[test]
    fn k_is_even_in_order() {
        for (nu, x) in [(0.3, 0.7), (2.6, 3.1), (5.0, 12.0)] {
            assert_eq!(bessel_k(nu, x).unwrap(), bessel_k(-nu, x).unwrap());
        }
    }

    #[test]
    fn k_against_integral_representation() {
        let got = bessel_k(1.3, 2.4).unwrap();
        let want = k_integral_oracle(1.3, 2.4);
        assert!((got - want).abs() < 1e-13 * want, "{got} vs {want}");
        // mpmath.besselk(1.3, 2.4)
        assert!((got - 0.094_399_301_301_374_33).abs() < 1e-15);
        for nu in [0.0, 0.25, 0.5, 1.0, 2.7, 3.81, 6.4] {
            for x in [0.05, 0.4, 1.1, 1.99, 2.0, 3.3, 8.0, 25.0] {
                let got = bessel_k(nu, x).unwrap();
                let want = k_integral_oracle(nu, x);
                assert!(
                    (got - want).abs() < 1e-12 * want,
                    "nu={nu} x={x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn k_scaled_survives_large_arguments() {
        let s = bessel_k_scaled(0.5, 2000.0).unwrap();
        let want = (PI / 4000.0).sqrt();
        assert!((s - want).abs() < 1e-14 * want);
        assert_eq!(bessel_k(0.5, 2000.0).unwrap(), 0.0);
    }

    #[test]
    fn ln_k_survives_tiny_arguments() {
        // Leading small-x term: K_ν(x) ≈ Γ(ν) 2^{ν-1} x^{-ν}.
        for (nu, x) in [(4.25, 1e-160), (6.7, 1e-100), (2.5, 1e-300)] {
            let got = ln_bessel_k_scaled(nu, x).unwrap();
            let want = crate::specfun::ln_gamma(nu) + (nu - 1.0) * 2f64.ln() - nu * x.ln();
            assert!(
                (got - want).abs() < 1e-12 * want,
                "nu={nu} x={x}: {got} vs {want}"
            );
        }
        let direct = bessel_k_scaled(2.7, 0.3).unwrap().ln();
        assert!((ln_bessel_k_scaled(2.7, 0.3).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn k_domain() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
    }
}
