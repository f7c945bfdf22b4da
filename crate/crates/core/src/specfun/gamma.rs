// Lanczos coefficients are kept at their published precision.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln(√(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Number of upward recurrence steps we are willing to take before falling
/// back to the reflection formula.
const MAX_SHIFT: usize = 64;

/// Log-Gamma on the analytic branch that is continuous in the plane cut along
/// the non-positive real axis. It satisfies `ln Γ(z + 1) = ln Γ(z) + ln z`
/// with the principal logarithm, so `exp(log_gamma(z)) == Γ(z)`.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::GammaPole(z.re));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain {
            func: "log_gamma",
            detail: format!("non-finite argument {z}"),
        });
    }
    Ok(log_gamma_unchecked(z))
}

/// `log_gamma` without the pole check; callers guarantee the argument lies
/// off the poles (the Mellin-Barnes kernels keep every argument in the right
/// half-plane).
pub(crate) fn log_gamma_unchecked(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        return lanczos(z);
    }
    let shift = (0.5 - z.re).ceil() as usize;
    if shift <= MAX_SHIFT {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut w = z;
        for _ in 0..shift {
            acc += w.ln();
            w += 1.0;
        }
        lanczos(w) - acc
    } else {
        // Far left: the imaginary part is only defined modulo 2π here.
        let pi = Complex64::new(PI, 0.0);
        pi.ln() - (pi * z).sin().ln() - lanczos(Complex64::new(1.0, 0.0) - z)
    }
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &p) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + x.ln()
}

/// Real log-Gamma, `ln |Γ(x)|`, for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return ln_gamma_lanczos(x + 1.0) - x.ln();
    }
    ln_gamma_lanczos(x)
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut s = LANCZOS_COEF[0];
    for (i, &p) in LANCZOS_COEF.iter().enumerate().skip(1) {
        s += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + s.ln()
}

/// Γ(x) for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Taylor coefficients of 1/Γ(1 + x) about 0.
const RECIP_GAMMA_TAYLOR: [f64; 27] = [
    1.0,
    0.577_215_664_901_532_860_61,
    -0.655_878_071_520_253_881_08,
    -0.042_002_635_034_095_235_529,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_748,
    -0.009_621_971_527_876_973_562_1,
    0.007_218_943_246_663_099_542_4,
    -0.001_165_167_591_859_065_112_1,
    -0.000_215_241_674_114_950_972_82,
    0.000_128_050_282_388_116_186_15,
    -0.000_020_134_854_780_788_238_656,
    -1.250_493_482_142_670_657_3e-6,
    1.133_027_231_981_695_882_4e-6,
    -2.056_338_416_977_607_103_5e-7,
    6.116_095_104_481_415_817_9e-9,
    5.002_007_644_469_222_930_1e-9,
    -1.181_274_570_487_020_144_6e-9,
    1.043_426_711_691_100_510_5e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708_2e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783_2e-14,
    -5.348_122_539_423_017_982_4e-15,
    1.226_778_628_238_260_790_2e-15,
    -1.181_259_301_697_458_769_5e-16,
    1.186_692_254_751_600_332_6e-18,
];

/// Temme's auxiliary functions for |mu| <= 1/2:
/// `gam1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2 mu)` and
/// `gam2 = (1/Γ(1-mu) + 1/Γ(1+mu)) / 2`.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pow_even = 1.0;
    for pair in RECIP_GAMMA_TAYLOR.chunks(2) {
        gam2 += pair[0] * pow_even;
        if let Some(&odd) = pair.get(1) {
            gam1 -= odd * pow_even;
        }
        pow_even *= mu2;
    }
    (gam1, gam2)
}
