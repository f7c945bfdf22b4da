//! Outage probabilities for the single-receiver link, the two NOMA
//! receivers and the OMA benchmark.
//!
//! Rx1 (far user, larger power share `a1`) decodes `x1` treating `x2` as
//! noise. Rx2 first decodes `x1`, cancels it, then decodes `x2`. Both are
//! in permanent outage unless `a1 / a2 > γth1`.

use serde::{Deserialize, Serialize};

use crate::channel::Violation;
use crate::error::{Error, Result};
use crate::stats::E2EChannelDist;

/// Powers, beam splitting, target rates and transmit SNR of the downlink.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NomaConfig {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Target rates in bit/s/Hz.
    pub r1: f64,
    pub r2: f64,
    /// `10 log10(γ̄)`.
    pub snr_db: f64,
}

/// Slack on `a1 − a2 γth1 > 0` so that a boundary configuration such as
/// `a1/a2 = 9`, `R1 = log2(10)` lands on the outage side despite rounding.
const GUARD_SLACK: f64 = 1e-12;

impl NomaConfig {
    /// Reference configuration: `a = (0.9, 0.1)`, `B = (0.4, 0.6)`,
    /// `R = (2, 4.5)`.
    pub fn table1(snr_db: f64) -> Self {
        Self {
            a1: 0.9,
            a2: 0.1,
            b1: 0.4,
            b2: 0.6,
            r1: 2.0,
            r2: 4.5,
            snr_db,
        }
    }

    /// Sets `a1` and `a2 = 1 − a1`.
    pub fn with_a1(mut self, a1: f64) -> Self {
        self.a1 = a1;
        self.a2 = 1.0 - a1;
        self
    }

    /// Sets `B1` and `B2 = 1 − B1`.
    pub fn with_b1(mut self, b1: f64) -> Self {
        self.b1 = b1;
        self.b2 = 1.0 - b1;
        self
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    /// Linear transmit SNR `γ̄`.
    pub fn gamma_bar(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn gamma_th1(&self) -> f64 {
        threshold(self.r1)
    }

    pub fn gamma_th2(&self) -> f64 {
        threshold(self.r2)
    }

    /// `a1 / a2 > γth1`, the condition under which either receiver can
    /// decode `x1` at all.
    pub fn operates(&self) -> bool {
        self.a1 - self.a2 * self.gamma_th1() > GUARD_SLACK * self.a1
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, x) in [
            ("a1", self.a1),
            ("a2", self.a2),
            ("b1", self.b1),
            ("b2", self.b2),
        ] {
            if !(x > 0.0 && x < 1.0) {
                out.push(Violation::new(name, format!("must lie in (0, 1), got {x}")));
            }
        }
        if !(self.a1 > self.a2) {
            out.push(Violation::new(
                "a1",
                format!("a1 > a2 required, got a1 = {}, a2 = {}", self.a1, self.a2),
            ));
        }
        if (self.a1 + self.a2 - 1.0).abs() > 1e-9 {
            out.push(Violation::new(
                "a2",
                format!("a1 + a2 must equal 1, got {}", self.a1 + self.a2),
            ));
        }
        if self.b1 + self.b2 > 1.0 + 1e-9 {
            out.push(Violation::new(
                "b2",
                format!("b1 + b2 must not exceed 1, got {}", self.b1 + self.b2),
            ));
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(r > 0.0 && r.is_finite()) {
                out.push(Violation::new(
                    name,
                    format!("must be positive and finite, got {r}"),
                ));
            }
        }
        if !self.snr_db.is_finite() {
            out.push(Violation::new(
                "snr_db",
                format!("must be finite, got {}", self.snr_db),
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(v.into_error()),
        }
    }
}

/// `2^R − 1`.
pub fn threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Asymptotic,
    MonteCarlo,
    Oma,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "mc",
            Method::Oma => "oma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Receiver {
    Rx1,
    Rx2,
    /// Point-to-point link with rate `r1` and no power split.
    Single,
}

impl Receiver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Receiver::Rx1 => "rx1",
            Receiver::Rx2 => "rx2",
            Receiver::Single => "single",
        }
    }
}

/// Which argument of Rx2's `max{·,·}` set the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rx2Branch {
    /// Decoding `x1` for SIC was the binding constraint.
    Sic,
    /// Decoding its own `x2` was.
    Own,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_out: f64,
    pub method: Method,
    pub condition_violated: bool,
    pub diversity_order: Option<f64>,
    /// Threshold on the channel gain, `P_out = F_h(h_th)`.
    pub h_threshold: Option<f64>,
    pub rx2_branch: Option<Rx2Branch>,
    /// Monte Carlo standard error.
    pub std_err: Option<f64>,
}

impl OutageResult {
    fn analytic(p_out: f64, method: Method, h_threshold: f64) -> Self {
        Self {
            p_out,
            method,
            condition_violated: false,
            diversity_order: None,
            h_threshold: Some(h_threshold),
            rx2_branch: None,
            std_err: None,
        }
    }

    fn violated(method: Method) -> Self {
        Self {
            p_out: 1.0,
            method,
            condition_violated: true,
            diversity_order: None,
            h_threshold: None,
            rx2_branch: None,
            std_err: None,
        }
    }
}

/// Both arguments of Rx2's `max{·,·}`, squared channel-gain thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rx2Thresholds {
    pub sic: f64,
    pub own: f64,
}

impl Rx2Thresholds {
    pub fn active(&self) -> (f64, Rx2Branch) {
        if self.sic >= self.own {
            (self.sic, Rx2Branch::Sic)
        } else {
            (self.own, Rx2Branch::Own)
        }
    }
}

/// `h²` threshold of Rx1, `None` when the operation condition fails.
pub fn rx1_threshold_sq(cfg: &NomaConfig) -> Option<f64> {
    if !cfg.operates() {
        return None;
    }
    let g = cfg.gamma_bar();
    let th1 = cfg.gamma_th1();
    Some(th1 / (cfg.b1 * g * (cfg.a1 - cfg.a2 * th1)))
}

pub fn rx2_thresholds_sq(cfg: &NomaConfig) -> Option<Rx2Thresholds> {
    if !cfg.operates() {
        return None;
    }
    let g = cfg.gamma_bar();
    let th1 = cfg.gamma_th1();
    Some(Rx2Thresholds {
        sic: th1 / (cfg.b2 * g * (cfg.a1 - cfg.a2 * th1)),
        own: cfg.gamma_th2() / (cfg.a2 * cfg.b2 * g),
    })
}

/// `P(γ̄ h² < 2^R − 1) = F_h(√(γth/γ̄))`.
pub fn op_single(dist: &E2EChannelDist, snr_db: f64, rate: f64) -> Result<OutageResult> {
    if !(rate >= 0.0) {
        return Err(Error::config(
            "rate",
            format!("must be nonnegative, got {rate}"),
        ));
    }
    let g = 10f64.powf(snr_db / 10.0);
    let h_th = (threshold(rate) / g).sqrt();
    Ok(OutageResult::analytic(
        dist.cdf(h_th)?,
        Method::Analytic,
        h_th,
    ))
}

pub fn op_rx1(dist1: &E2EChannelDist, cfg: &NomaConfig) -> Result<OutageResult> {
    cfg.validate()?;
    match rx1_threshold_sq(cfg) {
        None => Ok(OutageResult::violated(Method::Analytic)),
        Some(t) => {
            let h_th = t.sqrt();
            Ok(OutageResult::analytic(
                dist1.cdf(h_th)?,
                Method::Analytic,
                h_th,
            ))
        }
    }
}

pub fn op_rx2(dist2: &E2EChannelDist, cfg: &NomaConfig) -> Result<OutageResult> {
    cfg.validate()?;
    match rx2_thresholds_sq(cfg) {
        None => Ok(OutageResult::violated(Method::Analytic)),
        Some(t) => {
            let (sq, branch) = t.active();
            let h_th = sq.sqrt();
            let mut r = OutageResult::analytic(dist2.cdf(h_th)?, Method::Analytic, h_th);
            r.rx2_branch = Some(branch);
            Ok(r)
        }
    }
}

/// Two-slot TDMA: receiver `j` gets its beam share `B_j γ̄` for half the
/// time, so it needs `2^{2R_j} − 1`.
pub fn oma_threshold_sq(cfg: &NomaConfig, which: Receiver) -> Result<f64> {
    let g = cfg.gamma_bar();
    match which {
        Receiver::Rx1 => Ok(threshold(2.0 * cfg.r1) / (cfg.b1 * g)),
        Receiver::Rx2 => Ok(threshold(2.0 * cfg.r2) / (cfg.b2 * g)),
        Receiver::Single => Err(Error::config(
            "receiver",
            "the OMA benchmark needs rx1 or rx2",
        )),
    }
}

pub fn op_oma(dist: &E2EChannelDist, cfg: &NomaConfig, which: Receiver) -> Result<OutageResult> {
    cfg.validate()?;
    let h_th = oma_threshold_sq(cfg, which)?.sqrt();
    Ok(OutageResult::analytic(dist.cdf(h_th)?, Method::Oma, h_th))
}

/// High-SNR outage from the small-`h` CDF asymptote at the receiver's threshold.
pub fn op_asymptotic(
    dist: &E2EChannelDist,
    cfg: &NomaConfig,
    which: Receiver,
) -> Result<OutageResult> {
    let p = &dist.params;
    let diversity = p.alpha.min(p.beta).min(p.c) / 2.0;
    let (sq, branch) = match which {
        Receiver::Single => (threshold(cfg.r1) / cfg.gamma_bar(), None),
        Receiver::Rx1 => {
            cfg.validate()?;
            match rx1_threshold_sq(cfg) {
                Some(t) => (t, None),
                None => return Ok(OutageResult::violated(Method::Asymptotic)),
            }
        }
        Receiver::Rx2 => {
            cfg.validate()?;
            match rx2_thresholds_sq(cfg) {
                Some(t) => {
                    let (sq, b) = t.active();
                    (sq, Some(b))
                }
                None => return Ok(OutageResult::violated(Method::Asymptotic)),
            }
        }
    };
    let h_th = sq.sqrt();
    let (_, value) = dist.cdf_asymptotic(h_th)?;
    // The power law overshoots 1 at low SNR, where it is not meant to apply.
    let mut r = OutageResult::analytic(value.min(1.0), Method::Asymptotic, h_th);
    r.diversity_order = Some(diversity);
    r.rx2_branch = branch;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelParams, GeometryConfig};

    fn dists() -> (E2EChannelDist, E2EChannelDist) {
        (
            E2EChannelDist::new(
                ChannelParams::from_geometry(&GeometryConfig::table1_rx1()).unwrap(),
            ),
            E2EChannelDist::new(
                ChannelParams::from_geometry(&GeometryConfig::table1_rx2()).unwrap(),
            ),
        )
    }

    #[test]
    fn thresholds() {
        let cfg = NomaConfig::table1(100.0);
        assert_eq!(cfg.gamma_th1(), 3.0);
        assert!((cfg.gamma_th2() - (4.5f64.exp2() - 1.0)).abs() < 1e-12);
        assert!(cfg.operates());
        let edge = NomaConfig {
            r1: 10f64.log2(),
            ..cfg
        };
        assert!(!edge.operates());
    }

    #[test]
    fn guard_returns_exact_one() {
        let (d1, d2) = dists();
        let cfg = NomaConfig {
            r1: 10f64.log2(),
            ..NomaConfig::table1(100.0)
        };
        for r in [op_rx1(&d1, &cfg).unwrap(), op_rx2(&d2, &cfg).unwrap()] {
            assert_eq!(r.p_out, 1.0);
            assert!(r.condition_violated);
        }
        assert_eq!(op_asymptotic(&d1, &cfg, Receiver::Rx1).unwrap().p_out, 1.0);
    }

    #[test]
    fn single_link_limits() {
        let (d1, _) = dists();
        assert_eq!(op_single(&d1, 100.0, 0.0).unwrap().p_out, 0.0);
        let hi = op_single(&d1, 250.0, 1.0).unwrap().p_out;
        assert!(hi < 1e-12, "{hi}");
    }

    #[test]
    fn rx1_monotone_in_snr() {
        let (d1, d2) = dists();
        let mut prev = (1.0, 1.0);
        for i in 0..20 {
            let cfg = NomaConfig::table1(60.0 + 4.0 * i as f64);
            let p1 = op_rx1(&d1, &cfg).unwrap().p_out;
            let p2 = op_rx2(&d2, &cfg).unwrap().p_out;
            assert!(p1 <= prev.0 && p2 <= prev.1, "snr {}", cfg.snr_db);
            prev = (p1, p2);
        }
    }

    #[test]
    fn rx2_records_active_branch() {
        let (_, d2) = dists();
        let cfg = NomaConfig::table1(100.0);
        let t = rx2_thresholds_sq(&cfg).unwrap();
        let r = op_rx2(&d2, &cfg).unwrap();
        assert_eq!(r.h_threshold.unwrap(), t.sic.max(t.own).sqrt());
        // a2 = 0.1 with R2 = 4.5: decoding x2 binds.
        assert_eq!(r.rx2_branch, Some(Rx2Branch::Own));
    }

    #[test]
    fn oma_ignores_power_split() {
        let (d1, _) = dists();
        let a = op_oma(&d1, &NomaConfig::table1(100.0), Receiver::Rx1).unwrap();
        let b = op_oma(&d1, &NomaConfig::table1(100.0).with_a1(0.7), Receiver::Rx1).unwrap();
        assert_eq!(a.p_out, b.p_out);
        assert_eq!(a.method, Method::Oma);
    }

    #[test]
    fn validation_messages() {
        let cfg = NomaConfig::table1(100.0).with_a1(0.4);
        let v = cfg.violations();
        assert!(v.iter().any(|v| v.message.contains("a1 > a2 required")));
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig { .. })));
        let cfg = NomaConfig {
            b2: 0.7,
            ..NomaConfig::table1(100.0)
        };
        assert!(cfg.validate().is_err());
    }
}
