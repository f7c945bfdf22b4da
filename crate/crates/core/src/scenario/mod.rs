//! JSON scenarios: two receiver paths, a NOMA configuration, one swept
//! variable and a list of curve families. [`Scenario::run`] produces one
//! [`Row`] per family, sweep point, receiver and method.

mod presets;
mod run;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, GeometryConfig, Violation};
use crate::error::{Error, Result};
use crate::mc::SamplerParams;
use crate::outage::NomaConfig;
use crate::stats::{E2EChannelDist, DEFAULT_TERMS};

pub use presets::{preset, PRESETS};
pub use run::{read_csv, write_csv, Failure, Outcome, Row};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Two receivers sharing one superposed beam.
    #[default]
    Noma,
    /// Point-to-point link over `receivers.rx1` at rate `noma.r1`.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "snr_db")]
    SnrDb,
    /// `a1`, with `a2 = 1 − a1`.
    #[serde(rename = "a1")]
    A1,
    /// `B1`, with `B2 = 1 − B1`.
    #[serde(rename = "B1", alias = "b1")]
    B1,
    /// End-to-end distance of the Rx2 path.
    #[serde(rename = "d_z2")]
    Dz2,
    /// The same sway σ at every node of every path.
    #[serde(rename = "sway_sigma")]
    SwaySigma,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::A1 => "a1",
            SweepVar::B1 => "B1",
            SweepVar::Dz2 => "d_z2",
            SweepVar::SwaySigma => "sway_sigma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVar,
    pub from: f64,
    pub to: f64,
    /// Number of grid points, endpoints included.
    pub steps: usize,
}

impl Sweep {
    /// Evenly spaced points from `from` to `to`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.steps.max(2);
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Analytic,
    Asymptotic,
    Mc,
    Oma,
}

/// Per-family overrides applied before the sweep variable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub label: String,
    /// Pins `σ_R` on every path (stored as `rytov_sq = σ_R²`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rytov_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn2: Option<f64>,
    /// End-to-end distance of every path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Receivers {
    pub rx1: GeometryConfig,
    /// Required in NOMA mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx2: Option<GeometryConfig>,
}

fn default_trials() -> u64 {
    1_000_000
}

fn default_seed() -> u64 {
    1
}

/// Series truncation: a fixed count, or `"auto"` to grow it per point
/// until the tail is below [`AUTO_TERMS_EPS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TermsRepr", into = "TermsRepr")]
pub enum SeriesTerms {
    Fixed(usize),
    Auto,
}

pub const AUTO_TERMS_EPS: f64 = 1e-9;

impl Default for SeriesTerms {
    fn default() -> Self {
        SeriesTerms::Fixed(DEFAULT_TERMS)
    }
}

impl std::str::FromStr for SeriesTerms {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(SeriesTerms::Auto);
        }
        s.parse()
            .map(SeriesTerms::Fixed)
            .map_err(|_| format!("expected a term count or \"auto\", got {s:?}"))
    }
}

impl SeriesTerms {
    pub(crate) fn apply(self, dist: E2EChannelDist) -> E2EChannelDist {
        match self {
            SeriesTerms::Fixed(n) => dist.with_terms(n),
            SeriesTerms::Auto => dist.with_auto_terms(AUTO_TERMS_EPS),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TermsRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<TermsRepr> for SeriesTerms {
    type Error = String;

    fn try_from(r: TermsRepr) -> std::result::Result<Self, String> {
        match r {
            TermsRepr::Count(n) => Ok(SeriesTerms::Fixed(n)),
            TermsRepr::Word(w) => w.parse(),
        }
    }
}

impl From<SeriesTerms> for TermsRepr {
    fn from(t: SeriesTerms) -> Self {
        match t {
            SeriesTerms::Fixed(n) => TermsRepr::Count(n),
            SeriesTerms::Auto => TermsRepr::Word("auto".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub mode: Mode,
    pub receivers: Receivers,
    pub noma: NomaConfig,
    pub sweep: Sweep,
    pub methods: Vec<MethodName>,
    #[serde(default = "default_trials")]
    pub mc_trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub series_terms: SeriesTerms,
    /// Curve families; none means a single unlabelled one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<Family>,
}

/// Geometry and NOMA configuration at one sweep point of one family.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub rx1: GeometryConfig,
    pub rx2: Option<GeometryConfig>,
    pub noma: NomaConfig,
}

fn prefixed(prefix: &str, v: Violation) -> Violation {
    Violation {
        field: format!("{prefix}.{}", v.field),
        ..v
    }
}

impl Scenario {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let s = Self::parse(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Parses without checking invariants.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn families(&self) -> Vec<Family> {
        if self.families.is_empty() {
            vec![Family::default()]
        } else {
            self.families.clone()
        }
    }

    /// The configuration at sweep value `x` after applying `family`.
    pub fn point(&self, family: &Family, x: f64) -> Point {
        let mut rx1 = self.receivers.rx1.clone();
        let mut rx2 = self.receivers.rx2.clone();
        let mut noma = self.noma;
        for g in std::iter::once(&mut rx1).chain(rx2.as_mut()) {
            if let Some(s) = family.rytov_sigma {
                g.rytov_sq = Some(s * s);
            }
            if let Some(cn2) = family.cn2 {
                g.cn2 = cn2;
            }
            if let Some(d) = family.d_z {
                *g = g.clone().with_d_z(d);
            }
        }
        if let Some(a1) = family.a1 {
            noma = noma.with_a1(a1);
        }
        if let Some(snr) = family.snr_db {
            noma.snr_db = snr;
        }
        match self.sweep.variable {
            SweepVar::SnrDb => noma.snr_db = x,
            SweepVar::A1 => noma = noma.with_a1(x),
            SweepVar::B1 => noma = noma.with_b1(x),
            SweepVar::Dz2 => rx2 = rx2.map(|g| g.with_d_z(x)),
            SweepVar::SwaySigma => {
                rx1 = rx1.with_sway(x);
                rx2 = rx2.map(|g| g.with_sway(x));
            }
        }
        Point { rx1, rx2, noma }
    }

    fn noma_violations(&self, cfg: &NomaConfig) -> Vec<Violation> {
        let all = cfg.violations();
        match self.mode {
            Mode::Noma => all,
            Mode::Single => all
                .into_iter()
                .filter(|v| v.field == "r1" || v.field == "snr_db")
                .collect(),
        }
    }

    fn point_violations(&self, p: &Point) -> Vec<Violation> {
        let mut out: Vec<Violation> = p
            .rx1
            .violations()
            .into_iter()
            .map(|v| prefixed("receivers.rx1", v))
            .collect();
        if let Some(rx2) = &p.rx2 {
            out.extend(
                rx2.violations()
                    .into_iter()
                    .map(|v| prefixed("receivers.rx2", v)),
            );
        }
        out.extend(
            self.noma_violations(&p.noma)
                .into_iter()
                .map(|v| prefixed("noma", v)),
        );
        out
    }

    /// Every failed invariant of the receivers, the NOMA configuration, the
    /// sweep, and each family at both sweep endpoints.
    pub fn violations(&self) -> Vec<Violation> {
        let base = Point {
            rx1: self.receivers.rx1.clone(),
            rx2: self.receivers.rx2.clone(),
            noma: self.noma,
        };
        let mut out = self.point_violations(&base);

        let sw = &self.sweep;
        if !(sw.from.is_finite() && sw.to.is_finite()) {
            out.push(Violation::new("sweep", "bounds must be finite"));
        } else if sw.from == sw.to {
            out.push(Violation::new(
                "sweep",
                format!("empty range: from = to = {}", sw.from),
            ));
        }
        if sw.steps < 2 {
            out.push(Violation::new(
                "sweep.steps",
                format!("at least 2 points required, got {}", sw.steps),
            ));
        }
        if self.methods.is_empty() {
            out.push(Violation::new("methods", "at least one method required"));
        }
        if self.series_terms == SeriesTerms::Fixed(0) {
            out.push(Violation::new("series_terms", "must be at least 1"));
        }
        if self.methods.contains(&MethodName::Mc) && self.mc_trials == 0 {
            out.push(Violation::new("mc_trials", "must be at least 1"));
        }
        match self.mode {
            Mode::Noma => {
                if self.receivers.rx2.is_none() {
                    out.push(Violation::new("receivers.rx2", "required in noma mode"));
                }
            }
            Mode::Single => {
                if self.methods.contains(&MethodName::Oma) {
                    out.push(Violation::new("methods", "oma needs noma mode"));
                }
                if matches!(sw.variable, SweepVar::A1 | SweepVar::B1 | SweepVar::Dz2) {
                    out.push(Violation::new(
                        "sweep.variable",
                        format!("{} has no meaning in single mode", sw.variable.as_str()),
                    ));
                }
            }
        }
        let mut labels = std::collections::HashSet::new();
        for (i, f) in self.families.iter().enumerate() {
            if !labels.insert(f.label.as_str()) {
                out.push(Violation::new(
                    format!("families[{i}].label"),
                    format!("duplicate label {:?}", f.label),
                ));
            }
        }

        if out.is_empty() {
            for (i, f) in self.families().iter().enumerate() {
                for (end, x) in [("from", sw.from), ("to", sw.to)] {
                    let at = if self.families.is_empty() {
                        format!("sweep.{end}")
                    } else {
                        format!("families[{i}] at sweep.{end}")
                    };
                    for v in self.point_violations(&self.point(f, x)) {
                        out.push(Violation {
                            message: format!("{} ({at} = {x})", v.message),
                            ..v
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(v.into_error()),
        }
    }

    /// Derived parameters of the base configuration plus every violation.
    pub fn report(&self) -> Report {
        let violations = self.violations();
        let mut receivers = Vec::new();
        let paths = std::iter::once(("rx1", Some(&self.receivers.rx1)))
            .chain(std::iter::once(("rx2", self.receivers.rx2.as_ref())));
        for (name, g) in paths {
            let Some(g) = g else { continue };
            if self.mode == Mode::Single && name == "rx2" {
                continue;
            }
            receivers.push(match ChannelParams::from_geometry(g) {
                Ok(p) => ReceiverReport::from_params(name, &p),
                Err(e) => ReceiverReport::failed(name, e.to_string()),
            });
        }
        Report {
            ok: violations.is_empty() && receivers.iter().all(|r| r.error.is_none()),
            receivers,
            gamma_th1: self.noma.gamma_th1(),
            gamma_th2: self.noma.gamma_th2(),
            violations: violations.iter().map(|v| v.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReceiverReport {
    pub name: String,
    pub d_z: f64,
    pub beam_width: f64,
    pub h_l: f64,
    pub a0: f64,
    pub rytov_sq: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub q: f64,
    pub c: f64,
    pub v: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReceiverReport {
    fn from_params(name: &str, p: &ChannelParams) -> Self {
        let s = SamplerParams::from_channel(p);
        let d = p.derivation.expect("built from geometry");
        Self {
            name: name.into(),
            d_z: d.d_z,
            beam_width: d.beam_width,
            h_l: p.h_l,
            a0: p.a0,
            rytov_sq: d.turbulence.rytov_sq,
            alpha: p.alpha,
            beta: p.beta,
            omega: p.omega,
            q: p.q,
            c: p.c,
            v: p.v,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            error: None,
        }
    }

    fn failed(name: &str, error: String) -> Self {
        Self {
            name: name.into(),
            d_z: f64::NAN,
            beam_width: f64::NAN,
            h_l: f64::NAN,
            a0: f64::NAN,
            rytov_sq: f64::NAN,
            alpha: f64::NAN,
            beta: f64::NAN,
            omega: f64::NAN,
            q: f64::NAN,
            c: f64::NAN,
            v: f64::NAN,
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            error: Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub ok: bool,
    pub receivers: Vec<ReceiverReport>,
    pub gamma_th1: f64,
    pub gamma_th2: f64,
    pub violations: Vec<String>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.receivers {
            writeln!(f, "[{}]", r.name)?;
            if let Some(e) = &r.error {
                writeln!(f, "  error      {e}")?;
                continue;
            }
            let rows = [
                ("d_z", r.d_z),
                ("w(d_z)", r.beam_width),
                ("h_l", r.h_l),
                ("A0", r.a0),
                ("sigma_R^2", r.rytov_sq),
                ("alpha", r.alpha),
                ("beta", r.beta),
                ("omega", r.omega),
                ("q", r.q),
                ("c", r.c),
                ("v", r.v),
                ("lambda1", r.lambda1),
                ("lambda2", r.lambda2),
            ];
            for (k, x) in rows {
                writeln!(f, "  {k:<10} {x:.6e}")?;
            }
        }
        writeln!(f, "gamma_th1    {:.6e}", self.gamma_th1)?;
        writeln!(f, "gamma_th2    {:.6e}", self.gamma_th2)?;
        if self.violations.is_empty() {
            writeln!(f, "violations   none")
        } else {
            writeln!(f, "violations")?;
            for v in &self.violations {
                writeln!(f, "  {v}")?;
            }
            Ok(())
        }
    }
}
