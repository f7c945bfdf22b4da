//! Sweep execution and CSV I/O.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, GeometryConfig};
use crate::error::{Error, Result};
use crate::mc::{estimate_op, McTarget, SamplerParams};
use crate::outage::{
    op_asymptotic, op_oma, op_rx1, op_rx2, op_single, NomaConfig, OutageResult, Receiver,
};
use crate::stats::E2EChannelDist;

use super::{Family, MethodName, Mode, Scenario};

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub sweep_var: String,
    pub value: f64,
    /// `rx1`, `rx2` or `single`, followed by `:label` when the scenario has
    /// families.
    pub receiver: String,
    pub method: String,
    /// NaN when the evaluation failed.
    pub p_out: f64,
    pub std_err: Option<f64>,
    pub condition_violated: bool,
    pub diversity_order: Option<f64>,
}

/// A row whose evaluation failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE5_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn mc_target(which: Receiver) -> McTarget {
    match which {
        Receiver::Rx1 => McTarget::Rx1,
        Receiver::Rx2 => McTarget::Rx2,
        Receiver::Single => McTarget::Single,
    }
}

struct Context<'a> {
    scenario: &'a Scenario,
    cfg: NomaConfig,
    which: Receiver,
    seed: u64,
}

impl Context<'_> {
    fn evaluate(&self, dist: &E2EChannelDist, method: MethodName) -> Result<OutageResult> {
        let cfg = &self.cfg;
        match (method, self.which) {
            (MethodName::Analytic, Receiver::Rx1) => op_rx1(dist, cfg),
            (MethodName::Analytic, Receiver::Rx2) => op_rx2(dist, cfg),
            (MethodName::Analytic, Receiver::Single) => op_single(dist, cfg.snr_db, cfg.r1),
            (MethodName::Asymptotic, w) => op_asymptotic(dist, cfg, w),
            (MethodName::Oma, w) => op_oma(dist, cfg, w),
            (MethodName::Mc, w) => {
                let sampler = SamplerParams::from_channel(&dist.params);
                let n = self.scenario.mc_trials;
                let est = estimate_op(self.seed, &sampler, cfg, mc_target(w), n);
                Ok(est.to_result(w != Receiver::Single && !cfg.operates()))
            }
        }
    }
}

impl Scenario {
    fn paths<'a>(
        &self,
        rx1: &'a GeometryConfig,
        rx2: Option<&'a GeometryConfig>,
    ) -> Vec<(Receiver, &'a GeometryConfig)> {
        match self.mode {
            Mode::Single => vec![(Receiver::Single, rx1)],
            Mode::Noma => {
                let mut v = vec![(Receiver::Rx1, rx1)];
                v.extend(rx2.map(|g| (Receiver::Rx2, g)));
                v
            }
        }
    }

    fn receiver_label(&self, which: Receiver, family: &Family) -> String {
        if self.families.is_empty() {
            which.as_str().to_string()
        } else {
            format!("{}:{}", which.as_str(), family.label)
        }
    }

    /// Rows of one family at one sweep point, with per-row error messages.
    fn run_point(&self, fam_idx: usize, family: &Family, x: f64) -> Vec<(Row, Option<String>)> {
        let point = self.point(family, x);
        let mut out = Vec::new();
        for (rx_idx, (which, geom)) in self
            .paths(&point.rx1, point.rx2.as_ref())
            .into_iter()
            .enumerate()
        {
            let receiver = self.receiver_label(which, family);
            // Same draws at every point of a curve.
            let seed = splitmix64(self.seed ^ splitmix64((fam_idx * 4 + rx_idx) as u64));
            let ctx = Context {
                scenario: self,
                cfg: point.noma,
                which,
                seed,
            };
            let dist = ChannelParams::from_geometry(geom)
                .map(|p| self.series_terms.apply(E2EChannelDist::new(p)));
            for &method in &self.methods {
                let result = dist
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|d| ctx.evaluate(d, method).map_err(|e| e.to_string()));
                let name = match method {
                    MethodName::Analytic => "analytic",
                    MethodName::Asymptotic => "asymptotic",
                    MethodName::Mc => "mc",
                    MethodName::Oma => "oma",
                };
                let mut row = Row {
                    sweep_var: self.sweep.variable.as_str().to_string(),
                    value: x,
                    receiver: receiver.clone(),
                    method: name.to_string(),
                    p_out: f64::NAN,
                    std_err: None,
                    condition_violated: false,
                    diversity_order: None,
                };
                match result {
                    Ok(r) => {
                        row.p_out = r.p_out;
                        row.std_err = r.std_err;
                        row.condition_violated = r.condition_violated;
                        row.diversity_order = r.diversity_order;
                        out.push((row, None));
                    }
                    Err(e) => out.push((row, Some(e))),
                }
            }
        }
        out
    }

    /// Validates, then evaluates every family × sweep point in parallel.
    /// Rows come back in family, sweep, receiver, method order whatever the
    /// thread count. Failed evaluations leave a NaN row and a [`Failure`].
    pub fn run(&self) -> Result<Outcome> {
        self.validate()?;
        let families = self.families();
        let grid = self.sweep.grid();
        let tasks: Vec<(usize, f64)> = (0..families.len())
            .flat_map(|f| grid.iter().map(move |&x| (f, x)))
            .collect();
        let chunks: Vec<Vec<(Row, Option<String>)>> = tasks
            .par_iter()
            .map(|&(f, x)| self.run_point(f, &families[f], x))
            .collect();
        let mut outcome = Outcome::default();
        for (row, err) in chunks.into_iter().flatten() {
            if let Some(message) = err {
                log::warn!(
                    "{} = {}, {} {}: {message}",
                    row.sweep_var,
                    row.value,
                    row.receiver,
                    row.method
                );
                outcome.failures.push(Failure {
                    row: outcome.rows.len(),
                    message,
                });
            }
            outcome.rows.push(row);
        }
        Ok(outcome)
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Writes rows with a header. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_csv<W: Write>(rows: &[Row], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(io_err)?;
    }
    wtr.flush().map_err(io_err)
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<Row>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(io_err))
        .collect()
}
