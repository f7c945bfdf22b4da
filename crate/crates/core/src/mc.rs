//! Monte Carlo verification path.
//!
//! Each draw builds `h = h_l · h_s · h_g` from exact samplers:
//!
//! * `h_s = X Y` with `X ~ Gamma(α, 1/α)`, `Y ~ Gamma(β, 1/β)`;
//! * `h_g = A0 e^{-T}` with `T = λ1 G1² + λ2 G2²`, `G1, G2` standard normal,
//!   `λ1 = 1/(2qω)`, `λ2 = q/(2ω)`. The Laplace transform of `T` is
//!   `1/√((1 + 2λ1 s)(1 + 2λ2 s)) = ω/√((s + c)² − v²)`, which is the
//!   transform of `ω e^{-ct} I0(vt)`, the log-domain pointing-error density.
//!
//! Trials are split into fixed-size shards. Shard `i` draws from a ChaCha8
//! stream `i` of the master seed, so the estimate does not depend on the
//! number of worker threads or the order in which shards finish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelParams;
use crate::outage::{threshold, Method, NomaConfig, OutageResult, Receiver};
use crate::quad::kronrod_panel;

/// Trials per independent RNG stream.
pub const SHARD_SIZE: u64 = 1 << 16;

/// Sampling parameters derived from [`ChannelParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplerParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a0: f64,
    pub h_l: f64,
}

impl SamplerParams {
    pub fn from_channel(p: &ChannelParams) -> Self {
        Self {
            lambda1: 1.0 / (2.0 * p.q * p.omega),
            lambda2: p.q / (2.0 * p.omega),
            alpha: p.alpha,
            beta: p.beta,
            a0: p.a0,
            h_l: p.h_l,
        }
    }
}

/// Gamma-Gamma draws with the two Gamma laws built once.
#[derive(Clone, Copy, Debug)]
pub struct ChannelSampler {
    params: SamplerParams,
    large: Gamma<f64>,
    small: Gamma<f64>,
}

impl ChannelSampler {
    pub fn new(params: SamplerParams) -> Self {
        Self {
            params,
            large: unit_mean_gamma(params.alpha),
            small: unit_mean_gamma(params.beta),
        }
    }

    pub fn turbulence<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.large.sample(rng) * self.small.sample(rng)
    }

    pub fn pointing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_pointing(rng, &self.params)
    }

    /// One end-to-end gain `h_l h_s h_g`.
    pub fn channel<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.params.h_l * self.turbulence(rng) * self.pointing(rng)
    }
}

fn unit_mean_gamma(shape: f64) -> Gamma<f64> {
    Gamma::new(shape, 1.0 / shape).expect("Gamma shape is positive and finite")
}

/// One Gamma-Gamma draw with unit mean.
pub fn sample_turbulence<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    unit_mean_gamma(alpha).sample(rng) * unit_mean_gamma(beta).sample(rng)
}

/// One pointing-error draw in `(0, A0]`.
pub fn sample_pointing<R: Rng + ?Sized>(rng: &mut R, p: &SamplerParams) -> f64 {
    let g1: f64 = StandardNormal.sample(rng);
    let g2: f64 = StandardNormal.sample(rng);
    p.a0 * (-(p.lambda1 * g1 * g1 + p.lambda2 * g2 * g2)).exp()
}

/// Which outage event a trial tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum McTarget {
    /// `γ1 < γth1` with `γ1 = a1 B1 γ̄ h² / (a2 B1 γ̄ h² + 1)`.
    Rx1,
    /// Not (`γ21 ≥ γth1` and `γ22 ≥ γth2`).
    Rx2,
    /// Point-to-point link at rate `r1`: `γ̄ h² < 2^{r1} − 1`.
    Single,
    /// TDMA benchmark: `½ log2(1 + B_j γ̄ h²) < R_j`.
    Oma(Receiver),
    /// `h ≤ x`: one point of the empirical CDF.
    CdfAt(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub n: u64,
    pub outages: u64,
    /// `√(p̂(1 − p̂)/n)`.
    pub std_err: f64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(outages: u64, n: u64, seed: u64) -> Self {
        let p_hat = outages as f64 / n as f64;
        Self {
            p_hat,
            n,
            outages,
            std_err: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            seed,
        }
    }

    pub fn to_result(&self, condition_violated: bool) -> OutageResult {
        OutageResult {
            p_out: self.p_hat,
            method: Method::MonteCarlo,
            condition_violated,
            diversity_order: None,
            h_threshold: None,
            rx2_branch: None,
            std_err: Some(self.std_err),
        }
    }
}

/// Per-draw outage test with every constant hoisted.
struct Event {
    target: McTarget,
    g: f64,
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    th1: f64,
    th2: f64,
    oma: f64,
}

impl Event {
    fn new(cfg: &NomaConfig, target: McTarget) -> Self {
        let oma = match target {
            McTarget::Oma(Receiver::Rx2) => threshold(2.0 * cfg.r2),
            _ => threshold(2.0 * cfg.r1),
        };
        Self {
            target,
            g: cfg.gamma_bar(),
            a1: cfg.a1,
            a2: cfg.a2,
            b1: cfg.b1,
            b2: cfg.b2,
            th1: cfg.gamma_th1(),
            th2: cfg.gamma_th2(),
            oma,
        }
    }

    /// SINR comparisons are cross-multiplied (`num < th · den`) so a config
    /// sitting on `a1/a2 = γth1` is not rescued by a rounding in the division.
    fn outage(&self, h: f64) -> bool {
        let h2 = h * h;
        match self.target {
            McTarget::Rx1 => {
                let x = self.b1 * self.g * h2;
                self.a1 * x < self.th1 * (self.a2 * x + 1.0)
            }
            McTarget::Rx2 => {
                let x = self.b2 * self.g * h2;
                let sic_ok = self.a1 * x >= self.th1 * (self.a2 * x + 1.0);
                let own_ok = self.a2 * x >= self.th2;
                !(sic_ok && own_ok)
            }
            McTarget::Single => self.g * h2 < self.th1,
            McTarget::Oma(Receiver::Rx2) => self.b2 * self.g * h2 < self.oma,
            McTarget::Oma(_) => self.b1 * self.g * h2 < self.oma,
            McTarget::CdfAt(x) => h <= x,
        }
    }
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Estimate several events from the same `n` channel draws.
pub fn estimate_many(
    seed: u64,
    sampler: &SamplerParams,
    cfg: &NomaConfig,
    targets: &[McTarget],
    n: u64,
) -> Vec<McEstimate> {
    let n = n.max(1);
    let events: Vec<Event> = targets.iter().map(|t| Event::new(cfg, *t)).collect();
    let chan = ChannelSampler::new(*sampler);
    let shards = n.div_ceil(SHARD_SIZE);
    let counts = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = shard_rng(seed, shard);
            let len = SHARD_SIZE.min(n - shard * SHARD_SIZE);
            let mut local = vec![0u64; events.len()];
            for _ in 0..len {
                let h = chan.channel(&mut rng);
                for (count, ev) in local.iter_mut().zip(&events) {
                    *count += ev.outage(h) as u64;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; events.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    counts
        .into_iter()
        .map(|c| McEstimate::from_counts(c, n, seed))
        .collect()
}

/// Outage frequency of one event over `n` draws.
pub fn estimate_op(
    seed: u64,
    sampler: &SamplerParams,
    cfg: &NomaConfig,
    target: McTarget,
    n: u64,
) -> McEstimate {
    estimate_many(seed, sampler, cfg, &[target], n)[0]
}

/// `n` raw draws of one factor (or of `h`), reproducible from `seed`.
pub fn draw<F>(seed: u64, n: usize, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let shard = SHARD_SIZE as usize;
    (0..n.div_ceil(shard))
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = shard_rng(seed, i as u64);
            let len = shard.min(n - i * shard);
            (0..len).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: FnMut(f64) -> f64>(samples: &mut [f64], mut cdf: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// KS statistic when only the density is cheap: `cdf` is called once at the
/// smallest sample and the rest of the CDF is accumulated by one Kronrod
/// panel per gap between consecutive sorted samples.
pub fn ks_statistic_by_density<C, F>(samples: &mut [f64], cdf: C, mut pdf: F) -> f64
where
    C: FnOnce(f64) -> f64,
    F: FnMut(f64) -> f64,
{
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    let mut f = 0.0;
    let mut prev = f64::NAN;
    let mut first = Some(cdf);
    for (i, &x) in samples.iter().enumerate() {
        f = match first.take() {
            Some(c) => c(x),
            None if x > prev => f + kronrod_panel(&mut pdf, prev, x).value,
            None => f,
        };
        prev = x;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// 5% critical value of the KS statistic, `1.36 / √n`.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}
