//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are always shown; exits non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use oris_noma::channel::{
    cdf_pointing, cdf_turbulence, pdf_pointing, pdf_turbulence, ChannelParams, GeometryConfig,
};
use oris_noma::mc::{
    draw, estimate_op, ks_critical_5pct, ks_statistic_by_density, sample_pointing,
    sample_turbulence, McTarget, SamplerParams,
};
use oris_noma::outage::{op_asymptotic, op_rx1, op_rx2, op_single, NomaConfig, Receiver};
use oris_noma::quad::{integrate, QuadOptions};
use oris_noma::scenario::{preset, MethodName, Row};
use oris_noma::stats::{oracle_cdf, AsymptoticBranch, E2EChannelDist};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: u32, title: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    println!(
        "{} [{id}] {title}: {} ({:.1} s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn table1() -> Vec<(String, ChannelParams)> {
    vec![
        (
            "table1-rx1".into(),
            ChannelParams::from_geometry(&GeometryConfig::table1_rx1()).unwrap(),
        ),
        (
            "table1-rx2".into(),
            ChannelParams::from_geometry(&GeometryConfig::table1_rx2()).unwrap(),
        ),
    ]
}

/// α, β ∈ [1, 8], q ∈ [0.3, 1], ω ∈ [1, 10].
fn random_sets() -> Vec<(String, ChannelParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
    (0..5)
        .map(|i| {
            let alpha = rng.random_range(1.0..8.0);
            let beta = rng.random_range(1.0..8.0);
            let q = rng.random_range(0.3..1.0);
            let omega = rng.random_range(1.0..10.0);
            let a0 = rng.random_range(0.05..1.0);
            let h_l = rng.random_range(0.3..1.0);
            let p = ChannelParams::from_shape(alpha, beta, omega, q, a0, h_l).unwrap();
            (
                format!("random{i}(a={alpha:.2},b={beta:.2},q={q:.2},w={omega:.2})"),
                p,
            )
        })
        .collect()
}

fn all_sets() -> Vec<(String, ChannelParams)> {
    let mut v = table1();
    v.extend(random_sets());
    v
}

/// Truncation grown until the tail is negligible; ten terms are not enough
/// at q = 0.3.
fn converged(p: ChannelParams) -> E2EChannelDist {
    E2EChannelDist::new(p).with_auto_terms(1e-10)
}

fn c1_normalization() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (name, p) in all_sets() {
        let d = converged(p);
        let top = p.a0 * p.h_l;
        // F ~ χ^m near 0: start where the neglected mass is ~1e-12.
        let m = p.alpha.min(p.beta).min(p.c - p.v.abs());
        let t_lo = (1e-12f64.ln() / m).min(-10.0);
        let t_hi = 300f64.ln();
        let opts = QuadOptions::tol(1e-10, 1e-8);
        let f = |t: f64| {
            let h = top * t.exp();
            d.pdf(h).unwrap() * h
        };
        let cuts = [t_lo, -6.0, -2.0, 0.0, 1.5, t_hi];
        let mass: f64 = cuts
            .windows(2)
            .map(|w| integrate(f, w[0], w[1], opts).unwrap().value)
            .sum();
        worst = worst.max((mass - 1.0).abs());
        details.push(format!("{name}: {:.2e}", mass - 1.0));
    }
    verdict(
        worst <= 1e-4,
        format!(
            "max |mass - 1| = {worst:.2e} over 7 sets [{}]",
            details.join("; ")
        ),
    )
}

fn chi_grid() -> impl Iterator<Item = f64> {
    (0..20).map(|i| 10f64.powf(-4.0 + 4.5 * i as f64 / 19.0))
}

fn c2_series_vs_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (_, p) in all_sets() {
        let d = converged(p);
        for chi in chi_grid() {
            let h = chi * p.a0 * p.h_l;
            let f = d.cdf(h).unwrap();
            if f < 1e-6 {
                continue;
            }
            let o = oracle_cdf(&p, h).unwrap();
            worst = worst.max((f - o).abs() / o);
            compared += 1;
        }
    }
    verdict(
        worst <= 1e-3 && compared > 0,
        format!("max relative gap {worst:.2e} over {compared} grid points (7 sets × 20)"),
    )
}

fn c3_samplers() -> Verdict {
    let n = 100_000;
    // The pinned bound is the asymptotic 1% value; the 5% one is reported
    // alongside.
    let crit = 1.63 / (n as f64).sqrt();
    let crit5 = ks_critical_5pct(n);
    let mut above5 = 0;
    let mut ok = true;
    let mut details = Vec::new();
    for (i, (name, p)) in random_sets().into_iter().enumerate() {
        let mut xs = draw(1000 + i as u64, n, |r| {
            sample_turbulence(r, p.alpha, p.beta)
        });
        let dt = ks_statistic_by_density(
            &mut xs,
            |x| cdf_turbulence(x, &p).unwrap(),
            |x| pdf_turbulence(x, &p),
        );
        let s = SamplerParams::from_channel(&p);
        let mut ys = draw(2000 + i as u64, n, |r| sample_pointing(r, &s));
        let dp = ks_statistic_by_density(
            &mut ys,
            |x| cdf_pointing(x, &p).unwrap(),
            |x| pdf_pointing(x, &p),
        );
        ok &= dt < crit && dp < crit;
        above5 += (dt >= crit5) as usize + (dp >= crit5) as usize;
        details.push(format!("{name}: D_s={dt:.4} D_g={dp:.4}"));
    }
    let mut identity: f64 = 0.0;
    for (_, p) in all_sets() {
        let s = SamplerParams::from_channel(&p);
        let w2 = p.omega * p.omega;
        let scale = p.c / w2;
        identity = identity
            .max(((s.lambda1 + s.lambda2) - p.c / w2).abs() / scale)
            .max(((s.lambda1 - s.lambda2) - p.v / w2).abs() / scale)
            .max((p.c * p.c - p.v * p.v - w2).abs() / (p.c * p.c));
    }
    ok &= identity <= 1e-12;
    verdict(
        ok,
        format!(
            "KS bound {crit:.4} [{}]; {above5}/10 above the 5% value {crit5:.4}; \
             mixture identity max rel error {identity:.1e}",
            details.join("; ")
        ),
    )
}

fn c4_analytic_vs_mc() -> Verdict {
    let n = 1_000_000u64;
    let mut ok = true;
    let mut details = Vec::new();
    for (i, (name, p)) in table1().into_iter().enumerate() {
        let d = E2EChannelDist::new(p);
        let s = SamplerParams::from_channel(&p);
        for snr in [80.0, 100.0, 120.0] {
            let cfg = NomaConfig::table1(snr);
            let (analytic, target) = if i == 0 {
                (op_rx1(&d, &cfg).unwrap().p_out, McTarget::Rx1)
            } else {
                (op_rx2(&d, &cfg).unwrap().p_out, McTarget::Rx2)
            };
            let mc = estimate_op(77 + i as u64 * 10 + snr as u64, &s, &cfg, target, n);
            // Below 1e-4 the MC count is too small for its own standard
            // error to mean anything; use the estimator's true one.
            let (se, basis) = if analytic >= 1e-4 {
                (mc.std_err, "mc")
            } else {
                ((analytic * (1.0 - analytic) / n as f64).sqrt(), "exact")
            };
            let gap = (analytic - mc.p_hat).abs();
            let within = gap
                <= 3.0 * se
                    + if basis == "exact" {
                        1.0 / n as f64
                    } else {
                        0.0
                    };
            ok &= within;
            details.push(format!(
                "{name}@{snr}dB: exact {analytic:.3e} mc {:.3e} ({} hits) |Δ|/se_{basis} = {:.2}",
                mc.p_hat,
                mc.outages,
                gap / se.max(f64::MIN_POSITIVE)
            ));
        }
    }
    verdict(ok, details.join("; "))
}

fn c5_truncation() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (_, p) in table1() {
        let d = E2EChannelDist::new(p).with_terms(10);
        for chi in chi_grid() {
            let sums = d.cdf_partial_sums(chi * p.a0 * p.h_l).unwrap();
            let (n3, n10) = (sums[2], sums[9]);
            if n10 >= 1e-6 {
                worst = worst.max((n3 - n10).abs() / n10);
                compared += 1;
            }
        }
    }
    verdict(
        worst < 0.01 && compared > 0,
        format!("max |F_3 - F_10| / F_10 = {worst:.2e} over {compared} points (reference paths)"),
    )
}

fn c6_guard() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0006);
    let [(_, p1), (_, p2)]: [(String, ChannelParams); 2] = table1().try_into().unwrap();
    let (d1, d2) = (E2EChannelDist::new(p1), E2EChannelDist::new(p2));
    let (s1, s2) = (
        SamplerParams::from_channel(&p1),
        SamplerParams::from_channel(&p2),
    );
    let mut bad = Vec::new();
    for i in 0..100 {
        let a1 = rng.random_range(0.51..0.99);
        let ratio = a1 / (1.0 - a1);
        // Every tenth config sits exactly on a1/a2 = 2^{R1} - 1.
        let extra = if i % 10 == 0 {
            0.0
        } else {
            rng.random_range(0.0..2.0)
        };
        let cfg = NomaConfig {
            a1,
            a2: 1.0 - a1,
            b1: 0.0,
            b2: 0.0,
            r1: (1.0 + ratio).log2() + extra,
            r2: rng.random_range(0.5..5.0),
            snr_db: rng.random_range(40.0..160.0),
        }
        .with_b1(rng.random_range(0.1..0.9));
        let r1 = op_rx1(&d1, &cfg).unwrap();
        let r2 = op_rx2(&d2, &cfg).unwrap();
        let m1 = estimate_op(i, &s1, &cfg, McTarget::Rx1, 2000);
        let m2 = estimate_op(i, &s2, &cfg, McTarget::Rx2, 2000);
        let exact = r1.p_out == 1.0
            && r2.p_out == 1.0
            && r1.condition_violated
            && r2.condition_violated
            && m1.p_hat == 1.0
            && m2.p_hat == 1.0;
        if !exact {
            bad.push(format!(
                "#{i}: rx1 {} rx2 {} mc {} {}",
                r1.p_out, r2.p_out, m1.p_hat, m2.p_hat
            ));
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "100/100 configs give OP = 1 exactly (analytic and MC, both receivers)".to_string()
        } else {
            format!("{} configs not exactly 1: {}", bad.len(), bad.join("; "))
        },
    )
}

/// SNR at which `op` crosses `target`, by bisection on a decreasing curve.
fn snr_at(op: &impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (-50.0, 400.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if op(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c7_asymptotics() -> Verdict {
    // Both reference paths, at their own σ_R and at the swept σ_R values,
    // plus one low-β synthetic path. All are turbulence-limited.
    let mut cases: Vec<(String, ChannelParams, Receiver)> = Vec::new();
    for (g, which) in [
        (GeometryConfig::table1_rx1(), Receiver::Rx1),
        (GeometryConfig::table1_rx2(), Receiver::Rx2),
    ] {
        for s in [None, Some(0.7), Some(0.8), Some(1.0), Some(1.3)] {
            let mut g = g.clone();
            g.rytov_sq = s.map(|x: f64| x * x);
            let label = match s {
                Some(x) => format!("{}@sigma_R={x}", which.as_str()),
                None => which.as_str().to_string(),
            };
            cases.push((label, ChannelParams::from_geometry(&g).unwrap(), which));
        }
    }
    let q = 0.8;
    let omega = 2.0 * 2.8 * q / (1.0 + q * q);
    cases.push((
        "synthetic(a=4.2,b=1.4,c=2.8)".into(),
        ChannelParams::from_shape(4.2, 1.4, omega, q, 0.5, 0.9).unwrap(),
        Receiver::Single,
    ));

    let mut ratio_ok = 0;
    let mut slope_ok = 0;
    let mut details = Vec::new();
    let total = cases.len();
    for (name, p, which) in &cases {
        let d = E2EChannelDist::new(*p);
        let m = p.alpha.min(p.beta);
        let a = d.asymptote().unwrap();
        assert_eq!(a.branch, AsymptoticBranch::TurbulenceLimited, "{name}");
        assert!(m < p.c && p.v < p.c - m, "{name}");
        let cfg = |snr: f64| {
            let mut c = NomaConfig::table1(snr);
            if *which == Receiver::Single {
                c.r1 = 1.0;
            }
            c
        };
        let exact = |snr: f64| match which {
            Receiver::Rx1 => op_rx1(&d, &cfg(snr)).unwrap().p_out,
            Receiver::Rx2 => op_rx2(&d, &cfg(snr)).unwrap().p_out,
            Receiver::Single => op_single(&d, snr, 1.0).unwrap().p_out,
        };
        let snr4 = snr_at(&exact, 1e-4);
        let asym = op_asymptotic(&d, &cfg(snr4), *which).unwrap();
        let ratio = exact(snr4) / asym.p_out;
        // Least-squares slope of log10 OP against snr/10 over the 20 dB
        // window starting 20 dB past the 1e-4 point.
        let pts: Vec<(f64, f64)> = (0..=10)
            .map(|k| {
                let snr = snr4 + 20.0 + 2.0 * k as f64;
                (snr / 10.0, exact(snr).log10())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let want = asym.diversity_order.unwrap();
        let r_ok = (0.95..=1.05).contains(&ratio);
        let s_ok = ((-slope) / want - 1.0).abs() <= 0.10;
        ratio_ok += r_ok as usize;
        slope_ok += s_ok as usize;
        details.push(format!(
            "{name}: ratio {ratio:.3}{} slope {:.3} vs {want:.3}{}",
            if r_ok { "" } else { "(out)" },
            -slope,
            if s_ok { "" } else { "(out)" }
        ));
    }
    verdict(
        ratio_ok == total && slope_ok == total,
        format!(
            "ratio in [0.95, 1.05] for {ratio_ok}/{total}, slope within 10% for {slope_ok}/{total} [{}]",
            details.join("; ")
        ),
    )
}

fn curve(rows: &[Row], receiver: &str, method: &str) -> Vec<(f64, f64, bool)> {
    rows.iter()
        .filter(|r| r.receiver == receiver && r.method == method)
        .map(|r| (r.value, r.p_out, r.condition_violated))
        .collect()
}

fn run_preset(name: &str, methods: Vec<MethodName>) -> (Vec<Row>, Vec<String>) {
    let mut s = preset(name).unwrap();
    s.methods = methods;
    let out = s.run().unwrap();
    assert!(out.failures.is_empty(), "{name}: {:?}", out.failures);
    let labels = s.families().into_iter().map(|f| f.label).collect();
    (out.rows, labels)
}

fn strictly(v: &[f64], up: bool) -> bool {
    v.windows(2)
        .all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
}

fn c8_figures() -> Verdict {
    let mut fails = Vec::new();
    let mut notes = Vec::new();

    // (a) OP ordered by σ_R at each SNR, NOMA below OMA.
    let (rows, labels) = run_preset("fig4", vec![MethodName::Analytic, MethodName::Oma]);
    let mut points = 0;
    for rx in ["rx1", "rx2"] {
        let fams: Vec<Vec<(f64, f64, bool)>> = labels
            .iter()
            .map(|l| curve(&rows, &format!("{rx}:{l}"), "analytic"))
            .collect();
        for j in 0..fams[0].len() {
            let ps: Vec<f64> = fams.iter().map(|c| c[j].1).collect();
            if !strictly(&ps, true) {
                fails.push(format!(
                    "fig4 {rx} σ_R order at {} dB (OP {:.4?})",
                    fams[0][j].0, ps
                ));
            }
            points += 1;
        }
        for l in &labels {
            let noma = curve(&rows, &format!("{rx}:{l}"), "analytic");
            let oma = curve(&rows, &format!("{rx}:{l}"), "oma");
            for (n, o) in noma.iter().zip(&oma) {
                if !(n.1 < o.1) {
                    fails.push(format!("fig4 {rx}:{l} NOMA ≥ OMA at {} dB", n.0));
                }
            }
        }
    }
    notes.push(format!("(a) {points} SNR points × 3 σ_R"));

    // (b) plateau, Rx1 decreasing, Rx2 interior minimum.
    let (rows, labels) = run_preset("fig5", vec![MethodName::Analytic]);
    for l in &labels {
        let r1 = curve(&rows, &format!("rx1:{l}"), "analytic");
        let r2 = curve(&rows, &format!("rx2:{l}"), "analytic");
        if r1.iter().chain(&r2).any(|p| p.2 && p.1 != 1.0) {
            fails.push(format!("fig5 {l}: plateau not exactly 1"));
        }
        let live1: Vec<f64> = r1.iter().filter(|p| !p.2).map(|p| p.1).collect();
        let live2: Vec<(f64, f64)> = r2.iter().filter(|p| !p.2).map(|p| (p.0, p.1)).collect();
        if live1.len() < 10 || !strictly(&live1, false) {
            fails.push(format!("fig5 {l}: Rx1 not decreasing past the guard"));
        }
        let imin = live2
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, _)| i)
            .unwrap();
        let interior = imin > 0 && imin + 1 < live2.len();
        let convex = strictly(
            &live2[..=imin].iter().map(|p| p.1).collect::<Vec<_>>(),
            false,
        ) && strictly(&live2[imin..].iter().map(|p| p.1).collect::<Vec<_>>(), true);
        if !(interior && convex) {
            fails.push(format!("fig5 {l}: Rx2 has no interior minimum"));
        } else {
            notes.push(format!("(b) {l}: Rx2 minimum at a1 = {:.3}", live2[imin].0));
        }
    }

    // (c) B1 trade-off.
    let (rows, labels) = run_preset("fig7", vec![MethodName::Analytic]);
    for l in &labels {
        let r1: Vec<f64> = curve(&rows, &format!("rx1:{l}"), "analytic")
            .iter()
            .map(|p| p.1)
            .collect();
        let r2: Vec<f64> = curve(&rows, &format!("rx2:{l}"), "analytic")
            .iter()
            .map(|p| p.1)
            .collect();
        if r1.len() < 10 || !strictly(&r1, false) || !strictly(&r2, true) {
            fails.push(format!("fig7 {l}: B1 trends wrong"));
        }
    }
    notes.push("(c) 19 B1 points × 3 SNR".into());

    // (d) sway.
    let (rows, labels) = run_preset("fig8", vec![MethodName::Analytic]);
    for l in &labels {
        for rx in ["rx1", "rx2"] {
            let c: Vec<f64> = curve(&rows, &format!("{rx}:{l}"), "analytic")
                .iter()
                .map(|p| p.1)
                .collect();
            if c.len() < 10 || !c.windows(2).all(|w| w[1] >= w[0]) {
                fails.push(format!("fig8 {rx}:{l}: OP decreases with sway"));
            }
        }
    }
    notes.push("(d) 19 sway points × 3 σ_R".into());

    verdict(
        fails.is_empty(),
        if fails.is_empty() {
            notes.join("; ")
        } else {
            fails.join("; ")
        },
    )
}

type Check = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Check; 8] = [
    (1, "normalization of f_h", c1_normalization),
    (2, "series CDF vs brute-force oracle", c2_series_vs_oracle),
    (3, "sampler KS tests and mixture identity", c3_samplers),
    (4, "analytic vs Monte Carlo outage", c4_analytic_vs_mc),
    (5, "three-term vs ten-term series", c5_truncation),
    (6, "guard conditions", c6_guard),
    (7, "high-SNR asymptote and diversity", c7_asymptotics),
    (8, "qualitative figure trends", c8_figures),
];

/// Numeric arguments select criteria by id; anything else is ignored.
fn main() {
    let start = Instant::now();
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let results: Vec<bool> = CRITERIA
        .iter()
        .filter(|(id, _, _)| only.is_empty() || only.contains(id))
        .map(|&(id, title, f)| criterion(id, title, f))
        .collect();
    let passed = results.iter().filter(|&&r| r).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1} s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
