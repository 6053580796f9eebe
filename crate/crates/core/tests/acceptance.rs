//! Acceptance checks. Each test prints one `PASS` or `FAIL` line; run with
//! `--nocapture` to see them all.

use std::time::Instant;

use delayfront::characteristic::{c_kappa_curve, c_sharp, count_zeros_rectangle, kappa_roots};
use delayfront::greens::{default_step, default_support, n_kernel, psi_kernel};
use delayfront::params::TOY_SLOPE_KAPPA;
use delayfront::pde_sim::{run, SimConfig, SimResult};
use delayfront::speed_curves::{c_bound_curve, h_star, h_upper};
use delayfront::toy_front::{
    build_profile, limit_quantities, minimal_speed, nondelay_minimal_speed,
    oscillation_threshold, pushed_to_pulled_delay, ratio_t, t1, target_ratio,
};
use delayfront::tolerances::PROFILE_RESIDUAL;
use delayfront::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const K: f64 = 1.2;

/// `(h, c#, c*, c_ns)` at `k = 1.2`.
const TABLE: [(f64, f64, f64, f64); 12] = [
    (0.5, 0.5720, 0.6562, 0.6377),
    (1.0, 0.4270, 0.4770, 0.4662),
    (1.5, 0.3420, 0.3779, 0.3746),
    (2.0, 0.2860, 0.3138, 0.3165),
    (2.5, 0.2458, 0.2687, 0.2688),
    (3.0, 0.2157, 0.2351, 0.2353),
    (3.5, 0.1922, 0.2091, 0.2112),
    (4.0, 0.1733, 0.1883, 0.1892),
    (4.5, 0.1579, 0.1713, 0.1727),
    (5.0, 0.1450, 0.1571, 0.1572),
    (5.5, 0.1340, 0.1452, 0.1461),
    (6.0, 0.1246, 0.1348, 0.1346),
];

fn report(id: u32, name: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("C{id} {verdict} {name}: {detail}");
    assert!(ok, "C{id} {name}: {detail}");
}

fn toy() -> ModelParams {
    ModelParams::toy(K).unwrap()
}

/// Draws `n` points of `D_kappa` with `h` in `(0.05, 3]` and `c` below
/// `min(c_kappa(h), 4)`.
fn region_samples(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hs = h_star(TOY_SLOPE_KAPPA).unwrap();
    (0..n)
        .map(|_| {
            let h = rng.gen_range(0.05..=3.0);
            let cap = if h <= hs {
                4.0
            } else {
                c_kappa_curve(h, &toy()).unwrap().min(4.0)
            };
            (h, cap * rng.gen_range(0.02..0.98))
        })
        .collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn c1_speed_table() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (h, sharp, star, _) in TABLE {
        let cs = c_sharp(h, &toy()).unwrap().c;
        let m = minimal_speed(h, K).unwrap();
        worst = worst.max((cs - sharp).abs()).max((m.c_star - star).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "speed table",
        worst <= 5e-4 && secs < 5.0,
        format!("max deviation {worst:.2e} over 24 values in {secs:.2} s"),
    );
}

#[test]
fn c2_simulated_speeds() {
    let start = Instant::now();
    let runs: Vec<(f64, f64, SimResult)> = TABLE
        .par_iter()
        .map(|&(h, _, _, ns)| {
            let cfg = SimConfig {
                h,
                k: K,
                ..SimConfig::default()
            };
            (h, ns, run(&cfg).unwrap())
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let worst = runs
        .iter()
        .map(|(_, ns, r)| (r.c_ns - ns).abs())
        .fold(0.0, f64::max);
    let detail: Vec<String> = runs
        .iter()
        .map(|(h, _, r)| format!("h={h}:{:.4}", r.c_ns))
        .collect();
    report(
        2,
        "simulated speeds",
        worst <= 0.02 && secs < 600.0,
        format!("max |c_ns - table| {worst:.4} in {secs:.1} s ({})", detail.join(" ")),
    );
}

#[test]
fn c3_limit_quantities() {
    let cases = [
        (1.5, [0.7088, 1.3856, 0.5115, 1.1031, 0.4637]),
        (1.2, [0.3388, 0.8901, 0.3806, 1.1639, 0.3269]),
    ];
    let mut worst: f64 = 0.0;
    for (k, want) in cases {
        let q = limit_quantities(k).unwrap();
        let got = [q.w_plus, q.rho, q.lambda_inf, q.mu_inf, q.t1_inf];
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    report(3, "limit quantities", worst <= 5e-4, format!("max deviation {worst:.2e}"));
}

#[test]
fn c4_transitions() {
    let hp15 = pushed_to_pulled_delay(1.5).unwrap();
    let hp12 = pushed_to_pulled_delay(1.2).unwrap();
    let hosc = oscillation_threshold(1.2).unwrap();
    let t14 = t1(4.0, 1.2).unwrap();
    let ok = (hp15 - 0.3379).abs() <= 1e-3
        && hp12 == f64::INFINITY
        && hosc.is_some_and(|v| (v - 3.25).abs() <= 0.02)
        && (t14 - 0.3141).abs() <= 5e-4;
    report(
        4,
        "transitions",
        ok,
        format!("h_p(1.5) = {hp15:.6}, h_p(1.2) = {hp12}, h_osc(1.2) = {hosc:?}, T1(4) = {t14:.6}"),
    );
}

/// `T(c, 0)` from the quadratic roots and its root by bisection.
fn nondelay_ratio_root(k: f64) -> f64 {
    let t = |c: f64| {
        let l1 = 0.5 * (c + (c * c + 4.0 - 4.0 * k).sqrt());
        let mu1 = 0.5 * (c + (c * c + 8.0).sqrt());
        l1 / mu1 - target_ratio(k)
    };
    let (mut lo, mut hi) = (2.0 * (k - 1.0).sqrt(), 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn c5_closed_form_consistency() {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let k = 1.0 + (5.0 / 3.0 - 1.0) * (i as f64 + 0.5) / 50.0;
        let closed = nondelay_minimal_speed(k).unwrap().0;
        worst = worst
            .max((closed - nondelay_ratio_root(k)).abs())
            .max((closed - minimal_speed(0.0, k).unwrap().c_star).abs());
    }
    report(5, "closed-form consistency", worst <= 1e-10, format!("max deviation {worst:.2e}"));
}

#[test]
fn c6_kernel_properties() {
    let params = toy();
    let mut failures = Vec::new();
    let (mut worst_jump, mut worst_int): (f64, f64) = (0.0, 0.0);
    for (h, c) in region_samples(100, 6) {
        let support = default_support(c, h, &params).unwrap();
        let step = default_step(c, h);
        let psi = psi_kernel(c, h, &params, support, step);
        let n = n_kernel(c, h, &params, support, step);
        match (psi, n) {
            (Ok(psi), Ok(n)) => {
                // Far tails may underflow to -0, which keeps the sign.
                let negative = psi.values.iter().all(|v| v.is_sign_negative())
                    && psi.left_at_zero < 0.0
                    && n.values.iter().all(|v| v.is_sign_negative());
                if !negative {
                    failures.push(format!("sign at ({h:.3}, {c:.3})"));
                }
                let z = psi.zero_index;
                worst_jump = worst_jump.max((psi.values[z] - psi.left_at_zero - 1.0).abs());
                worst_int = worst_int.max((n.integral() - 1.0 / (-1.0 - 1.0)).abs());
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("({h:.3}, {c:.3}): {e}")),
        }
    }
    report(
        6,
        "kernel properties",
        failures.is_empty() && worst_jump <= 1e-12 && worst_int <= 1e-4,
        format!(
            "jump error {worst_jump:.1e}, normalization error {worst_int:.1e}, failures {failures:?}"
        ),
    );
}

#[test]
fn c7_root_dominance() {
    let mut counts = Vec::new();
    for (h, c) in region_samples(100, 7) {
        let r = kappa_roots(c, h, TOY_SLOPE_KAPPA).unwrap();
        let mu3 = r.mu3.expect("three real roots in D_kappa");
        let n = count_zeros_rectangle(c, h, TOY_SLOPE_KAPPA, mu3 + 1e-4, r.mu1 + 1.0, 50.0).unwrap();
        counts.push(n);
    }
    let wrong = counts.iter().filter(|&&n| n != 3).count();
    let mut seen = counts.clone();
    seen.sort_unstable();
    seen.dedup();
    report(
        7,
        "root dominance",
        wrong == 0,
        format!("{wrong} of 100 counts differ from 3; counts seen {seen:?}"),
    );
}

#[test]
fn c8_profile_structure() {
    let mut failures = Vec::new();
    let mut built = 0;
    let hs: Vec<f64> = (0..=12).map(|i| 0.5 * i as f64).collect();
    for h in hs {
        let star = minimal_speed(h, K).unwrap().c_star;
        for (c, pushed) in [(star, true), (1.1 * star, false)] {
            let p = match build_profile(c, h, K, 60.0, 0.01) {
                Ok(p) => p,
                Err(e) => {
                    failures.push(format!("(h={h}, c={c:.4}): {e}"));
                    continue;
                }
            };
            built += 1;
            let mut issues = Vec::new();
            if p.max_phi() >= 3.0 {
                issues.push("phi >= 3");
            }
            if p.numeric_segment[1..].iter().any(|s| s.phi <= 1.0) {
                issues.push("phi <= 1 after junction");
            }
            if p.junction_mismatch > 10.0 * p.grid_step * p.grid_step {
                issues.push("junction mismatch");
            }
            if p.residual_max > PROFILE_RESIDUAL {
                issues.push("residual");
            }
            if (p.eval(p.terminal_time) - 2.0).abs() > 1e-3 {
                issues.push("not settled");
            }
            let want = if pushed { p.lambda1 } else { p.lambda2 };
            if (p.tail_exponent() - want).abs() > 1e-6 {
                issues.push("tail exponent");
            }
            if !issues.is_empty() {
                failures.push(format!("(h={h}, c={c:.4}): {issues:?}"));
            }
        }
    }
    report(
        8,
        "profile structure",
        failures.is_empty(),
        format!("{built} profiles built; failures {failures:?}"),
    );
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn c9_monotonicity() {
    let params = toy();
    let hgrid = grid(0.0, 6.0, 200);
    let sharp: Vec<f64> = hgrid.iter().map(|&h| c_sharp(h, &params).unwrap().c).collect();
    let star: Vec<f64> = hgrid.iter().map(|&h| minimal_speed(h, K).unwrap().c_star).collect();
    let hs = h_star(TOY_SLOPE_KAPPA).unwrap();
    let bgrid = grid(hs + 1e-3, h_upper(TOY_SLOPE_KAPPA).unwrap(), 200);
    let bound: Vec<f64> = bgrid
        .iter()
        .map(|&h| c_bound_curve(h, TOY_SLOPE_KAPPA).unwrap())
        .collect();
    // T in c at h = 1 above c#(1), and in h at c = 1 > c#(0).
    let c_lo = c_sharp(1.0, &params).unwrap().c * 1.001;
    let t_c: Vec<f64> = grid(c_lo, 3.0, 200)
        .iter()
        .map(|&c| ratio_t(c, 1.0, K).unwrap())
        .collect();
    let t_h: Vec<f64> = grid(0.0, 3.0, 200)
        .iter()
        .map(|&h| ratio_t(1.0, h, K).unwrap())
        .collect();
    let checks = [
        ("c#", strictly_decreasing(&sharp)),
        ("c*", strictly_decreasing(&star)),
        ("c_bound", strictly_decreasing(&bound)),
        ("T in c", strictly_increasing(&t_c)),
        ("T in h", strictly_increasing(&t_h)),
    ];
    let bad: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    report(9, "monotonicity", bad.is_empty(), format!("failing curves {bad:?}"));
}

#[test]
fn c10_late_time_shape() {
    let h = 0.5;
    let r = run(&SimConfig {
        h,
        k: K,
        ..SimConfig::default()
    })
    .unwrap();
    let c = minimal_speed(h, K).unwrap().c_star;
    let prof = build_profile(c, h, K, 60.0, 0.01).unwrap();
    let x_level = r.level_trajectory.last().unwrap().1;
    let dev = (0..r.final_u.len())
        .map(|i| (r.final_u[i] - prof.eval(r.config.x(i) - x_level - c * h)).abs())
        .fold(0.0, f64::max);
    report(
        10,
        "late-time shape",
        dev <= 0.05,
        format!("max deviation {dev:.4} at t = {:.1}", r.final_time),
    );
}
