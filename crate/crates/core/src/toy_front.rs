//! Fronts of the piecewise-linear birth law `g(u) = k u` for `u < 1`,
//! `g(u) = 4 - u` for `u >= 1`.
//!
//! For this law the profile is explicit up to the junction `phi(-ch) = 1`:
//!
//! ```text
//! phi(t) = p e^{lambda2 (t + ch)} + (1 - p) e^{lambda1 (t + ch)},  t <= 0,
//! ```
//!
//! and beyond it solves `phi'' - c phi' - phi + 4 - phi(t - ch) = 0`.

use std::io::{self, Write};

use serde::Serialize;

use crate::characteristic::{double_root_speed, kappa_roots, positive_roots, positive_roots_scaled};
use crate::error::{Error, Result};
use crate::output::sig6;
use crate::params::{check_toy_slope, TOY_KAPPA, TOY_SLOPE_KAPPA, TOY_SUP_SLOPE};
use crate::solve::bisect;
use crate::speed_curves::{h_star, Regime};
use crate::tolerances::{
    BISECTION_WIDTH, CRITICAL_GAP, DELAY_SEARCH_CAP, DELAY_SEARCH_WIDTH, PROFILE_RESIDUAL,
    PROFILE_SETTLE, ROOT_RESIDUAL, UNSTABLE_MODE_CAP,
};

/// Amplitudes this close below zero are rounding noise at the pushed speed.
const AMPLITUDE_FLOOR: f64 = 1e-9;
/// Grid spacing of the delay scans for `h_p` and `h_osc`.
const DELAY_SCAN_STEP: f64 = 0.05;

/// `(3 - k) / 4`, the value of `lambda1 / mu1` at a pushed minimal speed.
pub fn target_ratio(k: f64) -> f64 {
    (3.0 - k) / 4.0
}

/// Minimal speed without delay.
pub fn nondelay_minimal_speed(k: f64) -> Result<(f64, Regime)> {
    check_toy_slope(k)?;
    if k <= 5.0 / 3.0 {
        Ok(((1.0 + k) / (2.0 * (3.0 - k)).sqrt(), Regime::Pushed))
    } else {
        Ok((2.0 * (k - 1.0).sqrt(), Regime::Pulled))
    }
}

/// Roots `(lambda1, lambda2, mu1)` at `(c, h)`; at `c = c#(h)` up to rounding
/// the double root is used.
fn front_roots(c: f64, h: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_toy_slope(k)?;
    let zero = positive_roots(c, h, k)?;
    let (l1, l2) = if zero.exists {
        (zero.lambda1, zero.lambda2)
    } else {
        let d = double_root_speed(h, k)?;
        if (c - d.c).abs() > 1e-12 * d.c {
            return Err(Error::domain(format!(
                "speed {c} is below c#({h}) = {}",
                d.c
            )));
        }
        (d.z, d.z)
    };
    let mu1 = kappa_roots(c, h, TOY_SLOPE_KAPPA)?.mu1;
    Ok((l1, l2, mu1))
}

/// `T(c, h) = lambda1 / mu1`.
pub fn ratio_t(c: f64, h: f64, k: f64) -> Result<f64> {
    let (l1, _, mu1) = front_roots(c, h, k)?;
    Ok(l1 / mu1)
}

/// `T1(h) = T(c#(h), h)`.
pub fn t1(h: f64, k: f64) -> Result<f64> {
    check_toy_slope(k)?;
    let d = double_root_speed(h, k)?;
    let mu1 = kappa_roots(d.c, h, TOY_SLOPE_KAPPA)?.mu1;
    Ok(d.z / mu1)
}

/// `T2(h) = T(c_kappa(h), h)` for `h > h*`; `None` where `c_kappa(h) < c#(h)`.
pub fn t2(h: f64, k: f64) -> Result<Option<f64>> {
    check_toy_slope(k)?;
    let params = crate::params::ModelParams::toy(k)?;
    let ck = crate::characteristic::c_kappa_curve(h, &params)?;
    let zero = positive_roots(ck, h, k)?;
    if !zero.exists {
        return Ok(None);
    }
    let mu1 = kappa_roots(ck, h, TOY_SLOPE_KAPPA)?.mu1;
    Ok(Some(zero.lambda1 / mu1))
}

/// Minimal speed together with the linear speed and the regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalSpeed {
    pub c_star: f64,
    pub c_sharp: f64,
    pub regime: Regime,
}

/// Minimal speed `c*(h)`: the root of `T(c) = (3 - k)/4` above `c#(h)` when
/// `T(c#) < (3 - k)/4`, otherwise `c#(h)`.
pub fn minimal_speed(h: f64, k: f64) -> Result<MinimalSpeed> {
    check_toy_slope(k)?;
    let d = double_root_speed(h, k)?;
    let target = target_ratio(k);
    let mu1 = kappa_roots(d.c, h, TOY_SLOPE_KAPPA)?.mu1;
    if d.z / mu1 >= target {
        return Ok(MinimalSpeed {
            c_star: d.c,
            c_sharp: d.c,
            regime: Regime::Pulled,
        });
    }
    let f = |c: f64| {
        if c == d.c {
            d.z / mu1 - target
        } else {
            ratio_t(c, h, k).map_or(f64::NAN, |t| t - target)
        }
    };
    let mut hi = 2.0 * d.c;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::convergence("minimal speed bracket overflow"));
        }
    }
    let c = bisect(f, d.c, hi, 1e-15 * hi)?;
    Ok(MinimalSpeed {
        c_star: c,
        c_sharp: d.c,
        regime: Regime::Pushed,
    })
}

/// Upper bound for the minimal speed: the double-root speed for the slope
/// `sup g(u)/u = 3`.
pub fn upper_speed_bound(h: f64) -> Result<f64> {
    Ok(double_root_speed(h, TOY_SUP_SLOPE)?.c)
}

fn amplitude_from(l1: f64, l2: f64, mu1: f64, k: f64) -> Result<f64> {
    if l1 - l2 < CRITICAL_GAP {
        return Err(Error::domain(format!(
            "speed too close to critical: lambda1 - lambda2 = {:e}",
            l1 - l2
        )));
    }
    let p = (4.0 * l1 / mu1 - (3.0 - k)) / (1.0 + k) * (mu1 - l2) / (l1 - l2);
    if p < -AMPLITUDE_FLOOR {
        return Err(Error::no_wavefront(format!(
            "amplitude {p:e} is negative: speed below minimal"
        )));
    }
    // Values within the floor are rounding residue of the root c*.
    Ok(if p.abs() <= AMPLITUDE_FLOOR { 0.0 } else { p })
}

/// Amplitude `p` of the slow mode in the tail.
pub fn amplitude_p(c: f64, h: f64, k: f64) -> Result<f64> {
    let (l1, l2, mu1) = front_roots(c, h, k)?;
    amplitude_from(l1, l2, mu1, k)
}

/// `phi'(-ch)` from the closed form
/// `(1 + k) phi'(-ch) = (3 - k)(mu1 - lambda1 - lambda2) + 4 lambda1 lambda2 / mu1`.
pub fn junction_derivative(c: f64, h: f64, k: f64) -> Result<f64> {
    let (l1, l2, mu1) = front_roots(c, h, k)?;
    amplitude_from(l1, l2, mu1, k)?;
    Ok(((3.0 - k) * (mu1 - l1 - l2) + 4.0 * l1 * l2 / mu1) / (1.0 + k))
}

/// Large-delay limits of `T1` and `T2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitQuantities {
    pub w_plus: f64,
    pub rho: f64,
    pub lambda_inf: f64,
    pub mu_inf: f64,
    pub t1_inf: f64,
    pub w_minus: f64,
    pub rho_hat: f64,
    /// Larger positive root of `l^2 - 1 + k e^{-rho_hat l}`, if any.
    pub lambda_hat_inf: Option<f64>,
    pub mu_hat_inf: f64,
    pub t2_inf: Option<f64>,
}

fn polished_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let x = bisect(&f, lo, hi, BISECTION_WIDTH)?;
    if f(x).abs() > ROOT_RESIDUAL * (1.0 + x.abs()) {
        return Err(Error::convergence(format!(
            "limit equation residual {:e} at {x}",
            f(x)
        )));
    }
    Ok(x)
}

/// Positive root of `mu^2 - 1 = e^{-mu r}`.
fn unit_mode(r: f64) -> Result<f64> {
    polished_root(|m| m * m - 1.0 - (-m * r).exp(), 0.0, 2.0)
}

/// Limit quantities of the ratios `T1(h)` and `T2(h)` as `h -> infinity`.
pub fn limit_quantities(k: f64) -> Result<LimitQuantities> {
    check_toy_slope(k)?;
    let w_plus = polished_root(|w| (-w).exp() * (2.0 + w) - 2.0 / k, 0.0, 50.0)?;
    let rho = (w_plus * (2.0 + w_plus)).sqrt();
    let lambda_inf = (1.0 + 1.0 / (rho * rho)).sqrt() - 1.0 / rho;
    let mu_inf = unit_mode(rho)?;
    let w_minus = polished_root(|w| (-w).exp() * (2.0 + w) + 2.0, -50.0, -1.0)?;
    let rho_hat = (w_minus * (2.0 + w_minus)).sqrt();
    let hat = positive_roots_scaled(0.0, rho_hat, k)?;
    let lambda_hat_inf = hat.exists.then_some(hat.lambda1);
    let mu_hat_inf = unit_mode(rho_hat)?;
    Ok(LimitQuantities {
        w_plus,
        rho,
        lambda_inf,
        mu_inf,
        t1_inf: lambda_inf / mu_inf,
        w_minus,
        rho_hat,
        lambda_hat_inf,
        mu_hat_inf,
        t2_inf: lambda_hat_inf.map(|l| l / mu_hat_inf),
    })
}

/// First grid delay in `[start, cap]` where `pred` holds, with its predecessor.
fn scan_delays<P>(start: f64, mut pred: P) -> Result<Option<(f64, f64)>>
where
    P: FnMut(f64) -> Result<Option<bool>>,
{
    let mut prev = start;
    let mut i = 1;
    loop {
        let h = (start + i as f64 * DELAY_SCAN_STEP).min(DELAY_SEARCH_CAP);
        match pred(h)? {
            Some(true) => return Ok(Some((prev, h))),
            Some(false) => {}
            None => return Ok(None),
        }
        if h >= DELAY_SEARCH_CAP {
            return Ok(None);
        }
        prev = h;
        i += 1;
    }
}

/// Delay `h_p(k)` beyond which the minimal front is pulled, or infinity.
pub fn pushed_to_pulled_delay(k: f64) -> Result<f64> {
    if !(k > 1.0 && k < 5.0 / 3.0) {
        return Err(Error::domain(format!("k must lie in (1, 5/3), got {k}")));
    }
    let target = target_ratio(k);
    if limit_quantities(k)?.t1_inf < target {
        return Ok(f64::INFINITY);
    }
    let Some((lo, hi)) = scan_delays(0.0, |h| Ok(Some(t1(h, k)? >= target)))? else {
        return Ok(f64::INFINITY);
    };
    bisect(
        |h| t1(h, k).map_or(f64::NAN, |t| t - target),
        lo,
        hi,
        DELAY_SEARCH_WIDTH,
    )
}

/// Delay `h_osc(k)` beyond which the minimal front oscillates, found from
/// `T2(h) = (3 - k)/4`; `None` if `T2` does not reach the target before it
/// ceases to exist or before the search cap.
pub fn oscillation_threshold(k: f64) -> Result<Option<f64>> {
    if !(k > 1.0 && k < 5.0 / 3.0) {
        return Err(Error::domain(format!("k must lie in (1, 5/3), got {k}")));
    }
    let target = target_ratio(k);
    let start = h_star(TOY_SLOPE_KAPPA)? + 0.01;
    let found = scan_delays(start, |h| Ok(t2(h, k)?.map(|t| t <= target)))?;
    let Some((lo, hi)) = found else {
        return Ok(None);
    };
    let h = bisect(
        |h| match t2(h, k) {
            Ok(Some(t)) => t - target,
            _ => f64::NAN,
        },
        lo,
        hi,
        DELAY_SEARCH_WIDTH,
    )?;
    Ok(Some(h))
}

/// Shape of the approach to the positive state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Monotone,
    Oscillatory,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Monotone => "monotone",
            Classification::Oscillatory => "oscillatory",
        }
    }
}

/// One profile sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
}

/// Front profile normalized by `phi(-ch) = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct WaveProfile {
    pub c: f64,
    pub h: f64,
    pub k: f64,
    pub p: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub junction_time: f64,
    pub grid_step: f64,
    /// Integrated samples on `[0, terminal_time]`.
    pub numeric_segment: Vec<ProfileSample>,
    pub terminal_time: f64,
    pub residual_max: f64,
    /// `|phi'(0+) - phi'(0-)|` from a one-sided difference of the samples.
    pub junction_mismatch: f64,
    /// Earliest time after which `|phi - 2| <= PROFILE_SETTLE` on the segment.
    pub settle_time: f64,
    /// Sign changes of `phi - 2` on the segment.
    pub sign_changes: usize,
    pub classification: Classification,
}

/// Header fields of an exported profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileHeader {
    pub c: f64,
    pub h: f64,
    pub k: f64,
    pub p: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub classification: Classification,
    pub residual_max: f64,
}

fn hermite(t: f64, a: &ProfileSample, b: &ProfileSample) -> f64 {
    let d = b.t - a.t;
    let s = (t - a.t) / d;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.phi
        + (s3 - 2.0 * s2 + s) * d * a.dphi
        + (-2.0 * s3 + 3.0 * s2) * b.phi
        + (s3 - s2) * d * b.dphi
}

impl WaveProfile {
    /// Analytic tail `(phi, phi')` for `t <= 0`.
    pub fn tail(&self, t: f64) -> (f64, f64) {
        tail_at(t + self.c * self.h, self.p, self.lambda1, self.lambda2)
    }

    /// `ln phi(t)` on the tail, accurate far to the left.
    pub fn log_tail(&self, t: f64) -> f64 {
        let s = t + self.c * self.h;
        if self.p == 0.0 {
            return self.lambda1 * s;
        }
        let r = (1.0 - self.p) / self.p * ((self.lambda1 - self.lambda2) * s).exp();
        self.lambda2 * s + self.p.ln() + r.ln_1p()
    }

    /// Profile value; beyond the integrated segment the last sample is held.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.tail(t).0;
        }
        let seg = &self.numeric_segment;
        let step = seg[1].t - seg[0].t;
        let j = (t / step).floor() as usize;
        if j + 1 >= seg.len() {
            return seg[seg.len() - 1].phi;
        }
        hermite(t, &seg[j], &seg[j + 1])
    }

    /// Decay exponent of the tail from a least-squares fit of `ln phi` over a
    /// window of length 10 placed where the faster mode is below `1e-8` of
    /// the slower one.
    pub fn tail_exponent(&self) -> f64 {
        let ch = self.c * self.h;
        let mut right = -ch;
        if self.p > 0.0 && self.p < 1.0 {
            let ratio = (1.0 - self.p) / self.p;
            let gap = self.lambda1 - self.lambda2;
            let s = (1e-8 / ratio).ln() / gap;
            right = right.min(s - ch);
        }
        let n = 201;
        let ts: Vec<f64> = (0..n)
            .map(|i| right - 10.0 + 10.0 * i as f64 / (n - 1) as f64)
            .collect();
        let ys: Vec<f64> = ts.iter().map(|&t| self.log_tail(t)).collect();
        least_squares_slope(&ts, &ys)
    }

    /// Largest sampled value on the integrated segment.
    pub fn max_phi(&self) -> f64 {
        self.numeric_segment
            .iter()
            .map(|s| s.phi)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            c: self.c,
            h: self.h,
            k: self.k,
            p: self.p,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            classification: self.classification,
            residual_max: self.residual_max,
        }
    }

    /// Writes `t,phi,dphi` for the tail on `[-ch - tail_span, 0)` at the
    /// integration step, then the integrated segment.
    pub fn write_csv<W: Write>(&self, tail_span: f64, mut w: W) -> io::Result<()> {
        writeln!(w, "t,phi,dphi")?;
        let step = self.numeric_segment[1].t;
        let t0 = -self.c * self.h - tail_span;
        let n = (-t0 / step).ceil() as usize;
        for i in (1..=n).rev() {
            let t = -(i as f64) * step;
            let (phi, dphi) = self.tail(t);
            writeln!(w, "{},{},{}", sig6(t), sig6(phi), sig6(dphi))?;
        }
        for s in &self.numeric_segment {
            writeln!(w, "{},{},{}", sig6(s.t), sig6(s.phi), sig6(s.dphi))?;
        }
        Ok(())
    }
}

fn tail_at(s: f64, p: f64, l1: f64, l2: f64) -> (f64, f64) {
    let a = p * (l2 * s).exp();
    let b = (1.0 - p) * (l1 * s).exp();
    (a + b, l2 * a + l1 * b)
}

pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Builds the front profile at speed `c >= c*(h)`.
///
/// The tail is analytic. For `t >= 0` the continuation equation is integrated
/// by the method of steps with classical RK4 and step `ch/m <= grid_step`,
/// reading delayed values from the tail or by cubic Hermite interpolation of
/// the stored samples. Integration stops at `t_max` or once rounding noise in
/// the unstable mode `e^{mu1 t}` could reach `1e-8`.
pub fn build_profile(c: f64, h: f64, k: f64, t_max: f64, grid_step: f64) -> Result<WaveProfile> {
    check_toy_slope(k)?;
    if !(c > 0.0 && c.is_finite() && h >= 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("need c > 0 and h >= 0, got c = {c}, h = {h}")));
    }
    if !(t_max > 0.0 && grid_step > 0.0 && t_max.is_finite()) {
        return Err(Error::domain("t_max and grid_step must be positive"));
    }
    let ms = minimal_speed(h, k)?;
    if c < ms.c_star * (1.0 - 1e-12) {
        return Err(Error::no_wavefront(format!(
            "speed {c} is below the minimal speed {}",
            ms.c_star
        )));
    }
    let (l1, l2, mu1) = front_roots(c, h, k)?;
    let p = amplitude_from(l1, l2, mu1, k)?;

    let ch = c * h;
    let step_cap = grid_step.min(1e-3 * (1.0 / c).max(1.0));
    let (m, step) = if ch > 0.0 {
        let m = (ch / step_cap).ceil().max(1.0) as usize;
        (m, ch / m as f64)
    } else {
        (0, step_cap)
    };
    let t_cap = (UNSTABLE_MODE_CAP / f64::EPSILON).ln() / mu1;
    let t_stop = t_max.min(t_cap);
    let n = (t_stop / step).ceil().max(4.0) as usize;

    let tail = |t: f64| tail_at(t + ch, p, l1, l2);
    let (phi0, dphi0) = tail(0.0);
    let mut seg = Vec::with_capacity(n + 1);
    seg.push(ProfileSample {
        t: 0.0,
        phi: phi0,
        dphi: dphi0,
    });

    // phi(t - ch) while stepping from sample i.
    let delayed = |seg: &[ProfileSample], t: f64, phi_now: f64| -> f64 {
        if m == 0 {
            return phi_now;
        }
        let td = t - ch;
        if td <= 0.0 {
            return tail(td).0;
        }
        let j = ((td / step).floor() as usize).min(seg.len() - 2);
        hermite(td, &seg[j], &seg[j + 1])
    };
    let rhs = |phi: f64, dphi: f64, lag: f64| (dphi, c * dphi + phi - 4.0 + lag);

    for i in 0..n {
        let t = i as f64 * step;
        let y = seg[i];
        let lag0 = delayed(&seg, t, y.phi);
        let k1 = rhs(y.phi, y.dphi, lag0);
        let (p2, d2) = (y.phi + 0.5 * step * k1.0, y.dphi + 0.5 * step * k1.1);
        let lag_mid = delayed(&seg, t + 0.5 * step, p2);
        let k2 = rhs(p2, d2, lag_mid);
        let (p3, d3) = (y.phi + 0.5 * step * k2.0, y.dphi + 0.5 * step * k2.1);
        let lag_mid3 = if m == 0 { p3 } else { lag_mid };
        let k3 = rhs(p3, d3, lag_mid3);
        let (p4, d4) = (y.phi + step * k3.0, y.dphi + step * k3.1);
        let lag1 = delayed(&seg, t + step, p4);
        let k4 = rhs(p4, d4, lag1);
        let phi = y.phi + step / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let dphi = y.dphi + step / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(phi.is_finite() && dphi.is_finite()) {
            return Err(Error::Instability(format!("profile diverged at t = {t}")));
        }
        seg.push(ProfileSample {
            t: (i + 1) as f64 * step,
            phi,
            dphi,
        });
    }

    for s in &seg {
        if s.phi >= 3.0 {
            return Err(Error::accuracy(format!(
                "profile reaches {} >= 3 at t = {}",
                s.phi, s.t
            )));
        }
        if s.phi <= 1.0 && s.t > 0.0 {
            return Err(Error::accuracy(format!(
                "profile drops to {} <= 1 at t = {} after the junction",
                s.phi, s.t
            )));
        }
    }

    let lag_at = |i: usize| -> f64 {
        if m == 0 {
            seg[i].phi
        } else if i >= m {
            seg[i - m].phi
        } else {
            tail(seg[i].t - ch).0
        }
    };
    let mut residual_max: f64 = 0.0;
    for i in 2..n - 1 {
        let d2 = (8.0 * (seg[i + 1].dphi - seg[i - 1].dphi) - seg[i + 2].dphi + seg[i - 2].dphi)
            / (12.0 * step);
        let r = d2 - c * seg[i].dphi - seg[i].phi + 4.0 - lag_at(i);
        residual_max = residual_max.max(r.abs() / (1.0 + seg[i].phi.abs()));
    }
    if residual_max > PROFILE_RESIDUAL {
        return Err(Error::accuracy(format!(
            "profile residual {residual_max:e} exceeds {PROFILE_RESIDUAL:e}; reduce grid_step"
        )));
    }

    let one_sided = (-3.0 * seg[0].phi + 4.0 * seg[1].phi - seg[2].phi) / (2.0 * step);
    let junction_mismatch = (one_sided - dphi0).abs();

    let last = seg[n].phi;
    if (last - TOY_KAPPA).abs() > PROFILE_SETTLE {
        let hint = if t_cap < t_max {
            "rounding growth along e^{mu1 t} bounds the integration window"
        } else {
            "increase t_max"
        };
        return Err(Error::accuracy(format!(
            "profile at t = {} is {last}, not within {PROFILE_SETTLE} of 2; {hint}",
            seg[n].t
        )));
    }
    let settle_time = seg
        .iter()
        .rposition(|s| (s.phi - TOY_KAPPA).abs() > PROFILE_SETTLE)
        .map_or(0.0, |i| seg[i + 1].t);

    let mut sign_changes = 0;
    let mut last_sign = 0.0;
    for s in &seg {
        let d = s.phi - TOY_KAPPA;
        if d == 0.0 {
            continue;
        }
        if last_sign != 0.0 && d.signum() != last_sign {
            sign_changes += 1;
        }
        last_sign = d.signum();
    }
    let classification = if sign_changes > 1 {
        Classification::Oscillatory
    } else {
        Classification::Monotone
    };

    Ok(WaveProfile {
        c,
        h,
        k,
        p,
        lambda1: l1,
        lambda2: l2,
        mu1,
        junction_time: -ch,
        grid_step: step,
        terminal_time: seg[n].t,
        numeric_segment: seg,
        residual_max,
        junction_mismatch,
        settle_time,
        sign_changes,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TABLE_STAR: [(f64, f64); 12] = [
        (0.5, 0.6562),
        (1.0, 0.4770),
        (1.5, 0.3779),
        (2.0, 0.3138),
        (2.5, 0.2687),
        (3.0, 0.2351),
        (3.5, 0.2091),
        (4.0, 0.1883),
        (4.5, 0.1713),
        (5.0, 0.1571),
        (5.5, 0.1452),
        (6.0, 0.1348),
    ];

    #[test]
    fn nondelay_speeds() {
        let (c, r) = nondelay_minimal_speed(1.2).unwrap();
        assert_abs_diff_eq!(c, 1.15950, epsilon = 5e-6);
        assert_eq!(r, Regime::Pushed);
        let k = 5.0 / 3.0;
        let (c, _) = nondelay_minimal_speed(k).unwrap();
        assert_abs_diff_eq!(c, 2.0 * (k - 1.0_f64).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(c, 1.63299, epsilon = 5e-6);
        assert_eq!(nondelay_minimal_speed(2.0).unwrap(), (2.0, Regime::Pulled));
        assert!(nondelay_minimal_speed(3.0).is_err());
        assert!(nondelay_minimal_speed(1.0).is_err());
    }

    #[test]
    fn ratio_values() {
        let c0 = 2.2 / (3.6_f64).sqrt();
        assert_abs_diff_eq!(ratio_t(c0, 0.0, 1.2).unwrap(), 0.45, epsilon = 1e-12);
        let cs = double_root_speed(4.0, 1.2).unwrap().c;
        assert_abs_diff_eq!(ratio_t(cs, 4.0, 1.2).unwrap(), 0.3141, epsilon = 1e-4);
        let mut last = 0.0;
        for c in [1.0, 3.0, 10.0, 30.0] {
            let t = ratio_t(c, 0.01, 1.2).unwrap();
            assert!(t > last && t < 1.0);
            last = t;
        }
        assert!(last > 0.999);
        assert!(matches!(ratio_t(0.5 * cs, 4.0, 1.2), Err(Error::Domain(_))));
    }

    #[test]
    fn minimal_speed_table() {
        for (h, c) in TABLE_STAR {
            let m = minimal_speed(h, 1.2).unwrap();
            assert_eq!(m.regime, Regime::Pushed);
            assert!((m.c_star - c).abs() <= 5e-4, "h={h}: {}", m.c_star);
            assert!(m.c_star <= upper_speed_bound(h).unwrap());
        }
        let m = minimal_speed(0.0, 1.2).unwrap();
        assert_abs_diff_eq!(m.c_star, nondelay_minimal_speed(1.2).unwrap().0, epsilon = 1e-12);
    }

    #[test]
    fn pulled_for_larger_slope() {
        let m = minimal_speed(1.0, 1.5).unwrap();
        assert_eq!(m.regime, Regime::Pulled);
        assert_eq!(m.c_star, m.c_sharp);
        assert_eq!(m.c_sharp, double_root_speed(1.0, 1.5).unwrap().c);
        let m = minimal_speed(0.0, 2.0).unwrap();
        assert_eq!(m.regime, Regime::Pulled);
        assert_abs_diff_eq!(m.c_star, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn amplitude_at_and_below_minimal_speed() {
        for h in [0.0, 0.5, 2.0, 6.0] {
            let c = minimal_speed(h, 1.2).unwrap().c_star;
            assert_eq!(amplitude_p(c, h, 1.2).unwrap(), 0.0);
            let below = amplitude_p(c * (1.0 - 1e-3), h, 1.2);
            assert!(matches!(below, Err(Error::NoWavefront(_))), "h={h}");
        }
    }

    #[test]
    fn amplitude_upper_bound() {
        let (h, k) = (0.5, 1.2);
        let mut last_gap = f64::INFINITY;
        for c in [1.0, 2.0, 3.0, 5.0] {
            let (l1, l2, mu1) = front_roots(c, h, k).unwrap();
            let bound = (mu1 - l2) / (l1 - l2);
            let p = amplitude_p(c, h, k).unwrap();
            assert!(p >= 0.0 && p <= bound);
            let gap = (bound - p) / bound;
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-2);
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let d = (b - a) / n as f64;
        let mut sum = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(a + i as f64 * d);
        }
        sum * d / 3.0
    }

    /// The decay condition `(L psi)(mu1) = 0` with `psi = phi - 2`, integrated
    /// numerically and solved for `p` (it is affine in `p`).
    #[test]
    fn amplitude_matches_decay_condition() {
        let (c, h, k) = (0.8, 0.5, 1.2);
        let (l1, l2, mu1) = front_roots(c, h, k).unwrap();
        let ch = c * h;
        let condition = |p: f64| {
            let psi = |t: f64| tail_at(t + ch, p, l1, l2).0 - 2.0;
            let dpsi0 = tail_at(ch, p, l1, l2).1;
            let integral = simpson(|t| (-mu1 * t).exp() * psi(t), -ch, 0.0, 2000);
            dpsi0 + (mu1 - c) * psi(0.0) + (-mu1 * ch).exp() * integral
        };
        let (a, b) = (condition(0.0), condition(1.0));
        let p_oracle = -a / (b - a);
        let p = amplitude_p(c, h, k).unwrap();
        assert!(p > 0.0);
        assert_abs_diff_eq!(p, p_oracle, epsilon = 1e-8);
    }

    #[test]
    fn junction_derivative_matches_tail() {
        let (c, h, k) = (0.8, 0.5, 1.2);
        let (l1, l2, _) = front_roots(c, h, k).unwrap();
        let p = amplitude_p(c, h, k).unwrap();
        let e = 1e-5;
        let fd = (tail_at(e, p, l1, l2).0 - tail_at(-e, p, l1, l2).0) / (2.0 * e);
        let d = junction_derivative(c, h, k).unwrap();
        assert!(d > 0.0);
        assert_abs_diff_eq!(d, fd, epsilon = 1e-8);

        let c = minimal_speed(h, k).unwrap().c_star;
        let (l1, _, _) = front_roots(c, h, k).unwrap();
        assert_abs_diff_eq!(junction_derivative(c, h, k).unwrap(), l1, epsilon = 1e-9);
    }

    #[test]
    fn limits_for_reference_slopes() {
        let q = limit_quantities(1.5).unwrap();
        assert_abs_diff_eq!(q.w_plus, 0.7088, epsilon = 1e-4);
        assert_abs_diff_eq!(q.rho, 1.3856, epsilon = 1e-4);
        assert_abs_diff_eq!(q.lambda_inf, 0.5115, epsilon = 1e-4);
        assert_abs_diff_eq!(q.mu_inf, 1.1031, epsilon = 1e-4);
        assert_abs_diff_eq!(q.t1_inf, 0.4637, epsilon = 1e-4);
        let q = limit_quantities(1.2).unwrap();
        assert_abs_diff_eq!(q.w_plus, 0.3388, epsilon = 1e-4);
        assert_abs_diff_eq!(q.rho, 0.8901, epsilon = 1e-4);
        assert_abs_diff_eq!(q.lambda_inf, 0.3806, epsilon = 1e-4);
        assert_abs_diff_eq!(q.mu_inf, 1.1639, epsilon = 1e-4);
        assert_abs_diff_eq!(q.t1_inf, 0.3269, epsilon = 1e-4);
    }

    #[test]
    fn limit_equations_hold() {
        for k in [1.1, 1.2, 1.5, 2.5, 2.9] {
            let q = limit_quantities(k).unwrap();
            let tol = 1e-12;
            assert!(((-q.w_plus).exp() * (2.0 + q.w_plus) - 2.0 / k).abs() < tol);
            assert!(((-q.w_minus).exp() * (2.0 + q.w_minus) + 2.0).abs() < tol);
            assert!((q.mu_inf.powi(2) - 1.0 - (-q.mu_inf * q.rho).exp()).abs() < tol);
            assert!((q.mu_hat_inf.powi(2) - 1.0 - (-q.mu_hat_inf * q.rho_hat).exp()).abs() < tol);
            if let Some(l) = q.lambda_hat_inf {
                assert!((l * l - 1.0 + k * (-q.rho_hat * l).exp()).abs() < tol);
            }
            assert!(q.w_minus < -2.0 && q.mu_hat_inf > 0.0);
        }
        let a = limit_quantities(1.2).unwrap();
        let b = limit_quantities(2.5).unwrap();
        assert_eq!(a.w_minus, b.w_minus);
        assert_eq!(a.rho_hat, b.rho_hat);
    }

    #[test]
    fn hat_root_absent_for_small_slopes() {
        // min over l > 0 of l^2 - 1 + k e^{-rho_hat l} is positive for these k.
        for k in [1.2, 1.5] {
            let q = limit_quantities(k).unwrap();
            let min = (0..=4000)
                .map(|i| {
                    let l = i as f64 * 1e-3;
                    l * l - 1.0 + k * (-q.rho_hat * l).exp()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(min > 0.0);
            assert!(q.lambda_hat_inf.is_none() && q.t2_inf.is_none());
        }
    }

    #[test]
    fn pushed_to_pulled_thresholds() {
        assert_abs_diff_eq!(pushed_to_pulled_delay(1.5).unwrap(), 0.3379, epsilon = 1e-4);
        assert_eq!(pushed_to_pulled_delay(1.2).unwrap(), f64::INFINITY);
        let a = pushed_to_pulled_delay(1.6).unwrap();
        let b = pushed_to_pulled_delay(1.65).unwrap();
        let c = pushed_to_pulled_delay(1.66).unwrap();
        assert!(a > b && b > c && c > 0.0 && c < 0.05);
        assert!(pushed_to_pulled_delay(5.0 / 3.0).is_err());
    }

    #[test]
    fn oscillation_thresholds() {
        let h = oscillation_threshold(1.2).unwrap().unwrap();
        assert!((3.25..3.26).contains(&h), "{h}");
        let t = t2(h, 1.2).unwrap().unwrap();
        assert_abs_diff_eq!(t, target_ratio(1.2), epsilon = 1e-9);
        assert_eq!(oscillation_threshold(1.5).unwrap(), None);
    }

    #[test]
    fn profile_without_delay() {
        let c = minimal_speed(0.0, 1.2).unwrap().c_star;
        let p = build_profile(c, 0.0, 1.2, 60.0, 0.01).unwrap();
        assert_eq!(p.p, 0.0);
        assert_eq!(p.classification, Classification::Monotone);
        assert_abs_diff_eq!(p.tail_exponent(), p.lambda1, epsilon = 1e-6);
        let (phi, dphi) = p.tail(-1.0);
        assert_abs_diff_eq!(dphi, p.lambda1 * phi, epsilon = 1e-15);
        assert!((p.eval(p.terminal_time) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn pushed_profile_with_delay() {
        let c = minimal_speed(0.5, 1.2).unwrap().c_star;
        let p = build_profile(c, 0.5, 1.2, 60.0, 0.01).unwrap();
        assert_eq!(p.classification, Classification::Monotone);
        assert!(p.settle_time < p.terminal_time);
        assert!(p.residual_max <= PROFILE_RESIDUAL);
        assert!(p.junction_mismatch <= 10.0 * p.grid_step * p.grid_step);
        assert_abs_diff_eq!(p.tail(p.junction_time).0, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.tail_exponent(), p.lambda1, epsilon = 1e-6);
        for s in &p.numeric_segment[1..] {
            assert!(s.phi > 1.0 && s.phi < 3.0);
        }
    }

    #[test]
    fn faster_profile_decays_with_slow_mode() {
        let p = build_profile(0.8, 0.5, 1.2, 60.0, 0.01).unwrap();
        assert!(p.p > 0.0);
        assert_abs_diff_eq!(p.tail_exponent(), p.lambda2, epsilon = 1e-6);
        assert_eq!(p.classification, Classification::Monotone);
    }

    #[test]
    fn oscillating_profile_at_large_delay() {
        let c = minimal_speed(6.0, 1.2).unwrap().c_star;
        let p = build_profile(c, 6.0, 1.2, 60.0, 0.01).unwrap();
        assert_eq!(p.classification, Classification::Oscillatory);
        let max = p.max_phi();
        assert!(max > 2.0 && max < 3.0);
        assert!(p.junction_mismatch <= 10.0 * p.grid_step * p.grid_step);
    }

    #[test]
    fn profile_rejects_slow_speed() {
        let c = minimal_speed(0.5, 1.2).unwrap().c_star;
        let r = build_profile(0.95 * c, 0.5, 1.2, 60.0, 0.01);
        assert!(matches!(r, Err(Error::NoWavefront(_))));
    }

    #[test]
    fn profile_csv_layout() {
        let p = build_profile(0.8, 0.5, 1.2, 60.0, 0.01).unwrap();
        let mut buf = Vec::new();
        p.write_csv(1.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,phi,dphi"));
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert!(first[0] <= -1.4);
        let n = text.lines().count();
        assert_eq!(n, 1 + p.numeric_segment.len() + (1.4 / p.grid_step).ceil() as usize);
    }
}
