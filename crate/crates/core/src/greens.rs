//! Fundamental solutions of the operators linearized at the positive state.
//!
//! For `(h, c)` in `D_kappa`, with `s = g'(kappa)` and `mu3 <= mu2 < 0 < mu1`
//! the real zeros of `chi_kappa`:
//!
//! ```text
//! (D y)(t)  = y'' - c y' - y + s y(t - ch)
//! (D1 y)(t) = y' - mu2 y
//! (D2 y)(t) = y' - (c - mu2) y - s e^{-ch mu2} int_{-ch}^0 e^{-mu2 r} y(t + r) dr
//! ```
//!
//! `D = D1 D2 = D2 D1`; `theta`, `psi` and `N = psi * theta` are the bounded
//! fundamental solutions of `D1`, `D2` and `D`.

use std::io::{self, Write};

use serde::Serialize;

use crate::characteristic::{chi_dz, roots_at_kappa};
use crate::error::{Error, Result};
use crate::output::sig6;
use crate::params::{toy_birth, ModelParams};
use crate::tolerances::{KERNEL_NORMALIZATION, KERNEL_TAIL};

/// `theta(t) = e^{mu2 t}` for `t >= 0`, zero for `t < 0`.
pub fn theta_kernel(t: f64, mu2: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        (mu2 * t).exp()
    }
}

/// Kernel samples on the uniform grid `t_min + i * step`, which contains
/// `t = 0` at `zero_index`.
#[derive(Debug, Clone, Serialize)]
pub struct KernelGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub zero_index: usize,
    /// Samples; at `zero_index` the right value.
    pub values: Vec<f64>,
    /// Left limit at `t = 0`.
    pub left_at_zero: f64,
    pub jump_at_zero: f64,
}

impl KernelGrid {
    pub fn t(&self, i: usize) -> f64 {
        (i as f64 - self.zero_index as f64) * self.step
    }

    /// Trapezoid integral over the grid, split at the jump.
    pub fn integral(&self) -> f64 {
        let z = self.zero_index;
        let v = &self.values;
        let last = v.len() - 1;
        let left = v[..z].iter().sum::<f64>() - 0.5 * v[0] + 0.5 * self.left_at_zero;
        let right = v[z..].iter().sum::<f64>() - 0.5 * v[z] - 0.5 * v[last];
        (left + right) * self.step
    }

    /// Largest sample, including the left limit at zero.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(self.left_at_zero, f64::max)
    }

    /// Writes `t,value`; a jump at zero appears as two rows at `t = 0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            if i == self.zero_index && self.jump_at_zero != 0.0 {
                writeln!(w, "0,{}", sig6(self.left_at_zero))?;
            }
            writeln!(w, "{},{}", sig6(self.t(i)), sig6(*v))?;
        }
        Ok(())
    }
}

/// Roots and constants shared by the kernels at one `(h, c)`.
#[derive(Debug, Clone, Copy)]
struct KappaSetup {
    c: f64,
    h: f64,
    s: f64,
    mu1: f64,
    mu2: f64,
    mu3: Option<f64>,
}

fn setup(c: f64, h: f64, params: &ModelParams) -> Result<KappaSetup> {
    params.validate()?;
    let r = roots_at_kappa(c, h, params)?;
    let mu2 = match (r.in_region_dkappa, r.mu2) {
        (true, Some(mu2)) => mu2,
        _ => {
            return Err(Error::domain(format!(
                "(h, c) = ({h}, {c}) is outside D_kappa"
            )))
        }
    };
    Ok(KappaSetup {
        c,
        h,
        s: params.slope_kappa,
        mu1: r.mu1,
        mu2,
        mu3: r.mu3,
    })
}

/// Half-width of the kernel support: the slowest exponential rate among
/// `mu1`, `|mu2|`, `|mu3|` decays by `KERNEL_TAIL` over it.
pub fn default_support(c: f64, h: f64, params: &ModelParams) -> Result<f64> {
    let k = setup(c, h, params)?;
    let rate = k.mu1.min(-k.mu2).min(k.mu3.map_or(f64::INFINITY, |m| -m));
    Ok(-KERNEL_TAIL.ln() / rate)
}

/// Default grid step: `ch/200` kept within `[1e-3, 5e-3]` and aligned so that
/// `ch` is a whole number of steps.
pub fn default_step(c: f64, h: f64) -> f64 {
    let ch = c * h;
    if ch == 0.0 {
        return 1e-3;
    }
    aligned_step(ch, (ch / 200.0).clamp(1e-3, 5e-3))
}

fn aligned_step(ch: f64, target: f64) -> f64 {
    if ch == 0.0 {
        target
    } else {
        ch / (ch / target).ceil().max(1.0)
    }
}

fn check_grid(t_max: f64, step: f64) -> Result<()> {
    if !(t_max > 0.0 && step > 0.0 && t_max.is_finite() && step < t_max) {
        return Err(Error::domain(format!(
            "need 0 < step < t_max, got step = {step}, t_max = {t_max}"
        )));
    }
    Ok(())
}

/// Trapezoid weights for `m` panels.
fn trapezoid_weights(m: usize) -> Vec<f64> {
    let mut w = vec![1.0; m + 1];
    w[0] = 0.5;
    w[m] = 0.5;
    w
}

/// Fundamental solution `psi` of `D2` on `[-t_max, t_max]`.
///
/// For `t < 0` the closed form `-(mu1 - mu2)/chi'(mu1) e^{mu1 t}` is used and
/// `psi(0) = psi(0-) + 1` is imposed. For `t > 0` the solution of `D2 y = 0`
/// is marched in the equivalent form
///
/// ```text
/// y(t) = -int_{-ch}^0 w(r) y(t + r) dr,
/// w(r) = K (e^{-mu2 r} - e^{(mu2 - mu1) ch} e^{-mu1 r}) / (mu1 - mu2),  K = s e^{-ch mu2},
/// ```
///
/// which states that the component along the growing mode `e^{mu1 t}` is
/// zero; marching `D2 y = 0` directly amplifies truncation error by
/// `e^{mu1 t}`. The integral uses the trapezoid rule on the step `ch/m`
/// nearest to `step`, with the jump at zero split between its two panels.
#[allow(clippy::needless_range_loop)]
pub fn psi_kernel(c: f64, h: f64, params: &ModelParams, t_max: f64, step: f64) -> Result<KernelGrid> {
    let k = setup(c, h, params)?;
    check_grid(t_max, step)?;
    let ch = c * h;
    let step = aligned_step(ch, step);
    let m = if ch == 0.0 { 0 } else { (ch / step).round() as usize };
    let n = (t_max / step).ceil() as usize;
    let (mu1, mu2, s) = (k.mu1, k.mu2, k.s);
    let amp = -(mu1 - mu2) / chi_dz(mu1, c, h, s);
    let left_at_zero = amp;

    let mut values = Vec::with_capacity(2 * n + 1);
    for i in (1..=n).rev() {
        values.push(amp * (-(mu1 * i as f64 * step)).exp());
    }
    let psi0 = left_at_zero + 1.0;
    values.push(psi0);

    if m == 0 {
        // Without delay psi vanishes for t > 0.
        values.extend(std::iter::repeat_n(0.0, n));
    } else {
        let kk = s * (-ch * mu2).exp();
        let e12 = ((mu2 - mu1) * ch).exp();
        let w: Vec<f64> = (0..=m)
            .map(|j| {
                let r = -(j as f64) * step;
                kk * ((-mu2 * r).exp() - e12 * (-mu1 * r).exp()) / (mu1 - mu2)
            })
            .collect();
        let tw = trapezoid_weights(m);
        let coef: Vec<f64> = (0..=m).map(|j| tw[j] * w[j] * step).collect();
        let z = n;
        let history = |i: isize| -> f64 {
            // psi at t = i * step for i < 0 from the closed form.
            amp * (mu1 * i as f64 * step).exp()
        };
        for i in 1..=n {
            let mut acc = 0.0;
            for j in 1..=m {
                let idx = i as isize - j as isize;
                let y = if idx > 0 {
                    values[z + idx as usize]
                } else if idx == 0 {
                    // Split the jump between the panels on either side of 0.
                    if j == m {
                        psi0
                    } else {
                        0.5 * (psi0 + left_at_zero)
                    }
                } else {
                    history(idx)
                };
                acc += coef[j] * y;
            }
            let y = -acc / (1.0 + coef[0]);
            if !y.is_finite() {
                return Err(Error::Instability(format!("psi diverged at t = {}", i as f64 * step)));
            }
            values.push(y);
        }
    }

    let grid = KernelGrid {
        t_min: -(n as f64) * step,
        t_max: n as f64 * step,
        step,
        zero_index: n,
        values,
        left_at_zero,
        jump_at_zero: 1.0,
    };
    if let Some((i, v)) = grid
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_sign_negative() && m > 0)
    {
        return Err(Error::accuracy(format!(
            "psi is nonnegative ({v:e}) at t = {}; refine the step",
            grid.t(i)
        )));
    }
    Ok(grid)
}

/// Fundamental solution `N = psi * theta` of `D` on `[-t_max, t_max]`.
///
/// For `t <= 0`, `N(t) = -e^{mu1 t}/chi'(mu1)` exactly. For `t > 0` the
/// relation `N' - mu2 N = psi` is integrated panel by panel with the
/// trapezoid rule, `N(t + d) = e^{mu2 d} N(t) + int_t^{t+d} e^{mu2 (t+d-u)} psi(u) du`.
/// The trapezoid integral of the result must equal `1/(s - 1)` within
/// `KERNEL_NORMALIZATION`.
pub fn n_kernel(c: f64, h: f64, params: &ModelParams, t_max: f64, step: f64) -> Result<KernelGrid> {
    let k = setup(c, h, params)?;
    let psi = psi_kernel(c, h, params, t_max, step)?;
    let n_kernel = n_from_psi(&psi, k)?;
    let total = n_kernel.integral();
    let expected = 1.0 / (k.s - 1.0);
    if (total - expected).abs() > KERNEL_NORMALIZATION {
        return Err(Error::accuracy(format!(
            "integral of N is {total}, expected {expected}"
        )));
    }
    Ok(n_kernel)
}

fn n_from_psi(psi: &KernelGrid, k: KappaSetup) -> Result<KernelGrid> {
    let (mu1, mu2) = (k.mu1, k.mu2);
    let step = psi.step;
    let z = psi.zero_index;
    let d1 = chi_dz(mu1, k.c, k.h, k.s);
    let mut values = Vec::with_capacity(psi.values.len());
    for i in 0..=z {
        values.push(-(mu1 * psi.t(i)).exp() / d1);
    }
    let decay = (mu2 * step).exp();
    for i in z + 1..psi.values.len() {
        let prev = values[i - 1];
        let panel = 0.5 * step * (decay * psi.values[i - 1] + psi.values[i]);
        values.push(decay * prev + panel);
    }
    if let Some(v) = values.iter().find(|v| **v >= 0.0) {
        return Err(Error::accuracy(format!("N is nonnegative ({v:e}); refine the step")));
    }
    Ok(KernelGrid {
        t_min: psi.t_min,
        t_max: psi.t_max,
        step,
        zero_index: z,
        left_at_zero: values[z],
        values,
        jump_at_zero: 0.0,
    })
}

/// Uniformly sampled function `values[i] = f(t0 + i * step)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub t0: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_fn<F: Fn(f64) -> f64>(t0: f64, step: f64, n: usize, f: F) -> Self {
        SampledFunction {
            t0,
            step,
            values: (0..n).map(|i| f(t0 + i as f64 * step)).collect(),
        }
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    /// Linear interpolation with constant extension outside the samples.
    pub fn at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.step;
        let last = self.values.len() - 1;
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// The monotone operator
/// `(N phi)(t) = int N(tau) (s phi(t - tau - ch) - g(phi(t - tau - ch))) dtau`
/// for the toy birth law, evaluated on the grid of `phi`.
///
/// The integral is a trapezoid sum over the kernel nodes with `phi`
/// interpolated linearly and extended by its boundary values. The kernel is
/// built on a step of at most `1e-3` and scaled so that its discrete integral
/// is exactly `1/(s - 1)`, which makes `0` and `kappa` fixed points of the
/// discrete operator.
pub fn apply_n_operator(
    phi: &SampledFunction,
    c: f64,
    h: f64,
    params: &ModelParams,
) -> Result<SampledFunction> {
    params.validate()?;
    if !params.is_toy() {
        return Err(Error::domain("the operator is implemented for the toy birth law"));
    }
    if phi.values.len() < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let kappa = params.kappa;
    if let Some(v) = phi.values.iter().find(|v| !(**v >= 0.0 && **v <= kappa)) {
        return Err(Error::domain(format!("input value {v} is outside [0, {kappa}]")));
    }
    let k = setup(c, h, params)?;
    let support = default_support(c, h, params)?;
    let ch = c * h;
    let psi = psi_kernel(c, h, params, support, aligned_step(ch, phi.step.min(1e-3)))?;
    let nk = n_from_psi(&psi, k)?;
    let scale = 1.0 / (k.s - 1.0) / nk.integral();
    let last = nk.values.len() - 1;
    let weights: Vec<f64> = nk
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let w = if j == 0 || j == last { 0.5 } else { 1.0 };
            w * v * scale * nk.step
        })
        .collect();
    let slope = params.slope_zero;
    let f = |v: f64| k.s * v - toy_birth(v, slope);

    let out: Vec<f64> = (0..phi.values.len())
        .map(|i| {
            let t = phi.t(i) - ch;
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * f(phi.at(t - nk.t(j))))
                .sum::<f64>()
        })
        .collect();
    let tol = 1e-9 * kappa;
    if let Some(v) = out.iter().find(|v| !(**v >= -tol && **v <= kappa + tol)) {
        return Err(Error::accuracy(format!("operator output {v} left [0, {kappa}]")));
    }
    Ok(SampledFunction {
        t0: phi.t0,
        step: phi.step,
        values: out.into_iter().map(|v| v.clamp(0.0, kappa)).collect(),
    })
}

/// Maximum over interior grid points of `|D y - D1 D2 y|` and
/// `|D y - D2 D1 y|`, with derivatives by central differences, the history
/// integral by the trapezoid rule and delayed values by linear interpolation.
pub fn check_factorization(y: &SampledFunction, c: f64, h: f64, params: &ModelParams) -> Result<f64> {
    let k = setup(c, h, params)?;
    let (s, mu2) = (k.s, k.mu2);
    let ch = c * h;
    let d = y.step;
    let n = y.values.len();
    let nan = f64::NAN;
    let deriv = |v: &[f64], i: usize| -> f64 {
        if i == 0 || i + 1 >= v.len() {
            nan
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * d)
        }
    };
    let second = |v: &[f64], i: usize| -> f64 {
        if i == 0 || i + 1 >= v.len() {
            nan
        } else {
            (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (d * d)
        }
    };
    let kk = s * (-ch * mu2).exp();
    let m = (ch / d).ceil().max(1.0) as usize;
    let hq = ch / m as f64;
    // Linear interpolation; NaN outside the samples or next to a NaN.
    let interp = |v: &[f64], t: f64| -> f64 {
        let x = (t - y.t0) / d;
        if x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
            return nan;
        }
        let i = (x.max(0.0).floor() as usize).min(n - 2);
        let f = x - i as f64;
        v[i] * (1.0 - f) + v[i + 1] * f
    };
    // int_{-ch}^0 e^{-mu2 r} v(t_i + r) dr by the trapezoid rule.
    let history = |v: &[f64], i: usize| -> f64 {
        if ch == 0.0 {
            return 0.0;
        }
        let t = y.t(i);
        let mut acc = 0.0;
        for j in 0..=m {
            let r = -(j as f64) * hq;
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            acc += w * (-mu2 * r).exp() * interp(v, t + r);
        }
        acc * hq
    };
    let v = &y.values;
    let dy: Vec<f64> = (0..n)
        .map(|i| second(v, i) - c * deriv(v, i) - v[i] + s * interp(v, y.t(i) - ch))
        .collect();
    let d2 = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| deriv(v, i) - (c - mu2) * v[i] - kk * history(v, i))
            .collect()
    };
    let d1 = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| deriv(v, i) - mu2 * v[i]).collect() };
    let d1d2 = d1(&d2(v));
    let d2d1 = d2(&d1(v));
    let mut worst: f64 = 0.0;
    let mut any = false;
    for i in 0..n {
        let a = (dy[i] - d1d2[i]).abs();
        let b = (dy[i] - d2d1[i]).abs();
        if a.is_finite() && b.is_finite() {
            worst = worst.max(a).max(b);
            any = true;
        }
    }
    if !any {
        return Err(Error::domain("samples do not cover [t - ch, t] for any interior point"));
    }
    Ok(worst)
}
