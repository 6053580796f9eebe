//! Characteristic quasi-polynomials of the linearized profile equation.
//!
//! Both equilibria share the shape `z^2 - c z - 1 + s e^{-z c h}`: at the
//! trivial state `s = g'(0) > 1`, at the positive state `s = g'(kappa) < 0`.
//! Real roots are isolated with brackets derived from convexity of the
//! function (or of its derivative) and refined by bisection plus Newton.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::solve::{bisect, march_until, newton_polish};
use crate::tolerances::{
    BISECTION_WIDTH, CONTINUATION_STEP, CONTOUR_NUDGE, CURVE_RESIDUAL, ROOT_RESIDUAL,
    WINDING_INTEGER,
};

/// `z^2 - c z + shift + slope e^{-z c h}` for complex `z`.
pub fn eval_char(z: Complex64, c: f64, h: f64, slope: f64, constant_shift: f64) -> Complex64 {
    z * z - c * z + constant_shift + slope * (-z * (c * h)).exp()
}

/// Derivative of [`eval_char`] in `z`.
pub fn eval_char_dz(z: Complex64, c: f64, h: f64, slope: f64) -> Complex64 {
    2.0 * z - c - slope * c * h * (-z * (c * h)).exp()
}

/// Real characteristic function `chi(z) = z^2 - c z - 1 + s e^{-z c h}`.
pub fn chi(z: f64, c: f64, h: f64, slope: f64) -> f64 {
    z * z - c * z - 1.0 + slope * (-z * c * h).exp()
}

pub fn chi_dz(z: f64, c: f64, h: f64, slope: f64) -> f64 {
    2.0 * z - c - slope * c * h * (-z * c * h).exp()
}

pub fn chi_dzz(z: f64, c: f64, h: f64, slope: f64) -> f64 {
    let a = c * h;
    2.0 + slope * a * a * (-z * a).exp()
}

fn root_ok(z: f64, c: f64, h: f64, slope: f64) -> bool {
    chi(z, c, h, slope).abs() <= ROOT_RESIDUAL * (1.0 + z * z + c * z.abs())
}

fn refine_root(lo: f64, hi: f64, c: f64, h: f64, slope: f64) -> Result<f64> {
    let f = |z: f64| chi(z, c, h, slope);
    // An endpoint can round to the wrong sign when the exponential term is negligible.
    for end in [lo, hi] {
        if f(end) != 0.0 && f(lo).signum() == f(hi).signum() && root_ok(end, c, h, slope) {
            return Ok(end);
        }
    }
    let z = bisect(f, lo, hi, BISECTION_WIDTH)?;
    let z = newton_polish(f, |z| chi_dz(z, c, h, slope), z, lo, hi, 3);
    if !root_ok(z, c, h, slope) {
        return Err(Error::convergence(format!(
            "root near {z} has residual {:e} (c = {c}, h = {h})",
            f(z)
        )));
    }
    Ok(z)
}

/// Positive real roots `lambda1 >= lambda2 > 0` of the characteristic
/// function at the trivial equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootsAtZero {
    pub lambda1: f64,
    pub lambda2: f64,
    /// False when `c < c#(h)`; the lambdas are then NaN.
    pub exists: bool,
}

impl RootsAtZero {
    fn missing() -> Self {
        RootsAtZero {
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            exists: false,
        }
    }
}

fn check_speed_delay(c: f64, h: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("speed must be positive, got {c}")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("delay must be nonnegative, got {h}")));
    }
    Ok(())
}

/// Minimizer of `chi` on the positive axis for `slope > 1`.
///
/// `chi` is strictly convex there and `chi'(0) < 0`, so the minimizer is the
/// unique zero of `chi'` in `(0, (c + s c h) / 2]`.
fn convex_minimizer(c: f64, h: f64, slope: f64) -> Result<f64> {
    let a = c * h;
    if a == 0.0 {
        return Ok(0.5 * c);
    }
    let hi = 0.5 * (c + slope * a);
    let d = |z: f64| chi_dz(z, c, h, slope);
    let z = bisect(d, 0.0, hi, BISECTION_WIDTH)?;
    Ok(newton_polish(d, |z| chi_dzz(z, c, h, slope), z, 0.0, hi, 3))
}

/// Positive real roots of `chi(., c)` for a slope `s > 1`.
pub fn positive_roots(c: f64, h: f64, slope: f64) -> Result<RootsAtZero> {
    check_speed_delay(c, h)?;
    positive_roots_scaled(c, c * h, slope)
}

/// Positive roots of `z^2 - c z - 1 + s e^{-a z}` with the delay product
/// `a = c h` given separately, so that the `c -> 0` limit at fixed `a` is
/// available.
pub(crate) fn positive_roots_scaled(c: f64, a: f64, slope: f64) -> Result<RootsAtZero> {
    if slope <= 1.0 {
        return Err(Error::domain(format!("slope must exceed 1, got {slope}")));
    }
    // Written in terms of h = a / c only through the product, so use the
    // explicit forms below rather than `chi`.
    let f = |z: f64| z * z - c * z - 1.0 + slope * (-a * z).exp();
    let df = |z: f64| 2.0 * z - c - slope * a * (-a * z).exp();
    let ddf = |z: f64| 2.0 + slope * a * a * (-a * z).exp();
    if a == 0.0 {
        let disc = c * c - 4.0 * (slope - 1.0);
        if disc < 0.0 {
            return Ok(RootsAtZero::missing());
        }
        let r = disc.sqrt();
        return Ok(RootsAtZero {
            lambda1: 0.5 * (c + r),
            lambda2: 0.5 * (c - r),
            exists: true,
        });
    }
    // f is strictly convex and f'(0) < 0: one minimizer in (0, (c + s a) / 2].
    let z_hi = 0.5 * (c + slope * a);
    let zm = bisect(df, 0.0, z_hi, BISECTION_WIDTH)?;
    let zm = newton_polish(df, ddf, zm, 0.0, z_hi, 3);
    let fm = f(zm);
    if fm > 0.0 {
        return Ok(RootsAtZero::missing());
    }
    if fm == 0.0 {
        return Ok(RootsAtZero {
            lambda1: zm,
            lambda2: zm,
            exists: true,
        });
    }
    let refine = |lo: f64, hi: f64| -> Result<f64> {
        let z = bisect(f, lo, hi, BISECTION_WIDTH)?;
        let z = newton_polish(f, df, z, lo, hi, 3);
        if f(z).abs() > ROOT_RESIDUAL * (1.0 + z * z + c * z) {
            return Err(Error::convergence(format!(
                "root near {z} has residual {:e}",
                f(z)
            )));
        }
        Ok(z)
    };
    // f > 0 beyond the larger root of z^2 - c z - 1.
    let upper = 0.5 * (c + (c * c + 4.0).sqrt()) + 1.0;
    let lambda2 = refine(0.0, zm)?;
    let lambda1 = refine(zm, upper)?;
    Ok(RootsAtZero {
        lambda1,
        lambda2,
        exists: true,
    })
}

/// Roots of the characteristic function at the trivial equilibrium for `params.slope_zero`.
pub fn roots_at_zero(c: f64, h: f64, params: &ModelParams) -> Result<RootsAtZero> {
    positive_roots(c, h, params.slope_zero)
}

/// Real roots of the characteristic function at the positive equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootsAtKappa {
    pub mu1: f64,
    /// Largest negative root; `None` outside the region `D_kappa`.
    pub mu2: Option<f64>,
    /// Smallest negative root; `None` outside `D_kappa` and always at `h = 0`.
    pub mu3: Option<f64>,
    pub in_region_dkappa: bool,
}

/// Real roots of `chi` for a negative slope.
pub fn kappa_roots(c: f64, h: f64, slope: f64) -> Result<RootsAtKappa> {
    check_speed_delay(c, h)?;
    if slope >= 0.0 {
        return Err(Error::domain(format!("slope must be negative, got {slope}")));
    }
    let a = c * h;
    if a == 0.0 {
        let r = (c * c + 4.0 * (1.0 - slope)).sqrt();
        return Ok(RootsAtKappa {
            mu1: 0.5 * (c + r),
            mu2: Some(0.5 * (c - r)),
            mu3: None,
            in_region_dkappa: true,
        });
    }

    // chi < 0 at the root of z^2 - c z - 1 and chi >= 0 where z^2 - c z - 1 = |s|.
    let lo = 0.5 * (c + (c * c + 4.0).sqrt());
    let hi = 0.5 * (c + (c * c + 4.0 * (1.0 - slope)).sqrt());
    let mu1 = refine_root(lo, hi, c, h, slope)?;

    let missing = RootsAtKappa {
        mu1,
        mu2: None,
        mu3: None,
        in_region_dkappa: false,
    };

    // chi'' is increasing, so chi' is convex with its minimum at the inflection point.
    let inflection = (slope.abs() * a * a / 2.0).ln() / a;
    let right = inflection.min(0.0);
    let d = |z: f64| chi_dz(z, c, h, slope);
    if d(right) >= 0.0 {
        return Ok(missing);
    }
    let left = march_until(right, 1.0, -1.0, 200, |z| d(z) > 0.0)
        .ok_or_else(|| Error::convergence("could not bracket the negative critical point"))?;
    let z_max = bisect(d, left, right, BISECTION_WIDTH)?;
    let z_max = newton_polish(d, |z| chi_dzz(z, c, h, slope), z_max, left, right, 3);
    let f_max = chi(z_max, c, h, slope);
    let tol = ROOT_RESIDUAL * (1.0 + z_max * z_max + c * z_max.abs());
    if f_max < -tol {
        return Ok(missing);
    }
    if f_max <= tol {
        return Ok(RootsAtKappa {
            mu1,
            mu2: Some(z_max),
            mu3: Some(z_max),
            in_region_dkappa: true,
        });
    }
    let mu2 = refine_root(z_max, 0.0, c, h, slope)?;
    let far = march_until(z_max, 1.0, -1.0, 200, |z| chi(z, c, h, slope) < 0.0)
        .ok_or_else(|| Error::convergence("could not bracket the smallest negative root"))?;
    let mu3 = refine_root(far, z_max, c, h, slope)?;
    Ok(RootsAtKappa {
        mu1,
        mu2: Some(mu2),
        mu3: Some(mu3),
        in_region_dkappa: true,
    })
}

/// Roots of the characteristic function at `kappa` for `params.slope_kappa`.
pub fn roots_at_kappa(c: f64, h: f64, params: &ModelParams) -> Result<RootsAtKappa> {
    kappa_roots(c, h, params.slope_kappa)
}

/// A speed at which the characteristic function has a double positive root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleRoot {
    pub c: f64,
    pub z: f64,
}

fn double_root_residual(z: f64, c: f64, h: f64, slope: f64) -> (f64, f64) {
    (chi(z, c, h, slope), chi_dz(z, c, h, slope))
}

/// Newton iteration on `(chi, chi_z) = 0` in the unknowns `(z, c)`.
fn double_root_newton(mut z: f64, mut c: f64, h: f64, slope: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let e = (-z * c * h).exp();
        let (f1, f2) = double_root_residual(z, c, h, slope);
        let j11 = f2;
        let j12 = -z - slope * z * h * e;
        let j21 = 2.0 + slope * (c * h) * (c * h) * e;
        let j22 = -1.0 - slope * h * e * (1.0 - z * c * h);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dz = (f1 * j22 - f2 * j12) / det;
        let dc = (j11 * f2 - j21 * f1) / det;
        z -= dz;
        c -= dc;
        if !(z > 0.0 && c > 0.0) {
            return None;
        }
        if dz.abs() <= 1e-15 * (1.0 + z.abs()) && dc.abs() <= 1e-15 * (1.0 + c.abs()) {
            break;
        }
    }
    let (f1, f2) = double_root_residual(z, c, h, slope);
    let tol = ROOT_RESIDUAL * (1.0 + z * z + c * z);
    (f1.abs() <= tol && f2.abs() <= tol).then_some((z, c))
}

/// Nested bisection: outer bisection on `c` with the sign of `min_z chi`.
fn double_root_bisection(h: f64, slope: f64) -> Result<DoubleRoot> {
    let c0 = 2.0 * (slope - 1.0).sqrt();
    let min_value = |c: f64| -> f64 {
        match convex_minimizer(c, h, slope) {
            Ok(z) => chi(z, c, h, slope),
            Err(_) => f64::NAN,
        }
    };
    let c = bisect(min_value, 1e-12, c0, 1e-15)?;
    let z = convex_minimizer(c, h, slope)?;
    Ok(DoubleRoot { c, z })
}

/// The unique speed at which `z^2 - c z - 1 + slope e^{-z c h}` has a double
/// positive root, with that root.
///
/// With `slope = g'(0)` this is the linear speed `c#(h)`; with
/// `slope = sup g(x)/x` it is the upper bound for the minimal speed.
pub fn double_root_speed(h: f64, slope: f64) -> Result<DoubleRoot> {
    if !(slope > 1.0 && slope.is_finite()) {
        return Err(Error::domain(format!("slope must exceed 1, got {slope}")));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("delay must be nonnegative, got {h}")));
    }
    let mut z = (slope - 1.0).sqrt();
    let mut c = 2.0 * z;
    if h == 0.0 {
        return Ok(DoubleRoot { c, z });
    }
    let steps = (h / CONTINUATION_STEP).ceil() as usize;
    for i in 1..=steps {
        let hi = if i == steps {
            h
        } else {
            i as f64 * CONTINUATION_STEP
        };
        match double_root_newton(z, c, hi, slope) {
            Some((zn, cn)) => {
                z = zn;
                c = cn;
            }
            None => return double_root_bisection(h, slope),
        }
    }
    Ok(DoubleRoot { c, z })
}

/// The linear spreading speed `c#(h)` for `params.slope_zero`.
pub fn c_sharp(h: f64, params: &ModelParams) -> Result<DoubleRoot> {
    double_root_speed(h, params.slope_zero)
}

/// Critical delay `h*` solving `|s| h e^{h+1} = 1`.
pub(crate) fn critical_delay(slope_kappa: f64) -> Result<f64> {
    if !(slope_kappa < 0.0 && slope_kappa.is_finite()) {
        return Err(Error::domain(format!(
            "slope at kappa must be negative, got {slope_kappa}"
        )));
    }
    let s = slope_kappa.abs();
    let f = |h: f64| s * h * (h + 1.0).exp() - 1.0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::convergence("critical delay bracket overflow"));
        }
    }
    let x = bisect(f, 1e-9_f64.min(hi), hi, 1e-15)?;
    // Relative refinement: bisection width 1e-15 already leaves |f| ~ 1e-14.
    Ok(newton_polish(
        f,
        |h| s * (1.0 + h) * (h + 1.0).exp(),
        x,
        0.0,
        hi,
        3,
    ))
}

fn c_kappa_relation(c: f64, h: f64, s: f64) -> f64 {
    let c2h = c * c * h;
    let q = (c2h * c2h + 4.0 * c * c * h * h + 4.0).sqrt();
    (2.0 + q).ln() - (std::f64::consts::E * c * c * h * h * s).ln() - 0.5 * (q - c2h)
}

/// Upper boundary `c_kappa(h)` of the region `D_kappa` for `h > h*`.
pub fn c_kappa_curve(h: f64, params: &ModelParams) -> Result<f64> {
    let h_star = critical_delay(params.slope_kappa)?;
    if !(h > h_star && h.is_finite()) {
        return Err(Error::domain(format!(
            "c_kappa(h) is defined only for h > h* = {h_star}, got {h}"
        )));
    }
    let s = params.slope_kappa.abs();
    // Work in log c: the relation is +inf at c -> 0 and negative for large c.
    let f = |lc: f64| c_kappa_relation(lc.exp(), h, s);
    let mut lo = -1.0;
    while f(lo) <= 0.0 {
        lo -= 1.0;
        if lo < -60.0 {
            return Err(Error::convergence("c_kappa lower bracket not found"));
        }
    }
    let mut hi = 1.0;
    while f(hi) >= 0.0 {
        hi += 1.0;
        if hi > 60.0 {
            return Err(Error::domain(format!(
                "h = {h} is too close to h* = {h_star}: c_kappa exceeds e^60"
            )));
        }
    }
    let lc = bisect(f, lo, hi, 1e-16)?;
    let c = lc.exp();
    if c_kappa_relation(c, h, s).abs() > CURVE_RESIDUAL {
        return Err(Error::accuracy(format!(
            "c_kappa({h}) residual {:e}",
            c_kappa_relation(c, h, s)
        )));
    }
    Ok(c)
}

/// Winding number of `chi` (shift `-1`) around the rectangle
/// `[re_lo, re_hi] x [-im_max, im_max]`, i.e. the number of zeros inside.
pub fn count_zeros_rectangle(
    c: f64,
    h: f64,
    slope: f64,
    re_lo: f64,
    re_hi: f64,
    im_max: f64,
) -> Result<usize> {
    check_speed_delay(c, h)?;
    if !(re_lo < re_hi && im_max > 0.0) {
        return Err(Error::domain(format!(
            "degenerate rectangle [{re_lo}, {re_hi}] x [-{im_max}, {im_max}]"
        )));
    }
    const MAX_NUDGES: usize = 5;
    let mut rect = (re_lo, re_hi, im_max);
    for _ in 0..=MAX_NUDGES {
        match contour_winding(c, h, slope, rect.0, rect.1, rect.2) {
            Ok(n) => return Ok(n),
            Err(ContourFailure::NearZero) => {
                rect = (
                    rect.0 - CONTOUR_NUDGE,
                    rect.1 + CONTOUR_NUDGE,
                    rect.2 + CONTOUR_NUDGE,
                );
            }
            Err(ContourFailure::NotInteger(w)) => {
                return Err(Error::accuracy(format!(
                    "winding number did not settle on an integer (last value {w})"
                )))
            }
        }
    }
    Err(Error::accuracy(
        "contour passes through a zero after repeated nudges",
    ))
}

enum ContourFailure {
    NearZero,
    NotInteger(f64),
}

struct Panel {
    a: Complex64,
    b: Complex64,
    fa: Complex64,
    fb: Complex64,
    ga: Complex64,
    gb: Complex64,
}

fn contour_winding(
    c: f64,
    h: f64,
    slope: f64,
    re_lo: f64,
    re_hi: f64,
    im_max: f64,
) -> std::result::Result<usize, ContourFailure> {
    let f = |z: Complex64| eval_char(z, c, h, slope, -1.0);
    let df = |z: Complex64| eval_char_dz(z, c, h, slope);
    let corners = [
        Complex64::new(re_lo, -im_max),
        Complex64::new(re_hi, -im_max),
        Complex64::new(re_hi, im_max),
        Complex64::new(re_lo, im_max),
    ];
    let perimeter = 2.0 * (re_hi - re_lo) + 4.0 * im_max;

    let mut previous: Option<i64> = None;
    let mut tol = 1e-4;
    for _ in 0..8 {
        let mut total = Complex64::new(0.0, 0.0);
        let mut min_modulus = f64::INFINITY;
        for side in 0..4 {
            let (start, end) = (corners[side], corners[(side + 1) % 4]);
            let n0 = 64;
            let mut stack = Vec::new();
            for j in (0..n0).rev() {
                let a = start + (end - start) * (j as f64 / n0 as f64);
                let b = start + (end - start) * ((j + 1) as f64 / n0 as f64);
                let (fa, fb) = (f(a), f(b));
                stack.push(Panel {
                    a,
                    b,
                    fa,
                    fb,
                    ga: df(a) / fa,
                    gb: df(b) / fb,
                });
            }
            while let Some(p) = stack.pop() {
                min_modulus = min_modulus.min(p.fa.norm()).min(p.fb.norm());
                let width = (p.b - p.a).norm();
                let trap = (p.b - p.a) * (p.ga + p.gb) * 0.5;
                let log_step = (p.fb / p.fa).ln();
                // The floor keeps rounding in f near a zero from forcing
                // endless subdivision.
                let local_tol = (tol * width / perimeter).max(1e-9);
                let settled =
                    log_step.im.abs() < PI / 8.0 && (trap - log_step).norm() <= local_tol;
                if settled || width < 1e-13 {
                    if !settled {
                        return Err(ContourFailure::NearZero);
                    }
                    // Logarithm increments telescope, so the sum carries no
                    // quadrature error once each stays on one branch.
                    total += log_step;
                    continue;
                }
                let m = (p.a + p.b) * 0.5;
                let fm = f(m);
                let gm = df(m) / fm;
                stack.push(Panel {
                    a: m,
                    b: p.b,
                    fa: fm,
                    fb: p.fb,
                    ga: gm,
                    gb: p.gb,
                });
                stack.push(Panel {
                    a: p.a,
                    b: m,
                    fa: p.fa,
                    fb: fm,
                    ga: p.ga,
                    gb: gm,
                });
            }
        }
        let scale = 1.0 + re_hi.abs().max(re_lo.abs()).powi(2) + im_max * im_max;
        if min_modulus < 1e-12 * scale {
            return Err(ContourFailure::NearZero);
        }
        let w = total.im / (2.0 * PI);
        let rounded = w.round();
        if (w - rounded).abs() <= WINDING_INTEGER && total.re.abs() <= 2.0 * PI * WINDING_INTEGER {
            let n = rounded as i64;
            if previous == Some(n) {
                return usize::try_from(n).map_err(|_| ContourFailure::NotInteger(w));
            }
            previous = Some(n);
        } else {
            previous = None;
        }
        tol *= 0.5;
    }
    Err(ContourFailure::NotInteger(f64::NAN))
}
