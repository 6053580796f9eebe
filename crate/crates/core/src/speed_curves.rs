//! Curves organizing the `(h, c)` plane: the critical delay `h*`, the
//! boundary `c(h)` of the region `D*`, the boundary `c_kappa(h)` of
//! `D_kappa`, and the linear speed `c#(h)`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristic::{c_kappa_curve, c_sharp, critical_delay, roots_at_kappa};
use crate::error::{Error, Result};
use crate::output::{sig6, sig6_opt};
use crate::params::ModelParams;
use crate::toy_front;

/// Character of the minimal front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Minimal speed strictly above the linear speed.
    Pushed,
    /// Minimal speed equal to the linear speed.
    Pulled,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Pushed => "pushed",
            Regime::Pulled => "pulled",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Critical delay `h*`: the root of `|g'(kappa)| h e^{h+1} = 1`.
pub fn h_star(slope_kappa: f64) -> Result<f64> {
    critical_delay(slope_kappa)
}

/// Right end `1 / |g'(kappa)|` of the interval on which `c(h)` is defined.
pub fn h_upper(slope_kappa: f64) -> Result<f64> {
    if !(slope_kappa < 0.0 && slope_kappa.is_finite()) {
        return Err(Error::domain(format!(
            "slope at kappa must be negative, got {slope_kappa}"
        )));
    }
    Ok(1.0 / slope_kappa.abs())
}

/// Boundary `c(h)` of the region `D*` on `(h*, 1/|g'(kappa)|]`.
pub fn c_bound_curve(h: f64, slope_kappa: f64) -> Result<f64> {
    let lo = h_star(slope_kappa)?;
    let hi = h_upper(slope_kappa)?;
    if !(h > lo && h <= hi) {
        return Err(Error::domain(format!(
            "c(h) is defined on ({lo}, {hi}], got h = {h}"
        )));
    }
    let l = (h * slope_kappa.abs()).ln();
    if l == 0.0 {
        return Ok(0.0);
    }
    let d = h * (1.0 + h + l);
    if d <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-l / d.sqrt())
}

/// Membership of `(h, c)` in `D*` given the root `mu2` at the positive state.
pub fn in_region_dstar(h: f64, c: f64, slope_kappa: f64, mu2: f64) -> bool {
    1.0 + h * slope_kappa * (-mu2 * c * h).exp() > 0.0
}

/// All curves at one delay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedCurveSample {
    pub h: f64,
    pub c_sharp: f64,
    pub c_kappa: Option<f64>,
    pub c_bound: Option<f64>,
    /// Minimal speed; filled for the toy birth law only.
    pub c_star: Option<f64>,
    pub regime: Option<Regime>,
    /// Whether `(h, c_star)` lies in `D_kappa`.
    pub monotone_front: Option<bool>,
}

/// One grid row: the delay and either its sample or the failure.
#[derive(Debug)]
pub struct CurveRow {
    pub h: f64,
    pub sample: Result<SpeedCurveSample>,
}

/// Default grid `0, 0.05, ..., 6`.
pub fn default_h_grid() -> Vec<f64> {
    (0..=120).map(|i| i as f64 * 0.05).collect()
}

fn sample_one(h: f64, params: &ModelParams) -> Result<SpeedCurveSample> {
    let hs = h_star(params.slope_kappa)?;
    let hu = h_upper(params.slope_kappa)?;
    let c_sharp = c_sharp(h, params)?.c;
    let c_kappa = if h > hs {
        Some(c_kappa_curve(h, params)?)
    } else {
        None
    };
    let c_bound = if h > hs && h <= hu {
        let v = c_bound_curve(h, params.slope_kappa)?;
        v.is_finite().then_some(v)
    } else {
        None
    };
    let (c_star, regime, monotone_front) = if params.is_toy() {
        let ms = toy_front::minimal_speed(h, params.slope_zero)?;
        let inside = roots_at_kappa(ms.c_star, h, params)?.in_region_dkappa;
        (Some(ms.c_star), Some(ms.regime), Some(inside))
    } else {
        (None, None, None)
    };
    Ok(SpeedCurveSample {
        h,
        c_sharp,
        c_kappa,
        c_bound,
        c_star,
        regime,
        monotone_front,
    })
}

/// Samples every curve on `h_grid`, one row per grid point in grid order.
///
/// Rows are computed in parallel. A failing row keeps its error and does not
/// abort the sweep.
pub fn sample_curves(h_grid: &[f64], params: &ModelParams) -> Result<Vec<CurveRow>> {
    params.validate()?;
    if h_grid.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
        return Err(Error::domain("delay grid must be finite and nonnegative"));
    }
    if h_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("delay grid must be sorted ascending"));
    }
    Ok(h_grid
        .par_iter()
        .map(|&h| CurveRow {
            h,
            sample: sample_one(h, params),
        })
        .collect())
}

/// CSV header of [`write_curves_csv`].
pub const CURVES_HEADER: &str = "h,c_sharp,c_kappa,c_bound,c_star,regime,monotone_front";

/// Writes rows as CSV. Absent values are empty fields; a failed row has every
/// value empty and `failed` in the regime column.
pub fn write_curves_csv<W: Write>(rows: &[CurveRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CURVES_HEADER}")?;
    for row in rows {
        match &row.sample {
            Ok(s) => writeln!(
                w,
                "{},{},{},{},{},{},{}",
                sig6(s.h),
                sig6(s.c_sharp),
                sig6_opt(s.c_kappa),
                sig6_opt(s.c_bound),
                sig6_opt(s.c_star),
                s.regime.map(Regime::as_str).unwrap_or_default(),
                s.monotone_front.map(|b| b.to_string()).unwrap_or_default(),
            )?,
            Err(_) => writeln!(w, "{},,,,,failed,", sig6(row.h))?,
        }
    }
    Ok(())
}
