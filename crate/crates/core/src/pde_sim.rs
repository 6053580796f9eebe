//! Crank-Nicolson simulation of `u_t = u_xx - u + g(u(t - h, x))` with the
//! piecewise-linear birth law on a bounded interval with Dirichlet ends.

use std::collections::VecDeque;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::sig6;
use crate::params::{check_toy_slope, toy_birth};
use crate::toy_front::least_squares_slope;

/// Distance from the left end at which a run stops.
pub const STOP_MARGIN: f64 = 5.0;
/// Smallest number of trajectory points in a speed fit.
pub const MIN_FIT_POINTS: usize = 100;

/// Discretization and problem data of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub h: f64,
    pub k: f64,
    pub t_end: f64,
    pub bc_left: f64,
    pub bc_right: f64,
    /// Level whose leftmost crossing is tracked.
    pub level: f64,
    /// Initial data is `bc_left` left of this point and `bc_right` from it on.
    pub step_at: f64,
    /// Times at which the solution is recorded.
    pub snapshot_times: Vec<f64>,
    /// Trailing fraction of the trajectory used for the speed fit.
    pub window_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            x_min: -25.0,
            x_max: 25.0,
            dx: 0.05,
            dt: 0.01,
            h: 0.0,
            k: 1.2,
            t_end: 1000.0,
            bc_left: 0.0,
            bc_right: 2.0,
            level: 1.0,
            step_at: 0.0,
            snapshot_times: Vec::new(),
            window_fraction: 0.5,
        }
    }
}

fn whole_multiple(x: f64, unit: f64) -> Option<usize> {
    let q = x / unit;
    let r = q.round();
    ((q - r).abs() <= 1e-9 * q.abs().max(1.0)).then_some(r as usize)
}

impl SimConfig {
    /// Number of grid points.
    pub fn grid_len(&self) -> Result<usize> {
        whole_multiple(self.x_max - self.x_min, self.dx)
            .map(|n| n + 1)
            .ok_or_else(|| Error::config("(x_max - x_min)/dx must be an integer"))
    }

    /// Delay in time steps.
    pub fn delay_steps(&self) -> Result<usize> {
        whole_multiple(self.h, self.dt)
            .ok_or_else(|| Error::config("h/dt must be an integer"))
    }

    pub fn validate(&self) -> Result<()> {
        check_toy_slope(self.k)?;
        let finite = [
            self.x_min, self.x_max, self.dx, self.dt, self.h, self.t_end, self.bc_left,
            self.bc_right, self.level, self.step_at,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("configuration values must be finite"));
        }
        if !(self.x_max > self.x_min && self.dx > 0.0 && self.dt > 0.0 && self.t_end > 0.0) {
            return Err(Error::config(
                "need x_max > x_min and positive dx, dt, t_end",
            ));
        }
        if self.h < 0.0 {
            return Err(Error::config("delay must be nonnegative"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return Err(Error::config("window_fraction must lie in (0, 1)"));
        }
        if self.grid_len()? < 3 {
            return Err(Error::config("grid needs at least three points"));
        }
        self.delay_steps()?;
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }
}

trait CeilSnapped {
    fn ceil_snapped(self) -> Self;
}

impl CeilSnapped for f64 {
    /// Ceiling that treats values within `1e-9` of an integer as that integer.
    fn ceil_snapped(self) -> f64 {
        let r = self.round();
        if (self - r).abs() <= 1e-9 {
            r
        } else {
            self.ceil()
        }
    }
}

/// Tridiagonal matrix with constant interior stencil and identity boundary
/// rows, factored once for repeated forward elimination and back substitution.
#[derive(Debug, Clone)]
struct Tridiagonal {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag[i] - lower[i] * prev;
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = upper[i] * inv_pivot[i];
            prev = upper_mod[i];
        }
        Tridiagonal {
            lower,
            upper_mod,
            inv_pivot,
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_in_place(&self, d: &mut [f64]) {
        let n = d.len();
        let mut prev = 0.0;
        for i in 0..n {
            d[i] = (d[i] - self.lower[i] * prev) * self.inv_pivot[i];
            prev = d[i];
        }
        for i in (0..n - 1).rev() {
            d[i] -= self.upper_mod[i] * d[i + 1];
        }
    }
}

/// Solves a general tridiagonal system by forward elimination and back
/// substitution; `lower[0]` and `upper[n - 1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    lo[0] = 0.0;
    up[n - 1] = 0.0;
    let t = Tridiagonal::new(lo, diag.to_vec(), up);
    let mut d = rhs.to_vec();
    t.solve_in_place(&mut d);
    d
}

/// Solution levels `u(t - h), ..., u(t)` and the current time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub config: SimConfig,
    pub t: f64,
    pub steps: usize,
    /// Oldest level first; the last entry is the current solution.
    pub history: VecDeque<Vec<f64>>,
    matrix: Tridiagonal,
}

impl SimState {
    pub fn current(&self) -> &[f64] {
        self.history.back().expect("history is never empty")
    }
}

/// Initial state: `delay_steps + 1` copies of the step function.
pub fn init_cauchy(config: &SimConfig) -> Result<SimState> {
    config.validate()?;
    let n = config.grid_len()?;
    let m = config.delay_steps()?;
    let first_right = ((config.step_at - config.x_min) / config.dx).ceil_snapped();
    let mut u0: Vec<f64> = (0..n)
        .map(|i| {
            if (i as f64) < first_right {
                config.bc_left
            } else {
                config.bc_right
            }
        })
        .collect();
    u0[0] = config.bc_left;
    u0[n - 1] = config.bc_right;

    let r = config.dt / (2.0 * config.dx * config.dx);
    let mut lower = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r + 0.5 * config.dt; n];
    let mut upper = vec![-r; n];
    lower[0] = 0.0;
    upper[0] = 0.0;
    diag[0] = 1.0;
    lower[n - 1] = 0.0;
    upper[n - 1] = 0.0;
    diag[n - 1] = 1.0;

    Ok(SimState {
        config: config.clone(),
        t: 0.0,
        steps: 0,
        history: std::iter::repeat_n(u0, m + 1).collect(),
        matrix: Tridiagonal::new(lower, diag, upper),
    })
}

/// Right-hand side of the implicit system for source `src`.
fn explicit_part(state: &SimState, u: &[f64], src: impl Fn(usize) -> f64) -> Vec<f64> {
    let c = &state.config;
    let n = u.len();
    let r = c.dt / (2.0 * c.dx * c.dx);
    let mut d = vec![0.0; n];
    d[0] = c.bc_left;
    d[n - 1] = c.bc_right;
    for i in 1..n - 1 {
        d[i] = u[i] + r * (u[i - 1] - 2.0 * u[i] + u[i + 1]) - 0.5 * c.dt * u[i] + src(i);
    }
    d
}

/// Advances by one time step.
///
/// Diffusion and the `-u` term are averaged between the old and new levels;
/// the delayed source is the average of `g` at the stored levels `t - h` and
/// `t + dt - h`. Without delay the new-level source is taken from a
/// predictor step and the corrector is solved once.
pub fn cn_step(state: &mut SimState) -> Result<()> {
    let k = state.config.k;
    let dt = state.config.dt;
    let m = state.history.len() - 1;
    let u = state.current().to_vec();
    let next = if m == 0 {
        let g0: Vec<f64> = u.iter().map(|&v| toy_birth(v, k)).collect();
        let mut pred = explicit_part(state, &u, |i| dt * g0[i]);
        state.matrix.solve_in_place(&mut pred);
        let mut corr = explicit_part(state, &u, |i| 0.5 * dt * (g0[i] + toy_birth(pred[i], k)));
        state.matrix.solve_in_place(&mut corr);
        corr
    } else {
        let old = &state.history[0];
        let newer = &state.history[1];
        let mut d = explicit_part(state, &u, |i| {
            0.5 * dt * (toy_birth(old[i], k) + toy_birth(newer[i], k))
        });
        state.matrix.solve_in_place(&mut d);
        d
    };
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::Instability(format!(
            "non-finite value at x = {} after t = {}",
            state.config.x(i),
            state.t
        )));
    }
    state.history.push_back(next);
    if state.history.len() > m + 1 {
        state.history.pop_front();
    }
    state.steps += 1;
    state.t = state.steps as f64 * dt;
    Ok(())
}

/// Leftmost position where `u` crosses `level` upward, by linear
/// interpolation between the bracketing nodes.
pub fn level_crossing(config: &SimConfig, u: &[f64], level: f64) -> Option<f64> {
    (0..u.len() - 1).find_map(|i| {
        let (a, b) = (u[i], u[i + 1]);
        (a < level && b >= level).then(|| config.x(i) + (level - a) / (b - a) * config.dx)
    })
}

/// Recorded solution at one time.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Outcome of a run.
#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub snapshots: Vec<Snapshot>,
    /// `(t, x_level)` after every step.
    pub level_trajectory: Vec<(f64, f64)>,
    pub c_ns: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Final solution and its time.
    pub final_time: f64,
    pub final_u: Vec<f64>,
}

/// Integrates until `t_end` or until the tracked level comes within
/// `STOP_MARGIN` of `x_min`, then fits the speed.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    let mut state = init_cauchy(config)?;
    let mut snap_times: Vec<f64> = config.snapshot_times.clone();
    snap_times.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let mut snapshots = Vec::new();
    let mut trajectory = Vec::new();
    let (mut u_min, mut u_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let eps = 0.5 * config.dt;
    while next_snap < snap_times.len() && snap_times[next_snap] <= eps {
        snapshots.push(Snapshot {
            t: 0.0,
            u: state.current().to_vec(),
        });
        next_snap += 1;
    }
    let total = (config.t_end / config.dt).round() as usize;
    for _ in 0..total {
        cn_step(&mut state)?;
        let u = state.current();
        for &v in u {
            u_min = u_min.min(v);
            u_max = u_max.max(v);
        }
        while next_snap < snap_times.len() && snap_times[next_snap] <= state.t + eps {
            snapshots.push(Snapshot {
                t: state.t,
                u: u.to_vec(),
            });
            next_snap += 1;
        }
        if let Some(x) = level_crossing(config, u, config.level) {
            trajectory.push((state.t, x));
            if x - config.x_min <= STOP_MARGIN {
                break;
            }
        }
    }
    let (c_ns, fit_window, fit_residual) = estimate_speed(&trajectory, config.window_fraction)?;
    Ok(SimResult {
        config: config.clone(),
        snapshots,
        level_trajectory: trajectory,
        c_ns,
        fit_window,
        fit_residual,
        u_min,
        u_max,
        final_time: state.t,
        final_u: state.current().to_vec(),
    })
}

/// Least-squares speed `|dx/dt|` over the trailing `window_fraction` of the
/// trajectory, with the fit window and the RMS deviation from the line.
pub fn estimate_speed(
    trajectory: &[(f64, f64)],
    window_fraction: f64,
) -> Result<(f64, (f64, f64), f64)> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::config("window_fraction must lie in (0, 1]"));
    }
    let n = trajectory.len();
    let count = (n as f64 * window_fraction).floor() as usize;
    if count < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "speed fit needs {MIN_FIT_POINTS} points, window has {count}"
        )));
    }
    let window = &trajectory[n - count..];
    let ts: Vec<f64> = window.iter().map(|p| p.0).collect();
    let xs: Vec<f64> = window.iter().map(|p| p.1).collect();
    let slope = least_squares_slope(&ts, &xs);
    let mt = ts.iter().sum::<f64>() / count as f64;
    let mx = xs.iter().sum::<f64>() / count as f64;
    let rms = (ts
        .iter()
        .zip(&xs)
        .map(|(t, x)| (x - (mx + slope * (t - mt))).powi(2))
        .sum::<f64>()
        / count as f64)
        .sqrt();
    Ok((slope.abs(), (ts[0], ts[count - 1]), rms))
}

/// Writes one snapshot as `x,u`.
pub fn write_snapshot_csv<W: Write>(config: &SimConfig, snap: &Snapshot, mut w: W) -> io::Result<()> {
    writeln!(w, "x,u")?;
    for (i, v) in snap.u.iter().enumerate() {
        writeln!(w, "{},{}", sig6(config.x(i)), sig6(*v))?;
    }
    Ok(())
}

/// Writes the trajectory as `t,x_level`.
pub fn write_trajectory_csv<W: Write>(trajectory: &[(f64, f64)], mut w: W) -> io::Result<()> {
    writeln!(w, "t,x_level")?;
    for (t, x) in trajectory {
        writeln!(w, "{},{}", sig6(*t), sig6(*x))?;
    }
    Ok(())
}
