//! Subcommand bodies. Each resolves its parameters and returns the summary,
//! the files it produces and the resolved parameters for the manifest.

use std::fmt::Display;

use delayfront::characteristic::{c_sharp, roots_at_kappa, roots_at_zero};
use delayfront::greens::{default_step, default_support, n_kernel, psi_kernel, theta_kernel};
use delayfront::output::sig6;
use delayfront::pde_sim::{run, write_snapshot_csv, write_trajectory_csv, SimConfig};
use delayfront::speed_curves::{sample_curves, write_curves_csv, Regime};
use delayfront::toy_front::{
    build_profile, limit_quantities, minimal_speed, nondelay_minimal_speed,
    oscillation_threshold, pushed_to_pulled_delay, t1, t2, upper_speed_bound,
};
use delayfront::ModelParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::args::{
    CurvesArgs, KernelArgs, ProfileArgs, RootsArgs, SimulateArgs, TableArgs, ToyArgs,
};
use crate::error::{CliError, CliResult};
use crate::settings::{flag_layer, resolve};

/// Result of one command.
#[derive(Debug, Default)]
pub struct Output {
    /// `key=value` lines printed on success.
    pub summary: Vec<(String, String)>,
    /// Printed instead of the summary when no output directory is given.
    pub stdout_csv: Option<String>,
    /// Files written under the output directory.
    pub files: Vec<(String, Vec<u8>)>,
    /// Resolved parameters recorded in the manifest.
    pub params: Value,
}

impl Output {
    fn new<P: Serialize>(params: &P) -> CliResult<Self> {
        Ok(Output {
            params: serde_json::to_value(params).map_err(|e| CliError::usage(e.to_string()))?,
            ..Output::default()
        })
    }

    fn line(&mut self, key: &str, value: impl Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.line(key, sig6(value));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::usage(e.to_string()))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn layers<A: Serialize, P: for<'de> Deserialize<'de>>(args: &A, file: Map<String, Value>) -> CliResult<P> {
    resolve(file, flag_layer(args)?)
}

fn toy(k: f64) -> CliResult<ModelParams> {
    Ok(ModelParams::toy(k)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootsParams {
    pub k: f64,
    pub c: Option<f64>,
    pub h: f64,
    pub slope_kappa: f64,
    pub kappa: f64,
    pub theta: f64,
}

impl Default for RootsParams {
    fn default() -> Self {
        RootsParams {
            k: 1.2,
            c: None,
            h: 0.0,
            slope_kappa: -1.0,
            kappa: 2.0,
            theta: 1.0,
        }
    }
}

pub fn roots(args: &RootsArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: RootsParams = layers(args, file)?;
    let c = p.c.ok_or_else(|| CliError::usage("roots needs a speed: --c"))?;
    let params = ModelParams::new(p.k, p.slope_kappa, p.kappa, p.theta)?;
    let zero = roots_at_zero(c, p.h, &params)?;
    let kappa = roots_at_kappa(c, p.h, &params)?;
    let sharp = c_sharp(p.h, &params)?;
    let mut out = Output::new(&p)?;
    if zero.exists {
        out.num("lambda1", zero.lambda1);
        out.num("lambda2", zero.lambda2);
    } else {
        out.line("lambda1", "none");
        out.line("lambda2", "none");
    }
    out.num("mu1", kappa.mu1);
    out.line("mu2", opt(kappa.mu2));
    out.line("mu3", opt(kappa.mu3));
    out.line("in_region_dkappa", kappa.in_region_dkappa);
    out.num("c_sharp", sharp.c);
    out.json(
        "roots.json",
        &serde_json::json!({ "roots_at_zero": zero, "roots_at_kappa": kappa, "c_sharp": sharp }),
    )?;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesParams {
    pub k: f64,
    pub h_max: f64,
    pub h_step: f64,
}

impl Default for CurvesParams {
    fn default() -> Self {
        CurvesParams {
            k: 1.2,
            h_max: 6.0,
            h_step: 0.05,
        }
    }
}

pub fn curves(args: &CurvesArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: CurvesParams = layers(args, file)?;
    if !(p.h_step > 0.0 && p.h_max >= 0.0 && (p.h_max / p.h_step) <= 1e6) {
        return Err(CliError::usage("need h_step > 0, h_max >= 0 and at most 1e6 rows"));
    }
    let n = (p.h_max / p.h_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * p.h_step).collect();
    let rows = sample_curves(&grid, &toy(p.k)?)?;
    let failed = rows.iter().filter(|r| r.sample.is_err()).count();
    let bytes = csv(|b| write_curves_csv(&rows, b))?;
    let mut out = Output::new(&p)?;
    out.line("rows", rows.len());
    out.line("failed_rows", failed);
    out.stdout_csv = Some(String::from_utf8_lossy(&bytes).into_owned());
    out.files.push(("curves.csv".into(), bytes));
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyParams {
    pub k: f64,
    pub h: Option<f64>,
    pub limits: bool,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            k: 1.2,
            h: None,
            limits: false,
        }
    }
}

pub fn toy_cmd(args: &ToyArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: ToyParams = layers(args, file)?;
    let mut out = Output::new(&p)?;
    let mut record = Map::new();
    let (c0, regime0) = nondelay_minimal_speed(p.k)?;
    out.num("c_star_nondelay", c0);
    out.line("regime_nondelay", regime0);
    let hp = pushed_to_pulled_delay(p.k)?;
    let hosc = oscillation_threshold(p.k)?;
    out.num("h_p", hp);
    out.line("h_osc", opt(hosc));
    record.insert("c_star_nondelay".into(), c0.into());
    record.insert("regime_nondelay".into(), regime0.as_str().into());
    record.insert("h_p".into(), finite_or_string(hp));
    record.insert("h_osc".into(), hosc.map_or(Value::Null, Value::from));
    if let Some(h) = p.h {
        let m = minimal_speed(h, p.k)?;
        // At a pulled speed the two decay rates coincide and p is undefined.
        let p_at_star = match m.regime {
            Regime::Pushed => Some(delayfront::toy_front::amplitude_p(m.c_star, h, p.k)?),
            Regime::Pulled => None,
        };
        let upper = upper_speed_bound(h)?;
        let t1v = t1(h, p.k)?;
        let t2v = t2(h, p.k)?;
        out.num("c_star", m.c_star);
        out.num("c_sharp", m.c_sharp);
        out.line("regime", m.regime);
        out.line("p", opt(p_at_star));
        out.num("c_upper", upper);
        out.num("T1", t1v);
        out.line("T2", opt(t2v));
        record.insert("minimal_speed".into(), to_value(&m)?);
        record.insert("p".into(), p_at_star.map_or(Value::Null, Value::from));
        record.insert("c_upper".into(), upper.into());
        record.insert("T1".into(), t1v.into());
        record.insert("T2".into(), t2v.map_or(Value::Null, Value::from));
    }
    if p.limits {
        let q = limit_quantities(p.k)?;
        out.num("w_plus", q.w_plus);
        out.num("rho", q.rho);
        out.num("lambda_inf", q.lambda_inf);
        out.num("mu_inf", q.mu_inf);
        out.num("T1_inf", q.t1_inf);
        out.num("w_minus", q.w_minus);
        out.num("rho_hat", q.rho_hat);
        out.line("lambda_hat_inf", opt(q.lambda_hat_inf));
        out.num("mu_hat_inf", q.mu_hat_inf);
        out.line("T2_inf", opt(q.t2_inf));
        record.insert("limits".into(), to_value(&q)?);
    }
    out.json("toy.json", &record)?;
    Ok(out)
}

/// Summary text of an optional value.
fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), sig6)
}

fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        v.into()
    } else {
        sig6(v).into()
    }
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::usage(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileParams {
    pub k: f64,
    pub h: f64,
    pub c: Option<f64>,
    pub t_max: f64,
    pub grid_step: f64,
    pub tail_span: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            k: 1.2,
            h: 0.5,
            c: None,
            t_max: 60.0,
            grid_step: 0.01,
            tail_span: 10.0,
        }
    }
}

pub fn profile(args: &ProfileArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: ProfileParams = layers(args, file)?;
    let c = match p.c {
        Some(c) => c,
        None => minimal_speed(p.h, p.k)?.c_star,
    };
    if !(p.tail_span >= 0.0 && p.tail_span.is_finite()) {
        return Err(CliError::usage("tail_span must be finite and nonnegative"));
    }
    let prof = build_profile(c, p.h, p.k, p.t_max, p.grid_step)?;
    let mut out = Output::new(&p)?;
    out.num("c", c);
    out.num("p", prof.p);
    out.num("lambda1", prof.lambda1);
    out.num("lambda2", prof.lambda2);
    out.num("mu1", prof.mu1);
    out.line("classification", prof.classification.as_str());
    out.num("max_phi", prof.max_phi());
    out.num("tail_exponent", prof.tail_exponent());
    out.num("residual_max", prof.residual_max);
    out.num("settle_time", prof.settle_time);
    out.num("terminal_time", prof.terminal_time);
    let bytes = csv(|b| prof.write_csv(p.tail_span, b))?;
    out.files.push(("profile.csv".into(), bytes));
    out.json("profile_header.json", &prof.header())?;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub k: f64,
    pub h: f64,
    pub c: Option<f64>,
    pub t_max: Option<f64>,
    pub step: Option<f64>,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            k: 1.2,
            h: 0.5,
            c: None,
            t_max: None,
            step: None,
        }
    }
}

pub fn kernel(args: &KernelArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: KernelParams = layers(args, file)?;
    let params = toy(p.k)?;
    let c = match p.c {
        Some(c) => c,
        None => minimal_speed(p.h, p.k)?.c_star,
    };
    let t_max = match p.t_max {
        Some(t) => t,
        None => default_support(c, p.h, &params)?,
    };
    let step = p.step.unwrap_or_else(|| default_step(c, p.h));
    let psi = psi_kernel(c, p.h, &params, t_max, step)?;
    let n = n_kernel(c, p.h, &params, t_max, step)?;
    let mu2 = roots_at_kappa(c, p.h, &params)?
        .mu2
        .ok_or_else(|| delayfront::Error::Domain("no negative root at kappa".into()))?;
    let mut out = Output::new(&p)?;
    out.num("c", c);
    out.num("mu2", mu2);
    out.num("step", psi.step);
    out.num("t_max", psi.t_max);
    out.num("psi_jump", psi.values[psi.zero_index] - psi.left_at_zero);
    out.num("psi_max", psi.max_value());
    out.num("n_max", n.max_value());
    out.num("n_integral", n.integral());
    out.files.push(("psi.csv".into(), csv(|b| psi.write_csv(b))?));
    out.files.push(("n.csv".into(), csv(|b| n.write_csv(b))?));
    let theta = csv(|b| {
        use std::io::Write;
        writeln!(b, "t,value")?;
        for i in 0..psi.values.len() {
            let t = psi.t(i);
            writeln!(b, "{},{}", sig6(t), sig6(theta_kernel(t, mu2)))?;
        }
        Ok(())
    })?;
    out.files.push(("theta.csv".into(), theta));
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub k: f64,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub bc_left: f64,
    pub bc_right: f64,
    pub level: f64,
    pub step_at: f64,
    pub snapshots: Vec<f64>,
    pub window_fraction: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        let d = SimConfig::default();
        SimulateParams {
            k: d.k,
            h: 0.5,
            x_min: d.x_min,
            x_max: d.x_max,
            dx: d.dx,
            dt: d.dt,
            t_end: d.t_end,
            bc_left: d.bc_left,
            bc_right: d.bc_right,
            level: d.level,
            step_at: d.step_at,
            snapshots: d.snapshot_times,
            window_fraction: d.window_fraction,
        }
    }
}

pub fn simulate(args: &SimulateArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: SimulateParams = layers(args, file)?;
    let cfg = SimConfig {
        x_min: p.x_min,
        x_max: p.x_max,
        dx: p.dx,
        dt: p.dt,
        h: p.h,
        k: p.k,
        t_end: p.t_end,
        bc_left: p.bc_left,
        bc_right: p.bc_right,
        level: p.level,
        step_at: p.step_at,
        snapshot_times: p.snapshots.clone(),
        window_fraction: p.window_fraction,
    };
    let r = run(&cfg)?;
    let mut out = Output::new(&p)?;
    out.num("c_ns", r.c_ns);
    out.num("fit_t_lo", r.fit_window.0);
    out.num("fit_t_hi", r.fit_window.1);
    out.num("fit_residual", r.fit_residual);
    out.num("u_min", r.u_min);
    out.num("u_max", r.u_max);
    out.num("final_time", r.final_time);
    out.line("trajectory_points", r.level_trajectory.len());
    out.line("snapshots", r.snapshots.len());
    out.files.push((
        "trajectory.csv".into(),
        csv(|b| write_trajectory_csv(&r.level_trajectory, b))?,
    ));
    for s in &r.snapshots {
        out.files.push((
            format!("snapshot_t{}.csv", sig6(s.t)),
            csv(|b| write_snapshot_csv(&cfg, s, b))?,
        ));
    }
    let last = delayfront::pde_sim::Snapshot {
        t: r.final_time,
        u: r.final_u.clone(),
    };
    out.files.push(("final.csv".into(), csv(|b| write_snapshot_csv(&cfg, &last, b))?));
    out.json(
        "simulate.json",
        &serde_json::json!({
            "c_ns": r.c_ns,
            "fit_window": r.fit_window,
            "fit_residual": r.fit_residual,
            "u_min": r.u_min,
            "u_max": r.u_max,
            "final_time": r.final_time,
        }),
    )?;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableParams {
    pub k: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for TableParams {
    fn default() -> Self {
        let d = SimConfig::default();
        TableParams {
            k: d.k,
            dx: d.dx,
            dt: d.dt,
            t_end: d.t_end,
            x_min: d.x_min,
            x_max: d.x_max,
        }
    }
}

/// Delays of the comparison table.
pub const TABLE_DELAYS: [f64; 12] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0];

pub fn table(args: &TableArgs, file: Map<String, Value>) -> CliResult<Output> {
    let p: TableParams = layers(args, file)?;
    let params = toy(p.k)?;
    let rows: Vec<CliResult<(f64, f64, f64, f64)>> = TABLE_DELAYS
        .par_iter()
        .map(|&h| {
            let sharp = c_sharp(h, &params)?.c;
            let star = minimal_speed(h, p.k)?.c_star;
            let cfg = SimConfig {
                x_min: p.x_min,
                x_max: p.x_max,
                dx: p.dx,
                dt: p.dt,
                h,
                k: p.k,
                t_end: p.t_end,
                ..SimConfig::default()
            };
            Ok((h, sharp, star, run(&cfg)?.c_ns))
        })
        .collect();
    let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut text = String::from("h,c_sharp,c_star,c_ns\n");
    let mut worst: f64 = 0.0;
    for (h, sharp, star, ns) in &rows {
        text.push_str(&format!("{},{},{},{}\n", sig6(*h), sig6(*sharp), sig6(*star), sig6(*ns)));
        worst = worst.max((ns - star).abs() / star);
    }
    let mut out = Output::new(&p)?;
    out.line("rows", rows.len());
    out.num("max_relative_gap", worst);
    out.stdout_csv = Some(text.clone());
    out.files.push(("table.csv".into(), text.into_bytes()));
    Ok(out)
}
