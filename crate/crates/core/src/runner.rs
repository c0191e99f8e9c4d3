//! Command implementations behind the `odefilter` binary.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filter::{solve, Trajectory};
use crate::fourier::FourierParams;
use crate::hybrid::{hybrid_solve, HybridConfig, TrainNoise, TrainPolicy};
use crate::io::{parse_csv, render_svg, write_csv};
use crate::problems::{grid_steps, lookup, rk4_reference, ProblemSpec};
use crate::taylor::{TaylorParams, TaylorSsm};

/// Finest step of the RK4 reference.
pub const REFERENCE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Taylor,
    Hybrid,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor" => Ok(Method::Taylor),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(Error::contract(format!(
                "unknown method '{other}' (taylor, hybrid)"
            ))),
        }
    }
}

/// Everything needed for one solve. `None` horizons fall back to the
/// problem's `T` and `3T/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub method: Method,
    pub h: f64,
    pub t_end: Option<f64>,
    pub t_pred: Option<f64>,
    pub taylor: TaylorParams,
    pub fourier: FourierParams,
    pub r: f64,
    pub train_policy: TrainPolicy,
    pub train_noise: TrainNoise,
    pub fhn_standard: bool,
    pub with_reference: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "vdp".into(),
            method: Method::Hybrid,
            h: 0.01,
            t_end: None,
            t_pred: None,
            taylor: TaylorParams::default(),
            fourier: FourierParams::default(),
            r: 0.0,
            train_policy: TrainPolicy::default(),
            train_noise: TrainNoise::default(),
            fhn_standard: false,
            with_reference: false,
        }
    }
}

impl RunConfig {
    pub fn spec(&self) -> Result<ProblemSpec> {
        let mut spec = lookup(&self.problem, self.fhn_standard)?;
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                return Err(Error::contract(format!("T must be > 0, got {t}")));
            }
            spec.ivp.t_end = t;
        }
        Ok(spec)
    }

    pub fn hybrid_config(&self, t_end: f64) -> HybridConfig {
        HybridConfig {
            taylor: self.taylor,
            fourier: self.fourier,
            t_pred: self.t_pred.unwrap_or(0.75 * t_end),
            h: self.h,
            r: self.r,
            train_policy: self.train_policy,
            train_noise: self.train_noise,
        }
    }
}

/// Solution values on the grid `t_k = k h`, `k = 0..=steps`: closed form when
/// known, otherwise RK4 with a step dividing `h` and at most [`REFERENCE_STEP`].
pub fn reference_on_grid(spec: &ProblemSpec, h: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    if let Some(exact) = &spec.exact {
        return Ok((0..=steps).map(|k| exact(k as f64 * h)).collect());
    }
    let sub = ((h / REFERENCE_STEP).round() as usize).max(10);
    let ivp = spec.ivp.clone().with_t_end(steps as f64 * h);
    let rk = rk4_reference(&ivp, h / sub as f64)?;
    Ok((0..=steps).map(|k| rk.states[k * sub].clone()).collect())
}

pub fn run_solve(config: &RunConfig) -> Result<(Trajectory, Option<Vec<Vec<f64>>>)> {
    let spec = config.spec()?;
    let ivp = &spec.ivp;
    let traj = match config.method {
        Method::Taylor => solve(
            &TaylorSsm::new(config.taylor)?,
            ivp,
            config.h,
            config.r,
            ivp.t_end,
        )?,
        Method::Hybrid => hybrid_solve(&config.hybrid_config(ivp.t_end), ivp)?,
    };
    let reference = if config.with_reference {
        Some(reference_on_grid(&spec, config.h, traj.len() - 1)?)
    } else {
        None
    };
    Ok((traj, reference))
}

/// `solve`: run and render the CSV.
pub fn cmd_solve(config: &RunConfig) -> Result<Vec<u8>> {
    let (traj, reference) = run_solve(config)?;
    let mut out = Vec::new();
    write_csv(&mut out, &traj, reference.as_deref())?;
    Ok(out)
}

/// `plot`: CSV text in, SVG text out.
pub fn cmd_plot(csv_text: &str) -> Result<String> {
    Ok(render_svg(&parse_csv(csv_text)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub problem: String,
    pub q: usize,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log e` against `log h`; `None` when every
    /// error is at roundoff level.
    pub order: Option<f64>,
}

/// Errors at or below this are treated as exact.
pub const EXACT_ERROR: f64 = 1e-9;

/// Max-over-grid error of the Taylor filter mean for each step size.
pub fn convergence_study(
    spec: &ProblemSpec,
    taylor: TaylorParams,
    r: f64,
    steps: &[f64],
) -> Result<ConvergenceStudy> {
    if steps.len() < 3 {
        return Err(Error::contract(
            "convergence study needs at least three step sizes",
        ));
    }
    if steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::contract("step sizes must be strictly decreasing"));
    }
    let ssm = TaylorSsm::new(taylor)?;
    let ivp = &spec.ivp;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = steps
            .iter()
            .map(|&h| {
                let ssm = &ssm;
                scope.spawn(move || -> Result<ConvergenceRow> {
                    let n = grid_steps(ivp.t_end, h)?;
                    let traj = solve(ssm, ivp, h, r, ivp.t_end)?;
                    let reference = reference_on_grid(spec, h, n)?;
                    let error = traj
                        .records
                        .iter()
                        .zip(&reference)
                        .flat_map(|(rec, x)| {
                            rec.marginals.iter().zip(x).map(|(m, v)| (m.mean - v).abs())
                        })
                        .fold(0.0, f64::max);
                    Ok(ConvergenceRow { h, error })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let order = if rows.iter().all(|r| r.error <= EXACT_ERROR) {
        None
    } else {
        Some(fitted_order(&rows))
    };
    Ok(ConvergenceStudy {
        problem: spec.name.clone(),
        q: taylor.q,
        rows,
        order,
    })
}

fn fitted_order(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.h.ln(), r.error.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn format_convergence(study: &ConvergenceStudy) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# problem={} q={}", study.problem, study.q);
    let _ = writeln!(s, "{:>12}  {:>24}", "h", "global_error");
    for r in &study.rows {
        let _ = writeln!(s, "{:>12}  {:>24.16e}", r.h, r.error);
    }
    match study.order {
        Some(p) => {
            let _ = writeln!(s, "fitted order: {p:.4}");
        }
        None => {
            let _ = writeln!(s, "fitted order: exact");
        }
    }
    s
}
