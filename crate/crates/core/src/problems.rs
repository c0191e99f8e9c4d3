//! Benchmark initial value problems and a classical RK4 reference solver.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::filter::IVProblem;

/// Names accepted by [`lookup`].
pub const PROBLEM_NAMES: [&str; 5] = ["vdp", "fhn", "linear", "constant", "cosine"];

/// Closed-form solution of a scalar or vector problem, when known.
pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A named problem with its default parameters.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub ivp: IVProblem,
    pub defaults: BTreeMap<String, f64>,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("ivp", &self.ivp)
            .field("defaults", &self.defaults)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// Van der Pol oscillator, `x(0) = [1, -1]`, `T = 50`.
pub fn vdp(mu: f64) -> Result<IVProblem> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::contract(format!(
            "vdp: mu must be nonzero, got {mu}"
        )));
    }
    Ok(IVProblem::new(
        "vdp",
        vec![1.0, -1.0],
        50.0,
        move |x: &[f64], _t| vec![mu * (x[0] - x[0].powi(3) / 3.0 - x[1]), x[0] / mu],
    ))
}

/// FitzHugh–Nagumo model, `x(0) = [1, 0.1]`, `T = 50`.
///
/// With `standard = false` the recovery equation is `(x1 + a - x2) / tau` and `b`
/// is unused; `standard = true` uses `(x1 + a - b x2) / tau`.
pub fn fhn(i_ext: f64, a: f64, b: f64, tau: f64, standard: bool) -> Result<IVProblem> {
    if tau == 0.0 || !tau.is_finite() {
        return Err(Error::contract(format!(
            "fhn: tau must be nonzero, got {tau}"
        )));
    }
    let b = if standard { b } else { 1.0 };
    Ok(IVProblem::new(
        "fhn",
        vec![1.0, 0.1],
        50.0,
        move |x: &[f64], _t| {
            vec![
                x[0] - x[0].powi(3) / 3.0 - x[1] + i_ext,
                (x[0] + a - b * x[1]) / tau,
            ]
        },
    ))
}

/// `x' = -x`, `x(0) = 1`.
pub fn linear() -> IVProblem {
    IVProblem::new("linear", vec![1.0], 1.0, |x: &[f64], _t| vec![-x[0]])
}

/// `x' = 0`, `x(0) = 1`.
pub fn constant() -> IVProblem {
    IVProblem::new("constant", vec![1.0], 2.0, |_x: &[f64], _t| vec![0.0])
}

/// `x' = -sin(t)`, `x(0) = 1`, solution `cos(t)`; runs three periods.
pub fn cosine() -> IVProblem {
    IVProblem::new("cosine", vec![1.0], 6.0 * PI, |_x: &[f64], t: f64| {
        vec![-t.sin()]
    })
}

/// Look up a named problem with its experiment defaults.
pub fn lookup(name: &str, fhn_standard: bool) -> Result<ProblemSpec> {
    let defaults = |pairs: &[(&str, f64)]| {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect::<BTreeMap<_, _>>()
    };
    let (ivp, defaults, exact): (IVProblem, _, Option<ExactSolution>) = match name {
        "vdp" => (vdp(5.0)?, defaults(&[("mu", 5.0)]), None),
        "fhn" => (
            fhn(0.5, 0.7, 0.8, 10.0, fhn_standard)?,
            defaults(&[("I", 0.5), ("a", 0.7), ("b", 0.8), ("tau", 10.0)]),
            None,
        ),
        "linear" => (
            linear(),
            defaults(&[]),
            Some(Arc::new(|t: f64| vec![(-t).exp()])),
        ),
        "constant" => (
            constant(),
            defaults(&[]),
            Some(Arc::new(|_t: f64| vec![1.0])),
        ),
        "cosine" => (
            cosine(),
            defaults(&[]),
            Some(Arc::new(|t: f64| vec![t.cos()])),
        ),
        other => {
            return Err(Error::contract(format!(
                "unknown problem '{other}' (expected one of {})",
                PROBLEM_NAMES.join(", ")
            )))
        }
    };
    Ok(ProblemSpec {
        name: name.to_string(),
        ivp,
        defaults,
        exact,
    })
}

/// States of a classical solver on a uniform grid `t_k = k * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub step: f64,
    pub states: Vec<Vec<f64>>,
}

impl ReferenceSolution {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// State at a time that lies on the reference grid.
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        let k = (t / self.step).round();
        if k < 0.0 || ((k * self.step) - t).abs() > 1e-9 * t.abs().max(1.0) {
            return None;
        }
        self.states.get(k as usize).map(Vec::as_slice)
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("reference has the initial state")
    }
}

/// Classical fourth-order Runge–Kutta on `[0, ivp.t_end]` with step `h_ref`.
pub fn rk4_reference(ivp: &IVProblem, h_ref: f64) -> Result<ReferenceSolution> {
    if !(h_ref > 0.0 && h_ref.is_finite()) {
        return Err(Error::contract(format!("h_ref must be > 0, got {h_ref}")));
    }
    let n = grid_steps(ivp.t_end, h_ref)?;
    let d = ivp.dim();
    let mut states = Vec::with_capacity(n + 1);
    let mut x = ivp.x0.clone();
    states.push(x.clone());
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for step in 0..n {
        let t = step as f64 * h_ref;
        let k1 = ivp.eval(&x, t);
        let k2 = ivp.eval(&axpy(&x, &k1, 0.5 * h_ref), t + 0.5 * h_ref);
        let k3 = ivp.eval(&axpy(&x, &k2, 0.5 * h_ref), t + 0.5 * h_ref);
        let k4 = ivp.eval(&axpy(&x, &k3, h_ref), t + h_ref);
        for i in 0..d {
            x[i] += h_ref / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step: Some(step + 1),
                t: t + h_ref,
            });
        }
        states.push(x.clone());
    }
    Ok(ReferenceSolution {
        step: h_ref,
        states,
    })
}

/// Number of steps of size `h` covering `[0, t_end]`; must be integral within 1e-9.
pub fn grid_steps(t_end: f64, h: f64) -> Result<usize> {
    let ratio = t_end / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * n.max(1.0) || n < 0.0 {
        return Err(Error::contract(format!(
            "interval {t_end} is not a whole number of steps of size {h}"
        )));
    }
    Ok(n as usize)
}
