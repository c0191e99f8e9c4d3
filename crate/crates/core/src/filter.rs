//! The Gaussian ODE filter loop.
//!
//! Each coordinate of a `d`-dimensional problem carries its own state space
//! model. Every step predicts all coordinates, evaluates the vector field once
//! at the jointly assembled predicted mean, then conditions each coordinate's
//! derivative on the matching component of that evaluation.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filtering::{predict, update, GaussianBelief, MeasurementModel};
use crate::problems::grid_steps;
use crate::ssm::{Phase, StateSpaceModel};

/// Vector field `f(x, t)`.
pub type VectorField = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Initial value problem `x' = f(x, t)`, `x(0) = x0` on `[0, t_end]`.
#[derive(Clone)]
pub struct IVProblem {
    pub name: String,
    pub field: VectorField,
    pub x0: Vec<f64>,
    pub t_end: f64,
}

impl IVProblem {
    pub fn new<F>(name: impl Into<String>, x0: Vec<f64>, t_end: f64, field: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            field: Arc::new(field),
            x0,
            t_end,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.field)(x, t)
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }
}

impl fmt::Debug for IVProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IVProblem")
            .field("name", &self.name)
            .field("x0", &self.x0)
            .field("t_end", &self.t_end)
            .finish_non_exhaustive()
    }
}

/// Mean and variance of the solution value `H0 X` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginal {
    pub mean: f64,
    pub var: f64,
}

impl Marginal {
    pub fn std(&self) -> f64 {
        self.var.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub phase: Phase,
    /// One belief per ODE coordinate.
    pub beliefs: Vec<GaussianBelief>,
    /// Value marginals under the phase's `H0`.
    pub marginals: Vec<Marginal>,
}

impl Record {
    pub fn new(t: f64, phase: Phase, beliefs: Vec<GaussianBelief>, h0: &DVector<f64>) -> Self {
        let marginals = beliefs
            .iter()
            .map(|b| {
                let (mean, var) = b.project(h0);
                Marginal { mean, var }
            })
            .collect();
        Self {
            t,
            phase,
            beliefs,
            marginals,
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.mean).collect()
    }
}

/// Filter output on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub problem: String,
    pub step: f64,
    pub records: Vec<Record>,
    /// Vector-field evaluations made by the step loop. The single evaluation
    /// `f(x0)` used for initialization is not included.
    pub step_evaluations: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.records.first().map_or(0, |r| r.marginals.len())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.t)
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }
}

/// `f(m, t)` at the assembled value means `m_i = H0 · mean_i`.
pub fn evaluate_measurement(
    beliefs: &[GaussianBelief],
    ivp: &IVProblem,
    h0: &DVector<f64>,
    t: f64,
) -> Result<Vec<f64>> {
    if beliefs.len() != ivp.dim() {
        return Err(Error::DimensionMismatch {
            expected: ivp.dim(),
            actual: beliefs.len(),
            context: "beliefs per coordinate",
        });
    }
    let m: Vec<f64> = beliefs.iter().map(|b| h0.dot(b.mean())).collect();
    let z = ivp.eval(&m, t);
    if z.len() != ivp.dim() {
        return Err(Error::DimensionMismatch {
            expected: ivp.dim(),
            actual: z.len(),
            context: "vector field output",
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { step: None, t });
    }
    Ok(z)
}

/// Run the ODE filter with step `h` and measurement noise `r` on `[0, t_end]`.
pub fn solve(
    ssm: &dyn StateSpaceModel,
    ivp: &IVProblem,
    h: f64,
    r: f64,
    t_end: f64,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::contract(format!("step size must be > 0, got {h}")));
    }
    if t_end > ivp.t_end * (1.0 + 1e-12) {
        return Err(Error::contract(format!(
            "t_end {t_end} exceeds the problem horizon {}",
            ivp.t_end
        )));
    }
    let steps = grid_steps(t_end, h)?;
    let proj = ssm.projections();
    if proj.dim() != ssm.dim() {
        return Err(Error::DimensionMismatch {
            expected: ssm.dim(),
            actual: proj.dim(),
            context: "projections",
        });
    }

    let dx0 = ivp.eval(&ivp.x0, 0.0);
    if dx0.len() != ivp.dim() {
        return Err(Error::DimensionMismatch {
            expected: ivp.dim(),
            actual: dx0.len(),
            context: "vector field output",
        });
    }
    if dx0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            step: Some(0),
            t: 0.0,
        });
    }
    let mut beliefs = ivp
        .x0
        .iter()
        .zip(&dx0)
        .map(|(&x, &dx)| ssm.init(x, dx))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at_step(0))?;

    let trans = ssm.transition(h)?;
    let mut records = Vec::with_capacity(steps + 1);
    records.push(Record::new(0.0, ssm.phase(), beliefs.clone(), &proj.h0));

    for k in 1..=steps {
        let t = k as f64 * h;
        let predicted = beliefs
            .iter()
            .map(|b| predict(b, &trans))
            .collect::<Result<Vec<_>>>()?;
        let z = evaluate_measurement(&predicted, ivp, &proj.h0, t).map_err(|e| e.at_step(k))?;
        let meas = MeasurementModel::new(proj.h.clone(), r)?;
        beliefs = predicted
            .iter()
            .zip(&z)
            .map(|(b, &zi)| update(b, &meas, zi))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_step(k))?;
        records.push(Record::new(t, ssm.phase(), beliefs.clone(), &proj.h0));
    }

    Ok(Trajectory {
        problem: ivp.name.clone(),
        step: h,
        records,
        step_evaluations: steps,
    })
}
