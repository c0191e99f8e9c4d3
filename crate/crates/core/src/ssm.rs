//! The pluggable prior: transition builder, projections and initial belief.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::filtering::{GaussianBelief, TransitionModel};

/// Which model produced a trajectory record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Taylor,
    Fourier,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Taylor => "taylor",
            Phase::Fourier => "fourier",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor" => Ok(Phase::Taylor),
            "fourier" => Ok(Phase::Fourier),
            other => Err(Error::contract(format!("unknown phase '{other}'"))),
        }
    }
}

/// Row operators extracting the solution value (`h0`) and its derivative (`h`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub h0: DVector<f64>,
    pub h: DVector<f64>,
}

impl ProjectionPair {
    pub fn dim(&self) -> usize {
        self.h0.len()
    }
}

/// A Gauss–Markov prior usable by the ODE filter.
pub trait StateSpaceModel {
    fn phase(&self) -> Phase;

    fn dim(&self) -> usize;

    fn transition(&self, h: f64) -> Result<TransitionModel>;

    fn projections(&self) -> &ProjectionPair;

    /// Initial belief for one coordinate with value `x0` and derivative `dx0`.
    fn init(&self, x0: f64, dx0: f64) -> Result<GaussianBelief>;
}
