//! Gaussian ODE filtering with interchangeable Gauss–Markov priors.
//!
//! * [`taylor`]: integrated Brownian motion prior, the classical ODE filter.
//! * [`fourier`]: periodic prior built from harmonic oscillators.
//! * [`hybrid`]: Taylor filtering up to a prediction time while training the
//!   Fourier prior, followed by evaluation-free Fourier extrapolation.
//!
//! Problems, the RK4 reference solver, and CSV/SVG output live in
//! [`problems`] and [`io`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter;
pub mod filtering;
pub mod fourier;
pub mod hybrid;
pub mod io;
pub mod problems;
pub mod runner;
pub mod ssm;
pub mod taylor;

pub use error::{Error, Result};
pub use filter::{solve, IVProblem, Marginal, Record, Trajectory};
pub use filtering::{predict, update, GaussianBelief, MeasurementModel, TransitionModel};
pub use fourier::{FourierParams, FourierSsm};
pub use hybrid::{hybrid_solve, HybridConfig, TrainNoise, TrainPolicy};
pub use ssm::{Phase, ProjectionPair, StateSpaceModel};
pub use taylor::{TaylorParams, TaylorSsm};
