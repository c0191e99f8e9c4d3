//! Integrated Brownian motion ("Taylor") prior.
//!
//! The state stacks the solution and its first `q` derivatives,
//! `[x, x', ..., x^(q)]`, and the top derivative performs Brownian motion with
//! variance scale `sigma2`. Mean prediction is a truncated Taylor expansion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filtering::{GaussianBelief, TransitionModel};
use crate::ssm::{Phase, ProjectionPair, StateSpaceModel};

/// Diagonal jitter on the initial covariance.
pub const INIT_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorParams {
    pub q: usize,
    pub sigma2: f64,
}

impl TaylorParams {
    pub fn new(q: usize, sigma2: f64) -> Result<Self> {
        let p = Self { q, sigma2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(Error::contract("taylor order q must be >= 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::contract(format!(
                "taylor sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }
}

impl Default for TaylorParams {
    fn default() -> Self {
        Self { q: 1, sigma2: 1.0 }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `A(h)` and `Q(h)` of the `q`-times integrated Brownian motion, 0-based indices.
pub fn ibm_transition(h: f64, params: &TaylorParams) -> Result<TransitionModel> {
    params.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::contract(format!("step size must be > 0, got {h}")));
    }
    let q = params.q;
    let d = q + 1;
    let a = DMatrix::from_fn(d, d, |i, j| {
        if i <= j {
            h.powi((j - i) as i32) / factorial(j - i)
        } else {
            0.0
        }
    });
    let qm = DMatrix::from_fn(d, d, |i, j| {
        let p = 2 * q + 1 - i - j;
        params.sigma2 * h.powi(p as i32) / (p as f64 * factorial(q - i) * factorial(q - j))
    });
    TransitionModel::new(a, qm)
}

/// `H0 = e0ᵀ` selects `x`, `H = e1ᵀ` selects `x'`.
pub fn taylor_projections(q: usize) -> Result<ProjectionPair> {
    if q < 1 {
        return Err(Error::contract("taylor order q must be >= 1"));
    }
    let mut h0 = DVector::zeros(q + 1);
    let mut h = DVector::zeros(q + 1);
    h0[0] = 1.0;
    h[1] = 1.0;
    Ok(ProjectionPair { h0, h })
}

/// Pins `x(0) = x0` and `x'(0) = dx0`; higher derivatives start at zero.
pub fn taylor_init(x0: f64, dx0: f64, q: usize) -> Result<GaussianBelief> {
    if q < 1 {
        return Err(Error::contract("taylor order q must be >= 1"));
    }
    let mut mean = DVector::zeros(q + 1);
    mean[0] = x0;
    mean[1] = dx0;
    GaussianBelief::new(mean, DMatrix::identity(q + 1, q + 1) * INIT_JITTER)
}

#[derive(Debug, Clone)]
pub struct TaylorSsm {
    params: TaylorParams,
    projections: ProjectionPair,
}

impl TaylorSsm {
    pub fn new(params: TaylorParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            projections: taylor_projections(params.q)?,
            params,
        })
    }

    pub fn params(&self) -> &TaylorParams {
        &self.params
    }
}

impl StateSpaceModel for TaylorSsm {
    fn phase(&self) -> Phase {
        Phase::Taylor
    }

    fn dim(&self) -> usize {
        self.params.q + 1
    }

    fn transition(&self, h: f64) -> Result<TransitionModel> {
        ibm_transition(h, &self.params)
    }

    fn projections(&self) -> &ProjectionPair {
        &self.projections
    }

    fn init(&self, x0: f64, dx0: f64) -> Result<GaussianBelief> {
        taylor_init(x0, dx0, self.params.q)
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::filtering::{is_psd, is_symmetric, predict};
    use proptest::prelude::*;

    fn unit(q: usize) -> TaylorParams {
        TaylorParams::new(q, 1.0).unwrap()
    }

    #[test]
    fn unit_step_q1() {
        let t = ibm_transition(1.0, &unit(1)).unwrap();
        assert_eq!(t.a.as_slice(), &[1.0, 0.0, 1.0, 1.0]); // column-major
        assert_eq!(t.q[(0, 0)], 1.0 / 3.0);
        assert_eq!(t.q[(0, 1)], 0.5);
        assert_eq!(t.q[(1, 0)], 0.5);
        assert_eq!(t.q[(1, 1)], 1.0);
    }

    #[test]
    fn tiny_step_is_near_identity() {
        let t = ibm_transition(1e-8, &unit(1)).unwrap();
        assert!((&t.a - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-8);
        assert!(t.q.norm() <= 1e-8);
    }

    #[test]
    fn half_step_q2() {
        let t = ibm_transition(0.5, &unit(2)).unwrap();
        let a = [[1.0, 0.5, 0.125], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.a[(i, j)], a[i][j]);
            }
        }
        // Frozen from a direct evaluation script.
        let q = [
            [0.0015625, 0.0078125, 0.020833333333333332],
            [0.0078125, 0.041666666666666664, 0.125],
            [0.020833333333333332, 0.125, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.q[(i, j)] - q[i][j]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn non_positive_step_rejected() {
        assert!(ibm_transition(0.0, &unit(1)).is_err());
        assert!(ibm_transition(-0.1, &unit(2)).is_err());
        assert!(TaylorParams::new(0, 1.0).is_err());
        assert!(TaylorParams::new(1, 0.0).is_err());
    }

    #[test]
    fn projections_select_value_and_slope() {
        let p = taylor_projections(1).unwrap();
        assert_eq!(p.h0.as_slice(), &[1.0, 0.0]);
        assert_eq!(p.h.as_slice(), &[0.0, 1.0]);
        let p = taylor_projections(2).unwrap();
        assert_eq!(p.h0.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(p.h.as_slice(), &[0.0, 1.0, 0.0]);
        assert!(taylor_projections(0).is_err());
    }

    #[test]
    fn init_pins_value_and_slope() {
        let b = taylor_init(1.0, -1.0, 1).unwrap();
        assert_eq!(b.mean().as_slice(), &[1.0, -1.0]);
        assert_eq!(*b.cov(), DMatrix::identity(2, 2) * 1e-12);
        let b = taylor_init(0.0, 0.0, 2).unwrap();
        assert_eq!(b.mean().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn mean_prediction_is_taylor_expansion() {
        let b = taylor_init(0.7, -2.5, 1).unwrap();
        let p = predict(&b, &ibm_transition(0.25, &unit(1)).unwrap()).unwrap();
        assert_eq!(p.mean().as_slice(), &[0.7 + 0.25 * -2.5, -2.5]);
    }

    proptest! {
        #[test]
        fn semigroup(h1 in 1e-6..1.0f64, h2 in 1e-6..1.0f64, q in 1usize..=3) {
            let p = unit(q);
            let lhs = ibm_transition(h1, &p).unwrap().a * ibm_transition(h2, &p).unwrap().a;
            let rhs = ibm_transition(h1 + h2, &p).unwrap().a;
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }

        #[test]
        fn diffusion_is_symmetric_psd(h in 1e-6..2.0f64, q in 1usize..=3) {
            let t = ibm_transition(h, &unit(q)).unwrap();
            prop_assert!(is_symmetric(&t.q));
            prop_assert!(is_psd(&t.q));
        }

        #[test]
        fn diffusion_scales_with_sigma2(h in 1e-3..2.0f64, q in 1usize..=3, c in 0.1..10.0f64) {
            let base = ibm_transition(h, &unit(q)).unwrap().q;
            let scaled = ibm_transition(h, &TaylorParams::new(q, c).unwrap()).unwrap().q;
            let expect = base * c;
            for (a, b) in scaled.iter().zip(expect.iter()) {
                prop_assert!((a - b).abs() <= 1e-15 * b.abs());
            }
        }
    }
}
