//! Linear-Gaussian predict and update primitives shared by every state space model.
//!
//! All measurements are scalar: a single row operator `H` observes the state with
//! noise variance `R`. Covariances are symmetrized after every operation and the
//! update uses the Joseph form, so beliefs stay symmetric and positive semidefinite.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue tolerance used by [`is_psd`].
pub const PSD_RELATIVE_TOL: f64 = 1e-10;

/// Innovation variances below this fraction of `‖H‖² max_i P_ii` are roundoff.
const VARIANCE_FLOOR: f64 = 1e-13;

/// Largest innovation accepted against a vanishing innovation variance,
/// relative to `max(1, |z|)`.
const CONSISTENT_INNOVATION: f64 = 1e-9;

/// Mean and covariance of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: if cov.nrows() != d {
                    cov.nrows()
                } else {
                    cov.ncols()
                },
                context: "belief covariance",
            });
        }
        Ok(Self {
            mean,
            cov: symmetrize(&cov),
        })
    }

    pub fn from_slices(mean: &[f64], cov_rows: &[&[f64]]) -> Result<Self> {
        let d = mean.len();
        let mut cov = DMatrix::zeros(d, d);
        if cov_rows.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: cov_rows.len(),
                context: "belief covariance rows",
            });
        }
        for (i, row) in cov_rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                    context: "belief covariance columns",
                });
            }
            for (j, v) in row.iter().enumerate() {
                cov[(i, j)] = *v;
            }
        }
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean and variance of the scalar `row · X`.
    pub fn project(&self, row: &DVector<f64>) -> (f64, f64) {
        let m = row.dot(&self.mean);
        let v = (&self.cov * row).dot(row);
        (m, v)
    }
}

/// Discrete dynamic model `X(t+h) | X(t) ~ N(A X(t), Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl TransitionModel {
    pub fn new(a: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.shape() != q.shape() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                actual: q.nrows(),
                context: "transition A/Q",
            });
        }
        Ok(Self { a, q })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Scalar measurement `z ~ N(H X, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub h: DVector<f64>,
    pub r: f64,
}

impl MeasurementModel {
    pub fn new(h: DVector<f64>, r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::contract(format!(
                "measurement noise must be >= 0, got {r}"
            )));
        }
        Ok(Self { h, r })
    }
}

/// `(M + Mᵀ) / 2`, exactly symmetric entry by entry.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// All eigenvalues ≥ −[`PSD_RELATIVE_TOL`] · (largest eigenvalue magnitude).
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    eig.iter().all(|&v| v >= -PSD_RELATIVE_TOL * scale)
}

/// Propagate a belief through a transition: `(A m, A P Aᵀ + Q)`.
pub fn predict(belief: &GaussianBelief, trans: &TransitionModel) -> Result<GaussianBelief> {
    if belief.dim() != trans.dim() {
        return Err(Error::DimensionMismatch {
            expected: trans.dim(),
            actual: belief.dim(),
            context: "predict",
        });
    }
    let mean = &trans.a * &belief.mean;
    let cov = &trans.a * &belief.cov * trans.a.transpose() + &trans.q;
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(&cov),
    })
}

/// Condition a belief on one scalar measurement `z`.
///
/// A vanishing innovation variance (zero up to roundoff) is accepted only
/// together with a vanishing innovation: the measurement is then already
/// implied by the belief and the gain is zero.
pub fn update(belief: &GaussianBelief, meas: &MeasurementModel, z: f64) -> Result<GaussianBelief> {
    let d = belief.dim();
    if meas.h.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: meas.h.len(),
            context: "update",
        });
    }
    let ph = &belief.cov * &meas.h;
    let s = meas.h.dot(&ph) + meas.r;
    let innovation = z - meas.h.dot(&belief.mean);
    let scale = meas.h.norm_squared() * belief.cov.diagonal().amax();
    if !(s > VARIANCE_FLOOR * scale) {
        if innovation.abs() <= CONSISTENT_INNOVATION * z.abs().max(1.0) {
            return Ok(belief.clone());
        }
        return Err(Error::SingularUpdate {
            step: None,
            variance: s,
            innovation,
        });
    }
    let gain = ph / s;
    let mean = &belief.mean + &gain * innovation;
    let i_kh = DMatrix::identity(d, d) - &gain * meas.h.transpose();
    let cov = &i_kh * &belief.cov * i_kh.transpose() + &gain * gain.transpose() * meas.r;
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(&cov),
    })
}
