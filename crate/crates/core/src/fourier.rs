//! Periodic Fourier prior.
//!
//! The state stacks `J + 1` harmonic oscillator pairs `[x_j, y_j]` rotating at
//! angular velocity `j * w0`. The solution is `x(t) = Σ_j x_j(t)` and its
//! derivative is `-Σ_j j w0 y_j(t)`. There is no diffusion, so prediction is a
//! pure rotation and the filter reduces to finite-rank periodic GP regression.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filtering::{update, GaussianBelief, MeasurementModel, TransitionModel};
use crate::ssm::{Phase, ProjectionPair, StateSpaceModel};

const BESSEL_MAX_TERMS: usize = 64;
const BESSEL_REL_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierParams {
    /// Truncation order of the series.
    pub order: usize,
    /// Angular velocity of the base harmonic.
    pub w0: f64,
    /// Periodic-kernel lengthscale.
    pub lengthscale: f64,
    pub sigma2: f64,
}

impl FourierParams {
    pub fn new(order: usize, w0: f64, lengthscale: f64, sigma2: f64) -> Result<Self> {
        let p = Self {
            order,
            w0,
            lengthscale,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.w0) {
            return Err(Error::contract(format!("w0 must be > 0, got {}", self.w0)));
        }
        if !positive(self.lengthscale) {
            return Err(Error::contract(format!(
                "lengthscale must be > 0, got {}",
                self.lengthscale
            )));
        }
        if !positive(self.sigma2) {
            return Err(Error::contract(format!(
                "fourier sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * (self.order + 1)
    }
}

impl Default for FourierParams {
    fn default() -> Self {
        Self {
            order: 3,
            w0: 1.0,
            lengthscale: 3.0,
            sigma2: 1.0,
        }
    }
}

/// Modified Bessel function of the first kind, `I_j(z)`, by its power series.
///
/// Intended for moderate arguments (`z` up to a few units); the series is cut
/// once a term drops below `1e-16` of the partial sum or after 64 terms.
pub fn bessel_i(j: usize, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    let half = 0.5 * z;
    // (z/2)^j / j!
    let mut term = (1..=j).fold(1.0, |acc, k| acc * half / k as f64);
    let mut sum = term;
    let sq = half * half;
    for k in 1..BESSEL_MAX_TERMS {
        term *= sq / (k as f64 * (k + j) as f64);
        sum += term;
        if term <= BESSEL_REL_TOL * sum {
            break;
        }
    }
    sum
}

/// Prior block variances `q_j²`, `j = 0..=J`.
///
/// `q_0² = σ² I_0(l⁻²) / e^{l⁻²}` and `q_j² = σ² 2 I_j(l⁻²) / e^{l⁻²}` for `j ≥ 1`,
/// the coefficients of the cosine expansion of the periodic kernel.
pub fn fourier_weights(params: &FourierParams) -> Vec<f64> {
    let z = params.lengthscale.powi(-2);
    let scale = params.sigma2 * (-z).exp();
    (0..=params.order)
        .map(|j| {
            let factor = if j == 0 { 1.0 } else { 2.0 };
            factor * scale * bessel_i(j, z)
        })
        .collect()
}

/// Block-diagonal rotation by angle `j * w0 * h` per block; zero diffusion.
pub fn fourier_transition(h: f64, params: &FourierParams) -> Result<TransitionModel> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::contract(format!("step size must be > 0, got {h}")));
    }
    let d = params.dim();
    let mut a = DMatrix::zeros(d, d);
    for j in 0..=params.order {
        let (s, c) = (params.w0 * j as f64 * h).sin_cos();
        let k = 2 * j;
        a[(k, k)] = c;
        a[(k, k + 1)] = -s;
        a[(k + 1, k)] = s;
        a[(k + 1, k + 1)] = c;
    }
    TransitionModel::new(a, DMatrix::zeros(d, d))
}

/// `H0` sums the `x_j` slots; `H` weights each `y_j` slot by `-j w0`.
pub fn fourier_projections(params: &FourierParams) -> ProjectionPair {
    let d = params.dim();
    let mut h0 = DVector::zeros(d);
    let mut h = DVector::zeros(d);
    for j in 0..=params.order {
        h0[2 * j] = 1.0;
        h[2 * j + 1] = -(j as f64) * params.w0;
    }
    ProjectionPair { h0, h }
}

/// Zero-mean prior with `cov = diag(q_0², q_0², ..., q_J², q_J²)`.
pub fn fourier_init(params: &FourierParams) -> GaussianBelief {
    let weights = fourier_weights(params);
    let diag = DVector::from_iterator(params.dim(), weights.iter().flat_map(|&w| [w, w]));
    GaussianBelief::new(DVector::zeros(params.dim()), DMatrix::from_diagonal(&diag))
        .expect("diagonal prior has matching dimensions")
}

/// Fourier prior used directly as the ODE filter's state space model.
///
/// The initial mean places `x0` in the constant block and `dx0` in the first
/// harmonic's `y` slot; the covariance is the prior conditioned on exact value
/// and slope observations.
#[derive(Debug, Clone)]
pub struct FourierSsm {
    params: FourierParams,
    projections: ProjectionPair,
}

impl FourierSsm {
    pub fn new(params: FourierParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            projections: fourier_projections(&params),
            params,
        })
    }

    pub fn params(&self) -> &FourierParams {
        &self.params
    }
}

impl StateSpaceModel for FourierSsm {
    fn phase(&self) -> Phase {
        Phase::Fourier
    }

    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn transition(&self, h: f64) -> Result<TransitionModel> {
        fourier_transition(h, &self.params)
    }

    fn projections(&self) -> &ProjectionPair {
        &self.projections
    }

    fn init(&self, x0: f64, dx0: f64) -> Result<GaussianBelief> {
        let mut mean = DVector::zeros(self.dim());
        mean[0] = x0;
        if dx0 != 0.0 {
            if self.params.order == 0 {
                return Err(Error::contract(
                    "a constant-only fourier model cannot start with a nonzero slope",
                ));
            }
            mean[3] = -dx0 / self.params.w0;
        }
        let prior = fourier_init(&self.params);
        let value = MeasurementModel::new(self.projections.h0.clone(), 0.0)?;
        let slope = MeasurementModel::new(self.projections.h.clone(), 0.0)?;
        let pinned = update(&update(&prior, &value, 0.0)?, &slope, 0.0)?;
        GaussianBelief::new(mean, pinned.cov().clone())
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::filtering::{is_psd, predict};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(order: usize, w0: f64) -> FourierParams {
        FourierParams::new(order, w0, 3.0, 1.0).unwrap()
    }

    #[test]
    fn bessel_at_zero() {
        assert_eq!(bessel_i(0, 0.0), 1.0);
        assert_eq!(bessel_i(1, 0.0), 0.0);
        assert_eq!(bessel_i(5, 0.0), 0.0);
    }

    #[test]
    fn bessel_reference_values() {
        // 30-digit reference values.
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i(1, 1.0 / 9.0) - 5.564_133_355_072_170_6e-2).abs() < 1e-17);
        assert!((bessel_i(3, 2.0) - 0.212_739_959_239_852_66).abs() < 1e-15);
        assert!((bessel_i(8, 0.5) - 3.810_784_881_031_767_6e-10).abs() < 1e-24);
    }

    #[test]
    fn weights_for_default_kernel() {
        let w = fourier_weights(&params(3, 1.0));
        let expect = [
            0.897_603_298_345_480_8,
            0.099_580_105_802_336_57,
            0.002_764_692_248_903_381_3,
            5.118_484_181_483_872e-5,
        ];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-15 * b);
        }
    }

    #[test]
    fn weights_limit_and_scaling() {
        let w = fourier_weights(&FourierParams::new(4, 1.0, 1e6, 2.5).unwrap());
        assert!((w[0] - 2.5).abs() < 1e-11);
        assert!(w[1..].iter().all(|&v| v < 1e-11));

        let base = fourier_weights(&params(3, 1.0));
        let scaled = fourier_weights(&FourierParams::new(3, 1.0, 3.0, 4.0).unwrap());
        for (a, b) in scaled.iter().zip(&base) {
            assert!((a - 4.0 * b).abs() <= 1e-16 * a);
        }
    }

    #[test]
    fn weights_sum_to_kernel_variance() {
        // Σ_j q_j² → σ² k(0) as J → ∞.
        let w = fourier_weights(&FourierParams::new(20, 1.0, 3.0, 1.0).unwrap());
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quarter_turn() {
        let t = fourier_transition(PI / 2.0, &params(1, 1.0)).unwrap();
        let expect = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((t.a[(i, j)] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(t.q, DMatrix::zeros(4, 4));
    }

    #[test]
    fn full_period_is_identity() {
        let t = fourier_transition(2.0 * PI, &params(2, 1.0)).unwrap();
        assert!((t.a - DMatrix::<f64>::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn half_radian_block() {
        let t = fourier_transition(0.25, &params(1, 2.0)).unwrap();
        let (c, s) = (0.877_582_561_890_372_8, 0.479_425_538_604_203);
        assert!((t.a[(2, 2)] - c).abs() < 1e-15);
        assert!((t.a[(2, 3)] + s).abs() < 1e-15);
        assert!((t.a[(3, 2)] - s).abs() < 1e-15);
        assert!((t.a[(3, 3)] - c).abs() < 1e-15);
    }

    #[test]
    fn projection_layout() {
        let p = fourier_projections(&params(3, 1.0));
        assert_eq!(p.h0.as_slice(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.h.as_slice(), &[0.0, 0.0, 0.0, -1.0, 0.0, -2.0, 0.0, -3.0]);
        let p = fourier_projections(&params(0, 7.0));
        assert_eq!(p.h0.as_slice(), &[1.0, 0.0]);
        assert_eq!(p.h.as_slice(), &[0.0, 0.0]);
        let p = fourier_projections(&params(2, 3.0));
        assert_eq!(p.h.as_slice(), &[0.0, 0.0, 0.0, -3.0, 0.0, -6.0]);
    }

    #[test]
    fn prior_layout() {
        let p = params(1, 1.0);
        let b = fourier_init(&p);
        let w = fourier_weights(&p);
        assert_eq!(b.mean().as_slice(), &[0.0; 4]);
        let diag: Vec<f64> = b.cov().diagonal().iter().copied().collect();
        assert_eq!(diag, vec![w[0], w[0], w[1], w[1]]);
        assert!((w[1] - 9.96e-2).abs() < 1e-4);

        let b = fourier_init(&params(0, 1.0));
        assert_eq!(*b.cov(), DMatrix::identity(2, 2) * w[0]);
    }

    #[test]
    fn oscillator_solution_is_reproduced() {
        // x(t) = Σ a_j cos(j w0 t) + b_j sin(j w0 t), derivative from the y slots.
        let p = params(3, 1.3);
        let a = [0.4, 1.0, -0.3, 0.2];
        let b = [0.0, 0.5, 0.25, -0.7];
        let mean: Vec<f64> = (0..4).flat_map(|j| [a[j], -b[j]]).collect();
        let mut belief =
            GaussianBelief::new(DVector::from_vec(mean), DMatrix::zeros(8, 8)).unwrap();
        let h = 0.037;
        let trans = fourier_transition(h, &p).unwrap();
        let proj = fourier_projections(&p);
        for n in 1..=400 {
            belief = predict(&belief, &trans).unwrap();
            let t = n as f64 * h;
            let (x, dx) = (0..4).fold((0.0, 0.0), |(x, dx), j| {
                let w = p.w0 * j as f64;
                (
                    x + a[j] * (w * t).cos() + b[j] * (w * t).sin(),
                    dx - a[j] * w * (w * t).sin() + b[j] * w * (w * t).cos(),
                )
            });
            assert!((proj.h0.dot(belief.mean()) - x).abs() < 1e-10);
            assert!((proj.h.dot(belief.mean()) - dx).abs() < 1e-10);
        }
    }

    #[test]
    fn conditioned_init_matches_data() {
        let ssm = FourierSsm::new(params(3, 1.0)).unwrap();
        let b = ssm.init(0.8, -0.4).unwrap();
        let proj = ssm.projections();
        assert!((proj.h0.dot(b.mean()) - 0.8).abs() < 1e-12);
        assert!((proj.h.dot(b.mean()) + 0.4).abs() < 1e-12);
        assert!(is_psd(b.cov()));
        assert!(b.project(&proj.h0).1.abs() < 1e-15);
        assert!(b.project(&proj.h).1.abs() < 1e-15);

        let flat = FourierSsm::new(params(0, 1.0)).unwrap();
        assert!(flat.init(1.0, 0.0).is_ok());
        assert!(flat.init(1.0, 0.5).is_err());
    }

    fn sorted_eigs(m: &DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    proptest! {
        #[test]
        fn rotation_semigroup(h1 in 1e-4..5.0f64, h2 in 1e-4..5.0f64, order in 0usize..=3, w0 in 0.2..3.0f64) {
            let p = params(order, w0);
            let lhs = fourier_transition(h1, &p).unwrap().a * fourier_transition(h2, &p).unwrap().a;
            let rhs = fourier_transition(h1 + h2, &p).unwrap().a;
            prop_assert!((lhs - rhs).amax() <= 1e-12);
        }

        #[test]
        fn blocks_are_orthogonal(h in 1e-4..10.0f64, order in 0usize..=4, w0 in 0.2..3.0f64) {
            let a = fourier_transition(h, &params(order, w0)).unwrap().a;
            let d = a.nrows();
            prop_assert!((a.transpose() * &a - DMatrix::<f64>::identity(d, d)).amax() <= 1e-12);
        }

        #[test]
        fn prediction_preserves_spectrum(h in 1e-3..3.0f64, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = params(2, 1.0);
            let g = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
            let b = GaussianBelief::new(DVector::zeros(6), &g * g.transpose()).unwrap();
            let after = predict(&b, &fourier_transition(h, &p).unwrap()).unwrap();
            let (e0, e1) = (sorted_eigs(b.cov()), sorted_eigs(after.cov()));
            for (x, y) in e0.iter().zip(&e1) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }
}
