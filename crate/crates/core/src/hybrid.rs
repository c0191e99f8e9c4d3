//! Hybrid Taylor–Fourier solver.
//!
//! On `[0, T_p]` the problem is solved with the Taylor prior. The Taylor
//! posterior means on that interval are then used as data for a Fourier prior
//! per coordinate, and on `(T_p, T]` the trained Fourier beliefs are only
//! predicted forward. No vector-field evaluations happen after `T_p`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filter::{solve, IVProblem, Record, Trajectory};
use crate::filtering::{predict, update, GaussianBelief, MeasurementModel};
use crate::fourier::{fourier_init, fourier_projections, fourier_transition, FourierParams};
use crate::problems::grid_steps;
use crate::ssm::Phase;
use crate::taylor::{taylor_projections, TaylorParams, TaylorSsm};

/// Which Taylor grid points feed the Fourier training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainPolicy {
    /// Every grid point on `[0, T_p]`, including `t = 0`.
    #[default]
    ValuesAll,
    /// Grid indices `k, 2k, 3k, ...`; `t = 0` is not used.
    ValuesStride(usize),
    /// Every grid point, observing both the value and the derivative estimate.
    ValuesAndDerivatives,
}

impl TrainPolicy {
    fn selects(self, index: usize) -> bool {
        match self {
            TrainPolicy::ValuesAll | TrainPolicy::ValuesAndDerivatives => true,
            TrainPolicy::ValuesStride(k) => index > 0 && index.is_multiple_of(k),
        }
    }
}

impl fmt::Display for TrainPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainPolicy::ValuesAll => f.write_str("values-all"),
            TrainPolicy::ValuesStride(k) => write!(f, "stride:{k}"),
            TrainPolicy::ValuesAndDerivatives => f.write_str("values-and-derivatives"),
        }
    }
}

impl FromStr for TrainPolicy {
    type Err = Error;

    /// `values-all`, `stride:<k>` or `values-and-derivatives`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "values-all" => Ok(TrainPolicy::ValuesAll),
            "values-and-derivatives" => Ok(TrainPolicy::ValuesAndDerivatives),
            other => match other.strip_prefix("stride:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(TrainPolicy::ValuesStride(k)),
                _ => Err(Error::contract(format!(
                    "unknown train policy '{other}' (values-all, stride:<k>, values-and-derivatives)"
                ))),
            },
        }
    }
}

/// Measurement noise used for the Fourier training updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainNoise {
    FixedJitter(f64),
    /// The Taylor posterior variance of the observed quantity.
    TaylorVariance,
}

impl Default for TrainNoise {
    fn default() -> Self {
        TrainNoise::FixedJitter(1e-10)
    }
}

impl fmt::Display for TrainNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainNoise::FixedJitter(eps) => write!(f, "jitter:{eps:e}"),
            TrainNoise::TaylorVariance => f.write_str("taylor-variance"),
        }
    }
}

impl FromStr for TrainNoise {
    type Err = Error;

    /// `jitter:<eps>` or `taylor-variance`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "taylor-variance" {
            return Ok(TrainNoise::TaylorVariance);
        }
        match s.strip_prefix("jitter:").map(str::parse::<f64>) {
            Some(Ok(eps)) if eps >= 0.0 => Ok(TrainNoise::FixedJitter(eps)),
            _ => Err(Error::contract(format!(
                "unknown train noise '{s}' (jitter:<eps>, taylor-variance)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub taylor: TaylorParams,
    pub fourier: FourierParams,
    /// Prediction time `T_p`.
    pub t_pred: f64,
    pub h: f64,
    /// Measurement noise of the Taylor filter.
    pub r: f64,
    pub train_policy: TrainPolicy,
    pub train_noise: TrainNoise,
}

impl HybridConfig {
    pub fn validate(&self, t_end: f64) -> Result<()> {
        self.taylor.validate()?;
        self.fourier.validate()?;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::contract(format!(
                "step size must be > 0, got {}",
                self.h
            )));
        }
        if !(self.r >= 0.0) {
            return Err(Error::contract(format!("R must be >= 0, got {}", self.r)));
        }
        if !(self.t_pred > 0.0 && self.t_pred < t_end) {
            return Err(Error::contract(format!(
                "prediction time must lie in (0, {t_end}), got {}",
                self.t_pred
            )));
        }
        grid_steps(self.t_pred, self.h)?;
        grid_steps(t_end, self.h)?;
        Ok(())
    }
}

/// Train a Fourier belief for `coordinate` on the Taylor posterior means.
///
/// Starting from `prior` at `t = 0`, the belief is rotated one grid step at a
/// time and conditioned at every selected grid point. Returns the belief at
/// the time of the last Taylor record.
pub fn train_fourier(
    prior: &GaussianBelief,
    taylor_traj: &Trajectory,
    coordinate: usize,
    params: &FourierParams,
    policy: TrainPolicy,
    noise: TrainNoise,
) -> Result<GaussianBelief> {
    if let TrainPolicy::ValuesStride(0) = policy {
        return Err(Error::contract("train stride must be >= 1"));
    }
    if let TrainNoise::FixedJitter(eps) = noise {
        if !(eps >= 0.0) {
            return Err(Error::contract(format!(
                "train jitter must be >= 0, got {eps}"
            )));
        }
    }
    if taylor_traj.is_empty() {
        return Err(Error::contract("cannot train on an empty trajectory"));
    }
    if coordinate >= taylor_traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: taylor_traj.dim(),
            actual: coordinate,
            context: "training coordinate",
        });
    }
    let four = fourier_projections(params);
    let taylor_dim = taylor_traj.records[0].beliefs[coordinate].dim();
    let tay = taylor_projections(taylor_dim.saturating_sub(1))?;
    let trans = fourier_transition(taylor_traj.step, params)?;

    let mut belief = prior.clone();
    for (k, rec) in taylor_traj.records.iter().enumerate() {
        if k > 0 {
            belief = predict(&belief, &trans)?;
        }
        if !policy.selects(k) {
            continue;
        }
        let source = &rec.beliefs[coordinate];
        let (value, value_var) = source.project(&tay.h0);
        let r = match noise {
            TrainNoise::FixedJitter(eps) => eps,
            TrainNoise::TaylorVariance => value_var.max(0.0),
        };
        belief = update(&belief, &MeasurementModel::new(four.h0.clone(), r)?, value)
            .map_err(|e| e.at_step(k))?;
        if policy == TrainPolicy::ValuesAndDerivatives {
            let (slope, slope_var) = source.project(&tay.h);
            let r = match noise {
                TrainNoise::FixedJitter(eps) => eps,
                TrainNoise::TaylorVariance => slope_var.max(0.0),
            };
            belief = update(&belief, &MeasurementModel::new(four.h.clone(), r)?, slope)
                .map_err(|e| e.at_step(k))?;
        }
    }
    Ok(belief)
}

/// Rotate per-coordinate Fourier beliefs forward from grid index `start_index`
/// for `steps` steps of size `h`. No vector-field evaluations.
pub fn predict_forward(
    beliefs: &[GaussianBelief],
    params: &FourierParams,
    h: f64,
    start_index: usize,
    steps: usize,
) -> Result<Vec<Record>> {
    let trans = fourier_transition(h, params)?;
    let h0 = fourier_projections(params).h0;
    let mut current = beliefs.to_vec();
    let mut records = Vec::with_capacity(steps);
    for k in 1..=steps {
        current = current
            .iter()
            .map(|b| predict(b, &trans))
            .collect::<Result<Vec<_>>>()?;
        let t = (start_index + k) as f64 * h;
        records.push(Record::new(t, Phase::Fourier, current.clone(), &h0));
    }
    Ok(records)
}

/// Hybrid solve output with the trained Fourier beliefs at `T_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSolution {
    pub trajectory: Trajectory,
    pub trained: Vec<GaussianBelief>,
}

/// Taylor filtering on `[0, T_p]`, Fourier training, Fourier prediction on `(T_p, T]`.
pub fn hybrid_solve(config: &HybridConfig, ivp: &IVProblem) -> Result<Trajectory> {
    hybrid_solve_detailed(config, ivp).map(|s| s.trajectory)
}

pub fn hybrid_solve_detailed(config: &HybridConfig, ivp: &IVProblem) -> Result<HybridSolution> {
    config.validate(ivp.t_end)?;
    let ssm = TaylorSsm::new(config.taylor)?;
    let mut trajectory = solve(&ssm, ivp, config.h, config.r, config.t_pred)?;
    let pred_index = grid_steps(config.t_pred, config.h)?;
    let total = grid_steps(ivp.t_end, config.h)?;

    let prior = fourier_init(&config.fourier);
    let trained = (0..ivp.dim())
        .map(|i| {
            train_fourier(
                &prior,
                &trajectory,
                i,
                &config.fourier,
                config.train_policy,
                config.train_noise,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let forward = predict_forward(
        &trained,
        &config.fourier,
        config.h,
        pred_index,
        total - pred_index,
    )?;
    trajectory.records.extend(forward);
    Ok(HybridSolution {
        trajectory,
        trained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtering::is_psd;
    use crate::taylor::taylor_init;
    use std::f64::consts::PI;

    fn fourier(order: usize) -> FourierParams {
        FourierParams::new(order, 1.0, 3.0, 1.0).unwrap()
    }

    /// Fake Taylor trajectory carrying an exact signal and its derivative.
    fn sampled(signal: impl Fn(f64) -> (f64, f64), h: f64, steps: usize) -> Trajectory {
        let h0 = taylor_projections(1).unwrap().h0;
        let records = (0..=steps)
            .map(|k| {
                let t = k as f64 * h;
                let (x, dx) = signal(t);
                Record::new(t, Phase::Taylor, vec![taylor_init(x, dx, 1).unwrap()], &h0)
            })
            .collect();
        Trajectory {
            problem: "synthetic".into(),
            step: h,
            records,
            step_evaluations: steps,
        }
    }

    #[test]
    fn policy_and_noise_parse() {
        assert_eq!(
            "values-all".parse::<TrainPolicy>().unwrap(),
            TrainPolicy::ValuesAll
        );
        assert_eq!(
            "stride:4".parse::<TrainPolicy>().unwrap(),
            TrainPolicy::ValuesStride(4)
        );
        assert!("stride:0".parse::<TrainPolicy>().is_err());
        assert!("every".parse::<TrainPolicy>().is_err());
        assert_eq!(
            "jitter:1e-8".parse::<TrainNoise>().unwrap(),
            TrainNoise::FixedJitter(1e-8)
        );
        assert_eq!(
            "taylor-variance".parse::<TrainNoise>().unwrap(),
            TrainNoise::TaylorVariance
        );
        for p in [
            TrainPolicy::ValuesAll,
            TrainPolicy::ValuesStride(3),
            TrainPolicy::ValuesAndDerivatives,
        ] {
            assert_eq!(p.to_string().parse::<TrainPolicy>().unwrap(), p);
        }
    }

    #[test]
    fn empty_selection_is_rotated_prior() {
        let p = fourier(2);
        let traj = sampled(|t| (t.cos(), -t.sin()), 0.1, 20);
        let prior = fourier_init(&p);
        let b = train_fourier(
            &prior,
            &traj,
            0,
            &p,
            TrainPolicy::ValuesStride(50),
            TrainNoise::default(),
        )
        .unwrap();
        assert!(b.mean().iter().all(|&v| v == 0.0));
        // diagonal isotropic blocks are rotation invariant
        assert!((b.cov() - prior.cov()).amax() < 1e-15);
    }

    #[test]
    fn single_observation_of_constant() {
        let p = fourier(0);
        let c = 0.75;
        let traj = sampled(|_| (c, 0.0), 0.5, 2);
        let prior = fourier_init(&p);
        let eps = 1e-14;
        let b = train_fourier(
            &prior,
            &traj,
            0,
            &p,
            TrainPolicy::ValuesStride(2),
            TrainNoise::FixedJitter(eps),
        )
        .unwrap();
        // conjugate scalar update: m = q0² c / (q0² + eps), v = q0² eps / (q0² + eps)
        let q0 = prior.cov()[(0, 0)];
        assert!((b.mean()[0] - q0 * c / (q0 + eps)).abs() < 1e-15);
        assert!((b.mean()[0] - c).abs() < 1e-13);
        assert!(b.cov()[(0, 0)] < 1e-13);
    }

    #[test]
    fn recovers_cosine_coefficients() {
        let p = fourier(3);
        let n = (4.0 * PI / 0.1).floor() as usize;
        let traj = sampled(|t| (t.cos(), -t.sin()), 0.1, n);
        let b = train_fourier(
            &fourier_init(&p),
            &traj,
            0,
            &p,
            TrainPolicy::ValuesAll,
            TrainNoise::default(),
        )
        .unwrap();
        // Rotate back to t = 0 to read the encoded [a_j, -b_j].
        let back = predict(
            &b,
            &fourier_transition(2.0 * PI - (n as f64 * 0.1) % (2.0 * PI), &p).unwrap(),
        )
        .unwrap();
        let expect = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (v, e) in back.mean().iter().zip(expect) {
            assert!((v - e).abs() < 5e-2, "{}", back.mean());
        }
    }

    #[test]
    fn derivative_observations_are_used() {
        let p = fourier(2);
        let traj = sampled(|t| ((2.0 * t).sin(), 2.0 * (2.0 * t).cos()), 0.05, 40);
        let prior = fourier_init(&p);
        let v = train_fourier(
            &prior,
            &traj,
            0,
            &p,
            TrainPolicy::ValuesAll,
            TrainNoise::default(),
        )
        .unwrap();
        let vd = train_fourier(
            &prior,
            &traj,
            0,
            &p,
            TrainPolicy::ValuesAndDerivatives,
            TrainNoise::default(),
        )
        .unwrap();
        assert!(vd.cov().trace() < v.cov().trace());
        assert!(is_psd(vd.cov()));
    }

    #[test]
    fn forward_prediction_of_zero_and_cosine() {
        let p = fourier(1);
        let zero = predict_forward(&[fourier_init(&p)], &p, 0.1, 10, 30).unwrap();
        assert_eq!(zero.len(), 30);
        assert!(zero.iter().all(|r| r.marginals[0].mean == 0.0));
        assert!((zero[0].t - 1.1).abs() < 1e-15 && (zero[29].t - 4.0).abs() < 1e-15);

        // [a1, -b1] = [1, 0] at t = 0 emits cos(t).
        let start = GaussianBelief::from_slices(
            &[0.0, 0.0, 1.0, 0.0],
            &[&[0.0; 4], &[0.0; 4], &[0.0; 4], &[0.0; 4]],
        )
        .unwrap();
        let recs = predict_forward(&[start], &p, 0.05, 0, 400).unwrap();
        for r in &recs {
            assert!((r.marginals[0].mean - r.t.cos()).abs() < 1e-9);
            assert_eq!(r.phase, Phase::Fourier);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = HybridConfig {
            taylor: TaylorParams::default(),
            fourier: FourierParams::default(),
            t_pred: 37.5,
            h: 0.01,
            r: 0.0,
            train_policy: TrainPolicy::ValuesAll,
            train_noise: TrainNoise::default(),
        };
        assert!(cfg.validate(50.0).is_ok());
        assert!(cfg.validate(30.0).is_err());
        assert!(HybridConfig {
            t_pred: 0.0,
            ..cfg.clone()
        }
        .validate(50.0)
        .is_err());
        assert!(HybridConfig {
            t_pred: 37.505,
            ..cfg.clone()
        }
        .validate(50.0)
        .is_err());
        assert!(HybridConfig { r: -1.0, ..cfg }.validate(50.0).is_err());
    }
}
