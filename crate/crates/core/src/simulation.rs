//! Fixed-step closed-loop integration.
//!
//! The feedback law is re-evaluated at every Runge-Kutta stage, so a
//! continuous-time controller keeps the integrator's fourth-order accuracy.
//! The control stored in a [`Trajectory`] is the stage-1 value at each grid
//! point.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsModel, StateVector};
use crate::error::{ControlError, Result};
use crate::regulation::CostConfig;
use crate::tracking::{ClosedFormTracker, ReferenceTrajectory};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 10.0;

/// A run is aborted as diverged once `|x|` exceeds this.
pub const BLOWUP_NORM: f64 = 1e6;

/// A state-feedback law `tau = k(t, x)`.
pub trait Controller {
    fn name(&self) -> &str;

    fn control(&self, t: f64, x: &StateVector) -> Result<DVector<f64>>;

    /// Stage cost recorded alongside each sample. Defaults to
    /// `(|x|^2 + |tau|^2) / 2`.
    fn stage_cost(&self, _t: f64, x: &StateVector, tau: &DVector<f64>) -> Result<f64> {
        Ok(0.5 * (x.norm_squared() + tau.norm_squared()))
    }
}

/// Wraps a closure as a [`Controller`].
pub struct FnController<F> {
    name: String,
    law: F,
}

impl<F> FnController<F>
where
    F: Fn(f64, &StateVector) -> Result<DVector<f64>>,
{
    pub fn new(name: impl Into<String>, law: F) -> Self {
        FnController { name: name.into(), law }
    }
}

impl<F> Controller for FnController<F>
where
    F: Fn(f64, &StateVector) -> Result<DVector<f64>>,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn control(&self, t: f64, x: &StateVector) -> Result<DVector<f64>> {
        (self.law)(t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub horizon: f64,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: DEFAULT_DT,
            horizon: DEFAULT_HORIZON,
            method: Method::Rk4,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        let cfg = IntegratorConfig {
            dt,
            horizon,
            method: Method::Rk4,
        };
        cfg.steps()?;
        Ok(cfg)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Number of integration steps `T / dt`, which must be an integer up to
    /// rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ControlError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.dt < self.horizon) {
            return Err(ControlError::Config(format!(
                "horizon {} must exceed dt {}",
                self.horizon, self.dt
            )));
        }
        let ratio = self.horizon / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(ControlError::Config(format!(
                "horizon {} is not an integer multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// Integration stopped early: non-finite values or `|x| > BLOWUP_NORM`.
    Diverged { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrajectoryMeta {
    pub model: String,
    pub controller: String,
    pub dt: f64,
    pub horizon: f64,
    pub gamma: Option<f64>,
}

/// Sampled closed-loop record on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub controls: Vec<DVector<f64>>,
    pub stage_costs: Vec<f64>,
    /// Tracking error `e = x - x_d`; `None` for regulation runs.
    pub errors: Option<Vec<DVector<f64>>>,
    pub status: RunStatus,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The signal the metrics treat as error: `e` when tracking, `x` otherwise.
    pub fn error_signal(&self) -> &[DVector<f64>] {
        self.errors.as_deref().unwrap_or(&self.states)
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn state_dim(&self) -> usize {
        self.states.first().map_or(0, |x| x.len())
    }

    pub fn input_dim(&self) -> usize {
        self.controls.first().map_or(0, |u| u.len())
    }

    /// Keeps the first `len` samples.
    pub fn truncated(&self, len: usize) -> Trajectory {
        let len = len.min(self.len());
        Trajectory {
            times: self.times[..len].to_vec(),
            states: self.states[..len].to_vec(),
            controls: self.controls[..len].to_vec(),
            stage_costs: self.stage_costs[..len].to_vec(),
            errors: self.errors.as_ref().map(|e| e[..len].to_vec()),
            status: self.status.clone(),
            meta: self.meta.clone(),
        }
    }
}

fn ensure_finite(v: &DVector<f64>, time: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ControlError::Blowup { time })
    }
}

/// One classical Runge-Kutta step of `x' = deriv(t, x)`.
pub fn rk4_step<F>(mut deriv: F, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let half = 0.5 * dt;
    let k1 = deriv(t, x)?;
    ensure_finite(&k1, t)?;
    let k2 = deriv(t + half, &(x + &k1 * half))?;
    ensure_finite(&k2, t + half)?;
    let k3 = deriv(t + half, &(x + &k2 * half))?;
    ensure_finite(&k3, t + half)?;
    let k4 = deriv(t + dt, &(x + &k3 * dt))?;
    ensure_finite(&k4, t + dt)?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    ensure_finite(&next, t + dt)?;
    Ok(next)
}

/// One explicit Euler step.
pub fn euler_step<F>(mut deriv: F, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = deriv(t, x)?;
    ensure_finite(&k1, t)?;
    let next = x + k1 * dt;
    ensure_finite(&next, t + dt)?;
    Ok(next)
}

pub(crate) fn step_with<F>(method: Method, deriv: F, t: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    match method {
        Method::Rk4 => rk4_step(deriv, t, x, dt),
        Method::Euler => euler_step(deriv, t, x, dt),
    }
}

/// Integrates `x' = f(x) + g(x) k(t, x)` from `x0` over `[0, T]`.
///
/// Blowup (non-finite values or `|x| > BLOWUP_NORM`) ends the run with
/// [`RunStatus::Diverged`] and the samples collected so far; any other
/// error from the model or controller is returned.
pub fn simulate_closed_loop<C: Controller + ?Sized>(
    model: &DynamicsModel,
    controller: &C,
    x0: &StateVector,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    run_loop(model, controller, x0, icfg, None)
}

/// Closed-loop tracking of `reference` with the closed-form tracking law.
/// The trajectory also records `e(t) = x(t) - x_d(t)`.
pub fn simulate_tracking(
    model: &DynamicsModel,
    cfg: &CostConfig,
    reference: &ReferenceTrajectory,
    x0: &StateVector,
    icfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let tracker = ClosedFormTracker::new(model.clone(), cfg.clone(), reference.clone())?;
    let mut traj = run_loop(model, &tracker, x0, icfg, Some(reference))?;
    traj.meta.gamma = Some(cfg.gamma());
    Ok(traj)
}

fn run_loop<C: Controller + ?Sized>(
    model: &DynamicsModel,
    controller: &C,
    x0: &StateVector,
    icfg: &IntegratorConfig,
    reference: Option<&ReferenceTrajectory>,
) -> Result<Trajectory> {
    model.check_state(x0, "initial state")?;
    let steps = icfg.steps()?;
    if let Some(r) = reference {
        r.check_dim(model.state_dim())?;
    }

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        stage_costs: Vec::with_capacity(steps + 1),
        errors: reference.map(|_| Vec::with_capacity(steps + 1)),
        status: RunStatus::Completed,
        meta: TrajectoryMeta {
            model: model.name().to_string(),
            controller: controller.name().to_string(),
            dt: icfg.dt,
            horizon: icfg.horizon,
            gamma: None,
        },
    };

    let deriv = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
        if x.norm() > BLOWUP_NORM {
            return Err(ControlError::Blowup { time: t });
        }
        let tau = controller.control(t, x)?;
        model.vector_field(x, &tau)
    };

    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * icfg.dt;
        let tau = match controller.control(t, &x) {
            Ok(tau) => tau,
            Err(ControlError::Blowup { time }) => {
                traj.status = RunStatus::Diverged { time };
                break;
            }
            Err(e) => return Err(e),
        };
        let cost = controller.stage_cost(t, &x, &tau)?;
        if let (Some(errors), Some(r)) = (traj.errors.as_mut(), reference) {
            errors.push(&x - r.desired(t));
        }
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.controls.push(tau);
        traj.stage_costs.push(cost);
        if k == steps {
            break;
        }
        match step_with(icfg.method, deriv, t, &x, icfg.dt) {
            Ok(next) if next.norm() <= BLOWUP_NORM => x = next,
            Ok(_) => {
                traj.status = RunStatus::Diverged { time: t + icfg.dt };
                break;
            }
            Err(ControlError::Blowup { time }) => {
                traj.status = RunStatus::Diverged { time };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// `V_k = |x_k|^2 / 2` and its forward difference.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSeries {
    pub values: Vec<f64>,
    /// `(V_{k+1} - V_k) / dt`, one shorter than `values`.
    pub rates: Vec<f64>,
}

impl LyapunovSeries {
    /// Largest single-step increase `V_{k+1} - V_k`.
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Lyapunov function of the error signal along a trajectory.
pub fn lyapunov_series(traj: &Trajectory) -> Result<LyapunovSeries> {
    if traj.is_empty() {
        return Err(ControlError::Config("empty trajectory".into()));
    }
    let values: Vec<f64> = traj.error_signal().iter().map(|e| 0.5 * e.norm_squared()).collect();
    let rates = values
        .windows(2)
        .zip(traj.times.windows(2))
        .map(|(v, t)| (v[1] - v[0]) / (t[1] - t[0]))
        .collect();
    Ok(LyapunovSeries { values, rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn rk4_zero_field_keeps_state() {
        let x = DVector::from_vec(vec![1.5, -2.0]);
        let next = rk4_step(|_, x| Ok(DVector::zeros(x.len())), 0.0, &x, 0.1).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn rk4_scalar_decay_matches_taylor() {
        let x = DVector::from_element(1, 1.0);
        let next = rk4_step(|_, x| Ok(-x), 0.0, &x, 0.1).unwrap();
        // Fourth-order Taylor polynomial of exp(-0.1).
        let h: f64 = 0.1;
        let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert_relative_eq!(next[0], taylor, epsilon = 1e-15);
        assert!((next[0] - (-h).exp()).abs() < h.powi(5));
    }

    #[test]
    fn rk4_reports_blowup_time() {
        let x = DVector::from_element(1, 1.0);
        let err = rk4_step(|_, _| Ok(DVector::from_element(1, f64::NAN)), 2.5, &x, 0.1).unwrap_err();
        assert!(matches!(err, ControlError::Blowup { time } if time == 2.5));
    }

    #[test]
    fn integrator_config_validation() {
        assert_eq!(IntegratorConfig::default().steps().unwrap(), 10_000);
        assert!(IntegratorConfig::new(0.0, 1.0).is_err());
        assert!(IntegratorConfig::new(2.0, 1.0).is_err());
        assert!(IntegratorConfig::new(0.3, 1.0).is_err());
        assert_eq!(IntegratorConfig::new(0.1, 1.0).unwrap().steps().unwrap(), 10);
    }

    #[test]
    fn open_loop_linear_run_and_lyapunov() {
        let model = DynamicsModel::new(
            "decay",
            1,
            1,
            |x| Ok(-x.clone()),
            |_| Ok(DMatrix::from_element(1, 1, 1.0)),
        )
        .unwrap();
        let zero = FnController::new("zero", |_, _: &StateVector| Ok(DVector::zeros(1)));
        let icfg = IntegratorConfig::new(0.01, 1.0).unwrap();
        let traj = simulate_closed_loop(&model, &zero, &DVector::from_element(1, 1.0), &icfg).unwrap();
        assert_eq!(traj.len(), 101);
        assert_eq!(traj.times[0], 0.0);
        assert_relative_eq!(traj.final_state().unwrap()[0], (-1.0f64).exp(), epsilon = 1e-9);
        let lyap = lyapunov_series(&traj).unwrap();
        assert_eq!(lyap.rates.len(), 100);
        assert!(lyap.max_increase() < 0.0);
    }

    #[test]
    fn unstable_run_is_flagged_diverged() {
        let model = DynamicsModel::new(
            "explode",
            1,
            1,
            |x| Ok(x.map(|v| v * v * v)),
            |_| Ok(DMatrix::from_element(1, 1, 1.0)),
        )
        .unwrap();
        let zero = FnController::new("zero", |_, _: &StateVector| Ok(DVector::zeros(1)));
        let icfg = IntegratorConfig::new(0.01, 5.0).unwrap();
        let traj = simulate_closed_loop(&model, &zero, &DVector::from_element(1, 2.0), &icfg).unwrap();
        assert!(traj.diverged());
        assert!(traj.len() < 501);
    }

    #[test]
    fn euler_step_is_first_order() {
        let x = DVector::from_element(1, 1.0);
        let next = euler_step(|_, x| Ok(-x), 0.0, &x, 0.1).unwrap();
        assert_relative_eq!(next[0], 0.9);
    }
}
