//! Closed-form optimal tracking.
//!
//! With `e = x - x_d` the error dynamics are `e' = f_e + g(x) tau_e`,
//! `f_e = f(x) - f(x_d)`, which is put in augmented form with
//! `P_e = [f_e | g(x)]`. The regulation law applied to `(P_e, e)` gives
//! `tau_e`, and the applied input adds the feedforward
//! `tau_d = g(x)^+ (x_d' - f(x_d))`.
//!
//! `g` is evaluated at the actual state `x` in both the error dynamics and
//! the feedforward, so `tau_d` depends on the plant state.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{AugmentedMatrix, DynamicsModel, StateVector};
use crate::error::{ControlError, Result};
use crate::linalg::{pseudo_inverse, PINV_RTOL};
use crate::regulation::{closed_form, ControlDecision, CostConfig};
use crate::simulation::Controller;

type SignalFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// Desired trajectory `x_d(t)` together with its derivative.
#[derive(Clone)]
pub struct ReferenceTrajectory {
    name: String,
    dim: usize,
    desired: Arc<SignalFn>,
    derivative: Arc<SignalFn>,
}

impl fmt::Debug for ReferenceTrajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceTrajectory")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ReferenceTrajectory {
    pub fn new<D, V>(name: impl Into<String>, dim: usize, desired: D, derivative: V) -> Self
    where
        D: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        V: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        ReferenceTrajectory {
            name: name.into(),
            dim,
            desired: Arc::new(desired),
            derivative: Arc::new(derivative),
        }
    }

    /// `x_d = 0`.
    pub fn zero(dim: usize) -> Self {
        Self::new("zero", dim, move |_| DVector::zeros(dim), move |_| DVector::zeros(dim))
    }

    /// `x_d,i(t) = a sin(w t + i pi/2)`: sin, cos, -sin, ... per component.
    pub fn sinusoid(dim: usize, amplitude: f64, frequency: f64) -> Self {
        let phase = |i: usize| i as f64 * std::f64::consts::FRAC_PI_2;
        Self::new(
            format!("sinusoid(a={amplitude}, w={frequency})"),
            dim,
            move |t| DVector::from_fn(dim, |i, _| amplitude * (frequency * t + phase(i)).sin()),
            move |t| {
                DVector::from_fn(dim, |i, _| amplitude * frequency * (frequency * t + phase(i)).cos())
            },
        )
    }

    /// A sinusoid Example I can follow exactly: its first row has no input,
    /// so `x_d2 = x_d1' + x_d1` with `x_d1 = a sin(w t)`.
    pub fn example_one_feasible(amplitude: f64, frequency: f64) -> Self {
        let (a, w) = (amplitude, frequency);
        Self::new(
            format!("example-I-feasible(a={a}, w={w})"),
            2,
            move |t| {
                let (s, c) = (w * t).sin_cos();
                DVector::from_vec(vec![a * s, a * w * c + a * s])
            },
            move |t| {
                let (s, c) = (w * t).sin_cos();
                DVector::from_vec(vec![a * w * c, -a * w * w * s + a * w * c])
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn desired(&self, t: f64) -> DVector<f64> {
        (self.desired)(t)
    }

    pub fn derivative(&self, t: f64) -> DVector<f64> {
        (self.derivative)(t)
    }

    pub(crate) fn check_dim(&self, state_dim: usize) -> Result<()> {
        if self.dim != state_dim {
            return Err(ControlError::Dimension {
                context: "reference trajectory",
                expected: state_dim,
                actual: self.dim,
            });
        }
        Ok(())
    }

    /// Largest gap between a central difference of `x_d` and the supplied
    /// derivative over `samples` points in `[0, horizon]`.
    pub fn derivative_mismatch(&self, horizon: f64, samples: usize) -> f64 {
        let h = 1e-5;
        let n = samples.max(2);
        (0..n)
            .map(|k| {
                let t = horizon * k as f64 / (n - 1) as f64;
                let fd = (self.desired(t + h) - self.desired(t - h)) / (2.0 * h);
                (fd - self.derivative(t)).amax()
            })
            .fold(0.0, f64::max)
    }

    /// Checks finiteness and derivative consistency (to 1e-4) on the horizon.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        for k in 0..=100 {
            let t = horizon * k as f64 / 100.0;
            let (xd, vd) = (self.desired(t), self.derivative(t));
            if xd.len() != self.dim || vd.len() != self.dim {
                return Err(ControlError::Dimension {
                    context: "reference sample",
                    expected: self.dim,
                    actual: xd.len().min(vd.len()),
                });
            }
            if xd.iter().chain(vd.iter()).any(|v| !v.is_finite()) {
                return Err(ControlError::non_finite(format!("reference `{}` at t = {t}", self.name)));
            }
        }
        let mismatch = self.derivative_mismatch(horizon, 101);
        if mismatch > 1e-4 {
            return Err(ControlError::Config(format!(
                "reference `{}` derivative disagrees with finite differences by {mismatch:e}",
                self.name
            )));
        }
        Ok(())
    }
}

/// `P_e = [f(x) - f(x_d) | g(x)]`.
pub fn error_augmented_matrix(model: &DynamicsModel, x: &StateVector, x_d: &StateVector) -> Result<AugmentedMatrix> {
    let f_e = model.eval_drift(x)? - model.eval_drift(x_d)?;
    let g = model.eval_input_matrix(x)?;
    Ok(AugmentedMatrix::from_parts(&f_e, &g))
}

/// Closed-form law on the error: `u_e = -R^{-1/2} psi_e sqrt(Q(e))`,
/// `tau_e = D u_e`.
pub fn tracking_control_error_part(
    model: &DynamicsModel,
    cfg: &CostConfig,
    x: &StateVector,
    x_d: &StateVector,
) -> Result<ControlDecision> {
    cfg.check_dims(model)?;
    let p_e = error_augmented_matrix(model, x, x_d)?;
    let e = x - x_d;
    closed_form(&p_e, &e, cfg)
}

fn feedforward_parts(
    model: &DynamicsModel,
    x: &StateVector,
    x_d: &StateVector,
    x_d_dot: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let g = model.eval_input_matrix(x)?;
    let (pinv, rank) = pseudo_inverse(&g, PINV_RTOL)?;
    let required = g.nrows().min(g.ncols());
    if rank < required {
        return Err(ControlError::IllPosedFeedforward {
            rank,
            columns: g.ncols(),
        });
    }
    if x_d_dot.len() != model.state_dim() {
        return Err(ControlError::Dimension {
            context: "reference derivative",
            expected: model.state_dim(),
            actual: x_d_dot.len(),
        });
    }
    let demand = x_d_dot - model.eval_drift(x_d)?;
    Ok((g, pinv, demand))
}

/// `tau_d = g(x)^+ (x_d' - f(x_d))`.
pub fn feedforward(
    model: &DynamicsModel,
    x: &StateVector,
    x_d: &StateVector,
    x_d_dot: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (_, pinv, demand) = feedforward_parts(model, x, x_d, x_d_dot)?;
    Ok(pinv * demand)
}

/// `|(I - g g^+)(x_d' - f(x_d))|`: the part of the reference the input
/// cannot produce. Zero for a feasible reference.
pub fn feedforward_residual(
    model: &DynamicsModel,
    x: &StateVector,
    x_d: &StateVector,
    x_d_dot: &DVector<f64>,
) -> Result<f64> {
    let (g, pinv, demand) = feedforward_parts(model, x, x_d, x_d_dot)?;
    let reached = &g * (pinv * &demand);
    Ok((demand - reached).norm())
}

/// `tau* = D u_e* + tau_d`. In the deadzone only the feedforward is applied.
pub fn tracking_control(
    model: &DynamicsModel,
    cfg: &CostConfig,
    x: &StateVector,
    reference: &ReferenceTrajectory,
    t: f64,
) -> Result<DVector<f64>> {
    let x_d = reference.desired(t);
    let x_d_dot = reference.derivative(t);
    let error_part = tracking_control_error_part(model, cfg, x, &x_d)?;
    let ff = feedforward(model, x, &x_d, &x_d_dot)?;
    Ok(error_part.tau + ff)
}

/// The tracking law packaged as a feedback controller.
#[derive(Debug, Clone)]
pub struct ClosedFormTracker {
    model: DynamicsModel,
    cfg: CostConfig,
    reference: ReferenceTrajectory,
}

impl ClosedFormTracker {
    pub fn new(model: DynamicsModel, cfg: CostConfig, reference: ReferenceTrajectory) -> Result<Self> {
        cfg.check_dims(&model)?;
        reference.check_dim(model.state_dim())?;
        Ok(ClosedFormTracker { model, cfg, reference })
    }

    pub fn reference(&self) -> &ReferenceTrajectory {
        &self.reference
    }
}

impl Controller for ClosedFormTracker {
    fn name(&self) -> &str {
        "proposed-tracking"
    }

    fn control(&self, t: f64, x: &StateVector) -> Result<DVector<f64>> {
        tracking_control(&self.model, &self.cfg, x, &self.reference, t)
    }

    /// `(Q(e) + u_e^T R u_e) / 2`.
    fn stage_cost(&self, t: f64, x: &StateVector, _tau: &DVector<f64>) -> Result<f64> {
        let d = tracking_control_error_part(&self.model, &self.cfg, x, &self.reference.desired(t))?;
        Ok(0.5 * (d.state_penalty + d.u_aug.dot(&(self.cfg.r() * &d.u_aug))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{builtin_example, ExampleIIParams, ExampleId};
    use crate::regulation::regulation_control;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> StateVector {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn error_matrix_columns() {
        let m = builtin_example(ExampleId::I, None).unwrap();
        let x = v(&[0.7, -0.2]);
        let p = error_augmented_matrix(&m, &x, &x).unwrap();
        assert_eq!(p.drift_column(), v(&[0.0, 0.0]));
        assert_eq!(p.input_columns(), m.eval_input_matrix(&x).unwrap());

        let p = error_augmented_matrix(&m, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(p.drift_column(), v(&[-1.0, -0.5]), epsilon = 1e-15);
    }

    #[test]
    fn error_part_reduces_to_regulation() {
        let m = builtin_example(ExampleId::I, None).unwrap();
        let c = CostConfig::identity(2, 1, 1.0).unwrap();
        let zero = v(&[0.0, 0.0]);
        let d = tracking_control_error_part(&m, &c, &zero, &zero).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.tau, v(&[0.0]));

        let x = v(&[1.0, 0.0]);
        let d = tracking_control_error_part(&m, &c, &x, &zero).unwrap();
        assert_eq!(d, regulation_control(&m, &c, &x).unwrap());
        assert_relative_eq!(d.tau[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn feedforward_values() {
        let two = builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_1)).unwrap();
        let x = v(&[0.3, 0.4]);
        let x_d = v(&[0.1, -0.2]);
        let x_d_dot = v(&[0.5, 0.9]);
        let demand = &x_d_dot - two.eval_drift(&x_d).unwrap();
        let ff = feedforward(&two, &x, &x_d, &x_d_dot).unwrap();
        assert_relative_eq!(ff[0], demand[1], epsilon = 1e-14);

        let one = builtin_example(ExampleId::I, None).unwrap();
        let zero = v(&[0.0, 0.0]);
        let x_d = v(&[0.2, 0.1]);
        let x_d_dot = v(&[-0.3, 0.8]);
        let f_d = one.eval_drift(&x_d).unwrap();
        let ff = feedforward(&one, &zero, &x_d, &x_d_dot).unwrap();
        assert_relative_eq!(ff[0], (x_d_dot[1] - f_d[1]) / 3.0, epsilon = 1e-14);

        // A reference that follows the drift needs no feedforward.
        let ff = feedforward(&one, &v(&[1.0, 2.0]), &x_d, &f_d).unwrap();
        assert_relative_eq!(ff[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn infeasible_reference_has_residual() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        let r = ReferenceTrajectory::sinusoid(2, 1.0, 1.0);
        let t = 0.7;
        let x = v(&[0.2, 0.3]);
        let res = feedforward_residual(&one, &x, &r.desired(t), &r.derivative(t)).unwrap();
        // First row: x_d1' - f1(x_d) = cos t - (-sin t + cos t) = sin t.
        assert_relative_eq!(res, t.sin(), epsilon = 1e-12);

        let ok = ReferenceTrajectory::example_one_feasible(1.0, 1.0);
        let res = feedforward_residual(&one, &x, &ok.desired(t), &ok.derivative(t)).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn ill_posed_feedforward() {
        let model = DynamicsModel::new(
            "lost-actuator",
            2,
            1,
            |x| Ok(-x.clone()),
            |_| Ok(DMatrix::zeros(2, 1)),
        )
        .unwrap();
        let z = v(&[0.0, 0.0]);
        assert!(matches!(
            feedforward(&model, &z, &z, &z),
            Err(ControlError::IllPosedFeedforward { rank: 0, .. })
        ));
    }

    #[test]
    fn on_reference_applies_feedforward_only() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        let c = CostConfig::identity(2, 1, 1.0).unwrap();
        let r = ReferenceTrajectory::example_one_feasible(1.0, 1.0);
        let t = 1.3;
        let x = r.desired(t);
        let tau = tracking_control(&one, &c, &x, &r, t).unwrap();
        let ff = feedforward(&one, &x, &x, &r.derivative(t)).unwrap();
        assert_eq!(tau, ff);
    }

    #[test]
    fn presets_have_consistent_derivatives() {
        ReferenceTrajectory::sinusoid(3, 2.0, 0.7).validate(10.0).unwrap();
        ReferenceTrajectory::example_one_feasible(1.0, 1.5).validate(10.0).unwrap();
        ReferenceTrajectory::zero(2).validate(10.0).unwrap();
        let wrong = ReferenceTrajectory::new(
            "bad",
            1,
            |t| DVector::from_element(1, t.sin()),
            |t| DVector::from_element(1, t.sin()),
        );
        assert!(wrong.validate(5.0).is_err());
    }
}
