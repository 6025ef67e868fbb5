//! Closed-form optimal regulation.
//!
//! With the state penalty `Q(x) = x^T [Q0 + gamma P P^T] x`, the augmented
//! optimal input is
//!
//! ```text
//! u* = -R^{-1/2} psi sqrt(Q(x)),   psi = P^T x / |P^T x|
//! ```
//!
//! and the physical input is `tau* = D u*`, i.e. `u*` with its first
//! component dropped. The unit direction `psi` makes `x^T P u*` negative, so
//! `V = |x|^2 / 2` decreases along the augmented flow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{AugmentedMatrix, DynamicsModel, StateVector};
use crate::error::{ControlError, Result};
use crate::linalg::{is_symmetric, sym_inverse_sqrt};
use crate::simulation::Controller;

pub const DEFAULT_DEADZONE_EPS: f64 = 1e-10;

/// Negative penalties above this are rounding noise and are clamped to zero.
pub const PENALTY_CLAMP_TOL: f64 = 1e-12;

/// Cost weights for the closed-form law.
#[derive(Debug, Clone, PartialEq)]
pub struct CostConfig {
    q0: DMatrix<f64>,
    r: DMatrix<f64>,
    gamma: f64,
    deadzone_eps: f64,
    r_inv_sqrt: DMatrix<f64>,
}

impl CostConfig {
    pub fn new(q0: DMatrix<f64>, r: DMatrix<f64>, gamma: f64, deadzone_eps: f64) -> Result<Self> {
        if !q0.is_square() {
            return Err(ControlError::Config(format!(
                "Q0 must be square, got {}x{}",
                q0.nrows(),
                q0.ncols()
            )));
        }
        if q0.iter().any(|v| !v.is_finite()) || !is_symmetric(&q0, 1e-12) {
            return Err(ControlError::Config("Q0 must be finite and symmetric".into()));
        }
        if !gamma.is_finite() {
            return Err(ControlError::Config("gamma must be finite".into()));
        }
        if !(deadzone_eps > 0.0 && deadzone_eps.is_finite()) {
            return Err(ControlError::Config("deadzone_eps must be positive".into()));
        }
        let r_inv_sqrt = sym_inverse_sqrt(&r)?;
        Ok(CostConfig {
            q0,
            r,
            gamma,
            deadzone_eps,
            r_inv_sqrt,
        })
    }

    /// `Q0 = I_m`, `R = I_{n+1}` with the default deadzone.
    pub fn identity(state_dim: usize, input_dim: usize, gamma: f64) -> Result<Self> {
        Self::new(
            DMatrix::identity(state_dim, state_dim),
            DMatrix::identity(input_dim + 1, input_dim + 1),
            gamma,
            DEFAULT_DEADZONE_EPS,
        )
    }

    pub fn q0(&self) -> &DMatrix<f64> {
        &self.q0
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn deadzone_eps(&self) -> f64 {
        self.deadzone_eps
    }

    pub fn r_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.r_inv_sqrt
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.q0.clone(), self.r.clone(), gamma, self.deadzone_eps)
    }

    /// Checks the weights against a model's dimensions.
    pub fn check_dims(&self, model: &DynamicsModel) -> Result<()> {
        if self.q0.nrows() != model.state_dim() {
            return Err(ControlError::Dimension {
                context: "Q0 size",
                expected: model.state_dim(),
                actual: self.q0.nrows(),
            });
        }
        if self.r.nrows() != model.augmented_dim() {
            return Err(ControlError::Dimension {
                context: "R size (augmented input)",
                expected: model.augmented_dim(),
                actual: self.r.nrows(),
            });
        }
        Ok(())
    }
}

/// Output of one evaluation of the closed-form law.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlDecision {
    /// Augmented optimal input, length `n + 1`.
    pub u_aug: DVector<f64>,
    /// Physical input `D u_aug`, length `n`.
    pub tau: DVector<f64>,
    /// True when `|P^T x|` fell inside the deadzone and zero control was issued.
    pub degenerate: bool,
    /// `Q(x)` at the evaluated state.
    pub state_penalty: f64,
}

/// Unit direction `psi`, or the deadzone case.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    Unit(DVector<f64>),
    Degenerate { norm: f64 },
}

/// `D u = u[1..]`.
pub fn extract_physical(u_aug: &DVector<f64>) -> DVector<f64> {
    u_aug.rows(1, u_aug.len() - 1).into_owned()
}

fn raw_penalty(cfg: &CostConfig, x: &DVector<f64>, projected: &DVector<f64>) -> f64 {
    x.dot(&(cfg.q0() * x)) + cfg.gamma() * projected.norm_squared()
}

fn clamp_penalty(value: f64, x: &DVector<f64>) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -PENALTY_CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(ControlError::GammaViolation {
            state: x.as_slice().to_vec(),
            value,
        })
    }
}

/// `Q(x) = x^T Q0 x + gamma |P^T x|^2`, clamped at zero within tolerance.
pub fn state_penalty(model: &DynamicsModel, cfg: &CostConfig, x: &StateVector) -> Result<f64> {
    cfg.check_dims(model)?;
    let p = model.augmented_matrix(x)?;
    clamp_penalty(raw_penalty(cfg, x, &p.project(x)), x)
}

/// `psi = P^T x / |P^T x|` unless `|P^T x| <= eps`.
pub fn psi_direction(p: &AugmentedMatrix, x: &DVector<f64>, eps: f64) -> Result<Direction> {
    if p.as_matrix().nrows() != x.len() {
        return Err(ControlError::Dimension {
            context: "psi_direction state",
            expected: p.as_matrix().nrows(),
            actual: x.len(),
        });
    }
    let projected = p.project(x);
    Ok(direction_of(projected, eps))
}

fn direction_of(projected: DVector<f64>, eps: f64) -> Direction {
    let norm = projected.norm();
    if norm > eps {
        Direction::Unit(projected / norm)
    } else {
        Direction::Degenerate { norm }
    }
}

/// The closed-form law for an arbitrary augmented matrix and state-like
/// vector. Regulation passes `(P(x), x)`; tracking passes `(P_e, e)`.
pub(crate) fn closed_form(p: &AugmentedMatrix, z: &DVector<f64>, cfg: &CostConfig) -> Result<ControlDecision> {
    let aug = p.as_matrix().ncols();
    let projected = p.project(z);
    let penalty = clamp_penalty(raw_penalty(cfg, z, &projected), z)?;
    match direction_of(projected, cfg.deadzone_eps()) {
        Direction::Degenerate { .. } => Ok(ControlDecision {
            u_aug: DVector::zeros(aug),
            tau: DVector::zeros(aug - 1),
            degenerate: true,
            state_penalty: penalty,
        }),
        Direction::Unit(psi) => {
            let u_aug = -(cfg.r_inv_sqrt() * psi) * penalty.sqrt();
            let tau = extract_physical(&u_aug);
            Ok(ControlDecision {
                u_aug,
                tau,
                degenerate: false,
                state_penalty: penalty,
            })
        }
    }
}

/// `u* = -R^{-1/2} psi sqrt(Q(x))`, `tau* = D u*`.
pub fn regulation_control(model: &DynamicsModel, cfg: &CostConfig, x: &StateVector) -> Result<ControlDecision> {
    cfg.check_dims(model)?;
    let p = model.augmented_matrix(x)?;
    closed_form(&p, x, cfg)
}

/// Smallest admissible gamma at `x`: `-x^T Q0 x / |P^T x|^2`. `None` when
/// `|P^T x|` is inside the deadzone, where gamma is unconstrained.
pub fn gamma_lower_bound(model: &DynamicsModel, cfg: &CostConfig, x: &StateVector) -> Result<Option<f64>> {
    cfg.check_dims(model)?;
    let projected = model.augmented_matrix(x)?.project(x);
    let norm2 = projected.norm_squared();
    if norm2.sqrt() <= cfg.deadzone_eps() {
        return Ok(None);
    }
    Ok(Some(-x.dot(&(cfg.q0() * x)) / norm2))
}

/// Result of sweeping `Q(x)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub admissible: bool,
    pub worst_x: Vec<f64>,
    /// Minimum of the unclamped `Q(x)` over the grid.
    pub worst_margin: f64,
    pub points_evaluated: usize,
}

/// Evaluates the unclamped `Q(x)` on a uniform grid over an axis-aligned box.
/// Admissible iff the minimum is `>= -PENALTY_CLAMP_TOL`.
pub fn verify_gamma_over_grid(
    model: &DynamicsModel,
    cfg: &CostConfig,
    bounds: &[(f64, f64)],
    points_per_axis: usize,
) -> Result<GammaReport> {
    cfg.check_dims(model)?;
    let m = model.state_dim();
    if bounds.len() != m {
        return Err(ControlError::Dimension {
            context: "grid box axes",
            expected: m,
            actual: bounds.len(),
        });
    }
    if points_per_axis < 2 {
        return Err(ControlError::Config("points_per_axis must be at least 2".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ControlError::Config(format!("invalid box axis [{lo}, {hi}]")));
        }
    }

    let axis_value = |axis: usize, k: usize| {
        let (lo, hi) = bounds[axis];
        lo + (hi - lo) * k as f64 / (points_per_axis - 1) as f64
    };

    let total = points_per_axis.pow(m as u32);
    let mut worst_margin = f64::INFINITY;
    let mut worst_x = vec![0.0; m];
    let mut x = StateVector::zeros(m);
    for flat in 0..total {
        let mut rem = flat;
        for axis in 0..m {
            x[axis] = axis_value(axis, rem % points_per_axis);
            rem /= points_per_axis;
        }
        let projected = model.augmented_matrix(&x)?.project(&x);
        let q = raw_penalty(cfg, &x, &projected);
        if q < worst_margin {
            worst_margin = q;
            worst_x.copy_from_slice(x.as_slice());
        }
    }
    Ok(GammaReport {
        admissible: worst_margin >= -PENALTY_CLAMP_TOL,
        worst_x,
        worst_margin,
        points_evaluated: total,
    })
}

/// `u^T R u - Q(x)`, which vanishes for the closed-form law.
pub fn hjb_residual(model: &DynamicsModel, cfg: &CostConfig, x: &StateVector) -> Result<f64> {
    let decision = regulation_control(model, cfg, x)?;
    if decision.degenerate {
        let norm = model.augmented_matrix(x)?.project(x).norm();
        return Err(ControlError::Degenerate { norm });
    }
    let effort = decision.u_aug.dot(&(cfg.r() * &decision.u_aug));
    Ok(effort - decision.state_penalty)
}

/// The regulation law packaged as a feedback controller.
#[derive(Debug, Clone)]
pub struct ClosedFormRegulator {
    model: DynamicsModel,
    cfg: CostConfig,
}

impl ClosedFormRegulator {
    pub fn new(model: DynamicsModel, cfg: CostConfig) -> Result<Self> {
        cfg.check_dims(&model)?;
        Ok(ClosedFormRegulator { model, cfg })
    }

    pub fn model(&self) -> &DynamicsModel {
        &self.model
    }

    pub fn cost(&self) -> &CostConfig {
        &self.cfg
    }
}

impl Controller for ClosedFormRegulator {
    fn name(&self) -> &str {
        "proposed"
    }

    fn control(&self, _t: f64, x: &StateVector) -> Result<DVector<f64>> {
        Ok(regulation_control(&self.model, &self.cfg, x)?.tau)
    }

    /// `l = (Q(x) + u^T R u) / 2`.
    fn stage_cost(&self, _t: f64, x: &StateVector, _tau: &DVector<f64>) -> Result<f64> {
        let d = regulation_control(&self.model, &self.cfg, x)?;
        Ok(0.5 * (d.state_penalty + d.u_aug.dot(&(self.cfg.r() * &d.u_aug))))
    }
}
