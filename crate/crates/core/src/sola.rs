//! Single-online-approximator (SOLA) adaptive critic, used as the comparison
//! baseline.
//!
//! The critic approximates `V(x) ~ w^T phi(x)`. The actor is derived from it,
//! `u = -1/2 R^{-1} g^T grad_phi^T w`, and the weights follow a normalised
//! gradient descent on the HJB residual plus a stabilising term that is
//! switched on whenever `L = |x|^2 / 2` is not decreasing:
//!
//! ```text
//! sigma = grad_phi (f + g u)
//! w'    = -a1 sigma / (sigma^T sigma + 1)^2 (sigma^T w + Q(x) + u^T R u)
//!         + [x^T x' >= 0] (a2 / 2) grad_phi g R^{-1} g^T x
//! ```
//!
//! Plant state and weights are integrated together with the same fixed step
//! and no probing noise.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{DynamicsModel, StateVector};
use crate::error::{ControlError, Result};
use crate::simulation::{rk4_step, IntegratorConfig, RunStatus, Trajectory, TrajectoryMeta, BLOWUP_NORM};

/// Weight norm above which the baseline is declared diverged.
pub const WEIGHT_BLOWUP_NORM: f64 = 1e6;

type PhiFn = dyn Fn(&StateVector) -> DVector<f64> + Send + Sync;
type GradFn = dyn Fn(&StateVector) -> DMatrix<f64> + Send + Sync;
type CostFn = dyn Fn(&StateVector) -> f64 + Send + Sync;

/// Critic basis `phi(x)` with its Jacobian (`N x m`).
#[derive(Clone)]
pub struct BasisSet {
    name: String,
    size: usize,
    phi: Arc<PhiFn>,
    grad: Arc<GradFn>,
}

impl fmt::Debug for BasisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisSet")
            .field("name", &self.name)
            .field("size", &self.size)
            .finish_non_exhaustive()
    }
}

impl BasisSet {
    pub fn new<P, G>(name: impl Into<String>, size: usize, phi: P, grad: G) -> Self
    where
        P: Fn(&StateVector) -> DVector<f64> + Send + Sync + 'static,
        G: Fn(&StateVector) -> DMatrix<f64> + Send + Sync + 'static,
    {
        BasisSet {
            name: name.into(),
            size,
            phi: Arc::new(phi),
            grad: Arc::new(grad),
        }
    }

    /// `[x1, x2, x1 x2, x1^2, x2^2, x1^2 cos(2 x1)^2, x1^3]`, used for
    /// Examples I and II.
    pub fn example_one() -> Self {
        Self::new(
            "example-I",
            7,
            |x| {
                let (a, b) = (x[0], x[1]);
                let c = (2.0 * a).cos();
                DVector::from_vec(vec![a, b, a * b, a * a, b * b, a * a * c * c, a * a * a])
            },
            |x| {
                let (a, b) = (x[0], x[1]);
                let (s, c) = (2.0 * a).sin_cos();
                DMatrix::from_row_slice(
                    7,
                    2,
                    &[
                        1.0, 0.0, //
                        0.0, 1.0, //
                        b, a, //
                        2.0 * a, 0.0, //
                        0.0, 2.0 * b, //
                        2.0 * a * c * c - 4.0 * a * a * c * s, 0.0, //
                        3.0 * a * a, 0.0,
                    ],
                )
            },
        )
    }

    /// `[x1, x2, x1 x2, x1^2, x2^2, x1^2 x2^2, x1^3]`, used for Example III.
    pub fn example_three() -> Self {
        Self::new(
            "example-III",
            7,
            |x| {
                let (a, b) = (x[0], x[1]);
                DVector::from_vec(vec![a, b, a * b, a * a, b * b, a * a * b * b, a * a * a])
            },
            |x| {
                let (a, b) = (x[0], x[1]);
                DMatrix::from_row_slice(
                    7,
                    2,
                    &[
                        1.0, 0.0, //
                        0.0, 1.0, //
                        b, a, //
                        2.0 * a, 0.0, //
                        0.0, 2.0 * b, //
                        2.0 * a * b * b, 2.0 * a * a * b, //
                        3.0 * a * a, 0.0,
                    ],
                )
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eval(&self, x: &StateVector) -> DVector<f64> {
        (self.phi)(x)
    }

    pub fn gradient(&self, x: &StateVector) -> DMatrix<f64> {
        (self.grad)(x)
    }

    /// Largest gap between the analytic Jacobian and central differences at `x`.
    pub fn gradient_mismatch(&self, x: &StateVector, h: f64) -> f64 {
        let analytic = self.gradient(x);
        let mut worst = 0.0f64;
        for j in 0..x.len() {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[j] += h;
            lo[j] -= h;
            let fd = (self.eval(&hi) - self.eval(&lo)) / (2.0 * h);
            worst = worst.max((fd - analytic.column(j)).amax());
        }
        worst
    }
}

/// `phi(x)`.
pub fn eval_basis(basis: &BasisSet, x: &StateVector) -> DVector<f64> {
    basis.eval(x)
}

/// Critic weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticWeights(pub DVector<f64>);

impl CriticWeights {
    pub fn zeros(n: usize) -> Self {
        CriticWeights(DVector::zeros(n))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Baseline gains and cost.
#[derive(Clone)]
pub struct SolaConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Control weight, `n x n`.
    pub r_b: DMatrix<f64>,
    state_cost: Arc<CostFn>,
    pub weight_init: DVector<f64>,
}

impl fmt::Debug for SolaConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolaConfig")
            .field("alpha1", &self.alpha1)
            .field("alpha2", &self.alpha2)
            .field("r_b", &self.r_b)
            .field("weight_init", &self.weight_init)
            .finish_non_exhaustive()
    }
}

impl SolaConfig {
    pub fn new<Q>(alpha1: f64, alpha2: f64, r_b: DMatrix<f64>, state_cost: Q, weight_init: DVector<f64>) -> Result<Self>
    where
        Q: Fn(&StateVector) -> f64 + Send + Sync + 'static,
    {
        if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
            return Err(ControlError::Config(format!(
                "SOLA gains must be non-negative, got alpha1 = {alpha1}, alpha2 = {alpha2}"
            )));
        }
        if !r_b.is_square() || r_b.clone().try_inverse().is_none() {
            return Err(ControlError::Config("SOLA R must be square and invertible".into()));
        }
        Ok(SolaConfig {
            alpha1,
            alpha2,
            r_b,
            state_cost: Arc::new(state_cost),
            weight_init,
        })
    }

    /// Examples I and II: `Q(x) = x^T x`, `R = 1`, `a1 = 25`, `a2 = 0.01`,
    /// zero initial weights.
    pub fn example_one() -> Self {
        Self::new(25.0, 0.01, DMatrix::identity(1, 1), |x| x.norm_squared(), DVector::zeros(7))
            .expect("valid preset")
    }

    /// Example III: `Q(x) = 2((2x1 + 6x1x2^2)^2 + (4x2 + 6x1^2x2)^2)`,
    /// `R = I`, `a1 = 200`, `a2 = 0.01`. The disturbance is the third input
    /// column and is weighted like a control.
    pub fn example_three() -> Self {
        Self::new(
            200.0,
            0.01,
            DMatrix::identity(3, 3),
            |x| {
                let (a, b) = (x[0], x[1]);
                let p = 2.0 * a + 6.0 * a * b * b;
                let q = 4.0 * b + 6.0 * a * a * b;
                2.0 * (p * p + q * q)
            },
            DVector::zeros(7),
        )
        .expect("valid preset")
    }

    pub fn state_cost(&self, x: &StateVector) -> f64 {
        (self.state_cost)(x)
    }

    fn r_inv(&self) -> DMatrix<f64> {
        self.r_b.clone().try_inverse().expect("checked at construction")
    }
}

fn check_dims(model: &DynamicsModel, basis: &BasisSet, w: &DVector<f64>, r_b: &DMatrix<f64>) -> Result<()> {
    if w.len() != basis.size() {
        return Err(ControlError::Dimension {
            context: "critic weights",
            expected: basis.size(),
            actual: w.len(),
        });
    }
    if r_b.nrows() != model.input_dim() {
        return Err(ControlError::Dimension {
            context: "SOLA R",
            expected: model.input_dim(),
            actual: r_b.nrows(),
        });
    }
    Ok(())
}

/// Actor: `u = -1/2 R^{-1} g(x)^T grad_phi(x)^T w`.
pub fn sola_control(
    model: &DynamicsModel,
    basis: &BasisSet,
    w: &DVector<f64>,
    r_b: &DMatrix<f64>,
    x: &StateVector,
) -> Result<DVector<f64>> {
    check_dims(model, basis, w, r_b)?;
    let r_inv = r_b
        .clone()
        .try_inverse()
        .ok_or_else(|| ControlError::Config("SOLA R is singular".into()))?;
    let g = model.eval_input_matrix(x)?;
    Ok(actor(&g, &basis.gradient(x), w, &r_inv))
}

fn actor(g: &DMatrix<f64>, grad: &DMatrix<f64>, w: &DVector<f64>, r_inv: &DMatrix<f64>) -> DVector<f64> {
    let value_gradient = grad.tr_mul(w);
    -0.5 * (r_inv * g.tr_mul(&value_gradient))
}

/// Joint right-hand side for `(x, w)`.
fn joint_rate(
    model: &DynamicsModel,
    basis: &BasisSet,
    cfg: &SolaConfig,
    r_inv: &DMatrix<f64>,
    x: &StateVector,
    w: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let f = model.eval_drift(x)?;
    let g = model.eval_input_matrix(x)?;
    let grad = basis.gradient(x);
    let u = actor(&g, &grad, w, r_inv);
    let x_dot = f + &g * &u;
    let sigma = &grad * &x_dot;
    let norm = sigma.norm_squared() + 1.0;
    let residual = sigma.dot(w) + cfg.state_cost(x) + u.dot(&(&cfg.r_b * &u));
    let mut w_dot = &sigma * (-cfg.alpha1 * residual / (norm * norm));
    if x.dot(&x_dot) >= 0.0 {
        w_dot += (&grad * (&g * (r_inv * g.tr_mul(x)))) * (0.5 * cfg.alpha2);
    }
    Ok((x_dot, w_dot, u))
}

/// One explicit-Euler step of the critic weights at a fixed state. A
/// non-finite result or `|w| > WEIGHT_BLOWUP_NORM` is reported as a blowup.
pub fn sola_weight_update(
    model: &DynamicsModel,
    basis: &BasisSet,
    w: &CriticWeights,
    cfg: &SolaConfig,
    x: &StateVector,
    dt: f64,
) -> Result<CriticWeights> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(ControlError::Config("dt must be positive".into()));
    }
    check_dims(model, basis, &w.0, &cfg.r_b)?;
    let (_, w_dot, _) = joint_rate(model, basis, cfg, &cfg.r_inv(), x, &w.0)?;
    let next = CriticWeights(&w.0 + w_dot * dt);
    if !next.is_finite() || next.norm() > WEIGHT_BLOWUP_NORM {
        return Err(ControlError::Blowup { time: f64::NAN });
    }
    Ok(next)
}

/// A baseline run: the closed-loop trajectory plus the weight history.
#[derive(Debug, Clone)]
pub struct SolaRun {
    pub trajectory: Trajectory,
    pub weight_norms: Vec<f64>,
    pub final_weights: CriticWeights,
}

/// Co-integrates plant and critic from `x0` and `cfg.weight_init`.
pub fn simulate_sola(
    model: &DynamicsModel,
    basis: &BasisSet,
    cfg: &SolaConfig,
    x0: &StateVector,
    icfg: &IntegratorConfig,
) -> Result<SolaRun> {
    model.check_state(x0, "initial state")?;
    check_dims(model, basis, &cfg.weight_init, &cfg.r_b)?;
    let steps = icfg.steps()?;
    let m = model.state_dim();
    let nw = basis.size();
    let r_inv = cfg.r_inv();

    let split = |z: &DVector<f64>| (z.rows(0, m).into_owned(), z.rows(m, nw).into_owned());
    let deriv = |t: f64, z: &DVector<f64>| -> Result<DVector<f64>> {
        let (x, w) = split(z);
        // Stage points past the guards would only feed overflow into the model.
        if x.norm() > BLOWUP_NORM || w.norm() > WEIGHT_BLOWUP_NORM {
            return Err(ControlError::Blowup { time: t });
        }
        let (x_dot, w_dot, _) = joint_rate(model, basis, cfg, &r_inv, &x, &w)?;
        let mut out = DVector::zeros(m + nw);
        out.rows_mut(0, m).copy_from(&x_dot);
        out.rows_mut(m, nw).copy_from(&w_dot);
        Ok(out)
    };

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        stage_costs: Vec::with_capacity(steps + 1),
        errors: None,
        status: RunStatus::Completed,
        meta: TrajectoryMeta {
            model: model.name().to_string(),
            controller: "sola".into(),
            dt: icfg.dt,
            horizon: icfg.horizon,
            gamma: None,
        },
    };
    let mut weight_norms = Vec::with_capacity(steps + 1);

    let mut z = DVector::zeros(m + nw);
    z.rows_mut(0, m).copy_from(x0);
    z.rows_mut(m, nw).copy_from(&cfg.weight_init);
    for k in 0..=steps {
        let t = k as f64 * icfg.dt;
        let (x, w) = split(&z);
        let g = model.eval_input_matrix(&x)?;
        let u = actor(&g, &basis.gradient(&x), &w, &r_inv);
        if u.iter().any(|v| !v.is_finite()) {
            traj.status = RunStatus::Diverged { time: t };
            break;
        }
        traj.times.push(t);
        traj.stage_costs.push(cfg.state_cost(&x) + u.dot(&(&cfg.r_b * &u)));
        traj.states.push(x);
        traj.controls.push(u);
        weight_norms.push(w.norm());
        if k == steps {
            break;
        }
        match rk4_step(deriv, t, &z, icfg.dt) {
            Ok(next) => {
                let (xn, wn) = split(&next);
                if xn.norm() > BLOWUP_NORM || wn.norm() > WEIGHT_BLOWUP_NORM {
                    traj.status = RunStatus::Diverged { time: t + icfg.dt };
                    break;
                }
                z = next;
            }
            Err(ControlError::Blowup { time }) => {
                traj.status = RunStatus::Diverged { time };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let final_weights = CriticWeights(z.rows(m, nw).into_owned());
    Ok(SolaRun {
        trajectory: traj,
        weight_norms,
        final_weights,
    })
}
