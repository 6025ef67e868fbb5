//! Input-affine plants `x' = f(x) + g(x) tau` and their augmented drift-free
//! form `x' = P(x) u` with `P = [f | g]` and `u = [1; tau]`.
//!
//! Three benchmark plants ship as built-ins:
//!
//! * Example I: a two-state system with a state-dependent input gain
//!   `cos(2 x1) + 2`.
//! * Example II: a two-state system parameterised by four scalars, with a
//!   singular surface at `x2 = -lambda2`.
//! * Example III: a two-state game-theoretic plant whose disturbance channel
//!   is folded into the input, giving three input columns `[u1, u2, d]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, Result};

/// Plant state. Entries must be finite and the length must match the model.
pub type StateVector = DVector<f64>;

type DriftFn = dyn Fn(&StateVector) -> Result<DVector<f64>> + Send + Sync;
type InputFn = dyn Fn(&StateVector) -> Result<DMatrix<f64>> + Send + Sync;

/// Distance to the Example II singular surface below which evaluation fails.
pub const SINGULAR_SURFACE_TOL: f64 = 1e-12;

/// An input-affine plant. Cheap to clone; evaluation is pure.
#[derive(Clone)]
pub struct DynamicsModel {
    name: String,
    state_dim: usize,
    input_dim: usize,
    drift: Arc<DriftFn>,
    input_matrix: Arc<InputFn>,
}

impl fmt::Debug for DynamicsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsModel")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .finish_non_exhaustive()
    }
}

impl DynamicsModel {
    /// Builds a model from closures. The origin must be an equilibrium:
    /// `f(0)` is evaluated once here and rejected unless it is zero.
    pub fn new<F, G>(
        name: impl Into<String>,
        state_dim: usize,
        input_dim: usize,
        drift: F,
        input_matrix: G,
    ) -> Result<Self>
    where
        F: Fn(&StateVector) -> Result<DVector<f64>> + Send + Sync + 'static,
        G: Fn(&StateVector) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        if state_dim == 0 || input_dim == 0 {
            return Err(ControlError::Config(
                "state and input dimensions must be positive".into(),
            ));
        }
        let model = DynamicsModel {
            name: name.into(),
            state_dim,
            input_dim,
            drift: Arc::new(drift),
            input_matrix: Arc::new(input_matrix),
        };
        let f0 = model.eval_drift(&StateVector::zeros(state_dim))?;
        if f0.iter().any(|v| *v != 0.0) {
            return Err(ControlError::Config(format!(
                "model `{}` has f(0) = {:?}; the origin must be an equilibrium",
                model.name,
                f0.as_slice()
            )));
        }
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of states `m`.
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Number of inputs `n`.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Dimension of the augmented input `n + 1`.
    pub fn augmented_dim(&self) -> usize {
        self.input_dim + 1
    }

    pub(crate) fn check_state(&self, x: &StateVector, context: &'static str) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(ControlError::Dimension {
                context,
                expected: self.state_dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::non_finite(format!("{context}: state {:?}", x.as_slice())));
        }
        Ok(())
    }

    /// Internal dynamics `f(x)`.
    pub fn eval_drift(&self, x: &StateVector) -> Result<DVector<f64>> {
        self.check_state(x, "eval_drift")?;
        let f = (self.drift)(x)?;
        if f.len() != self.state_dim {
            return Err(ControlError::Dimension {
                context: "drift output",
                expected: self.state_dim,
                actual: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::non_finite(format!(
                "drift of `{}` at x = {:?}",
                self.name,
                x.as_slice()
            )));
        }
        Ok(f)
    }

    /// Control coefficient matrix `g(x)`, shape `m x n`.
    pub fn eval_input_matrix(&self, x: &StateVector) -> Result<DMatrix<f64>> {
        self.check_state(x, "eval_input_matrix")?;
        let g = (self.input_matrix)(x)?;
        if g.nrows() != self.state_dim {
            return Err(ControlError::Dimension {
                context: "input matrix rows",
                expected: self.state_dim,
                actual: g.nrows(),
            });
        }
        if g.ncols() != self.input_dim {
            return Err(ControlError::Dimension {
                context: "input matrix columns",
                expected: self.input_dim,
                actual: g.ncols(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::non_finite(format!(
                "input matrix of `{}` at x = {:?}",
                self.name,
                x.as_slice()
            )));
        }
        Ok(g)
    }

    /// `P(x) = [f(x) | g(x)]`.
    pub fn augmented_matrix(&self, x: &StateVector) -> Result<AugmentedMatrix> {
        let f = self.eval_drift(x)?;
        let g = self.eval_input_matrix(x)?;
        Ok(AugmentedMatrix::from_parts(&f, &g))
    }

    /// `P(x) P(x)^T = f f^T + g g^T`.
    pub fn gram(&self, x: &StateVector) -> Result<DMatrix<f64>> {
        let p = self.augmented_matrix(x)?;
        Ok(p.as_matrix() * p.as_matrix().transpose())
    }

    /// Right-hand side of the open- or closed-loop plant for a given input.
    pub fn vector_field(&self, x: &StateVector, tau: &DVector<f64>) -> Result<DVector<f64>> {
        if tau.len() != self.input_dim {
            return Err(ControlError::Dimension {
                context: "control input",
                expected: self.input_dim,
                actual: tau.len(),
            });
        }
        let f = self.eval_drift(x)?;
        let g = self.eval_input_matrix(x)?;
        Ok(f + g * tau)
    }
}

/// The augmented matrix `P = [f | g]`, shape `m x (n + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMatrix(DMatrix<f64>);

impl AugmentedMatrix {
    pub fn from_parts(drift: &DVector<f64>, input: &DMatrix<f64>) -> Self {
        let m = drift.len();
        let n = input.ncols();
        let mut p = DMatrix::zeros(m, n + 1);
        p.set_column(0, drift);
        p.view_mut((0, 1), (m, n)).copy_from(input);
        AugmentedMatrix(p)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn drift_column(&self) -> DVector<f64> {
        self.0.column(0).into_owned()
    }

    pub fn input_columns(&self) -> DMatrix<f64> {
        self.0.columns(1, self.0.ncols() - 1).into_owned()
    }

    /// `P^T x`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(x)
    }
}

/// Parameters `(lambda1, lambda2, lambda3, lambda4)` of Example II.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleIIParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl ExampleIIParams {
    pub const CASE_1: ExampleIIParams = ExampleIIParams {
        lambda1: -1.0,
        lambda2: -100.0,
        lambda3: 0.0,
        lambda4: -100.0,
    };

    pub const CASE_2: ExampleIIParams = ExampleIIParams {
        lambda1: -0.2,
        lambda2: 100.0,
        lambda3: 1.0,
        lambda4: -1.0,
    };

    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, lambda4: f64) -> Result<Self> {
        let p = ExampleIIParams {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
        };
        p.validate()?;
        Ok(p)
    }

    /// Named preset: case 1 or 2.
    pub fn case(case: u8) -> Result<Self> {
        match case {
            1 => Ok(Self::CASE_1),
            2 => Ok(Self::CASE_2),
            other => Err(ControlError::Config(format!(
                "Example II case {other} has no parameter preset (available: 1, 2)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::Config("Example II parameters must be finite".into()));
        }
        if self.lambda2.abs() < SINGULAR_SURFACE_TOL {
            return Err(ControlError::Config(
                "Example II requires lambda2 != 0 so the singular surface avoids the origin".into(),
            ));
        }
        Ok(())
    }
}

/// Identifier of a built-in benchmark plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExampleId {
    I,
    II,
    III,
}

impl ExampleId {
    pub const ALL: [ExampleId; 3] = [ExampleId::I, ExampleId::II, ExampleId::III];
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExampleId::I => "I",
            ExampleId::II => "II",
            ExampleId::III => "III",
        };
        f.write_str(s)
    }
}

impl FromStr for ExampleId {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(ExampleId::I),
            "II" | "2" => Ok(ExampleId::II),
            "III" | "3" => Ok(ExampleId::III),
            _ => Err(ControlError::UnknownExample(s.to_string())),
        }
    }
}

/// Returns one of the built-in plants. `params` is required for Example II
/// and rejected for the others.
pub fn builtin_example(id: ExampleId, params: Option<ExampleIIParams>) -> Result<DynamicsModel> {
    match (id, params) {
        (ExampleId::I, None) => example_one(),
        (ExampleId::II, Some(p)) => example_two(p),
        (ExampleId::III, None) => example_three(),
        (ExampleId::II, None) => Err(ControlError::Config(
            "Example II needs lambda parameters (e.g. ExampleIIParams::CASE_1)".into(),
        )),
        (other, Some(_)) => Err(ControlError::Config(format!(
            "Example {other} takes no parameters"
        ))),
    }
}

fn example_one() -> Result<DynamicsModel> {
    DynamicsModel::new(
        "example-I",
        2,
        1,
        |x| {
            let (x1, x2) = (x[0], x[1]);
            let c = (2.0 * x1).cos() + 2.0;
            Ok(DVector::from_vec(vec![
                -x1 + x2,
                -x1 / 2.0 - x2 * (1.0 - c * c) / 2.0,
            ]))
        },
        |x| {
            let c = (2.0 * x[0]).cos() + 2.0;
            Ok(DMatrix::from_column_slice(2, 1, &[0.0, c]))
        },
    )
}

fn example_two(p: ExampleIIParams) -> Result<DynamicsModel> {
    p.validate()?;
    DynamicsModel::new(
        format!(
            "example-II(l1={}, l2={}, l3={}, l4={})",
            p.lambda1, p.lambda2, p.lambda3, p.lambda4
        ),
        2,
        1,
        move |x| {
            let (x1, x2) = (x[0], x[1]);
            let shifted = x2 + p.lambda2;
            if shifted.abs() < SINGULAR_SURFACE_TOL {
                return Err(ControlError::non_finite(format!(
                    "Example II drift on singular surface x2 = {}",
                    -p.lambda2
                )));
            }
            let dx1 = x2
                + p.lambda1 * x1 * (1.0 / shifted).cos()
                + p.lambda3 * x2 * (p.lambda4 * x1 * x2).sin();
            Ok(DVector::from_vec(vec![dx1, 0.0]))
        },
        |_| Ok(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
    )
}

fn example_three() -> Result<DynamicsModel> {
    // Columns: u1, u2, and the disturbance channel d treated as a third input.
    let g = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 3.0, 1.0]);
    DynamicsModel::new(
        "example-III",
        2,
        3,
        |x| {
            let (x1, x2) = (x[0], x[1]);
            let dx1 = -(29.0 * x1 + 87.0 * x1 * x2 * x2) / 8.0 - (2.0 * x2 + 3.0 * x2 * x1 * x1) / 4.0;
            let dx2 = -(x1 + 3.0 * x1 * x2 * x2) / 4.0;
            Ok(DVector::from_vec(vec![dx1, dx2]))
        },
        move |_| Ok(g.clone()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> StateVector {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn example_one_drift_values() {
        let m = builtin_example(ExampleId::I, None).unwrap();
        assert_eq!(m.eval_drift(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        let f = m.eval_drift(&v(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(f[0], -1.0);
        assert_relative_eq!(f[1], -0.5);
    }

    #[test]
    fn example_three_drift_value() {
        let m = builtin_example(ExampleId::III, None).unwrap();
        let f = m.eval_drift(&v(&[4.0, -4.0])).unwrap();
        let expected = -(29.0 * 4.0 + 87.0 * 4.0 * 16.0) / 8.0 - (2.0 * -4.0 + 3.0 * -4.0 * 16.0) / 4.0;
        assert_relative_eq!(f[0], expected, max_relative = 1e-15);
        assert_relative_eq!(f[1], -(4.0 + 3.0 * 4.0 * 16.0) / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn input_matrices() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        assert_eq!(
            one.eval_input_matrix(&v(&[0.0, 0.0])).unwrap(),
            DMatrix::from_column_slice(2, 1, &[0.0, 3.0])
        );
        let two = builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_1)).unwrap();
        assert_eq!(
            two.eval_input_matrix(&v(&[3.0, 7.0])).unwrap(),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0])
        );
        let three = builtin_example(ExampleId::III, None).unwrap();
        assert_eq!(three.input_dim(), 3);
        assert_eq!(
            three.eval_input_matrix(&v(&[1.0, 2.0])).unwrap(),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 3.0, 1.0])
        );
    }

    #[test]
    fn augmented_matrix_layout() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        let p = one.augmented_matrix(&v(&[1.0, 0.0])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -0.5, 2f64.cos() + 2.0]);
        assert_relative_eq!(p.as_matrix(), &expected, epsilon = 1e-15);

        let three = builtin_example(ExampleId::III, None).unwrap();
        let p = three.augmented_matrix(&v(&[0.0, 0.0])).unwrap();
        assert_eq!(
            p.into_inner(),
            DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 0.0, 0.5, 0.0, 0.0, 3.0, 1.0])
        );
    }

    #[test]
    fn gram_by_hand() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        // f = [1, 4], g = [0, 3]
        let gram = one.gram(&v(&[0.0, 1.0])).unwrap();
        assert_relative_eq!(gram, DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 4.0, 25.0]), epsilon = 1e-12);
        let at_zero = one.gram(&v(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(at_zero, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 9.0]));
    }

    #[test]
    fn example_two_case_one_drift() {
        let two = builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_1)).unwrap();
        let f = two.eval_drift(&v(&[2.0, -2.0])).unwrap();
        let expected = -2.0 - 2.0 * (1.0f64 / (-2.0 - 100.0)).cos() + 0.0;
        assert_relative_eq!(f[0], expected, max_relative = 1e-15);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn example_two_singular_surface_is_an_error() {
        let two = builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_2)).unwrap();
        let err = two.eval_drift(&v(&[1.0, -100.0])).unwrap_err();
        assert!(matches!(err, ControlError::NumericalDomain { .. }));
    }

    #[test]
    fn dimension_and_param_errors() {
        let one = builtin_example(ExampleId::I, None).unwrap();
        assert!(matches!(
            one.eval_drift(&v(&[1.0])),
            Err(ControlError::Dimension { .. })
        ));
        assert!(one.eval_drift(&v(&[f64::NAN, 0.0])).is_err());
        assert!(builtin_example(ExampleId::II, None).is_err());
        assert!(builtin_example(ExampleId::I, Some(ExampleIIParams::CASE_1)).is_err());
        assert!(ExampleIIParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ExampleIIParams::case(3).is_err());
        assert!("IV".parse::<ExampleId>().is_err());
        assert_eq!("ii".parse::<ExampleId>().unwrap(), ExampleId::II);
    }

    #[test]
    fn rejects_model_without_equilibrium_at_origin() {
        let err = DynamicsModel::new(
            "shifted",
            1,
            1,
            |x| Ok(DVector::from_element(1, x[0] + 1.0)),
            |_| Ok(DMatrix::from_element(1, 1, 1.0)),
        )
        .unwrap_err();
        assert!(matches!(err, ControlError::Config(_)));
    }
}
