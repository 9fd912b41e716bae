use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;

/// Lower clamp applied before `ln`.
pub const LOG_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    /// ELU with alpha = 1; derivative at 0 is taken as 1.
    Elu,
    Square,
    /// `ln(max(x, 1e-7))`. Placed after a mean pool this gives the
    /// log-of-mean-pool feature.
    Log,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Elu => {
                if x >= 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            ActivationKind::Square => x * x,
            ActivationKind::Log => x.max(LOG_CLAMP).ln(),
        }
    }

    /// Derivative evaluated at the pre-activation `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Elu => {
                if x >= 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            ActivationKind::Square => 2.0 * x,
            ActivationKind::Log => {
                if x > LOG_CLAMP {
                    1.0 / x
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn activation_forward(x: &Matrix, kind: ActivationKind) -> Matrix {
    x.map(|v| kind.apply(v))
}

/// `grad_y (.) f'(x)`.
pub fn activation_backward(grad_y: &Matrix, x: &Matrix, kind: ActivationKind) -> crate::Result<Matrix> {
    grad_y.check_same_shape(x, "activation_backward")?;
    let data = grad_y
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(g, &v)| g * kind.derivative(v))
        .collect();
    Matrix::from_vec(x.rows(), x.cols(), data)
}
