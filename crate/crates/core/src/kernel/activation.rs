use super::Matrix;
use crate::Result;

/// Elementwise nonlinearities used by the autoencoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `x` for `x > 0`, otherwise `alpha·x`; derivative at 0 is `alpha`.
    LeakyRelu(f64),
    /// Derivative at 0 is 0.
    Relu,
    Sigmoid,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        // Same value, no overflow for very negative x.
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }
}

pub fn activation_forward(kind: Activation, x: &Matrix) -> Matrix {
    x.map(|v| kind.apply(v))
}

/// `dY ⊙ f'(x)`, with `x` the pre-activation input.
pub fn activation_backward(kind: Activation, x: &Matrix, dy: &Matrix) -> Result<Matrix> {
    x.zip_map(dy, |xv, g| g * kind.derivative(xv))
}
