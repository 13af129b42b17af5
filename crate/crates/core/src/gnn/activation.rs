use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Final node activation: what runs forward and which derivative runs backward.
///
/// All variants map onto the interval `(a, b) = (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivationVariant {
    /// Logistic sigmoid; ignores the inverse temperature.
    Sigmoid,
    /// `sigmoid(x * inv_temp)`.
    TemperedSigmoid,
    /// Step forward, derivative of `clip(x, 0, 1)` backward.
    StepSte,
    /// Step forward, sigmoid derivative backward.
    StepSigmoidBackward,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `0` for `x <= 0`, `1` otherwise.
#[inline]
pub fn step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0
    }
}

impl ActivationVariant {
    pub fn is_step(self) -> bool {
        matches!(self, ActivationVariant::StepSte | ActivationVariant::StepSigmoidBackward)
    }

    #[inline]
    pub fn forward(self, x: f64, inv_temp: f64) -> f64 {
        match self {
            ActivationVariant::Sigmoid => sigmoid(x),
            ActivationVariant::TemperedSigmoid => sigmoid(x * inv_temp),
            ActivationVariant::StepSte | ActivationVariant::StepSigmoidBackward => step(x),
        }
    }

    /// The smooth function whose derivative the backward pass uses.
    /// Identical to `forward` for the sigmoid variants.
    #[inline]
    pub fn surrogate(self, x: f64, inv_temp: f64) -> f64 {
        match self {
            ActivationVariant::Sigmoid | ActivationVariant::StepSigmoidBackward => sigmoid(x),
            ActivationVariant::TemperedSigmoid => sigmoid(x * inv_temp),
            ActivationVariant::StepSte => x.clamp(0.0, 1.0),
        }
    }

    /// Derivative used in the backward pass.
    #[inline]
    pub fn backward(self, x: f64, inv_temp: f64) -> f64 {
        match self {
            ActivationVariant::Sigmoid | ActivationVariant::StepSigmoidBackward => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationVariant::TemperedSigmoid => {
                let s = sigmoid(x * inv_temp);
                inv_temp * s * (1.0 - s)
            }
            ActivationVariant::StepSte => {
                if x > 0.0 && x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivationVariant::Sigmoid => "sigmoid",
            ActivationVariant::TemperedSigmoid => "tempered-sigmoid",
            ActivationVariant::StepSte => "step-ste",
            ActivationVariant::StepSigmoidBackward => "step-sigmoid-backward",
        }
    }
}

impl FromStr for ActivationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sigmoid" => Ok(ActivationVariant::Sigmoid),
            "tempered-sigmoid" => Ok(ActivationVariant::TemperedSigmoid),
            "step-ste" => Ok(ActivationVariant::StepSte),
            "step-sigmoid-backward" => Ok(ActivationVariant::StepSigmoidBackward),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}
