use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::error::Error;

/// Pointwise nonlinearities used by the recurrent cells and the attention stages.
///
/// `Linear` is the identity; the affine part of a linear layer lives in
/// [`super::DenseLayer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivationKind {
    Linear,
    Tanh,
    Sigmoid,
    Softmax,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Linear => "Linear",
            ActivationKind::Tanh => "Tanh",
            ActivationKind::Sigmoid => "Sigmoid",
            ActivationKind::Softmax => "Softmax",
        }
    }

    /// Applies the activation to a plain tensor. Softmax works on the last axis.
    pub fn apply<T: Real>(self, x: &Tensor<T>) -> Tensor<T> {
        match self {
            ActivationKind::Linear => x.clone(),
            ActivationKind::Tanh => x.map(tanh),
            ActivationKind::Sigmoid => x.map(sigmoid),
            ActivationKind::Softmax => {
                let mut out = x.clone();
                let cols = *x.shape().last().unwrap_or(&1);
                if cols > 0 {
                    for row in out.data_mut().chunks_mut(cols) {
                        softmax_in_place(row);
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ActivationKind::Linear),
            "tanh" => Ok(ActivationKind::Tanh),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "softmax" => Ok(ActivationKind::Softmax),
            other => Err(Error::InvalidConfig(format!("unknown activation `{other}`"))),
        }
    }
}

/// `(e^{2x} - 1) / (e^{2x} + 1)` evaluated through `expm1` on a non-positive
/// argument so it never overflows.
pub fn tanh<T: Real>(x: T) -> T {
    let two = T::one() + T::one();
    let t = (-two * x.abs()).exp_m1();
    let y = -t / (two + t);
    if x < T::zero() {
        -y
    } else {
        y
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Max-subtracted softmax over one row.
pub fn softmax_in_place<T: Real>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v = *v / total;
    }
}
