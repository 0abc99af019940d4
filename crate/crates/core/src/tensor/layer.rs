use super::{ActivationKind, Graph, Real, Tensor, Var};
use crate::error::Result;

/// Affine map followed by a pointwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T: Real = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: ActivationKind,
}

impl<T: Real> DenseLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>, activation: ActivationKind) -> Result<Self> {
        let (_, out) = weights.dims2()?;
        if bias.shape() != [out] {
            return Err(crate::Error::ShapeMismatch {
                op: "dense layer",
                left: weights.shape().to_vec(),
                right: bias.shape().to_vec(),
            });
        }
        Ok(Self { weights, bias, activation })
    }

    /// `(batch, in) -> (batch, out)` on plain tensors.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let g = Graph::new();
        let y = Self::apply(
            &g.constant(x.clone()),
            &g.constant(self.weights.clone()),
            &g.constant(self.bias.clone()),
            self.activation,
        )?;
        Ok(y.value())
    }

    /// Recorded form used inside model graphs.
    pub fn apply<'g>(
        x: &Var<'g, T>,
        weights: &Var<'g, T>,
        bias: &Var<'g, T>,
        activation: ActivationKind,
    ) -> Result<Var<'g, T>> {
        x.matmul(weights)?.add_bias(bias)?.activation(activation)
    }
}
