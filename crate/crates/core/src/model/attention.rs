use super::cell::CellState;
use crate::error::{Error, Result};
use crate::tensor::{ActivationKind, Real, Tensor, Var};

/// Additive score parameters: `score_t = inner(enc_t·W1 + h·W2 + b) · v`.
#[derive(Clone, Copy)]
pub struct AttentionWeights<'g, T: Real> {
    pub w1: Var<'g, T>,
    pub w2: Var<'g, T>,
    pub b: Var<'g, T>,
    pub v: Var<'g, T>,
}

/// Per-position encoder states for a batch.
pub struct EncoderOutput<'g, T: Real> {
    /// One `(batch, units)` tensor per source position.
    pub outputs: Vec<Var<'g, T>>,
    /// `outputs[t]·W1 + b`, computed once per sequence.
    pub keys: Vec<Var<'g, T>>,
    /// `mask[i][t]` is false on pad positions of batch item `i`.
    pub mask: Vec<Vec<bool>>,
    pub final_state: CellState<'g, T>,
}

impl<'g, T: Real> EncoderOutput<'g, T> {
    pub fn new(
        outputs: Vec<Var<'g, T>>,
        mask: Vec<Vec<bool>>,
        final_state: CellState<'g, T>,
        att: &AttentionWeights<'g, T>,
    ) -> Result<Self> {
        let keys = outputs.iter().map(|o| o.matmul(&att.w1)?.add_bias(&att.b)).collect::<Result<Vec<_>>>()?;
        Ok(Self { outputs, keys, mask, final_state })
    }

    pub fn source_len(&self) -> usize {
        self.outputs.len()
    }
}

pub struct AttentionOutput<'g, T: Real> {
    /// `(batch, source_len)`; zero on pad positions.
    pub weights: Var<'g, T>,
    /// `(batch, units)` weighted sum of encoder outputs.
    pub context: Var<'g, T>,
}

/// Scores every source position against `dec_hidden`, normalizes with
/// `outer` (pad positions forced to zero weight) and forms the context vector.
pub fn attention<'g, T: Real>(
    enc: &EncoderOutput<'g, T>,
    dec_hidden: &Var<'g, T>,
    att: &AttentionWeights<'g, T>,
    inner: ActivationKind,
    outer: ActivationKind,
) -> Result<AttentionOutput<'g, T>> {
    if enc.outputs.is_empty() {
        return Err(Error::EmptyInput("attention over an empty source".into()));
    }
    let query = dec_hidden.matmul(&att.w2)?;
    let scores =
        enc.keys.iter().map(|k| k.add(&query)?.activation(inner)?.matmul(&att.v)).collect::<Result<Vec<_>>>()?;
    let scores = dec_hidden.graph().concat_cols(&scores)?;

    let weights = match outer {
        ActivationKind::Softmax => scores.masked_softmax(Some(&enc.mask))?,
        ActivationKind::Sigmoid => {
            let (rows, cols) = (enc.mask.len(), enc.source_len());
            let open: Vec<T> =
                enc.mask.iter().flat_map(|row| row.iter().map(|&o| if o { T::one() } else { T::zero() })).collect();
            let mask = dec_hidden.graph().constant(Tensor::new([rows, cols], open)?);
            scores.sigmoid().mul(&mask)?
        }
        other => {
            return Err(Error::InvalidConfig(format!("attention outer stage must be Softmax or Sigmoid, got {other}")))
        }
    };

    let mut context: Option<Var<'g, T>> = None;
    for (t, out) in enc.outputs.iter().enumerate() {
        let term = out.scale_rows(&weights.column(t)?)?;
        context = Some(match context {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    Ok(AttentionOutput { weights, context: context.expect("non-empty source") })
}
