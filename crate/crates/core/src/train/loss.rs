use crate::error::{Error, Result};
use crate::tensor::{Graph, Real, Tensor, Var};
use crate::text::EncodedSequence;

/// Number of non-pad target positions in a batch.
pub fn count_target_tokens(targets: &[&EncodedSequence]) -> usize {
    targets.iter().map(|t| t.true_length).sum()
}

/// Masked sparse categorical cross-entropy.
///
/// `logits[t]` is the `(batch, V)` output for target position `t`. Each
/// non-pad position contributes `-ln softmax(logits)[target]`; the total is
/// divided by the number of non-pad positions. Pad positions contribute
/// nothing, and `logits` may stop after the last non-pad position.
pub fn sequence_loss<'g, T: Real>(logits: &[Var<'g, T>], targets: &[&EncodedSequence]) -> Result<Var<'g, T>> {
    let tokens = count_target_tokens(targets);
    if tokens == 0 {
        return Err(Error::NoTargetTokens);
    }
    let needed = targets.iter().map(|t| t.true_length).max().unwrap_or(0);
    if logits.len() < needed {
        return Err(Error::ShapeMismatch { op: "sequence_loss", left: vec![logits.len()], right: vec![needed] });
    }
    let mut total: Option<Var<'g, T>> = None;
    for (t, step) in logits.iter().enumerate().take(needed) {
        let step_targets: Vec<Option<usize>> = targets.iter().map(|s| (!s.is_pad(t)).then(|| s.ids[t])).collect();
        let ce = step.cross_entropy_sum(&step_targets)?;
        total = Some(match total {
            None => ce,
            Some(acc) => acc.add(&ce)?,
        });
    }
    let total = total.expect("at least one target token");
    Ok(total.affine(T::one() / T::from_f64(tokens as f64), T::zero()))
}

/// [`sequence_loss`] on a plain `(batch, target_len, V)` tensor.
pub fn sequence_loss_value<T: Real>(logits: &Tensor<T>, targets: &[&EncodedSequence]) -> Result<T> {
    let &[batch, len, vocab] = logits.shape() else {
        return Err(Error::ShapeMismatch {
            op: "sequence_loss expects (batch, len, V)",
            left: logits.shape().to_vec(),
            right: vec![],
        });
    };
    if batch != targets.len() {
        return Err(Error::ShapeMismatch {
            op: "sequence_loss batch",
            left: logits.shape().to_vec(),
            right: vec![targets.len()],
        });
    }
    let graph = Graph::new();
    let steps: Vec<Var<'_, T>> = (0..len)
        .map(|t| {
            let mut data = Vec::with_capacity(batch * vocab);
            for b in 0..batch {
                let start = (b * len + t) * vocab;
                data.extend_from_slice(&logits.data()[start..start + vocab]);
            }
            Ok(graph.constant(Tensor::new([batch, vocab], data)?))
        })
        .collect::<Result<_>>()?;
    Ok(sequence_loss(&steps, targets)?.item().expect("scalar loss"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(ids: &[usize], len: usize) -> EncodedSequence {
        let mut v = ids.to_vec();
        let true_length = v.len();
        v.resize(len, 0);
        EncodedSequence { ids: v, true_length, truncated: false }
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let t = target(&[3, 1], 3);
        let mut logits = Tensor::<f64>::full([1, 3, 4], -1000.0);
        logits.data_mut()[3] = 1000.0;
        logits.data_mut()[4 + 1] = 1000.0;
        assert_eq!(sequence_loss_value(&logits, &[&t]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_logits_give_ln_v() {
        let t = target(&[3, 1, 2], 4);
        let loss = sequence_loss_value(&Tensor::<f64>::zeros([1, 4, 4]), &[&t]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn one_position_at_quarter_probability() {
        // p(target) = e^0 / (e^0 + 3 e^0) = 0.25
        let t = target(&[2], 3);
        let mut logits = Tensor::<f64>::zeros([1, 3, 4]);
        logits.data_mut()[4..].iter_mut().for_each(|v| *v = 50.0);
        let loss = sequence_loss_value(&logits, &[&t]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn all_pad_batch_is_an_error() {
        let t = EncodedSequence { ids: vec![0, 0], true_length: 0, truncated: false };
        assert!(matches!(sequence_loss_value(&Tensor::<f64>::zeros([1, 2, 5]), &[&t]), Err(Error::NoTargetTokens)));
    }
}
