#![allow(dead_code)]

use attnmt::model::{
    attention, gru_cell_step, lstm_cell_step, AttentionWeights, CellState, EncoderOutput, Gate, GruWeights, LstmWeights,
};
use attnmt::text::EncodedSequence;
use attnmt::train::sequence_loss;
use attnmt::{ActivationKind, Graph, Result, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const INSTANCES: u64 = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// `|a - n| / max(|a|, |n|)`, with the denominator floored so that two
/// near-zero values compare as equal.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-7);
    (analytic - numeric).abs() / denom
}

type Build = dyn for<'g> Fn(&'g Graph<f64>, &[Var<'g, f64>]) -> Result<Var<'g, f64>>;

/// Reduces the output of `build` to a scalar by a fixed random weighting,
/// then compares reverse-mode gradients of every input element with central
/// differences of the forward pass. Returns the worst relative error.
pub fn gradient_check(seed: u64, inputs: &[Tensor<f64>], build: &Build) -> f64 {
    let probe = {
        let g = Graph::new();
        let vars: Vec<_> = inputs.iter().map(|t| g.constant(t.clone())).collect();
        build(&g, &vars).unwrap().value()
    };
    let weights = random_tensor(&mut rng(seed ^ 0xabcd), probe.shape(), 1.0);

    let objective = |values: &[Tensor<f64>]| -> f64 {
        let g = Graph::new();
        let vars: Vec<_> = values.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&g, &vars).unwrap().value();
        out.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
    };

    let g = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.variable(t.clone())).collect();
    let out = build(&g, &vars).unwrap();
    let w = g.constant(weights.clone());
    let loss = out.mul(&w).unwrap().sum();
    let grads = g.backward(loss).unwrap();

    let mut worst: f64 = 0.0;
    let mut values = inputs.to_vec();
    for (k, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(var);
        for j in 0..inputs[k].len() {
            let orig = values[k].data()[j];
            values[k].data_mut()[j] = orig + FD_STEP;
            let up = objective(&values);
            values[k].data_mut()[j] = orig - FD_STEP;
            let down = objective(&values);
            values[k].data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(rel_error(analytic.data()[j], numeric));
        }
    }
    worst
}

fn dims(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=4)
}

pub fn check_matmul(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, k, n) = (dims(&mut r), dims(&mut r), dims(&mut r));
    let inputs = [random_tensor(&mut r, &[m, k], 1.0), random_tensor(&mut r, &[k, n], 1.0)];
    gradient_check(seed, &inputs, &|_, v| v[0].matmul(&v[1]))
}

pub fn check_elementwise(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, n) = (dims(&mut r), dims(&mut r));
    let inputs =
        [random_tensor(&mut r, &[m, n], 1.0), random_tensor(&mut r, &[m, n], 1.0), random_tensor(&mut r, &[n], 1.0)];
    gradient_check(seed, &inputs, &|_, v| {
        let a = v[0].mul(&v[1])?.add(&v[0])?.sub(&v[1].affine(0.5, 0.25))?;
        a.add_bias(&v[2])?.one_minus().mul(&v[1])
    })
}

pub fn check_activation(seed: u64, kind: ActivationKind) -> f64 {
    let mut r = rng(seed);
    let (m, n) = (dims(&mut r), dims(&mut r) + 1);
    let inputs = [random_tensor(&mut r, &[m, n], 3.0)];
    gradient_check(seed, &inputs, &move |_, v| v[0].activation(kind))
}

pub fn random_mask(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<bool>> {
    (0..rows)
        .map(|_| {
            let open = r.gen_range(1..=cols);
            (0..cols).map(|c| c < open).collect()
        })
        .collect()
}

pub fn check_masked_softmax(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, n) = (dims(&mut r), dims(&mut r) + 1);
    let mask = random_mask(&mut r, m, n);
    let inputs = [random_tensor(&mut r, &[m, n], 3.0)];
    gradient_check(seed, &inputs, &move |_, v| v[0].masked_softmax(Some(&mask)))
}

pub fn check_gather(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (vocab, width) = (dims(&mut r) + 1, dims(&mut r));
    let ids: Vec<usize> = (0..r.gen_range(1..=6)).map(|_| r.gen_range(0..vocab)).collect();
    let inputs = [random_tensor(&mut r, &[vocab, width], 1.0)];
    gradient_check(seed, &inputs, &move |_, v| v[0].gather_rows(&ids))
}

pub fn check_structural(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, a, b) = (dims(&mut r), dims(&mut r), dims(&mut r));
    let col = r.gen_range(0..a);
    let inputs = [random_tensor(&mut r, &[m, a], 1.0), random_tensor(&mut r, &[m, b], 1.0)];
    gradient_check(seed, &inputs, &move |g, v| {
        let joined = g.concat_cols(&[v[0], v[1]])?;
        joined.scale_rows(&v[0].column(col)?)
    })
}

pub fn check_cross_entropy(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, n) = (dims(&mut r), dims(&mut r) + 1);
    let targets: Vec<Option<usize>> = (0..m).map(|i| (i == 0 || r.gen_bool(0.7)).then(|| r.gen_range(0..n))).collect();
    let inputs = [random_tensor(&mut r, &[m, n], 3.0)];
    gradient_check(seed, &inputs, &move |_, v| v[0].cross_entropy_sum(&targets))
}

fn gate<'g>(v: &[Var<'g, f64>], at: usize) -> Gate<'g, f64> {
    Gate { w: v[at], u: v[at + 1], b: v[at + 2] }
}

fn gate_inputs(r: &mut ChaCha8Rng, input: usize, units: usize, gates: usize) -> Vec<Tensor<f64>> {
    let mut out = Vec::new();
    for _ in 0..gates {
        out.push(random_tensor(r, &[input, units], 0.8));
        out.push(random_tensor(r, &[units, units], 0.8));
        out.push(random_tensor(r, &[units], 0.5));
    }
    out
}

fn cell_activation(seed: u64) -> ActivationKind {
    if seed.is_multiple_of(2) {
        ActivationKind::Tanh
    } else {
        ActivationKind::Linear
    }
}

pub fn check_gru(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (batch, input, units) = (dims(&mut r), dims(&mut r), dims(&mut r));
    let act = cell_activation(seed);
    let mut inputs = vec![random_tensor(&mut r, &[batch, input], 1.0), random_tensor(&mut r, &[batch, units], 1.0)];
    inputs.extend(gate_inputs(&mut r, input, units, 3));
    gradient_check(seed, &inputs, &move |_, v| {
        let w = GruWeights { update: gate(v, 2), reset: gate(v, 5), candidate: gate(v, 8) };
        gru_cell_step(&w, &v[0], &v[1], act)
    })
}

pub fn check_lstm(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (batch, input, units) = (dims(&mut r), dims(&mut r), dims(&mut r));
    let act = cell_activation(seed);
    let mut inputs = vec![
        random_tensor(&mut r, &[batch, input], 1.0),
        random_tensor(&mut r, &[batch, units], 1.0),
        random_tensor(&mut r, &[batch, units], 1.0),
    ];
    inputs.extend(gate_inputs(&mut r, input, units, 4));
    gradient_check(seed, &inputs, &move |g, v| {
        let w = LstmWeights { input: gate(v, 3), forget: gate(v, 6), output: gate(v, 9), candidate: gate(v, 12) };
        let (h, c) = lstm_cell_step(&w, &v[0], (&v[1], &v[2]), act)?;
        g.concat_cols(&[h, c])
    })
}

pub fn check_attention(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (batch, units, att_dim) = (dims(&mut r), dims(&mut r), dims(&mut r));
    let src_len = dims(&mut r) + 1;
    let inner = if seed.is_multiple_of(2) { ActivationKind::Sigmoid } else { ActivationKind::Tanh };
    let outer = if (seed / 2).is_multiple_of(2) { ActivationKind::Softmax } else { ActivationKind::Sigmoid };
    let mask = random_mask(&mut r, batch, src_len);
    let mut inputs = vec![
        random_tensor(&mut r, &[batch, units], 1.0),
        random_tensor(&mut r, &[units, att_dim], 1.0),
        random_tensor(&mut r, &[units, att_dim], 1.0),
        random_tensor(&mut r, &[att_dim], 0.5),
        random_tensor(&mut r, &[att_dim, 1], 1.0),
    ];
    for _ in 0..src_len {
        inputs.push(random_tensor(&mut r, &[batch, units], 1.0));
    }
    gradient_check(seed, &inputs, &move |g, v| {
        let att = AttentionWeights { w1: v[1], w2: v[2], b: v[3], v: v[4] };
        let outputs = v[5..].to_vec();
        let state = CellState::Gru { h: v[0] };
        let enc = EncoderOutput::new(outputs, mask.clone(), state, &att)?;
        let out = attention(&enc, &v[0], &att, inner, outer)?;
        g.concat_cols(&[out.context, out.weights])
    })
}

pub fn random_sequence(r: &mut ChaCha8Rng, len: usize, vocab: usize) -> EncodedSequence {
    let true_length = r.gen_range(1..=len);
    let mut ids: Vec<usize> = (0..true_length - 1).map(|_| r.gen_range(4..vocab)).collect();
    ids.push(attnmt::text::END);
    ids.resize(len, attnmt::text::PAD);
    EncodedSequence { ids, true_length, truncated: false }
}

pub fn check_sequence_loss(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (batch, len, vocab) = (dims(&mut r), dims(&mut r) + 1, dims(&mut r) + 5);
    let targets: Vec<EncodedSequence> = (0..batch).map(|_| random_sequence(&mut r, len, vocab)).collect();
    let inputs: Vec<Tensor<f64>> = (0..len).map(|_| random_tensor(&mut r, &[batch, vocab], 2.0)).collect();
    gradient_check(seed, &inputs, &move |_, v| {
        let refs: Vec<&EncodedSequence> = targets.iter().collect();
        sequence_loss(v, &refs)
    })
}

pub type Check = Box<dyn Fn(u64) -> f64>;

/// Every differentiable primitive with its gradient check.
pub fn primitive_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("matmul", Box::new(check_matmul)),
        ("elementwise", Box::new(check_elementwise)),
        ("tanh", Box::new(|s| check_activation(s, ActivationKind::Tanh))),
        ("sigmoid", Box::new(|s| check_activation(s, ActivationKind::Sigmoid))),
        ("linear", Box::new(|s| check_activation(s, ActivationKind::Linear))),
        ("softmax", Box::new(|s| check_activation(s, ActivationKind::Softmax))),
        ("masked softmax", Box::new(check_masked_softmax)),
        ("gather", Box::new(check_gather)),
        ("concat/column/scale", Box::new(check_structural)),
        ("cross entropy", Box::new(check_cross_entropy)),
        ("gru step", Box::new(check_gru)),
        ("lstm step", Box::new(check_lstm)),
        ("attention", Box::new(check_attention)),
        ("sequence loss", Box::new(check_sequence_loss)),
    ]
}
