use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::{CellKind, ModelConfig};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Named parameter tensors, iterated in name order.
pub type Parameters<T = f32> = BTreeMap<String, Tensor<T>>;

fn gate_names(cell: CellKind) -> &'static [&'static str] {
    match cell {
        CellKind::Gru => &["z", "r", "h"],
        CellKind::Lstm => &["i", "f", "o", "c"],
    }
}

fn cell_shapes(out: &mut Vec<(String, Vec<usize>)>, prefix: &str, cell: CellKind, input: usize, units: usize) {
    for gate in gate_names(cell) {
        out.push((format!("{prefix}.{gate}.w"), vec![input, units]));
        out.push((format!("{prefix}.{gate}.u"), vec![units, units]));
        out.push((format!("{prefix}.{gate}.b"), vec![units]));
    }
}

/// Every parameter name with its shape.
pub fn parameter_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let (e, u, a) = (config.embed_dim, config.units, config.attention_dim);
    let mut out = vec![
        ("encoder.embedding".to_string(), vec![config.source_vocab_size, e]),
        ("decoder.embedding".to_string(), vec![config.target_vocab_size, e]),
        ("attention.w1".to_string(), vec![u, a]),
        ("attention.w2".to_string(), vec![u, a]),
        ("attention.b".to_string(), vec![a]),
        ("attention.v".to_string(), vec![a, 1]),
        ("output.w".to_string(), vec![u, config.target_vocab_size]),
        ("output.b".to_string(), vec![config.target_vocab_size]),
    ];
    cell_shapes(&mut out, "encoder.cell", config.cell, e, u);
    cell_shapes(&mut out, "decoder.cell", config.cell, e + u, u);
    out
}

fn name_stream(name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Matrices: uniform in ±sqrt(6 / (fan_in + fan_out)); vectors: zero.
///
/// Each tensor draws from its own stream keyed by `(seed, name)`, so tensors
/// with the same name and shape start identical across configurations.
pub fn init_parameters<T: Real>(config: &ModelConfig, seed: u64) -> Parameters<T> {
    parameter_shapes(config)
        .into_iter()
        .map(|(name, shape)| {
            let tensor = match shape[..] {
                [fan_in, fan_out] => {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(name_stream(&name));
                    let data = (0..fan_in * fan_out).map(|_| T::from_f64(rng.gen_range(-limit..limit))).collect();
                    Tensor::new(shape, data).expect("shape matches data")
                }
                _ => Tensor::zeros(shape),
            };
            (name, tensor)
        })
        .collect()
}

/// Checks that `params` has exactly the names and shapes `config` needs.
pub fn check_parameters<T: Real>(config: &ModelConfig, params: &Parameters<T>) -> Result<()> {
    let expected = parameter_shapes(config);
    if expected.len() != params.len() {
        return Err(Error::InvalidConfig(format!(
            "expected {} parameter tensors, found {}",
            expected.len(),
            params.len()
        )));
    }
    for (name, shape) in expected {
        let found = params.get(&name).ok_or_else(|| Error::InvalidConfig(format!("missing parameter `{name}`")))?;
        if found.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch { op: "parameter shape", left: shape, right: found.shape().to_vec() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let config = ModelConfig::new(10, 12, 5, 6, 4, 3);
        let a: Parameters<f32> = init_parameters(&config, 9);
        let b: Parameters<f32> = init_parameters(&config, 9);
        let c: Parameters<f32> = init_parameters(&config, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
        check_parameters(&config, &a).unwrap();

        let w = &a["output.w"];
        let limit = (6.0f32 / 15.0).sqrt();
        assert!(w.data().iter().all(|v| v.abs() <= limit));
        assert!(a["output.b"].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shared_names_match_across_cells() {
        let gru = ModelConfig::new(10, 12, 5, 6, 4, 3);
        let mut lstm = gru.clone();
        lstm.cell = CellKind::Lstm;
        let a: Parameters<f32> = init_parameters(&gru, 1);
        let b: Parameters<f32> = init_parameters(&lstm, 1);
        assert_eq!(a["encoder.embedding"], b["encoder.embedding"]);
        assert_eq!(a["attention.w1"], b["attention.w1"]);
        assert!(b.contains_key("encoder.cell.f.w") && !a.contains_key("encoder.cell.f.w"));
    }
}
