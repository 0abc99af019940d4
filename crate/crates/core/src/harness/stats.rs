use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation (divides by n).
    pub std_dev: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("cannot summarize an empty list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Summary { mean, std_dev: var.sqrt() })
}

/// Summaries of the first and second half of an even-length loss sequence.
pub fn split_halves(losses: &[f64]) -> Result<(Summary, Summary)> {
    if losses.len() < 2 || !losses.len().is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "epoch study needs an even number of at least 2 epochs, got {}",
            losses.len()
        )));
    }
    let (first, second) = losses.split_at(losses.len() / 2);
    Ok((summarize(first)?, summarize(second)?))
}
