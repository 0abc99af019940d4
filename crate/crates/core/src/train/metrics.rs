use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "epoch,mean_loss,wall_seconds";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub mean_loss: f64,
    pub wall_seconds: f64,
}

/// Per-epoch training losses, epochs counting up from 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    rows: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[EpochRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last_epoch(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.epoch)
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_loss).collect()
    }

    pub fn push(&mut self, mean_loss: f64, wall_seconds: f64) -> Result<()> {
        if !mean_loss.is_finite() {
            return Err(Error::Numeric(format!("epoch {} loss is {mean_loss}", self.last_epoch() + 1)));
        }
        self.rows.push(EpochRecord { epoch: self.last_epoch() + 1, mean_loss, wall_seconds });
        Ok(())
    }

    /// Keeps only epochs `1..=epoch`.
    pub fn truncate(&mut self, epoch: u64) {
        self.rows.retain(|r| r.epoch <= epoch);
    }

    /// CSV with header. Without `timing` the wall-clock column is written as
    /// 0 so that reruns produce identical bytes.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = format!("{METRICS_HEADER}\n");
        for r in &self.rows {
            let secs = if timing { r.wall_seconds } else { 0.0 };
            out.push_str(&format!("{},{},{}\n", r.epoch, r.mean_loss, secs));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == METRICS_HEADER => {}
            _ => return Err(Error::MalformedLine { line: 1, message: format!("expected header `{METRICS_HEADER}`") }),
        }
        let mut log = TrainLog::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad =
                || Error::MalformedLine { line: i + 1, message: "expected `epoch,mean_loss,wall_seconds`".into() };
            let fields: Vec<&str> = line.split(',').collect();
            let [epoch, loss, secs] = fields[..] else { return Err(bad()) };
            let epoch: u64 = epoch.trim().parse().map_err(|_| bad())?;
            if epoch != log.last_epoch() + 1 {
                return Err(Error::MalformedLine { line: i + 1, message: format!("epoch {epoch} out of sequence") });
            }
            let loss: f64 = loss.trim().parse().map_err(|_| bad())?;
            let secs: f64 = secs.trim().parse().map_err(|_| bad())?;
            log.push(loss, secs)?;
        }
        Ok(log)
    }
}
