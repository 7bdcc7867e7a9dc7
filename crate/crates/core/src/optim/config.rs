use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain backprop; constraints are ignored.
    Bp,
    /// Tangent projection followed by retraction.
    Gbp,
    /// Euclidean step followed by metric projection.
    Pgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    /// Geometric interpolation from `lr_start` to `lr_end`.
    LogLinear,
    /// Arithmetic interpolation from `lr_start` to `lr_end`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub lr_start: f64,
    pub lr_end: f64,
    pub schedule: Schedule,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Gbp,
            lr_start: 0.05,
            lr_end: 0.001,
            schedule: Schedule::LogLinear,
            momentum: 0.0,
            weight_decay: 0.0,
            epochs: 200,
            batch_size: 50,
            seed: 7,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.lr_start.is_finite() && self.lr_end.is_finite())
            || self.lr_start < 0.0
            || self.lr_end < 0.0
        {
            return fail(format!(
                "learning rates must be finite and nonnegative (lr_start={}, lr_end={})",
                self.lr_start, self.lr_end
            ));
        }
        if self.lr_end > self.lr_start {
            return fail(format!(
                "lr_end ({}) must not exceed lr_start ({})",
                self.lr_end, self.lr_start
            ));
        }
        if self.schedule == Schedule::LogLinear && self.lr_end == 0.0 && self.lr_start > 0.0 {
            return fail("log-linear schedule needs lr_end > 0".into());
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return fail(format!("momentum {} outside [0, 1]", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!(
                "weight_decay {} must be nonnegative",
                self.weight_decay
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return fail("epochs and batch_size must be positive".into());
        }
        Ok(())
    }

    /// Learning rate used throughout `epoch`.
    pub fn lr_at(&self, epoch: usize) -> Result<f64> {
        if epoch >= self.epochs {
            return Err(Error::Usage(format!(
                "epoch {epoch} outside 0..{}",
                self.epochs
            )));
        }
        if self.epochs == 1 || epoch == 0 {
            return Ok(self.lr_start);
        }
        if epoch == self.epochs - 1 && self.schedule != Schedule::Constant {
            return Ok(self.lr_end);
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        Ok(match self.schedule {
            Schedule::Constant => self.lr_start,
            Schedule::LogLinear => self.lr_start * (self.lr_end / self.lr_start).powf(t),
            Schedule::Linear => self.lr_start + t * (self.lr_end - self.lr_start),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(schedule: Schedule, epochs: usize) -> OptimizerConfig {
        OptimizerConfig {
            lr_start: 1e-1,
            lr_end: 1e-3,
            schedule,
            epochs,
            ..Default::default()
        }
    }

    #[test]
    fn endpoints() {
        for s in [Schedule::LogLinear, Schedule::Linear] {
            let c = cfg(s, 10);
            assert_eq!(c.lr_at(0).unwrap(), 1e-1);
            assert!((c.lr_at(9).unwrap() - 1e-3).abs() < 1e-12);
        }
        assert_eq!(cfg(Schedule::Constant, 10).lr_at(9).unwrap(), 1e-1);
    }

    #[test]
    fn log_linear_midpoint_is_geometric_mean() {
        let c = cfg(Schedule::LogLinear, 5);
        assert!((c.lr_at(2).unwrap() - 1e-2).abs() < 1e-15);
        let c = cfg(Schedule::Linear, 3);
        assert!((c.lr_at(1).unwrap() - 0.0505).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_epoch() {
        assert!(matches!(
            cfg(Schedule::Linear, 3).lr_at(3),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            momentum: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            lr_end: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
