use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step sizes expressed as a fraction of the per-sample Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// `1/(5L)`: the sequential rate guarantee.
    OneFifthL,
    /// `1/(2L)`: the practical choice for the asynchronous solver.
    OneHalfL,
    /// `1/(36L)`: the asynchronous guarantee.
    OneThirtySixthL,
}

impl StepRule {
    pub fn factor(self) -> f64 {
        match self {
            StepRule::OneFifthL => 1.0 / 5.0,
            StepRule::OneHalfL => 1.0 / 2.0,
            StepRule::OneThirtySixthL => 1.0 / 36.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    Fixed(f64),
    Auto(StepRule),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Auto(StepRule::OneFifthL)
    }
}

impl FromStr for StepSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/5L" => Ok(StepSize::Auto(StepRule::OneFifthL)),
            "1/2L" => Ok(StepSize::Auto(StepRule::OneHalfL)),
            "1/36L" => Ok(StepSize::Auto(StepRule::OneThirtySixthL)),
            other => {
                let g: f64 = other.parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "step must be a positive number or one of 1/5L, 1/2L, 1/36L; got {other:?}"
                    ))
                })?;
                if g > 0.0 && g.is_finite() {
                    Ok(StepSize::Fixed(g))
                } else {
                    Err(Error::InvalidArgument(format!(
                        "step must be positive, got {g}"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for StepSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSize::Fixed(g) => write!(f, "{g}"),
            StepSize::Auto(StepRule::OneFifthL) => f.write_str("1/5L"),
            StepSize::Auto(StepRule::OneHalfL) => f.write_str("1/2L"),
            StepSize::Auto(StepRule::OneThirtySixthL) => f.write_str("1/36L"),
        }
    }
}

/// Settings shared by every iterative solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: StepSize,
    /// Passes over the data; one epoch is `n` iterations.
    pub epochs: usize,
    pub seed: u64,
    /// Iterations between checkpoints; one epoch when `None`.
    pub checkpoint_every: Option<usize>,
    /// Stop when the objective changes by less than this over one epoch.
    pub tolerance: Option<f64>,
    /// Stop as soon as a checkpoint objective is at or below this value.
    pub target_objective: Option<f64>,
    /// Starting point; zero when `None`.
    #[serde(skip)]
    pub initial_x: Option<Vec<f64>>,
    /// When set, checkpoints also record `||x - reference||^2`.
    #[serde(skip)]
    pub reference_point: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: StepSize::default(),
            epochs: 100,
            seed: 0,
            checkpoint_every: None,
            tolerance: None,
            target_objective: None,
            initial_x: None,
            reference_point: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if let StepSize::Fixed(g) = self.step {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "step must be positive, got {g}"
                )));
            }
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::InvalidArgument(
                "checkpoint_every must be at least 1".into(),
            ));
        }
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance must be >= 0, got {tol}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn check_dimensions(&self, p: usize) -> Result<()> {
        for v in [&self.initial_x, &self.reference_point]
            .into_iter()
            .flatten()
        {
            if v.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn starting_point(&self, p: usize) -> Vec<f64> {
        self.initial_x.clone().unwrap_or_else(|| vec![0.0; p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_step_rules() {
        assert_eq!(
            "1/5L".parse::<StepSize>().unwrap(),
            StepSize::Auto(StepRule::OneFifthL)
        );
        assert_eq!(
            "1/2L".parse::<StepSize>().unwrap(),
            StepSize::Auto(StepRule::OneHalfL)
        );
        assert_eq!(
            "1/36L".parse::<StepSize>().unwrap(),
            StepSize::Auto(StepRule::OneThirtySixthL)
        );
        assert_eq!("0.25".parse::<StepSize>().unwrap(), StepSize::Fixed(0.25));
        assert!("-1".parse::<StepSize>().is_err());
        assert!("fast".parse::<StepSize>().is_err());
        assert_eq!(StepSize::Auto(StepRule::OneHalfL).to_string(), "1/2L");
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = SolverConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
