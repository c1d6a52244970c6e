use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::ScopePolicy;
use crate::error::{Error, Result};

/// Ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    /// Skip the state embedding; the head reads raw state and action.
    pub no_embed: bool,
    /// Bootstrap from the online network instead of the target network.
    pub regular_q: bool,
}

impl Variant {
    pub const DEFAULT: Variant = Variant {
        no_embed: false,
        regular_q: false,
    };
    pub const NO_EMBED: Variant = Variant {
        no_embed: true,
        regular_q: false,
    };
    pub const REGULAR_Q: Variant = Variant {
        no_embed: false,
        regular_q: true,
    };
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Variant::DEFAULT),
            "no-embed" => Ok(Variant::NO_EMBED),
            "regular-q" => Ok(Variant::REGULAR_Q),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.no_embed, self.regular_q) {
            (false, false) => f.write_str("default"),
            (true, false) => f.write_str("no-embed"),
            (false, true) => f.write_str("regular-q"),
            (true, true) => f.write_str("no-embed+regular-q"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Plain mini-batch gradient descent.
    Sgd,
    /// Adam with the usual moment decay rates (0.9, 0.999).
    #[default]
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Selection steps per episode (K).
    pub steps: usize,
    /// Replay capacity (N).
    pub capacity: usize,
    /// Target sync period in global steps (C).
    pub sync_period: usize,
    /// Learning period in global steps (L).
    pub learn_period: usize,
    pub gamma: f64,
    /// Exploration probability.
    pub sigma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub variant: Variant,
    pub optimizer: OptimizerKind,
    pub scope: ScopePolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 10,
            capacity: 100,
            sync_period: 20,
            learn_period: 5,
            gamma: 0.9,
            sigma: 0.1,
            learning_rate: 0.001,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            variant: Variant::DEFAULT,
            optimizer: OptimizerKind::Adam,
            scope: ScopePolicy::FailingCovered,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("steps", self.steps),
            ("capacity", self.capacity),
            ("sync_period", self.sync_period),
            ("learn_period", self.learn_period),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::Config(format!(
                "sigma {} outside [0, 1]",
                self.sigma
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}
