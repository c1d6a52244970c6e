//! The trained value model: network, input normalization and persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, Variant};
use super::network::{Linear, QNetwork, ACTION_DIM, EMBED_WIDTHS, HEAD_WIDTHS, STATE_DIM};
use crate::coverage::{action_of, state_features, SuiteContext};
use crate::dataset::Coverage;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

/// Frozen FDC predictor. Immutable after training, so it can be shared
/// across threads behind an `Arc`.
#[derive(Debug, Clone, PartialEq)]
pub struct QModel {
    network: QNetwork,
    variant: Variant,
    /// Divisor for the suite size (K + 1).
    num_tests_divisor: f64,
    config: TrainConfig,
}

impl QModel {
    pub fn new(network: QNetwork, config: TrainConfig) -> Result<Self> {
        if network.has_embedding() == config.variant.no_embed {
            return Err(Error::Model("network shape does not match variant".into()));
        }
        Ok(QModel {
            network,
            variant: config.variant,
            num_tests_divisor: (config.steps + 1) as f64,
            config,
        })
    }

    pub fn network(&self) -> &QNetwork {
        &self.network
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn num_tests_divisor(&self) -> f64 {
        self.num_tests_divisor
    }

    pub fn forward(&self, state: &[f64; STATE_DIM], action: &[f64; ACTION_DIM]) -> Result<f64> {
        if state.iter().chain(action).any(|x| !x.is_finite()) {
            return Err(Error::Model("non-finite network input".into()));
        }
        Ok(self.network.forward(state, action))
    }

    pub fn normalized_state(&self, ctx: &SuiteContext<'_>) -> [f64; STATE_DIM] {
        normalize_state(ctx, self.num_tests_divisor)
    }

    /// FDC of a hypothetical test with the given coverage.
    pub fn predict_coverage(&self, ctx: &SuiteContext<'_>, coverage: &Coverage) -> f64 {
        self.network.forward(
            &self.normalized_state(ctx),
            &normalize_action(ctx, coverage),
        )
    }

    pub fn predict_fdc(&self, ctx: &SuiteContext<'_>, candidate: usize) -> Result<f64> {
        ctx.check_candidate(candidate)?;
        Ok(self.predict_coverage(ctx, ctx.dataset().coverage(candidate)))
    }

    pub fn to_document(&self) -> ModelDocument {
        let names: &[&str] = if self.variant.no_embed {
            &["head1", "head2", "head3"]
        } else {
            &["embed1", "embed2", "head1", "head2", "head3"]
        };
        ModelDocument {
            version: MODEL_VERSION,
            architecture: Architecture::for_variant(self.variant),
            variant: self.variant,
            normalizers: Normalizers {
                num_tests: self.num_tests_divisor,
            },
            layers: self
                .network
                .layers()
                .iter()
                .zip(names)
                .map(|(l, n)| LayerDoc {
                    name: n.to_string(),
                    rows: l.rows,
                    cols: l.cols,
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
            seed: self.config.seed,
            config: self.config.clone(),
        }
    }

    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_canonical_string().as_bytes())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_slice(bytes)?;
        doc.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }
}

/// `[num_tests / (K + 1), num_ag / |scope|]`.
pub fn normalize_state(ctx: &SuiteContext<'_>, num_tests_divisor: f64) -> [f64; STATE_DIM] {
    let s = state_features(ctx);
    let scope = ctx.scope().len().max(1) as f64;
    [
        s.num_tests as f64 / num_tests_divisor,
        s.num_ag as f64 / scope,
    ]
}

/// `[cover, split / partition maximum]`.
pub fn normalize_action(ctx: &SuiteContext<'_>, coverage: &Coverage) -> [f64; ACTION_DIM] {
    let a = action_of(ctx, coverage);
    [a.cover, a.split_norm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    pub architecture: Architecture,
    pub variant: Variant,
    pub normalizers: Normalizers,
    pub layers: Vec<LayerDoc>,
    pub config: TrainConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub state_dim: usize,
    pub action_dim: usize,
    pub embed: Vec<usize>,
    pub head: Vec<usize>,
}

impl Architecture {
    pub fn for_variant(variant: Variant) -> Self {
        Architecture {
            state_dim: STATE_DIM,
            action_dim: ACTION_DIM,
            embed: if variant.no_embed {
                vec![]
            } else {
                EMBED_WIDTHS.to_vec()
            },
            head: HEAD_WIDTHS.to_vec(),
        }
    }
}

/// Only the suite-size divisor is a stored constant; the ambiguity-group
/// count is divided by the scope size and split by the partition maximum,
/// both of which depend on the suite being scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizers {
    pub num_tests: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ModelDocument {
    pub fn into_model(self) -> Result<QModel> {
        if self.version != MODEL_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: MODEL_VERSION,
            });
        }
        if self.variant != self.config.variant {
            return Err(Error::Model("variant disagrees with config".into()));
        }
        if self.seed != self.config.seed {
            return Err(Error::Model("seed disagrees with config".into()));
        }
        if self.architecture != Architecture::for_variant(self.variant) {
            return Err(Error::Model(format!(
                "architecture {:?} does not match variant {}",
                self.architecture, self.variant
            )));
        }
        let divisor = self.normalizers.num_tests;
        if !(divisor.is_finite() && divisor > 0.0) {
            return Err(Error::Model(format!(
                "normalizer {divisor} must be positive"
            )));
        }
        if divisor != (self.config.steps + 1) as f64 {
            return Err(Error::Model(
                "normalizer disagrees with config steps".into(),
            ));
        }
        self.config.validate()?;
        let layers: Vec<Linear> = self
            .layers
            .into_iter()
            .map(|l| Linear {
                rows: l.rows,
                cols: l.cols,
                weights: l.weights,
                bias: l.bias,
            })
            .collect();
        let network = QNetwork::from_layers(!self.variant.no_embed, layers)
            .ok_or_else(|| Error::Model("layer shapes inconsistent with architecture".into()))?;
        if !network.all_finite() {
            return Err(Error::Model("non-finite weight".into()));
        }
        QModel::new(network, self.config)
    }
}
