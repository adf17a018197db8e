//! Knowledge graph embedding models for link prediction.
//!
//! Six scoring functions are supported. Translational models (TransE, TransD,
//! TransH) score by a negated distance, semantic matching models (DistMult,
//! HolE, ComplEx) by a multiplicative similarity, so that a higher score always
//! means a more plausible triple.

mod holo;
mod io;
mod model;
mod rank;
mod sampler;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use holo::{circular_convolution, circular_correlation};
pub use io::{load_model, read_table, save_model, write_table, MAGIC};
pub use model::{Axis, EmbeddingModel, Gradient, Matrix, ParamSpec};
pub use rank::{filter_by_kind, rank_candidates, CandidateRanking, Direction};
pub use sampler::NegativeSampler;
pub use train::{train, Objective, Sample, TrainOutcome, TrainingData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    TransD,
    TransH,
    DistMult,
    HolE,
    ComplEx,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::TransE,
        ModelKind::TransD,
        ModelKind::TransH,
        ModelKind::DistMult,
        ModelKind::HolE,
        ModelKind::ComplEx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TransE => "TransE",
            ModelKind::TransD => "TransD",
            ModelKind::TransH => "TransH",
            ModelKind::DistMult => "DistMult",
            ModelKind::HolE => "HolE",
            ModelKind::ComplEx => "ComplEx",
        }
    }

    pub fn is_translational(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::TransD | ModelKind::TransH)
    }

    /// Models trained with the regularized logistic loss rather than the
    /// margin ranking loss.
    pub fn uses_logistic_loss(self) -> bool {
        matches!(self, ModelKind::DistMult | ModelKind::ComplEx)
    }

    pub(crate) fn code(self) -> u32 {
        self as u32
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                what: "model",
                name: s.to_owned(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adagrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

/// How per-example losses in a mini-batch are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dim: usize,
    pub epochs: usize,
    pub nr_batches: usize,
    pub alpha: f64,
    /// Margin of the ranking loss (TransE, TransD, TransH, HolE).
    pub margin: f64,
    /// L2 coefficient of the logistic loss (DistMult, ComplEx).
    pub lambda: f64,
    pub bern: bool,
    pub entity_negative_rate: usize,
    pub relation_negative_rate: usize,
    pub optimizer: OptimizerKind,
    /// Distance norm of TransE. TransD and TransH always use squared l2.
    pub norm: Norm,
    pub reduction: Reduction,
    /// When set, every touched parameter row is projected back into the l2
    /// ball of this radius after each update.
    pub max_norm: Option<f64>,
    /// Number of gradient shards per mini-batch. Shards are reduced in a fixed
    /// order, so the result depends on this value but not on scheduling.
    pub work_threads: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::defaults(ModelKind::TransE)
    }
}

impl ModelConfig {
    /// Per-model defaults of the benchmark.
    pub fn defaults(kind: ModelKind) -> Self {
        let base = ModelConfig {
            kind,
            dim: 200,
            epochs: 100,
            nr_batches: 100,
            alpha: 0.001,
            margin: 1.0,
            lambda: 0.0,
            bern: false,
            entity_negative_rate: 1,
            relation_negative_rate: 0,
            optimizer: OptimizerKind::Sgd,
            norm: Norm::L2,
            reduction: Reduction::Sum,
            max_norm: None,
            work_threads: 8,
            seed: 1,
        };
        match kind {
            ModelKind::TransE | ModelKind::TransH => base,
            ModelKind::TransD => ModelConfig {
                alpha: 1.0,
                margin: 4.0,
                bern: true,
                reduction: Reduction::Mean,
                // unconstrained SGD at alpha 1.0 on a squared distance diverges
                max_norm: Some(1.0),
                ..base
            },
            ModelKind::DistMult | ModelKind::ComplEx => ModelConfig {
                alpha: 0.5,
                lambda: 0.05,
                bern: true,
                optimizer: OptimizerKind::Adagrad,
                reduction: Reduction::Mean,
                ..base
            },
            ModelKind::HolE => ModelConfig {
                alpha: 0.1,
                margin: 0.2,
                optimizer: OptimizerKind::Adagrad,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("{}: {m}", self.kind)));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.nr_batches == 0 {
            return bad("nr_batches must be positive");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be a positive number");
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) || !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("margin and lambda must be non-negative");
        }
        if self.max_norm.is_some_and(|m| !(m.is_finite() && m > 0.0)) {
            return bad("max_norm must be a positive number");
        }
        if self.entity_negative_rate + self.relation_negative_rate == 0 {
            return bad("at least one negative per positive is required");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_parameter_table() {
        let e = ModelConfig::defaults(ModelKind::TransE);
        assert_eq!((e.alpha, e.margin, e.bern, e.optimizer), (0.001, 1.0, false, OptimizerKind::Sgd));
        let d = ModelConfig::defaults(ModelKind::TransD);
        assert_eq!((d.alpha, d.margin, d.bern, d.optimizer), (1.0, 4.0, true, OptimizerKind::Sgd));
        let h = ModelConfig::defaults(ModelKind::TransH);
        assert_eq!((h.alpha, h.margin, h.bern, h.optimizer), (0.001, 1.0, false, OptimizerKind::Sgd));
        for k in [ModelKind::DistMult, ModelKind::ComplEx] {
            let c = ModelConfig::defaults(k);
            assert_eq!((c.alpha, c.lambda, c.bern, c.optimizer), (0.5, 0.05, true, OptimizerKind::Adagrad));
        }
        let hole = ModelConfig::defaults(ModelKind::HolE);
        assert_eq!((hole.alpha, hole.margin, hole.bern, hole.optimizer), (0.1, 0.2, false, OptimizerKind::Adagrad));
        for k in ModelKind::ALL {
            let c = ModelConfig::defaults(k);
            assert_eq!((c.dim, c.epochs, c.nr_batches, c.work_threads), (200, 100, 100, 8));
            assert_eq!((c.entity_negative_rate, c.relation_negative_rate), (1, 0));
            c.validate().unwrap();
        }
    }

    #[test]
    fn kind_parses_case_insensitively() {
        assert_eq!("hole".parse::<ModelKind>().unwrap(), ModelKind::HolE);
        assert!("rotate".parse::<ModelKind>().is_err());
    }
}
