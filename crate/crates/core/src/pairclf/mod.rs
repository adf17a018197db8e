//! Node-pair classification: pair features from aggregated entity vectors and
//! four supervised classifiers that output a positive-class probability.

mod aggregate;
mod forest;
mod gbt;
mod mlp;
mod naive_bayes;
mod tree;

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityKind, Vocabulary};
use crate::split::{GdaPair, Label};

pub use aggregate::{aggregate, build_features, AggregationOp, PairFeatures};
pub use forest::RandomForest;
pub use gbt::GradientBoosting;
pub use mlp::Mlp;
pub use naive_bayes::GaussianNb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    NaiveBayes,
    Mlp,
    RandomForest,
    GradientBoostedTrees,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::Mlp,
        ClassifierKind::RandomForest,
        ClassifierKind::GradientBoostedTrees,
    ];

    /// Short tag used in method names and file names.
    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "NB",
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::RandomForest => "RF",
            ClassifierKind::GradientBoostedTrees => "XGB",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "nb" | "naive_bayes" | "naivebayes" => ClassifierKind::NaiveBayes,
            "mlp" => ClassifierKind::Mlp,
            "rf" | "random_forest" | "randomforest" => ClassifierKind::RandomForest,
            "xgb" | "gbt" | "gradient_boosted_trees" | "gradientboostedtrees" => ClassifierKind::GradientBoostedTrees,
            _ => {
                return Err(Error::Unknown {
                    what: "classifier",
                    name: s.to_owned(),
                })
            }
        };
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// Trees (RF, GBT).
    pub max_depth: usize,
    pub n_estimators: usize,
    /// Shrinkage of the boosted trees.
    pub learning_rate: f64,
    pub hidden_layers: Vec<usize>,
    /// L2 penalty of the MLP.
    pub alpha: f64,
    pub mlp_learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub n_iter_no_change: usize,
    pub validation_fraction: f64,
    pub var_smoothing: f64,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::new(ClassifierKind::GradientBoostedTrees)
    }
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            max_depth: 4,
            n_estimators: 100,
            learning_rate: 0.1,
            hidden_layers: vec![10, 10],
            alpha: 1e-4,
            mlp_learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            n_iter_no_change: 10,
            validation_fraction: 0.1,
            var_smoothing: 1e-9,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("{}: {m}", self.kind)));
        if self.n_estimators == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return bad("n_estimators, batch_size and max_epochs must be positive");
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if !(self.learning_rate > 0.0 && self.mlp_learning_rate > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) || !(self.var_smoothing >= 0.0 && self.alpha >= 0.0) {
            return bad("validation_fraction, var_smoothing or alpha out of range");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    NaiveBayes(GaussianNb),
    Mlp(Mlp),
    RandomForest(RandomForest),
    GradientBoostedTrees(GradientBoosting),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: ClassifierKind,
    pub feature_len: usize,
    pub model: Fitted,
}

/// Fits a classifier on raw rows; `y[i]` is true for the positive class.
pub fn fit_matrix(spec: &ClassifierSpec, x: &[Vec<f64>], y: &[bool]) -> Result<TrainedClassifier> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("{} rows, {} labels", x.len(), y.len())));
    }
    if !(y.iter().any(|&v| v) && y.iter().any(|&v| !v)) {
        return Err(Error::InvalidArgument("training data must contain both classes".into()));
    }
    let feature_len = x[0].len();
    if let Some(i) = x.iter().position(|r| r.len() != feature_len) {
        return Err(Error::InvalidArgument(format!("row {i} has {} features, expected {feature_len}", x[i].len())));
    }
    if let Some(i) = x.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument(format!("row {i} has a non-finite feature")));
    }
    let model = match spec.kind {
        ClassifierKind::NaiveBayes => Fitted::NaiveBayes(GaussianNb::fit(x, y, spec.var_smoothing)),
        ClassifierKind::RandomForest => {
            Fitted::RandomForest(RandomForest::fit(x, y, spec.n_estimators, spec.max_depth, spec.seed))
        }
        ClassifierKind::GradientBoostedTrees => Fitted::GradientBoostedTrees(GradientBoosting::fit(
            x,
            y,
            spec.n_estimators,
            spec.max_depth,
            spec.learning_rate,
        )),
        ClassifierKind::Mlp => Fitted::Mlp(Mlp::fit(
            x,
            y,
            &mlp::MlpParams {
                hidden: &spec.hidden_layers,
                alpha: spec.alpha,
                learning_rate: spec.mlp_learning_rate,
                batch_size: spec.batch_size,
                max_epochs: spec.max_epochs,
                n_iter_no_change: spec.n_iter_no_change,
                validation_fraction: spec.validation_fraction,
                seed: spec.seed,
            },
        )),
    };
    Ok(TrainedClassifier {
        kind: spec.kind,
        feature_len,
        model,
    })
}

/// Fits on pair features, labels taken from the pairs.
pub fn fit(spec: &ClassifierSpec, features: &[PairFeatures]) -> Result<TrainedClassifier> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("no training pairs".into()));
    }
    if let Some(f) = features.iter().find(|f| f.vector.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "non-finite feature for pair ({}, {})",
            f.pair.gene, f.pair.disease
        )));
    }
    let x: Vec<Vec<f64>> = features.iter().map(|f| f.vector.clone()).collect();
    let y: Vec<bool> = features.iter().map(|f| f.pair.is_positive()).collect();
    fit_matrix(spec, &x, &y)
}

impl TrainedClassifier {
    /// `(p_neg, p_pos)`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.feature_len {
            return Err(Error::InvalidArgument(format!(
                "expected {} features, got {}",
                self.feature_len,
                x.len()
            )));
        }
        let p = match &self.model {
            Fitted::NaiveBayes(m) => m.predict_pos(x),
            Fitted::Mlp(m) => m.predict_pos(x),
            Fitted::RandomForest(m) => m.predict_pos(x),
            Fitted::GradientBoostedTrees(m) => m.predict_pos(x),
        };
        let p = if p.is_nan() { 0.5 } else { p.clamp(0.0, 1.0) };
        Ok((1.0 - p, p))
    }

    pub fn predict(&self, features: &[PairFeatures]) -> Result<Vec<Prediction>> {
        features
            .iter()
            .map(|f| {
                let (p_neg, p_pos) = self.predict_proba(&f.vector)?;
                Ok(Prediction { pair: f.pair, p_neg, p_pos })
            })
            .collect()
    }
}

/// Classifier output for one test pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pair: GdaPair,
    pub p_neg: f64,
    pub p_pos: f64,
}

impl Prediction {
    pub fn predicted(&self) -> Label {
        if self.p_pos >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// `gene, disease, p_neg, p_pos, predicted_label, true_label`, tab-separated.
pub fn write_predictions(path: &Path, rows: &[Prediction], vocab: &Vocabulary) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| {
        for r in rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                vocab.entity_name(r.pair.gene),
                vocab.entity_name(r.pair.disease),
                r.p_neg,
                r.p_pos,
                r.predicted().as_int(),
                r.pair.label.as_int()
            )?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path, vocab: &Vocabulary) -> Result<Vec<Prediction>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::parse(path, i + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let entity = |name: &str, kind| {
            vocab
                .entity_id(name)
                .filter(|&e| vocab.kind(e) == kind)
                .ok_or_else(|| Error::parse(path, i + 1, format!("unknown {kind:?} `{name}`")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(path, i + 1, format!("bad probability `{s}`")));
        let label = match f[5] {
            "1" => Label::Positive,
            "0" => Label::Negative,
            other => return Err(Error::parse(path, i + 1, format!("bad label `{other}`"))),
        };
        out.push(Prediction {
            pair: GdaPair {
                gene: entity(f[0], EntityKind::Gene)?,
                disease: entity(f[1], EntityKind::Disease)?,
                label,
            },
            p_neg: num(f[2])?,
            p_pos: num(f[3])?,
        });
    }
    Ok(out)
}
