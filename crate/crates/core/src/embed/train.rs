//! Mini-batch training with negative sampling.
//!
//! Margin-loss models (TransE, TransD, TransH, HolE) minimize
//! `max(0, margin − s(pos) + s(neg))` per (positive, corruption) pair.
//! Logistic models (DistMult, ComplEx) minimize
//! `softplus(−y·s) + λ·‖θ‖²` per scored triple, with `θ` the parameters the
//! triple touches.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{EmbeddingModel, Gradient, Matrix};
use super::sampler::NegativeSampler;
use super::{ModelConfig, ModelKind, OptimizerKind, Reduction};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NumericExport, Triple};
use crate::par;

/// The triples an embedding model is fitted to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingData {
    pub num_entities: usize,
    pub num_relations: usize,
    pub triples: Vec<Triple>,
}

impl TrainingData {
    pub fn from_kg(kg: &KnowledgeGraph) -> Self {
        TrainingData {
            num_entities: kg.num_entities(),
            num_relations: kg.num_relations(),
            triples: kg.triples().to_vec(),
        }
    }

    pub fn from_export(export: &NumericExport) -> Self {
        TrainingData {
            num_entities: export.entities.len(),
            num_relations: export.relations.len(),
            triples: export.train.clone(),
        }
    }
}

/// A positive triple with its corruptions.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub positive: Triple,
    pub negatives: Vec<Triple>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Margin { margin: f64, reduction: Reduction },
    Logistic { lambda: f64, reduction: Reduction },
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Objective {
    pub fn for_config(config: &ModelConfig) -> Self {
        if config.kind.uses_logistic_loss() {
            Objective::Logistic {
                lambda: config.lambda,
                reduction: config.reduction,
            }
        } else {
            Objective::Margin {
                margin: config.margin,
                reduction: config.reduction,
            }
        }
    }

    fn reduction(&self) -> Reduction {
        match *self {
            Objective::Margin { reduction, .. } | Objective::Logistic { reduction, .. } => reduction,
        }
    }

    /// Number of loss terms in `batch`.
    fn terms(&self, batch: &[Sample]) -> usize {
        let negs: usize = batch.iter().map(|s| s.negatives.len()).sum();
        match self {
            Objective::Margin { .. } => negs,
            Objective::Logistic { .. } => negs + batch.len(),
        }
    }

    /// Unreduced loss and gradient over `batch`.
    fn accumulate(&self, model: &EmbeddingModel, batch: &[Sample]) -> (f64, Gradient) {
        let mut grad = Gradient::default();
        let mut loss = 0.0;
        for s in batch {
            let p = s.positive;
            match *self {
                Objective::Margin { margin, .. } => {
                    let sp = model.score_unchecked(p.head, p.relation, p.tail);
                    for n in &s.negatives {
                        let sn = model.score_unchecked(n.head, n.relation, n.tail);
                        let v = margin - sp + sn;
                        if v > 0.0 {
                            loss += v;
                            model.accumulate_score_grad(p.head, p.relation, p.tail, -1.0, &mut grad);
                            model.accumulate_score_grad(n.head, n.relation, n.tail, 1.0, &mut grad);
                        }
                    }
                }
                Objective::Logistic { lambda, .. } => {
                    let terms = std::iter::once((p, 1.0)).chain(s.negatives.iter().map(|&n| (n, -1.0)));
                    for (t, y) in terms {
                        let sc = model.score_unchecked(t.head, t.relation, t.tail);
                        loss += softplus(-y * sc);
                        model.accumulate_score_grad(t.head, t.relation, t.tail, -y * sigmoid(-y * sc), &mut grad);
                        if lambda > 0.0 {
                            loss += lambda * model.triple_sq_norm(t.head, t.relation, t.tail);
                            model.accumulate_sq_norm_grad(t.head, t.relation, t.tail, lambda, &mut grad);
                        }
                    }
                }
            }
        }
        (loss, grad)
    }

    /// Loss and gradient of `batch`, computed over `shards` fixed shards that
    /// are reduced in order.
    pub fn loss_and_grad_sharded(&self, model: &EmbeddingModel, batch: &[Sample], shards: usize) -> (f64, Gradient) {
        let shards = shards.max(1);
        let chunk = batch.len().div_ceil(shards).max(1);
        let parts = if shards == 1 {
            vec![self.accumulate(model, batch)]
        } else {
            par::map_chunks(batch, chunk, |c| self.accumulate(model, c))
        };
        let mut loss = 0.0;
        let mut grad = Gradient::default();
        for (l, g) in parts {
            loss += l;
            grad.merge(g);
        }
        if self.reduction() == Reduction::Mean {
            let n = self.terms(batch).max(1) as f64;
            loss /= n;
            grad.scale(1.0 / n);
        }
        (loss, grad)
    }

    pub fn loss_and_grad(&self, model: &EmbeddingModel, batch: &[Sample]) -> (f64, Gradient) {
        self.loss_and_grad_sharded(model, batch, 1)
    }

    pub fn loss(&self, model: &EmbeddingModel, batch: &[Sample]) -> f64 {
        self.loss_and_grad(model, batch).0
    }
}

enum Optimizer {
    Sgd,
    Adagrad { accum: Vec<Matrix> },
}

const ADAGRAD_EPS: f64 = 1e-10;

impl Optimizer {
    fn new(kind: OptimizerKind, model: &EmbeddingModel) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adagrad => Optimizer::Adagrad {
                accum: model.params().iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
            },
        }
    }

    fn step(&mut self, model: &mut EmbeddingModel, grad: &Gradient, alpha: f64, max_norm: Option<f64>) {
        for (slot, row, g) in grad.entries() {
            let r = row as usize;
            match self {
                Optimizer::Sgd => {
                    let w = model.param_mut(slot).row_mut(r);
                    for (wi, gi) in w.iter_mut().zip(g) {
                        *wi -= alpha * gi;
                    }
                }
                Optimizer::Adagrad { accum } => {
                    let acc = accum[slot].row_mut(r);
                    let w = model.param_mut(slot).row_mut(r);
                    for ((wi, ai), gi) in w.iter_mut().zip(acc.iter_mut()).zip(g) {
                        *ai += gi * gi;
                        *wi -= alpha * gi / (ai.sqrt() + ADAGRAD_EPS);
                    }
                }
            }
            if let Some(radius) = max_norm {
                model.param_mut(slot).clip_row(r, radius);
            }
            model.project_rows(slot, r);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    /// Summed mini-batch loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Fits an embedding model to `data`.
///
/// Each epoch shuffles the triples, cuts them into `nr_batches` mini-batches
/// and takes one optimizer step per batch. Bit-deterministic for a fixed
/// seed and `work_threads`.
pub fn train(data: &TrainingData, config: &ModelConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.triples.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty knowledge graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmbeddingModel::init(config.kind, config.dim, data.num_entities, data.num_relations, &mut rng)
        .with_norm(config.norm);
    if let Some(radius) = config.max_norm {
        for slot in 0..model.params().len() {
            for row in 0..model.param(slot).rows() {
                model.param_mut(slot).clip_row(row, radius);
            }
        }
    }
    let sampler = NegativeSampler::new(
        &data.triples,
        data.num_entities,
        data.num_relations,
        config.bern,
        config.entity_negative_rate,
        config.relation_negative_rate,
    );
    let objective = Objective::for_config(config);
    let mut optimizer = Optimizer::new(config.optimizer, &model);
    let batch_size = data.triples.len().div_ceil(config.nr_batches);
    let mut order: Vec<usize> = (0..data.triples.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let renormalize = matches!(config.kind, ModelKind::TransE | ModelKind::TransH);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(batch_size).enumerate() {
            let batch: Vec<Sample> = chunk
                .iter()
                .map(|&i| {
                    let positive = data.triples[i];
                    Sample {
                        positive,
                        negatives: sampler.corrupt(positive, &mut rng),
                    }
                })
                .collect();
            let (loss, grad) = objective.loss_and_grad_sharded(&model, &batch, config.work_threads);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, loss });
            }
            optimizer.step(&mut model, &grad, config.alpha, config.max_norm);
            epoch_loss += loss;
        }
        if renormalize {
            model.normalize_entities();
        }
        if !model.all_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: order.len().div_ceil(batch_size),
                loss: f64::NAN,
            });
        }
        log::debug!("{} epoch {epoch}: loss {epoch_loss:.6}", config.kind);
        trace.push(epoch_loss);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{EntityId, RelationId};

    fn toy() -> TrainingData {
        let t = |h, r, tl| Triple::new(EntityId(h), RelationId(r), EntityId(tl));
        TrainingData {
            num_entities: 3,
            num_relations: 1,
            triples: vec![t(0, 0, 1), t(1, 0, 2)],
        }
    }

    fn small(kind: ModelKind) -> ModelConfig {
        ModelConfig {
            dim: 16,
            epochs: 10,
            work_threads: 1,
            ..ModelConfig::defaults(kind)
        }
    }

    #[test]
    fn transe_entities_stay_on_unit_sphere() {
        let out = train(&toy(), &small(ModelKind::TransE)).unwrap();
        for e in 0..3 {
            let v = out.model.entity_vec(EntityId(e));
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6, "norm {n}");
        }
    }

    #[test]
    fn transh_normals_stay_unit() {
        let out = train(&toy(), &small(ModelKind::TransH)).unwrap();
        let w = out.model.param(2).row(0);
        let n: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_worker_is_deterministic() {
        for kind in ModelKind::ALL {
            let a = train(&toy(), &small(kind)).unwrap();
            let b = train(&toy(), &small(kind)).unwrap();
            assert_eq!(a.model, b.model, "{kind}");
            assert_eq!(a.loss_trace, b.loss_trace);
        }
    }

    #[test]
    fn sharded_gradient_is_schedule_independent() {
        let cfg = ModelConfig {
            work_threads: 4,
            ..small(ModelKind::DistMult)
        };
        let a = par::with_threads(1, || train(&toy(), &cfg).unwrap());
        let b = par::with_threads(4, || train(&toy(), &cfg).unwrap());
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let data = TrainingData {
            num_entities: 2,
            num_relations: 1,
            triples: vec![],
        };
        assert!(train(&data, &small(ModelKind::TransE)).is_err());
    }

    #[test]
    fn divergence_is_reported_with_position() {
        let cfg = ModelConfig {
            alpha: 1e200,
            reduction: Reduction::Sum,
            ..small(ModelKind::DistMult)
        };
        match train(&toy(), &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch < 10),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn loss_trace_has_one_entry_per_epoch() {
        let out = train(&toy(), &small(ModelKind::HolE)).unwrap();
        assert_eq!(out.loss_trace.len(), 10);
        assert!(out.loss_trace.iter().all(|l| l.is_finite() && *l >= 0.0));
    }
}
