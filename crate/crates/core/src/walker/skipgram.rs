//! Skip-gram with negative sampling over walk sentences.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::walks::{Token, WalkCorpus};
use super::{EntityEmbeddingTable, WalkConfig};
use crate::embed::Matrix;
use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::par;

/// `f32` weights shared between Hogwild workers. Updates from concurrent
/// workers may interleave; with one worker every access is ordered.
struct Weights(Vec<AtomicU32>);

impl Weights {
    fn zeros(n: usize) -> Self {
        Weights((0..n).map(|_| AtomicU32::new(0)).collect())
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f32) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed)
    }

    #[inline]
    fn add(&self, i: usize, v: f32) {
        self.set(i, self.get(i) + v)
    }
}

struct Vocab {
    index: HashMap<Token, u32>,
    counts: Vec<u64>,
    /// Cumulative unigram^0.75 distribution for negative draws.
    cum: Vec<f64>,
    /// Keep probability per word under frequent-word subsampling.
    keep: Vec<f64>,
}

const NS_EXPONENT: f64 = 0.75;

impl Vocab {
    fn build(corpus: &WalkCorpus, seeds: &[EntityId], config: &WalkConfig) -> Self {
        let mut first: HashMap<Token, (u64, usize)> = HashMap::new();
        for (pos, tok) in corpus.walks.iter().flatten().enumerate() {
            first.entry(*tok).or_insert((0, pos)).0 += 1;
        }
        let forced: std::collections::HashSet<Token> = seeds.iter().map(|&e| Token::Entity(e)).collect();
        let mut words: Vec<(Token, u64, usize)> = first
            .into_iter()
            .filter(|(t, (c, _))| *c >= config.min_count as u64 || forced.contains(t))
            .map(|(t, (c, p))| (t, c, p))
            .collect();
        // most frequent first, first occurrence breaks ties
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let index = words.iter().enumerate().map(|(i, w)| (w.0, i as u32)).collect();
        let counts: Vec<u64> = words.iter().map(|w| w.1).collect();

        let mut cum = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in &counts {
            acc += (c as f64).powf(NS_EXPONENT);
            cum.push(acc);
        }
        let total: u64 = counts.iter().sum();
        let keep = counts
            .iter()
            .map(|&c| {
                if config.sample <= 0.0 {
                    return 1.0;
                }
                let threshold = config.sample * total as f64;
                let c = c as f64;
                ((c / threshold).sqrt() + 1.0) * (threshold / c)
            })
            .collect();
        Vocab { index, counts, cum, keep }
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn draw_negative<R: Rng>(&self, rng: &mut R) -> usize {
        let x = rng.random::<f64>() * self.cum[self.cum.len() - 1];
        self.cum.partition_point(|&c| c <= x).min(self.cum.len() - 1)
    }
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Model<'a> {
    vocab: &'a Vocab,
    dim: usize,
    syn0: Weights,
    syn1: Weights,
}

impl Model<'_> {
    /// One (center, context) pair: `syn0[center]` predicts `context` against
    /// `negative` noise words.
    fn train_pair<R: Rng>(&self, center: usize, context: usize, negative: usize, lr: f32, rng: &mut R, neu1e: &mut [f32]) {
        let d = self.dim;
        let l1 = center * d;
        neu1e.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..=negative {
            let (target, label) = if k == 0 {
                (context, 1.0f32)
            } else {
                let t = self.vocab.draw_negative(rng);
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            let l2 = target * d;
            let f: f32 = (0..d).map(|j| self.syn0.get(l1 + j) * self.syn1.get(l2 + j)).sum();
            let g = (label - sigmoid(f)) * lr;
            for (j, e) in neu1e.iter_mut().enumerate() {
                *e += g * self.syn1.get(l2 + j);
                self.syn1.add(l2 + j, g * self.syn0.get(l1 + j));
            }
        }
        for (j, e) in neu1e.iter().enumerate() {
            self.syn0.add(l1 + j, *e);
        }
    }

    fn train_sentence<R: Rng>(&self, words: &[usize], config: &WalkConfig, lr: f32, rng: &mut R, neu1e: &mut [f32]) {
        for (i, &w) in words.iter().enumerate() {
            let reduced = rng.random_range(0..config.window);
            let span = config.window - reduced;
            let lo = i.saturating_sub(span);
            let hi = (i + span + 1).min(words.len());
            for (j, &c) in words.iter().enumerate().take(hi).skip(lo) {
                if j != i {
                    self.train_pair(w, c, config.negative, lr, rng, neu1e);
                }
            }
        }
    }
}

/// Trains skip-gram vectors over `corpus` and returns those of `seeds`.
///
/// Deterministic for a fixed seed when `workers == 1`. With more workers each
/// epoch's sentences are cut into `workers` shards trained concurrently
/// without locks.
pub fn train_skipgram(corpus: &WalkCorpus, seeds: &[EntityId], config: &WalkConfig) -> Result<EntityEmbeddingTable> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty walk corpus".into()));
    }
    let vocab = Vocab::build(corpus, seeds, config);
    let missing: Vec<String> = seeds
        .iter()
        .filter(|e| !vocab.index.contains_key(&Token::Entity(**e)))
        .map(|e| e.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Inconsistent(format!(
            "seed entities absent from the walk corpus: {}",
            missing.join(", ")
        )));
    }

    let dim = config.dim;
    let model = Model {
        vocab: &vocab,
        dim,
        syn0: Weights::zeros(vocab.len() * dim),
        syn1: Weights::zeros(vocab.len() * dim),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 0.5 / dim as f32;
    for i in 0..vocab.len() * dim {
        model.syn0.set(i, rng.random_range(-bound..bound));
    }

    let sentences: Vec<Vec<usize>> = corpus
        .walks
        .iter()
        .map(|w| w.iter().filter_map(|t| vocab.index.get(t).map(|&i| i as usize)).collect())
        .collect();
    let workers = config.workers.max(1);
    let shard = sentences.len().div_ceil(workers);
    let total = (config.epochs * sentences.len()) as f64;

    for epoch in 0..config.epochs {
        par::map_range(workers, |w| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(((epoch as u64) << 32) | (w as u64 + 1));
            let mut neu1e = vec![0.0f32; dim];
            let lo = (w * shard).min(sentences.len());
            let hi = ((w + 1) * shard).min(sentences.len());
            let mut kept = Vec::new();
            for (k, s) in sentences[lo..hi].iter().enumerate() {
                // global progress as if the shards were trained back to back
                let done = (epoch * sentences.len() + k * workers) as f64;
                let lr = config.alpha - (config.alpha - config.min_alpha) * (done / total);
                let lr = lr.max(config.min_alpha) as f32;
                kept.clear();
                kept.extend(s.iter().copied().filter(|&i| vocab.keep[i] >= rng.random::<f64>()));
                model.train_sentence(&kept, config, lr, &mut rng, &mut neu1e);
            }
        });
    }

    let mut vectors = Matrix::zeros(seeds.len(), dim);
    for (row, e) in seeds.iter().enumerate() {
        let i = vocab.index[&Token::Entity(*e)] as usize;
        for (j, x) in vectors.row_mut(row).iter_mut().enumerate() {
            *x = model.syn0.get(i * dim + j) as f64;
        }
    }
    EntityEmbeddingTable::new(seeds.to_vec(), vectors)
}
