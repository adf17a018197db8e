//! Walk-based entity embeddings for node-pair classification.
//!
//! Random walks over out-edges form a corpus of sentences whose words are
//! entity and relation tokens; a skip-gram model trained on the corpus gives
//! one vector per seed entity.

mod skipgram;
mod walks;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{read_table, write_table, Matrix};
use crate::error::{Error, Result};
use crate::kg::EntityId;

pub use skipgram::train_skipgram;
pub use walks::{generate_walks, save_corpus, Token, WalkCorpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub max_walk_length: usize,
    pub walks_per_entity: usize,
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    /// Frequency cut for non-seed tokens. Seed entities are always kept.
    pub min_count: usize,
    pub sample: f64,
    pub alpha: f64,
    pub min_alpha: f64,
    /// Drop repeated walks of the same seed.
    pub deduplicate: bool,
    /// Weisfeiler-Lehman relabeling depth; 0 gives plain walks.
    pub wl_iterations: usize,
    pub workers: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            max_walk_length: 8,
            walks_per_entity: 500,
            dim: 200,
            window: 5,
            negative: 5,
            epochs: 5,
            min_count: 5,
            sample: 0.001,
            alpha: 0.025,
            min_alpha: 0.0001,
            deduplicate: true,
            wl_iterations: 0,
            workers: 1,
            seed: 1,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_walk_length", self.max_walk_length),
            ("walks_per_entity", self.walks_per_entity),
            ("dim", self.dim),
            ("window", self.window),
            ("epochs", self.epochs),
            ("min_count", self.min_count),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("walk config: {name} must be positive")));
        }
        if !(self.alpha > 0.0 && self.min_alpha > 0.0 && self.min_alpha <= self.alpha) {
            return Err(Error::InvalidArgument("walk config: need 0 < min_alpha <= alpha".into()));
        }
        if !(self.sample >= 0.0) || self.wl_iterations > u8::MAX as usize {
            return Err(Error::InvalidArgument("walk config: sample or wl_iterations out of range".into()));
        }
        Ok(())
    }
}

/// Vectors of the seed entities, in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityEmbeddingTable {
    ids: Vec<EntityId>,
    vectors: Matrix,
    index: HashMap<EntityId, usize>,
}

impl EntityEmbeddingTable {
    pub fn new(ids: Vec<EntityId>, vectors: Matrix) -> Result<Self> {
        if ids.len() != vectors.rows() {
            return Err(Error::Inconsistent(format!("{} ids for {} vectors", ids.len(), vectors.rows())));
        }
        let index: HashMap<EntityId, usize> = ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        if index.len() != ids.len() {
            return Err(Error::Inconsistent("duplicate entity in embedding table".into()));
        }
        Ok(EntityEmbeddingTable { ids, vectors, index })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn get(&self, e: EntityId) -> Option<&[f64]> {
        self.index.get(&e).map(|&i| self.vectors.row(i))
    }

    /// Binary table plus a JSON sidecar holding `config`.
    pub fn save(&self, path: &Path, config: &WalkConfig) -> Result<()> {
        write_table(path, &self.ids, &self.vectors)?;
        let side = path.with_extension("json");
        fs::write(&side, serde_json::to_vec_pretty(config)?).map_err(|e| Error::io(&side, e))
    }

    pub fn load(path: &Path) -> Result<(Self, WalkConfig)> {
        let (ids, vectors) = read_table(path)?;
        let side = path.with_extension("json");
        let text = fs::read(&side).map_err(|e| Error::io(&side, e))?;
        let config: WalkConfig = serde_json::from_slice(&text)?;
        Ok((Self::new(ids, vectors)?, config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{EntityKind, KnowledgeGraph, RelationId, Triple, Vocabulary};
    use std::collections::HashSet;
    use std::sync::Arc;

    fn graph(edges: &[(&str, &str, &str)]) -> KnowledgeGraph {
        let mut v = Vocabulary::new();
        let mut ts = Vec::new();
        for (h, r, t) in edges {
            let kind = if h.starts_with('g') { EntityKind::Gene } else { EntityKind::OntologyClass };
            let h = v.entity(h, kind).unwrap();
            let r = v.relation(r);
            let t = v.entity(t, EntityKind::OntologyClass).unwrap();
            ts.push(Triple::new(h, r, t));
        }
        KnowledgeGraph::from_triples(Arc::new(v), "toy", ts).unwrap()
    }

    fn id(kg: &KnowledgeGraph, name: &str) -> EntityId {
        kg.vocab().entity_id(name).unwrap()
    }

    fn small() -> WalkConfig {
        WalkConfig {
            walks_per_entity: 50,
            dim: 16,
            min_count: 1,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn defaults_follow_word2vec() {
        let c = WalkConfig::default();
        assert_eq!((c.max_walk_length, c.walks_per_entity, c.dim), (8, 500, 200));
        assert_eq!((c.window, c.negative, c.epochs, c.min_count), (5, 5, 5, 5));
        assert_eq!((c.sample, c.alpha, c.min_alpha, c.seed), (0.001, 0.025, 0.0001, 1));
        c.validate().unwrap();
    }

    #[test]
    fn chain_gives_the_unique_path() {
        let kg = graph(&[("g1", "a", "t1"), ("t1", "s", "t2")]);
        let c = generate_walks(&kg, &[id(&kg, "g1")], &small()).unwrap();
        assert_eq!(c.walks.len(), 1);
        let a = kg.vocab().relation_id("a").unwrap();
        let s = kg.vocab().relation_id("s").unwrap();
        assert_eq!(
            c.walks[0],
            [
                Token::Entity(id(&kg, "g1")),
                Token::Relation(a),
                Token::Entity(id(&kg, "t1")),
                Token::Relation(s),
                Token::Entity(id(&kg, "t2")),
            ]
        );
    }

    #[test]
    fn isolated_seed_gives_one_single_token_walk() {
        let kg = graph(&[("g1", "a", "t1"), ("g2", "a", "t1")]);
        let t1 = id(&kg, "t1");
        let c = generate_walks(&kg, &[t1], &small()).unwrap();
        assert_eq!(c.walks, vec![vec![Token::Entity(t1)]]);
        let dup = generate_walks(&kg, &[t1], &WalkConfig { deduplicate: false, ..small() }).unwrap();
        assert_eq!(dup.walks.len(), 50);
    }

    #[test]
    fn branching_seed_covers_every_path() {
        // g1 -> {x, y}, x -> z; possible walks: [g1 a x b z], [g1 a y]
        let kg = graph(&[("g1", "a", "x"), ("g1", "a", "y"), ("x", "b", "z")]);
        let cfg = WalkConfig { walks_per_entity: 500, ..small() };
        let c = generate_walks(&kg, &[id(&kg, "g1")], &cfg).unwrap();
        let got: HashSet<Vec<Token>> = c.walks.into_iter().collect();
        let mut expected = HashSet::new();
        let (a, b) = (RelationId(1), RelationId(2));
        let e = |n| Token::Entity(id(&kg, n));
        expected.insert(vec![e("g1"), Token::Relation(a), e("x"), Token::Relation(b), e("z")]);
        expected.insert(vec![e("g1"), Token::Relation(a), e("y")]);
        assert_eq!(got, expected);
    }

    #[test]
    fn walks_are_paths_within_the_length_bound() {
        let kg = graph(&[("g1", "a", "x"), ("x", "b", "g1"), ("x", "b", "y"), ("y", "c", "x")]);
        let cfg = WalkConfig { max_walk_length: 3, ..small() };
        let seeds = [id(&kg, "g1"), id(&kg, "y")];
        let c = generate_walks(&kg, &seeds, &cfg).unwrap();
        let edges = kg.triple_set();
        for s in seeds {
            assert!(c.walks.iter().any(|w| w[0] == Token::Entity(s)));
        }
        for w in &c.walks {
            assert!(w.len() <= 2 * 3 + 1);
            for k in (0..w.len() - 1).step_by(2) {
                let (Token::Entity(h), Token::Relation(r), Token::Entity(t)) = (w[k], w[k + 1], w[k + 2]) else {
                    panic!("tokens do not alternate");
                };
                assert!(edges.contains(&Triple::new(h, r, t)));
            }
        }
    }

    #[test]
    fn wl_relabeling_adds_label_walks() {
        let kg = graph(&[("g1", "a", "t1"), ("t1", "s", "t2")]);
        let cfg = WalkConfig { wl_iterations: 2, ..small() };
        let c = generate_walks(&kg, &[id(&kg, "g1")], &cfg).unwrap();
        assert_eq!(c.walks.len(), 3);
        assert!(matches!(c.walks[1][2], Token::Label { iteration: 1, .. }));
        assert!(matches!(c.walks[2][4], Token::Label { iteration: 2, .. }));
    }

    #[test]
    fn skipgram_is_deterministic_and_complete() {
        let kg = graph(&[("g1", "a", "x"), ("g2", "a", "x"), ("x", "b", "y"), ("g3", "a", "y")]);
        let seeds: Vec<EntityId> = ["g1", "g2", "g3"].iter().map(|n| id(&kg, n)).collect();
        let cfg = WalkConfig { min_count: 5, ..small() };
        let c = generate_walks(&kg, &seeds, &cfg).unwrap();
        let a = train_skipgram(&c, &seeds, &cfg).unwrap();
        let b = train_skipgram(&c, &seeds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.dim(), 16);
        assert!(a.vectors().as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn missing_seed_is_reported() {
        let kg = graph(&[("g1", "a", "x"), ("g2", "a", "x")]);
        let c = generate_walks(&kg, &[id(&kg, "g1")], &small()).unwrap();
        let err = train_skipgram(&c, &[id(&kg, "g1"), id(&kg, "g2")], &small()).unwrap_err();
        assert!(err.to_string().contains(&id(&kg, "g2").to_string()));
    }

    #[test]
    fn table_save_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("walk.bin");
        let t = EntityEmbeddingTable::new(vec![EntityId(3)], Matrix::from_vec(1, 2, vec![0.5, -1.0]).unwrap()).unwrap();
        t.save(&p, &small()).unwrap();
        let (back, cfg) = EntityEmbeddingTable::load(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(cfg, small());
    }
}
