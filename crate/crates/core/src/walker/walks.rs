use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WalkConfig;
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::par;

/// One word of a walk sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Entity(EntityId),
    Relation(RelationId),
    /// Weisfeiler-Lehman subtree label of an entity at some iteration.
    Label { iteration: u8, hash: u64 },
}

impl Token {
    pub fn entity(self) -> Option<EntityId> {
        match self {
            Token::Entity(e) => Some(e),
            _ => None,
        }
    }

    fn render(&self, kg: &KnowledgeGraph) -> String {
        match *self {
            Token::Entity(e) => kg.vocab().entity_name(e).to_owned(),
            Token::Relation(r) => kg.vocab().relation_name(r).to_owned(),
            Token::Label { iteration, hash } => format!("wl{iteration}:{hash:016x}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<Token>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn num_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// WL labels of every entity for iterations `1..=depth`.
fn wl_labels(kg: &KnowledgeGraph, depth: usize) -> Vec<Vec<u64>> {
    let n = kg.num_entities();
    let mut current: Vec<u64> = (0..n as u64).collect();
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        let next: Vec<u64> = (0..n)
            .map(|e| {
                let mut nb: Vec<(u32, u64)> = kg
                    .out_edges(EntityId(e as u32))
                    .iter()
                    .map(|&(r, t)| (r.0, current[t.index()]))
                    .collect();
                nb.sort_unstable();
                let mut h = DefaultHasher::new();
                current[e].hash(&mut h);
                nb.hash(&mut h);
                h.finish()
            })
            .collect();
        out.push(next.clone());
        current = next;
    }
    out
}

fn walks_from(kg: &KnowledgeGraph, seed: EntityId, config: &WalkConfig) -> Vec<Vec<Token>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(seed.0 as u64);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..config.walks_per_entity {
        let mut walk = vec![Token::Entity(seed)];
        let mut cur = seed;
        for _ in 0..config.max_walk_length {
            let edges = kg.out_edges(cur);
            if edges.is_empty() {
                break;
            }
            let (r, t) = edges[rng.random_range(0..edges.len())];
            walk.push(Token::Relation(r));
            walk.push(Token::Entity(t));
            cur = t;
        }
        if !config.deduplicate || seen.insert(walk.clone()) {
            out.push(walk);
        }
    }
    out
}

/// Random out-edge walks from every seed, in seed order.
///
/// Each seed draws from its own stream of the master seed, so the corpus does
/// not depend on thread scheduling. With `wl_iterations > 0` every walk is
/// repeated once per iteration with its non-root entities replaced by their
/// WL labels.
pub fn generate_walks(kg: &KnowledgeGraph, seeds: &[EntityId], config: &WalkConfig) -> Result<WalkCorpus> {
    if let Some(bad) = seeds.iter().find(|e| e.index() >= kg.num_entities()) {
        return Err(Error::Unknown {
            what: "seed entity",
            name: bad.to_string(),
        });
    }
    let labels = wl_labels(kg, config.wl_iterations);
    let per_seed = par::map(seeds, |&s| {
        let base = walks_from(kg, s, config);
        let mut all = base.clone();
        for (i, lab) in labels.iter().enumerate() {
            for w in &base {
                let relabeled = w
                    .iter()
                    .enumerate()
                    .map(|(pos, tok)| match (pos, tok) {
                        (0, _) => *tok,
                        (_, Token::Entity(e)) => Token::Label {
                            iteration: (i + 1) as u8,
                            hash: lab[e.index()],
                        },
                        _ => *tok,
                    })
                    .collect();
                all.push(relabeled);
            }
        }
        all
    });
    Ok(WalkCorpus {
        walks: per_seed.into_iter().flatten().collect(),
    })
}

/// One walk per line, space-separated token names.
pub fn save_corpus(path: &Path, corpus: &WalkCorpus, kg: &KnowledgeGraph) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut names: HashMap<Token, String> = HashMap::new();
    (|| {
        for walk in &corpus.walks {
            let line: Vec<String> = walk
                .iter()
                .map(|t| names.entry(*t).or_insert_with(|| t.render(kg)).clone())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}
