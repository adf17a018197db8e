use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::kg::{EntityId, RelationId, Triple};

const MAX_TRIES: usize = 64;

/// Produces corrupted triples for training, never returning a known triple.
///
/// With `bern` the corrupted side is drawn per relation: the head is replaced
/// with probability `tph / (tph + hpt)`, where `tph` is the mean number of
/// tails per head and `hpt` the mean number of heads per tail. Without it a
/// fair coin decides.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    num_entities: usize,
    num_relations: usize,
    head_prob: Vec<f64>,
    known: HashSet<Triple>,
    entity_rate: usize,
    relation_rate: usize,
}

impl NegativeSampler {
    pub fn new(
        triples: &[Triple],
        num_entities: usize,
        num_relations: usize,
        bern: bool,
        entity_rate: usize,
        relation_rate: usize,
    ) -> Self {
        let head_prob = if bern {
            bernoulli_head_probabilities(triples, num_relations)
        } else {
            vec![0.5; num_relations]
        };
        NegativeSampler {
            num_entities,
            num_relations,
            head_prob,
            known: triples.iter().copied().collect(),
            entity_rate,
            relation_rate,
        }
    }

    pub fn head_probability(&self, r: RelationId) -> f64 {
        self.head_prob[r.index()]
    }

    pub fn is_known(&self, t: &Triple) -> bool {
        self.known.contains(t)
    }

    /// `entity_rate` entity corruptions followed by `relation_rate` relation
    /// corruptions of `pos`. A corruption that keeps hitting known triples is
    /// dropped after a bounded number of redraws.
    pub fn corrupt<R: Rng>(&self, pos: Triple, rng: &mut R) -> Vec<Triple> {
        let mut out = Vec::with_capacity(self.entity_rate + self.relation_rate);
        for _ in 0..self.entity_rate {
            let replace_head = rng.random::<f64>() < self.head_prob[pos.relation.index()];
            for _ in 0..MAX_TRIES {
                let e = EntityId(rng.random_range(0..self.num_entities) as u32);
                let cand = if replace_head {
                    Triple::new(e, pos.relation, pos.tail)
                } else {
                    Triple::new(pos.head, pos.relation, e)
                };
                if !self.known.contains(&cand) {
                    out.push(cand);
                    break;
                }
            }
        }
        if self.num_relations > 1 {
            for _ in 0..self.relation_rate {
                for _ in 0..MAX_TRIES {
                    let r = RelationId(rng.random_range(0..self.num_relations) as u32);
                    let cand = Triple::new(pos.head, r, pos.tail);
                    if !self.known.contains(&cand) {
                        out.push(cand);
                        break;
                    }
                }
            }
        }
        out
    }
}

fn bernoulli_head_probabilities(triples: &[Triple], num_relations: usize) -> Vec<f64> {
    let mut tails_of: HashMap<(RelationId, EntityId), usize> = HashMap::new();
    let mut heads_of: HashMap<(RelationId, EntityId), usize> = HashMap::new();
    for t in triples {
        *tails_of.entry((t.relation, t.head)).or_default() += 1;
        *heads_of.entry((t.relation, t.tail)).or_default() += 1;
    }
    let mut n_triples = vec![0usize; num_relations];
    let mut n_heads = vec![0usize; num_relations];
    let mut n_tails = vec![0usize; num_relations];
    for t in triples {
        n_triples[t.relation.index()] += 1;
    }
    for (r, _) in tails_of.keys() {
        n_heads[r.index()] += 1;
    }
    for (r, _) in heads_of.keys() {
        n_tails[r.index()] += 1;
    }
    (0..num_relations)
        .map(|r| {
            if n_triples[r] == 0 {
                return 0.5;
            }
            let tph = n_triples[r] as f64 / n_heads[r] as f64;
            let hpt = n_triples[r] as f64 / n_tails[r] as f64;
            tph / (tph + hpt)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(EntityId(h), RelationId(r), EntityId(tl))
    }

    #[test]
    fn corruptions_never_match_known_triples() {
        let triples: Vec<Triple> = (0..20).map(|i| t(i % 5, i % 2, (i * 3) % 7)).collect();
        let s = NegativeSampler::new(&triples, 8, 2, true, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            for pos in &triples {
                for neg in s.corrupt(*pos, &mut rng) {
                    assert!(!s.is_known(&neg));
                    let same_ends = (neg.head == pos.head) as u8 + (neg.tail == pos.tail) as u8 + (neg.relation == pos.relation) as u8;
                    assert_eq!(same_ends, 2, "exactly one slot is corrupted");
                }
            }
        }
    }

    #[test]
    fn one_to_many_relation_prefers_head_corruption() {
        // one head, many tails: tph = 4, hpt = 1
        let triples: Vec<Triple> = (1..5).map(|i| t(0, 0, i)).collect();
        let s = NegativeSampler::new(&triples, 6, 1, true, 1, 0);
        assert!((s.head_probability(RelationId(0)) - 0.8).abs() < 1e-12);
        let u = NegativeSampler::new(&triples, 6, 1, false, 1, 0);
        assert_eq!(u.head_probability(RelationId(0)), 0.5);
    }

    #[test]
    fn saturated_slot_is_skipped() {
        // every (0, r, x) is known so tail corruption cannot succeed
        let triples: Vec<Triple> = (0..2).map(|i| t(0, 0, i)).collect();
        let s = NegativeSampler::new(&triples, 2, 1, false, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            for n in s.corrupt(triples[0], &mut rng) {
                assert!(!s.is_known(&n));
            }
        }
    }
}
