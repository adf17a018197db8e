use serde::{Deserialize, Serialize};

use super::model::EmbeddingModel;
use crate::error::{Error, Result};
use crate::kg::{EntityId, EntityKind, RelationId, Vocabulary};
use crate::par;

/// Which slot of `(h, r, t)` is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `(query, r, ?)`
    PredictTail,
    /// `(?, r, query)`
    PredictHead,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::PredictTail => "predict_tail",
            Direction::PredictHead => "predict_head",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRanking {
    pub query: EntityId,
    pub relation: RelationId,
    pub direction: Direction,
    /// Descending by score, ties by ascending id.
    pub candidates: Vec<(EntityId, f64)>,
}

impl CandidateRanking {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.candidates.iter().map(|&(e, _)| e)
    }
}

/// Sorts `(id, score)` pairs descending by score with ascending-id ties.
pub(crate) fn sort_desc(c: &mut [(EntityId, f64)]) {
    c.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Scores every pool member in the missing slot and sorts the result.
///
/// Duplicates in `pool` and the query itself are dropped.
pub fn rank_candidates(
    model: &EmbeddingModel,
    query: EntityId,
    relation: RelationId,
    direction: Direction,
    pool: &[EntityId],
) -> Result<CandidateRanking> {
    let mut pool: Vec<EntityId> = pool.iter().copied().filter(|&e| e != query).collect();
    pool.sort_unstable();
    pool.dedup();
    if pool.is_empty() {
        return Err(Error::InvalidArgument(format!("empty candidate pool for query {query}")));
    }
    // validates the query, the relation and the largest candidate id
    let last = *pool.last().unwrap();
    model.score(query, relation, last)?;
    let scored = par::map(&pool, |&c| {
        let s = match direction {
            Direction::PredictTail => model.score_unchecked(query, relation, c),
            Direction::PredictHead => model.score_unchecked(c, relation, query),
        };
        (c, s)
    });
    let mut candidates = scored;
    sort_desc(&mut candidates);
    Ok(CandidateRanking {
        query,
        relation,
        direction,
        candidates,
    })
}

/// Keeps the candidates of one entity kind, preserving order.
pub fn filter_by_kind(ranking: &CandidateRanking, kind: EntityKind, vocab: &Vocabulary) -> CandidateRanking {
    CandidateRanking {
        candidates: ranking
            .candidates
            .iter()
            .copied()
            .filter(|&(e, _)| vocab.contains(e) && vocab.kind(e) == kind)
            .collect(),
        ..ranking.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::ModelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> EmbeddingModel {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        EmbeddingModel::init(ModelKind::DistMult, 4, 10, 2, &mut rng)
    }

    #[test]
    fn single_candidate_is_rank_one() {
        let r = rank_candidates(&model(), EntityId(0), RelationId(0), Direction::PredictTail, &[EntityId(4)]).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.candidates[0].0, EntityId(4));
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let mut c = vec![(EntityId(3), 0.1), (EntityId(2), 0.9), (EntityId(1), 0.9)];
        sort_desc(&mut c);
        let ids: Vec<u32> = c.iter().map(|x| x.0 .0).collect();
        assert_eq!(ids, [1, 2, 3]);
    }

    #[test]
    fn empty_pool_and_query_only_pool_are_errors() {
        let m = model();
        assert!(rank_candidates(&m, EntityId(0), RelationId(0), Direction::PredictTail, &[]).is_err());
        assert!(rank_candidates(&m, EntityId(0), RelationId(0), Direction::PredictTail, &[EntityId(0)]).is_err());
        assert!(rank_candidates(&m, EntityId(0), RelationId(9), Direction::PredictTail, &[EntityId(1)]).is_err());
    }

    #[test]
    fn ranking_is_sorted_and_duplicate_free() {
        let m = model();
        let pool: Vec<EntityId> = (0..10).chain(0..10).map(EntityId).collect();
        for dir in [Direction::PredictTail, Direction::PredictHead] {
            let r = rank_candidates(&m, EntityId(2), RelationId(1), dir, &pool).unwrap();
            assert_eq!(r.len(), 9);
            assert!(r.ids().all(|e| e != EntityId(2)));
            for w in r.candidates.windows(2) {
                assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
        }
    }

    #[test]
    fn full_pool_truncated_equals_subset_ranking() {
        let m = model();
        let full: Vec<EntityId> = (0..10).map(EntityId).collect();
        let subset = [EntityId(7), EntityId(1), EntityId(5)];
        let a = rank_candidates(&m, EntityId(0), RelationId(0), Direction::PredictHead, &full).unwrap();
        let b = rank_candidates(&m, EntityId(0), RelationId(0), Direction::PredictHead, &subset).unwrap();
        let kept: Vec<_> = a.candidates.into_iter().filter(|(e, _)| subset.contains(e)).collect();
        assert_eq!(kept, b.candidates);
    }

    #[test]
    fn kind_filter_is_an_idempotent_subsequence() {
        let mut v = Vocabulary::new();
        let d1 = v.entity("d1", EntityKind::Disease).unwrap();
        let g1 = v.entity("g1", EntityKind::Gene).unwrap();
        let d2 = v.entity("d2", EntityKind::Disease).unwrap();
        let r = CandidateRanking {
            query: g1,
            relation: RelationId(0),
            direction: Direction::PredictTail,
            candidates: vec![(d1, 3.0), (g1, 2.0), (d2, 1.0)],
        };
        let f = filter_by_kind(&r, EntityKind::Disease, &v);
        assert_eq!(f.ids().collect::<Vec<_>>(), [d1, d2]);
        assert_eq!(filter_by_kind(&f, EntityKind::Disease, &v), f);
        assert!(filter_by_kind(&r, EntityKind::OntologyClass, &v).is_empty());
    }
}
