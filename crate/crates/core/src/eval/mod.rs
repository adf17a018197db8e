//! Rank-based evaluation shared by both prediction families.
//!
//! Link-prediction rankings and classifier probabilities are turned into one
//! candidate-list format restricted to test-set entities. True associations
//! missing from a list get a fixed penalty rank.

mod case;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::embed::{CandidateRanking, Direction};
use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::pairclf::Prediction;
use crate::split::GdaPair;

pub use case::{case_study, CaseRow, CaseStudy};
pub use report::{EvalReport, HitsRow, HITS_KS};

/// Rank given to a true association absent from the candidate list.
pub const PENALTY_RANK: usize = 1000;

/// Association edges point gene → disease, so predicting the tail of a gene
/// query ranks diseases.
pub fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::PredictTail => "gene_to_disease",
        Direction::PredictHead => "disease_to_gene",
    }
}

pub fn parse_direction(s: &str) -> Result<Direction> {
    match s.to_ascii_lowercase().replace(['-', '>'], "_").as_str() {
        "gene_to_disease" | "gene__disease" | "predict_tail" | "tail" => Ok(Direction::PredictTail),
        "disease_to_gene" | "disease__gene" | "predict_head" | "head" => Ok(Direction::PredictHead),
        _ => Err(Error::Unknown {
            what: "direction",
            name: s.to_owned(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    LinkPrediction,
    NodePairClassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedRanking {
    pub query: EntityId,
    pub direction: Direction,
    /// Descending likelihood, duplicate-free.
    pub candidates: Vec<(EntityId, f64)>,
    pub source: Source,
    pub method: String,
}

impl UnifiedRanking {
    pub fn position(&self, e: EntityId) -> Option<usize> {
        self.candidates.iter().position(|&(c, _)| c == e).map(|p| p + 1)
    }

    /// Keeps the first `k` candidates.
    pub fn truncate(mut self, k: usize) -> Self {
        self.candidates.truncate(k);
        self
    }
}

/// Order-preserving restriction of a link-prediction ranking to test entities.
pub fn unify_lp(ranking: &CandidateRanking, test_entities: &HashSet<EntityId>, method: &str) -> UnifiedRanking {
    UnifiedRanking {
        query: ranking.query,
        direction: ranking.direction,
        candidates: ranking
            .candidates
            .iter()
            .copied()
            .filter(|(e, _)| test_entities.contains(e))
            .collect(),
        source: Source::LinkPrediction,
        method: method.to_owned(),
    }
}

fn partner(p: &GdaPair, query: EntityId, direction: Direction) -> Option<EntityId> {
    match direction {
        Direction::PredictTail => (p.gene == query).then_some(p.disease),
        Direction::PredictHead => (p.disease == query).then_some(p.gene),
    }
}

/// Every test partner of `query`, by `p_pos` descending and id ascending.
pub fn unify_clf(predictions: &[Prediction], query: EntityId, direction: Direction, method: &str) -> Result<UnifiedRanking> {
    let mut candidates: Vec<(EntityId, f64)> = predictions
        .iter()
        .filter_map(|p| partner(&p.pair, query, direction).map(|e| (e, p.p_pos)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::Unknown {
            what: "query in predictions",
            name: query.to_string(),
        });
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    candidates.dedup_by_key(|c| c.0);
    Ok(UnifiedRanking {
        query,
        direction,
        candidates,
        source: Source::NodePairClassification,
        method: method.to_owned(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRecord {
    pub query: EntityId,
    pub truth: EntityId,
    pub rank: usize,
    pub found: bool,
}

/// One record per distinct truth, in ascending id order.
pub fn extract_ranks(ranking: &UnifiedRanking, truths: &[EntityId]) -> Vec<RankRecord> {
    let truths: BTreeSet<EntityId> = truths.iter().copied().collect();
    truths
        .into_iter()
        .map(|t| match ranking.position(t) {
            Some(rank) => RankRecord {
                query: ranking.query,
                truth: t,
                rank,
                found: true,
            },
            None => RankRecord {
                query: ranking.query,
                truth: t,
                rank: PENALTY_RANK,
                found: false,
            },
        })
        .collect()
}

/// Fraction of records ranked within the top `k`.
pub fn hits_at_k(records: &[RankRecord], k: usize) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("hits@k of an empty record set".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(records.iter().filter(|r| r.rank <= k).count() as f64 / records.len() as f64)
}

/// Per-query hit fraction averaged over queries, the alternative reading of
/// the denominator.
pub fn hits_at_k_per_query(records: &[RankRecord], k: usize) -> Result<f64> {
    hits_at_k(records, k)?;
    let mut per: BTreeMap<EntityId, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = per.entry(r.query).or_default();
        e.0 += (r.rank <= k) as usize;
        e.1 += 1;
    }
    Ok(per.values().map(|&(h, n)| h as f64 / n as f64).sum::<f64>() / per.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// One indicator per true association.
    #[default]
    PerTruth,
    PerQuery,
}

pub fn hits(records: &[RankRecord], k: usize, d: Denominator) -> Result<f64> {
    match d {
        Denominator::PerTruth => hits_at_k(records, k),
        Denominator::PerQuery => hits_at_k_per_query(records, k),
    }
}

/// Expected hits@k of a uniformly random ordering, given the candidate-list
/// length seen by each record.
pub fn random_hits_at_k(list_lengths: &[usize], k: usize) -> f64 {
    if list_lengths.is_empty() {
        return 0.0;
    }
    list_lengths
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { k.min(n) as f64 / n as f64 })
        .sum::<f64>()
        / list_lengths.len() as f64
}

/// Evaluation queries of one direction: each test entity on the query side
/// mapped to its positive test partners. Entities with only negative pairs
/// have no truths and are left out.
pub fn test_truths(test: &[GdaPair], direction: Direction) -> BTreeMap<EntityId, Vec<EntityId>> {
    let mut out: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for p in test.iter().filter(|p| p.is_positive()) {
        let (q, t) = match direction {
            Direction::PredictTail => (p.gene, p.disease),
            Direction::PredictHead => (p.disease, p.gene),
        };
        out.entry(q).or_default().push(t);
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    out
}

/// Test-set entities on the candidate side of `direction`.
pub fn test_candidates(test: &[GdaPair], direction: Direction) -> HashSet<EntityId> {
    test.iter()
        .map(|p| match direction {
            Direction::PredictTail => p.disease,
            Direction::PredictHead => p.gene,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::RelationId;
    use crate::split::Label;

    fn e(i: u32) -> EntityId {
        EntityId(i)
    }

    fn ranking(ids: &[u32]) -> UnifiedRanking {
        UnifiedRanking {
            query: e(100),
            direction: Direction::PredictTail,
            candidates: ids.iter().enumerate().map(|(k, &i)| (e(i), -(k as f64))).collect(),
            source: Source::LinkPrediction,
            method: "m".into(),
        }
    }

    fn rec(rank: usize) -> RankRecord {
        RankRecord {
            query: e(0),
            truth: e(rank as u32),
            rank,
            found: rank != PENALTY_RANK,
        }
    }

    #[test]
    fn unify_lp_keeps_order() {
        let cr = CandidateRanking {
            query: e(0),
            relation: RelationId(0),
            direction: Direction::PredictTail,
            candidates: vec![(e(5), 3.0), (e(9), 2.0), (e(2), 1.0)],
        };
        let test: HashSet<_> = [e(2), e(9)].into();
        let u = unify_lp(&cr, &test, "TransE");
        assert_eq!(u.candidates, [(e(9), 2.0), (e(2), 1.0)]);
        assert!(unify_lp(&cr, &HashSet::from([e(77)]), "x").candidates.is_empty());
        let again = unify_lp(
            &CandidateRanking {
                candidates: u.candidates.clone(),
                ..cr
            },
            &test,
            "TransE",
        );
        assert_eq!(again, u);
    }

    #[test]
    fn unify_clf_orders_by_probability_then_id() {
        let p = |d: u32, pp: f64| Prediction {
            pair: GdaPair {
                gene: e(0),
                disease: e(d),
                label: Label::Negative,
            },
            p_neg: 1.0 - pp,
            p_pos: pp,
        };
        let preds = [p(2, 0.2), p(1, 0.9), p(7, 0.5), p(3, 0.5)];
        let u = unify_clf(&preds, e(0), Direction::PredictTail, "clf").unwrap();
        assert_eq!(u.candidates.iter().map(|c| c.0 .0).collect::<Vec<_>>(), [1, 3, 7, 2]);
        assert_eq!(u.candidates.len(), preds.len());
        assert!(unify_clf(&preds, e(9), Direction::PredictTail, "clf").is_err());
        let heads = unify_clf(&preds, e(7), Direction::PredictHead, "clf").unwrap();
        assert_eq!(heads.candidates, [(e(0), 0.5)]);
    }

    #[test]
    fn ranks_with_penalty() {
        let r = ranking(&[1, 2, 3]);
        assert_eq!(extract_ranks(&r, &[e(2)])[0].rank, 2);
        let miss = extract_ranks(&r, &[e(9)]);
        assert_eq!((miss[0].rank, miss[0].found), (PENALTY_RANK, false));
        let both: Vec<usize> = extract_ranks(&r, &[e(3), e(1)]).iter().map(|x| x.rank).collect();
        assert_eq!(both, [1, 3]);
    }

    #[test]
    fn hits_examples() {
        let rs = [rec(1), rec(4), rec(PENALTY_RANK)];
        assert!((hits_at_k(&rs, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(hits_at_k(&[rec(1), rec(1)], 1).unwrap(), 1.0);
        assert_eq!(hits_at_k(&[rec(PENALTY_RANK)], 10).unwrap(), 0.0);
        assert_eq!(hits_at_k(&[rec(PENALTY_RANK)], 999).unwrap(), 0.0);
        assert!(hits_at_k(&[], 1).is_err());
        assert!(hits_at_k(&rs, 0).is_err());
    }

    #[test]
    fn per_query_denominator_weights_queries_equally() {
        let mut rs = vec![rec(1), rec(1), rec(1)];
        rs.push(RankRecord {
            query: e(1),
            truth: e(1),
            rank: 50,
            found: true,
        });
        assert_eq!(hits(&rs, 1, Denominator::PerTruth).unwrap(), 0.75);
        assert_eq!(hits(&rs, 1, Denominator::PerQuery).unwrap(), 0.5);
    }

    #[test]
    fn random_baseline() {
        assert_eq!(random_hits_at_k(&[20, 5], 10), (0.5 + 1.0) / 2.0);
    }

    #[test]
    fn truths_and_candidates_from_test_pairs() {
        let test = [
            GdaPair::positive(e(0), e(10)),
            GdaPair::positive(e(0), e(11)),
            GdaPair::negative(e(1), e(12)),
        ];
        let t = test_truths(&test, Direction::PredictTail);
        assert_eq!(t.len(), 1);
        assert_eq!(t[&e(0)], [e(10), e(11)]);
        assert_eq!(test_candidates(&test, Direction::PredictTail).len(), 3);
        assert_eq!(test_truths(&test, Direction::PredictHead)[&e(10)], [e(0)]);
    }

    #[test]
    fn direction_names_parse() {
        for d in [Direction::PredictTail, Direction::PredictHead] {
            assert_eq!(parse_direction(direction_label(d)).unwrap(), d);
        }
        assert_eq!(parse_direction("gene->disease").unwrap(), Direction::PredictTail);
    }
}
