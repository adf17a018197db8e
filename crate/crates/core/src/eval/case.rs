use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::UnifiedRanking;
use crate::error::{Error, Result};
use crate::kg::{EntityId, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub truth: EntityId,
    /// One cell per method; `None` when the method did not rank the truth.
    pub ranks: Vec<Option<usize>>,
}

/// Ranks of one query's true associations under several methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub query: EntityId,
    pub methods: Vec<String>,
    pub rows: Vec<CaseRow>,
}

/// Rows follow the first method's ranks, unranked truths last, ties by id.
pub fn case_study(query: EntityId, methods: &[UnifiedRanking], truths: &[EntityId]) -> Result<CaseStudy> {
    if let Some(m) = methods.iter().find(|m| m.query != query) {
        return Err(Error::Inconsistent(format!(
            "method `{}` ranks for {} rather than {query}",
            m.method, m.query
        )));
    }
    let truths: BTreeSet<EntityId> = truths.iter().copied().collect();
    let mut rows: Vec<CaseRow> = truths
        .into_iter()
        .map(|t| CaseRow {
            truth: t,
            ranks: methods.iter().map(|m| m.position(t)).collect(),
        })
        .collect();
    rows.sort_by_key(|r| (r.ranks.first().copied().flatten().unwrap_or(usize::MAX), r.truth));
    Ok(CaseStudy {
        query,
        methods: methods.iter().map(|m| m.method.clone()).collect(),
        rows,
    })
}

impl CaseStudy {
    /// Header `entity` plus one column per method; "-" marks an unranked truth.
    pub fn to_tsv(&self, vocab: &Vocabulary) -> String {
        let mut out = String::from("entity");
        for m in &self.methods {
            out.push('\t');
            out.push_str(m);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(vocab.entity_name(r.truth));
            for c in &r.ranks {
                out.push('\t');
                match c {
                    Some(k) => out.push_str(&k.to_string()),
                    None => out.push('-'),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Direction;
    use crate::eval::Source;
    use crate::kg::EntityKind;

    fn ranking(method: &str, ids: &[EntityId]) -> UnifiedRanking {
        UnifiedRanking {
            query: EntityId(0),
            direction: Direction::PredictTail,
            candidates: ids.iter().map(|&e| (e, 0.0)).collect(),
            source: Source::LinkPrediction,
            method: method.into(),
        }
    }

    #[test]
    fn missing_truth_renders_as_dash() {
        let mut v = crate::kg::Vocabulary::new();
        let g = v.entity("g", EntityKind::Gene).unwrap();
        let d1 = v.entity("d1", EntityKind::Disease).unwrap();
        let d2 = v.entity("d2", EntityKind::Disease).unwrap();
        let a = ranking("A", &[d2, d1]);
        let b = ranking("B", &[d1]);
        let cs = case_study(g, &[a, b], &[d1, d2]).unwrap();
        assert_eq!(cs.rows.len(), 2);
        assert_eq!(cs.to_tsv(&v), "entity\tA\tB\nd2\t1\t-\nd1\t2\t1\n");
    }

    #[test]
    fn foreign_query_is_rejected() {
        let mut r = ranking("A", &[]);
        r.query = EntityId(4);
        assert!(case_study(EntityId(0), &[r], &[EntityId(1)]).is_err());
    }
}
