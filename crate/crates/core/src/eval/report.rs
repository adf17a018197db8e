use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{hits, Denominator, RankRecord};
use crate::error::{Error, Result};

pub const HITS_KS: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitsRow {
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    /// Evaluated true associations.
    pub records: usize,
    pub queries: usize,
    /// Records that received the penalty rank.
    pub unranked: usize,
    /// Expected hits@10 of a random ordering of the same candidate lists.
    #[serde(default)]
    pub random_hits_at_10: f64,
}

impl HitsRow {
    pub fn from_records(records: &[RankRecord], denominator: Denominator) -> Result<Self> {
        let mut queries: Vec<_> = records.iter().map(|r| r.query).collect();
        queries.sort_unstable();
        queries.dedup();
        Ok(HitsRow {
            hits_at_1: hits(records, 1, denominator)?,
            hits_at_3: hits(records, 3, denominator)?,
            hits_at_10: hits(records, 10, denominator)?,
            records: records.len(),
            queries: queries.len(),
            unranked: records.iter().filter(|r| !r.found).count(),
            random_hits_at_10: 0.0,
        })
    }

    pub fn at(&self, k: usize) -> Option<f64> {
        match k {
            1 => Some(self.hits_at_1),
            3 => Some(self.hits_at_3),
            10 => Some(self.hits_at_10),
            _ => None,
        }
    }
}

/// Hits@k nested by KG variant, method and direction, plus provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_digest: String,
    pub seeds: BTreeMap<String, u64>,
    pub results: BTreeMap<String, BTreeMap<String, BTreeMap<String, HitsRow>>>,
}

impl EvalReport {
    pub fn insert(&mut self, kg: &str, method: &str, direction: &str, row: HitsRow) {
        self.results
            .entry(kg.to_owned())
            .or_default()
            .entry(method.to_owned())
            .or_default()
            .insert(direction.to_owned(), row);
    }

    pub fn get(&self, kg: &str, method: &str, direction: &str) -> Option<&HitsRow> {
        self.results.get(kg)?.get(method)?.get(direction)
    }

    /// Every (kg, method, direction, row) in key order.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, &str, &HitsRow)> {
        self.results.iter().flat_map(|(kg, ms)| {
            ms.iter()
                .flat_map(move |(m, ds)| ds.iter().map(move |(d, r)| (kg.as_str(), m.as_str(), d.as_str(), r)))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One table per direction and k: rows are KG variants, columns methods.
    /// Missing cells are empty.
    pub fn tables(&self) -> BTreeMap<(String, usize), String> {
        let mut methods: Vec<&str> = self.rows().map(|r| r.1).collect();
        methods.sort_unstable();
        methods.dedup();
        let mut directions: Vec<&str> = self.rows().map(|r| r.2).collect();
        directions.sort_unstable();
        directions.dedup();
        let mut out = BTreeMap::new();
        for d in &directions {
            for k in HITS_KS {
                let mut t = String::from("kg");
                for m in &methods {
                    t.push('\t');
                    t.push_str(m);
                }
                t.push('\n');
                for kg in self.results.keys() {
                    t.push_str(kg);
                    for m in &methods {
                        t.push('\t');
                        if let Some(r) = self.get(kg, m, d) {
                            t.push_str(&format!("{:.3}", r.at(k).unwrap()));
                        }
                    }
                    t.push('\n');
                }
                out.insert((d.to_string(), k), t);
            }
        }
        out
    }

    /// Writes `report.json` and the flat tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        written.push(json);
        for ((d, k), t) in self.tables() {
            let p = dir.join(format!("hits_at_{k}_{d}.tsv"));
            fs::write(&p, t).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::PENALTY_RANK;
    use crate::kg::EntityId;

    fn row(ranks: &[usize]) -> HitsRow {
        let rs: Vec<RankRecord> = ranks
            .iter()
            .enumerate()
            .map(|(i, &rank)| RankRecord {
                query: EntityId(i as u32 % 2),
                truth: EntityId(i as u32),
                rank,
                found: rank != PENALTY_RANK,
            })
            .collect();
        HitsRow::from_records(&rs, Denominator::PerTruth).unwrap()
    }

    #[test]
    fn row_is_monotone() {
        let r = row(&[1, 2, 5, PENALTY_RANK]);
        assert!(r.hits_at_1 <= r.hits_at_3 && r.hits_at_3 <= r.hits_at_10);
        assert_eq!((r.records, r.queries, r.unranked), (4, 2, 1));
    }

    #[test]
    fn tables_have_kg_rows_and_method_columns() {
        let mut rep = EvalReport::default();
        rep.insert("G+H", "TransE", "gene_to_disease", row(&[1]));
        rep.insert("G+H", "RF", "gene_to_disease", row(&[4]));
        rep.insert("G", "TransE", "gene_to_disease", row(&[20]));
        let t = rep.tables();
        assert_eq!(t.len(), 3);
        assert_eq!(t[&("gene_to_disease".into(), 3)], "kg\tRF\tTransE\nG\t\t0.000\nG+H\t0.000\t1.000\n");
        let back = EvalReport::from_json(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }
}
