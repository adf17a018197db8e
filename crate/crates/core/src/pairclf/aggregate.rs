use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::split::GdaPair;
use crate::walker::EntityEmbeddingTable;

/// How a gene vector and a disease vector become one pair feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationOp {
    Concatenation,
    Average,
    Hadamard,
    WeightedL1,
    WeightedL2,
}

impl AggregationOp {
    pub const ALL: [AggregationOp; 5] = [
        AggregationOp::Concatenation,
        AggregationOp::Average,
        AggregationOp::Hadamard,
        AggregationOp::WeightedL1,
        AggregationOp::WeightedL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationOp::Concatenation => "concatenation",
            AggregationOp::Average => "average",
            AggregationOp::Hadamard => "hadamard",
            AggregationOp::WeightedL1 => "weighted_l1",
            AggregationOp::WeightedL2 => "weighted_l2",
        }
    }

    pub fn output_len(self, dim: usize) -> usize {
        match self {
            AggregationOp::Concatenation => 2 * dim,
            _ => dim,
        }
    }
}

impl fmt::Display for AggregationOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|op| op.name() == norm).ok_or_else(|| Error::Unknown {
            what: "aggregation",
            name: s.to_owned(),
        })
    }
}

pub fn aggregate(op: AggregationOp, g: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    if g.len() != d.len() {
        return Err(Error::InvalidArgument(format!(
            "gene vector has length {}, disease vector {}",
            g.len(),
            d.len()
        )));
    }
    let zip = g.iter().zip(d);
    Ok(match op {
        AggregationOp::Concatenation => g.iter().chain(d).copied().collect(),
        AggregationOp::Average => zip.map(|(a, b)| (a + b) / 2.0).collect(),
        AggregationOp::Hadamard => zip.map(|(a, b)| a * b).collect(),
        AggregationOp::WeightedL1 => zip.map(|(a, b)| (a - b).abs()).collect(),
        AggregationOp::WeightedL2 => zip.map(|(a, b)| (a - b) * (a - b)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub pair: GdaPair,
    pub vector: Vec<f64>,
    pub op: AggregationOp,
}

/// Features of every pair, in input order.
pub fn build_features(pairs: &[GdaPair], table: &EntityEmbeddingTable, op: AggregationOp) -> Result<Vec<PairFeatures>> {
    pairs
        .iter()
        .map(|p| {
            let lookup = |e| {
                table.get(e).ok_or_else(|| Error::Unknown {
                    what: "embedded entity",
                    name: e.to_string(),
                })
            };
            Ok(PairFeatures {
                pair: *p,
                vector: aggregate(op, lookup(p.gene)?, lookup(p.disease)?)?,
                op,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_examples() {
        assert_eq!(aggregate(AggregationOp::Hadamard, &[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), [4.0, 10.0, 18.0]);
        assert_eq!(aggregate(AggregationOp::Average, &[1.5, -2.0], &[1.5, -2.0]).unwrap(), [1.5, -2.0]);
        assert_eq!(aggregate(AggregationOp::WeightedL2, &[1.0, 0.0], &[4.0, 4.0]).unwrap(), [9.0, 16.0]);
        assert_eq!(aggregate(AggregationOp::WeightedL1, &[1.0, 0.0], &[4.0, 4.0]).unwrap(), [3.0, 4.0]);
        assert_eq!(aggregate(AggregationOp::Concatenation, &[1.0], &[2.0]).unwrap(), [1.0, 2.0]);
        assert!(aggregate(AggregationOp::Hadamard, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn names_round_trip() {
        for op in AggregationOp::ALL {
            assert_eq!(op.name().parse::<AggregationOp>().unwrap(), op);
        }
        assert_eq!("Weighted-L1".parse::<AggregationOp>().unwrap(), AggregationOp::WeightedL1);
    }

    proptest! {
        #[test]
        fn symmetry_and_length(v in (1usize..32).prop_flat_map(|d| (
            proptest::collection::vec(-5.0f64..5.0, d),
            proptest::collection::vec(-5.0f64..5.0, d),
        ))) {
            let (g, d) = v;
            for op in AggregationOp::ALL {
                let a = aggregate(op, &g, &d).unwrap();
                prop_assert_eq!(a.len(), op.output_len(g.len()));
                prop_assert!(a.iter().all(|x| x.is_finite()));
                if op != AggregationOp::Concatenation {
                    prop_assert_eq!(a, aggregate(op, &d, &g).unwrap());
                }
            }
        }
    }
}
