//! Negative pair generation and the stratified train/test partition shared by
//! both prediction tasks.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, EntityKind, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_int(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GdaPair {
    pub gene: EntityId,
    pub disease: EntityId,
    pub label: Label,
}

impl GdaPair {
    pub fn positive(gene: EntityId, disease: EntityId) -> Self {
        GdaPair {
            gene,
            disease,
            label: Label::Positive,
        }
    }

    pub fn negative(gene: EntityId, disease: EntityId) -> Self {
        GdaPair {
            gene,
            disease,
            label: Label::Negative,
        }
    }

    pub fn key(&self) -> (EntityId, EntityId) {
        (self.gene, self.disease)
    }

    pub fn is_positive(&self) -> bool {
        self.label == Label::Positive
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train_pos: Vec<GdaPair>,
    pub train_neg: Vec<GdaPair>,
    pub test_pos: Vec<GdaPair>,
    pub test_neg: Vec<GdaPair>,
    pub seed: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
}

impl SplitDataset {
    pub fn all(&self) -> impl Iterator<Item = &GdaPair> {
        self.train_pos
            .iter()
            .chain(&self.train_neg)
            .chain(&self.test_pos)
            .chain(&self.test_neg)
    }

    pub fn train(&self) -> impl Iterator<Item = &GdaPair> {
        self.train_pos.iter().chain(&self.train_neg)
    }

    pub fn test(&self) -> impl Iterator<Item = &GdaPair> {
        self.test_pos.iter().chain(&self.test_neg)
    }

    pub fn counts(&self) -> SplitCounts {
        SplitCounts {
            train_pos: self.train_pos.len(),
            train_neg: self.train_neg.len(),
            test_pos: self.test_pos.len(),
            test_neg: self.test_neg.len(),
        }
    }
}

fn sorted_unique(it: impl Iterator<Item = EntityId>) -> Vec<EntityId> {
    let mut v: Vec<EntityId> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Draws `count` distinct negative pairs uniformly from the cross product of
/// the genes and diseases occurring in `positives`, excluding every positive.
pub fn generate_negatives(positives: &[GdaPair], count: usize, seed: u64) -> Result<Vec<GdaPair>> {
    let genes: Vec<EntityId> = positives.iter().map(|p| p.gene).collect();
    let diseases: Vec<EntityId> = positives.iter().map(|p| p.disease).collect();
    generate_negatives_over(positives, &genes, &diseases, count, seed)
}

/// Like [`generate_negatives`] but over explicit gene and disease universes.
pub fn generate_negatives_over(
    positives: &[GdaPair],
    genes: &[EntityId],
    diseases: &[EntityId],
    count: usize,
    seed: u64,
) -> Result<Vec<GdaPair>> {
    let genes = sorted_unique(genes.iter().copied());
    let diseases = sorted_unique(diseases.iter().copied());
    let gene_set: HashSet<_> = genes.iter().collect();
    let disease_set: HashSet<_> = diseases.iter().collect();
    let known: HashSet<(EntityId, EntityId)> = positives
        .iter()
        .map(GdaPair::key)
        .filter(|(g, d)| gene_set.contains(g) && disease_set.contains(d))
        .collect();
    let total = genes.len() * diseases.len();
    let feasible = total - known.len();
    if count > feasible {
        return Err(Error::Infeasible(format!(
            "requested {count} negatives, at most {feasible} are available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count == 0 {
        return Ok(Vec::new());
    }
    if count * 2 <= feasible {
        let mut chosen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let g = genes[rng.random_range(0..genes.len())];
            let d = diseases[rng.random_range(0..diseases.len())];
            if known.contains(&(g, d)) || !chosen.insert((g, d)) {
                continue;
            }
            out.push(GdaPair::negative(g, d));
        }
        Ok(out)
    } else {
        // dense regime: enumerate the complement and sample without replacement
        let complement: Vec<(EntityId, EntityId)> = genes
            .iter()
            .flat_map(|&g| diseases.iter().map(move |&d| (g, d)))
            .filter(|k| !known.contains(k))
            .collect();
        Ok(rand::seq::index::sample(&mut rng, complement.len(), count)
            .into_iter()
            .map(|i| GdaPair::negative(complement[i].0, complement[i].1))
            .collect())
    }
}

fn cut_point(n: usize, fraction: f64) -> usize {
    // the epsilon keeps products like 0.7 * 10 from flooring to 6
    (((fraction * n as f64) + 1e-9).floor() as usize).min(n)
}

/// Shuffles positives and negatives independently under `seed` and cuts each
/// stratum at `floor(fraction * n)`.
pub fn split(pairs: &[GdaPair], fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut pos: Vec<GdaPair> = pairs.iter().copied().filter(GdaPair::is_positive).collect();
    let mut neg: Vec<GdaPair> = pairs.iter().copied().filter(|p| !p.is_positive()).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "both strata must be non-empty ({} positives, {} negatives)",
            pos.len(),
            neg.len()
        )));
    }
    let pos_keys: HashSet<_> = pos.iter().map(GdaPair::key).collect();
    if let Some(p) = neg.iter().find(|p| pos_keys.contains(&p.key())) {
        return Err(Error::Inconsistent(format!(
            "pair ({}, {}) is labelled both positive and negative",
            p.gene, p.disease
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let test_pos = pos.split_off(cut_point(pos.len(), fraction));
    let test_neg = neg.split_off(cut_point(neg.len(), fraction));
    Ok(SplitDataset {
        train_pos: pos,
        train_neg: neg,
        test_pos,
        test_neg,
        seed,
        fraction,
    })
}

fn parse_label(s: &str) -> Option<Label> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "positive" | "pos" | "true" => Some(Label::Positive),
        "0" | "negative" | "neg" | "false" => Some(Label::Negative),
        _ => None,
    }
}

/// Reads `gene<TAB>disease[<TAB>label]` lines. A missing label means positive.
pub fn load_pairs(path: &Path, vocab: &mut Vocabulary) -> Result<Vec<GdaPair>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (g, d, label) = match fields.as_slice() {
            [g, d] => (*g, *d, Label::Positive),
            [g, d, l] => (
                *g,
                *d,
                parse_label(l).ok_or_else(|| Error::parse(path, i + 1, format!("bad label `{l}`")))?,
            ),
            _ => return Err(Error::parse(path, i + 1, "expected `gene<TAB>disease[<TAB>label]`")),
        };
        let gene = vocab.entity(g, EntityKind::Gene)?;
        let disease = vocab.entity(d, EntityKind::Disease)?;
        out.push(GdaPair { gene, disease, label });
    }
    Ok(out)
}

fn write_pairs(path: &Path, pairs: &[GdaPair], vocab: &Vocabulary) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}",
            vocab.entity_name(p.gene),
            vocab.entity_name(p.disease),
            p.label.as_int()
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct SplitSidecar {
    seed: u64,
    fraction: f64,
    counts: SplitCounts,
}

pub const SPLIT_SIDECAR: &str = "split.json";
const STRATA: [&str; 4] = ["train_pos.tsv", "train_neg.tsv", "test_pos.tsv", "test_neg.tsv"];

/// Writes the four stratum files and the JSON sidecar into `dir`.
pub fn save_split(dir: &Path, split: &SplitDataset, vocab: &Vocabulary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let strata = [&split.train_pos, &split.train_neg, &split.test_pos, &split.test_neg];
    for (name, pairs) in STRATA.iter().zip(strata) {
        write_pairs(&dir.join(name), pairs, vocab)?;
    }
    let sidecar = SplitSidecar {
        seed: split.seed,
        fraction: split.fraction,
        counts: split.counts(),
    };
    let path = dir.join(SPLIT_SIDECAR);
    fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|e| Error::io(&path, e))
}

/// Loads a split persisted by [`save_split`], resolving names in `vocab`.
pub fn load_split(dir: &Path, vocab: &mut Vocabulary) -> Result<SplitDataset> {
    let path = dir.join(SPLIT_SIDECAR);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let sidecar: SplitSidecar = serde_json::from_str(&text)?;
    let mut strata = Vec::with_capacity(4);
    for name in STRATA {
        strata.push(load_pairs(&dir.join(name), vocab)?);
    }
    let [train_pos, train_neg, test_pos, test_neg]: [Vec<GdaPair>; 4] =
        strata.try_into().expect("four strata");
    let split = SplitDataset {
        train_pos,
        train_neg,
        test_pos,
        test_neg,
        seed: sidecar.seed,
        fraction: sidecar.fraction,
    };
    if split.counts() != sidecar.counts {
        return Err(Error::Format(format!(
            "{}: stratum sizes do not match the sidecar counts",
            dir.display()
        )));
    }
    Ok(split)
}
