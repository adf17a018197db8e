//! Planted-structure toy dataset.
//!
//! Genes and diseases are grouped in blocks. Each block owns a subtree in both
//! mini-ontologies, its genes and diseases are annotated inside those
//! subtrees, and every association stays within its block, so a predictor
//! that recovers the block structure ranks true partners first.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub blocks: usize,
    pub genes_per_block: usize,
    pub diseases_per_block: usize,
    /// Classes per mini-ontology, root included.
    pub classes_per_ontology: usize,
    /// Leading classes of each block subtree used for annotations.
    pub core_classes: usize,
    pub annotations_per_entity: usize,
    /// Extra annotations drawn from anywhere in the ontology.
    pub noise_annotations: usize,
    pub positives_per_gene: usize,
    pub logical_definitions_per_block: usize,
    pub mappings_per_block: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            blocks: 10,
            genes_per_block: 6,
            diseases_per_block: 4,
            classes_per_ontology: 200,
            core_classes: 6,
            annotations_per_entity: 4,
            noise_annotations: 1,
            positives_per_gene: 2,
            logical_definitions_per_block: 3,
            mappings_per_block: 2,
            seed: 7,
        }
    }
}

/// Paths of the files written by [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub go: PathBuf,
    pub hp: PathBuf,
    pub go_genes: PathBuf,
    pub hp_genes: PathBuf,
    pub hp_diseases: PathBuf,
    pub logical_definitions: PathBuf,
    pub mappings: PathBuf,
    pub pairs: PathBuf,
}

struct Ontology {
    names: Vec<String>,
    /// `(child, parent)` index pairs.
    edges: Vec<(usize, usize)>,
    /// Class indices of each block subtree; the block root comes first.
    blocks: Vec<Vec<usize>>,
}

fn ontology<R: Rng>(prefix: &str, cfg: &SynthConfig, rng: &mut R) -> Result<Ontology> {
    let per_block = (cfg.classes_per_ontology - 1) / cfg.blocks;
    if per_block < cfg.core_classes.max(2) {
        return Err(Error::InvalidArgument(format!(
            "{} classes cannot hold {} blocks of at least {} classes",
            cfg.classes_per_ontology,
            cfg.blocks,
            cfg.core_classes.max(2)
        )));
    }
    let names: Vec<String> = (0..cfg.classes_per_ontology).map(|i| format!("{prefix}_{i:07}")).collect();
    let mut edges = Vec::new();
    let mut blocks = Vec::new();
    let mut next = 1;
    for _ in 0..cfg.blocks {
        let root = next;
        edges.push((root, 0));
        let mut members = vec![root];
        for c in next + 1..next + per_block {
            let parent = *members.choose(rng).expect("non-empty");
            edges.push((c, parent));
            members.push(c);
        }
        next += per_block;
        blocks.push(members);
    }
    // leftover classes hang off the root
    for c in next..cfg.classes_per_ontology {
        edges.push((c, 0));
    }
    Ok(Ontology { names, edges, blocks })
}

fn draw<'a, R: Rng>(pool: &'a [usize], n: usize, rng: &mut R) -> Vec<&'a usize> {
    let mut v: Vec<&usize> = pool.choose_multiple(rng, n).collect();
    v.sort();
    v
}

/// Writes the toy dataset and a matching experiment config into `dir`.
pub fn generate(dir: &Path, cfg: &SynthConfig) -> Result<SynthFiles> {
    if cfg.blocks == 0 || cfg.genes_per_block == 0 || cfg.diseases_per_block == 0 {
        return Err(Error::InvalidArgument("blocks, genes and diseases must be positive".into()));
    }
    if cfg.positives_per_gene == 0 || cfg.positives_per_gene > cfg.diseases_per_block {
        return Err(Error::InvalidArgument("positives_per_gene must lie in 1..=diseases_per_block".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let go = ontology("GO", cfg, &mut rng)?;
    let hp = ontology("HP", cfg, &mut rng)?;
    let all_go: Vec<usize> = (1..go.names.len()).collect();
    let all_hp: Vec<usize> = (1..hp.names.len()).collect();
    let core = |o: &Ontology, b: usize| o.blocks[b][..cfg.core_classes.min(o.blocks[b].len())].to_vec();

    let mut go_txt = String::new();
    let mut hp_txt = String::new();
    for (o, txt) in [(&go, &mut go_txt), (&hp, &mut hp_txt)] {
        for &(c, p) in &o.edges {
            writeln!(txt, "{}\tsubClassOf\t{}", o.names[c], o.names[p]).unwrap();
        }
    }

    let mut go_genes = String::new();
    let mut hp_genes = String::new();
    let mut hp_diseases = String::new();
    let mut pairs = String::new();
    let mut ld = String::new();
    let mut map = String::new();
    for b in 0..cfg.blocks {
        let (go_core, hp_core) = (core(&go, b), core(&hp, b));
        let diseases: Vec<String> = (0..cfg.diseases_per_block)
            .map(|i| format!("disease/C{:07}", b * cfg.diseases_per_block + i))
            .collect();
        for d in &diseases {
            let mut terms: Vec<&str> = draw(&hp_core, cfg.annotations_per_entity, &mut rng)
                .into_iter()
                .map(|&c| hp.names[c].as_str())
                .collect();
            terms.extend(draw(&all_hp, cfg.noise_annotations, &mut rng).into_iter().map(|&c| hp.names[c].as_str()));
            writeln!(hp_diseases, "{d}\t{}", terms.join(" ")).unwrap();
        }
        // every disease of the block gets at least one gene
        let mut order: Vec<usize> = (0..cfg.diseases_per_block).collect();
        order.shuffle(&mut rng);
        for i in 0..cfg.genes_per_block {
            let g = format!("gene/{}", 1000 + b * cfg.genes_per_block + i);
            let go_terms: Vec<&str> = draw(&go_core, cfg.annotations_per_entity, &mut rng)
                .into_iter()
                .chain(draw(&all_go, cfg.noise_annotations, &mut rng))
                .map(|&c| go.names[c].as_str())
                .collect();
            writeln!(go_genes, "{g}\t{}", go_terms.join(" ")).unwrap();
            let hp_terms: Vec<&str> = draw(&hp_core, cfg.annotations_per_entity / 2 + 1, &mut rng)
                .into_iter()
                .map(|&c| hp.names[c].as_str())
                .collect();
            writeln!(hp_genes, "{g}\t{}", hp_terms.join(" ")).unwrap();
            let mut chosen = vec![order[i % order.len()]];
            let rest: Vec<usize> = (0..cfg.diseases_per_block).filter(|d| !chosen.contains(d)).collect();
            chosen.extend(rest.choose_multiple(&mut rng, cfg.positives_per_gene - 1));
            chosen.sort_unstable();
            for d in chosen {
                writeln!(pairs, "{g}\t{}\t1", diseases[d]).unwrap();
            }
        }
        for (n, txt) in [(cfg.logical_definitions_per_block, &mut ld), (cfg.mappings_per_block, &mut map)] {
            for _ in 0..n {
                let a = go.blocks[b].choose(&mut rng).expect("non-empty");
                let h = hp.blocks[b].choose(&mut rng).expect("non-empty");
                writeln!(txt, "{}\t{}", go.names[*a], hp.names[*h]).unwrap();
            }
        }
    }

    let files = SynthFiles {
        dir: dir.to_path_buf(),
        config: dir.join("experiment.toml"),
        go: dir.join("go.tsv"),
        hp: dir.join("hp.tsv"),
        go_genes: dir.join("go_annotations_genes.tsv"),
        hp_genes: dir.join("hp_annotations_genes.tsv"),
        hp_diseases: dir.join("hp_annotations_diseases.tsv"),
        logical_definitions: dir.join("logical_definitions.tsv"),
        mappings: dir.join("mappings.tsv"),
        pairs: dir.join("pairs.tsv"),
    };
    for (path, text) in [
        (&files.go, &go_txt),
        (&files.hp, &hp_txt),
        (&files.go_genes, &go_genes),
        (&files.hp_genes, &hp_genes),
        (&files.hp_diseases, &hp_diseases),
        (&files.logical_definitions, &ld),
        (&files.mappings, &map),
        (&files.pairs, &pairs),
        (&files.config, &SYNTH_EXPERIMENT.to_owned()),
    ] {
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(files)
}

/// Experiment over the generated files. Training budgets are scaled to the
/// toy graph; everything else keeps the benchmark defaults.
pub const SYNTH_EXPERIMENT: &str = r#"output = "out"
seed = 1
fraction = 0.7
task = "both"
directions = "both"
deterministic = true

[dataset]
pairs = "pairs.tsv"

[[ontologies]]
name = "GO"
path = "go.tsv"

[[ontologies]]
name = "HP"
path = "hp.tsv"

[[annotations]]
source = "GO"
kind = "gene"
path = "go_annotations_genes.tsv"

[[annotations]]
source = "HP"
kind = "gene"
path = "hp_annotations_genes.tsv"

[[annotations]]
source = "HP"
kind = "disease"
path = "hp_annotations_diseases.tsv"

[[links]]
name = "LD"
kind = "logical_definition"
path = "logical_definitions.tsv"

[[links]]
name = "MAP"
kind = "ontology_mapping"
path = "mappings.tsv"

[[variants]]
ontologies = ["GO", "HP"]
annotations = ["GO:gene", "HP:gene", "HP:disease"]
links = ["LD", "MAP"]

[link_prediction]
models = ["TransE", "TransD", "TransH", "DistMult", "HolE", "ComplEx"]

[link_prediction.common]
dim = 64
epochs = 200
nr_batches = 10

[link_prediction.model.TransE]
alpha = 0.05

[link_prediction.model.TransH]
alpha = 0.05

[link_prediction.model.DistMult]
alpha = 0.1
lambda = 0.001

[link_prediction.model.HolE]
max_norm = 1.0

[link_prediction.model.ComplEx]
alpha = 0.1
lambda = 0.001

[classification]
aggregations = ["hadamard"]
classifiers = ["XGB"]

[classification.walks]
dim = 64
walks_per_entity = 100
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn sizes_and_block_locality() {
        let dir = tempfile::tempdir().unwrap();
        let f = generate(dir.path(), &SynthConfig::default()).unwrap();
        let go = fs::read_to_string(&f.go).unwrap();
        let classes: HashSet<&str> = go.lines().flat_map(|l| [l.split('\t').next().unwrap(), l.split('\t').nth(2).unwrap()]).collect();
        assert_eq!(classes.len(), 200);
        let pairs = fs::read_to_string(&f.pairs).unwrap();
        let genes: HashSet<&str> = pairs.lines().map(|l| l.split('\t').next().unwrap()).collect();
        let diseases: HashSet<&str> = pairs.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
        assert_eq!((genes.len(), diseases.len()), (60, 40));
        // gene/1000+6b+i pairs only with disease/C(4b+j)
        for l in pairs.lines() {
            let mut it = l.split('\t');
            let g: usize = it.next().unwrap()[5..].parse().unwrap();
            let d: usize = it.next().unwrap()[9..].parse().unwrap();
            assert_eq!((g - 1000) / 6, d / 4);
        }
        let mut per_gene: HashMap<&str, usize> = HashMap::new();
        for l in pairs.lines() {
            *per_gene.entry(l.split('\t').next().unwrap()).or_default() += 1;
        }
        assert!(per_gene.values().all(|&n| n == 2));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = generate(a.path(), &SynthConfig::default()).unwrap();
        let fb = generate(b.path(), &SynthConfig::default()).unwrap();
        for (x, y) in [(&fa.pairs, &fb.pairs), (&fa.hp_diseases, &fb.hp_diseases), (&fa.go, &fb.go)] {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
    }
}
