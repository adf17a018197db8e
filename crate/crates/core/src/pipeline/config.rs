//! Experiment configuration, read from TOML.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::{Direction, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::eval::Denominator;
use crate::kg::{EntityKind, LinkKind};
use crate::pairclf::{AggregationOp, ClassifierKind, ClassifierSpec};
use crate::walker::WalkConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    LinkPrediction,
    NodePairClassification,
    #[default]
    Both,
}

impl Task {
    pub fn link_prediction(self) -> bool {
        matches!(self, Task::LinkPrediction | Task::Both)
    }

    pub fn classification(self) -> bool {
        matches!(self, Task::NodePairClassification | Task::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directions {
    GeneToDisease,
    DiseaseToGene,
    #[default]
    Both,
}

impl Directions {
    pub fn list(self) -> Vec<Direction> {
        match self {
            Directions::GeneToDisease => vec![Direction::PredictTail],
            Directions::DiseaseToGene => vec![Direction::PredictHead],
            Directions::Both => vec![Direction::PredictTail, Direction::PredictHead],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// `gene<TAB>disease[<TAB>label]`.
    pub pairs: PathBuf,
    /// Number of negatives to draw when the pairs file has none. Defaults to
    /// the number of positives.
    #[serde(default)]
    pub negatives: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologySource {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSource {
    pub source: String,
    pub kind: EntityKind,
    pub path: PathBuf,
}

impl AnnotationSource {
    /// Key used by variant recipes, e.g. `HP:disease`.
    pub fn id(&self) -> String {
        format!("{}:{}", self.source, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSource {
    pub name: String,
    pub kind: LinkKind,
    pub path: PathBuf,
}

/// Which ingredients make up one KG variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantRecipe {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub ontologies: Vec<String>,
    #[serde(default)]
    pub annotations: Vec<String>,
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkPredictionSection {
    #[serde(default = "all_models")]
    pub models: Vec<String>,
    /// Overrides applied to every model.
    #[serde(default)]
    pub common: toml::Table,
    /// Per-model overrides keyed by model name.
    #[serde(default)]
    pub model: BTreeMap<String, toml::Table>,
}

fn all_models() -> Vec<String> {
    ModelKind::ALL.iter().map(|k| k.name().to_owned()).collect()
}

impl Default for LinkPredictionSection {
    fn default() -> Self {
        LinkPredictionSection {
            models: all_models(),
            common: toml::Table::new(),
            model: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationSection {
    #[serde(default = "all_aggregations")]
    pub aggregations: Vec<AggregationOp>,
    #[serde(default = "all_classifiers")]
    pub classifiers: Vec<String>,
    #[serde(default)]
    pub walks: toml::Table,
    #[serde(default)]
    pub common: toml::Table,
    #[serde(default)]
    pub classifier: BTreeMap<String, toml::Table>,
}

fn all_aggregations() -> Vec<AggregationOp> {
    AggregationOp::ALL.to_vec()
}

fn all_classifiers() -> Vec<String> {
    ClassifierKind::ALL.iter().map(|k| k.tag().to_owned()).collect()
}

impl Default for ClassificationSection {
    fn default() -> Self {
        ClassificationSection {
            aggregations: all_aggregations(),
            classifiers: all_classifiers(),
            walks: toml::Table::new(),
            common: toml::Table::new(),
            classifier: BTreeMap::new(),
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    1
}

fn default_fraction() -> f64 {
    0.7
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Seed of the negative draw and the train/test split.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default)]
    pub task: Task,
    #[serde(default)]
    pub directions: Directions,
    /// Forces single-worker skip-gram training so reruns are bit-identical.
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default)]
    pub denominator: Denominator,
    /// Keep only the first K candidates of each link-prediction ranking.
    #[serde(default)]
    pub top_k: Option<usize>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub ontologies: Vec<OntologySource>,
    #[serde(default)]
    pub annotations: Vec<AnnotationSource>,
    #[serde(default)]
    pub links: Vec<LinkSource>,
    pub variants: Vec<VariantRecipe>,
    #[serde(default)]
    pub link_prediction: LinkPredictionSection,
    #[serde(default)]
    pub classification: ClassificationSection,
    /// Query entities whose per-method ranks are written out.
    #[serde(default)]
    pub case_studies: Vec<String>,
}

/// Module configurations after defaults and overrides are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub models: Vec<ModelConfig>,
    pub walks: WalkConfig,
    pub aggregations: Vec<AggregationOp>,
    pub classifiers: Vec<ClassifierSpec>,
}

/// Overlays TOML tables onto the serialized form of `base`. Keys unknown to
/// `base` are rejected so typos do not pass silently.
fn overlay<T: Serialize + DeserializeOwned>(base: &T, tables: &[&toml::Table], what: &str) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    let obj = value.as_object_mut().expect("configs serialize to objects");
    for table in tables {
        for (k, v) in table.iter() {
            if k == "kind" || !obj.contains_key(k) {
                return Err(Error::Unknown {
                    what: "configuration key",
                    name: format!("{what}.{k}"),
                });
            }
            obj.insert(k.clone(), serde_json::to_value(v)?);
        }
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidArgument(format!("{what}: {e}")))
}

fn find_override<'a, K: std::str::FromStr>(map: &'a BTreeMap<String, toml::Table>, kind: K, eq: impl Fn(&K, &K) -> bool) -> Vec<&'a toml::Table> {
    map.iter()
        .filter(|(name, _)| name.parse::<K>().map(|k| eq(&k, &kind)).unwrap_or(false))
        .map(|(_, t)| t)
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("configuration: {e}")))
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Prefixes every relative path with `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        fix(&mut self.dataset.pairs);
        self.ontologies.iter_mut().for_each(|o| fix(&mut o.path));
        self.annotations.iter_mut().for_each(|a| fix(&mut a.path));
        self.links.iter_mut().for_each(|l| fix(&mut l.path));
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        self.link_prediction.models.iter().map(|m| m.parse()).collect()
    }

    pub fn classifier_kinds(&self) -> Result<Vec<ClassifierKind>> {
        self.classification.classifiers.iter().map(|m| m.parse()).collect()
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let lp = &self.link_prediction;
        for name in lp.model.keys() {
            name.parse::<ModelKind>()?;
        }
        let mut models = Vec::new();
        for kind in self.model_kinds()? {
            let mut tables = vec![&lp.common];
            tables.extend(find_override(&lp.model, kind, |a, b| a == b));
            let cfg: ModelConfig = overlay(&ModelConfig::defaults(kind), &tables, &format!("link_prediction.{kind}"))?;
            cfg.validate()?;
            models.push(cfg);
        }
        let clf = &self.classification;
        let mut walks: WalkConfig = overlay(&WalkConfig::default(), &[&clf.walks], "classification.walks")?;
        if self.deterministic {
            walks.workers = 1;
        }
        walks.validate()?;
        for name in clf.classifier.keys() {
            name.parse::<ClassifierKind>()?;
        }
        let mut classifiers = Vec::new();
        for kind in self.classifier_kinds()? {
            let mut tables = vec![&clf.common];
            tables.extend(find_override(&clf.classifier, kind, |a, b| a == b));
            let spec: ClassifierSpec = overlay(&ClassifierSpec::new(kind), &tables, &format!("classification.{kind}"))?;
            spec.validate()?;
            classifiers.push(spec);
        }
        Ok(Resolved {
            models,
            walks,
            aggregations: clf.aggregations.clone(),
            classifiers,
        })
    }

    /// Display name of a recipe: its explicit name, or one letter per
    /// ontology (starred when only disease annotations of a source with gene
    /// annotations on offer are used) followed by L and M for link sets.
    pub fn variant_name(&self, recipe: &VariantRecipe) -> String {
        if let Some(n) = &recipe.name {
            return n.clone();
        }
        let mut parts = Vec::new();
        for ont in &recipe.ontologies {
            let mut tag: String = ont.chars().next().map(|c| c.to_ascii_uppercase()).into_iter().collect();
            let used: Vec<&AnnotationSource> = self
                .annotations
                .iter()
                .filter(|a| a.source == *ont && recipe.annotations.contains(&a.id()))
                .collect();
            let offered_gene = self.annotations.iter().any(|a| a.source == *ont && a.kind == EntityKind::Gene);
            if !used.is_empty() && used.iter().all(|a| a.kind == EntityKind::Disease) && offered_gene {
                tag.push('*');
            }
            parts.push(tag);
        }
        for l in &recipe.links {
            if let Some(src) = self.links.iter().find(|s| s.name == *l) {
                parts.push(
                    match src.kind {
                        LinkKind::LogicalDefinition => "L",
                        LinkKind::OntologyMapping => "M",
                    }
                    .to_owned(),
                );
            }
        }
        parts.join("+")
    }

    pub fn variant_names(&self) -> Vec<String> {
        self.variants.iter().map(|v| self.variant_name(v)).collect()
    }

    pub fn recipe(&self, name: &str) -> Result<&VariantRecipe> {
        self.variants
            .iter()
            .find(|v| self.variant_name(v) == name)
            .ok_or_else(|| Error::Unknown {
                what: "variant",
                name: name.to_owned(),
            })
    }

    /// Reference problems of the recipes; empty when every name resolves.
    pub fn check_references(&self) -> Vec<String> {
        let mut out = Vec::new();
        let onts: HashSet<&str> = self.ontologies.iter().map(|o| o.name.as_str()).collect();
        let anns: HashSet<String> = self.annotations.iter().map(AnnotationSource::id).collect();
        let links: HashSet<&str> = self.links.iter().map(|l| l.name.as_str()).collect();
        let mut seen = HashSet::new();
        if self.variants.is_empty() {
            out.push("no variants configured".to_owned());
        }
        for v in &self.variants {
            let name = self.variant_name(v);
            if name.is_empty() {
                out.push("a variant has no ingredients and no name".to_owned());
            }
            if !seen.insert(name.clone()) {
                out.push(format!("duplicate variant name `{name}`"));
            }
            out.extend(v.ontologies.iter().filter(|o| !onts.contains(o.as_str())).map(|o| format!("variant `{name}`: unknown ontology `{o}`")));
            out.extend(v.annotations.iter().filter(|a| !anns.contains(*a)).map(|a| format!("variant `{name}`: unknown annotation set `{a}`")));
            out.extend(v.links.iter().filter(|l| !links.contains(l.as_str())).map(|l| format!("variant `{name}`: unknown link set `{l}`")));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            out.push(format!("fraction must lie in (0, 1), got {}", self.fraction));
        }
        if self.top_k == Some(0) {
            out.push("top_k must be positive".to_owned());
        }
        out
    }

    /// Every input file named by the config.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut v = vec![self.dataset.pairs.as_path()];
        v.extend(self.ontologies.iter().map(|o| o.path.as_path()));
        v.extend(self.annotations.iter().map(|a| a.path.as_path()));
        v.extend(self.links.iter().map(|l| l.path.as_path()));
        v
    }

    /// Digest over the input file contents and everything that shapes the
    /// split: the cache key of the data-preparation stage.
    pub fn data_digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for path in self.input_files() {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            h.update(Sha256::digest(&bytes));
        }
        h.update(self.seed.to_le_bytes());
        h.update(self.fraction.to_le_bytes());
        h.update(format!("{:?}", self.dataset.negatives));
        Ok(hex::encode(h.finalize()))
    }

    /// Digest of the whole experiment: data plus resolved module settings.
    pub fn digest(&self) -> Result<String> {
        let resolved = self.resolve()?;
        let mut h = Sha256::new();
        h.update(self.data_digest()?);
        h.update(serde_json::to_vec(&resolved)?);
        h.update(serde_json::to_vec(&self.variants)?);
        h.update(serde_json::to_vec(&(self.task, self.directions, self.denominator, self.top_k))?);
        Ok(hex::encode(h.finalize()))
    }
}

/// Hex SHA-256 of the concatenated parts.
pub fn digest_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::OptimizerKind;

    const MINIMAL: &str = r#"
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
path = "go_genes.tsv"

[[annotations]]
source = "HP"
kind = "gene"
path = "hp_genes.tsv"

[[annotations]]
source = "HP"
kind = "disease"
path = "hp_diseases.tsv"

[[links]]
name = "LD"
kind = "logical_definition"
path = "ld.tsv"

[[variants]]
ontologies = ["GO", "HP"]
annotations = ["GO:gene", "HP:disease"]
links = ["LD"]

[[variants]]
name = "custom"
ontologies = ["GO"]
annotations = ["GO:gene"]

[link_prediction.common]
dim = 16

[link_prediction.model.TransD]
alpha = 0.5
"#;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.task, Task::Both);
        assert!(cfg.deterministic);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.models.len(), 6);
        assert!(r.models.iter().all(|m| m.dim == 16));
        let transd = r.models.iter().find(|m| m.kind == ModelKind::TransD).unwrap();
        assert_eq!(transd.alpha, 0.5);
        assert_eq!(transd.margin, 4.0);
        let hole = r.models.iter().find(|m| m.kind == ModelKind::HolE).unwrap();
        assert_eq!(hole.optimizer, OptimizerKind::Adagrad);
        assert_eq!(r.classifiers.len(), 4);
        assert_eq!(r.aggregations.len(), 5);
        assert_eq!(r.walks, WalkConfig::default());
    }

    #[test]
    fn variant_names_are_derived() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.variant_names(), ["G+H*+L", "custom"]);
        assert!(cfg.check_references().is_empty());
        assert!(cfg.recipe("custom").is_ok());
        assert!(cfg.recipe("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("alpha = 0.5", "alpah = 0.5");
        let cfg = ExperimentConfig::from_toml(&bad).unwrap();
        assert!(cfg.resolve().is_err());
        assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{MINIMAL}")).is_err());
    }

    #[test]
    fn dangling_references_are_reported() {
        let bad = MINIMAL.replace(r#"links = ["LD"]"#, r#"links = ["MAP"]"#);
        let cfg = ExperimentConfig::from_toml(&bad).unwrap();
        let problems = cfg.check_references();
        assert_eq!(problems.len(), 1, "{problems:?}");
        assert!(problems[0].contains("MAP"));
    }

    #[test]
    fn rebase_only_touches_relative_paths() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.dataset.pairs = PathBuf::from("/abs/pairs.tsv");
        cfg.rebase(Path::new("/data"));
        assert_eq!(cfg.dataset.pairs, PathBuf::from("/abs/pairs.tsv"));
        assert_eq!(cfg.ontologies[0].path, PathBuf::from("/data/go.tsv"));
        assert_eq!(cfg.output, PathBuf::from("/data/out"));
    }

    #[test]
    fn deterministic_forces_one_worker() {
        let text = MINIMAL.replace("[link_prediction.common]", "[classification.walks]\nworkers = 4\n\n[link_prediction.common]");
        let mut cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.resolve().unwrap().walks.workers, 1);
        cfg.deterministic = false;
        assert_eq!(cfg.resolve().unwrap().walks.workers, 4);
    }
}
