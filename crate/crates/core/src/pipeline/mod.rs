//! End-to-end experiment driver.
//!
//! Stages write their artifacts under the output directory next to a
//! `.digest` file holding the cache key they were built from. A stage whose
//! key matches is loaded instead of recomputed. Models, tables and predictions
//! are always evaluated in their persisted form, so a cached rerun reproduces
//! the report byte for byte.

mod config;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::info;
use serde::Serialize;

pub use config::{
    digest_parts, AnnotationSource, ClassificationSection, DatasetConfig, Directions, ExperimentConfig,
    LinkPredictionSection, LinkSource, OntologySource, Resolved, Task, VariantRecipe,
};

use crate::embed::{
    filter_by_kind, load_model, rank_candidates, save_model, train, Direction, EmbeddingModel, ModelConfig, ModelKind,
    TrainingData,
};
use crate::error::{Error, Result};
use crate::eval::{
    case_study, direction_label, extract_ranks, random_hits_at_k, test_candidates, test_truths, unify_clf, unify_lp,
    CaseStudy, EvalReport, HitsRow, RankRecord, UnifiedRanking,
};
use crate::kg::{
    assemble_kg, export_numeric, load_annotations, load_links, load_triples, AnnotationSet, EntityId, EntityKind,
    KnowledgeGraph, LinkSet, Triple, Vocabulary,
};
use crate::pairclf::{self, build_features, read_predictions, write_predictions, AggregationOp, ClassifierSpec, Prediction};
use crate::par;
use crate::split::{self, generate_negatives, load_pairs, load_split, save_split, GdaPair, SplitDataset};
use crate::walker::{generate_walks, train_skipgram, EntityEmbeddingTable};

pub const LOCK_FILE: &str = ".lock";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const TIMINGS_FILE: &str = "timings.json";

/// File-system friendly form of a variant or method name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            'A'..='Z' | 'a'..='z' | '0'..='9' | '+' | '-' | '_' | '.' => c,
            '*' => 's',
            _ => '_',
        })
        .collect()
}

fn read_digest(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok().map(|s| s.trim().to_owned())
}

fn write_digest(path: &Path, digest: &str) -> Result<()> {
    fs::write(path, format!("{digest}\n")).map_err(|e| Error::io(path, e))
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn stage_error(stage: &str, digest: &str, source: Error) -> Error {
    match source {
        already @ Error::Stage { .. } => already,
        other => Error::Stage {
            stage: stage.to_owned(),
            digest: digest.to_owned(),
            source: Box::new(other),
        },
    }
}

/// Removes the lock file when dropped.
struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self> {
        mkdir(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::InvalidArgument(format!(
                "{} exists: another run holds this output directory (remove the file if it is stale)",
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// The two graphs of one variant: with training associations for link
/// prediction, without for the walk-based classifier.
pub struct VariantGraphs {
    pub name: String,
    pub lp: KnowledgeGraph,
    pub clf: KnowledgeGraph,
    pub digest: String,
}

/// Fitted artifacts of one variant, as loaded from disk.
#[derive(Default)]
pub struct VariantArtifacts {
    pub models: Vec<(ModelKind, EmbeddingModel)>,
    /// Method name and test-pair predictions per aggregation and classifier.
    pub predictions: Vec<(String, Vec<Prediction>)>,
}

pub fn clf_method(op: AggregationOp, spec: &ClassifierSpec) -> String {
    format!("{}+{}", op.name(), spec.kind.tag())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub report: EvalReport,
    pub report_dir: PathBuf,
    /// `(variant, direction, study)` for each configured query.
    pub case_studies: Vec<(String, Direction, CaseStudy)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Diagnostic {
            level: Level::Warning,
            message: message.into(),
        }
    }
}

struct Ingredients {
    ontologies: BTreeMap<String, Vec<Triple>>,
    annotations: BTreeMap<String, AnnotationSet>,
    links: BTreeMap<String, LinkSet>,
}

fn load_ingredients(cfg: &ExperimentConfig, vocab: &mut Vocabulary) -> Result<Ingredients> {
    let mut ontologies = BTreeMap::new();
    for o in &cfg.ontologies {
        ontologies.insert(o.name.clone(), load_triples(&o.path, vocab)?);
    }
    let mut annotations = BTreeMap::new();
    for a in &cfg.annotations {
        annotations.insert(a.id(), load_annotations(&a.path, &a.source, a.kind, vocab)?);
    }
    let mut links = BTreeMap::new();
    for l in &cfg.links {
        links.insert(l.name.clone(), load_links(&l.path, l.kind, vocab)?);
    }
    Ok(Ingredients {
        ontologies,
        annotations,
        links,
    })
}

/// Positives and negatives of the dataset; negatives are drawn when the pairs
/// file carries none.
fn labelled_pairs(cfg: &ExperimentConfig, vocab: &mut Vocabulary) -> Result<Vec<GdaPair>> {
    let mut pairs = load_pairs(&cfg.dataset.pairs, vocab)?;
    let positives: Vec<GdaPair> = pairs.iter().copied().filter(GdaPair::is_positive).collect();
    if positives.len() == pairs.len() {
        let n = cfg.dataset.negatives.unwrap_or(positives.len());
        pairs.extend(generate_negatives(&positives, n, cfg.seed)?);
    }
    Ok(pairs)
}

/// Static checks of a config: missing files, dangling references, invalid
/// settings, infeasible negative counts and cached embeddings whose
/// dimension no longer matches.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = cfg.check_references().into_iter().map(Diagnostic::error).collect();
    let resolved = match cfg.resolve() {
        Ok(r) => Some(r),
        Err(e) => {
            out.push(Diagnostic::error(e.to_string()));
            None
        }
    };
    let missing: Vec<&Path> = cfg.input_files().into_iter().filter(|p| !p.is_file()).collect();
    for p in &missing {
        out.push(Diagnostic::error(format!("missing input file {}", p.display())));
    }
    if missing.is_empty() {
        let mut vocab = Vocabulary::new();
        let loaded = load_ingredients(cfg, &mut vocab).and_then(|_| labelled_pairs(cfg, &mut vocab));
        match loaded {
            Ok(pairs) => {
                if let Err(e) = split::split(&pairs, cfg.fraction, cfg.seed) {
                    out.push(Diagnostic::error(e.to_string()));
                }
            }
            Err(e) => out.push(Diagnostic::error(e.to_string())),
        }
    }
    if let Some(r) = resolved {
        for name in cfg.variant_names() {
            let v = slug(&name);
            let table = cfg.output.join("walks").join(&v).join("embeddings.bin");
            if table.is_file() {
                match EntityEmbeddingTable::load(&table) {
                    Ok((t, _)) if t.dim() != r.walks.dim => out.push(Diagnostic::warning(format!(
                        "cached walk embeddings {} have dimension {}, config asks for {}; they will be retrained",
                        table.display(),
                        t.dim(),
                        r.walks.dim
                    ))),
                    Ok(_) => {}
                    Err(e) => out.push(Diagnostic::warning(format!("unreadable cache {}: {e}", table.display()))),
                }
            }
            for m in &r.models {
                let path = cfg.output.join("lp").join(&v).join(format!("{}.bin", m.kind));
                if path.is_file() {
                    match load_model(&path) {
                        Ok((model, _)) if model.dim() != m.dim => out.push(Diagnostic::warning(format!(
                            "cached model {} has dimension {}, config asks for {}; it will be retrained",
                            path.display(),
                            model.dim(),
                            m.dim
                        ))),
                        Ok(_) => {}
                        Err(e) => out.push(Diagnostic::warning(format!("unreadable cache {}: {e}", path.display()))),
                    }
                }
            }
        }
    }
    out
}

/// An opened experiment: inputs loaded, split fixed, output directory locked.
pub struct Pipeline {
    config: ExperimentConfig,
    resolved: Resolved,
    digest: String,
    vocab: Arc<Vocabulary>,
    ingredients: Ingredients,
    split: SplitDataset,
    split_digest: String,
    timings: BTreeMap<String, f64>,
    _lock: Lock,
}

impl Pipeline {
    /// Loads every input, then reuses the persisted split when its digest
    /// matches or computes and persists a fresh one.
    pub fn open(config: ExperimentConfig) -> Result<Self> {
        let problems = config.check_references();
        if !problems.is_empty() {
            return Err(Error::InvalidArgument(problems.join("; ")));
        }
        let resolved = config.resolve()?;
        let digest = config.digest()?;
        let lock = Lock::acquire(&config.output)?;
        let marker = config.output.join(INCOMPLETE_MARKER);
        fs::write(&marker, format!("{digest}\n")).map_err(|e| Error::io(&marker, e))?;

        let t0 = Instant::now();
        let mut vocab = Vocabulary::new();
        let ingredients = load_ingredients(&config, &mut vocab).map_err(|e| stage_error("load", &digest, e))?;
        let split_digest = config.data_digest()?;
        let split_dir = config.output.join("split");
        let digest_file = split_dir.join(".digest");
        let split = if read_digest(&digest_file).as_deref() == Some(split_digest.as_str()) {
            info!("reusing split in {}", split_dir.display());
            // pairs are registered first so ids match a fresh run
            load_pairs(&config.dataset.pairs, &mut vocab)
                .and_then(|_| load_split(&split_dir, &mut vocab))
                .map_err(|e| stage_error("split", &split_digest, e))?
        } else {
            let s = labelled_pairs(&config, &mut vocab)
                .and_then(|pairs| split::split(&pairs, config.fraction, config.seed))
                .map_err(|e| stage_error("split", &split_digest, e))?;
            save_split(&split_dir, &s, &vocab)?;
            write_digest(&digest_file, &split_digest)?;
            s
        };
        let mut timings = BTreeMap::new();
        timings.insert("split".to_owned(), t0.elapsed().as_secs_f64());
        Ok(Pipeline {
            config,
            resolved,
            digest,
            vocab: Arc::new(vocab),
            ingredients,
            split,
            split_digest,
            timings,
            _lock: lock,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn resolved(&self) -> &Resolved {
        &self.resolved
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn split(&self) -> &SplitDataset {
        &self.split
    }

    pub fn output(&self) -> &Path {
        &self.config.output
    }

    pub fn timings(&self) -> &BTreeMap<String, f64> {
        &self.timings
    }

    fn timed<T>(&mut self, key: String, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let r = f(self);
        self.timings.insert(key, t0.elapsed().as_secs_f64());
        r
    }

    fn variant_dir(&self, stage: &str, variant: &str) -> PathBuf {
        self.config.output.join(stage).join(slug(variant))
    }

    fn test_pairs(&self) -> Vec<GdaPair> {
        self.split.test().copied().collect()
    }

    /// Genes and diseases of the dataset: the walk seeds.
    fn seeds(&self) -> Vec<EntityId> {
        let mut v: Vec<EntityId> = self.split.all().flat_map(|p| [p.gene, p.disease]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Assembles both graphs of a variant and exports them as numeric files.
    pub fn build_kg(&mut self, variant: &str) -> Result<VariantGraphs> {
        let recipe = self.config.recipe(variant)?.clone();
        let digest = digest_parts(&[self.split_digest.as_bytes(), &serde_json::to_vec(&recipe)?]);
        let name = variant.to_owned();
        self.timed(format!("kg/{variant}"), |p| {
            let build = || -> Result<VariantGraphs> {
                let onto: Vec<Triple> = recipe
                    .ontologies
                    .iter()
                    .flat_map(|o| p.ingredients.ontologies[o].iter().copied())
                    .collect();
                let anns: Vec<AnnotationSet> = recipe.annotations.iter().map(|a| p.ingredients.annotations[a].clone()).collect();
                let links: Vec<LinkSet> = recipe.links.iter().map(|l| p.ingredients.links[l].clone()).collect();
                let vocab = Arc::clone(&p.vocab);
                let lp = assemble_kg(Arc::clone(&vocab), &onto, &anns, &links, Some(&p.split.train_pos), &name)?;
                let clf = assemble_kg(vocab, &onto, &anns, &links, None, &name)?;
                let dir = p.variant_dir("kg", &name);
                let digest_file = dir.join(".digest");
                if !fresh(&digest_file, &digest, &[&dir.join("lp"), &dir.join("clf"), &dir.join("stats.json")]) {
                    export_numeric(&lp, &p.split, &dir.join("lp"))?;
                    export_numeric(&clf, &p.split, &dir.join("clf"))?;
                    let stats = serde_json::json!({ "lp": lp.stats(), "clf": clf.stats() });
                    let path = dir.join("stats.json");
                    fs::write(&path, serde_json::to_string_pretty(&stats)? + "\n").map_err(|e| Error::io(&path, e))?;
                    write_digest(&digest_file, &digest)?;
                }
                info!("variant {name}: {} triples (lp), {} triples (walks)", lp.len(), clf.len());
                Ok(VariantGraphs {
                    name: name.clone(),
                    lp,
                    clf,
                    digest: digest.clone(),
                })
            };
            build().map_err(|e| stage_error(&format!("build-kg {name}"), &digest, e))
        })
    }

    /// Trains (or loads) every configured link-prediction model.
    pub fn train_lp(&mut self, graphs: &VariantGraphs) -> Result<Vec<(ModelKind, EmbeddingModel)>> {
        let dir = self.variant_dir("lp", &graphs.name);
        mkdir(&dir)?;
        let data = TrainingData::from_kg(&graphs.lp);
        let mut out = Vec::new();
        for cfg in self.resolved.models.clone() {
            let key = digest_parts(&[graphs.digest.as_bytes(), &serde_json::to_vec(&cfg)?]);
            let path = dir.join(format!("{}.bin", cfg.kind));
            let digest_file = dir.join(format!("{}.digest", cfg.kind));
            let stage = format!("train-lp {} {}", graphs.name, cfg.kind);
            let model = self.timed(format!("lp/{}/{}", graphs.name, cfg.kind), |_| {
                train_or_load(&data, &cfg, &path, &digest_file, &key).map_err(|e| stage_error(&stage, &key, e))
            })?;
            out.push((cfg.kind, model));
        }
        Ok(out)
    }

    /// Generates walks over the association-free graph and trains skip-gram.
    pub fn train_walks(&mut self, graphs: &VariantGraphs) -> Result<EntityEmbeddingTable> {
        let cfg = self.resolved.walks.clone();
        let key = digest_parts(&[graphs.digest.as_bytes(), &serde_json::to_vec(&cfg)?]);
        let dir = self.variant_dir("walks", &graphs.name);
        let path = dir.join("embeddings.bin");
        let digest_file = dir.join(".digest");
        let seeds = self.seeds();
        let stage = format!("train-walks {}", graphs.name);
        self.timed(format!("walks/{}", graphs.name), |_| {
            let run = || -> Result<EntityEmbeddingTable> {
                let cached = fresh(&digest_file, &key, &[&path]);
                if !cached {
                    mkdir(&dir)?;
                    let corpus = generate_walks(&graphs.clf, &seeds, &cfg)?;
                    info!("{}: {} walks, {} tokens", graphs.name, corpus.len(), corpus.num_tokens());
                    let table = train_skipgram(&corpus, &seeds, &cfg)?;
                    table.save(&path, &cfg)?;
                    write_digest(&digest_file, &key)?;
                }
                Ok(EntityEmbeddingTable::load(&path)?.0)
            };
            run().map_err(|e| stage_error(&stage, &key, e))
        })
    }

    /// Fits every (aggregation, classifier) pair on the training pairs and
    /// predicts the test pairs.
    pub fn classify(&mut self, graphs: &VariantGraphs, table: &EntityEmbeddingTable) -> Result<Vec<(String, Vec<Prediction>)>> {
        let dir = self.variant_dir("clf", &graphs.name);
        mkdir(&dir)?;
        let train_pairs: Vec<GdaPair> = self.split.train().copied().collect();
        let test_pairs = self.test_pairs();
        let walk_key = digest_parts(&[graphs.digest.as_bytes(), &serde_json::to_vec(&self.resolved.walks)?]);
        let mut out = Vec::new();
        for op in self.resolved.aggregations.clone() {
            for spec in self.resolved.classifiers.clone() {
                let method = clf_method(op, &spec);
                let key = digest_parts(&[walk_key.as_bytes(), op.name().as_bytes(), &serde_json::to_vec(&spec)?]);
                let path = dir.join(format!("{}.tsv", slug(&method)));
                let digest_file = dir.join(format!("{}.digest", slug(&method)));
                let stage = format!("classify {} {method}", graphs.name);
                let vocab = Arc::clone(&self.vocab);
                let preds = self.timed(format!("clf/{}/{method}", graphs.name), |_| {
                    let run = || -> Result<Vec<Prediction>> {
                        if !fresh(&digest_file, &key, &[&path]) {
                            let train_x = build_features(&train_pairs, table, op)?;
                            let model = pairclf::fit(&spec, &train_x)?;
                            let test_x = build_features(&test_pairs, table, op)?;
                            write_predictions(&path, &model.predict(&test_x)?, &vocab)?;
                            write_digest(&digest_file, &key)?;
                        }
                        read_predictions(&path, &vocab)
                    };
                    run().map_err(|e| stage_error(&stage, &key, e))
                })?;
                out.push((method, preds));
            }
        }
        Ok(out)
    }

    /// Runs the configured tasks for one variant, using caches where valid.
    pub fn prepare(&mut self, variant: &str) -> Result<(VariantGraphs, VariantArtifacts)> {
        let graphs = self.build_kg(variant)?;
        let mut art = VariantArtifacts::default();
        if self.config.task.link_prediction() {
            art.models = self.train_lp(&graphs)?;
        }
        if self.config.task.classification() {
            let table = self.train_walks(&graphs)?;
            art.predictions = self.classify(&graphs, &table)?;
        }
        Ok((graphs, art))
    }

    /// Unified rankings of every method for one query.
    pub fn rankings(&self, art: &VariantArtifacts, direction: Direction, query: EntityId) -> Result<Vec<UnifiedRanking>> {
        let test = self.test_pairs();
        let candidates = test_candidates(&test, direction);
        let kind = candidate_kind(direction);
        let pool = self.vocab.entities_of_kind(kind);
        let mut out = Vec::new();
        for (kind_m, model) in &art.models {
            out.push(lp_ranking(model, &self.vocab, query, direction, &pool, &candidates, kind_m.name(), self.config.top_k)?.0);
        }
        for (method, preds) in &art.predictions {
            out.push(unify_clf(preds, query, direction, method)?);
        }
        Ok(out)
    }

    /// Case study of `query` over every method of the prepared variant.
    pub fn case_study(&self, art: &VariantArtifacts, direction: Direction, query: EntityId) -> Result<CaseStudy> {
        let truths = test_truths(&self.test_pairs(), direction);
        let t = truths.get(&query).ok_or_else(|| Error::Unknown {
            what: "query with test associations",
            name: self.vocab.entity_name(query).to_owned(),
        })?;
        case_study(query, &self.rankings(art, direction, query)?, t)
    }

    /// Scores every method of the variant in every configured direction.
    pub fn evaluate(&mut self, variant: &str, art: &VariantArtifacts, directions: &[Direction], report: &mut EvalReport) -> Result<()> {
        let test = self.test_pairs();
        let top_k = self.config.top_k;
        let denom = self.config.denominator;
        let digest = self.digest.clone();
        let vocab = Arc::clone(&self.vocab);
        self.timed(format!("evaluate/{variant}"), |_| {
            let mut run = || -> Result<()> {
                for &direction in directions {
                    let truths = test_truths(&test, direction);
                    let queries: Vec<(EntityId, Vec<EntityId>)> = truths.into_iter().collect();
                    let candidates = test_candidates(&test, direction);
                    let kind = candidate_kind(direction);
                    let pool = vocab.entities_of_kind(kind);
                    let score = |rank: &(dyn Fn(EntityId) -> Result<(UnifiedRanking, usize)> + Sync)| -> Result<HitsRow> {
                        let per_query = par::map(&queries, |(q, t)| {
                            rank(*q).map(|(u, n)| (extract_ranks(&u, t), n))
                        });
                        let mut records: Vec<RankRecord> = Vec::new();
                        let mut lengths = Vec::new();
                        for r in per_query {
                            let (recs, n) = r?;
                            lengths.extend(std::iter::repeat_n(n, recs.len()));
                            records.extend(recs);
                        }
                        let mut row = HitsRow::from_records(&records, denom)?;
                        row.random_hits_at_10 = random_hits_at_k(&lengths, 10);
                        Ok(row)
                    };
                    for (kind_m, model) in &art.models {
                        let row = score(&|q| lp_ranking(model, &vocab, q, direction, &pool, &candidates, kind_m.name(), top_k))?;
                        report.insert(variant, kind_m.name(), direction_label(direction), row);
                    }
                    for (method, preds) in &art.predictions {
                        let row = score(&|q| unify_clf(preds, q, direction, method).map(|u| {
                            let n = u.candidates.len();
                            (u, n)
                        }))?;
                        report.insert(variant, method, direction_label(direction), row);
                    }
                }
                Ok(())
            };
            run().map_err(|e| stage_error(&format!("evaluate {variant}"), &digest, e))
        })
    }

    fn seeds_map(&self) -> BTreeMap<String, u64> {
        let mut m = BTreeMap::new();
        m.insert("split".to_owned(), self.config.seed);
        if self.config.task.link_prediction() {
            for c in &self.resolved.models {
                m.insert(format!("lp.{}", c.kind), c.seed);
            }
        }
        if self.config.task.classification() {
            m.insert("walks".to_owned(), self.resolved.walks.seed);
            for c in &self.resolved.classifiers {
                m.insert(format!("classifier.{}", c.kind), c.seed);
            }
        }
        m
    }

    fn write_timings(&self) -> Result<()> {
        let path = self.config.output.join(TIMINGS_FILE);
        let body = serde_json::json!({ "config_digest": self.digest, "seconds": self.timings });
        fs::write(&path, serde_json::to_string_pretty(&body)? + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Every variant (or just `only`), every configured direction.
    pub fn run(&mut self, only: Option<&str>) -> Result<RunSummary> {
        let variants: Vec<String> = match only {
            Some(v) => {
                self.config.recipe(v)?;
                vec![v.to_owned()]
            }
            None => self.config.variant_names(),
        };
        let directions = self.config.directions.list();
        let mut report = EvalReport {
            config_digest: self.digest.clone(),
            seeds: self.seeds_map(),
            ..EvalReport::default()
        };
        let mut studies = Vec::new();
        for v in &variants {
            let (_, art) = self.prepare(v)?;
            self.evaluate(v, &art, &directions, &mut report)?;
            for name in self.config.case_studies.clone() {
                let Some(q) = self.vocab.entity_id(&name) else {
                    log::warn!("case study query `{name}` is not in the vocabulary");
                    continue;
                };
                for &d in &directions {
                    let query_kind = match d {
                        Direction::PredictTail => EntityKind::Gene,
                        Direction::PredictHead => EntityKind::Disease,
                    };
                    if self.vocab.kind(q) != query_kind {
                        continue;
                    }
                    let cs = self.case_study(&art, d, q)?;
                    let dir = self.variant_dir("case_studies", v);
                    mkdir(&dir)?;
                    let path = dir.join(format!("{}_{}.tsv", slug(&name), direction_label(d)));
                    fs::write(&path, cs.to_tsv(&self.vocab)).map_err(|e| Error::io(&path, e))?;
                    studies.push((v.clone(), d, cs));
                }
            }
        }
        let report_dir = self.config.output.join("report");
        report.write(&report_dir)?;
        self.write_timings()?;
        let marker = self.config.output.join(INCOMPLETE_MARKER);
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
        Ok(RunSummary {
            report,
            report_dir,
            case_studies: studies,
        })
    }

    /// Clears the in-progress marker after a partial run that succeeded.
    pub fn finish(&self) -> Result<()> {
        self.write_timings()?;
        let marker = self.config.output.join(INCOMPLETE_MARKER);
        match fs::remove_file(&marker) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(&marker, e)),
            _ => Ok(()),
        }
    }
}

fn candidate_kind(direction: Direction) -> EntityKind {
    match direction {
        Direction::PredictTail => EntityKind::Disease,
        Direction::PredictHead => EntityKind::Gene,
    }
}

/// Unified link-prediction ranking of `query` and its length before the
/// optional top-K cut. Classification lists are never cut: they already hold
/// only the query's test pairs.
#[allow(clippy::too_many_arguments)]
fn lp_ranking(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    query: EntityId,
    direction: Direction,
    pool: &[EntityId],
    candidates: &HashSet<EntityId>,
    method: &str,
    top_k: Option<usize>,
) -> Result<(UnifiedRanking, usize)> {
    let ranking = rank_candidates(model, query, vocab.association(), direction, pool)?;
    let ranking = filter_by_kind(&ranking, candidate_kind(direction), vocab);
    let u = unify_lp(&ranking, candidates, method);
    let n = u.candidates.len();
    Ok((match top_k {
        Some(k) => u.truncate(k),
        None => u,
    }, n))
}

/// A stage is cached iff its digest matches and every artifact is present.
fn fresh(digest_file: &Path, key: &str, artifacts: &[&Path]) -> bool {
    read_digest(digest_file).as_deref() == Some(key) && artifacts.iter().all(|p| p.exists())
}

fn train_or_load(data: &TrainingData, cfg: &ModelConfig, path: &Path, digest_file: &Path, key: &str) -> Result<EmbeddingModel> {
    if !fresh(digest_file, key, &[path]) {
        let outcome = train(data, cfg)?;
        info!(
            "{}: final epoch loss {:.4}",
            cfg.kind,
            outcome.loss_trace.last().copied().unwrap_or(f64::NAN)
        );
        save_model(path, &outcome.model, cfg)?;
        write_digest(digest_file, key)?;
    }
    Ok(load_model(path)?.0)
}

/// Name → id lookup that insists on the entity kind.
pub fn resolve_entity(vocab: &Vocabulary, name: &str, kinds: &[EntityKind]) -> Result<EntityId> {
    vocab
        .entity_id(name)
        .filter(|&e| kinds.contains(&vocab.kind(e)))
        .ok_or_else(|| Error::Unknown {
            what: "gene or disease",
            name: name.to_owned(),
        })
}

/// Per-method hits@10 minus its random baseline, for quick inspection.
pub fn lift_at_10(report: &EvalReport) -> HashMap<(String, String, String), f64> {
    report
        .rows()
        .map(|(kg, m, d, r)| ((kg.to_owned(), m.to_owned(), d.to_owned()), r.hits_at_10 - r.random_hits_at_10))
        .collect()
}
