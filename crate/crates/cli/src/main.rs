use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use gdabench::eval::direction_label;
use gdabench::kg::EntityKind;
use gdabench::pipeline::{self, slug, Directions, ExperimentConfig, Level, Pipeline, Task};
use gdabench::synth::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "gdabench", version, about = "Gene-disease association benchmark: link prediction vs node-pair classification")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    GeneToDisease,
    DiseaseToGene,
    Both,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Seed of the negative draw and the split.
    #[arg(long)]
    seed: Option<u64>,
    /// Force single-worker skip-gram training.
    #[arg(long)]
    deterministic: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to one KG variant.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.deterministic {
            cfg.deterministic = true;
        }
        if let Some(o) = &self.out {
            cfg.output = o.clone();
        }
        if let Some(d) = self.direction {
            cfg.directions = match d {
                DirectionArg::GeneToDisease => Directions::GeneToDisease,
                DirectionArg::DiseaseToGene => Directions::DiseaseToGene,
                DirectionArg::Both => Directions::Both,
            };
        }
        Ok(cfg)
    }

    fn variants(&self, cfg: &ExperimentConfig) -> Result<Vec<String>> {
        match &self.variant {
            Some(v) => {
                cfg.recipe(v)?;
                Ok(vec![v.clone()])
            }
            None => Ok(cfg.variant_names()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the planted-block toy dataset and its experiment config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running anything.
    Validate(Common),
    /// Draw negatives (if needed) and persist the train/test split.
    Split(Common),
    /// Assemble and export the KG variants.
    BuildKg(Common),
    /// Train the link-prediction models.
    TrainLp(Common),
    /// Generate walks and train the walk embeddings.
    TrainWalks(Common),
    /// Train walk embeddings and the pair classifiers, predict the test pairs.
    Classify(Common),
    /// Rank and score every method; reuses cached artifacts.
    Evaluate(Common),
    /// Every stage followed by evaluation.
    Run(Common),
    /// Per-method ranks of the true partners of one query.
    CaseStudy {
        #[command(flatten)]
        common: Common,
        /// Gene or disease name as it appears in the pairs file.
        #[arg(long)]
        query: String,
    },
}

fn print_report_summary(report: &gdabench::eval::EvalReport) {
    println!("{:<14} {:<22} {:<16} {:>8} {:>8} {:>8} {:>8}", "kg", "method", "direction", "hits@1", "hits@3", "hits@10", "random");
    for (kg, m, d, r) in report.rows() {
        println!(
            "{kg:<14} {m:<22} {d:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            r.hits_at_1, r.hits_at_3, r.hits_at_10, r.random_hits_at_10
        );
    }
}

fn stages(common: &Common, task: Option<Task>, f: impl Fn(&mut Pipeline, &str) -> Result<()>) -> Result<()> {
    let mut cfg = common.load()?;
    if let Some(t) = task {
        cfg.task = t;
    }
    let variants = common.variants(&cfg)?;
    let mut p = Pipeline::open(cfg)?;
    for v in &variants {
        f(&mut p, v)?;
    }
    p.finish()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth { out, seed } => {
            let mut cfg = SynthConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let files = synth::generate(&out, &cfg)?;
            println!("{}", files.config.display());
        }
        Command::Validate(common) => {
            let cfg = common.load()?;
            let diags = pipeline::validate(&cfg);
            for d in &diags {
                let tag = match d.level {
                    Level::Error => "error",
                    Level::Warning => "warning",
                };
                println!("{tag}: {}", d.message);
            }
            if diags.iter().any(|d| d.level == Level::Error) {
                return Ok(ExitCode::from(2));
            }
            println!("ok: {} variant(s), digest {}", cfg.variants.len(), cfg.digest()?);
        }
        Command::Split(common) => {
            let p = Pipeline::open(common.load()?)?;
            let c = p.split().counts();
            println!(
                "train: {} positive, {} negative; test: {} positive, {} negative",
                c.train_pos, c.train_neg, c.test_pos, c.test_neg
            );
            p.finish()?;
        }
        Command::BuildKg(common) => stages(&common, None, |p, v| {
            let g = p.build_kg(v)?;
            println!("{v}: {} triples (link prediction), {} triples (walks)", g.lp.len(), g.clf.len());
            Ok(())
        })?,
        Command::TrainLp(common) => stages(&common, Some(Task::LinkPrediction), |p, v| {
            let g = p.build_kg(v)?;
            for (kind, _) in p.train_lp(&g)? {
                println!("{v}: {kind} trained");
            }
            Ok(())
        })?,
        Command::TrainWalks(common) => stages(&common, Some(Task::NodePairClassification), |p, v| {
            let g = p.build_kg(v)?;
            let t = p.train_walks(&g)?;
            println!("{v}: {} entity vectors of dimension {}", t.len(), t.dim());
            Ok(())
        })?,
        Command::Classify(common) => stages(&common, Some(Task::NodePairClassification), |p, v| {
            let g = p.build_kg(v)?;
            let t = p.train_walks(&g)?;
            for (method, preds) in p.classify(&g, &t)? {
                println!("{v}: {method} predicted {} test pairs", preds.len());
            }
            Ok(())
        })?,
        Command::Evaluate(common) | Command::Run(common) => {
            let cfg = common.load()?;
            let mut p = Pipeline::open(cfg)?;
            let summary = p.run(common.variant.as_deref())?;
            print_report_summary(&summary.report);
            info!("report written to {}", summary.report_dir.display());
        }
        Command::CaseStudy { common, query } => {
            let cfg = common.load()?;
            let variants = common.variants(&cfg)?;
            let mut p = Pipeline::open(cfg)?;
            let q = pipeline::resolve_entity(p.vocab(), &query, &[EntityKind::Gene, EntityKind::Disease])?;
            let direction = match p.vocab().kind(q) {
                EntityKind::Gene => gdabench::embed::Direction::PredictTail,
                _ => gdabench::embed::Direction::PredictHead,
            };
            if !p.config().directions.list().contains(&direction) {
                bail!("{query} is a query of {} only", direction_label(direction));
            }
            for v in &variants {
                let (_, art) = p.prepare(v)?;
                let cs = p.case_study(&art, direction, q)?;
                let tsv = cs.to_tsv(p.vocab());
                let dir = p.output().join("case_studies").join(slug(v));
                write(&dir, &format!("{}_{}.tsv", slug(&query), direction_label(direction)), &tsv)?;
                println!("# {v}");
                print!("{tsv}");
            }
            p.finish()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
