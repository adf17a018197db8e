use std::fs;
use std::path::Path;

use gdabench::kg::Triple;
use gdabench::pipeline::{slug, ExperimentConfig, Pipeline};
use gdabench::synth::{generate, SynthConfig};

fn small_config(dir: &Path) -> ExperimentConfig {
    let cfg = SynthConfig {
        blocks: 4,
        ..SynthConfig::default()
    };
    let files = generate(dir, &cfg).unwrap();
    let mut exp = ExperimentConfig::load(&files.config).unwrap();
    exp.link_prediction.models = vec!["TransE".into()];
    exp.link_prediction.common.insert("epochs".into(), toml::Value::Integer(20));
    exp.classification.walks.insert("walks_per_entity".into(), toml::Value::Integer(20));
    exp
}

#[test]
fn association_edges_are_the_only_difference_between_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::open(small_config(dir.path())).unwrap();
    let v = p.config().variant_names()[0].clone();
    let g = p.build_kg(&v).unwrap();
    let lp = g.lp.triple_set();
    let clf = g.clf.triple_set();
    assert!(clf.is_subset(&lp));
    let extra: Vec<&Triple> = lp.difference(&clf).collect();
    let assoc = p.vocab().association();
    assert!(extra.iter().all(|t| t.relation == assoc));
    assert_eq!(extra.len(), p.split().train_pos.len());
    p.finish().unwrap();
}

#[test]
fn deleted_predictions_regenerate_without_touching_other_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = Pipeline::open(cfg.clone()).unwrap().run(None).unwrap();
    let out = cfg.output.clone();
    let v = slug(&cfg.variant_names()[0]);
    let clf_dir = out.join("clf").join(&v);
    let lp_bin = out.join("lp").join(&v).join("TransE.bin");
    let lp_mtime = fs::metadata(&lp_bin).unwrap().modified().unwrap();
    let preds: Vec<_> = fs::read_dir(&clf_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    assert!(!preds.is_empty());
    let before: Vec<Vec<u8>> = preds.iter().map(|p| fs::read(p).unwrap()).collect();
    for p in &preds {
        fs::remove_file(p).unwrap();
    }

    let second = Pipeline::open(cfg).unwrap().run(None).unwrap();
    let after: Vec<Vec<u8>> = preds.iter().map(|p| fs::read(p).unwrap()).collect();
    assert_eq!(before, after);
    assert_eq!(fs::metadata(&lp_bin).unwrap().modified().unwrap(), lp_mtime);
    assert_eq!(first.report, second.report);
    assert!(!out.join("INCOMPLETE").exists());
}
