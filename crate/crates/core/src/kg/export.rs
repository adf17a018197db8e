//! Numeric export for embedding trainers.
//!
//! Layout of `out_dir`:
//!
//! ```text
//! entity2id.txt          name<TAB>id, one per line
//! relation2id.txt        name<TAB>id
//! association_entities.txt  name<TAB>id for genes and diseases only
//! train2id.txt           triple count, then `e1 e2 rel` per line
//! test2id.txt            same, positive test pairs as association triples
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kg::{EntityId, EntityKind, KnowledgeGraph, RelationId, Triple};
use crate::split::SplitDataset;

pub const ENTITY_FILE: &str = "entity2id.txt";
pub const RELATION_FILE: &str = "relation2id.txt";
pub const ASSOCIATION_ENTITY_FILE: &str = "association_entities.txt";
pub const TRAIN_FILE: &str = "train2id.txt";
pub const TEST_FILE: &str = "test2id.txt";

pub fn export_numeric(kg: &KnowledgeGraph, split: &SplitDataset, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let vocab = kg.vocab();
    for p in split.all() {
        let ok = vocab.contains(p.gene)
            && vocab.contains(p.disease)
            && vocab.kind(p.gene) == EntityKind::Gene
            && vocab.kind(p.disease) == EntityKind::Disease;
        if !ok {
            return Err(Error::Inconsistent(format!(
                "split pair ({}, {}) is not a gene-disease pair of KG `{}`",
                p.gene,
                p.disease,
                kg.variant()
            )));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written = Vec::new();
    let mut emit = |name: &str, body: &mut dyn FnMut(&mut dyn Write) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };

    emit(ENTITY_FILE, &mut |w| {
        for (id, name) in vocab.entities() {
            writeln!(w, "{name}\t{}", id.0)?;
        }
        Ok(())
    })?;
    emit(RELATION_FILE, &mut |w| {
        for (id, name) in vocab.relations() {
            writeln!(w, "{name}\t{}", id.0)?;
        }
        Ok(())
    })?;
    emit(ASSOCIATION_ENTITY_FILE, &mut |w| {
        for (id, name) in vocab.entities() {
            if vocab.kind(id).is_association_endpoint() {
                writeln!(w, "{name}\t{}", id.0)?;
            }
        }
        Ok(())
    })?;
    emit(TRAIN_FILE, &mut |w| write_triples(w, kg.triples()))?;
    let assoc = vocab.association();
    let test: Vec<Triple> = split
        .test_pos
        .iter()
        .map(|p| Triple::new(p.gene, assoc, p.disease))
        .collect();
    emit(TEST_FILE, &mut |w| write_triples(w, &test))?;
    Ok(written)
}

fn write_triples(w: &mut dyn Write, triples: &[Triple]) -> std::io::Result<()> {
    writeln!(w, "{}", triples.len())?;
    for t in triples {
        writeln!(w, "{} {} {}", t.head.0, t.tail.0, t.relation.0)?;
    }
    Ok(())
}

/// The parsed contents of a numeric export directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericExport {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub association_entities: Vec<EntityId>,
    pub train: Vec<Triple>,
    pub test: Vec<Triple>,
}

pub fn read_numeric(dir: &Path) -> Result<NumericExport> {
    let entities = read_id_file(&dir.join(ENTITY_FILE))?;
    let relations = read_id_file(&dir.join(RELATION_FILE))?;
    let assoc_path = dir.join(ASSOCIATION_ENTITY_FILE);
    let association_entities = read_id_pairs(&assoc_path)?
        .into_iter()
        .map(|(_, id)| EntityId(id))
        .collect();
    let train = read_triple_file(&dir.join(TRAIN_FILE), entities.len(), relations.len())?;
    let test = read_triple_file(&dir.join(TEST_FILE), entities.len(), relations.len())?;
    Ok(NumericExport {
        entities,
        relations,
        association_entities,
        train,
        test,
    })
}

fn read_id_pairs(path: &Path) -> Result<Vec<(String, u32)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (name, id) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `name<TAB>id`"))?;
        let id = id
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad id `{id}`")))?;
        out.push((name.to_owned(), id));
    }
    Ok(out)
}

fn read_id_file(path: &Path) -> Result<Vec<String>> {
    let pairs = read_id_pairs(path)?;
    let mut names = vec![None; pairs.len()];
    for (name, id) in pairs {
        let slot = names
            .get_mut(id as usize)
            .ok_or_else(|| Error::Format(format!("{}: ids are not contiguous", path.display())))?;
        if slot.replace(name).is_some() {
            return Err(Error::Format(format!("{}: duplicate id {id}", path.display())));
        }
    }
    names
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Format(format!("{}: ids are not contiguous", path.display())))
}

fn read_triple_file(path: &Path, n_ent: usize, n_rel: usize) -> Result<Vec<Triple>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing triple count"))?
        .map_err(|e| Error::io(path, e))?;
    let count: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, 1, format!("bad triple count `{header}`")))?;
    let mut out = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<u32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, no, "non-numeric field"))?;
        let [h, t, r] = nums[..] else {
            return Err(Error::parse(path, no, "expected `e1 e2 rel`"));
        };
        if h as usize >= n_ent || t as usize >= n_ent || r as usize >= n_rel {
            return Err(Error::parse(path, no, "id out of range"));
        }
        out.push(Triple::new(EntityId(h), RelationId(r), EntityId(t)));
    }
    if out.len() != count {
        return Err(Error::Format(format!(
            "{}: header announces {count} triples, found {}",
            path.display(),
            out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{assemble_kg, parse_annotations, parse_triples, Vocabulary};
    use crate::split::{GdaPair, SplitDataset};
    use std::sync::Arc;

    fn small() -> (KnowledgeGraph, SplitDataset) {
        let mut v = Vocabulary::new();
        let p = Path::new("x");
        let onto = parse_triples("A\tis_a\tB\n".as_bytes(), p, &mut v).unwrap();
        let g = parse_annotations("g1\tA\ng2\tB\n".as_bytes(), p, "GO", EntityKind::Gene, &mut v).unwrap();
        let d = parse_annotations("d1\tA\nd2\tB\n".as_bytes(), p, "HP", EntityKind::Disease, &mut v).unwrap();
        let id = |v: &Vocabulary, n: &str| v.entity_id(n).unwrap();
        let train_pos = vec![
            GdaPair::positive(id(&v, "g1"), id(&v, "d1")),
            GdaPair::positive(id(&v, "g2"), id(&v, "d2")),
        ];
        let split = SplitDataset {
            train_pos: train_pos.clone(),
            train_neg: vec![],
            test_pos: vec![],
            test_neg: vec![],
            seed: 0,
            fraction: 0.7,
        };
        let kg = assemble_kg(Arc::new(v), &onto, &[g, d], &[], Some(&train_pos), "v").unwrap();
        (kg, split)
    }

    #[test]
    fn count_lines_and_round_trip() {
        let (kg, split) = small();
        let dir = tempfile::tempdir().unwrap();
        export_numeric(&kg, &split, dir.path()).unwrap();
        let train = fs::read_to_string(dir.path().join(TRAIN_FILE)).unwrap();
        assert_eq!(train.lines().next(), Some(kg.len().to_string().as_str()));
        let test = fs::read_to_string(dir.path().join(TEST_FILE)).unwrap();
        assert_eq!(test, "0\n");

        let back = read_numeric(dir.path()).unwrap();
        let mut a = back.train.clone();
        let mut b = kg.triples().to_vec();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(back.entities.len(), kg.num_entities());
        assert_eq!(back.association_entities.len(), 4);
    }

    #[test]
    fn two_train_triples_header() {
        let mut v = Vocabulary::new();
        let onto = parse_triples("a\tr\tb\nb\tr\tc\n".as_bytes(), Path::new("x"), &mut v).unwrap();
        let kg = KnowledgeGraph::from_triples(Arc::new(v), "v", onto).unwrap();
        let split = SplitDataset::default();
        let dir = tempfile::tempdir().unwrap();
        export_numeric(&kg, &split, dir.path()).unwrap();
        let train = fs::read_to_string(dir.path().join(TRAIN_FILE)).unwrap();
        assert_eq!(train.lines().next(), Some("2"));
    }

    #[test]
    fn split_entity_of_wrong_kind_is_rejected() {
        let (kg, mut split) = small();
        let a = kg.vocab().entity_id("A").unwrap();
        split.test_pos.push(GdaPair::positive(a, a));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_numeric(&kg, &split, dir.path()),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn header_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        fs::write(&p, "3\n0 1 0\n").unwrap();
        assert!(read_triple_file(&p, 2, 1).is_err());
    }
}
