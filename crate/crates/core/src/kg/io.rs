//! Readers for the plain-text ingredient files: ontology triples, annotation
//! lists and cross-ontology links.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::vocab::{
    annotation_relation, EntityId, EntityKind, RelationId, Vocabulary, LOGICAL_DEFINITION,
    ONTOLOGY_MAPPING,
};
use crate::kg::Triple;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn lines<'a, R: Read + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .map(move |(i, l)| l.map(|l| (i + 1, l)).map_err(|e| Error::io(path, e)))
}

/// Reads a `subject<TAB>predicate<TAB>object` file. Subjects and objects are
/// registered as ontology classes unless already known under another kind.
pub fn load_triples(path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Triple>> {
    parse_triples(open(path)?, path, vocab)
}

pub fn parse_triples<R: Read>(reader: R, path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for line in lines(reader, path) {
        let (no, line) = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let head = vocab.entity(fields[0], EntityKind::OntologyClass)?;
        let relation = vocab.relation(fields[1]);
        let tail = vocab.entity(fields[2], EntityKind::OntologyClass)?;
        out.push(Triple { head, relation, tail });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub entity: EntityId,
    /// Distinct terms in first-seen order.
    pub terms: Vec<EntityId>,
}

/// Every annotation of one kind of entity against one ontology source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub source: String,
    pub kind: EntityKind,
    pub relation: RelationId,
    pub entries: Vec<Annotation>,
}

impl AnnotationSet {
    pub fn num_edges(&self) -> usize {
        self.entries.iter().map(|a| a.terms.len()).sum()
    }
}

/// Reads an `entity<TAB>term1 term2 ...` file. Repeated entity lines are merged
/// by set union; a term equal to its own entity is rejected.
pub fn load_annotations(
    path: &Path,
    source: &str,
    kind: EntityKind,
    vocab: &mut Vocabulary,
) -> Result<AnnotationSet> {
    parse_annotations(open(path)?, path, source, kind, vocab)
}

pub fn parse_annotations<R: Read>(
    reader: R,
    path: &Path,
    source: &str,
    kind: EntityKind,
    vocab: &mut Vocabulary,
) -> Result<AnnotationSet> {
    let relation = vocab.relation(&annotation_relation(source));
    let mut entries: Vec<Annotation> = Vec::new();
    let mut slot: std::collections::HashMap<EntityId, usize> = Default::default();
    for line in lines(reader, path) {
        let (no, line) = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((name, rest)) = line.split_once('\t') else {
            return Err(Error::parse(path, no, "expected `entity<TAB>terms`"));
        };
        let entity = vocab.entity(name, kind)?;
        let idx = *slot.entry(entity).or_insert_with(|| {
            entries.push(Annotation {
                entity,
                terms: Vec::new(),
            });
            entries.len() - 1
        });
        for term in rest.split_whitespace() {
            if term == name {
                return Err(Error::parse(
                    path,
                    no,
                    format!("self-annotation of `{name}`"),
                ));
            }
            let t = vocab.entity(term, EntityKind::OntologyClass)?;
            let terms = &mut entries[idx].terms;
            if !terms.contains(&t) {
                terms.push(t);
            }
        }
    }
    Ok(AnnotationSet {
        source: source.to_owned(),
        kind,
        relation,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    LogicalDefinition,
    OntologyMapping,
}

impl LinkKind {
    pub fn relation_label(self) -> &'static str {
        match self {
            LinkKind::LogicalDefinition => LOGICAL_DEFINITION,
            LinkKind::OntologyMapping => ONTOLOGY_MAPPING,
        }
    }
}

/// Cross-ontology class links of one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSet {
    pub kind: LinkKind,
    pub relation: RelationId,
    pub pairs: Vec<(EntityId, EntityId)>,
}

/// Reads a link file with lines `class_a<TAB>class_b` or
/// `class_a<TAB>predicate<TAB>class_b` (the predicate is replaced by the
/// dedicated relation label of `kind`).
pub fn load_links(path: &Path, kind: LinkKind, vocab: &mut Vocabulary) -> Result<LinkSet> {
    parse_links(open(path)?, path, kind, vocab)
}

pub fn parse_links<R: Read>(
    reader: R,
    path: &Path,
    kind: LinkKind,
    vocab: &mut Vocabulary,
) -> Result<LinkSet> {
    let relation = vocab.relation(kind.relation_label());
    let mut pairs = Vec::new();
    for line in lines(reader, path) {
        let (no, line) = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (a, b) = match fields.as_slice() {
            [a, b] | [a, _, b] => (*a, *b),
            _ => {
                return Err(Error::parse(
                    path,
                    no,
                    format!("expected 2 or 3 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        let a = vocab.entity(a, EntityKind::OntologyClass)?;
        let b = vocab.entity(b, EntityKind::OntologyClass)?;
        pairs.push((a, b));
    }
    Ok(LinkSet {
        kind,
        relation,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.tsv")
    }

    #[test]
    fn two_line_triple_file() {
        let mut v = Vocabulary::new();
        let rels_before = v.num_relations();
        let t = parse_triples("t1\tsubclassOf\tt2\nt2\tsubclassOf\tt3\n".as_bytes(), p(), &mut v).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(v.num_entities(), 3);
        assert_eq!(v.num_relations() - rels_before, 1);
        assert_eq!(t[0].tail, t[1].head);
    }

    #[test]
    fn empty_triple_file_is_not_an_error() {
        let mut v = Vocabulary::new();
        assert!(parse_triples("".as_bytes(), p(), &mut v).unwrap().is_empty());
    }

    #[test]
    fn two_field_line_names_line_number() {
        let mut v = Vocabulary::new();
        let err = parse_triples("a\tb\n".as_bytes(), p(), &mut v).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn annotation_line_tags_entity_kind() {
        let mut v = Vocabulary::new();
        let set = parse_annotations(
            "gene/4524\tGO_1 GO_2\n".as_bytes(),
            p(),
            "GO",
            EntityKind::Gene,
            &mut v,
        )
        .unwrap();
        assert_eq!(set.entries.len(), 1);
        let a = &set.entries[0];
        assert_eq!(v.entity_name(a.entity), "gene/4524");
        assert_eq!(v.kind(a.entity), EntityKind::Gene);
        let names: Vec<_> = a.terms.iter().map(|&t| v.entity_name(t)).collect();
        assert_eq!(names, ["GO_1", "GO_2"]);
        assert_eq!(v.relation_name(set.relation), "hasAnnotation_GO");
    }

    #[test]
    fn duplicate_entity_lines_merge() {
        let mut v = Vocabulary::new();
        let set = parse_annotations("g\tA\ng\tA B\n".as_bytes(), p(), "GO", EntityKind::Gene, &mut v).unwrap();
        assert_eq!(set.entries.len(), 1);
        assert_eq!(set.entries[0].terms.len(), 2);
    }

    #[test]
    fn self_annotation_rejected() {
        let mut v = Vocabulary::new();
        assert!(parse_annotations("g\tA g\n".as_bytes(), p(), "GO", EntityKind::Gene, &mut v).is_err());
    }

    #[test]
    fn links_accept_two_or_three_columns() {
        let mut v = Vocabulary::new();
        let l = parse_links("a\tb\nc\tequiv\td\n".as_bytes(), p(), LinkKind::OntologyMapping, &mut v).unwrap();
        assert_eq!(l.pairs.len(), 2);
        assert_eq!(v.relation_name(l.relation), "ontologyMapping");
        assert!(parse_links("a\n".as_bytes(), p(), LinkKind::OntologyMapping, &mut v).is_err());
    }
}
