//! Triple store and KG variant assembly.
//!
//! A KG variant is built from ingredient files (ontology triples, annotation
//! sets, logical-definition and mapping links) and, for the link-prediction
//! task only, the positive training pairs as `association` edges.

mod export;
mod io;
mod vocab;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::split::{GdaPair, Label};

pub use export::{export_numeric, read_numeric, NumericExport};
pub use io::{
    load_annotations, load_links, load_triples, parse_annotations, parse_links, parse_triples,
    Annotation, AnnotationSet, LinkKind, LinkSet,
};
pub use vocab::{
    annotation_relation, EntityId, EntityKind, RelationId, Vocabulary, ASSOCIATION,
    LOGICAL_DEFINITION, ONTOLOGY_MAPPING,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple { head, relation, tail }
    }
}

/// Counts reported per KG variant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub triples: usize,
    pub classes: usize,
    pub annotated_genes: usize,
    pub annotated_diseases: usize,
    pub annotation_edges: usize,
    pub logical_definitions: usize,
    pub mappings: usize,
    pub associations: usize,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    variant: String,
    vocab: Arc<Vocabulary>,
    triples: Vec<Triple>,
    out: Vec<Vec<(RelationId, EntityId)>>,
    stats: KgStats,
}

impl KnowledgeGraph {
    /// Builds a graph directly from triples, dropping duplicates while keeping
    /// first-seen order.
    pub fn from_triples(vocab: Arc<Vocabulary>, variant: &str, triples: impl IntoIterator<Item = Triple>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for t in triples {
            if !vocab.contains(t.head) || !vocab.contains(t.tail) || t.relation.index() >= vocab.num_relations() {
                return Err(Error::Inconsistent(format!(
                    "triple ({}, {}, {}) references ids outside the vocabulary",
                    t.head, t.relation, t.tail
                )));
            }
            if seen.insert(t) {
                kept.push(t);
            }
        }
        let mut out = vec![Vec::new(); vocab.num_entities()];
        for t in &kept {
            out[t.head.index()].push((t.relation, t.tail));
        }
        let stats = compute_stats(&vocab, &kept);
        Ok(KnowledgeGraph {
            variant: variant.to_owned(),
            vocab,
            triples: kept,
            out,
            stats,
        })
    }

    pub fn variant(&self) -> &str {
        &self.variant
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shared_vocab(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn out_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        self.out.get(e.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn kind(&self, e: EntityId) -> EntityKind {
        self.vocab.kind(e)
    }

    pub fn stats(&self) -> &KgStats {
        &self.stats
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.out_edges(t.head).contains(&(t.relation, t.tail))
    }

    /// Set of all triples, for filtered negative sampling.
    pub fn triple_set(&self) -> HashSet<Triple> {
        self.triples.iter().copied().collect()
    }
}

fn compute_stats(vocab: &Vocabulary, triples: &[Triple]) -> KgStats {
    let mut classes = HashSet::new();
    let mut genes = HashSet::new();
    let mut diseases = HashSet::new();
    let mut stats = KgStats {
        triples: triples.len(),
        ..KgStats::default()
    };
    let ld = vocab.relation_id(LOGICAL_DEFINITION);
    let map = vocab.relation_id(ONTOLOGY_MAPPING);
    let assoc = vocab.association();
    for t in triples {
        for e in [t.head, t.tail] {
            if vocab.kind(e) == EntityKind::OntologyClass {
                classes.insert(e);
            }
        }
        if t.relation == assoc {
            stats.associations += 1;
        } else if Some(t.relation) == ld {
            stats.logical_definitions += 1;
        } else if Some(t.relation) == map {
            stats.mappings += 1;
        } else if vocab.relation_name(t.relation).starts_with("hasAnnotation_") {
            stats.annotation_edges += 1;
            match vocab.kind(t.head) {
                EntityKind::Gene => {
                    genes.insert(t.head);
                }
                EntityKind::Disease => {
                    diseases.insert(t.head);
                }
                EntityKind::OntologyClass => {}
            }
        }
    }
    stats.classes = classes.len();
    stats.annotated_genes = genes.len();
    stats.annotated_diseases = diseases.len();
    stats
}

/// Assembles one KG variant.
///
/// Contents: ontology triples, one `hasAnnotation_<source>` edge per
/// (entity, term), one edge per logical definition or mapping under its own
/// relation label and, iff `training_edges` is given, one `association` edge
/// per positive training pair. Duplicates are dropped.
pub fn assemble_kg(
    vocab: Arc<Vocabulary>,
    ontology: &[Triple],
    annotations: &[AnnotationSet],
    links: &[LinkSet],
    training_edges: Option<&[GdaPair]>,
    variant: &str,
) -> Result<KnowledgeGraph> {
    let mut triples: Vec<Triple> = Vec::with_capacity(
        ontology.len() + annotations.iter().map(AnnotationSet::num_edges).sum::<usize>(),
    );
    triples.extend_from_slice(ontology);
    let mut annotated = HashSet::new();
    for set in annotations {
        for a in &set.entries {
            if !a.terms.is_empty() {
                annotated.insert(a.entity);
            }
            triples.extend(a.terms.iter().map(|&term| Triple::new(a.entity, set.relation, term)));
        }
    }
    for set in links {
        triples.extend(set.pairs.iter().map(|&(a, b)| Triple::new(a, set.relation, b)));
    }
    if let Some(edges) = training_edges {
        let assoc = vocab.association();
        let mut bad = Vec::new();
        for p in edges {
            if p.label != Label::Positive {
                return Err(Error::InvalidArgument(format!(
                    "training edge ({}, {}) is not a positive pair",
                    p.gene, p.disease
                )));
            }
            let ok = vocab.contains(p.gene)
                && vocab.contains(p.disease)
                && annotated.contains(&p.gene)
                && annotated.contains(&p.disease);
            if !ok {
                bad.push(describe_pair(&vocab, p));
                continue;
            }
            triples.push(Triple::new(p.gene, assoc, p.disease));
        }
        if !bad.is_empty() {
            return Err(Error::Inconsistent(format!(
                "training edges reference unannotated or unknown entities: {}",
                bad.join(", ")
            )));
        }
    }
    KnowledgeGraph::from_triples(vocab, variant, triples)
}

fn describe_pair(vocab: &Vocabulary, p: &GdaPair) -> String {
    let name = |e: EntityId| {
        if vocab.contains(e) {
            vocab.entity_name(e).to_owned()
        } else {
            e.to_string()
        }
    };
    format!("({}, {})", name(p.gene), name(p.disease))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    struct Fixture {
        vocab: Arc<Vocabulary>,
        onto: Vec<Triple>,
        ann: Vec<AnnotationSet>,
        links: Vec<LinkSet>,
        g: EntityId,
        d: EntityId,
    }

    fn fixture() -> Fixture {
        let mut v = Vocabulary::new();
        let p = Path::new("x");
        let onto = parse_triples("A\tsubClassOf\tB\nC\tsubClassOf\tB\nA\tsubClassOf\tB\n".as_bytes(), p, &mut v).unwrap();
        let go = parse_annotations("g1\tA\n".as_bytes(), p, "GO", EntityKind::Gene, &mut v).unwrap();
        let hp = parse_annotations("d1\tC B\n".as_bytes(), p, "HP", EntityKind::Disease, &mut v).unwrap();
        let ld = parse_links("A\tC\n".as_bytes(), p, LinkKind::LogicalDefinition, &mut v).unwrap();
        let map = parse_links("A\tC\n".as_bytes(), p, LinkKind::OntologyMapping, &mut v).unwrap();
        let g = v.entity_id("g1").unwrap();
        let d = v.entity_id("d1").unwrap();
        Fixture {
            vocab: Arc::new(v),
            onto,
            ann: vec![go, hp],
            links: vec![ld, map],
            g,
            d,
        }
    }

    #[test]
    fn additivity_without_extras() {
        let f = fixture();
        let kg = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &[], None, "G+H").unwrap();
        // the ontology file repeats one axiom
        assert_eq!(kg.len(), 2 + 3);
        assert_eq!(kg.stats().annotated_genes, 1);
        assert_eq!(kg.stats().annotated_diseases, 1);
        assert_eq!(kg.stats().associations, 0);
    }

    #[test]
    fn ld_and_map_on_same_pair_are_distinct_relations() {
        let f = fixture();
        let kg = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &f.links, None, "G+H+L+M").unwrap();
        assert_eq!(kg.stats().logical_definitions, 1);
        assert_eq!(kg.stats().mappings, 1);
        assert_eq!(kg.len(), 5 + 2);
    }

    #[test]
    fn training_edges_differ_by_exactly_the_associations() {
        let f = fixture();
        let pairs = [GdaPair::positive(f.g, f.d)];
        let clf = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &f.links, None, "v").unwrap();
        let lp = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &f.links, Some(&pairs), "v").unwrap();
        let a = clf.triple_set();
        let b = lp.triple_set();
        let diff: Vec<_> = b.difference(&a).collect();
        assert_eq!(diff, vec![&Triple::new(f.g, f.vocab.association(), f.d)]);
        assert!(a.is_subset(&b));
        assert!(lp.contains(&Triple::new(f.g, f.vocab.association(), f.d)));
    }

    #[test]
    fn unannotated_training_edge_is_an_error() {
        let f = fixture();
        // `A` is an ontology class, never annotated
        let a = f.vocab.entity_id("A").unwrap();
        let pairs = [GdaPair::positive(a, f.d)];
        let err = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &[], Some(&pairs), "v").unwrap_err();
        assert!(err.to_string().contains("(A, d1)"), "{err}");
    }

    #[test]
    fn adjacency_matches_triples() {
        let f = fixture();
        let kg = assemble_kg(f.vocab.clone(), &f.onto, &f.ann, &f.links, None, "v").unwrap();
        let n: usize = (0..kg.num_entities()).map(|i| kg.out_edges(EntityId(i as u32)).len()).sum();
        assert_eq!(n, kg.len());
        for t in kg.triples() {
            assert!(kg.out_edges(t.head).contains(&(t.relation, t.tail)));
        }
    }
}
