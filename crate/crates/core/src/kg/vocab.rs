use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense handle of an entity, assigned in order of first sight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

/// Dense handle of a relation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    OntologyClass,
    Gene,
    Disease,
}

impl EntityKind {
    /// Genes and diseases are the only endpoints of `association` edges.
    pub fn is_association_endpoint(self) -> bool {
        matches!(self, EntityKind::Gene | EntityKind::Disease)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::OntologyClass => "class",
            EntityKind::Gene => "gene",
            EntityKind::Disease => "disease",
        };
        f.write_str(s)
    }
}

/// Relation label for gene-disease edges.
pub const ASSOCIATION: &str = "association";
pub const LOGICAL_DEFINITION: &str = "logicalDefinition";
pub const ONTOLOGY_MAPPING: &str = "ontologyMapping";

/// Relation label used for annotation edges from the given ontology source.
pub fn annotation_relation(source: &str) -> String {
    format!("hasAnnotation_{source}")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> (u32, bool) {
        if let Some(&id) = self.index.get(name) {
            return (id, false);
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        (id, true)
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }
}

/// Bidirectional string <-> id maps for entities and relations, plus the kind
/// of every entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entities: Interner,
    relations: Interner,
    kinds: Vec<EntityKind>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// Creates a vocabulary with the `association` relation pre-registered as
    /// relation 0, so that every KG variant built from it agrees on that id.
    pub fn new() -> Self {
        let mut v = Vocabulary {
            entities: Interner::default(),
            relations: Interner::default(),
            kinds: Vec::new(),
        };
        v.relation(ASSOCIATION);
        v
    }

    /// Registers `name` with `kind`, or returns the existing handle.
    ///
    /// An entity first seen as an ontology class may later be promoted to a
    /// gene or disease; a gene can never become a disease or vice versa.
    pub fn entity(&mut self, name: &str, kind: EntityKind) -> Result<EntityId> {
        let (id, fresh) = self.entities.intern(name);
        if fresh {
            self.kinds.push(kind);
        } else {
            let current = self.kinds[id as usize];
            match (current, kind) {
                (a, b) if a == b => {}
                (_, EntityKind::OntologyClass) => {}
                (EntityKind::OntologyClass, k) => self.kinds[id as usize] = k,
                (a, b) => {
                    return Err(Error::Inconsistent(format!(
                        "entity `{name}` registered as {a} and as {b}"
                    )))
                }
            }
        }
        Ok(EntityId(id))
    }

    pub fn relation(&mut self, name: &str) -> RelationId {
        RelationId(self.relations.intern(name).0)
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn association(&self) -> RelationId {
        RelationId(0)
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities.names[id.index()]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations.names[id.index()]
    }

    pub fn kind(&self, id: EntityId) -> EntityKind {
        self.kinds[id.index()]
    }

    pub fn num_entities(&self) -> usize {
        self.entities.names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.names.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = (EntityId, &str)> + '_ {
        self.entities
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (EntityId(i as u32), n.as_str()))
    }

    pub fn relations(&self) -> impl Iterator<Item = (RelationId, &str)> + '_ {
        self.relations
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (RelationId(i as u32), n.as_str()))
    }

    pub fn entities_of_kind(&self, kind: EntityKind) -> Vec<EntityId> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == kind)
            .map(|(i, _)| EntityId(i as u32))
            .collect()
    }

    pub fn contains(&self, id: EntityId) -> bool {
        id.index() < self.kinds.len()
    }
}
