use crate::kg_ingest::EntityTable;
use crate::ontology::{EntityTypeIndex, TypeOntology};

/// Read-only view over the tables that generation, statistics and
/// evaluation need.
#[derive(Clone, Copy)]
pub struct Catalog<'a> {
    pub entities: &'a EntityTable,
    pub ontology: &'a TypeOntology,
    pub index: &'a EntityTypeIndex,
}

impl<'a> Catalog<'a> {
    pub fn new(
        entities: &'a EntityTable,
        ontology: &'a TypeOntology,
        index: &'a EntityTypeIndex,
    ) -> Self {
        Catalog {
            entities,
            ontology,
            index,
        }
    }

    /// Type name, or the id itself when the ontology has no node for it.
    pub fn type_name<'b>(&'b self, type_id: &'b str) -> &'b str {
        self.ontology.name(type_id).unwrap_or(type_id)
    }

    pub fn entity_name<'b>(&'b self, entity_id: &'b str) -> &'b str {
        self.entities.label(entity_id).unwrap_or(entity_id)
    }
}
