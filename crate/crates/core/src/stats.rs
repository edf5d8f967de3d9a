use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus_link::LinkedDocument;
use crate::error::Result;
use crate::ontology::EntityTypeIndex;
use crate::relevance::TypeFilter;

/// Corpus-level counts. A type reference is one (mention, type) pair using
/// the mention's context-relevant types.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub documents: u64,
    pub unique_entities: u64,
    pub unique_types: u64,
    pub num_mentions: u64,
    pub type_references: u64,
}

/// Single streaming pass; memory is bounded by the distinct entity and type
/// sets, not by the number of documents.
pub struct StatsAccumulator<'a> {
    index: &'a EntityTypeIndex,
    filter: TypeFilter,
    entities: HashSet<String>,
    types: HashSet<String>,
    report: StatsReport,
}

impl<'a> StatsAccumulator<'a> {
    pub fn new(index: &'a EntityTypeIndex, filter: TypeFilter) -> Self {
        StatsAccumulator {
            index,
            filter,
            entities: HashSet::new(),
            types: HashSet::new(),
            report: StatsReport::default(),
        }
    }

    pub fn add(&mut self, doc: &LinkedDocument) -> Result<()> {
        self.report.documents += 1;
        self.report.num_mentions += doc.mentions.len() as u64;
        for entity in doc.entities() {
            let types = self.filter.types(doc, entity, self.index)?;
            let mentions = doc.mentions.iter().filter(|m| m.entity == entity).count() as u64;
            self.report.type_references += mentions * types.len() as u64;
            if !self.entities.contains(entity) {
                self.entities.insert(entity.to_string());
            }
            for t in types {
                self.types.insert(t);
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> StatsReport {
        self.report.unique_entities = self.entities.len() as u64;
        self.report.unique_types = self.types.len() as u64;
        self.report
    }
}

pub fn compute_corpus_stats<'d, I>(
    docs: I,
    index: &EntityTypeIndex,
    filter: TypeFilter,
) -> Result<StatsReport>
where
    I: IntoIterator<Item = &'d LinkedDocument>,
{
    let mut acc = StatsAccumulator::new(index, filter);
    for d in docs {
        acc.add(d)?;
    }
    Ok(acc.finish())
}

pub fn render_stats(report: &StatsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "documents = {}", report.documents);
    let _ = writeln!(out, "unique_entities = {}", report.unique_entities);
    let _ = writeln!(out, "unique_types = {}", report.unique_types);
    let _ = writeln!(out, "num_mentions = {}", report.num_mentions);
    let _ = writeln!(out, "type_references = {}", report.type_references);
    out
}
