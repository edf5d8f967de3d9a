use std::collections::HashSet;

use crate::corpus_link::LinkedDocument;
use crate::error::{Error, Result};
use crate::ontology::EntityTypeIndex;

/// The subset of `entity_id`'s types shared with at least one other entity
/// mentioned in `doc`, in the entity's own type order. Falls back to all of
/// the entity's types when nothing is shared.
pub fn relevant_types(
    doc: &LinkedDocument,
    entity_id: &str,
    index: &EntityTypeIndex,
) -> Result<Vec<String>> {
    if !doc.mentions.iter().any(|m| m.entity == entity_id) {
        return Err(Error::NotMentioned {
            doc_id: doc.doc_id.clone(),
            entity: entity_id.to_string(),
        });
    }
    let own = index.types_of(entity_id)?;
    if own.len() == 1 {
        return Ok(own.to_vec());
    }
    let mut others: HashSet<&str> = HashSet::new();
    for other in doc.entities() {
        if other == entity_id {
            continue;
        }
        if let Ok(types) = index.types_of(other) {
            others.extend(types.iter().map(String::as_str));
        }
    }
    let shared: Vec<String> = own
        .iter()
        .filter(|t| others.contains(t.as_str()))
        .cloned()
        .collect();
    Ok(if shared.is_empty() {
        own.to_vec()
    } else {
        shared
    })
}

/// Relevance filtering can be switched off, in which case every direct type
/// is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeFilter {
    SharedWithContext,
    AllTypes,
}

impl TypeFilter {
    pub fn from_flag(relevance_filter: bool) -> Self {
        if relevance_filter {
            TypeFilter::SharedWithContext
        } else {
            TypeFilter::AllTypes
        }
    }

    pub fn types(
        self,
        doc: &LinkedDocument,
        entity_id: &str,
        index: &EntityTypeIndex,
    ) -> Result<Vec<String>> {
        match self {
            TypeFilter::SharedWithContext => relevant_types(doc, entity_id, index),
            TypeFilter::AllTypes => {
                if !doc.mentions.iter().any(|m| m.entity == entity_id) {
                    return Err(Error::NotMentioned {
                        doc_id: doc.doc_id.clone(),
                        entity: entity_id.to_string(),
                    });
                }
                Ok(index.types_of(entity_id)?.to_vec())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_link::{Mention, MentionSource, Span};

    fn doc(entities: &[&str]) -> LinkedDocument {
        let mut text = String::new();
        let mut mentions = Vec::new();
        for e in entities {
            let start = text.len();
            text.push_str(e);
            mentions.push(Mention {
                span: Span::new(start, text.len()),
                surface: e.to_string(),
                entity: e.to_string(),
                source: MentionSource::Hyperlink,
            });
            text.push(' ');
        }
        LinkedDocument {
            doc_id: "d".into(),
            text,
            mentions,
        }
    }

    fn index(entries: &[(&str, &[&str])]) -> EntityTypeIndex {
        let mut idx = EntityTypeIndex::default();
        for (e, ts) in entries {
            idx.insert(*e, ts.iter().map(|t| t.to_string()).collect());
        }
        idx
    }

    #[test]
    fn obama_and_palmer_share_politician() {
        let idx = index(&[
            (
                "Obama",
                &[
                    "politician",
                    "jurist",
                    "political writer",
                    "community organizer",
                    "podcaster",
                ],
            ),
            ("Palmer", &["politician"]),
        ]);
        let d = doc(&["Obama", "Palmer"]);
        assert_eq!(relevant_types(&d, "Obama", &idx).unwrap(), ["politician"]);
    }

    #[test]
    fn single_type_is_kept() {
        let idx = index(&[("a", &["x"]), ("b", &["y"])]);
        assert_eq!(relevant_types(&doc(&["a", "b"]), "a", &idx).unwrap(), ["x"]);
    }

    #[test]
    fn no_overlap_falls_back_to_all_types() {
        let idx = index(&[("a", &["x", "y"]), ("b", &["z"])]);
        assert_eq!(
            relevant_types(&doc(&["a", "b"]), "a", &idx).unwrap(),
            ["x", "y"]
        );
    }

    #[test]
    fn repeated_mentions_of_self_do_not_count() {
        let idx = index(&[("a", &["x", "y"])]);
        assert_eq!(
            relevant_types(&doc(&["a", "a"]), "a", &idx).unwrap(),
            ["x", "y"]
        );
    }

    #[test]
    fn order_follows_entity_types() {
        let idx = index(&[("a", &["x", "y", "z"]), ("b", &["z", "x"])]);
        assert_eq!(
            relevant_types(&doc(&["a", "b"]), "a", &idx).unwrap(),
            ["x", "z"]
        );
    }

    #[test]
    fn unmentioned_entity_is_an_error() {
        let idx = index(&[("a", &["x"]), ("b", &["x"])]);
        assert!(matches!(
            relevant_types(&doc(&["a"]), "b", &idx),
            Err(Error::NotMentioned { .. })
        ));
    }

    #[test]
    fn filter_off_returns_everything() {
        let idx = index(&[("a", &["x", "y"]), ("b", &["x"])]);
        let d = doc(&["a", "b"]);
        assert_eq!(
            TypeFilter::AllTypes.types(&d, "a", &idx).unwrap(),
            ["x", "y"]
        );
        assert_eq!(
            TypeFilter::SharedWithContext.types(&d, "a", &idx).unwrap(),
            ["x"]
        );
    }
}
