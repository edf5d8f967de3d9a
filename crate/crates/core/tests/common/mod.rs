#![allow(dead_code)]

pub mod alloc;

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use typecorpus::corpus_link::{
    link_document, DictionaryMatcher, LinkContext, LinkedDocument, Mention, MentionSource,
    RawDocument, Span,
};
use typecorpus::kg_ingest::{collect_labels, ingest_lines, EntityTable, IngestOptions};
use typecorpus::ontology::{build_ontology, EntityTypeIndex, TypeNode, TypeOntology};
use typecorpus::Catalog;

pub const MINI_DUMP: &str = include_str!("../../../../data/mini/dump.jsonl");
pub const MINI_ARTICLES: &str = include_str!("../../../../data/mini/articles.jsonl");

pub fn mini_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini")
}

pub struct Kb {
    pub entities: EntityTable,
    pub ontology: TypeOntology,
    pub index: EntityTypeIndex,
}

impl Kb {
    pub fn from_dump(text: &str) -> Kb {
        let ingested = ingest_lines(text.lines(), &IngestOptions::default()).unwrap();
        let wanted: HashSet<String> = ingested
            .entities
            .iter()
            .flat_map(|e| e.types.iter().cloned())
            .filter(|t| ingested.entities.get(t).is_none())
            .collect();
        let labels = collect_labels(text.as_bytes(), &wanted).unwrap();
        let (ontology, index) = build_ontology(&ingested.entities, &labels);
        Kb {
            entities: ingested.entities,
            ontology,
            index,
        }
    }

    pub fn mini() -> Kb {
        Kb::from_dump(MINI_DUMP)
    }

    pub fn catalog(&self) -> Catalog<'_> {
        Catalog::new(&self.entities, &self.ontology, &self.index)
    }

    pub fn link(&self, raw: &RawDocument) -> LinkedDocument {
        let pages = self.entities.page_table();
        let matcher = DictionaryMatcher::new(&self.entities);
        let ctx = LinkContext {
            pages: &pages,
            index: &self.index,
            matcher: &matcher,
            augment: true,
        };
        link_document(raw, &ctx)
            .unwrap()
            .0
            .expect("document keeps mentions")
    }
}

pub fn mini_article(doc_id: &str) -> RawDocument {
    MINI_ARTICLES
        .lines()
        .map(|l| serde_json::from_str::<RawDocument>(l).unwrap())
        .find(|d| d.doc_id == doc_id)
        .unwrap_or_else(|| panic!("no article {doc_id}"))
}

pub fn mention_by_surface<'d>(doc: &'d LinkedDocument, surface: &str) -> &'d Mention {
    doc.mentions
        .iter()
        .find(|m| m.surface == surface)
        .unwrap_or_else(|| panic!("no mention {surface:?}"))
}

/// A document whose text is the entity ids separated by spaces, one mention
/// per listed entity in order.
pub fn doc_of(doc_id: &str, entities: &[String]) -> LinkedDocument {
    let mut text = String::new();
    let mut mentions = Vec::new();
    for e in entities {
        if !text.is_empty() {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(e);
        mentions.push(Mention {
            span: Span::new(start, text.len()),
            surface: e.clone(),
            entity: e.clone(),
            source: MentionSource::Hyperlink,
        });
    }
    LinkedDocument {
        doc_id: doc_id.to_string(),
        text,
        mentions,
    }
}

/// Entity `E{i}` gets 1..=max_types distinct types drawn from `T0..T{n_types}`.
pub fn random_index(
    rng: &mut impl Rng,
    n_entities: usize,
    n_types: usize,
    max_types: usize,
) -> EntityTypeIndex {
    let pool: Vec<String> = (0..n_types).map(|t| format!("T{t}")).collect();
    let mut index = EntityTypeIndex::default();
    for i in 0..n_entities {
        let k = rng.gen_range(1..=max_types);
        let types: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
        index.insert(format!("E{i}"), types);
    }
    index
}

/// Up to `max_entities` entities, some mentioned more than once.
pub fn random_doc(
    rng: &mut impl Rng,
    doc_id: &str,
    n_entities: usize,
    max_entities: usize,
) -> LinkedDocument {
    let k = rng.gen_range(1..=max_entities);
    let mut mentioned: Vec<String> = (0..k)
        .map(|_| format!("E{}", rng.gen_range(0..n_entities)))
        .collect();
    if rng.gen_bool(0.3) {
        let again = mentioned[rng.gen_range(0..mentioned.len())].clone();
        mentioned.push(again);
    }
    doc_of(doc_id, &mentioned)
}

/// Nested loops over the document's other entities.
pub fn oracle_relevant(doc: &LinkedDocument, entity: &str, index: &EntityTypeIndex) -> Vec<String> {
    let own = index.types_of(entity).unwrap();
    let mut shared = Vec::new();
    for t in own {
        let mut found = false;
        for m in &doc.mentions {
            if m.entity != entity && index.types_of(&m.entity).unwrap().contains(t) {
                found = true;
            }
        }
        if found {
            shared.push(t.clone());
        }
    }
    if shared.is_empty() {
        own.to_vec()
    } else {
        shared
    }
}

/// Nodes `N0..N{n}` placed in a shuffled order; each node may take parents
/// from earlier positions only, so the result is acyclic.
pub fn random_dag(rng: &mut impl Rng, n: usize, edge_p: f64) -> Vec<TypeNode> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut nodes: Vec<TypeNode> = (0..n)
        .map(|i| TypeNode {
            id: format!("N{i}"),
            name: format!("n{i}"),
            parents: Vec::new(),
            dangling: false,
        })
        .collect();
    for pos in 1..n {
        let child = order[pos];
        for &parent in &order[..pos] {
            if rng.gen_bool(edge_p) {
                nodes[child].parents.push(format!("N{parent}"));
            }
        }
    }
    nodes.shuffle(rng);
    nodes
}

/// Reachability by repeated relaxation until nothing changes.
pub fn oracle_ancestors(nodes: &[TypeNode]) -> HashMap<String, BTreeSet<String>> {
    let parents: HashMap<&str, &Vec<String>> =
        nodes.iter().map(|n| (n.id.as_str(), &n.parents)).collect();
    let mut reach: HashMap<String, BTreeSet<String>> = nodes
        .iter()
        .map(|n| (n.id.clone(), n.parents.iter().cloned().collect()))
        .collect();
    loop {
        let mut changed = false;
        for n in nodes {
            let current: Vec<String> = reach[&n.id].iter().cloned().collect();
            for a in current {
                for p in parents.get(a.as_str()).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if reach.get_mut(&n.id).unwrap().insert(p.clone()) {
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (id, set) in reach.iter_mut() {
        set.remove(id);
    }
    reach
}

/// True iff consecutive elements are parent edges and the walk is closed.
pub fn is_genuine_cycle(nodes: &[TypeNode], cycle: &[String]) -> bool {
    let parents: HashMap<&str, &Vec<String>> =
        nodes.iter().map(|n| (n.id.as_str(), &n.parents)).collect();
    cycle.len() >= 2
        && cycle.first() == cycle.last()
        && cycle.windows(2).all(|w| {
            parents
                .get(w[0].as_str())
                .is_some_and(|ps| ps.contains(&w[1]))
        })
}
