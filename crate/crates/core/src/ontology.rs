//! The type ontology (a DAG over subclass-of edges) and the entity → type
//! index.

use std::collections::{HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_ingest::{EntityTable, SUBCLASS_OF};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeNode {
    pub id: String,
    pub name: String,
    /// Subclass-of targets in claim order.
    pub parents: Vec<String>,
    /// No record for this id was available; `name` is the id itself.
    pub dangling: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeOntology {
    nodes: IndexMap<String, TypeNode>,
}

/// A witness cycle, first and last element equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    pub cycle: Vec<String>,
}

impl TypeOntology {
    pub fn from_nodes(nodes: impl IntoIterator<Item = TypeNode>) -> Self {
        TypeOntology {
            nodes: nodes.into_iter().map(|n| (n.id.clone(), n)).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, id: &str) -> Option<&TypeNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn name(&self, id: &str) -> Option<&str> {
        self.nodes.get(id).map(|n| n.name.as_str())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TypeNode> {
        self.nodes.values()
    }

    pub fn dangling(&self) -> impl Iterator<Item = &TypeNode> {
        self.nodes.values().filter(|n| n.dangling)
    }

    /// Succeeds iff the parent relation admits a topological order.
    pub fn validate_acyclic(&self) -> std::result::Result<(), CycleReport> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let index: HashMap<&str, usize> = self
            .nodes
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let parents: Vec<Vec<usize>> = self
            .nodes
            .values()
            .map(|n| {
                n.parents
                    .iter()
                    .filter_map(|p| index.get(p.as_str()).copied())
                    .collect()
            })
            .collect();
        let mut mark = vec![Mark::New; parents.len()];
        // explicit stack of (node, next parent position) so deep chains don't
        // overflow the call stack
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..parents.len() {
            if mark[root] != Mark::New {
                continue;
            }
            mark[root] = Mark::Active;
            stack.push((root, 0));
            while let Some(top) = stack.last_mut() {
                let (node, pos) = *top;
                if pos < parents[node].len() {
                    top.1 += 1;
                    let next = parents[node][pos];
                    match mark[next] {
                        Mark::New => {
                            mark[next] = Mark::Active;
                            stack.push((next, 0));
                        }
                        Mark::Active => {
                            let start = stack.iter().position(|&(n, _)| n == next).unwrap();
                            let mut cycle: Vec<String> = stack[start..]
                                .iter()
                                .map(|&(n, _)| self.nodes.get_index(n).unwrap().0.clone())
                                .collect();
                            cycle.push(cycle[0].clone());
                            return Err(CycleReport { cycle });
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Transitive closure over parent edges, excluding `type_id` itself.
    pub fn ancestors(&self, type_id: &str) -> Result<HashSet<String>> {
        let start = self
            .nodes
            .get(type_id)
            .ok_or_else(|| Error::UnknownType(type_id.to_string()))?;
        let mut seen: HashSet<String> = HashSet::new();
        let mut queue: VecDeque<&str> = start.parents.iter().map(String::as_str).collect();
        while let Some(t) = queue.pop_front() {
            if !seen.insert(t.to_string()) {
                continue;
            }
            if let Some(node) = self.nodes.get(t) {
                queue.extend(node.parents.iter().map(String::as_str));
            }
        }
        seen.remove(type_id);
        Ok(seen)
    }
}

/// Entity id → direct types in claim order. Entities without types are never
/// present.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityTypeIndex {
    map: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexLine {
    pub entity: String,
    pub types: Vec<String>,
}

impl EntityTypeIndex {
    pub fn insert(&mut self, entity: impl Into<String>, types: Vec<String>) {
        debug_assert!(!types.is_empty());
        self.map.insert(entity.into(), types);
    }

    pub fn types_of(&self, entity_id: &str) -> Result<&[String]> {
        self.map
            .get(entity_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownEntity(entity_id.to_string()))
    }

    pub fn contains(&self, entity_id: &str) -> bool {
        self.map.contains_key(entity_id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }

    pub fn to_lines(&self) -> impl Iterator<Item = IndexLine> + '_ {
        self.map.iter().map(|(e, t)| IndexLine {
            entity: e.clone(),
            types: t.clone(),
        })
    }

    pub fn from_lines(lines: impl IntoIterator<Item = IndexLine>) -> Self {
        EntityTypeIndex {
            map: lines.into_iter().map(|l| (l.entity, l.types)).collect(),
        }
    }
}

/// Builds the ontology and type index from retained entities.
///
/// `extra_names` supplies labels for type ids whose records were not retained;
/// ids with neither a record nor an extra name become dangling placeholders
/// named by their id.
pub fn build_ontology(
    table: &EntityTable,
    extra_names: &HashMap<String, String>,
) -> (TypeOntology, EntityTypeIndex) {
    let mut order: IndexMap<String, ()> = IndexMap::new();
    let mut index = EntityTypeIndex::default();
    for entry in table.iter() {
        for t in &entry.types {
            order.entry(t.clone()).or_default();
        }
        if entry.claims.iter().any(|(p, _)| p == SUBCLASS_OF) {
            order.entry(entry.id.clone()).or_default();
        }
        index.insert(entry.id.clone(), entry.types.clone());
    }

    let nodes = order.into_keys().map(|id| match table.get(&id) {
        Some(entry) => {
            let mut parents: Vec<String> = Vec::new();
            for (p, target) in &entry.claims {
                if p == SUBCLASS_OF && !parents.contains(target) {
                    parents.push(target.clone());
                }
            }
            TypeNode {
                name: entry.label.clone(),
                parents,
                dangling: false,
                id,
            }
        }
        None => match extra_names.get(&id) {
            Some(name) => TypeNode {
                name: name.clone(),
                parents: Vec::new(),
                dangling: false,
                id,
            },
            None => TypeNode {
                name: id.clone(),
                parents: Vec::new(),
                dangling: true,
                id,
            },
        },
    });
    (TypeOntology::from_nodes(nodes), index)
}
