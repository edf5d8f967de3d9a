//! Builds a type-centric question-answering corpus from a knowledge-graph
//! projection and hyperlinked articles, and scores model output for
//! fine-grained entity typing and zero-shot dialog state tracking.
//!
//! Stages, in pipeline order:
//!
//! * [`kg_ingest`]: stream entity records and resolve their direct types.
//! * [`ontology`]: the subclass-of DAG and the entity → type index.
//! * [`corpus_link`]: hyperlinks to typed mentions, mention augmentation,
//!   train / test / test-new-entity splits.
//! * [`relevance`]: context-relevant subset of an entity's types.
//! * [`qagen`]: discovery, typing, recognition and slot-filling questions.
//! * [`stats`]: corpus statistics.
//! * [`typing_eval`] and [`dst`]: evaluation protocols.

pub mod catalog;
pub mod config;
pub mod corpus_link;
pub mod dst;
mod error;
pub mod io;
pub mod kg_ingest;
pub mod ontology;
pub mod pipeline;
pub mod qagen;
pub mod relevance;
pub mod stats;
pub mod typing_eval;

pub use catalog::Catalog;
pub use error::{Error, Result};
