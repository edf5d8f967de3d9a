use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("duplicate entity id {0}")]
    DuplicateEntity(String),

    #[error("unknown type id {0}")]
    UnknownType(String),

    #[error("entity {0} is not in the type index")]
    UnknownEntity(String),

    #[error("entity {entity} is not mentioned in document {doc_id}")]
    NotMentioned { doc_id: String, entity: String },

    #[error("mention at [{start}, {end}) is not part of document {doc_id}")]
    MentionNotInDocument {
        doc_id: String,
        start: usize,
        end: usize,
    },

    #[error("no mentioned entity in document {doc_id} has type {type_id}")]
    NoEntityOfType { doc_id: String, type_id: String },

    #[error("invalid document {doc_id}: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("type ontology has a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("cannot serialize an empty answer list")]
    EmptyAnswer,

    #[error("cannot parse an empty answer")]
    EmptyAnswerText,

    #[error("malformed belief state segment {0:?}")]
    MalformedBelief(String),

    #[error("unknown dialog domain {0}")]
    UnknownDomain(String),

    #[error("slot [{domain} {slot}] is not defined by any schema")]
    UnknownSlot { domain: String, slot: String },

    #[error("invalid dialog turn {turn_id}: {reason}")]
    InvalidTurn { turn_id: String, reason: String },

    #[error("duplicate prediction for {0}")]
    DuplicatePrediction(String),

    #[error("no prediction for turn {0}")]
    MissingPrediction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("external predictor failed: {0}")]
    Predictor(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure was caused by user-supplied input (files,
    /// configuration, flags) rather than a bug or environment fault.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Predictor(_))
    }
}
