//! Generation of the four pre-training question types.

mod answer;
mod plural;

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use answer::{parse_answer, serialize_answer};
pub use plural::pluralize;

use crate::catalog::Catalog;
use crate::corpus_link::{LinkedDocument, Mention};
use crate::error::{Error, Result};
use crate::relevance::TypeFilter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Discovery,
    Typing,
    Recognition,
    Slotfill,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::Discovery,
        Task::Typing,
        Task::Recognition,
        Task::Slotfill,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Discovery => "discovery",
            Task::Typing => "typing",
            Task::Recognition => "recognition",
            Task::Slotfill => "slotfill",
        }
    }
}

/// One text-to-text training record. `target` is the decoder sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub doc_id: String,
    pub task: Task,
    pub context: String,
    pub question: String,
    pub answer: String,
    pub target: String,
}

impl QAExample {
    fn new(doc: &LinkedDocument, task: Task, question: String, answer: String) -> Self {
        let target = format!("{question} {answer}");
        QAExample {
            doc_id: doc.doc_id.clone(),
            task,
            context: doc.text.clone(),
            question,
            answer,
            target,
        }
    }
}

/// Sampling weights for (discovery, typing, recognition, slot filling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMix {
    pub discovery: f64,
    pub typing: f64,
    pub recognition: f64,
    pub slotfill: f64,
}

impl Default for TaskMix {
    fn default() -> Self {
        TaskMix {
            discovery: 0.20,
            typing: 0.30,
            recognition: 0.20,
            slotfill: 0.30,
        }
    }
}

impl TaskMix {
    pub fn new(discovery: f64, typing: f64, recognition: f64, slotfill: f64) -> Result<Self> {
        let mix = TaskMix {
            discovery,
            typing,
            recognition,
            slotfill,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn weights(&self) -> [f64; 4] {
        [self.discovery, self.typing, self.recognition, self.slotfill]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config(format!(
                "task mix weights must be nonnegative: {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "task mix weights sum to {sum}, expected 1.0"
            )));
        }
        Ok(())
    }
}

/// Question templates. `{mention}` is replaced by a surface form and
/// `{types}` by a pluralized type name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Templates {
    pub discovery: String,
    pub typing: String,
    pub recognition: String,
    pub slotfill: String,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            discovery: "List all concepts and types mentioned here.".into(),
            typing: "What is {mention} an example of?".into(),
            recognition: "What does {mention} refer to?".into(),
            slotfill: "Which {types} are mentioned here?".into(),
        }
    }
}

/// Generates questions for linked documents.
pub struct QaGenerator<'a> {
    pub catalog: Catalog<'a>,
    pub templates: &'a Templates,
    pub filter: TypeFilter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTally {
    pub generated: u64,
    /// Draws abandoned after every retry hit a task with no candidates.
    pub skipped: u64,
}

impl std::ops::AddAssign for SampleTally {
    fn add_assign(&mut self, o: Self) {
        self.generated += o.generated;
        self.skipped += o.skipped;
    }
}

const TASK_RETRIES: usize = 8;

/// Seed for one document's sampler, derived from the global seed and doc id.
pub fn doc_seed(global_seed: u64, doc_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"qa\0");
    h.update(global_seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    h.finalize().into()
}

impl<'a> QaGenerator<'a> {
    pub fn new(catalog: Catalog<'a>, templates: &'a Templates, filter: TypeFilter) -> Self {
        QaGenerator {
            catalog,
            templates,
            filter,
        }
    }

    fn types(&self, doc: &LinkedDocument, entity: &str) -> Result<Vec<String>> {
        self.filter.types(doc, entity, self.catalog.index)
    }

    fn check_mention(doc: &LinkedDocument, mention: &Mention) -> Result<()> {
        if doc.mentions.iter().any(|m| m == mention) {
            Ok(())
        } else {
            Err(Error::MentionNotInDocument {
                doc_id: doc.doc_id.clone(),
                start: mention.span.start,
                end: mention.span.end,
            })
        }
    }

    fn first_type_name(&self, doc: &LinkedDocument, entity: &str) -> Result<String> {
        let types = self.types(doc, entity)?;
        Ok(self.catalog.type_name(&types[0]).to_string())
    }

    pub fn gen_discovery(&self, doc: &LinkedDocument) -> Result<QAExample> {
        let mut seen = HashSet::new();
        let mut items = Vec::new();
        for m in &doc.mentions {
            if !seen.insert((m.surface.as_str(), m.entity.as_str())) {
                continue;
            }
            items.push(format!(
                "{} ({})",
                m.surface,
                self.first_type_name(doc, &m.entity)?
            ));
        }
        let answer = serialize_answer(&items)?;
        Ok(QAExample::new(
            doc,
            Task::Discovery,
            self.templates.discovery.clone(),
            answer,
        ))
    }

    pub fn gen_typing(&self, doc: &LinkedDocument, mention: &Mention) -> Result<QAExample> {
        Self::check_mention(doc, mention)?;
        let types = self.types(doc, &mention.entity)?;
        let names: Vec<&str> = types.iter().map(|t| self.catalog.type_name(t)).collect();
        let answer = serialize_answer(&names)?;
        let question = self.templates.typing.replace("{mention}", &mention.surface);
        Ok(QAExample::new(doc, Task::Typing, question, answer))
    }

    pub fn gen_recognition(&self, doc: &LinkedDocument, mention: &Mention) -> Result<QAExample> {
        Self::check_mention(doc, mention)?;
        let answer = format!(
            "{} ({})",
            self.catalog.entity_name(&mention.entity),
            self.first_type_name(doc, &mention.entity)?
        );
        let question = self
            .templates
            .recognition
            .replace("{mention}", &mention.surface);
        Ok(QAExample::new(doc, Task::Recognition, question, answer))
    }

    pub fn gen_slotfill(&self, doc: &LinkedDocument, type_id: &str) -> Result<QAExample> {
        let mut names = Vec::new();
        for entity in doc.entities() {
            if self.types(doc, entity)?.iter().any(|t| t == type_id) {
                names.push(self.catalog.entity_name(entity).to_string());
            }
        }
        if names.is_empty() {
            return Err(Error::NoEntityOfType {
                doc_id: doc.doc_id.clone(),
                type_id: type_id.to_string(),
            });
        }
        let answer = serialize_answer(&names)?;
        let question = self
            .templates
            .slotfill
            .replace("{types}", &pluralize(self.catalog.type_name(type_id)));
        Ok(QAExample::new(doc, Task::Slotfill, question, answer))
    }

    /// Relevant type ids of the document's entities, first appearance order.
    pub fn slot_candidates(&self, doc: &LinkedDocument) -> Result<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        for entity in doc.entities() {
            for t in self.types(doc, entity)? {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }

    /// Draws `n` examples for one document. Each draw picks a task from `mix`
    /// and then a mention or type uniformly among that task's candidates.
    pub fn sample_examples(
        &self,
        doc: &LinkedDocument,
        mix: &TaskMix,
        n: usize,
        global_seed: u64,
    ) -> Result<(Vec<QAExample>, SampleTally)> {
        mix.validate()?;
        let dist = WeightedIndex::new(mix.weights())
            .map_err(|e| Error::Config(format!("task mix: {e}")))?;
        let mut rng = ChaCha8Rng::from_seed(doc_seed(global_seed, &doc.doc_id));
        let slot_types = self.slot_candidates(doc)?;
        let mut out = Vec::with_capacity(n);
        let mut tally = SampleTally::default();
        for _ in 0..n {
            let mut drawn = None;
            for _ in 0..TASK_RETRIES {
                let task = Task::ALL[dist.sample(&mut rng)];
                let candidates = match task {
                    Task::Discovery => 1,
                    Task::Typing | Task::Recognition => doc.mentions.len(),
                    Task::Slotfill => slot_types.len(),
                };
                if candidates > 0 {
                    drawn = Some((task, rng.gen_range(0..candidates)));
                    break;
                }
            }
            let Some((task, pick)) = drawn else {
                tally.skipped += 1;
                continue;
            };
            let example = match task {
                Task::Discovery => self.gen_discovery(doc)?,
                Task::Typing => self.gen_typing(doc, &doc.mentions[pick])?,
                Task::Recognition => self.gen_recognition(doc, &doc.mentions[pick])?,
                Task::Slotfill => self.gen_slotfill(doc, &slot_types[pick])?,
            };
            out.push(example);
            tally.generated += 1;
        }
        Ok((out, tally))
    }
}
