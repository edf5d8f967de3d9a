//! Zero-shot dialog state tracking: slot questions, belief-state text format,
//! and joint goal accuracy.
//!
//! A belief state renders as `[domain slot]: value` entries joined by `"; "`,
//! e.g. `[hotel price range]: cheap; [hotel area]: west`.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SLOT_TEMPLATE: &str = "What {domain} {slot} is the user interested in?";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSchema {
    pub domain: String,
    pub slots: Vec<String>,
    /// Closed value vocabularies for some slots; other slots are open.
    #[serde(default)]
    pub values: BTreeMap<String, Vec<String>>,
}

impl SlotSchema {
    pub fn new(domain: &str, slots: &[&str]) -> Result<Self> {
        let schema = SlotSchema {
            domain: domain.to_string(),
            slots: slots.iter().map(|s| s.to_string()).collect(),
            values: BTreeMap::new(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.slots.iter().enumerate() {
            if self.slots[..i].contains(s) {
                return Err(Error::Config(format!(
                    "slot {s:?} defined twice in domain {}",
                    self.domain
                )));
            }
        }
        Ok(())
    }

    pub fn has_slot(&self, slot: &str) -> bool {
        self.slots.iter().any(|s| s == slot)
    }
}

/// The five MultiWOZ 2.1 domains used for zero-shot evaluation, with slots in
/// the benchmark's customary order.
pub fn multiwoz_schemas() -> Vec<SlotSchema> {
    let spec: [(&str, &[&str]); 5] = [
        (
            "restaurant",
            &[
                "food",
                "price range",
                "area",
                "name",
                "book time",
                "book day",
                "book people",
            ],
        ),
        (
            "hotel",
            &[
                "price range",
                "type",
                "parking",
                "book stay",
                "book day",
                "book people",
                "area",
                "stars",
                "internet",
                "name",
            ],
        ),
        ("attraction", &["type", "name", "area"]),
        (
            "train",
            &[
                "destination",
                "day",
                "departure",
                "arrive by",
                "book people",
                "leave at",
            ],
        ),
        (
            "taxi",
            &["leave at", "destination", "departure", "arrive by"],
        ),
    ];
    spec.iter()
        .map(|(d, slots)| SlotSchema::new(d, slots).expect("static schema is valid"))
        .collect()
}

/// (domain, slot) → value, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BeliefState {
    entries: IndexMap<(String, String), String>,
}

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, domain: &str, slot: &str, value: &str) {
        self.entries
            .insert((domain.to_string(), slot.to_string()), value.to_string());
    }

    pub fn get(&self, domain: &str, slot: &str) -> Option<&str> {
        self.entries
            .get(&(domain.to_string(), slot.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.entries
            .iter()
            .map(|((d, s), v)| (d.as_str(), s.as_str(), v.as_str()))
    }

    /// Every key must be defined by some schema.
    pub fn validate(&self, schemas: &[SlotSchema]) -> Result<()> {
        for (domain, slot, _) in self.iter() {
            let known = schemas
                .iter()
                .any(|s| s.domain == domain && s.has_slot(slot));
            if !known {
                return Err(Error::UnknownSlot {
                    domain: domain.to_string(),
                    slot: slot.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Reorders entries by schema order (domain, then slot). Keys unknown to
    /// the schemas go last in their current order.
    pub fn canonicalize(&mut self, schemas: &[SlotSchema]) {
        let rank = |d: &str, s: &str| {
            schemas
                .iter()
                .enumerate()
                .find(|(_, sc)| sc.domain == d)
                .and_then(|(i, sc)| sc.slots.iter().position(|x| x == s).map(|j| (i, j)))
                .unwrap_or((usize::MAX, usize::MAX))
        };
        self.entries
            .sort_by(|a, _, b, _| rank(&a.0, &a.1).cmp(&rank(&b.0, &b.1)));
    }

    /// Slot → normalized value for one domain, with "none" treated as absent.
    pub fn restricted(&self, domain: &str) -> BTreeMap<String, String> {
        self.iter()
            .filter(|(d, _, _)| *d == domain)
            .filter_map(|(_, s, v)| {
                let v = normalize_value(v);
                (!v.is_empty() && v != "none").then(|| (s.to_string(), v))
            })
            .collect()
    }
}

pub fn normalize_value(v: &str) -> String {
    v.trim().to_lowercase()
}

pub fn slot_question(domain: &str, slot: &str) -> String {
    slot_question_with(DEFAULT_SLOT_TEMPLATE, domain, slot)
}

pub fn slot_question_with(template: &str, domain: &str, slot: &str) -> String {
    template
        .replace("{domain}", &domain.to_lowercase())
        .replace("{slot}", &slot.to_lowercase())
}

pub fn serialize_belief(state: &BeliefState) -> String {
    state
        .iter()
        .map(|(d, s, v)| format!("[{d} {s}]: {v}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn parse_belief(s: &str) -> Result<BeliefState> {
    let mut state = BeliefState::new();
    if s.trim().is_empty() {
        return Ok(state);
    }
    for segment in s.split("; ") {
        let bad = || Error::MalformedBelief(segment.to_string());
        let rest = segment.strip_prefix('[').ok_or_else(bad)?;
        let (key, value) = rest.split_once("]: ").ok_or_else(bad)?;
        let (domain, slot) = key.split_once(' ').ok_or_else(bad)?;
        if domain.is_empty() || slot.trim().is_empty() {
            return Err(bad());
        }
        if state.get(domain, slot).is_some() {
            return Err(bad());
        }
        state.set(domain, slot, value);
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogTurn {
    pub turn_id: String,
    pub history: Vec<(Speaker, String)>,
    pub gold: BeliefState,
}

/// Line format of a dialog input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialogRecord {
    pub turn_id: String,
    pub history: Vec<(Speaker, String)>,
    pub gold: String,
}

/// Line format of a DST prediction file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefPrediction {
    pub turn_id: String,
    pub predicted: String,
}

impl DialogTurn {
    pub fn from_record(r: DialogRecord) -> Result<Self> {
        let turn = DialogTurn {
            gold: parse_belief(&r.gold)?,
            turn_id: r.turn_id,
            history: r.history,
        };
        turn.validate()?;
        Ok(turn)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidTurn {
            turn_id: self.turn_id.clone(),
            reason: reason.to_string(),
        };
        if self.history.is_empty() {
            return Err(invalid("empty history"));
        }
        if self.history.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("speakers do not alternate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JgaReport {
    pub turns: u64,
    pub correct: u64,
    pub accuracy: f64,
}

/// A turn is correct iff gold and prediction, restricted to `domain`, hold
/// the same (slot, value) set after normalization.
pub fn turn_correct(gold: &BeliefState, predicted: &BeliefState, domain: &str) -> bool {
    gold.restricted(domain) == predicted.restricted(domain)
}

pub fn joint_goal_accuracy(
    turns: &[(BeliefState, BeliefState)],
    domain: &str,
    schemas: &[SlotSchema],
) -> Result<JgaReport> {
    if !schemas.iter().any(|s| s.domain == domain) {
        return Err(Error::UnknownDomain(domain.to_string()));
    }
    let correct = turns
        .iter()
        .filter(|(gold, pred)| turn_correct(gold, pred, domain))
        .count() as u64;
    let n = turns.len() as u64;
    Ok(JgaReport {
        turns: n,
        correct,
        accuracy: if n == 0 {
            0.0
        } else {
            correct as f64 / n as f64
        },
    })
}

/// Pairs dialog turns with predictions by turn id. Every turn needs one.
pub fn pair_predictions(
    turns: Vec<DialogTurn>,
    predictions: Vec<BeliefPrediction>,
) -> Result<Vec<(BeliefState, BeliefState)>> {
    let mut by_id: std::collections::HashMap<String, String> = std::collections::HashMap::new();
    for p in predictions {
        if by_id.contains_key(&p.turn_id) {
            return Err(Error::DuplicatePrediction(p.turn_id));
        }
        by_id.insert(p.turn_id, p.predicted);
    }
    turns
        .into_iter()
        .map(|t| {
            let pred = by_id
                .get(&t.turn_id)
                .ok_or_else(|| Error::MissingPrediction(t.turn_id.clone()))?;
            Ok((t.gold, parse_belief(pred)?))
        })
        .collect()
}

/// Runs an external command once per turn.
///
/// The command reads the dialog history (`user: ...` / `system: ...`, one
/// utterance per line), a blank line, then one slot question per line for the
/// target domain. It must print a belief state on stdout.
pub struct CommandPredictor {
    pub program: String,
    pub args: Vec<String>,
    pub template: String,
}

impl CommandPredictor {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        CommandPredictor {
            program: program.into(),
            args,
            template: DEFAULT_SLOT_TEMPLATE.to_string(),
        }
    }

    pub fn prompt(&self, turn: &DialogTurn, schema: &SlotSchema) -> String {
        let mut input = String::new();
        for (speaker, utterance) in &turn.history {
            let who = match speaker {
                Speaker::User => "user",
                Speaker::System => "system",
            };
            input.push_str(&format!("{who}: {}\n", utterance.replace('\n', " ")));
        }
        input.push('\n');
        for slot in &schema.slots {
            input.push_str(&slot_question_with(&self.template, &schema.domain, slot));
            input.push('\n');
        }
        input
    }

    pub fn predict(&self, turn: &DialogTurn, schema: &SlotSchema) -> Result<BeliefState> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Predictor(format!("cannot start {}: {e}", self.program)))?;
        let prompt = self.prompt(turn, schema);
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            // a predictor may exit without reading everything
            let _ = stdin.write_all(prompt.as_bytes());
        }
        let out = child
            .wait_with_output()
            .map_err(|e| Error::Predictor(e.to_string()))?;
        if !out.status.success() {
            return Err(Error::Predictor(format!(
                "{} exited with {} on turn {}",
                self.program, out.status, turn.turn_id
            )));
        }
        let text = String::from_utf8(out.stdout)
            .map_err(|_| Error::Predictor("predictor output is not UTF-8".into()))?;
        parse_belief(text.trim_end_matches(['\n', '\r']))
    }
}
