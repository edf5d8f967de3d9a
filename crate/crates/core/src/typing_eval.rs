//! Scoring of generated type sequences against gold types.
//!
//! Scores are micro-averaged over (instance, type) pairs, with exact string
//! match after [`normalize_type`]. Ancestor types and synonyms earn no credit.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::corpus_link::{LinkedDocument, Span};
use crate::error::{Error, Result};
use crate::ontology::TypeOntology;
use crate::qagen::parse_answer;
use crate::relevance::TypeFilter;

pub const AVERAGING: &str = "micro over (instance, type) pairs; exact match after normalization";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypingInstance {
    pub doc_id: String,
    pub span: Span,
    pub surface: String,
    pub gold_types: Vec<String>,
    pub entity_seen: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypingPrediction {
    pub doc_id: String,
    pub span: Span,
    pub predicted: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl std::ops::AddAssign for PairCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRFReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl From<PairCounts> for PRFReport {
    fn from(c: PairCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PRFReport {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypingReport {
    pub instances: u64,
    pub overall: PRFReport,
    pub seen: PRFReport,
    pub unseen: PRFReport,
}

/// Lowercase, trim, and collapse internal whitespace runs.
pub fn normalize_type(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalized, de-duplicated type names from a generated answer. Blank input
/// yields no predictions.
pub fn parse_prediction(s: &str) -> Vec<String> {
    if s.trim().is_empty() {
        return Vec::new();
    }
    let items = parse_answer(s).unwrap_or_default();
    let mut out: Vec<String> = Vec::new();
    for item in items {
        let t = normalize_type(&item);
        if !t.is_empty() && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn instance_counts(gold: &[String], predicted: &[String]) -> PairCounts {
    let gold: HashSet<String> = gold.iter().map(|g| normalize_type(g)).collect();
    let predicted: HashSet<&str> = predicted.iter().map(String::as_str).collect();
    let tp = gold
        .iter()
        .filter(|g| predicted.contains(g.as_str()))
        .count() as u64;
    PairCounts {
        tp,
        fp: predicted.len() as u64 - tp,
        fn_: gold.len() as u64 - tp,
    }
}

/// Scores predictions keyed by (doc_id, span). Instances without a
/// prediction count as empty predictions; predictions without an instance
/// are ignored.
pub fn score_typing(
    instances: &[TypingInstance],
    predictions: &[TypingPrediction],
) -> Result<TypingReport> {
    let mut by_key: HashMap<(&str, Span), &str> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_key.insert((&p.doc_id, p.span), &p.predicted).is_some() {
            return Err(Error::DuplicatePrediction(format!(
                "{} [{}, {})",
                p.doc_id, p.span.start, p.span.end
            )));
        }
    }
    let mut seen = PairCounts::default();
    let mut unseen = PairCounts::default();
    for inst in instances {
        let predicted = by_key
            .get(&(inst.doc_id.as_str(), inst.span))
            .map(|s| parse_prediction(s))
            .unwrap_or_default();
        let c = instance_counts(&inst.gold_types, &predicted);
        if inst.entity_seen {
            seen += c;
        } else {
            unseen += c;
        }
    }
    let mut overall = seen;
    overall += unseen;
    Ok(TypingReport {
        instances: instances.len() as u64,
        overall: overall.into(),
        seen: seen.into(),
        unseen: unseen.into(),
    })
}

/// Plain-text report, TOML-compatible, fractions at 4 decimals.
pub fn render_report(report: &TypingReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# averaging: {AVERAGING}");
    let _ = writeln!(out, "instances = {}", report.instances);
    for (name, r) in [
        ("overall", &report.overall),
        ("seen", &report.seen),
        ("unseen", &report.unseen),
    ] {
        let _ = writeln!(out, "\n[{name}]");
        let _ = writeln!(out, "tp = {}", r.tp);
        let _ = writeln!(out, "fp = {}", r.fp);
        let _ = writeln!(out, "fn = {}", r.fn_);
        let _ = writeln!(out, "precision = {:.4}", r.precision);
        let _ = writeln!(out, "recall = {:.4}", r.recall);
        let _ = writeln!(out, "f1 = {:.4}", r.f1);
    }
    out
}

/// Splits predictions into names found in the ontology and novel ones.
pub struct NovelTypeDetector {
    known: HashSet<String>,
}

impl NovelTypeDetector {
    pub fn new(ontology: &TypeOntology) -> Self {
        NovelTypeDetector {
            known: ontology.nodes().map(|n| normalize_type(&n.name)).collect(),
        }
    }

    pub fn is_novel(&self, name: &str) -> bool {
        !self.known.contains(&normalize_type(name))
    }

    pub fn split<S: AsRef<str>>(&self, predicted: &[S]) -> (Vec<String>, Vec<String>) {
        let (mut seen, mut novel) = (Vec::new(), Vec::new());
        for p in predicted {
            let p = p.as_ref().to_string();
            if self.is_novel(&p) {
                novel.push(p);
            } else {
                seen.push(p);
            }
        }
        (seen, novel)
    }
}

pub fn detect_novel<S: AsRef<str>>(
    predicted: &[S],
    ontology: &TypeOntology,
) -> (Vec<String>, Vec<String>) {
    NovelTypeDetector::new(ontology).split(predicted)
}

/// Gold instances for one evaluation document. With `unseen_only`, only
/// mentions of entities absent from training are kept.
pub fn typing_instances(
    doc: &LinkedDocument,
    catalog: &Catalog<'_>,
    filter: TypeFilter,
    is_seen: impl Fn(&str) -> bool,
    unseen_only: bool,
) -> Result<Vec<TypingInstance>> {
    let mut out = Vec::new();
    for m in &doc.mentions {
        let seen = is_seen(&m.entity);
        if unseen_only && seen {
            continue;
        }
        let gold_types = filter
            .types(doc, &m.entity, catalog.index)?
            .iter()
            .map(|t| catalog.type_name(t).to_string())
            .collect();
        out.push(TypingInstance {
            doc_id: doc.doc_id.clone(),
            span: m.span,
            surface: m.surface.clone(),
            gold_types,
            entity_seen: seen,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::TypeNode;

    fn inst(id: &str, start: usize, gold: &[&str], seen: bool) -> TypingInstance {
        TypingInstance {
            doc_id: id.into(),
            span: Span::new(start, start + 1),
            surface: "x".into(),
            gold_types: gold.iter().map(|s| s.to_string()).collect(),
            entity_seen: seen,
        }
    }

    fn pred(id: &str, start: usize, s: &str) -> TypingPrediction {
        TypingPrediction {
            doc_id: id.into(),
            span: Span::new(start, start + 1),
            predicted: s.into(),
        }
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_type(" Chemist "), "chemist");
        assert_eq!(normalize_type("chemical  compound"), "chemical compound");
        assert_eq!(normalize_type("chemist"), "chemist");
    }

    #[test]
    fn prediction_parsing() {
        assert_eq!(
            parse_prediction("chemist and podcaster"),
            ["chemist", "podcaster"]
        );
        assert_eq!(parse_prediction("chemist, chemist"), ["chemist"]);
        assert_eq!(
            parse_prediction("superseded scientific theory"),
            ["superseded scientific theory"]
        );
        assert!(parse_prediction("   ").is_empty());
        assert!(parse_prediction("").is_empty());
    }

    #[test]
    fn perfect_predictions() {
        let instances = [inst("a", 0, &["x", "y"], true), inst("b", 0, &["z"], false)];
        let preds = [pred("a", 0, "x and y"), pred("b", 0, "Z")];
        let r = score_typing(&instances, &preds).unwrap();
        assert_eq!(
            (r.overall.precision, r.overall.recall, r.overall.f1),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn half_right() {
        let r = score_typing(
            &[inst("a", 0, &["a", "b"], true)],
            &[pred("a", 0, "a and c")],
        )
        .unwrap();
        assert_eq!((r.overall.tp, r.overall.fp, r.overall.fn_), (1, 1, 1));
        assert!((r.overall.precision - 0.5).abs() < 1e-9);
        assert!((r.overall.recall - 0.5).abs() < 1e-9);
        assert!((r.overall.f1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_and_missing_predictions_score_zero() {
        let instances = [inst("a", 0, &["x"], true), inst("b", 0, &["y"], true)];
        let r = score_typing(&instances, &[pred("a", 0, "")]).unwrap();
        assert_eq!(
            (r.overall.precision, r.overall.recall, r.overall.f1),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(r.overall.fn_, 2);
    }

    #[test]
    fn duplicate_prediction_is_rejected() {
        let err = score_typing(&[], &[pred("a", 0, "x"), pred("a", 0, "y")]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePrediction(_)));
    }

    #[test]
    fn strata_add_up() {
        let instances = [
            inst("a", 0, &["x", "y"], true),
            inst("b", 0, &["z"], false),
            inst("c", 0, &["w"], false),
        ];
        let preds = [
            pred("a", 0, "x"),
            pred("b", 0, "z and q"),
            pred("c", 0, "w"),
        ];
        let r = score_typing(&instances, &preds).unwrap();
        assert_eq!(r.overall.tp, r.seen.tp + r.unseen.tp);
        assert_eq!(r.overall.fp, r.seen.fp + r.unseen.fp);
        assert_eq!(r.overall.fn_, r.seen.fn_ + r.unseen.fn_);
    }

    #[test]
    fn report_has_four_decimals_and_header() {
        let r = score_typing(
            &[inst("a", 0, &["a", "b"], true)],
            &[pred("a", 0, "a and c")],
        )
        .unwrap();
        let text = render_report(&r);
        assert!(text.starts_with("# averaging: micro"));
        assert!(text.contains("precision = 0.5000"));
        assert!(text.contains("[unseen]\ntp = 0"));
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(parsed["overall"]["tp"].as_integer(), Some(1));
    }

    #[test]
    fn novel_types() {
        let onto = TypeOntology::from_nodes([TypeNode {
            id: "Q593644".into(),
            name: "chemist".into(),
            parents: vec![],
            dangling: false,
        }]);
        let (seen, novel) = detect_novel(&["Chemist", "metallurgical rock"], &onto);
        assert_eq!(seen, ["Chemist"]);
        assert_eq!(novel, ["metallurgical rock"]);
        let (s, n) = detect_novel::<&str>(&[], &onto);
        assert!(s.is_empty() && n.is_empty());
    }
}
