//! Entity linking for hyperlinked articles and evaluation split
//! construction.
//!
//! Spans are byte offsets into UTF-8 text, half-open `[start, end)`, and must
//! fall on character boundaries.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kg_ingest::{is_entity_id, EntityTable};
use crate::ontology::EntityTypeIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperlink {
    pub span: Span,
    /// Article title or entity id.
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub hyperlinks: Vec<Hyperlink>,
}

fn check_spans<'a>(doc_id: &str, text: &str, spans: impl Iterator<Item = &'a Span>) -> Result<()> {
    let invalid = |reason: String| Error::InvalidDocument {
        doc_id: doc_id.to_string(),
        reason,
    };
    let mut prev_end = 0usize;
    for (i, s) in spans.enumerate() {
        if s.start >= s.end {
            return Err(invalid(format!(
                "span [{}, {}) is empty or reversed",
                s.start, s.end
            )));
        }
        if s.end > text.len() {
            return Err(invalid(format!(
                "span [{}, {}) exceeds text length {}",
                s.start,
                s.end,
                text.len()
            )));
        }
        if !text.is_char_boundary(s.start) || !text.is_char_boundary(s.end) {
            return Err(invalid(format!(
                "span [{}, {}) splits a UTF-8 character",
                s.start, s.end
            )));
        }
        if i > 0 && s.start < prev_end {
            return Err(invalid(format!(
                "span [{}, {}) overlaps or precedes the previous span",
                s.start, s.end
            )));
        }
        prev_end = s.end;
    }
    Ok(())
}

impl RawDocument {
    pub fn validate(&self) -> Result<()> {
        check_spans(
            &self.doc_id,
            &self.text,
            self.hyperlinks.iter().map(|h| &h.span),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionSource {
    Hyperlink,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub span: Span,
    pub surface: String,
    pub entity: String,
    pub source: MentionSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedDocument {
    pub doc_id: String,
    pub text: String,
    pub mentions: Vec<Mention>,
}

impl LinkedDocument {
    pub fn validate(&self) -> Result<()> {
        if self.mentions.is_empty() {
            return Err(Error::InvalidDocument {
                doc_id: self.doc_id.clone(),
                reason: "no mentions".into(),
            });
        }
        check_spans(
            &self.doc_id,
            &self.text,
            self.mentions.iter().map(|m| &m.span),
        )?;
        for m in &self.mentions {
            if self.text[m.span.start..m.span.end] != m.surface {
                return Err(Error::InvalidDocument {
                    doc_id: self.doc_id.clone(),
                    reason: format!(
                        "surface {:?} does not match text at [{}, {})",
                        m.surface, m.span.start, m.span.end
                    ),
                });
            }
        }
        Ok(())
    }

    /// Distinct entity ids in order of first mention.
    pub fn entities(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.mentions
            .iter()
            .map(|m| m.entity.as_str())
            .filter(|e| seen.insert(*e))
            .collect()
    }
}

/// Counts of links that did not become mentions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    /// Title (or id) not found among retained entities.
    pub unresolved: u64,
    /// Resolved to an entity with no types.
    pub untyped: u64,
}

impl std::ops::AddAssign for LinkCounts {
    fn add_assign(&mut self, o: Self) {
        self.unresolved += o.unresolved;
        self.untyped += o.untyped;
    }
}

/// One mention per resolvable hyperlink whose target entity is typed.
pub fn resolve_hyperlinks(
    doc: &RawDocument,
    pages: &HashMap<String, String>,
    index: &EntityTypeIndex,
) -> (Vec<Mention>, LinkCounts) {
    let mut counts = LinkCounts::default();
    let mut mentions = Vec::new();
    for link in &doc.hyperlinks {
        let entity = if is_entity_id(&link.target) {
            Some(link.target.clone())
        } else {
            pages.get(&link.target).cloned()
        };
        let Some(entity) = entity else {
            counts.unresolved += 1;
            continue;
        };
        if !index.contains(&entity) {
            counts.untyped += 1;
            continue;
        }
        mentions.push(Mention {
            span: link.span,
            surface: doc.text[link.span.start..link.span.end].to_string(),
            entity,
            source: MentionSource::Hyperlink,
        });
    }
    (mentions, counts)
}

/// Finds additional mentions in a document given the ones already linked.
pub trait MentionMatcher: Sync {
    /// Returned mentions must not overlap `existing` or each other.
    fn find(&self, text: &str, existing: &[Mention]) -> Vec<Mention>;
}

/// Case-sensitive dictionary matcher over the names, aliases and link texts
/// of entities already hyperlinked in the same document.
///
/// At each word-start position outside existing mentions, the longest
/// surface form ending at a word boundary is taken; scanning resumes after
/// it. Surface forms shared by two or more of the document's entities are
/// ambiguous and ignored.
pub struct DictionaryMatcher<'a> {
    entities: &'a EntityTable,
}

impl<'a> DictionaryMatcher<'a> {
    pub fn new(entities: &'a EntityTable) -> Self {
        DictionaryMatcher { entities }
    }

    /// Surface form → entity for the document-local dictionary.
    pub fn local_dictionary(&self, existing: &[Mention]) -> Vec<(String, String)> {
        let mut owners: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for m in existing {
            owners.entry(&m.surface).or_default().insert(&m.entity);
            if let Some(entry) = self.entities.get(&m.entity) {
                for name in entry.names() {
                    owners.entry(name).or_default().insert(&m.entity);
                }
            }
        }
        let mut dict: Vec<(String, String)> = owners
            .into_iter()
            .filter(|(s, ids)| ids.len() == 1 && !s.is_empty())
            .map(|(s, ids)| (s.to_string(), ids.into_iter().next().unwrap().to_string()))
            .collect();
        // longest first, ties broken lexicographically for determinism
        dict.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        dict
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

pub(crate) fn word_start(text: &str, at: usize) -> bool {
    text[..at]
        .chars()
        .next_back()
        .is_none_or(|c| !is_word_char(c))
}

pub(crate) fn word_end(text: &str, at: usize) -> bool {
    text[at..].chars().next().is_none_or(|c| !is_word_char(c))
}

impl MentionMatcher for DictionaryMatcher<'_> {
    fn find(&self, text: &str, existing: &[Mention]) -> Vec<Mention> {
        let dict = self.local_dictionary(existing);
        if dict.is_empty() {
            return Vec::new();
        }
        let mut taken: Vec<Span> = existing.iter().map(|m| m.span).collect();
        taken.sort();
        let overlaps_taken = |span: &Span| {
            // first taken span ending after span.start
            let i = taken.partition_point(|t| t.end <= span.start);
            taken.get(i).is_some_and(|t| t.overlaps(span))
        };
        let mut out = Vec::new();
        let mut pos = 0usize;
        while pos < text.len() {
            let step = text[pos..].chars().next().map_or(1, char::len_utf8);
            if word_start(text, pos) {
                let rest = &text[pos..];
                let hit = dict.iter().find(|(surface, _)| {
                    if !rest.starts_with(surface.as_str()) {
                        return false;
                    }
                    let span = Span::new(pos, pos + surface.len());
                    word_end(text, span.end) && !overlaps_taken(&span)
                });
                if let Some((surface, entity)) = hit {
                    let span = Span::new(pos, pos + surface.len());
                    out.push(Mention {
                        span,
                        surface: surface.clone(),
                        entity: entity.clone(),
                        source: MentionSource::Augmented,
                    });
                    pos = span.end;
                    continue;
                }
            }
            pos += step;
        }
        out
    }
}

/// Additional mentions for `doc` beyond `existing`.
pub fn augment_mentions(
    doc: &RawDocument,
    existing: &[Mention],
    matcher: &dyn MentionMatcher,
) -> Vec<Mention> {
    matcher.find(&doc.text, existing)
}

pub struct LinkContext<'a> {
    pub pages: &'a HashMap<String, String>,
    pub index: &'a EntityTypeIndex,
    pub matcher: &'a dyn MentionMatcher,
    /// Disable to keep hyperlink mentions only.
    pub augment: bool,
}

/// Resolves and augments a raw document. `Ok((None, _))` means the document
/// was dropped because no mention survived.
pub fn link_document(
    raw: &RawDocument,
    ctx: &LinkContext<'_>,
) -> Result<(Option<LinkedDocument>, LinkCounts)> {
    raw.validate()?;
    let (mut mentions, counts) = resolve_hyperlinks(raw, ctx.pages, ctx.index);
    if mentions.is_empty() {
        return Ok((None, counts));
    }
    if ctx.augment {
        let extra = augment_mentions(raw, &mentions, ctx.matcher);
        mentions.extend(extra.into_iter().filter(|m| ctx.index.contains(&m.entity)));
        mentions.sort_by_key(|m| m.span);
    }
    Ok((
        Some(LinkedDocument {
            doc_id: raw.doc_id.clone(),
            text: raw.text.clone(),
            mentions,
        }),
        counts,
    ))
}

/// The per-document summary the splitter needs.
#[derive(Debug, Clone)]
pub struct DocEntities {
    pub doc_id: String,
    pub entities: BTreeSet<String>,
}

impl From<&LinkedDocument> for DocEntities {
    fn from(d: &LinkedDocument) -> Self {
        DocEntities {
            doc_id: d.doc_id.clone(),
            entities: d.mentions.iter().map(|m| m.entity.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub test_new_ent: Vec<String>,
    /// Entities mentioned anywhere in the training split.
    pub train_entities: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Test,
    TestNewEnt,
}

impl SplitPlan {
    pub fn is_seen(&self, entity: &str) -> bool {
        self.train_entities.contains(entity)
    }

    pub fn roles(&self) -> HashMap<&str, SplitRole> {
        let mut roles = HashMap::new();
        roles.extend(self.train.iter().map(|d| (d.as_str(), SplitRole::Train)));
        roles.extend(self.test.iter().map(|d| (d.as_str(), SplitRole::Test)));
        roles.extend(
            self.test_new_ent
                .iter()
                .map(|d| (d.as_str(), SplitRole::TestNewEnt)),
        );
        roles
    }
}

fn shuffle_key(seed: u64, doc_id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"split\0");
    h.update(seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    h.finalize().into()
}

/// Assigns documents to train, test (seen entities) and test-new-ent
/// (unseen entities).
///
/// Documents are ordered by a seeded hash of their id; the first
/// `train_size` form the training split. The rest are offered to the two
/// evaluation splits, documents that qualify for only one split first, then
/// documents that qualify for both (new-ent first). A test document mentions
/// at least one training entity; a test-new-ent document mentions at least
/// one entity absent from training.
pub fn make_splits<I>(
    corpus: I,
    train_size: usize,
    test_size: usize,
    newent_size: usize,
    seed: u64,
) -> Result<SplitPlan>
where
    I: IntoIterator<Item = DocEntities>,
{
    let mut docs: Vec<([u8; 32], DocEntities)> = Vec::new();
    let mut ids = HashSet::new();
    for d in corpus {
        if !ids.insert(d.doc_id.clone()) {
            return Err(Error::InfeasibleSplit(format!(
                "duplicate document id {}",
                d.doc_id
            )));
        }
        docs.push((shuffle_key(seed, &d.doc_id), d));
    }
    drop(ids);
    let total = train_size + test_size + newent_size;
    if total > docs.len() {
        return Err(Error::InfeasibleSplit(format!(
            "train ({train_size}) + test ({test_size}) + test-new-ent ({newent_size}) = {total} exceeds corpus size {}",
            docs.len()
        )));
    }
    docs.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.doc_id.cmp(&b.1.doc_id)));

    let rest = docs.split_off(train_size);
    let train_entities: BTreeSet<String> = docs
        .iter()
        .flat_map(|(_, d)| d.entities.iter().cloned())
        .collect();
    let train: Vec<String> = docs.into_iter().map(|(_, d)| d.doc_id).collect();

    let mut test = Vec::new();
    let mut new_ent = Vec::new();
    let mut both = Vec::new();
    for (_, d) in &rest {
        let any_seen = d.entities.iter().any(|e| train_entities.contains(e));
        let any_unseen = d.entities.iter().any(|e| !train_entities.contains(e));
        match (any_seen, any_unseen) {
            (true, true) => both.push(d.doc_id.clone()),
            (true, false) if test.len() < test_size => test.push(d.doc_id.clone()),
            (false, true) if new_ent.len() < newent_size => new_ent.push(d.doc_id.clone()),
            _ => {}
        }
    }
    for id in both {
        if new_ent.len() < newent_size {
            new_ent.push(id);
        } else if test.len() < test_size {
            test.push(id);
        } else {
            break;
        }
    }
    if new_ent.len() < newent_size {
        return Err(Error::InfeasibleSplit(format!(
            "only {} remaining documents mention an entity unseen in training; test-new-ent needs {newent_size}",
            new_ent.len()
        )));
    }
    if test.len() < test_size {
        return Err(Error::InfeasibleSplit(format!(
            "only {} remaining documents mention a training entity; test needs {test_size}",
            test.len()
        )));
    }
    // restore hash order within each evaluation split
    let order: HashMap<&str, usize> = rest
        .iter()
        .enumerate()
        .map(|(i, (_, d))| (d.doc_id.as_str(), i))
        .collect();
    test.sort_by_key(|d| order[d.as_str()]);
    new_ent.sort_by_key(|d| order[d.as_str()]);
    Ok(SplitPlan {
        train,
        test,
        test_new_ent: new_ent,
        train_entities,
    })
}
