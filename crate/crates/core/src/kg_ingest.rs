//! Streaming ingestion of a line-delimited knowledge-graph projection.
//!
//! Each input line is one JSON object:
//!
//! ```text
//! {"id": "Q42", "label": "Douglas Adams", "aliases": ["Douglas Noël Adams"], "claims": [["P31", "Q5"], ["P106", "Q36180"]]}
//! ```
//!
//! * `id` is `Q` followed by ASCII digits.
//! * `label` is the English label and must be non-empty.
//! * `aliases` (optional, default empty) are English alternative labels.
//! * `claims` (optional, default empty) is an array of `[property, target]`
//!   pairs in the order they appear on the entity page.
//!
//! Unknown fields are ignored. Blank lines and lines starting with `#` are
//! skipped without being counted as records.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INSTANCE_OF: &str = "P31";
pub const SUBCLASS_OF: &str = "P279";
pub const OCCUPATION: &str = "P106";
pub const DEFAULT_HUMAN_TYPE: &str = "Q5";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub property: String,
    pub target: String,
}

impl Claim {
    pub fn new(property: impl Into<String>, target: impl Into<String>) -> Self {
        Claim {
            property: property.into(),
            target: target.into(),
        }
    }
}

/// One knowledge-graph node restricted to the claims needed for typing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub entity_id: String,
    pub canonical_name: String,
    pub aliases: Vec<String>,
    /// P31 / P279 / P106 claims in dump order.
    pub claims: Vec<Claim>,
}

/// Why a line could not be turned into an [`EntityRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    /// Byte offset into the stream where the problem was detected.
    pub offset: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records_read: u64,
    pub records_retained: u64,
    pub records_skipped_untyped: u64,
    pub records_skipped_malformed: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    label: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    claims: Vec<(String, String)>,
}

pub(crate) fn is_entity_id(s: &str) -> bool {
    s.len() > 1 && s.starts_with('Q') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn is_property_id(s: &str) -> bool {
    s.len() > 1 && s.starts_with('P') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

fn is_typing_property(p: &str) -> bool {
    p == INSTANCE_OF || p == SUBCLASS_OF || p == OCCUPATION
}

/// Parses one dump line. `offset` is the byte position of the line start and
/// is only used to locate errors.
pub fn parse_entity_record(line: &str, offset: u64) -> Result<EntityRecord, Malformed> {
    let malformed = |at: u64, reason: String| Malformed {
        offset: offset + at,
        reason,
    };
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| {
        // serde_json columns are 1-based byte positions within the line
        let at = line
            .split_inclusive('\n')
            .take(e.line().saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + e.column().saturating_sub(1);
        malformed(at as u64, e.to_string())
    })?;
    if !is_entity_id(&raw.id) {
        return Err(malformed(0, format!("invalid entity id {:?}", raw.id)));
    }
    if raw.label.trim().is_empty() {
        return Err(malformed(
            0,
            format!("entity {} has an empty label", raw.id),
        ));
    }
    let mut claims = Vec::new();
    for (property, target) in raw.claims {
        if !is_property_id(&property) {
            return Err(malformed(
                0,
                format!("entity {} has invalid property id {:?}", raw.id, property),
            ));
        }
        if !is_typing_property(&property) {
            continue;
        }
        if !is_entity_id(&target) {
            return Err(malformed(
                0,
                format!(
                    "entity {} has {} claim with non-entity target {:?}",
                    raw.id, property, target
                ),
            ));
        }
        claims.push(Claim { property, target });
    }
    Ok(EntityRecord {
        entity_id: raw.id,
        canonical_name: raw.label,
        aliases: raw.aliases.into_iter().filter(|a| !a.is_empty()).collect(),
        claims,
    })
}

/// Direct types of an entity in claim order.
///
/// Humans (P31 → `human_type_id`) are typed by their occupations, which
/// replace every P31/P279 target. Everyone else gets P31 targets followed by
/// P279 targets. An empty result means the entity has no types.
pub fn resolve_direct_types(record: &EntityRecord, human_type_id: &str) -> Vec<String> {
    let is_human = record
        .claims
        .iter()
        .any(|c| c.property == INSTANCE_OF && c.target == human_type_id);
    let pick: &[&str] = if is_human {
        &[OCCUPATION]
    } else {
        &[INSTANCE_OF, SUBCLASS_OF]
    };
    let mut out: Vec<String> = Vec::new();
    for property in pick {
        for claim in record.claims.iter().filter(|c| c.property == *property) {
            if !out.contains(&claim.target) {
                out.push(claim.target.clone());
            }
        }
    }
    out
}

/// A retained (typed) entity together with its resolved direct types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityEntry {
    pub id: String,
    pub label: String,
    pub aliases: Vec<String>,
    pub claims: Vec<(String, String)>,
    pub types: Vec<String>,
}

impl EntityEntry {
    fn new(record: EntityRecord, types: Vec<String>) -> Self {
        EntityEntry {
            id: record.entity_id,
            label: record.canonical_name,
            aliases: record.aliases,
            claims: record
                .claims
                .into_iter()
                .map(|c| (c.property, c.target))
                .collect(),
            types,
        }
    }

    /// Canonical name followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

/// Typed entities in dump order.
#[derive(Debug, Clone, Default)]
pub struct EntityTable {
    entries: Vec<EntityEntry>,
    by_id: HashMap<String, usize>,
}

impl EntityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: EntityEntry) -> Result<()> {
        if self.by_id.contains_key(&entry.id) {
            return Err(Error::DuplicateEntity(entry.id));
        }
        self.by_id.insert(entry.id.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EntityEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.get(id).map(|e| e.label.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntityEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Article title to entity id, keyed by canonical name. When two entities
    /// share a label the first one in dump order owns the title.
    pub fn page_table(&self) -> HashMap<String, String> {
        let mut pages = HashMap::with_capacity(self.entries.len());
        for e in &self.entries {
            pages.entry(e.label.clone()).or_insert_with(|| e.id.clone());
        }
        pages
    }
}

/// Surface form (canonical name or alias) to every entity carrying it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl AliasTable {
    pub fn insert(&mut self, alias: &str, entity_id: &str) {
        self.map
            .entry(alias.to_string())
            .or_default()
            .insert(entity_id.to_string());
    }

    pub fn lookup(&self, alias: &str) -> Option<&BTreeSet<String>> {
        self.map.get(alias)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub human_type_id: String,
    /// How many malformed markers to keep for reporting; all are counted.
    pub keep_malformed: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            human_type_id: DEFAULT_HUMAN_TYPE.to_string(),
            keep_malformed: 32,
        }
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub entities: EntityTable,
    pub aliases: AliasTable,
    pub stats: IngestStats,
    pub malformed: Vec<Malformed>,
}

/// Bit per numeric entity id, used to reject duplicates among all records
/// (retained or not) without keeping their ids around.
#[derive(Default)]
struct IdBitmap {
    words: Vec<u64>,
}

impl IdBitmap {
    /// Returns false if the id was already present.
    fn insert(&mut self, id: &str) -> bool {
        let n: usize = match id[1..].parse() {
            Ok(n) => n,
            // absurdly long numeric ids cannot be tracked; treat as fresh
            Err(_) => return true,
        };
        let (word, bit) = (n / 64, n % 64);
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
        let mask = 1u64 << bit;
        let fresh = self.words[word] & mask == 0;
        self.words[word] |= mask;
        fresh
    }
}

/// Incremental single-writer ingestion; feed lines in dump order.
pub struct Ingester {
    opts: IngestOptions,
    seen: IdBitmap,
    out: Ingested,
}

impl Ingester {
    pub fn new(opts: IngestOptions) -> Self {
        Ingester {
            opts,
            seen: IdBitmap::default(),
            out: Ingested::default(),
        }
    }

    pub fn push_line(&mut self, line: &str, offset: u64) -> Result<()> {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            return Ok(());
        }
        self.out.stats.records_read += 1;
        let record = match parse_entity_record(trimmed, offset) {
            Ok(r) => r,
            Err(m) => {
                self.out.stats.records_skipped_malformed += 1;
                if self.out.malformed.len() < self.opts.keep_malformed {
                    self.out.malformed.push(m);
                }
                return Ok(());
            }
        };
        if !self.seen.insert(&record.entity_id) {
            return Err(Error::DuplicateEntity(record.entity_id));
        }
        let types = resolve_direct_types(&record, &self.opts.human_type_id);
        if types.is_empty() {
            self.out.stats.records_skipped_untyped += 1;
            return Ok(());
        }
        let entry = EntityEntry::new(record, types);
        for name in entry.names() {
            self.out.aliases.insert(name, &entry.id);
        }
        self.out.entities.insert(entry)?;
        self.out.stats.records_retained += 1;
        Ok(())
    }

    pub fn finish(self) -> Ingested {
        self.out
    }
}

/// Streams a dump from `reader`, holding one line at a time.
pub fn ingest_dump<R: BufRead>(mut reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut ingester = Ingester::new(opts.clone());
    let mut line = String::new();
    let mut offset = 0u64;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io("<dump>", e))?;
        if n == 0 {
            break;
        }
        ingester.push_line(&line, offset)?;
        offset += n as u64;
    }
    Ok(ingester.finish())
}

/// Same as [`ingest_dump`] over an iterator of lines (offsets assume `\n`
/// terminators).
pub fn ingest_lines<I, S>(lines: I, opts: &IngestOptions) -> Result<Ingested>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut ingester = Ingester::new(opts.clone());
    let mut offset = 0u64;
    for line in lines {
        let line = line.as_ref();
        ingester.push_line(line, offset)?;
        offset += line.len() as u64 + 1;
    }
    Ok(ingester.finish())
}

/// Second pass over a dump collecting labels for `wanted` ids. Used to name
/// type nodes whose own records were not retained (e.g. root types with no
/// typing claims).
pub fn collect_labels<R: BufRead>(
    mut reader: R,
    wanted: &HashSet<String>,
) -> Result<HashMap<String, String>> {
    let mut labels = HashMap::new();
    let mut line = String::new();
    let mut offset = 0u64;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io("<dump>", e))?;
        if n == 0 {
            break;
        }
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if !trimmed.trim().is_empty() && !trimmed.starts_with('#') {
            if let Ok(r) = parse_entity_record(trimmed, offset) {
                if wanted.contains(&r.entity_id) {
                    labels.insert(r.entity_id, r.canonical_name);
                }
            }
        }
        offset += n as u64;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, label: &str, claims: &[(&str, &str)]) -> EntityRecord {
        EntityRecord {
            entity_id: id.into(),
            canonical_name: label.into(),
            aliases: vec![],
            claims: claims.iter().map(|(p, t)| Claim::new(*p, *t)).collect(),
        }
    }

    #[test]
    fn parses_venus() {
        let r = parse_entity_record(
            r#"{"id":"Q313","label":"Venus","aliases":["Morning Star"],"claims":[["P31","Q634"]]}"#,
            0,
        )
        .unwrap();
        assert_eq!(r.entity_id, "Q313");
        assert_eq!(r.canonical_name, "Venus");
        assert_eq!(r.aliases, vec!["Morning Star"]);
        assert_eq!(r.claims, vec![Claim::new("P31", "Q634")]);
    }

    #[test]
    fn keeps_typing_claims_in_order_and_drops_others() {
        let r = parse_entity_record(
            r#"{"id":"Q1","label":"x","claims":[["P279","Q3"],["P17","Q30"],["P31","Q2"],["P106","Q4"],["P31","Q5"]]}"#,
            0,
        )
        .unwrap();
        let props: Vec<_> = r.claims.iter().map(|c| c.property.as_str()).collect();
        assert_eq!(props, ["P279", "P31", "P106", "P31"]);
    }

    #[test]
    fn zero_claims_is_a_valid_record() {
        let r = parse_entity_record(r#"{"id":"Q7","label":"thing","aliases":[],"claims":[]}"#, 0)
            .unwrap();
        assert!(r.claims.is_empty());
        assert!(resolve_direct_types(&r, "Q5").is_empty());
    }

    #[test]
    fn truncated_line_is_malformed_with_offset() {
        let line = r#"{"id":"Q313","label":"Ven"#;
        let m = parse_entity_record(line, 100).unwrap_err();
        assert!(
            m.offset >= 100 && m.offset <= 100 + line.len() as u64,
            "{m:?}"
        );
        assert!(m.reason.contains("EOF"), "{}", m.reason);
    }

    #[test]
    fn rejects_bad_ids_and_empty_labels() {
        assert!(parse_entity_record(r#"{"id":"X1","label":"a"}"#, 0).is_err());
        assert!(parse_entity_record(r#"{"id":"Q1","label":"  "}"#, 0).is_err());
        assert!(
            parse_entity_record(r#"{"id":"Q1","label":"a","claims":[["P31","nope"]]}"#, 0).is_err()
        );
        // non-typing claims may point anywhere
        assert!(
            parse_entity_record(r#"{"id":"Q1","label":"a","claims":[["P17","2021"]]}"#, 0).is_ok()
        );
    }

    #[test]
    fn human_types_come_from_occupations() {
        let obama = record(
            "Q76",
            "Barack Obama",
            &[
                ("P31", "Q5"),
                ("P106", "politician"),
                ("P106", "jurist"),
                ("P106", "political writer"),
                ("P106", "community organizer"),
                ("P106", "podcaster"),
            ],
        );
        assert_eq!(
            resolve_direct_types(&obama, "Q5"),
            [
                "politician",
                "jurist",
                "political writer",
                "community organizer",
                "podcaster"
            ]
        );
    }

    #[test]
    fn occupations_replace_other_instance_claims() {
        let r = record("Q1", "x", &[("P31", "Q5"), ("P31", "Q99"), ("P106", "Q8")]);
        assert_eq!(resolve_direct_types(&r, "Q5"), ["Q8"]);
    }

    #[test]
    fn human_without_occupation_is_untyped() {
        let r = record("Q1", "x", &[("P31", "Q5")]);
        assert!(resolve_direct_types(&r, "Q5").is_empty());
    }

    #[test]
    fn non_human_types_are_instance_then_subclass_deduplicated() {
        let r = record(
            "Q1",
            "x",
            &[("P279", "Q3"), ("P31", "Q2"), ("P31", "Q3"), ("P31", "Q2")],
        );
        assert_eq!(resolve_direct_types(&r, "Q5"), ["Q2", "Q3"]);
        let venus = record("Q313", "Venus", &[("P31", "planet")]);
        assert_eq!(resolve_direct_types(&venus, "Q5"), ["planet"]);
    }

    #[test]
    fn human_type_is_configurable() {
        let r = record("Q1", "x", &[("P31", "Q5"), ("P106", "Q8")]);
        assert_eq!(resolve_direct_types(&r, "Q999"), ["Q5"]);
    }

    #[test]
    fn ingest_counts_and_discards_untyped() {
        let lines = [
            r#"{"id":"Q1","label":"a","claims":[["P31","Q10"]]}"#,
            r#"{"id":"Q2","label":"b","claims":[]}"#,
            r#"{"id":"Q3","label":"c","claims":[["P279","Q10"]]}"#,
        ];
        let out = ingest_lines(lines, &IngestOptions::default()).unwrap();
        assert_eq!(out.entities.len(), 2);
        assert_eq!(
            out.stats,
            IngestStats {
                records_read: 3,
                records_retained: 2,
                records_skipped_untyped: 1,
                records_skipped_malformed: 0,
            }
        );
    }

    #[test]
    fn malformed_lines_are_tallied_not_fatal() {
        let lines = [
            r#"{"id":"Q1","label":"a","claims":[["P31","Q10"]]}"#,
            r#"{"id":"Q2","lab"#,
            "",
            "# comment",
        ];
        let out = ingest_lines(lines, &IngestOptions::default()).unwrap();
        assert_eq!(out.stats.records_read, 2);
        assert_eq!(out.stats.records_skipped_malformed, 1);
        assert_eq!(out.malformed.len(), 1);
        let first_len = lines[0].len() as u64 + 1;
        assert!(out.malformed[0].offset >= first_len);
    }

    #[test]
    fn shared_alias_maps_to_both_entities() {
        let lines = [
            r#"{"id":"Q308","label":"Mercury","aliases":["Mercury (planet)"],"claims":[["P31","Q634"]]}"#,
            r#"{"id":"Q925","label":"mercury","aliases":["Mercury","Hg"],"claims":[["P31","Q11344"]]}"#,
        ];
        let out = ingest_lines(lines, &IngestOptions::default()).unwrap();
        let ids: Vec<_> = out
            .aliases
            .lookup("Mercury")
            .unwrap()
            .iter()
            .cloned()
            .collect();
        assert_eq!(ids, ["Q308", "Q925"]);
        assert_eq!(out.aliases.lookup("Hg").unwrap().len(), 1);
    }

    #[test]
    fn duplicate_id_is_a_hard_error_even_when_untyped() {
        let lines = [
            r#"{"id":"Q1","label":"a","claims":[]}"#,
            r#"{"id":"Q1","label":"a","claims":[["P31","Q10"]]}"#,
        ];
        match ingest_lines(lines, &IngestOptions::default()) {
            Err(Error::DuplicateEntity(id)) => assert_eq!(id, "Q1"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn reader_and_line_ingestion_agree() {
        let text =
            "{\"id\":\"Q1\",\"label\":\"a\",\"claims\":[[\"P31\",\"Q10\"]]}\n{\"id\":\"Q2\",\n";
        let a = ingest_dump(text.as_bytes(), &IngestOptions::default()).unwrap();
        let b = ingest_lines(text.lines(), &IngestOptions::default()).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.malformed, b.malformed);
    }

    #[test]
    fn collects_labels_for_wanted_ids() {
        let text = "{\"id\":\"Q1\",\"label\":\"a\"}\n{\"id\":\"Q2\",\"label\":\"b\"}\n";
        let wanted: HashSet<String> = ["Q2".to_string()].into();
        let labels = collect_labels(text.as_bytes(), &wanted).unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels["Q2"], "b");
    }

    #[test]
    fn page_table_prefers_first_label_owner() {
        let lines = [
            r#"{"id":"Q1","label":"Paris","claims":[["P31","Q515"]]}"#,
            r#"{"id":"Q2","label":"Paris","claims":[["P31","Q5"],["P106","Q33999"]]}"#,
        ];
        let out = ingest_lines(lines, &IngestOptions::default()).unwrap();
        assert_eq!(out.entities.page_table()["Paris"], "Q1");
    }
}
