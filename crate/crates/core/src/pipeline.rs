//! File-level pipeline stages. Each stage reads its inputs from the output
//! directory of earlier stages and writes its own files there:
//!
//! | stage          | writes                                                        |
//! |----------------|---------------------------------------------------------------|
//! | ingest-kg      | `entities.jsonl`, `aliases.jsonl`, `type_labels.jsonl`, `ingest_stats.toml` |
//! | build-ontology | `ontology.jsonl`, `type_index.jsonl`, `ontology_report.toml`  |
//! | link-corpus    | `linked.jsonl`, `link_stats.toml`                             |
//! | make-splits    | `train.jsonl`, `test.jsonl`, `test_newent.jsonl`, `test.gold.jsonl`, `test_newent.gold.jsonl`, `splits.toml` |
//! | gen-qa         | `qa.jsonl`, `qa_stats.toml`                                   |
//! | stats          | `stats.toml`                                                  |
//!
//! Output bytes depend only on the configuration and inputs, never on the
//! worker count.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::config::PipelineConfig;
use crate::corpus_link::{
    link_document, make_splits, DictionaryMatcher, DocEntities, LinkContext, LinkCounts,
    LinkedDocument, RawDocument, SplitRole,
};
use crate::dst::{
    joint_goal_accuracy, multiwoz_schemas, pair_predictions, BeliefPrediction, CommandPredictor,
    DialogRecord, DialogTurn, JgaReport,
};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl, write_text, JsonlReader, JsonlWriter};
use crate::kg_ingest::{
    collect_labels, ingest_dump, EntityEntry, EntityTable, IngestOptions, IngestStats,
};
use crate::ontology::{build_ontology, EntityTypeIndex, IndexLine, TypeNode, TypeOntology};
use crate::qagen::{QaGenerator, SampleTally};
use crate::relevance::TypeFilter;
use crate::stats::{render_stats, StatsAccumulator, StatsReport};
use crate::typing_eval::{
    render_report, score_typing, typing_instances, TypingInstance, TypingPrediction, TypingReport,
};

/// Documents handed to the worker pool at a time.
const CHUNK: usize = 2048;

pub const ENTITIES: &str = "entities.jsonl";
pub const ALIASES: &str = "aliases.jsonl";
pub const TYPE_LABELS: &str = "type_labels.jsonl";
pub const ONTOLOGY: &str = "ontology.jsonl";
pub const TYPE_INDEX: &str = "type_index.jsonl";
pub const LINKED: &str = "linked.jsonl";
pub const TRAIN: &str = "train.jsonl";
pub const TEST: &str = "test.jsonl";
pub const TEST_NEW_ENT: &str = "test_newent.jsonl";
pub const TEST_GOLD: &str = "test.gold.jsonl";
pub const TEST_NEW_ENT_GOLD: &str = "test_newent.gold.jsonl";
pub const QA: &str = "qa.jsonl";

#[derive(Serialize, Deserialize)]
struct AliasLine {
    alias: String,
    ids: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct LabelLine {
    id: String,
    label: String,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pool: rayon::ThreadPool,
}

/// Tables loaded from the ingest and ontology stages.
pub struct KnowledgeBase {
    pub entities: EntityTable,
    pub ontology: TypeOntology,
    pub index: EntityTypeIndex,
}

impl KnowledgeBase {
    pub fn catalog(&self) -> Catalog<'_> {
        Catalog::new(&self.entities, &self.ontology, &self.index)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkSummary {
    pub documents_read: u64,
    pub documents_linked: u64,
    pub documents_dropped: u64,
    pub documents_malformed: u64,
    pub hyperlink_mentions: u64,
    pub augmented_mentions: u64,
    pub links: LinkCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSummary {
    pub train: usize,
    pub test: usize,
    pub test_new_ent: usize,
    pub test_instances: usize,
    pub test_new_ent_instances: usize,
}

fn toml_text<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Internal(e.to_string()))
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out_dir: PathBuf, workers: usize) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
        Ok(Pipeline {
            config,
            out_dir,
            pool,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn header(&self) -> String {
        self.config.header()
    }

    fn filter(&self) -> TypeFilter {
        TypeFilter::from_flag(self.config.relevance_filter)
    }

    fn require(&self, path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| Error::Config(format!("no {what} path configured")))
    }

    fn open(path: &Path) -> Result<BufReader<File>> {
        File::open(path)
            .map(BufReader::new)
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn ingest_kg(&self) -> Result<IngestStats> {
        let dump = self.require(&self.config.paths.dump, "dump")?;
        let opts = IngestOptions {
            human_type_id: self.config.human_type_id.clone(),
            ..IngestOptions::default()
        };
        let ingested = ingest_dump(Self::open(&dump)?, &opts).map_err(|e| relabel(e, &dump))?;

        let header = self.header();
        write_jsonl(&self.path(ENTITIES), &header, ingested.entities.iter())?;
        let mut w = JsonlWriter::create(&self.path(ALIASES), &header)?;
        for (alias, ids) in ingested.aliases.iter() {
            w.write(&AliasLine {
                alias: alias.clone(),
                ids: ids.clone(),
            })?;
        }
        w.finish()?;

        // type ids that no retained record names
        let mut wanted: HashSet<String> = HashSet::new();
        for e in ingested.entities.iter() {
            for t in &e.types {
                if ingested.entities.get(t).is_none() {
                    wanted.insert(t.clone());
                }
            }
        }
        let labels = collect_labels(Self::open(&dump)?, &wanted)?;
        let mut labels: Vec<LabelLine> = labels
            .into_iter()
            .map(|(id, label)| LabelLine { id, label })
            .collect();
        labels.sort_by(|a, b| a.id.cmp(&b.id));
        write_jsonl(&self.path(TYPE_LABELS), &header, &labels)?;

        let mut report = toml_text(&ingested.stats)?;
        for m in &ingested.malformed {
            let _ = writeln!(report, "# malformed at byte {}: {}", m.offset, m.reason);
        }
        write_text(&self.path("ingest_stats.toml"), &header, &report)?;
        Ok(ingested.stats)
    }

    pub fn load_entities(&self) -> Result<EntityTable> {
        let mut table = EntityTable::new();
        for entry in JsonlReader::<EntityEntry>::open(&self.path(ENTITIES))? {
            table.insert(entry?)?;
        }
        Ok(table)
    }

    pub fn build_ontology(&self) -> Result<(usize, usize)> {
        let table = self.load_entities()?;
        let labels: HashMap<String, String> = read_jsonl::<LabelLine>(&self.path(TYPE_LABELS))?
            .into_iter()
            .map(|l| (l.id, l.label))
            .collect();
        let (ontology, index) = build_ontology(&table, &labels);
        if let Err(report) = ontology.validate_acyclic() {
            return Err(Error::Cycle(report.cycle));
        }
        let header = self.header();
        write_jsonl(&self.path(ONTOLOGY), &header, ontology.nodes())?;
        write_jsonl(
            &self.path(TYPE_INDEX),
            &header,
            &index.to_lines().collect::<Vec<_>>(),
        )?;
        let dangling = ontology.dangling().count();
        let body = format!(
            "nodes = {}\ndangling = {}\nindexed_entities = {}\nacyclic = true\n",
            ontology.node_count(),
            dangling,
            index.len()
        );
        write_text(&self.path("ontology_report.toml"), &header, &body)?;
        Ok((ontology.node_count(), dangling))
    }

    pub fn load_kb(&self) -> Result<KnowledgeBase> {
        let entities = self.load_entities()?;
        let ontology = TypeOntology::from_nodes(read_jsonl::<TypeNode>(&self.path(ONTOLOGY))?);
        let index = EntityTypeIndex::from_lines(read_jsonl::<IndexLine>(&self.path(TYPE_INDEX))?);
        Ok(KnowledgeBase {
            entities,
            ontology,
            index,
        })
    }

    pub fn link_corpus(&self) -> Result<LinkSummary> {
        let articles = self.require(&self.config.paths.articles, "articles")?;
        let kb = self.load_kb()?;
        let pages = kb.entities.page_table();
        let matcher = DictionaryMatcher::new(&kb.entities);
        let ctx = LinkContext {
            pages: &pages,
            index: &kb.index,
            matcher: &matcher,
            augment: self.config.augment_mentions,
        };
        let mut summary = LinkSummary::default();
        let mut out = JsonlWriter::create(&self.path(LINKED), &self.header())?;
        let mut reader = JsonlReader::<RawDocument>::open(&articles)?;
        let mut seen_ids = HashSet::new();
        loop {
            let chunk: Vec<RawDocument> = reader.by_ref().take(CHUNK).collect::<Result<_>>()?;
            if chunk.is_empty() {
                break;
            }
            for d in &chunk {
                if !seen_ids.insert(d.doc_id.clone()) {
                    return Err(Error::InvalidDocument {
                        doc_id: d.doc_id.clone(),
                        reason: "duplicate document id".into(),
                    });
                }
            }
            let results: Vec<Result<(Option<LinkedDocument>, LinkCounts)>> = self
                .pool
                .install(|| chunk.par_iter().map(|d| link_document(d, &ctx)).collect());
            for r in results {
                summary.documents_read += 1;
                match r {
                    Ok((Some(doc), counts)) => {
                        summary.documents_linked += 1;
                        summary.links += counts;
                        for m in &doc.mentions {
                            match m.source {
                                crate::corpus_link::MentionSource::Hyperlink => {
                                    summary.hyperlink_mentions += 1
                                }
                                crate::corpus_link::MentionSource::Augmented => {
                                    summary.augmented_mentions += 1
                                }
                            }
                        }
                        out.write(&doc)?;
                    }
                    Ok((None, counts)) => {
                        summary.documents_dropped += 1;
                        summary.links += counts;
                    }
                    Err(Error::InvalidDocument { .. }) => summary.documents_malformed += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        out.finish()?;
        write_text(
            &self.path("link_stats.toml"),
            &self.header(),
            &toml_text(&summary)?,
        )?;
        Ok(summary)
    }

    pub fn make_splits(&self) -> Result<SplitSummary> {
        let s = self.config.splits;
        // first pass: entity sets only
        let summaries = JsonlReader::<LinkedDocument>::open(&self.path(LINKED))?
            .map(|d| d.map(|d| DocEntities::from(&d)));
        let summaries: Vec<DocEntities> = summaries.collect::<Result<_>>()?;
        let plan = make_splits(summaries, s.train, s.test, s.new_ent, self.config.seed)?;
        let roles = plan.roles();

        let kb = self.load_kb()?;
        let catalog = kb.catalog();
        let header = self.header();
        let mut train_w = JsonlWriter::create(&self.path(TRAIN), &header)?;
        let mut test_w = JsonlWriter::create(&self.path(TEST), &header)?;
        let mut new_w = JsonlWriter::create(&self.path(TEST_NEW_ENT), &header)?;
        let mut test_gold = JsonlWriter::create(&self.path(TEST_GOLD), &header)?;
        let mut new_gold = JsonlWriter::create(&self.path(TEST_NEW_ENT_GOLD), &header)?;
        let (mut test_instances, mut new_instances) = (0, 0);
        // second pass: route documents, keeping corpus order within each split
        for doc in JsonlReader::<LinkedDocument>::open(&self.path(LINKED))? {
            let doc = doc?;
            match roles.get(doc.doc_id.as_str()) {
                Some(SplitRole::Train) => train_w.write(&doc)?,
                Some(SplitRole::Test) => {
                    let gold = typing_instances(
                        &doc,
                        &catalog,
                        self.filter(),
                        |e| plan.is_seen(e),
                        false,
                    )?;
                    test_instances += gold.len();
                    for g in &gold {
                        test_gold.write(g)?;
                    }
                    test_w.write(&doc)?;
                }
                Some(SplitRole::TestNewEnt) => {
                    let gold =
                        typing_instances(&doc, &catalog, self.filter(), |e| plan.is_seen(e), true)?;
                    new_instances += gold.len();
                    for g in &gold {
                        new_gold.write(g)?;
                    }
                    new_w.write(&doc)?;
                }
                None => {}
            }
        }
        for w in [train_w, test_w, new_w, test_gold, new_gold] {
            w.finish()?;
        }
        let summary = SplitSummary {
            train: plan.train.len(),
            test: plan.test.len(),
            test_new_ent: plan.test_new_ent.len(),
            test_instances,
            test_new_ent_instances: new_instances,
        };
        write_text(&self.path("splits.toml"), &header, &toml_text(&summary)?)?;
        Ok(summary)
    }

    /// Samples `questions_per_doc` examples from every document of `input`
    /// (default: the training split).
    pub fn gen_qa(&self, input: Option<&Path>) -> Result<SampleTally> {
        let input = input
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.path(TRAIN));
        let kb = self.load_kb()?;
        let gen = QaGenerator::new(kb.catalog(), &self.config.templates, self.filter());
        let mut out = JsonlWriter::create(&self.path(QA), &self.header())?;
        let mut tally = SampleTally::default();
        let mut reader = JsonlReader::<LinkedDocument>::open(&input)?;
        let n = self.config.questions_per_doc;
        let seed = self.config.seed;
        loop {
            let chunk: Vec<LinkedDocument> = reader.by_ref().take(CHUNK).collect::<Result<_>>()?;
            if chunk.is_empty() {
                break;
            }
            let results: Vec<_> = self.pool.install(|| {
                chunk
                    .par_iter()
                    .map(|d| gen.sample_examples(d, &self.config.task_mix, n, seed))
                    .collect()
            });
            for r in results {
                let (examples, t) = r?;
                tally += t;
                for e in &examples {
                    out.write(e)?;
                }
            }
        }
        out.finish()?;
        write_text(
            &self.path("qa_stats.toml"),
            &self.header(),
            &toml_text(&tally)?,
        )?;
        Ok(tally)
    }

    /// Statistics per input file plus a `[total]` section over their union.
    /// Defaults to the three split files.
    pub fn stats(&self, inputs: &[PathBuf]) -> Result<Vec<(String, StatsReport)>> {
        let inputs: Vec<PathBuf> = if inputs.is_empty() {
            [TRAIN, TEST, TEST_NEW_ENT]
                .iter()
                .map(|n| self.path(n))
                .collect()
        } else {
            inputs.to_vec()
        };
        let kb = self.load_kb()?;
        let mut total = StatsAccumulator::new(&kb.index, self.filter());
        let mut sections = Vec::new();
        for path in &inputs {
            let mut acc = StatsAccumulator::new(&kb.index, self.filter());
            for doc in JsonlReader::<LinkedDocument>::open(path)? {
                let doc = doc?;
                acc.add(&doc)?;
                total.add(&doc)?;
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            sections.push((name, acc.finish()));
        }
        sections.push(("total".to_string(), total.finish()));
        let mut body = String::new();
        for (name, r) in &sections {
            let _ = write!(body, "\n[\"{name}\"]\n{}", render_stats(r));
        }
        write_text(&self.path("stats.toml"), &self.header(), &body)?;
        Ok(sections)
    }
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path.display().to_string(), source),
        other => other,
    }
}

/// Scores a prediction file against a gold instance file.
pub fn eval_typing(gold: &Path, predictions: &Path) -> Result<(TypingReport, String)> {
    let gold: Vec<TypingInstance> = read_jsonl(gold)?;
    let preds: Vec<TypingPrediction> = read_jsonl(predictions)?;
    let report = score_typing(&gold, &preds)?;
    let text = render_report(&report);
    Ok((report, text))
}

pub enum DstPredictions<'a> {
    File(&'a Path),
    Command(&'a CommandPredictor),
}

/// Joint goal accuracy over a dialog file for one target domain.
pub fn eval_dst(
    dialogs: &Path,
    predictions: DstPredictions<'_>,
    domain: &str,
) -> Result<(JgaReport, String)> {
    let schemas = multiwoz_schemas();
    let schema = schemas
        .iter()
        .find(|s| s.domain == domain)
        .ok_or_else(|| Error::UnknownDomain(domain.to_string()))?;
    let turns: Vec<DialogTurn> = read_jsonl::<DialogRecord>(dialogs)?
        .into_iter()
        .map(DialogTurn::from_record)
        .collect::<Result<_>>()?;
    let pairs = match predictions {
        DstPredictions::File(path) => {
            pair_predictions(turns, read_jsonl::<BeliefPrediction>(path)?)?
        }
        DstPredictions::Command(cmd) => turns
            .into_iter()
            .map(|t| {
                let pred = cmd.predict(&t, schema)?;
                Ok((t.gold, pred))
            })
            .collect::<Result<_>>()?,
    };
    let report = joint_goal_accuracy(&pairs, domain, &schemas)?;
    let text = format!(
        "# joint goal accuracy: exact (slot, value) set agreement within the target domain\ndomain = \"{domain}\"\nturns = {}\ncorrect = {}\njga = {:.4}\n",
        report.turns, report.correct, report.accuracy
    );
    Ok((report, text))
}
