//! Pipeline configuration file (TOML).
//!
//! ```toml
//! seed = 17
//! human_type_id = "Q5"
//! relevance_filter = true
//! augment_mentions = true
//! questions_per_doc = 4
//!
//! [paths]
//! dump = "dump.jsonl"
//! articles = "articles.jsonl"
//! out_dir = "out"
//!
//! [task_mix]
//! discovery = 0.2
//! typing = 0.3
//! recognition = 0.2
//! slotfill = 0.3
//!
//! [splits]
//! train = 6
//! test = 2
//! new_ent = 2
//! ```
//!
//! Relative paths resolve against the directory holding the config file.
//! `[templates]` and `[dst]` sections may override question templates.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dst::DEFAULT_SLOT_TEMPLATE;
use crate::error::{Error, Result};
use crate::kg_ingest::DEFAULT_HUMAN_TYPE;
use crate::qagen::{TaskMix, Templates};

pub const TOOL_NAME: &str = "typecorpus";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dump: Option<PathBuf>,
    pub articles: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
    pub new_ent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DstConfig {
    pub slot_template: String,
}

impl Default for DstConfig {
    fn default() -> Self {
        DstConfig {
            slot_template: DEFAULT_SLOT_TEMPLATE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default = "default_human")]
    human_type_id: String,
    #[serde(default = "yes")]
    relevance_filter: bool,
    #[serde(default = "yes")]
    augment_mentions: bool,
    #[serde(default = "default_questions")]
    questions_per_doc: usize,
    #[serde(default)]
    paths: Paths,
    #[serde(default)]
    task_mix: TaskMix,
    splits: Option<SplitSizes>,
    #[serde(default)]
    templates: Templates,
    #[serde(default)]
    dst: DstConfig,
}

fn default_human() -> String {
    DEFAULT_HUMAN_TYPE.to_string()
}

fn yes() -> bool {
    true
}

fn default_questions() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub human_type_id: String,
    pub relevance_filter: bool,
    pub augment_mentions: bool,
    pub questions_per_doc: usize,
    pub paths: Paths,
    pub task_mix: TaskMix,
    pub splits: SplitSizes,
    pub templates: Templates,
    pub dst: DstConfig,
}

impl PipelineConfig {
    /// A configuration with defaults for everything but the seed and split
    /// sizes, which have no sensible defaults.
    pub fn new(seed: u64, splits: SplitSizes) -> Self {
        PipelineConfig {
            seed,
            human_type_id: default_human(),
            relevance_filter: true,
            augment_mentions: true,
            questions_per_doc: default_questions(),
            paths: Paths::default(),
            task_mix: TaskMix::default(),
            splits,
            templates: Templates::default(),
            dst: DstConfig::default(),
        }
    }

    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let seed = raw
            .seed
            .ok_or_else(|| Error::Config("`seed` is required".into()))?;
        let splits = raw
            .splits
            .ok_or_else(|| Error::Config("`[splits]` is required".into()))?;
        let mut paths = raw.paths;
        if let Some(base) = base_dir {
            for p in [&mut paths.dump, &mut paths.articles, &mut paths.out_dir]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        let cfg = PipelineConfig {
            seed,
            human_type_id: raw.human_type_id,
            relevance_filter: raw.relevance_filter,
            augment_mentions: raw.augment_mentions,
            questions_per_doc: raw.questions_per_doc,
            paths,
            task_mix: raw.task_mix,
            splits,
            templates: raw.templates,
            dst: raw.dst,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        self.task_mix.validate()?;
        let s = self.splits;
        if s.train == 0 || s.test == 0 || s.new_ent == 0 {
            return Err(Error::Config(format!(
                "split sizes must be positive (train {}, test {}, new_ent {})",
                s.train, s.test, s.new_ent
            )));
        }
        if self.questions_per_doc == 0 {
            return Err(Error::Config("questions_per_doc must be positive".into()));
        }
        if !crate::kg_ingest::is_entity_id(&self.human_type_id) {
            return Err(Error::Config(format!(
                "human_type_id {:?} is not an entity id",
                self.human_type_id
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 over the generation parameters. Paths are excluded so the
    /// same settings produce the same digest wherever they run.
    pub fn digest(&self) -> String {
        let mut canonical = String::new();
        let _ = writeln!(canonical, "seed={}", self.seed);
        let _ = writeln!(canonical, "human_type_id={}", self.human_type_id);
        let _ = writeln!(canonical, "relevance_filter={}", self.relevance_filter);
        let _ = writeln!(canonical, "augment_mentions={}", self.augment_mentions);
        let _ = writeln!(canonical, "questions_per_doc={}", self.questions_per_doc);
        let w = self.task_mix.weights();
        let _ = writeln!(canonical, "task_mix={:?}", w.map(f64::to_bits));
        let _ = writeln!(
            canonical,
            "splits={},{},{}",
            self.splits.train, self.splits.test, self.splits.new_ent
        );
        let t = &self.templates;
        for s in [
            &t.discovery,
            &t.typing,
            &t.recognition,
            &t.slotfill,
            &self.dst.slot_template,
        ] {
            let _ = writeln!(canonical, "template={s:?}");
        }
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Comment line that opens every output file.
    pub fn header(&self) -> String {
        format!(
            "# {TOOL_NAME} {TOOL_VERSION} config={} seed={}",
            &self.digest()[..16],
            self.seed
        )
    }
}
