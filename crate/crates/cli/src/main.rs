use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use typecorpus::config::{PipelineConfig, SplitSizes, TOOL_NAME, TOOL_VERSION};
use typecorpus::dst::CommandPredictor;
use typecorpus::io::write_text;
use typecorpus::pipeline::{eval_dst, eval_typing, DstPredictions, Pipeline};
use typecorpus::{Error, Result};

/// Build typed-entity QA corpora from a knowledge-graph dump and a linked
/// article corpus, and score typing and dialog-state predictions.
#[derive(Parser, Debug)]
#[command(name = "typecorpus", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args, Debug)]
struct Global {
    /// TOML configuration file
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Directory holding stage outputs
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output does not depend on this
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Keep every type of an entity instead of the context-relevant subset
    #[arg(long, global = true)]
    no_relevance_filter: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stream the dump and write the entity, alias and type-label tables
    IngestKg {
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        human_type_id: Option<String>,
    },
    /// Build the type ontology and entity-type index; fails on a cycle
    BuildOntology,
    /// Resolve hyperlinks and add dictionary mentions to the article corpus
    LinkCorpus {
        #[arg(long)]
        articles: Option<PathBuf>,
        /// Keep hyperlink mentions only
        #[arg(long)]
        no_augment: bool,
    },
    /// Partition linked documents into train, test and new-entity test
    MakeSplits {
        #[command(flatten)]
        sizes: SizeFlags,
    },
    /// Sample QA examples from a linked corpus (default: the train split)
    GenQa {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        questions_per_doc: Option<usize>,
    },
    /// Corpus statistics per file and over their union (default: the splits)
    Stats { inputs: Vec<PathBuf> },
    /// Every corpus stage in order: ingest-kg through stats
    Run {
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        articles: Option<PathBuf>,
        #[command(flatten)]
        sizes: SizeFlags,
    },
    /// Micro precision, recall and F1 of type predictions against gold
    EvalTyping {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Also write the report here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint goal accuracy of belief-state predictions for one domain
    EvalDst {
        #[arg(long)]
        dialogs: PathBuf,
        #[arg(long)]
        domain: String,
        #[arg(
            long,
            conflicts_with = "predictor",
            required_unless_present = "predictor"
        )]
        predictions: Option<PathBuf>,
        /// Program queried once per turn; trailing arguments go to it
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        predictor: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct SizeFlags {
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    new_ent: Option<usize>,
}

impl Global {
    fn config(&self) -> Result<Option<PipelineConfig>> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => return Ok(None),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.no_relevance_filter {
            cfg.relevance_filter = false;
        }
        Ok(Some(cfg))
    }

    /// Loads the config file if given, or builds one from flags alone, then
    /// applies stage-specific overrides.
    fn pipeline(
        &self,
        sizes: &SizeFlags,
        tweak: impl FnOnce(&mut PipelineConfig),
    ) -> Result<Pipeline> {
        let mut cfg = match self.config()? {
            Some(cfg) => cfg,
            None => {
                let seed = self
                    .seed
                    .ok_or_else(|| Error::Config("pass --config or --seed".into()))?;
                let mut cfg = PipelineConfig::new(
                    seed,
                    SplitSizes {
                        train: 1,
                        test: 1,
                        new_ent: 1,
                    },
                );
                cfg.relevance_filter = !self.no_relevance_filter;
                cfg
            }
        };
        if let Some(n) = sizes.train {
            cfg.splits.train = n;
        }
        if let Some(n) = sizes.test {
            cfg.splits.test = n;
        }
        if let Some(n) = sizes.new_ent {
            cfg.splits.new_ent = n;
        }
        tweak(&mut cfg);
        let out_dir = self
            .out_dir
            .clone()
            .or_else(|| cfg.paths.out_dir.clone())
            .ok_or_else(|| {
                Error::Config("no output directory: pass --out-dir or set paths.out_dir".into())
            })?;
        Pipeline::new(cfg, out_dir, self.workers)
    }

    fn report_header(&self) -> Result<String> {
        Ok(match self.config()? {
            Some(cfg) => cfg.header(),
            None => format!("# {TOOL_NAME} {TOOL_VERSION} config=none seed=none"),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let none = SizeFlags::default();
    match cli.command {
        Command::IngestKg {
            dump,
            human_type_id,
        } => {
            let p = g.pipeline(&none, |c| {
                if let Some(d) = dump {
                    c.paths.dump = Some(d);
                }
                if let Some(h) = human_type_id {
                    c.human_type_id = h;
                }
            })?;
            let s = p.ingest_kg()?;
            eprintln!(
                "read {} records, kept {}, skipped {} untyped and {} malformed",
                s.records_read,
                s.records_retained,
                s.records_skipped_untyped,
                s.records_skipped_malformed
            );
        }
        Command::BuildOntology => {
            let (nodes, dangling) = g.pipeline(&none, |_| {})?.build_ontology()?;
            eprintln!("{nodes} type nodes, {dangling} dangling");
        }
        Command::LinkCorpus {
            articles,
            no_augment,
        } => {
            let p = g.pipeline(&none, |c| {
                if let Some(a) = articles {
                    c.paths.articles = Some(a);
                }
                if no_augment {
                    c.augment_mentions = false;
                }
            })?;
            let s = p.link_corpus()?;
            eprintln!(
                "linked {} of {} documents ({} dropped, {} malformed)",
                s.documents_linked, s.documents_read, s.documents_dropped, s.documents_malformed
            );
        }
        Command::MakeSplits { sizes } => {
            let s = g.pipeline(&sizes, |_| {})?.make_splits()?;
            eprintln!(
                "train {}, test {}, test_newent {}",
                s.train, s.test, s.test_new_ent
            );
        }
        Command::GenQa {
            input,
            questions_per_doc,
        } => {
            let p = g.pipeline(&none, |c| {
                if let Some(n) = questions_per_doc {
                    c.questions_per_doc = n;
                }
            })?;
            let t = p.gen_qa(input.as_deref())?;
            eprintln!("generated {} examples, skipped {}", t.generated, t.skipped);
        }
        Command::Stats { inputs } => {
            let sections = g.pipeline(&none, |_| {})?.stats(&inputs)?;
            for (name, r) in sections {
                println!(
                    "{name}: documents={} entities={} types={} mentions={} type_references={}",
                    r.documents,
                    r.unique_entities,
                    r.unique_types,
                    r.num_mentions,
                    r.type_references
                );
            }
        }
        Command::Run {
            dump,
            articles,
            sizes,
        } => {
            let p = g.pipeline(&sizes, |c| {
                if let Some(d) = dump {
                    c.paths.dump = Some(d);
                }
                if let Some(a) = articles {
                    c.paths.articles = Some(a);
                }
            })?;
            p.ingest_kg()?;
            p.build_ontology()?;
            p.link_corpus()?;
            p.make_splits()?;
            p.gen_qa(None)?;
            p.stats(&[])?;
            eprintln!("outputs in {}", p.out_dir.display());
        }
        Command::EvalTyping {
            gold,
            predictions,
            out,
        } => {
            let (_, text) = eval_typing(&gold, &predictions)?;
            emit(g, &text, out)?;
        }
        Command::EvalDst {
            dialogs,
            domain,
            predictions,
            predictor,
            out,
        } => {
            let text = match (predictions, predictor) {
                (Some(path), _) => eval_dst(&dialogs, DstPredictions::File(&path), &domain)?.1,
                (None, Some(argv)) => {
                    let mut argv = argv.into_iter();
                    let program = argv.next().unwrap_or_default();
                    let mut cmd = CommandPredictor::new(program, argv.collect());
                    if let Some(cfg) = g.config()? {
                        cmd.template = cfg.dst.slot_template;
                    }
                    eval_dst(&dialogs, DstPredictions::Command(&cmd), &domain)?.1
                }
                (None, None) => {
                    return Err(Error::Config("pass --predictions or --predictor".into()))
                }
            };
            emit(g, &text, out)?;
        }
    }
    Ok(())
}

fn emit(g: &Global, text: &str, out: Option<PathBuf>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        write_text(&path, &g.report_header()?, text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
