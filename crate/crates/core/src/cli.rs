//! The `deeplens` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{load_esbm, load_manifest, DatasetManifest, EsbmLayout, EsbmSubset};
use crate::embeddings::{filter_vec_file, load_vec_file, manifest_vocabulary, textual_form, tokenize, EmbeddingStore};
use crate::error::{Error, Result};
use crate::eval::{oracle_scores, paired_ttest, EvalReport};
use crate::model::{load_checkpoint, save_checkpoint, select_summary, write_scores_tsv, DeepLensModel, ModelConfig};
use crate::train::{cross_validate, evaluate_entities, EarlyStopMetric, EncodedDataset, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "deeplens", version, about = "Entity summarization with attention-pooled triple scoring")]
pub struct RunSpec {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a dataset, printing entity, triple and gold counts.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        /// Report resources with no token in this vector file.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Keep only the word vectors needed by a dataset.
    FilterVectors {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate: train one model per fold, write checkpoints and reports.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-evaluate fold checkpoints written by `train`.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        k: usize,
        /// Directory holding `fold<i>.checkpoint.json` files.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one entity with a checkpoint and print its summary.
    Summarize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        entity: String,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// JSON dataset manifest.
    #[arg(long, required_unless_present = "esbm", conflicts_with = "esbm")]
    pub manifest: Option<PathBuf>,
    /// Root of an ESBM benchmark checkout, read instead of a manifest.
    #[arg(long)]
    pub esbm: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dbpedia", requires = "esbm")]
    pub esbm_subset: SubsetArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SubsetArg {
    Dbpedia,
    Lmdb,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EarlyStopArg {
    F1,
    Loss,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    /// Summary size; ESBM uses 5 and 10.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "f1")]
    pub early_stop: EarlyStopArg,
    /// Train folds concurrently.
    #[arg(long)]
    pub parallel_folds: bool,
}

impl DataArgs {
    fn load(&self) -> Result<DatasetManifest> {
        match (&self.manifest, &self.esbm) {
            (Some(path), _) => load_manifest(path),
            (None, Some(root)) => {
                let subset = match self.esbm_subset {
                    SubsetArg::Dbpedia => EsbmSubset::Dbpedia,
                    SubsetArg::Lmdb => EsbmSubset::Lmdb,
                    SubsetArg::All => EsbmSubset::All,
                };
                load_esbm(&EsbmLayout::new(root), subset)
            }
            (None, None) => Err(Error::InvalidInput("--manifest or --esbm is required".into())),
        }
    }
}

/// Exit code for an error: 3 for numeric failures, 2 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::NonFiniteLoss { .. } | Error::DegenerateVariance => 3,
        _ => 2,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match RunSpec::try_parse_from(args) {
        Ok(spec) => spec,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&spec.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn load_store(path: &Path, manifest: &DatasetManifest) -> Result<EmbeddingStore> {
    let vocab = manifest_vocabulary(manifest).into_iter().collect();
    load_vec_file(path, Some(&vocab))
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Ingest { data, vectors } => ingest(&data.load()?, vectors.as_deref(), out),
        Command::FilterVectors { data, vectors, out: dest } => {
            let manifest = data.load()?;
            let vocab = manifest_vocabulary(&manifest);
            let kept = filter_vec_file(vectors, &vocab, dest)?;
            let _ = writeln!(out, "vocabulary {} words, {} vectors written to {}", vocab.len(), kept, dest.display());
            Ok(())
        }
        Command::Train { data, train, out: dir } => train_cmd(&data.load()?, train, dir, out),
        Command::Evaluate {
            data,
            vectors,
            k,
            checkpoint,
            out: dir,
        } => evaluate_cmd(&data.load()?, vectors, *k, checkpoint, dir.as_deref(), out),
        Command::Summarize {
            data,
            vectors,
            k,
            checkpoint,
            entity,
        } => summarize_cmd(&data.load()?, vectors, *k, checkpoint, entity, out),
    }
}

fn ingest(manifest: &DatasetManifest, vectors: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let stats = manifest.stats();
    let _ = writeln!(out, "{}: {} folds", manifest.name, manifest.folds.len());
    let _ = writeln!(out, "{} entities, {} triples, {} golds", stats.entities, stats.triples, stats.golds);
    if let Some(path) = vectors {
        let store = load_store(path, manifest)?;
        let mut uncovered = 0;
        for desc in &manifest.entities {
            for t in &desc.triples {
                for (role, r) in [("property", t.prop()), ("value", t.val())] {
                    if store.embed_resource(r).covered == 0 {
                        uncovered += 1;
                        let _ = writeln!(
                            out,
                            "warning: <{}> triple {}: {role} {:?} has no known tokens",
                            desc.iri(),
                            t.id,
                            textual_form(r)
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "{uncovered} resources without vectors");
    }
    Ok(())
}

fn fold_checkpoint(dir: &Path, fold: usize) -> PathBuf {
    dir.join(format!("fold{fold}.checkpoint.json"))
}

fn write_report(dir: &Path, stem: &str, report: &EvalReport) -> Result<()> {
    let mut tsv = Vec::new();
    report.write_tsv(&mut tsv).expect("write to memory");
    write_file(&dir.join(format!("{stem}.tsv")), tsv)?;
    write_file(&dir.join(format!("{stem}.json")), report.summary_json() + "\n")
}

fn compare_with_oracle(
    manifest: &DatasetManifest,
    report: &EvalReport,
    k: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let entities: Vec<_> = report
        .per_entity_f1
        .iter()
        .map(|(iri, _)| manifest.entity(iri))
        .collect::<Result<_>>()?;
    let oracle = EvalReport::new(manifest.name.clone(), k, None, None, oracle_scores(entities, k)?);
    let _ = writeln!(out, "ORACLE mean F1 {:.4}", oracle.mean_f1);
    if report.per_entity_f1.len() >= 2 {
        match paired_ttest(&report.scores(), &oracle.scores()) {
            Ok(sig) => {
                let _ = writeln!(out, "paired t-test vs ORACLE: {sig}");
            }
            Err(Error::DegenerateVariance) => {
                let _ = writeln!(out, "paired t-test vs ORACLE: constant difference, not testable");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn train_cmd(manifest: &DatasetManifest, args: &TrainArgs, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let store = load_store(&args.vectors, manifest)?;
    let encoded = EncodedDataset::new(manifest, &store);
    let model_cfg = ModelConfig {
        seed: args.seed,
        ..ModelConfig::with_embed_dim(store.dim())
    };
    let cfg = TrainConfig {
        lr: args.lr,
        max_epochs: args.max_epochs,
        k: args.k,
        seed: args.seed,
        early_stop: match args.early_stop {
            EarlyStopArg::F1 => EarlyStopMetric::ValF1,
            EarlyStopArg::Loss => EarlyStopMetric::ValLoss,
        },
        ..TrainConfig::default()
    };
    let cv = cross_validate(manifest, &model_cfg, &cfg, &encoded, args.parallel_folds)?;

    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut scores = Vec::new();
    writeln!(scores, "entity_iri\ttriple_id\tscore\tselected").expect("write to memory");
    for fold in &cv.folds {
        save_checkpoint(&fold.scorer, fold_checkpoint(dir, fold.fold))?;
        write_report(dir, &format!("fold{}", fold.fold), &fold.report)?;
        for iri in &manifest.folds.iter().find(|f| f.index == fold.fold).expect("fold exists").test {
            let mut scored = fold.scorer.score_description(encoded.get(iri)?)?;
            scored.entity = Some(iri.clone());
            write_scores_tsv(&mut scores, &scored, cfg.k, false).expect("write to memory");
        }
        let _ = writeln!(
            out,
            "fold {}: mean F1 {:.4} over {} test entities (epoch {})",
            fold.fold,
            fold.report.mean_f1,
            fold.report.per_entity_f1.len(),
            fold.chosen_epoch.unwrap_or(0)
        );
    }
    write_file(&dir.join("scores.tsv"), scores)?;
    write_report(dir, "aggregate", &cv.aggregate)?;
    let _ = writeln!(out, "mean F1 {:.4} over {} entities", cv.aggregate.mean_f1, cv.aggregate.per_entity_f1.len());
    compare_with_oracle(manifest, &cv.aggregate, cfg.k, out)
}

fn evaluate_cmd(
    manifest: &DatasetManifest,
    vectors: &Path,
    k: usize,
    ckpt_dir: &Path,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let store = load_store(vectors, manifest)?;
    let encoded = EncodedDataset::new(manifest, &store);
    let mut per_entity = Vec::new();
    for fold in &manifest.folds {
        let wrap = |e: Error| Error::Fold {
            index: fold.index,
            source: Box::new(e),
        };
        let model = load_checkpoint(fold_checkpoint(ckpt_dir, fold.index)).map_err(wrap)?;
        model.check_store(&store).map_err(wrap)?;
        let scores = evaluate_entities(&model, manifest, &encoded, &fold.test, k).map_err(wrap)?;
        let report = EvalReport::new(manifest.name.clone(), k, Some(fold.index), None, scores);
        let _ = writeln!(out, "fold {}: mean F1 {:.4}", fold.index, report.mean_f1);
        if let Some(dir) = dir {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            write_report(dir, &format!("fold{}", fold.index), &report)?;
        }
        per_entity.extend(report.per_entity_f1);
    }
    let aggregate = EvalReport::new(manifest.name.clone(), k, None, None, per_entity);
    if let Some(dir) = dir {
        write_report(dir, "aggregate", &aggregate)?;
    }
    let _ = writeln!(out, "mean F1 {:.4} over {} entities", aggregate.mean_f1, aggregate.per_entity_f1.len());
    compare_with_oracle(manifest, &aggregate, k, out)
}

fn summarize_cmd(
    manifest: &DatasetManifest,
    vectors: &Path,
    k: usize,
    checkpoint: &Path,
    entity: &str,
    out: &mut dyn Write,
) -> Result<()> {
    let desc = manifest.entity(entity)?;
    let model: DeepLensModel = load_checkpoint(checkpoint)?;
    let store = load_store(vectors, manifest)?;
    let scored = model.score_entity(desc, &store)?;
    let summary = select_summary(&scored, k);
    let _ = writeln!(out, "<{}>: top {} of {} triples", entity, summary.len(), desc.triples.len());
    for (rank, &id) in summary.iter().enumerate() {
        let t = &desc.triples[id];
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{} = {}",
            rank + 1,
            id,
            scored.score(id).unwrap_or(f64::NAN),
            textual_form(t.prop()),
            textual_form(t.val())
        );
    }
    let _ = writeln!(out, "attention (candidate -> strongest context triples):");
    for &id in &summary {
        let mut weights: Vec<(usize, f64)> = scored
            .ids
            .iter()
            .map(|&ctx| (ctx, scored.attention(id, ctx).unwrap_or(0.0)))
            .collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let shown: Vec<String> = weights.iter().take(5).map(|(ctx, w)| format!("{ctx}:{w:.4}")).collect();
        let _ = writeln!(out, "  {id} -> {}", shown.join(" "));
    }
    let unknown: Vec<String> = desc
        .triples
        .iter()
        .flat_map(|t| [t.prop(), t.val()])
        .flat_map(|r| tokenize(textual_form(r)))
        .filter(|w| store.get(w).is_none())
        .collect();
    if !unknown.is_empty() {
        let _ = writeln!(out, "{} tokens without vectors", unknown.len());
    }
    Ok(())
}
