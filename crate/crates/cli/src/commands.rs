//! The six subcommands: argument definitions (clap) and their
//! implementations, wiring file formats and artifacts to the core library.

use std::io::{BufRead, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mpcs_core::api::ApiCatalog;
use mpcs_core::corpus::{
    build_perspective_dataset, plain_pairs, AugmentOptions, AugmentStats, Corpus, Perspective,
};
use mpcs_core::encoder::{EncoderModel, Optimizer, Pooling, TrainConfig};
use mpcs_core::ensemble::{EnsembleConfig, EnsembleModel};
use mpcs_core::metrics::{evaluate, PairScorer};
use mpcs_core::permute::PermutePolicy;
use mpcs_core::rename::RenameOrder;

use crate::artifact::{
    load_any, load_encoder, save_encoder, save_ensemble, sha256_hex, MemberRef, TrainSection,
};
use crate::error::{io_at, CliError};
use crate::formats::{
    read_corpus, read_dataset, read_raw_corpus, render_report, to_json_line, write_corpus,
    write_dataset,
};
use crate::manifest::{RunRecorder, Sink};

#[derive(Parser)]
#[command(
    name = "mpcs",
    version,
    about = "Multi-perspective semantic code search: build datasets, train scorers, rank snippets",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Normalize a raw JSONL snippet collection into a corpus file
    Ingest(IngestArgs),
    /// Build a pair dataset for one perspective (with transforms)
    Augment(AugmentArgs),
    /// Train a single pair-scoring encoder on a dataset
    Train(TrainArgs),
    /// Combine trained encoders into an ensemble scorer
    TrainEnsemble(TrainEnsembleArgs),
    /// Rank every query against distractors and report metrics
    Eval(EvalArgs),
    /// Rank corpus snippets for a query (interactive without --query)
    Search(SearchArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    /// Raw JSONL input, one record per line
    #[arg(long)]
    pub input: PathBuf,
    /// Normalized corpus output path
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct AugmentArgs {
    /// Normalized corpus file
    #[arg(long)]
    pub corpus: PathBuf,
    /// original | structure | variable | api
    #[arg(long)]
    pub perspective: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rename numbering: lexicographic | declaration
    #[arg(long, default_value = "lexicographic")]
    pub rename_order: String,
    /// Emit every single-swap permutation variant instead of one per entry
    #[arg(long)]
    pub all_variants: bool,
    /// Treat shared unresolved receivers as permutation conflicts
    #[arg(long)]
    pub conservative: bool,
    /// API catalog file (defaults to the built-in JVM catalog)
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Dataset output path (a .meta.json sidecar records counts)
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Pair dataset produced by `augment`
    #[arg(long)]
    pub dataset: PathBuf,
    /// Artifact directory to create
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Model tag recorded in the artifact (defaults to the dataset's perspective)
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding width
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// mean | attention
    #[arg(long, default_value = "mean")]
    pub pooling: String,
    /// Token-sequence truncation length
    #[arg(long, default_value_t = 256)]
    pub max_len: usize,
    /// Drop tokens rarer than this from the vocabulary
    #[arg(long, default_value_t = 2)]
    pub min_frequency: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// sgd | adagrad
    #[arg(long, default_value = "adagrad")]
    pub optimizer: String,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Global gradient-norm clip
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
}

#[derive(Args)]
pub struct TrainEnsembleArgs {
    /// Trained encoder artifact directory; repeat once per member, in order
    #[arg(long = "member", required = true)]
    pub members: Vec<PathBuf>,
    /// Original-pairs dataset (perspective "original")
    #[arg(long)]
    pub dataset: PathBuf,
    /// Artifact directory to create
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Combining-layer width (defaults to half the concatenated input)
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Update member parameters too; updated copies are stored inside the artifact
    #[arg(long)]
    pub finetune_members: bool,
    #[arg(long, default_value_t = 1e-2)]
    pub learning_rate: f64,
    /// sgd | adagrad
    #[arg(long, default_value = "adagrad")]
    pub optimizer: String,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Global gradient-norm clip
    #[arg(long, default_value_t = 5.0)]
    pub clip_norm: f64,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Model artifact directory (encoder or ensemble)
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to evaluate over
    #[arg(long)]
    pub corpus: PathBuf,
    /// Distractor snippets ranked against each query's own snippet
    #[arg(long, default_value_t = 99)]
    pub distractors: usize,
    /// Rank against every other entry (overrides --distractors)
    #[arg(long)]
    pub exhaustive: bool,
    /// Success-rate cutoffs, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 10])]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report output path (line-delimited JSON, summary first)
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct SearchArgs {
    /// Model artifact directory (encoder or ensemble)
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to search
    #[arg(long)]
    pub corpus: PathBuf,
    /// One-shot query; omit to read queries interactively from stdin
    #[arg(long)]
    pub query: Option<String>,
    /// How many hits to print per query
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

/// Runs the parsed command. `argv` is the post-expansion argument list,
/// recorded verbatim in the run manifest.
pub fn dispatch(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(&args, argv),
        Command::Augment(args) => cmd_augment(&args, argv),
        Command::Train(args) => cmd_train(&args, argv),
        Command::TrainEnsemble(args) => cmd_train_ensemble(&args, argv),
        Command::Eval(args) => cmd_eval(&args, argv),
        Command::Search(args) => cmd_search(&args, argv),
    }
}

fn cmd_ingest(args: &IngestArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("ingest", argv);
    rec.input_file(&args.input)?;

    let (entries, skips) = read_raw_corpus(&args.input)?;
    if entries.is_empty() {
        return Err(CliError::contract(format!(
            "{}: no usable records ({} skipped)",
            args.input.display(),
            skips.total()
        )));
    }
    let corpus = Corpus::from_entries(entries)?;
    write_corpus(&args.output, corpus.entries())?;

    println!(
        "ingested {} entries into {} ({} skipped: {} invalid json, {} empty code, {} empty query, {} duplicate id)",
        corpus.len(),
        args.output.display(),
        skips.total(),
        skips.invalid_json,
        skips.empty_code,
        skips.empty_query,
        skips.duplicate_id
    );

    rec.output_file(&args.output)?;
    rec.sink(Sink::Beside(args.output.clone()));
    rec.emit()
}

/// `augment --perspective` accepts the three transform perspectives plus
/// `original`, which pairs the corpus untransformed (the dataset ensemble
/// combination trains on).
enum PerspectiveArg {
    Original,
    Transformed(Perspective),
}

fn parse_perspective(s: &str) -> Result<PerspectiveArg, CliError> {
    if s == "original" {
        return Ok(PerspectiveArg::Original);
    }
    Perspective::from_str(s)
        .map(PerspectiveArg::Transformed)
        .map_err(|_| {
            CliError::contract(format!(
                "unknown perspective '{s}' (expected original, structure, variable, or api)"
            ))
        })
}

fn parse_rename_order(s: &str) -> Result<RenameOrder, CliError> {
    match s {
        "lexicographic" => Ok(RenameOrder::Lexicographic),
        "declaration" => Ok(RenameOrder::Declaration),
        other => Err(CliError::contract(format!(
            "unknown rename order '{other}' (expected lexicographic or declaration)"
        ))),
    }
}

/// Sidecar written next to every dataset, recording how it was built.
#[derive(Serialize)]
struct DatasetMeta {
    perspective: String,
    seed: u64,
    rename_order: String,
    permute_policy: String,
    conservative: bool,
    catalog_sha256: String,
    examples: usize,
    positives: usize,
    counts: MetaCounts,
}

#[derive(Serialize, Default)]
struct MetaCounts {
    originals: usize,
    variants: usize,
    unparseable: usize,
    identity_renames: usize,
    no_swap_candidates: usize,
    api_selected: usize,
    api_rejected: usize,
}

impl From<AugmentStats> for MetaCounts {
    fn from(s: AugmentStats) -> Self {
        MetaCounts {
            originals: s.originals,
            variants: s.variants,
            unparseable: s.unparseable,
            identity_renames: s.identity_renames,
            no_swap_candidates: s.no_swap_candidates,
            api_selected: s.api_selected,
            api_rejected: s.api_rejected,
        }
    }
}

fn meta_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map_or_else(|| std::ffi::OsString::from("out"), |n| n.to_os_string());
    name.push(".meta.json");
    output.with_file_name(name)
}

fn cmd_augment(args: &AugmentArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("augment", argv);
    rec.seed(args.seed);
    rec.input_file(&args.corpus)?;

    let corpus = read_corpus(&args.corpus)?;
    let rename_order = parse_rename_order(&args.rename_order)?;
    let permute_policy = if args.all_variants {
        PermutePolicy::All
    } else {
        PermutePolicy::One
    };
    let catalog_text = match &args.catalog {
        Some(path) => {
            rec.input_file(path)?;
            io_at(std::fs::read_to_string(path), "reading catalog", path)?
        }
        None => String::from(ApiCatalog::default_jvm_text()),
    };
    let catalog_sha256 = sha256_hex(catalog_text.as_bytes());
    let catalog = ApiCatalog::parse(&catalog_text)?;

    let (perspective_name, examples, counts) = match parse_perspective(&args.perspective)? {
        PerspectiveArg::Original => {
            let examples = plain_pairs(&corpus, args.seed)?;
            let counts = MetaCounts {
                originals: corpus.len(),
                ..MetaCounts::default()
            };
            (String::from("original"), examples, counts)
        }
        PerspectiveArg::Transformed(perspective) => {
            let opts = AugmentOptions {
                rename_order,
                permute_policy,
                conservative: args.conservative,
                catalog,
            };
            let (dataset, stats) =
                build_perspective_dataset(&corpus, perspective, args.seed, &opts)?;
            (
                String::from(perspective.as_str()),
                dataset.examples,
                MetaCounts::from(stats),
            )
        }
    };

    write_dataset(&args.output, &examples, &perspective_name)?;
    let positives = examples.iter().filter(|e| e.label == 1).count();
    let meta = DatasetMeta {
        perspective: perspective_name.clone(),
        seed: args.seed,
        rename_order: args.rename_order.clone(),
        permute_policy: String::from(if args.all_variants { "all" } else { "one" }),
        conservative: args.conservative,
        catalog_sha256,
        examples: examples.len(),
        positives,
        counts,
    };
    let meta_file = meta_path(&args.output);
    io_at(
        std::fs::write(&meta_file, format!("{}\n", to_json_line(&meta)?)),
        "writing",
        &meta_file,
    )?;

    println!(
        "built {} dataset: {} examples ({} matched / {} mismatched) from {} entries -> {}",
        meta.perspective,
        examples.len(),
        positives,
        examples.len() - positives,
        corpus.len(),
        args.output.display()
    );

    rec.output_file(&args.output)?;
    rec.output_file(&meta_file)?;
    rec.sink(Sink::Beside(args.output.clone()));
    rec.emit()
}

fn cmd_train(args: &TrainArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("train", argv);
    rec.seed(args.seed);
    rec.input_file(&args.dataset)?;

    let (examples, perspective) = read_dataset(&args.dataset)?;
    let tag = args.tag.clone().unwrap_or(perspective);
    let pooling = Pooling::from_str(&args.pooling)?;
    let optimizer = Optimizer::from_str(&args.optimizer)?;
    let config = TrainConfig {
        dim: args.dim,
        pooling,
        max_len: args.max_len,
        min_frequency: args.min_frequency,
        learning_rate: args.learning_rate,
        optimizer,
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
    };

    let outcome = EncoderModel::train(&examples, &config, &tag, args.seed)?;
    let train = TrainSection {
        learning_rate: args.learning_rate,
        optimizer: String::from(optimizer.as_str()),
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
        min_frequency: Some(args.min_frequency),
    };
    let hash = save_encoder(&args.out_dir, &outcome.model, &outcome.loss_curve, &train)?;

    println!(
        "trained encoder '{}': dim {}, {} pooling, vocab {}, {} parameters, final loss {:.6} -> {}",
        outcome.model.tag,
        outcome.model.dim,
        outcome.model.pooling.as_str(),
        outcome.model.vocab.len(),
        outcome.model.parameter_count(),
        outcome.loss_curve.last().copied().unwrap_or(f64::NAN),
        args.out_dir.display()
    );

    rec.output_hash(&args.out_dir, &hash);
    rec.sink(Sink::Beside(args.out_dir.clone()));
    rec.emit()
}

/// Expresses `target` relative to `base` (both made absolute first) so
/// artifact manifests stay byte-identical across working directories that
/// share the same layout. Falls back to the absolute path if the two share
/// no usable prefix relation.
fn relative_to(base: &Path, target: &Path) -> PathBuf {
    let base_parts: Vec<_> = base.components().collect();
    let target_parts: Vec<_> = target.components().collect();
    let shared = base_parts
        .iter()
        .zip(&target_parts)
        .take_while(|(a, b)| a == b)
        .count();
    if shared == 0 {
        return target.to_path_buf();
    }
    let mut rel = PathBuf::new();
    for _ in shared..base_parts.len() {
        rel.push("..");
    }
    for part in &target_parts[shared..] {
        rel.push(part);
    }
    if rel.as_os_str().is_empty() {
        rel.push(".");
    }
    rel
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    if path.is_absolute() {
        return Ok(path.to_path_buf());
    }
    let cwd = io_at(std::env::current_dir(), "resolving", Path::new("."))?;
    Ok(normalize(&cwd.join(path)))
}

/// Removes `.` and folds `..` without touching the filesystem.
fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for part in path.components() {
        match part {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

fn cmd_train_ensemble(args: &TrainEnsembleArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("train-ensemble", argv);
    rec.seed(args.seed);
    rec.input_file(&args.dataset)?;

    let (examples, perspective) = read_dataset(&args.dataset)?;
    if perspective != "original" {
        return Err(CliError::contract(format!(
            "ensemble training expects the original-pairs dataset, got perspective '{perspective}'"
        )));
    }

    let mut members = Vec::with_capacity(args.members.len());
    let mut loaded_refs = Vec::with_capacity(args.members.len());
    for dir in &args.members {
        let (model, manifest, hash) = load_encoder(dir)?;
        rec.input_hash(dir, &hash);
        loaded_refs.push((dir.clone(), manifest, hash));
        members.push(model);
    }

    let optimizer = Optimizer::from_str(&args.optimizer)?;
    let config = EnsembleConfig {
        hidden: args.hidden,
        finetune_members: args.finetune_members,
        learning_rate: args.learning_rate,
        optimizer,
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
    };
    let outcome = EnsembleModel::train(members, &examples, &config, args.seed)?;

    io_at(
        std::fs::create_dir_all(&args.out_dir),
        "creating",
        &args.out_dir,
    )?;
    let out_abs = absolute(&args.out_dir)?;
    let mut member_refs = Vec::with_capacity(loaded_refs.len());
    if args.finetune_members {
        // The trained copies differ from the artifacts on disk; store them
        // inside the ensemble directory so the reference hashes hold.
        for (i, member) in outcome.model.members.iter().enumerate() {
            let (_, manifest, _) = &loaded_refs[i];
            let rel = format!("members/m{i}-{}", member.tag);
            let member_dir = args.out_dir.join(&rel);
            let hash = save_encoder(&member_dir, member, &[], &manifest.train)?;
            member_refs.push(MemberRef {
                tag: member.tag.clone(),
                path: rel,
                artifact_sha256: hash,
            });
        }
    } else {
        for (dir, manifest, hash) in &loaded_refs {
            let rel = relative_to(&out_abs, &absolute(dir)?);
            member_refs.push(MemberRef {
                tag: manifest.tag.clone(),
                path: rel.display().to_string(),
                artifact_sha256: hash.clone(),
            });
        }
    }

    let train = TrainSection {
        learning_rate: args.learning_rate,
        optimizer: String::from(optimizer.as_str()),
        batch_size: args.batch_size,
        epochs: args.epochs,
        clip_norm: args.clip_norm,
        min_frequency: None,
    };
    let hash = save_ensemble(
        &args.out_dir,
        &outcome.model,
        member_refs,
        &outcome.loss_curve,
        &train,
    )?;

    println!(
        "trained ensemble of {} {} members: input dim {}, hidden {}, final loss {:.6} -> {}",
        outcome.model.members.len(),
        if outcome.model.finetuned {
            "fine-tuned"
        } else {
            "frozen"
        },
        outcome.model.input_dim(),
        outcome.model.hidden_dim,
        outcome.loss_curve.last().copied().unwrap_or(f64::NAN),
        args.out_dir.display()
    );

    rec.output_hash(&args.out_dir, &hash);
    rec.sink(Sink::Beside(args.out_dir.clone()));
    rec.emit()
}

fn cmd_eval(args: &EvalArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("eval", argv);
    rec.seed(args.seed);
    rec.input_file(&args.corpus)?;

    let (model, model_hash) = load_any(&args.model)?;
    rec.input_hash(&args.model, &model_hash);
    let corpus = read_corpus(&args.corpus)?;

    if args.ks.is_empty() {
        return Err(CliError::contract("--ks needs at least one cutoff"));
    }
    if args.ks.iter().any(|&k| k == 0) {
        return Err(CliError::contract("success-rate cutoffs must be at least 1"));
    }
    let distractors = if args.exhaustive {
        corpus.len().saturating_sub(1)
    } else {
        args.distractors
    };

    let report = evaluate(&model, &corpus, distractors, &args.ks, args.seed)?;
    let rendered = render_report(&report)?;
    io_at(std::fs::write(&args.output, &rendered), "writing", &args.output)?;

    println!(
        "evaluated {} queries against {} distractors each (seed {})",
        report.query_count, report.distractors, report.seed
    );
    for (k, rate) in &report.success_rate {
        println!("  success@{k:<4} {rate:.3}");
    }
    println!("  mrr        {:.3}", report.mrr);
    // Machine-readable summary: the report file's first line.
    let summary = rendered.lines().next().unwrap_or("{}");
    println!("{summary}");

    rec.output_file(&args.output)?;
    rec.sink(Sink::Beside(args.output.clone()));
    rec.emit()
}

/// Scores every corpus entry for a query and prints the best `top`,
/// best first; ties break by id so output never depends on file order.
fn print_ranking<S: PairScorer, W: std::io::Write>(
    out: &mut W,
    scorer: &S,
    corpus: &Corpus,
    query: &str,
    top: usize,
) -> Result<(), CliError> {
    let mut scored: Vec<(f64, &str, &str)> = corpus
        .entries()
        .iter()
        .map(|e| (scorer.score(query, &e.code), e.id.as_str(), e.code.as_str()))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    for (rank, (score, id, code)) in scored.iter().take(top).enumerate() {
        writeln!(out, "{:>3}. {score:.4}  {id}", rank + 1)
            .map_err(|e| CliError::io(format!("writing ranking: {e}")))?;
        for line in code.lines() {
            writeln!(out, "     {line}")
                .map_err(|e| CliError::io(format!("writing ranking: {e}")))?;
        }
    }
    Ok(())
}

fn cmd_search(args: &SearchArgs, argv: &[String]) -> Result<(), CliError> {
    let mut rec = RunRecorder::new("search", argv);
    rec.input_file(&args.corpus)?;

    let (model, model_hash) = load_any(&args.model)?;
    rec.input_hash(&args.model, &model_hash);
    let corpus = read_corpus(&args.corpus)?;
    if args.top == 0 {
        return Err(CliError::contract("--top must be at least 1"));
    }

    let stdout = std::io::stdout();
    match &args.query {
        Some(query) => {
            print_ranking(&mut stdout.lock(), &model, &corpus, query, args.top)?;
        }
        None => {
            let stdin = std::io::stdin();
            let mut lines = stdin.lock().lines();
            loop {
                eprint!("query> ");
                let _ = std::io::stderr().flush();
                let Some(line) = lines.next() else {
                    eprintln!();
                    break;
                };
                let line = line.map_err(|e| CliError::io(format!("reading stdin: {e}")))?;
                let query = line.trim();
                if query.is_empty() {
                    continue;
                }
                print_ranking(&mut stdout.lock(), &model, &corpus, query, args.top)?;
            }
        }
    }

    rec.sink(Sink::Stderr);
    rec.emit()
}
