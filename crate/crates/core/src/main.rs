use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nudge::io::{read_embeddings, read_labels, write_embeddings, write_labels};
use nudge::split::split;
use nudge::{finetune, metrics, FinetuneOptions, IterativeConfig, Method, QuerySet, DEFAULT_GRID_POINTS};

#[derive(Parser)]
#[command(name = "nudge", version, about = "Non-parametric fine-tuning of embeddings for k-NN retrieval")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "NUDGE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fine-tune data embeddings and write the result plus a JSON report.
    Finetune(FinetuneArgs),
    /// Recall@k and NDCG@k of a query set against embeddings.
    Eval(EvalArgs),
    /// Seeded split of a labeled query set.
    Split(SplitArgs),
    /// L2-normalize every row.
    Normalize(NormalizeArgs),
}

#[derive(Args)]
struct FinetuneArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    train_queries: PathBuf,
    #[arg(long)]
    train_labels: PathBuf,
    #[arg(long)]
    val_queries: PathBuf,
    #[arg(long)]
    val_labels: PathBuf,
    /// m, n, n-exact, im or in.
    #[arg(long)]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    checkpoint_every: usize,
    /// Weight each training query by its label relevance.
    #[arg(long)]
    weighted_labels: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    k: usize,
    /// Comma-separated subset of recall, ndcg.
    #[arg(long, value_delimiter = ',', default_value = "recall,ndcg")]
    metrics: Vec<String>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Three comma-separated fractions: train, val, test.
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.1,0.2")]
    fractions: Vec<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_prefix: String,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn iterative_config(args: &FinetuneArgs) -> anyhow::Result<Option<IterativeConfig>> {
    if !matches!(args.method, Method::Im | Method::In) {
        return Ok(None);
    }
    let Some(alpha) = args.alpha else {
        bail!("--alpha is required for --method {}", args.method);
    };
    let Some(iters) = args.iters else {
        bail!("--iters is required for --method {}", args.method);
    };
    if !(alpha.is_finite() && alpha > 0.0) {
        bail!("--alpha must be positive, got {alpha}");
    }
    if iters == 0 {
        bail!("--iters must be at least 1");
    }
    if args.checkpoint_every == 0 {
        bail!("--checkpoint-every must be at least 1");
    }
    Ok(Some(IterativeConfig::new(alpha, iters, args.checkpoint_every)?))
}

fn run_finetune(args: FinetuneArgs) -> anyhow::Result<()> {
    if args.method == Method::N && args.grid_points < 2 {
        bail!("--grid-points must be at least 2, got {}", args.grid_points);
    }
    let iterative = iterative_config(&args)?;
    let (data, dtype) = read_embeddings(&args.embeddings)?;
    let (train_q, _) = read_embeddings(&args.train_queries)?;
    let train_l = read_labels(&args.train_labels)?;
    let (val_q, _) = read_embeddings(&args.val_queries)?;
    let val_l = read_labels(&args.val_labels)?;

    let opts = FinetuneOptions {
        method: args.method,
        weighted_labels: args.weighted_labels,
        grid_points: args.grid_points,
        iterative,
    };
    let (out, report) = finetune(
        &data,
        QuerySet::new(&train_q, &train_l),
        QuerySet::new(&val_q, &val_l),
        &opts,
    )?;
    write_embeddings(&args.out, &out, dtype)?;
    write_text(&args.report, &(report.to_json() + "\n"))
}

fn run_eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut want_recall = false;
    let mut want_ndcg = false;
    for m in &args.metrics {
        match m.trim() {
            "recall" => want_recall = true,
            "ndcg" => want_ndcg = true,
            other => bail!("--metrics: unknown metric {other:?} (expected recall or ndcg)"),
        }
    }
    let (data, _) = read_embeddings(&args.embeddings)?;
    let (queries, _) = read_embeddings(&args.queries)?;
    let labels = read_labels(&args.labels)?;
    if args.k == 0 || args.k > data.rows() {
        bail!("--k must be in [1, {}], got {}", data.rows(), args.k);
    }
    let r = metrics(&queries, &labels, &data, args.k)?;

    let mut out = serde_json::Map::new();
    out.insert("k".into(), json!(r.k));
    out.insert("queries".into(), json!(r.query_count));
    if want_recall {
        out.insert("recall_at_k".into(), json!(r.recall_at_k));
        out.insert("recall_at_1".into(), json!(r.recall_at_1));
        out.insert("recall_denominator".into(), json!("min(k, relevant)"));
    }
    if want_ndcg {
        out.insert("ndcg_at_k".into(), json!(r.ndcg_at_k));
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run_split(args: SplitArgs) -> anyhow::Result<()> {
    if args.fractions.len() != 3 {
        bail!("--fractions needs exactly three values (train,val,test), got {}", args.fractions.len());
    }
    let (queries, dtype) = read_embeddings(&args.queries)?;
    let labels = read_labels(&args.labels)?;
    let parts = split(&queries, &labels, &args.fractions, args.seed)?;
    for (name, part) in ["train", "val", "test"].iter().zip(&parts) {
        let emb = format!("{}.{name}.emb", args.out_prefix);
        let lab = format!("{}.{name}.labels", args.out_prefix);
        write_embeddings(&emb, &part.queries, dtype)?;
        write_labels(&lab, &part.labels)?;
    }
    Ok(())
}

fn run_normalize(args: NormalizeArgs) -> anyhow::Result<()> {
    let (m, dtype) = read_embeddings(&args.input)?;
    write_embeddings(&args.out, &m.normalized()?, dtype)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("{}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("--threads")?;
    }
    match cli.command {
        Command::Finetune(a) => run_finetune(a),
        Command::Eval(a) => run_eval(a),
        Command::Split(a) => run_split(a),
        Command::Normalize(a) => run_normalize(a),
    }
}

/// Collapses clap's multi-line usage errors into a single diagnostic line.
fn one_line(err: &clap::Error) -> String {
    err.to_string()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
