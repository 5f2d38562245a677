use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use dins::eval::{build_for_split, evaluate, LoopEval, ScoreSource};
use dins::io::{self, EdgeReadOptions, ScoreRecord};
use dins::pipeline::{read_split, render_report, run_experiment, training_records, write_split, ReportFormat, Summary};
use dins::pipeline::{PipelineConfig, WindowSchedule};
use dins::sampling::LoopPool;
use dins::scorers::{ScorerKind, ScorerSpec};
use dins::split::{make_split, monthly_schedule, window_pairs, WindowSpec};
use dins::stats::stats;
use dins::{DynamicGraph, HistoryIndex, SamplerConfig, Strategy};

#[derive(Parser)]
#[command(
    name = "dins",
    version,
    about = "Negative sampling and per-category link-prediction evaluation for dynamic graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read an edge CSV/TSV and write a binary graph cache.
    Ingest(IngestArgs),
    /// Print descriptive statistics of a graph as JSON.
    Stats(GraphArgs),
    /// Write train/val/test directories for each pair of consecutive windows.
    Split(SplitArgs),
    /// Draw training samples with one strategy as JSON-lines.
    Sample(SampleArgs),
    /// Score a sample file with a built-in scorer.
    Score(ScoreArgs),
    /// Build the evaluation samples of a split and report AUC per category.
    Evaluate(EvaluateArgs),
    /// Run the full pipeline described by a config file.
    Run(RunArgs),
    /// Render the summary of a run.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestOptions {
    /// Field separator; defaults to tab for .tsv files and comma otherwise.
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long, default_value = "src")]
    src_column: String,
    #[arg(long, default_value = "dst")]
    dst_column: String,
    #[arg(long, default_value = "timestamp")]
    time_column: String,
    /// Remove every edge touching this node name. Repeatable.
    #[arg(long = "drop-user", value_name = "NAME")]
    drop_users: Vec<String>,
    /// File of node names to remove, one per line.
    #[arg(long, value_name = "PATH")]
    drop_users_file: Option<PathBuf>,
    /// Drop calendar months (UTC) with fewer edges than this.
    #[arg(long)]
    min_month_edges: Option<usize>,
    /// Width of a time bin in seconds.
    #[arg(long, default_value_t = dins::graph::DEFAULT_BIN_WIDTH_SECONDS)]
    bin_width: u64,
}

impl IngestOptions {
    fn read_options(&self) -> Result<EdgeReadOptions> {
        let delimiter = match self.delimiter {
            Some(c) if c.is_ascii() => Some(c as u8),
            Some(c) => bail!(dins::Error::InvalidArgument(format!("delimiter {c:?} is not ASCII"))),
            None => None,
        };
        let mut drop_users = self.drop_users.clone();
        if let Some(path) = &self.drop_users_file {
            let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            drop_users.extend(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
        }
        Ok(EdgeReadOptions {
            delimiter,
            src_column: self.src_column.clone(),
            dst_column: self.dst_column.clone(),
            time_column: self.time_column.clone(),
            drop_users,
            min_month_edges: self.min_month_edges,
        })
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Edge CSV/TSV, graph cache, or split directory (its training edges).
    graph: PathBuf,
    #[command(flatten)]
    ingest: IngestOptions,
}

impl GraphArgs {
    fn load(&self) -> Result<DynamicGraph> {
        let path = &self.graph;
        if path.is_dir() {
            return Ok(read_split(path)
                .with_context(|| format!("reading split {}", path.display()))?
                .train);
        }
        let options = self.ingest.read_options()?;
        Ok(io::load_graph(path, &options, self.ingest.bin_width)?)
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Edge CSV/TSV (or an existing cache, which is rewritten unchanged).
    input: PathBuf,
    #[command(flatten)]
    ingest: IngestOptions,
    /// Cache path; defaults to `<cache dir>/<input stem>.dinsg`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for caches when `--out` is not given; defaults to the input's directory.
    #[arg(long, env = "DINS_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Output directory; one subdirectory per split.
    #[arg(long)]
    out: PathBuf,
    /// `monthly`, or a JSON file listing `{"label", "start", "end"}` windows.
    #[arg(long, default_value = "monthly")]
    windows: String,
    #[arg(long, default_value_t = 0.5)]
    val_fraction: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    strategy: Strategy,
    /// Temporal negatives per positive.
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// Temporal window in bins.
    #[arg(long = "tf", default_value_t = 288)]
    t_f: u64,
    #[arg(long, default_value_t = 1000)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rejection attempts per node draw before scanning for admissible nodes.
    #[arg(long, default_value_t = 32)]
    retry_cap: usize,
    /// `batch` or `per-t`.
    #[arg(long, default_value = "batch")]
    loop_pool: LoopPool,
    /// JSON-lines output.
    #[arg(long)]
    out: PathBuf,
    /// Node id mapping; defaults to `nodes.csv` next to `--out`.
    #[arg(long)]
    nodes: Option<PathBuf>,
}

#[derive(Args)]
struct ScorerArgs {
    /// `memory`, `recency`, `constant` or `random`.
    #[arg(long, default_value = "memory")]
    scorer: ScorerKind,
    /// Recency decay per bin.
    #[arg(long)]
    lambda: Option<f64>,
}

impl ScorerArgs {
    fn spec(&self, seed: u64) -> ScorerSpec {
        let mut spec = ScorerSpec::new(self.scorer);
        if let Some(lambda) = self.lambda {
            spec.lambda = lambda;
        }
        spec.seed = seed;
        spec
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// History the scorer reads, in the id space of the samples.
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON-lines samples to score.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Split directory written by `split` or `run`.
    split: PathBuf,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Imported `{"key", "score"}` JSON-lines; replaces the built-in scorer.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    retry_cap: usize,
    /// `per-positive` or `per-timestamp`.
    #[arg(long, default_value = "per-positive")]
    loop_eval: LoopEval,
    /// Strategy name recorded in the report.
    #[arg(long)]
    strategy: Option<String>,
    /// Evaluation samples; defaults to `eval_samples.jsonl` in the split directory.
    #[arg(long)]
    samples_out: Option<PathBuf>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON pipeline config; unset fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's imported score directory.
    #[arg(long)]
    scores_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory or its `summary.json`.
    run: PathBuf,
    /// `json`, `csv` or `plotdata`.
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let (graph, outcome) = if io::is_graph_cache(&args.input)? {
        (io::read_graph_cache(&args.input)?, None)
    } else {
        let outcome = io::read_edges(&args.input, &args.ingest.read_options()?)?;
        (
            dins::build_graph(&outcome.records, args.ingest.bin_width)?,
            Some(outcome),
        )
    };
    let out = match &args.out {
        Some(p) => p.clone(),
        None => {
            let stem = args.input.file_stem().context("input has no file name")?;
            let dir = match &args.cache_dir {
                Some(d) => d.clone(),
                None => args.input.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            dir.join(stem).with_extension("dinsg")
        }
    };
    io::write_graph_cache(&out, &graph)?;
    log::info!("wrote {} edges to {}", graph.edge_count(), out.display());
    print_json(&json!({
        "cache": out,
        "n": graph.node_count(),
        "m": graph.edge_count(),
        "bin_width_seconds": graph.bin_width(),
        "dropped_by_user": outcome.as_ref().map_or(0, |o| o.dropped_by_user),
        "dropped_months": outcome.as_ref().map(|o| o.dropped_months.clone()).unwrap_or_default(),
        "dropped_by_month": outcome.as_ref().map_or(0, |o| o.dropped_by_month),
    }))
}

fn parse_windows(spec: &str) -> Result<WindowSchedule> {
    if spec == "monthly" {
        return Ok(WindowSchedule::Monthly);
    }
    let windows: Vec<WindowSpec> =
        io::read_json(Path::new(spec)).with_context(|| format!("reading windows from {spec}"))?;
    Ok(WindowSchedule::Custom(windows))
}

fn split(args: &SplitArgs) -> Result<()> {
    let graph = args.graph.load()?;
    let custom = match parse_windows(&args.windows)? {
        WindowSchedule::Monthly => None,
        WindowSchedule::Custom(w) => Some(w),
    };
    let schedule = monthly_schedule(&graph, custom.as_deref())?;
    let mut metas = Vec::new();
    for (train, eval) in window_pairs(&schedule) {
        let split = make_split(&graph, &train, &eval, args.val_fraction)?;
        write_split(&args.out.join(&split.label), &split)?;
        metas.push(split.meta());
    }
    print_json(&metas)
}

fn sample(args: &SampleArgs) -> Result<()> {
    let graph = args.graph.load()?;
    let config = SamplerConfig {
        q: args.q,
        t_f: args.t_f,
        batch_size: args.batch_size,
        seed: args.seed,
        retry_cap: args.retry_cap,
        loop_pool: args.loop_pool,
    };
    let (records, summary) = training_records(&graph, config, args.strategy)?;
    io::write_sample_records(&args.out, &records)?;
    let nodes = match &args.nodes {
        Some(p) => p.clone(),
        None => args.out.with_file_name("nodes.csv"),
    };
    io::write_nodes(&nodes, graph.nodes())?;
    print_json(&json!({ "strategy": args.strategy, "config": config, "summary": summary }))
}

fn score(args: &ScoreArgs) -> Result<()> {
    let graph = args.graph.load()?;
    let index = HistoryIndex::build(&graph);
    let scorer = args.scorer.spec(args.seed).bind(&index)?;
    let records = io::read_sample_records(&args.samples)?;
    let n = graph.node_count();
    let mut scores = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if r.src.index() >= n || r.dst.index() >= n {
            bail!(dins::Error::Ingest {
                line: i + 1,
                message: format!("node id outside the history graph's {n} nodes"),
            });
        }
        scores.push(ScoreRecord {
            key: r.key.clone(),
            score: scorer.score(&r.sample()),
        });
    }
    io::write_scores(&args.out, &scores)?;
    print_json(&json!({ "scorer": scorer.spec(), "scored": scores.len(), "out": args.out }))
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let split = read_split(&args.split).with_context(|| format!("reading split {}", args.split.display()))?;
    let full_index = HistoryIndex::build(&split.graph);
    let eval_config = dins::eval::EvalConfig {
        seed: args.seed,
        retry_cap: args.retry_cap,
        loop_eval: args.loop_eval,
    };
    let sets = build_for_split(&split, &full_index, eval_config)?;
    let records: Vec<_> = sets
        .iter_tagged()
        .map(|(c, s)| io::SampleRecord::new(s, 0, c))
        .collect();
    let samples_out = args
        .samples_out
        .clone()
        .unwrap_or_else(|| args.split.join("eval_samples.jsonl"));
    io::write_sample_records(&samples_out, &records)?;

    let strategy = args.strategy.as_deref();
    let report = match &args.scores {
        Some(path) => {
            let map = io::read_scores_map(path)?;
            evaluate(&sets, ScoreSource::Imported(&map), &split.label, strategy, args.seed)?
        }
        None => {
            let train_index = HistoryIndex::build(&split.train);
            let scorer = args.scorer.spec(args.seed).bind(&train_index)?;
            evaluate(&sets, ScoreSource::Builtin(scorer), &split.label, strategy, args.seed)?
        }
    };
    match &args.out {
        Some(out) => io::write_json(out, &report)?,
        None => print_json(&report)?,
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let mut config: PipelineConfig = match &args.config {
        Some(path) => io::read_json(path).with_context(|| format!("reading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(dataset) = &args.dataset {
        config.dataset = dataset.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.scores_dir {
        config.scores_dir = Some(dir.clone());
    }
    if config.dataset.as_os_str().is_empty() {
        bail!(dins::Error::InvalidArgument(
            "no dataset: set it in the config or pass --dataset".into()
        ));
    }
    let summary = run_experiment(&config, &args.out)?;
    let failed: Vec<_> = summary
        .splits
        .iter()
        .filter_map(|s| s.error.as_ref().map(|e| json!({ "split": s.label, "error": e })))
        .collect();
    print_json(&json!({ "out": args.out, "splits": summary.splits.len(), "failed": failed }))
}

fn report(args: &ReportArgs) -> Result<()> {
    let path = if args.run.is_dir() {
        args.run.join("summary.json")
    } else {
        args.run.clone()
    };
    let summary: Summary = io::read_json(&path).with_context(|| format!("reading {}", path.display()))?;
    print!("{}", render_report(&summary, args.format)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Stats(a) => print_json(&stats(&a.load()?)),
        Command::Split(a) => split(a),
        Command::Sample(a) => sample(a),
        Command::Score(a) => score(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    }
}

fn fail(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message.trim_end() }));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            fail("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<dins::Error>())
                .map_or("error", dins::Error::kind);
            fail(kind, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
