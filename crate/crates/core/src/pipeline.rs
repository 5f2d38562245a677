//! End-to-end experiment runner: split, sample, score, evaluate, summarise.
//!
//! Output layout under the run directory:
//!
//! ```text
//! config.json
//! summary.json
//! <split>/split_meta.json nodes.csv train.csv val.csv test.csv
//! <split>/samples/<strategy>.jsonl
//! <split>/eval_samples.jsonl
//! <split>/scores/<scorer>.jsonl          built-in scorer only
//! <split>/reports/<strategy>.json
//! ```
//!
//! Imported scores are read from `<scores_dir>/<split>/<strategy>.jsonl`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{build_for_split, evaluate, EvalCategory, EvalConfig, EvalReport, LoopEval, ScoreSource};
use crate::graph::{DynamicGraph, DEFAULT_BIN_WIDTH_SECONDS};
use crate::index::HistoryIndex;
use crate::io::{self, EdgeReadOptions, SampleRecord, ScoreRecord};
use crate::sampling::{Category, LoopPool, Sample, Sampler, SamplerConfig, Strategy, Tally};
use crate::scorers::ScorerSpec;
use crate::split::{make_split, monthly_schedule, window_pairs, MonthlySplit, SplitMeta, WindowSpec};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSchedule {
    /// UTC calendar months.
    #[default]
    Monthly,
    /// Explicit windows; calendar months they overlap are replaced.
    Custom(Vec<WindowSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub ingest: EdgeReadOptions,
    pub bin_width_seconds: u64,
    pub batch_size: usize,
    pub q: usize,
    pub t_f: u64,
    pub seed: u64,
    pub retry_cap: usize,
    pub windows: WindowSchedule,
    pub val_fraction: f64,
    pub loop_pool: LoopPool,
    pub loop_eval: LoopEval,
    pub strategies: Vec<Strategy>,
    pub scorer: ScorerSpec,
    /// Score files from an external model; replaces the built-in scorer.
    pub scores_dir: Option<PathBuf>,
    /// Write training samples; evaluation samples are always written.
    pub write_samples: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: PathBuf::new(),
            ingest: EdgeReadOptions::default(),
            bin_width_seconds: DEFAULT_BIN_WIDTH_SECONDS,
            batch_size: 1000,
            q: 5,
            t_f: 288,
            seed: 0,
            retry_cap: 32,
            windows: WindowSchedule::Monthly,
            val_fraction: 0.5,
            loop_pool: LoopPool::Batch,
            loop_eval: LoopEval::PerPositive,
            strategies: vec![Strategy::Random, Strategy::Historical, Strategy::Dins],
            scorer: ScorerSpec::default(),
            scores_dir: None,
            write_samples: true,
        }
    }
}

impl PipelineConfig {
    pub fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            q: self.q,
            t_f: self.t_f,
            batch_size: self.batch_size,
            seed: self.seed,
            retry_cap: self.retry_cap,
            loop_pool: self.loop_pool,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed,
            retry_cap: self.retry_cap,
            loop_eval: self.loop_eval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler_config().validate()?;
        self.scorer.validate()?;
        if self.bin_width_seconds == 0 {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction {} outside [0, 1]",
                self.val_fraction
            )));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidArgument("no strategies selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub positives: usize,
    pub samples: usize,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitError {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for SplitError {
    fn from(e: &Error) -> Self {
        SplitError {
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub label: String,
    pub meta: Option<SplitMeta>,
    pub training: BTreeMap<String, TrainingSummary>,
    pub reports: Vec<EvalReport>,
    pub error: Option<SplitError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: PipelineConfig,
    pub splits: Vec<SplitSummary>,
    /// Per category, each strategy's AUC rank averaged over splits
    /// (1 is best, ties share the mean rank).
    pub ranks: BTreeMap<EvalCategory, BTreeMap<String, f64>>,
}

impl Summary {
    /// `split -> strategy -> AUC` for one category, skipping undefined values.
    pub fn auc_table(&self, category: EvalCategory) -> Vec<(String, BTreeMap<String, f64>)> {
        self.splits
            .iter()
            .map(|s| {
                let row = s
                    .reports
                    .iter()
                    .filter_map(|r| Some((r.strategy.clone()?, r.auc(category)?)))
                    .collect();
                (s.label.clone(), row)
            })
            .collect()
    }
}

/// Ranks within each row (higher AUC is better, ties share the mean rank)
/// averaged per column over the rows in which the column appears.
pub fn average_ranks<'a>(rows: impl IntoIterator<Item = &'a BTreeMap<String, f64>>) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for row in rows {
        let mut entries: Vec<(&String, f64)> = row.iter().map(|(k, &v)| (k, v)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut i = 0;
        while i < entries.len() {
            let mut j = i;
            while j + 1 < entries.len() && entries[j + 1].1 == entries[i].1 {
                j += 1;
            }
            // positions i..=j share ranks i+1..=j+1
            let rank = (i + j) as f64 / 2.0 + 1.0;
            for (name, _) in &entries[i..=j] {
                let slot = sums.entry((*name).clone()).or_default();
                slot.0 += rank;
                slot.1 += 1;
            }
            i = j + 1;
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn rank_summary(splits: &[SplitSummary], config: &PipelineConfig) -> BTreeMap<EvalCategory, BTreeMap<String, f64>> {
    let probe = Summary {
        config: config.clone(),
        splits: splits.to_vec(),
        ranks: BTreeMap::new(),
    };
    EvalCategory::ALL
        .into_iter()
        .map(|c| {
            let table = probe.auc_table(c);
            (c, average_ranks(table.iter().map(|(_, row)| row)))
        })
        .collect()
}

/// Writes `train.csv`, `val.csv`, `test.csv`, `nodes.csv` and
/// `split_meta.json` into `dir`.
pub fn write_split(dir: &Path, split: &MonthlySplit) -> Result<()> {
    let g = &split.graph;
    let (t, v) = (split.n_train, split.n_train + split.n_validation);
    io::write_edges(&dir.join("train.csv"), &g.records_in(0..t))?;
    io::write_edges(&dir.join("val.csv"), &g.records_in(t..v))?;
    io::write_edges(&dir.join("test.csv"), &g.records_in(v..g.edge_count()))?;
    io::write_nodes(&dir.join("nodes.csv"), g.nodes())?;
    io::write_json(&dir.join("split_meta.json"), &split.meta())
}

/// Rebuilds a split from a directory written by [`write_split`].
pub fn read_split(dir: &Path) -> Result<MonthlySplit> {
    let meta: SplitMeta = io::read_json(&dir.join("split_meta.json"))?;
    let nodes = io::read_nodes(&dir.join("nodes.csv"))?;
    let options = EdgeReadOptions::default();
    let mut records = Vec::new();
    for (file, expected) in [
        ("train.csv", meta.n_train),
        ("val.csv", meta.n_validation),
        ("test.csv", meta.n_test),
    ] {
        let part = io::read_edges(&dir.join(file), &options)?.records;
        if part.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{file} has {} edges, split_meta.json records {expected}",
                part.len()
            )));
        }
        records.extend(part);
    }
    let graph = DynamicGraph::from_records(nodes, &records, meta.bin_width_seconds, meta.origin)?;
    Ok(MonthlySplit {
        label: meta.label,
        train_window: meta.train_window,
        eval_window: meta.eval_window,
        train: graph.truncated(meta.n_train),
        graph,
        n_train: meta.n_train,
        n_validation: meta.n_validation,
        n_test: meta.n_test,
        dropped_count: meta.dropped_count,
    })
}

/// Training stream of one strategy: each batch's observed edges followed
/// by the samples drawn for it.
pub fn training_records(
    graph: &DynamicGraph,
    config: SamplerConfig,
    strategy: Strategy,
) -> Result<(Vec<SampleRecord>, TrainingSummary)> {
    let index = HistoryIndex::build(graph);
    let sampler = Sampler::new(graph, &index, config)?;
    let sets = sampler.sample_all(strategy)?;
    let mut tally = Tally::default();
    let mut records = Vec::new();
    let mut samples = 0;
    for (set, batch) in sets.iter().zip(graph.edges().chunks(config.batch_size)) {
        tally.merge(&set.tally);
        samples += set.len();
        records.extend(
            batch
                .iter()
                .map(|e| SampleRecord::new(&Sample::positive(e, Category::Observed), set.origin_batch, None)),
        );
        records.extend(set.samples.iter().map(|s| SampleRecord::new(s, set.origin_batch, None)));
    }
    let summary = TrainingSummary {
        positives: graph.edge_count(),
        samples,
        tally,
    };
    Ok((records, summary))
}

fn run_split(out: &Path, split: &MonthlySplit, config: &PipelineConfig, summary: &mut SplitSummary) -> Result<()> {
    let dir = out.join(&split.label);
    write_split(&dir, split)?;

    for &strategy in &config.strategies {
        let (records, ts) = training_records(&split.train, config.sampler_config(), strategy)?;
        if config.write_samples {
            io::write_sample_records(&dir.join("samples").join(format!("{strategy}.jsonl")), &records)?;
        }
        summary.training.insert(strategy.to_string(), ts);
    }

    let full_index = HistoryIndex::build(&split.graph);
    let sets = build_for_split(split, &full_index, config.eval_config())?;
    let eval_records: Vec<SampleRecord> = sets.iter_tagged().map(|(c, s)| SampleRecord::new(s, 0, c)).collect();
    io::write_sample_records(&dir.join("eval_samples.jsonl"), &eval_records)?;

    let train_index = HistoryIndex::build(&split.train);
    for &strategy in &config.strategies {
        let report = match &config.scores_dir {
            Some(scores) => {
                let path = scores.join(&split.label).join(format!("{strategy}.jsonl"));
                let map: HashMap<String, f64> = io::read_scores_map(&path)?;
                evaluate(
                    &sets,
                    ScoreSource::Imported(&map),
                    &split.label,
                    Some(strategy.as_str()),
                    config.seed,
                )?
            }
            None => {
                let scorer = config.scorer.bind(&train_index)?;
                evaluate(
                    &sets,
                    ScoreSource::Builtin(scorer),
                    &split.label,
                    Some(strategy.as_str()),
                    config.seed,
                )?
            }
        };
        io::write_json(&dir.join("reports").join(format!("{strategy}.json")), &report)?;
        summary.reports.push(report);
    }

    if config.scores_dir.is_none() {
        let scorer = config.scorer.bind(&train_index)?;
        let scores: Vec<ScoreRecord> = eval_records
            .iter()
            .map(|r| ScoreRecord {
                key: r.key.clone(),
                score: scorer.score(&r.sample()),
            })
            .collect();
        io::write_scores(
            &dir.join("scores").join(format!("{}.jsonl", config.scorer.kind)),
            &scores,
        )?;
    }
    Ok(())
}

/// Runs every split of `graph` concurrently. A failing split is recorded in
/// the summary and does not stop the others.
pub fn run_on_graph(graph: &DynamicGraph, config: &PipelineConfig, out: &Path) -> Result<Summary> {
    config.validate()?;
    let custom = match &config.windows {
        WindowSchedule::Monthly => None,
        WindowSchedule::Custom(w) => Some(w.as_slice()),
    };
    let schedule = monthly_schedule(graph, custom)?;
    let pairs = window_pairs(&schedule);
    io::write_json(&out.join("config.json"), config)?;

    let splits: Vec<SplitSummary> = pairs
        .par_iter()
        .map(|(train, eval)| {
            let mut summary = SplitSummary {
                label: train.label.clone(),
                meta: None,
                training: BTreeMap::new(),
                reports: Vec::new(),
                error: None,
            };
            let result = make_split(graph, train, eval, config.val_fraction).and_then(|split| {
                summary.meta = Some(split.meta());
                run_split(out, &split, config, &mut summary)
            });
            if let Err(e) = result {
                log::warn!("split {}: {e}", train.label);
                summary.error = Some(SplitError::from(&e));
            }
            summary
        })
        .collect();

    let summary = Summary {
        ranks: rank_summary(&splits, config),
        config: config.clone(),
        splits,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Loads `config.dataset` and runs [`run_on_graph`].
pub fn run_experiment(config: &PipelineConfig, out: &Path) -> Result<Summary> {
    config.validate()?;
    let graph = io::load_graph(&config.dataset, &config.ingest, config.bin_width_seconds)?;
    run_on_graph(&graph, config, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Plotdata,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plotdata" => Ok(ReportFormat::Plotdata),
            _ => Err(Error::InvalidArgument(format!("unknown report format {s:?}"))),
        }
    }
}

fn fmt_auc(v: Option<f64>) -> String {
    v.map_or_else(String::new, |a| format!("{a:.6}"))
}

/// Renders a summary. `csv` has one row per split, strategy and category;
/// `plotdata` has one row per split and category with a column per strategy.
pub fn render_report(summary: &Summary, format: ReportFormat) -> Result<String> {
    let mut s = String::new();
    match format {
        ReportFormat::Json => {
            s = serde_json::to_string_pretty(summary)?;
            s.push('\n');
        }
        ReportFormat::Csv => {
            s.push_str("split,strategy,scorer,category,auc,n_pos,n_neg,shortfall\n");
            for split in &summary.splits {
                for r in &split.reports {
                    for c in &r.categories {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{},{},{}",
                            split.label,
                            r.strategy.as_deref().unwrap_or(""),
                            r.scorer,
                            c.category,
                            fmt_auc(c.auc),
                            c.n_pos,
                            c.n_neg,
                            c.shortfall
                        );
                    }
                }
            }
        }
        ReportFormat::Plotdata => {
            let strategies: Vec<String> = summary.config.strategies.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "split\tcategory\t{}", strategies.join("\t"));
            for split in &summary.splits {
                for category in EvalCategory::ALL {
                    let cells: Vec<String> = strategies
                        .iter()
                        .map(|st| {
                            let r = split
                                .reports
                                .iter()
                                .find(|r| r.strategy.as_deref() == Some(st.as_str()));
                            fmt_auc(r.and_then(|r| r.auc(category)))
                        })
                        .collect();
                    let _ = writeln!(s, "{}\t{}\t{}", split.label, category, cells.join("\t"));
                }
            }
        }
    }
    Ok(s)
}
