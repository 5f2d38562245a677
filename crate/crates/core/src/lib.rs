//! Negative sampling and evaluation for continuous-time dynamic graphs.
//!
//! The crate covers the whole desk-scale workflow around dynamic link
//! prediction on interaction networks:
//!
//! * [`graph`] and [`index`]: an immutable, time-sorted edge store with the
//!   history queries samplers need.
//! * [`sampling`]: random and historical baselines, random sender/receiver,
//!   temporal and negative-loop sampling, positive enhancement and their
//!   combination (DINS).
//! * [`split`]: monthly (or custom) chronological train/eval windows with
//!   transductive filtering.
//! * [`eval`] and [`scorers`]: seven evaluation categories, heuristic
//!   scorers and tie-aware AUC.
//! * [`io`] and [`pipeline`]: file formats and the end-to-end experiment
//!   driver used by the `dins` CLI.

pub mod error;
pub mod eval;
pub mod graph;
pub mod index;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod scorers;
pub mod split;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use eval::{evaluate, EvalCategory, EvalReport};
pub use graph::{build_graph, Batch, DynamicGraph, Edge, NodeId, RawEdge, Timestamp};
pub use index::HistoryIndex;
pub use pipeline::{run_experiment, PipelineConfig};
pub use sampling::{Category, Label, Sample, SampleSet, Sampler, SamplerConfig, Strategy};
pub use scorers::{ScorerKind, ScorerSpec};
pub use split::{make_split, monthly_schedule, MonthlySplit, WindowSpec};
