//! File formats: edge CSV, binary graph cache, JSON-lines sample and score
//! records, JSON documents. Every writer replaces its target atomically.

mod cache;
mod edges;
mod records;

pub use cache::{is_graph_cache, read_graph_cache, write_graph_cache, GRAPH_CACHE_MAGIC};
pub use edges::{read_edges, read_nodes, write_edges, write_nodes, EdgeReadOptions, EdgeReadOutcome};
pub use records::{
    read_sample_records, read_scores, read_scores_map, write_sample_records, write_scores, SampleRecord, ScoreRecord,
};

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{build_graph, DynamicGraph};

/// Writes through a temporary file in the target's directory, then renames
/// it over the target.
pub fn atomic_write<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut fs::File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Pretty JSON document with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

/// Loads a graph from either a binary cache or an edge CSV/TSV.
/// A cache keeps the bin width it was written with.
pub fn load_graph(path: &Path, options: &EdgeReadOptions, bin_width_seconds: u64) -> Result<DynamicGraph> {
    if is_graph_cache(path)? {
        return read_graph_cache(path);
    }
    let outcome = read_edges(path, options)?;
    build_graph(&outcome.records, bin_width_seconds)
}
