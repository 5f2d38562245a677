use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Datelike};
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::graph::{NodeRegistry, RawEdge};

/// How to read an edge file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReadOptions {
    /// Field separator; `None` picks tab for `.tsv` files and comma otherwise.
    pub delimiter: Option<u8>,
    pub src_column: String,
    pub dst_column: String,
    pub time_column: String,
    /// Users whose edges are removed (either endpoint).
    pub drop_users: Vec<String>,
    /// Drop whole UTC months with fewer edges than this.
    pub min_month_edges: Option<usize>,
}

impl Default for EdgeReadOptions {
    fn default() -> Self {
        EdgeReadOptions {
            delimiter: None,
            src_column: "src".into(),
            dst_column: "dst".into(),
            time_column: "timestamp".into(),
            drop_users: Vec::new(),
            min_month_edges: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeReadOutcome {
    pub records: Vec<RawEdge>,
    pub dropped_by_user: usize,
    /// `YYYY-MM` labels of months removed as too sparse.
    pub dropped_months: Vec<String>,
    pub dropped_by_month: usize,
}

fn month_of(time: i64) -> (i32, u32) {
    let d = DateTime::from_timestamp(time, 0).expect("epoch seconds in range");
    (d.year(), d.month())
}

/// Reads `src,dst,timestamp` records (column names configurable). Errors
/// name the offending 1-based line, counting the header.
pub fn read_edges(path: &Path, options: &EdgeReadOptions) -> Result<EdgeReadOutcome> {
    let delimiter = options.delimiter.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) {
            b'\t'
        } else {
            b','
        }
    });
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(fs::File::open(path)?);

    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Ingest {
            line: 1,
            message: format!("missing column {name:?} in header"),
        })
    };
    let (si, di, ti) = (
        column(&options.src_column)?,
        column(&options.dst_column)?,
        column(&options.time_column)?,
    );

    let drop: HashSet<&str> = options.drop_users.iter().map(String::as_str).collect();
    let mut out = EdgeReadOutcome::default();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| match row.get(i) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::Ingest {
                line,
                message: format!("missing field {name:?}"),
            }),
        };
        let src = field(si, &options.src_column)?;
        let dst = field(di, &options.dst_column)?;
        let raw = field(ti, &options.time_column)?;
        let time: i64 = raw.parse().map_err(|_| Error::Ingest {
            line,
            message: format!("timestamp {raw:?} is not an integer"),
        })?;
        if time < 0 {
            return Err(Error::Ingest {
                line,
                message: format!("negative timestamp {time}"),
            });
        }
        if drop.contains(src) || drop.contains(dst) {
            out.dropped_by_user += 1;
            continue;
        }
        out.records.push(RawEdge::new(src, dst, time));
    }

    if let Some(min) = options.min_month_edges {
        let mut counts: BTreeMap<(i32, u32), usize> = BTreeMap::new();
        for r in &out.records {
            *counts.entry(month_of(r.time)).or_default() += 1;
        }
        let sparse: HashSet<(i32, u32)> = counts.into_iter().filter(|&(_, c)| c < min).map(|(k, _)| k).collect();
        if !sparse.is_empty() {
            let before = out.records.len();
            out.records.retain(|r| !sparse.contains(&month_of(r.time)));
            out.dropped_by_month = before - out.records.len();
            let mut months: Vec<_> = sparse.into_iter().collect();
            months.sort_unstable();
            out.dropped_months = months.into_iter().map(|(y, m)| format!("{y:04}-{m:02}")).collect();
        }
    }
    Ok(out)
}

pub fn write_edges(path: &Path, records: &[RawEdge]) -> Result<()> {
    atomic_write(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["src", "dst", "timestamp"])?;
        for r in records {
            csv.write_record([r.src.as_str(), r.dst.as_str(), &r.time.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// `id,name` rows mapping dense ids back to external names.
pub fn write_nodes(path: &Path, nodes: &NodeRegistry) -> Result<()> {
    atomic_write(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["id", "name"])?;
        for (i, name) in nodes.names().iter().enumerate() {
            csv.write_record([i.to_string().as_str(), name])?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Reads a registry written by [`write_nodes`]. Ids must run `0..n` in order.
pub fn read_nodes(path: &Path) -> Result<NodeRegistry> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let mut nodes = NodeRegistry::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| Error::Ingest { line, message };
        let (id, name) = match (row.get(0), row.get(1)) {
            (Some(id), Some(name)) => (id, name),
            _ => return Err(bad("expected id,name".into())),
        };
        if id.trim().parse::<usize>().ok() != Some(i) {
            return Err(bad(format!("expected id {i}, found {id:?}")));
        }
        if nodes.intern(name).index() != i {
            return Err(bad(format!("duplicate node name {name:?}")));
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(body: &str, name: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn three_lines_three_records() {
        let (_d, p) = file("src,dst,timestamp\na,b,0\nb,c,300\nc,c,601\n", "e.csv");
        let out = read_edges(&p, &EdgeReadOptions::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.records[2], RawEdge::new("c", "c", 601));
    }

    #[test]
    fn tsv_and_column_mapping() {
        let (_d, p) = file("time\tauthor\tparent\n5\tx\ty\n", "e.tsv");
        let opts = EdgeReadOptions {
            src_column: "author".into(),
            dst_column: "parent".into(),
            time_column: "time".into(),
            ..Default::default()
        };
        assert_eq!(read_edges(&p, &opts).unwrap().records, vec![RawEdge::new("x", "y", 5)]);
    }

    #[test]
    fn errors_name_the_line() {
        for (body, line) in [
            ("src,dst,timestamp\na,b,1\na,b,-4\n", 3),
            ("src,dst,timestamp\na,b\n", 2),
            ("src,dst,timestamp\na,b,1\na,b,1\na,b,x\n", 4),
            ("src,timestamp\na,1\n", 1),
        ] {
            let (_d, p) = file(body, "e.csv");
            match read_edges(&p, &EdgeReadOptions::default()) {
                Err(Error::Ingest { line: l, .. }) => assert_eq!(l, line, "{body:?}"),
                other => panic!("{body:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn drop_list_removes_either_endpoint() {
        let (_d, p) = file("src,dst,timestamp\na,b,1\nb,x,2\nx,a,3\nb,a,4\n", "e.csv");
        let opts = EdgeReadOptions {
            drop_users: vec!["x".into()],
            ..Default::default()
        };
        let out = read_edges(&p, &opts).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.dropped_by_user, 2);
    }

    #[test]
    fn sparse_months_are_dropped_only_when_asked() {
        // two edges in 2021-01, one in 2021-02
        let (_d, p) = file(
            "src,dst,timestamp\na,b,1609459200\na,b,1609459500\na,b,1612137600\n",
            "e.csv",
        );
        assert_eq!(read_edges(&p, &EdgeReadOptions::default()).unwrap().records.len(), 3);
        let opts = EdgeReadOptions {
            min_month_edges: Some(2),
            ..Default::default()
        };
        let out = read_edges(&p, &opts).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.dropped_months, vec!["2021-02"]);
        assert_eq!(out.dropped_by_month, 1);
    }

    #[test]
    fn written_edges_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/e.csv");
        let recs = vec![RawEdge::new("a,1", "b", 7), RawEdge::new("c", "\"d\"", 9)];
        write_edges(&p, &recs).unwrap();
        assert_eq!(read_edges(&p, &EdgeReadOptions::default()).unwrap().records, recs);
    }

    #[test]
    fn written_nodes_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nodes.csv");
        let mut nodes = NodeRegistry::new();
        for name in ["b", "a,x", "c"] {
            nodes.intern(name);
        }
        write_nodes(&p, &nodes).unwrap();
        assert_eq!(read_nodes(&p).unwrap(), nodes);

        let (_d, p) = file(
            "id,name
0,a
2,b
",
            "n.csv",
        );
        assert!(matches!(read_nodes(&p), Err(Error::Ingest { line: 3, .. })));
        let (_d, p) = file(
            "id,name
0,a
1,a
",
            "n.csv",
        );
        assert!(matches!(read_nodes(&p), Err(Error::Ingest { line: 3, .. })));
    }
}
