//! Columnar binary graph cache, little endian:
//!
//! ```text
//! magic[8] bin_width:u64 origin:i64 n:u64 (len:u32 utf8[len])*n
//! m:u64 src:u32*m dst:u32*m bin:u64*m raw:i64*m
//! ```

use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, Edge, NodeId, NodeRegistry, Timestamp};

pub const GRAPH_CACHE_MAGIC: &[u8; 8] = b"DINSGRF1";

pub fn is_graph_cache(path: &Path) -> Result<bool> {
    let mut head = [0u8; 8];
    let mut f = fs::File::open(path)?;
    let mut got = 0;
    while got < head.len() {
        match f.read(&mut head[got..])? {
            0 => return Ok(false),
            k => got += k,
        }
    }
    Ok(&head == GRAPH_CACHE_MAGIC)
}

pub fn write_graph_cache(path: &Path, graph: &DynamicGraph) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(GRAPH_CACHE_MAGIC)?;
        w.write_u64::<LE>(graph.bin_width())?;
        w.write_i64::<LE>(graph.origin())?;
        w.write_u64::<LE>(graph.node_count() as u64)?;
        for name in graph.nodes().names() {
            w.write_u32::<LE>(name.len() as u32)?;
            w.write_all(name.as_bytes())?;
        }
        let edges = graph.edges();
        w.write_u64::<LE>(edges.len() as u64)?;
        for e in edges {
            w.write_u32::<LE>(e.src.0)?;
        }
        for e in edges {
            w.write_u32::<LE>(e.dst.0)?;
        }
        for e in edges {
            w.write_u64::<LE>(e.t.0)?;
        }
        for &raw in graph.raw_times() {
            w.write_i64::<LE>(raw)?;
        }
        Ok(())
    })
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Cache("file is truncated".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_graph_cache(path: &Path) -> Result<DynamicGraph> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != GRAPH_CACHE_MAGIC {
        return Err(Error::Cache("not a graph cache".into()));
    }
    let bin_width = r.read_u64::<LE>().map_err(truncated)?;
    let origin = r.read_i64::<LE>().map_err(truncated)?;
    let n = r.read_u64::<LE>().map_err(truncated)? as usize;
    let mut nodes = NodeRegistry::new();
    for i in 0..n {
        let len = r.read_u32::<LE>().map_err(truncated)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf).map_err(truncated)?;
        let name = String::from_utf8(buf).map_err(|_| Error::Cache(format!("node {i} name is not UTF-8")))?;
        if nodes.intern(&name).index() != i {
            return Err(Error::Cache(format!("duplicate node name {name:?}")));
        }
    }
    let m = r.read_u64::<LE>().map_err(truncated)? as usize;
    let read_u32s = |r: &mut BufReader<fs::File>| -> Result<Vec<u32>> {
        let mut v = vec![0u32; m];
        r.read_u32_into::<LE>(&mut v).map_err(truncated)?;
        Ok(v)
    };
    let src = read_u32s(&mut r)?;
    let dst = read_u32s(&mut r)?;
    let mut bins = vec![0u64; m];
    r.read_u64_into::<LE>(&mut bins).map_err(truncated)?;
    let mut raw = vec![0i64; m];
    r.read_i64_into::<LE>(&mut raw).map_err(truncated)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Cache("trailing bytes".into()));
    }

    let mut edges = Vec::with_capacity(m);
    for i in 0..m {
        if src[i] as usize >= n || dst[i] as usize >= n {
            return Err(Error::Cache(format!("edge {i} references an unknown node")));
        }
        if i > 0 && bins[i] < bins[i - 1] {
            return Err(Error::Cache(format!("edge {i} is out of order")));
        }
        edges.push(Edge {
            src: NodeId(src[i]),
            dst: NodeId(dst[i]),
            t: Timestamp(bins[i]),
        });
    }
    Ok(DynamicGraph::assemble(nodes, edges, raw, bin_width, origin))
}
