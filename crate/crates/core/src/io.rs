//! On-disk formats.
//!
//! * `DGL1` binary: the 4 magic bytes `DGL1`, `n` as `u32` little-endian, then
//!   the strict upper triangle row-major as `f64` little-endian.
//! * CSV: header `u,v,w`, one row per nonzero weight with `u < v`.
//! * Edge list (simple graphs): one `u v` pair per line.
//!
//! Graphs read back from `DGL1`/CSV are tagged `Simple` when every weight is
//! 0 or 1.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphKind, WeightedGraph};

pub const DGL_MAGIC: &[u8; 4] = b"DGL1";

pub fn write_dgl<W: Write>(g: &WeightedGraph, mut out: W) -> Result<()> {
    let n = u32::try_from(g.n()).map_err(|_| Error::Format("n exceeds u32".into()))?;
    out.write_all(DGL_MAGIC)?;
    out.write_all(&n.to_le_bytes())?;
    for w in g.upper() {
        out.write_all(&w.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dgl<R: Read>(mut input: R) -> Result<WeightedGraph> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DGL_MAGIC {
        return Err(Error::Format("missing DGL1 magic".into()));
    }
    let mut nb = [0u8; 4];
    input.read_exact(&mut nb)?;
    let n = u32::from_le_bytes(nb) as usize;
    let len = n * n.saturating_sub(1) / 2;
    let mut bytes = vec![0u8; len * 8];
    input.read_exact(&mut bytes)?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after DGL1 payload".into()));
    }
    let upper = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(WeightedGraph::from_upper(n, GraphKind::Weighted, upper)?.into_simple_if_binary())
}

pub fn write_csv<W: Write>(g: &WeightedGraph, mut out: W) -> Result<()> {
    writeln!(out, "u,v,w")?;
    for (u, v, w) in g.edges() {
        writeln!(out, "{u},{v},{w}")?;
    }
    out.flush()?;
    Ok(())
}

/// CSV carries no vertex count, so `n` is supplied by the caller.
pub fn read_csv<R: Read>(input: R, n: usize) -> Result<WeightedGraph> {
    let mut g = WeightedGraph::empty(n, GraphKind::Weighted);
    let mut lines = BufReader::new(input).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == "u,v,w" => {}
        _ => return Err(Error::Format("expected header u,v,w".into())),
    }
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("bad CSV row {}: {line}", lineno + 2));
        let mut it = line.split(',');
        let u: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let v: usize = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let w: f64 = it.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        if u >= v {
            return Err(bad());
        }
        g.set_weight(u, v, w)?;
    }
    Ok(g.into_simple_if_binary())
}

pub fn write_edge_list<W: Write>(g: &WeightedGraph, mut out: W) -> Result<()> {
    if !g.is_simple() {
        return Err(Error::Format("edge lists are only defined for simple graphs".into()));
    }
    for (u, v, _) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_edge_list<R: Read>(input: R, n: usize) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<usize>);
        match (it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v))) => edges.push((u, v)),
            _ => return Err(Error::Format(format!("bad edge line: {line}"))),
        }
    }
    WeightedGraph::from_edges(n, &edges)
}

pub fn save_dgl(g: &WeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    write_dgl(g, BufWriter::new(fs::File::create(path)?))
}

pub fn load_dgl(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    read_dgl(BufReader::new(fs::File::open(path)?))
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}
