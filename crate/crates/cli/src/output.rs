use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use degulab_core::io::{load_dgl, read_csv, read_edge_list};
use degulab_core::WeightedGraph;
use serde::Serialize;

/// Every report carries the tool version and the full invocation.
#[derive(Serialize)]
pub struct Envelope<'a, P: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub params: &'a P,
    pub result: R,
}

pub fn envelope<'a, P: Serialize, R: Serialize>(command: &'a str, params: &'a P, result: R) -> Envelope<'a, P, R> {
    Envelope {
        tool: "degulab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        params,
        result,
    }
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// A header line plus one line per row; empty input gives just the header.
pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    fs::write(path, csv_text(header, rows)).with_context(|| format!("writing {}", path.display()))
}

pub fn print_csv(header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    io::stdout().write_all(csv_text(header, rows).as_bytes())?;
    Ok(())
}

/// `g.dgl` → `g.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

/// Pick the reader from the extension; CSV and edge lists need `n`.
pub fn load_graph(path: &Path, n: Option<usize>) -> Result<WeightedGraph> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let g = match ext.as_str() {
        "dgl" => load_dgl(path)?,
        "csv" | "txt" | "edges" | "el" => {
            let Some(n) = n else {
                bail!("--n is required to read {}", path.display());
            };
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            if ext == "csv" {
                read_csv(file, n)?
            } else {
                read_edge_list(file, n)?
            }
        }
        _ => bail!("unknown graph format for {}", path.display()),
    };
    Ok(g)
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
