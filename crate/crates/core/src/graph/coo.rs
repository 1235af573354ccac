//! Plain-text coordinate format: a header `I K sym|dir` followed by one
//! `i j k w` entry per line (0-based indices). Paths ending in `.gz` are
//! read and written gzip-compressed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::{MultiViewGraph, SparseSlice};
use crate::error::{Error, Result};

/// JSON sidecar carrying the planted view and node clusterings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub view_labels: Vec<usize>,
    pub node_labels: BTreeMap<usize, Vec<usize>>,
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn open_reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    let inner: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

pub fn load_coo_tensor(path: impl AsRef<Path>) -> Result<MultiViewGraph> {
    let path = path.as_ref();
    let reader = open_reader(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut header: Option<(usize, bool)> = None;
    let mut slices: Vec<SparseSlice> = Vec::new();
    let mut num_nodes = 0;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match header {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "expected header `I K sym|dir`".into()));
                }
                let n: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad node count {:?}", fields[0])))?;
                let k: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad view count {:?}", fields[1])))?;
                let sym = match fields[2] {
                    "sym" => true,
                    "dir" => false,
                    other => {
                        return Err(parse_err(lineno, format!("expected sym or dir, got {other:?}")))
                    }
                };
                num_nodes = n;
                slices = vec![SparseSlice::default(); k];
                header = Some((k, sym));
            }
            Some((k, _)) => {
                if fields.len() != 4 {
                    return Err(parse_err(lineno, "expected `i j k w`".into()));
                }
                let idx = |s: &str, what: &str, bound: usize| -> Result<usize> {
                    let v: usize = s
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad {what} index {s:?}")))?;
                    if v >= bound {
                        return Err(parse_err(
                            lineno,
                            format!("{what} index {v} out of range (< {bound})"),
                        ));
                    }
                    Ok(v)
                };
                let i = idx(fields[0], "row", num_nodes)?;
                let j = idx(fields[1], "column", num_nodes)?;
                let view = idx(fields[2], "view", k)?;
                let w: f64 = fields[3]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad weight {:?}", fields[3])))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(parse_err(lineno, format!("weight {w} must be finite and >= 0")));
                }
                slices[view].entries.push((i, j, w));
            }
        }
    }
    let (_, sym) = header.ok_or_else(|| parse_err(0, "missing header".into()))?;
    MultiViewGraph::new(num_nodes, slices, sym)
}

pub fn save_coo_tensor(graph: &MultiViewGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)?;
    let mut out: Box<dyn Write> = if is_gz(path) {
        Box::new(BufWriter::new(GzEncoder::new(file, Compression::default())))
    } else {
        Box::new(BufWriter::new(file))
    };
    let kind = if graph.is_symmetric() { "sym" } else { "dir" };
    writeln!(out, "{} {} {}", graph.num_nodes(), graph.num_views(), kind)?;
    for (k, slice) in graph.slices().iter().enumerate() {
        for &(i, j, w) in &slice.entries {
            writeln!(out, "{i} {j} {k} {w}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_truth(truth: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, truth)?;
    Ok(())
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}
