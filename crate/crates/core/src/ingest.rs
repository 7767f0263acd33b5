//! Reading and writing graphs, id lists and feature matrices, and building
//! k-nearest-neighbour graphs.
//!
//! Edge lists hold one undirected edge `u v` per line (0-indexed ids,
//! whitespace separated); lines starting with `#` are comments. The writer
//! adds a `# nodes <n>` comment so that trailing isolated nodes survive a
//! round trip; the reader honours it when present.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::graph::{BuildStats, Graph};
use crate::model::{CueAssignment, CueModel, GroundTruth};
use crate::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn parse_id(tok: &str, path: &Path, line: usize) -> Result<u32> {
    tok.parse::<u32>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("expected a nonnegative integer node id, found {tok:?}"),
    })
}

/// Parse an edge list. `path` is only used in error messages.
pub fn read_edge_list(reader: impl BufRead, path: &Path) -> Result<(Graph, BuildStats)> {
    let mut edges = Vec::new();
    let mut declared: Option<usize> = None;
    let mut max_id: Option<u32> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("nodes") {
                if let Some(v) = words.next() {
                    declared = Some(v.parse().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        msg: format!("bad node count {v:?}"),
                    })?);
                }
            }
            continue;
        }
        let mut toks = text.split_whitespace();
        let (Some(u), Some(v), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                msg: "expected exactly two node ids".into(),
            });
        };
        let (u, v) = (parse_id(u, path, lineno)?, parse_id(v, path, lineno)?);
        max_id = max_id.max(Some(u.max(v)));
        edges.push((u, v));
    }
    let Some(max_id) = max_id else {
        return Err(Error::EmptyInput(path.to_path_buf()));
    };
    let n = match declared {
        Some(n) if n <= max_id as usize => {
            return Err(Error::NodeOutOfRange { id: max_id as u64, n });
        }
        Some(n) => n,
        None => max_id as usize + 1,
    };
    Graph::from_edges(n, &edges)
}

/// Load an edge list file; self-loops and repeated edges are dropped and
/// counted in the returned [`BuildStats`].
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<(Graph, BuildStats)> {
    let path = path.as_ref();
    read_edge_list(open(path)?, path)
}

/// Write edges with `u < v` in sorted order, preceded by the node count.
pub fn write_edge_list_to(mut w: impl Write, graph: &Graph) -> std::io::Result<()> {
    writeln!(w, "# nodes {}", graph.node_count())?;
    for (u, v) in graph.edges() {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}

pub fn write_edge_list(path: impl AsRef<Path>, graph: &Graph) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list_to(BufWriter::new(f), graph).map_err(|e| Error::io(path, e))
}

/// Node ids, one per line, sorted and deduplicated. Ids must be below `n`.
pub fn load_id_list(path: impl AsRef<Path>, n: usize) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let id = parse_id(text, path, idx + 1)?;
        if id as usize >= n {
            return Err(Error::NodeOutOfRange { id: id as u64, n });
        }
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

pub fn write_id_list(path: impl AsRef<Path>, ids: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res: std::io::Result<()> = ids.iter().try_for_each(|i| writeln!(w, "{i}")).and_then(|_| w.flush());
    res.map_err(|e| Error::io(path, e))
}

/// Cue file; an empty file gives no cues.
pub fn load_cue_file(path: impl AsRef<Path>, n: usize, model: CueModel) -> Result<CueAssignment> {
    let ids = load_id_list(path, n)?;
    CueAssignment::from_ids(n, &ids, model)
}

pub fn load_label_file(path: impl AsRef<Path>, n: usize) -> Result<GroundTruth> {
    let ids = load_id_list(path, n)?;
    GroundTruth::from_members(n, &ids)
}

/// Dense row-major `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::SizeMismatch("feature rows have different lengths".into()));
        }
        Ok(FeatureMatrix {
            n: rows.len(),
            d,
            data: rows.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Feature CSV, one row per node. A first row that does not parse as numbers
/// is taken as a header.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    msg: format!("non-numeric feature: {e}"),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    FeatureMatrix::from_rows(&rows).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "rows have different numbers of columns".into(),
    })
}

/// Symmetrized `k`-nearest-neighbour graph under Euclidean distance. Each
/// point links to its `k` nearest other points (ties to the smaller id) and
/// the relation is made undirected by union, so every degree is at least `k`.
pub fn knn_graph(features: &FeatureMatrix, k: usize) -> Result<Graph> {
    let n = features.n;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n <= k {
        return Err(Error::invalid(format!("{n} points are too few for k = {k}")));
    }
    let lists: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = features.row(i);
            let mut cand: Vec<(f64, u32)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = xi.iter().zip(features.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (d2, j as u32)
                })
                .collect();
            let cmp = |x: &(f64, u32), y: &(f64, u32)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    let edges: Vec<(u32, u32)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i as u32, j)))
        .collect();
    Ok(Graph::from_edges(n, &edges)?.0)
}

/// Plug-in estimates `(p, q)` for a real graph: `p` is the edge density of
/// the subgraph induced by the cues and their neighbours, `q` the density of
/// the whole graph.
pub fn estimate_pq(graph: &Graph, cues: &CueAssignment) -> Result<(f64, f64)> {
    let n = graph.node_count();
    if cues.count() == 0 {
        return Err(Error::EmptyCueSet);
    }
    if n < 2 {
        return Err(Error::invalid("density needs at least two nodes"));
    }
    let mut inside = cues.c.clone();
    for c in cues.ids() {
        for &u in graph.neighbors(c as usize) {
            inside[u as usize] = true;
        }
    }
    let m = inside.iter().filter(|&&x| x).count();
    let internal = graph
        .edges()
        .filter(|&(u, v)| inside[u as usize] && inside[v as usize])
        .count();
    let p = if m < 2 {
        0.0
    } else {
        2.0 * internal as f64 / (m as f64 * (m - 1) as f64)
    };
    let q = 2.0 * graph.edge_count() as f64 / (n as f64 * (n - 1) as f64);
    Ok((p, q))
}
