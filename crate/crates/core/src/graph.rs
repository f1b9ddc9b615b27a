//! Signed directed graphs, edge-list IO, train/valid/test splitting and
//! positive-edge subsampling.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge sign. Positive edges are the positive class for prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn from_i64(value: i64) -> Option<Sign> {
        match value {
            1 => Some(Sign::Positive),
            -1 => Some(Sign::Negative),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    /// Binary label used by the predictor: 1 for positive, 0 for negative.
    pub fn label(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => 0.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRecord {
    pub src: usize,
    pub dst: usize,
    pub sign: Sign,
}

impl EdgeRecord {
    pub fn new(src: usize, dst: usize, sign: Sign) -> Self {
        Self { src, dst, sign }
    }
}

/// A signed directed graph: at most one sign per ordered node pair, no
/// self-loops, node indices dense in `0..num_nodes`.
///
/// Edges are kept in a `BTreeMap` so iteration order is the sorted order of
/// `(src, dst)`, which keeps every downstream sampler deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignedDiGraph {
    num_nodes: usize,
    edges: BTreeMap<(usize, usize), Sign>,
}

impl SignedDiGraph {
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: BTreeMap::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_positive(&self) -> usize {
        self.edges.values().filter(|s| s.is_positive()).count()
    }

    pub fn num_negative(&self) -> usize {
        self.num_edges() - self.num_positive()
    }

    pub fn sign(&self, src: usize, dst: usize) -> Option<Sign> {
        self.edges.get(&(src, dst)).copied()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains_key(&(src, dst))
    }

    /// All edges in `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRecord> + '_ {
        self.edges
            .iter()
            .map(|(&(src, dst), &sign)| EdgeRecord { src, dst, sign })
    }

    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges().collect()
    }

    pub fn positive_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|(_, s)| s.is_positive())
            .map(|(&k, _)| k)
    }

    pub fn negative_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(|(_, s)| !s.is_positive())
            .map(|(&k, _)| k)
    }

    /// Inserts an edge, rejecting self-loops, out-of-range indices and sign
    /// conflicts. Returns `false` when the identical edge already exists.
    pub fn insert(&mut self, edge: EdgeRecord) -> Result<bool> {
        self.check_endpoints(edge.src, edge.dst)?;
        match self.edges.get(&(edge.src, edge.dst)) {
            Some(&s) if s == edge.sign => Ok(false),
            Some(_) => Err(Error::SignConflict {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
            }),
            None => {
                self.edges.insert((edge.src, edge.dst), edge.sign);
                Ok(true)
            }
        }
    }

    pub(crate) fn set_sign(&mut self, src: usize, dst: usize, sign: Sign) {
        debug_assert!(self.edges.contains_key(&(src, dst)));
        self.edges.insert((src, dst), sign);
    }

    pub(crate) fn remove(&mut self, src: usize, dst: usize) -> Option<Sign> {
        self.edges.remove(&(src, dst))
    }

    fn check_endpoints(&self, src: usize, dst: usize) -> Result<()> {
        for index in [src, dst] {
            if index >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    index,
                    num_nodes: self.num_nodes,
                });
            }
        }
        if src == dst {
            return Err(Error::SelfLoop(src));
        }
        Ok(())
    }

    /// Re-checks every structural invariant. Cheap enough to run after each
    /// perturbation in debug builds and tests.
    pub fn validate(&self) -> Result<()> {
        for &(src, dst) in self.edges.keys() {
            self.check_endpoints(src, dst)?;
        }
        Ok(())
    }
}

/// Builds a validated graph from explicit records. Identical duplicates are
/// collapsed; a pair carrying both signs is an error.
pub fn graph_from_edges(num_nodes: usize, edges: &[EdgeRecord]) -> Result<SignedDiGraph> {
    let mut graph = SignedDiGraph::empty(num_nodes);
    for &edge in edges {
        graph.insert(edge)?;
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFormat {
    /// Whitespace separated `src dst sign`, sign in {1, -1}.
    ThreeColumn,
    /// Comma separated `src,dst,rating[,time]`, sign taken from the rating.
    SnapRating,
}

impl std::str::FromStr for EdgeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three-column" | "tsv" => Ok(EdgeFormat::ThreeColumn),
            "snap-rating" | "csv" => Ok(EdgeFormat::SnapRating),
            other => Err(Error::Config(format!("unknown edge format '{other}'"))),
        }
    }
}

/// A graph loaded from an external file, with the dense re-indexing.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: SignedDiGraph,
    /// `node_ids[i]` is the original identifier of dense node `i`.
    pub node_ids: Vec<String>,
    pub duplicates_skipped: usize,
    pub self_loops_skipped: usize,
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeFormat) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_edge_list(reader: impl BufRead, format: EdgeFormat) -> Result<LoadedGraph> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut node_ids: Vec<String> = Vec::new();
    let mut raw: Vec<(usize, usize, Sign)> = Vec::new();
    let mut self_loops_skipped = 0;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (src, dst, sign) = match format {
            EdgeFormat::ThreeColumn => parse_three_column(trimmed, lineno)?,
            EdgeFormat::SnapRating => parse_snap_rating(trimmed, lineno)?,
        };
        let mut intern = |id: &str| -> usize {
            match ids.entry(id.to_string()) {
                Entry::Occupied(e) => *e.get(),
                Entry::Vacant(e) => {
                    node_ids.push(id.to_string());
                    *e.insert(node_ids.len() - 1)
                }
            }
        };
        let (u, v) = (intern(src), intern(dst));
        if u == v {
            self_loops_skipped += 1;
            continue;
        }
        raw.push((u, v, sign));
    }

    let mut graph = SignedDiGraph::empty(node_ids.len());
    let mut duplicates_skipped = 0;
    for (u, v, sign) in raw {
        match graph.insert(EdgeRecord::new(u, v, sign)) {
            Ok(true) => {}
            Ok(false) => duplicates_skipped += 1,
            Err(Error::SignConflict { .. }) => {
                return Err(Error::SignConflict {
                    src: node_ids[u].clone(),
                    dst: node_ids[v].clone(),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LoadedGraph {
        graph,
        node_ids,
        duplicates_skipped,
        self_loops_skipped,
    })
}

fn parse_three_column(line: &str, lineno: usize) -> Result<(&str, &str, Sign)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 3 columns, found {}", fields.len()),
        });
    }
    let sign = fields[2]
        .trim_start_matches('+')
        .parse::<i64>()
        .ok()
        .and_then(Sign::from_i64)
        .ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("sign must be 1 or -1, found '{}'", fields[2]),
        })?;
    Ok((fields[0], fields[1], sign))
}

fn parse_snap_rating(line: &str, lineno: usize) -> Result<(&str, &str, Sign)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 3 || fields.len() > 4 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 3 or 4 comma-separated fields, found {}", fields.len()),
        });
    }
    let rating: f64 = fields[2].parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("invalid rating '{}'", fields[2]),
    })?;
    let sign = if rating > 0.0 {
        Sign::Positive
    } else if rating < 0.0 {
        Sign::Negative
    } else {
        return Err(Error::Parse {
            line: lineno,
            message: "rating 0 has no sign".into(),
        });
    };
    if fields[0].is_empty() || fields[1].is_empty() {
        return Err(Error::Parse {
            line: lineno,
            message: "empty node id".into(),
        });
    }
    Ok((fields[0], fields[1], sign))
}

/// Writes records as three-column lines using dense indices.
pub fn write_edge_records(path: impl AsRef<Path>, edges: &[EdgeRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for e in edges {
        writeln!(out, "{} {} {}", e.src, e.dst, e.sign.as_i8()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a three-column file whose node ids are already dense indices,
/// keeping line order and the ids verbatim.
pub fn read_edge_records(path: impl AsRef<Path>) -> Result<Vec<EdgeRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (src, dst, sign) = parse_three_column(trimmed, lineno + 1)?;
        let index = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("node id '{s}' is not a dense index"),
            })
        };
        edges.push(EdgeRecord::new(index(src)?, index(dst)?, sign));
    }
    Ok(edges)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<EdgeRecord>,
    pub valid: Vec<EdgeRecord>,
    pub test: Vec<EdgeRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// JSON sidecar written next to the three split files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub num_nodes: usize,
    pub counts: SplitCounts,
}

pub const TRAIN_FILE: &str = "train.txt";
pub const VALID_FILE: &str = "valid.txt";
pub const TEST_FILE: &str = "test.txt";
pub const SPLIT_MANIFEST: &str = "split.json";

impl DataSplit {
    pub fn counts(&self) -> SplitCounts {
        SplitCounts {
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
        }
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>, num_nodes: usize) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_edge_records(dir.join(TRAIN_FILE), &self.train)?;
        write_edge_records(dir.join(VALID_FILE), &self.valid)?;
        write_edge_records(dir.join(TEST_FILE), &self.test)?;
        let manifest = SplitManifest {
            seed: self.seed,
            num_nodes,
            counts: self.counts(),
        };
        let path = dir.join(SPLIT_MANIFEST);
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }

    /// Reads a directory produced by [`DataSplit::write_dir`]; returns the
    /// split and the node count recorded in the sidecar.
    pub fn read_dir(dir: impl AsRef<Path>) -> Result<(DataSplit, usize)> {
        let dir = dir.as_ref();
        let path = dir.join(SPLIT_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: SplitManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let split = DataSplit {
            train: read_edge_records(dir.join(TRAIN_FILE))?,
            valid: read_edge_records(dir.join(VALID_FILE))?,
            test: read_edge_records(dir.join(TEST_FILE))?,
            seed: manifest.seed,
        };
        if split.counts() != manifest.counts {
            return Err(Error::Config(format!(
                "{}: counts {:?} do not match files {:?}",
                path.display(),
                manifest.counts,
                split.counts()
            )));
        }
        for e in split.train.iter().chain(&split.valid).chain(&split.test) {
            for index in [e.src, e.dst] {
                if index >= manifest.num_nodes {
                    return Err(Error::NodeOutOfRange {
                        index,
                        num_nodes: manifest.num_nodes,
                    });
                }
            }
        }
        Ok((split, manifest.num_nodes))
    }
}

/// Uniformly permutes all edges under `seed` and cuts them 60/20/20.
pub fn split_edges(graph: &SignedDiGraph, seed: u64) -> Result<DataSplit> {
    let total = graph.num_edges();
    if total < 5 {
        return Err(Error::TooFewEdges(format!(
            "splitting needs at least 5 edges, graph has {total}"
        )));
    }
    let mut edges = graph.edge_records();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);

    let n_train = (total as f64 * 0.6).round() as usize;
    let n_valid = (total as f64 * 0.2).round() as usize;
    let test = edges.split_off(n_train + n_valid);
    let valid = edges.split_off(n_train);
    Ok(DataSplit {
        train: edges,
        valid,
        test,
        seed,
    })
}

/// Keeps every negative training edge and a uniform sample (without
/// replacement) of `min(ratio * #neg, #pos)` positive ones. Order: sampled
/// positives in ascending original position, then negatives.
pub fn sample_training_edges<R: Rng + ?Sized>(
    train: &[EdgeRecord],
    ratio: usize,
    rng: &mut R,
) -> Result<Vec<EdgeRecord>> {
    let (pos, neg): (Vec<EdgeRecord>, Vec<EdgeRecord>) =
        train.iter().partition(|e| e.sign.is_positive());
    if neg.is_empty() {
        return Err(Error::NoNegativeEdges);
    }
    let keep = (ratio.saturating_mul(neg.len())).min(pos.len());
    let mut picked = index::sample(rng, pos.len(), keep).into_vec();
    picked.sort_unstable();
    let mut out: Vec<EdgeRecord> = picked.into_iter().map(|i| pos[i]).collect();
    out.extend(neg);
    Ok(out)
}
