//! Semantic network construction from preprocessed norms.
//!
//! The directed cue → response frequency graph is collapsed to an undirected
//! graph keeping the larger of the two arc weights, then reduced by the
//! lexicon filter, idiosyncratic-edge removal and the largest connected
//! component, in that order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::norms::NormsTable;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected word1<TAB>word2<TAB>weight")]
    EdgeLine { line: usize },
    #[error("line {line}: weight {raw:?} is not a positive integer")]
    Weight { line: usize, raw: String },
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {0:?} -- {1:?}")]
    DuplicateEdge(String, String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("reduction left an empty network")]
    EmptyAfterReduction,
}

/// Cue → response arcs with occurrence counts. Labels are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectedGraph {
    pub labels: Vec<String>,
    /// `(from, to) -> weight`, indices into `labels`.
    pub arcs: BTreeMap<(u32, u32), u32>,
}

impl DirectedGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn weight(&self, from: &str, to: &str) -> Option<u32> {
        let f = self.labels.binary_search_by(|l| l.as_str().cmp(from)).ok()?;
        let t = self.labels.binary_search_by(|l| l.as_str().cmp(to)).ok()?;
        self.arcs.get(&(f as u32, t as u32)).copied()
    }
}

/// Builds the directed frequency graph. Blank responses are skipped; every
/// cue becomes a node even when all its responses are blank.
pub fn build_directed(t: &NormsTable) -> DirectedGraph {
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for row in &t.rows {
        names.insert(row.cue.as_str());
        names.extend(row.present());
    }
    let labels: Vec<String> = names.into_iter().map(str::to_string).collect();
    let index: HashMap<&str, u32> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u32))
        .collect();
    let mut arcs = BTreeMap::new();
    for row in &t.rows {
        let c = index[row.cue.as_str()];
        for r in row.present() {
            *arcs.entry((c, index[r])).or_insert(0) += 1;
        }
    }
    DirectedGraph { labels, arcs }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetMetadata {
    pub source: String,
    pub filters: Vec<String>,
}

/// Undirected weighted graph in compressed sparse row form.
///
/// Labels are kept in sorted order, so node indices are lexicographic ranks.
/// Each row's neighbors are sorted by index. Every edge is stored twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticNetwork {
    labels: Vec<String>,
    index: HashMap<String, u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u32>,
    pub metadata: NetMetadata,
}

impl SemanticNetwork {
    /// Builds from node labels plus undirected edges keyed by node index.
    /// `labels` must be sorted and unique; each unordered pair appears once
    /// in `edges` with `u < v`.
    fn from_sorted(labels: Vec<String>, edges: &BTreeMap<(u32, u32), u32>, metadata: NetMetadata) -> Self {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for &(u, v) in edges.keys() {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let m = *offsets.last().unwrap();
        let mut targets = vec![0u32; m];
        let mut weights = vec![0u32; m];
        let mut fill = offsets[..n].to_vec();
        // Keys iterate as (u, v) ascending with u < v. Row x first receives
        // every smaller neighbor (from keys (u, x)) in ascending u, then every
        // larger neighbor (from keys (x, v)) in ascending v: rows come out sorted.
        for (&(u, v), &w) in edges {
            for (a, b) in [(u, v), (v, u)] {
                let slot = fill[a as usize];
                targets[slot] = b;
                weights[slot] = w;
                fill[a as usize] += 1;
            }
        }
        debug_assert!((0..n).all(|i| targets[offsets[i]..offsets[i + 1]].windows(2).all(|p| p[0] < p[1])));
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        SemanticNetwork {
            labels,
            index,
            offsets,
            targets,
            weights,
            metadata,
        }
    }

    /// Builds a network from explicit nodes and weighted label pairs. Edge
    /// endpoints are added as nodes automatically.
    pub fn from_edges<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        edges: impl IntoIterator<Item = (S, S, u32)>,
    ) -> Result<Self, NetError> {
        let edges: Vec<(String, String, u32)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.as_ref().to_string(), b.as_ref().to_string(), w))
            .collect();
        let mut names: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        for (a, b, _) in &edges {
            names.insert(a.clone());
            names.insert(b.clone());
        }
        let labels: Vec<String> = names.into_iter().collect();
        let idx: HashMap<&str, u32> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        let mut map = BTreeMap::new();
        for (a, b, w) in &edges {
            if a == b {
                return Err(NetError::SelfLoop(a.clone()));
            }
            let (u, v) = (idx[a.as_str()], idx[b.as_str()]);
            let key = (u.min(v), u.max(v));
            if map.insert(key, *w).is_some() {
                return Err(NetError::DuplicateEdge(a.clone(), b.clone()));
            }
        }
        Ok(Self::from_sorted(labels, &map, NetMetadata::default()))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).map(|&i| i as usize)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// `(neighbor, weight)` pairs of node `i`, neighbors ascending.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        self.targets[s..e]
            .iter()
            .zip(&self.weights[s..e])
            .map(|(&t, &w)| (t as usize, w))
    }

    pub fn neighbor_indices(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn strength(&self, i: usize) -> u64 {
        self.weights[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(|&w| w as u64)
            .sum()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u32> {
        let (u, v) = (self.index_of(a)?, self.index_of(b)?);
        let row = self.neighbor_indices(u);
        row.binary_search(&(v as u32))
            .ok()
            .map(|k| self.weights[self.offsets[u] + k])
    }

    /// Each undirected edge once as `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Connected component id of every node, ids assigned in order of the
    /// smallest member index.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbor_indices(u) {
                    let v = v as usize;
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && self.components().iter().all(|&c| c == 0)
    }

    /// Subgraph induced on nodes with `keep[i]`, restricted to edges passing
    /// `edge_ok`.
    pub fn filtered(&self, keep: &[bool], edge_ok: impl Fn(u32) -> bool) -> Self {
        let mut remap = vec![u32::MAX; self.node_count()];
        let mut labels = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            if keep[i] {
                remap[i] = labels.len() as u32;
                labels.push(l.clone());
            }
        }
        let edges = self
            .edges()
            .filter(|&(u, v, w)| keep[u] && keep[v] && edge_ok(w))
            .map(|(u, v, w)| ((remap[u], remap[v]), w))
            .collect();
        Self::from_sorted(labels, &edges, self.metadata.clone())
    }

    /// Writes `word1<TAB>word2<TAB>weight` lines with `word1 < word2`, sorted.
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for (u, v, wt) in self.edges() {
            writeln!(w, "{}\t{}\t{}", self.labels[u], self.labels[v], wt)?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let path = path.as_ref();
        let io = |source| NetError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_edge_list(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn read_edge_list(r: impl BufRead) -> Result<Self, NetError> {
        let mut edges = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|source| NetError::Io {
                path: "<edge list>".into(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(NetError::EdgeLine { line: i + 1 });
            }
            let w: u32 = cols[2]
                .trim()
                .parse()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| NetError::Weight {
                    line: i + 1,
                    raw: cols[2].to_string(),
                })?;
            edges.push((cols[0].to_string(), cols[1].to_string(), w));
        }
        Self::from_edges(Vec::<String>::new(), edges)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| NetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut net = Self::read_edge_list(std::io::BufReader::new(file))?;
        net.metadata.source = path.display().to_string();
        Ok(net)
    }
}

/// Collapses arcs to undirected edges keeping the larger weight. Self-loops
/// are dropped.
pub fn undirect_max(g: &DirectedGraph) -> SemanticNetwork {
    let mut edges: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for (&(a, b), &w) in &g.arcs {
        if a == b {
            continue;
        }
        let e = edges.entry((a.min(b), a.max(b))).or_insert(0);
        *e = (*e).max(w);
    }
    SemanticNetwork::from_sorted(g.labels.clone(), &edges, NetMetadata::default())
}

pub const FILTER_LEXICON: &str = "drop nodes not in word list";
pub const FILTER_IDIOSYNCRATIC: &str = "drop edges with weight 1";
pub const FILTER_LCC: &str = "keep largest connected component (ties: smallest label)";

/// Lexicon filter, then weight-1 edge removal, then largest connected
/// component. Component-size ties go to the component holding the
/// lexicographically smallest label.
pub fn reduce(g: &SemanticNetwork, lex: &Lexicon) -> Result<SemanticNetwork, NetError> {
    let keep: Vec<bool> = g.labels.iter().map(|l| lex.is_valid(l)).collect();
    let filtered = g.filtered(&keep, |w| w >= 2);

    let comp = filtered.components();
    let mut sizes: Vec<usize> = Vec::new();
    for &c in &comp {
        if c >= sizes.len() {
            sizes.resize(c + 1, 0);
        }
        sizes[c] += 1;
    }
    // component ids follow smallest-member order, so the first max wins ties
    let best = sizes
        .iter()
        .enumerate()
        .fold(None::<(usize, usize)>, |acc, (c, &s)| match acc {
            Some((_, bs)) if bs >= s => acc,
            _ => Some((c, s)),
        })
        .ok_or(NetError::EmptyAfterReduction)?
        .0;
    let keep: Vec<bool> = comp.iter().map(|&c| c == best).collect();
    let mut out = filtered.filtered(&keep, |_| true);
    out.metadata.filters = vec![
        FILTER_LEXICON.to_string(),
        FILTER_IDIOSYNCRATIC.to_string(),
        FILTER_LCC.to_string(),
    ];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    pub avg_degree: f64,
}

impl NetStats {
    pub fn from_counts(nodes: usize, edges: usize) -> Self {
        let (n, e) = (nodes as f64, edges as f64);
        let density = if nodes <= 1 { 0.0 } else { 2.0 * e / (n * (n - 1.0)) };
        let avg_degree = if nodes == 0 { 0.0 } else { 2.0 * e / n };
        NetStats {
            nodes,
            edges,
            density,
            avg_degree,
        }
    }
}

pub fn net_stats(g: &SemanticNetwork) -> NetStats {
    NetStats::from_counts(g.node_count(), g.edge_count())
}

/// Set-overlap counts and percentages for one element type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub a_total: usize,
    pub b_total: usize,
    pub common: usize,
    /// `|A \ B| / |A|`, percent.
    pub pct_a_not_in_b: f64,
    /// `|A ∩ B| / |A ∪ B|`, percent.
    pub pct_common_of_union: f64,
    /// `|B \ A| / |B|`, percent.
    pub pct_b_not_in_a: f64,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl Overlap {
    pub fn from_counts(a_total: usize, b_total: usize, common: usize) -> Self {
        assert!(common <= a_total.min(b_total), "intersection larger than a set");
        let union = a_total + b_total - common;
        Overlap {
            a_total,
            b_total,
            common,
            pct_a_not_in_b: pct(a_total - common, a_total),
            pct_common_of_union: pct(common, union),
            pct_b_not_in_a: pct(b_total - common, b_total),
        }
    }

    pub fn union(&self) -> usize {
        self.a_total + self.b_total - self.common
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub nodes: Overlap,
    /// Computed on the subgraphs induced by the common nodes.
    pub edges: Overlap,
}

/// Node and edge overlap of two networks. Nodes match by label; edges by
/// unordered label pair, weights ignored.
pub fn compare(a: &SemanticNetwork, b: &SemanticNetwork) -> OverlapReport {
    let common: HashSet<&str> = a
        .labels
        .iter()
        .filter(|l| b.contains(l))
        .map(String::as_str)
        .collect();
    let nodes = Overlap::from_counts(a.node_count(), b.node_count(), common.len());

    let induced = |g: &SemanticNetwork| -> HashSet<(String, String)> {
        g.edges()
            .filter(|&(u, v, _)| common.contains(g.label(u)) && common.contains(g.label(v)))
            .map(|(u, v, _)| (g.label(u).to_string(), g.label(v).to_string()))
            .collect()
    };
    // labels are sorted in both graphs, so (label(u), label(v)) with u < v is
    // already the canonical ordered pair
    let ea = induced(a);
    let eb = induced(b);
    let shared = ea.intersection(&eb).count();
    let edges = Overlap::from_counts(ea.len(), eb.len(), shared);
    OverlapReport { nodes, edges }
}
