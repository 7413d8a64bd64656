//! Discrete-time spreading activation over a [`SemanticNetwork`].
//!
//! At every step each node keeps a `retention` fraction of its activation and
//! sends the rest to its neighbors in proportion to edge weight (or equally,
//! when unweighted). Decay then scales every node by `1 - decay`, and values
//! below `suppress` are zeroed.
//!
//! Propagation is pull-based over the CSR rows, so each node sums its incoming
//! shares in ascending neighbor order and results are bit-reproducible.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::SemanticNetwork;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("unknown prime {0:?}")]
    UnknownPrime(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("network is empty")]
    Empty,
    #[error("network is disconnected")]
    Disconnected,
    #[error("node {0:?} has no edges but holds activation")]
    ZeroStrength(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    /// Fraction of activation a node keeps each step.
    pub retention: f64,
    pub decay: f64,
    pub suppress: f64,
    /// Activation placed on the prime; `None` means the node count.
    pub initial: Option<f64>,
    /// Number of steps; `None` means twice the unweighted diameter.
    pub iterations: Option<usize>,
    pub weighted: bool,
}

impl Default for ActivationParams {
    fn default() -> Self {
        ActivationParams {
            retention: 0.5,
            decay: 0.0,
            suppress: 0.0,
            initial: None,
            iterations: None,
            weighted: true,
        }
    }
}

/// Parameters with the automatic values filled in for a specific network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub retention: f64,
    pub decay: f64,
    pub suppress: f64,
    pub initial: f64,
    pub iterations: usize,
    pub weighted: bool,
}

impl ActivationParams {
    pub fn validate(&self) -> Result<(), ActivationError> {
        let bad = |m: String| Err(ActivationError::InvalidParams(m));
        if !(0.0..=1.0).contains(&self.retention) {
            return bad(format!("retention {} outside [0, 1]", self.retention));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return bad(format!("decay {} outside [0, 1]", self.decay));
        }
        if self.suppress.is_nan() || self.suppress < 0.0 {
            return bad(format!("suppress {} must be non-negative", self.suppress));
        }
        if let Some(a0) = self.initial {
            if !(a0 > 0.0 && a0.is_finite()) {
                return bad(format!("initial activation {a0} must be positive"));
            }
        }
        if self.iterations == Some(0) {
            return bad("iterations must be at least 1".into());
        }
        Ok(())
    }

    /// Fills in automatic values. Computing the default iteration count
    /// requires a connected network.
    pub fn resolve(&self, g: &SemanticNetwork) -> Result<ResolvedParams, ActivationError> {
        self.validate()?;
        let iterations = match self.iterations {
            Some(t) => t,
            None => (2 * diameter(g)?).max(1),
        };
        Ok(ResolvedParams {
            retention: self.retention,
            decay: self.decay,
            suppress: self.suppress,
            initial: self.initial.unwrap_or(g.node_count() as f64),
            iterations,
            weighted: self.weighted,
        })
    }
}

/// Precomputed transition factors for one network.
pub struct Propagator<'g> {
    net: &'g SemanticNetwork,
    /// For row `v`, entry `k` (neighbor `u`): fraction of `u`'s outflow that goes to `v`.
    incoming: Vec<f64>,
    offsets: Vec<usize>,
    has_edges: Vec<bool>,
}

impl<'g> Propagator<'g> {
    pub fn new(net: &'g SemanticNetwork, weighted: bool) -> Self {
        let n = net.node_count();
        let strength: Vec<f64> = (0..n)
            .map(|u| {
                if weighted {
                    net.strength(u) as f64
                } else {
                    net.degree(u) as f64
                }
            })
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut incoming = Vec::new();
        for v in 0..n {
            for (u, w) in net.neighbors(v) {
                let w = if weighted { w as f64 } else { 1.0 };
                incoming.push(w / strength[u]);
            }
            offsets.push(incoming.len());
        }
        let has_edges = (0..n).map(|u| net.degree(u) > 0).collect();
        Propagator {
            net,
            incoming,
            offsets,
            has_edges,
        }
    }

    pub fn network(&self) -> &SemanticNetwork {
        self.net
    }

    /// One update step from `current` into `next`. `outflow` is scratch space.
    pub fn step(
        &self,
        p: &ResolvedParams,
        current: &[f64],
        next: &mut [f64],
        outflow: &mut [f64],
    ) -> Result<(), ActivationError> {
        let spread = 1.0 - p.retention;
        for (u, (out, &a)) in outflow.iter_mut().zip(current).enumerate() {
            if a != 0.0 && spread != 0.0 && !self.has_edges[u] {
                return Err(ActivationError::ZeroStrength(self.net.label(u).to_string()));
            }
            *out = spread * a;
        }
        for v in 0..current.len() {
            let mut acc = p.retention * current[v];
            let row = self.net.neighbor_indices(v);
            for (k, &u) in row.iter().enumerate() {
                acc += outflow[u as usize] * self.incoming[self.offsets[v] + k];
            }
            next[v] = acc;
        }
        if p.decay != 0.0 {
            let keep = 1.0 - p.decay;
            next.iter_mut().for_each(|x| *x *= keep);
        }
        if p.suppress > 0.0 {
            next.iter_mut()
                .filter(|x| **x < p.suppress)
                .for_each(|x| *x = 0.0);
        }
        Ok(())
    }

    /// Final activation after `p.iterations` steps from node `prime`.
    pub fn run(&self, prime: usize, p: &ResolvedParams) -> Result<Vec<f64>, ActivationError> {
        self.run_with(prime, p, |_, _| {})
    }

    /// Like [`Propagator::run`], calling `observe(step, state)` after every step.
    pub fn run_with(
        &self,
        prime: usize,
        p: &ResolvedParams,
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<Vec<f64>, ActivationError> {
        let n = self.net.node_count();
        let mut cur = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut out = vec![0.0; n];
        cur[prime] = p.initial;
        for t in 0..p.iterations {
            self.step(p, &cur, &mut next, &mut out)?;
            std::mem::swap(&mut cur, &mut next);
            observe(t + 1, &cur);
        }
        Ok(cur)
    }
}

/// Final activation of every node after activating `prime`.
pub fn spread(
    g: &SemanticNetwork,
    prime: &str,
    p: &ActivationParams,
) -> Result<Vec<f64>, ActivationError> {
    let idx = g
        .index_of(prime)
        .ok_or_else(|| ActivationError::UnknownPrime(prime.to_string()))?;
    let resolved = p.resolve(g)?;
    Propagator::new(g, resolved.weighted).run(idx, &resolved)
}

/// Final activations, one column per prime, rows indexed like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub node_labels: Vec<String>,
    pub primes: Vec<String>,
    /// Column-major: column `j` occupies `data[j * rows .. (j + 1) * rows]`.
    data: Vec<f64>,
    pub params: ResolvedParams,
}

impl ActivationMatrix {
    pub fn from_columns(
        node_labels: Vec<String>,
        primes: Vec<String>,
        columns: Vec<Vec<f64>>,
        params: ResolvedParams,
    ) -> Self {
        assert_eq!(primes.len(), columns.len());
        assert!(columns.iter().all(|c| c.len() == node_labels.len()));
        ActivationMatrix {
            node_labels,
            primes,
            data: columns.concat(),
            params,
        }
    }

    pub fn rows(&self) -> usize {
        self.node_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.primes.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows() + row]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        let r = self.rows();
        self.data[col * r + row] = v;
    }

    pub fn column(&self, col: usize) -> &[f64] {
        let r = self.rows();
        &self.data[col * r..(col + 1) * r]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        let r = self.rows();
        &mut self.data[col * r..(col + 1) * r]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.cols()).map(|c| self.get(row, c)).collect()
    }

    pub fn prime_column(&self, prime: &str) -> Option<usize> {
        self.primes.iter().position(|p| p == prime)
    }

    /// CSV with a `node` column followed by one column per prime.
    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["node".to_string()];
        header.extend(self.primes.iter().cloned());
        out.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.cols() + 1);
        for r in 0..self.rows() {
            rec.clear();
            rec.push(self.node_labels[r].clone());
            rec.extend((0..self.cols()).map(|c| self.get(r, c).to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs one simulation per prime. All primes are checked before any work
/// starts; columns are computed in parallel and returned in input order.
pub fn spread_batch<S: AsRef<str> + Sync>(
    g: &SemanticNetwork,
    primes: &[S],
    p: &ActivationParams,
) -> Result<ActivationMatrix, ActivationError> {
    let idx: Vec<usize> = primes
        .iter()
        .map(|s| {
            g.index_of(s.as_ref())
                .ok_or_else(|| ActivationError::UnknownPrime(s.as_ref().to_string()))
        })
        .collect::<Result<_, _>>()?;
    let resolved = p.resolve(g)?;
    let prop = Propagator::new(g, resolved.weighted);
    let columns = idx
        .par_iter()
        .map(|&i| prop.run(i, &resolved))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ActivationMatrix::from_columns(
        g.labels().to_vec(),
        primes.iter().map(|s| s.as_ref().to_string()).collect(),
        columns,
        resolved,
    ))
}

const UNSEEN: u32 = u32::MAX;

/// BFS distances from `src`. Returns the last node dequeued (a farthest one)
/// and the eccentricity of `src`.
fn bfs(g: &SemanticNetwork, src: usize, dist: &mut [u32], parent: Option<&mut [u32]>) -> (usize, u32) {
    dist.fill(UNSEEN);
    let mut parent = parent;
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    let mut last = src;
    while let Some(u) = queue.pop_front() {
        last = u;
        for &v in g.neighbor_indices(u) {
            let v = v as usize;
            if dist[v] == UNSEEN {
                dist[v] = dist[u] + 1;
                if let Some(p) = parent.as_deref_mut() {
                    p[v] = u as u32;
                }
                queue.push_back(v);
            }
        }
    }
    (last, dist[last])
}

/// Exact unweighted diameter via a double sweep followed by iFUB
/// (iterative fringe upper bound) refinement from the sweep path's midpoint.
pub fn diameter(g: &SemanticNetwork) -> Result<usize, ActivationError> {
    let n = g.node_count();
    if n == 0 {
        return Err(ActivationError::Empty);
    }
    let mut dist = vec![UNSEEN; n];
    let mut parent = vec![UNSEEN; n];

    let start = (0..n).max_by_key(|&i| (g.degree(i), std::cmp::Reverse(i))).unwrap();
    let (a, _) = bfs(g, start, &mut dist, None);
    if dist.contains(&UNSEEN) {
        return Err(ActivationError::Disconnected);
    }
    let (b, ecc_a) = bfs(g, a, &mut dist, Some(&mut parent));
    let mut lower = ecc_a;

    let mut mid = b;
    for _ in 0..ecc_a / 2 {
        mid = parent[mid] as usize;
    }

    let (_, ecc_mid) = bfs(g, mid, &mut dist, None);
    lower = lower.max(ecc_mid);
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); ecc_mid as usize + 1];
    for (v, &d) in dist.iter().enumerate() {
        levels[d as usize].push(v);
    }

    let mut scratch = vec![UNSEEN; n];
    let mut i = ecc_mid;
    let mut upper = 2 * ecc_mid;
    while upper > lower && i > 0 {
        let fringe_max = levels[i as usize]
            .iter()
            .map(|&v| bfs(g, v, &mut scratch, None).1)
            .max()
            .unwrap_or(0);
        lower = lower.max(fringe_max);
        if lower > 2 * (i - 1) {
            break;
        }
        upper = 2 * (i - 1);
        i -= 1;
    }
    Ok(lower as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(edges: &[(&str, &str, u32)]) -> SemanticNetwork {
        SemanticNetwork::from_edges(Vec::<&str>::new(), edges.iter().copied()).unwrap()
    }

    fn params(t: usize, a0: f64) -> ActivationParams {
        ActivationParams {
            iterations: Some(t),
            initial: Some(a0),
            ..Default::default()
        }
    }

    #[test]
    fn two_node_single_step() {
        let g = net(&[("a", "b", 5)]);
        let v = spread(&g, "a", &params(1, 10.0)).unwrap();
        assert_eq!(v, vec![5.0, 5.0]);
    }

    #[test]
    fn triangle_two_steps() {
        let g = net(&[("A", "B", 4), ("B", "C", 4), ("A", "C", 4)]);
        let v = spread(&g, "A", &params(2, 9.0)).unwrap();
        assert_eq!(v, vec![3.375, 2.8125, 2.8125]);
    }

    #[test]
    fn unweighted_ignores_weights() {
        let g = net(&[("a", "b", 1), ("a", "c", 3)]);
        let mut p = params(1, 8.0);
        p.weighted = false;
        assert_eq!(spread(&g, "a", &p).unwrap(), vec![4.0, 2.0, 2.0]);
        p.weighted = true;
        assert_eq!(spread(&g, "a", &p).unwrap(), vec![4.0, 1.0, 3.0]);
    }

    #[test]
    fn decay_and_suppress() {
        let g = net(&[("a", "b", 1), ("a", "c", 3)]);
        let mut p = params(1, 8.0);
        p.decay = 0.5;
        assert_eq!(spread(&g, "a", &p).unwrap(), vec![2.0, 0.5, 1.5]);
        p.suppress = 1.0;
        assert_eq!(spread(&g, "a", &p).unwrap(), vec![2.0, 0.0, 1.5]);
    }

    #[test]
    fn defaults_use_node_count_and_twice_diameter() {
        let g = net(&[("a", "b", 1), ("b", "c", 1), ("c", "d", 1)]);
        let r = ActivationParams::default().resolve(&g).unwrap();
        assert_eq!(r.initial, 4.0);
        assert_eq!(r.iterations, 6);
        assert_eq!(r.retention, 0.5);
    }

    #[test]
    fn errors() {
        let g = net(&[("a", "b", 1)]);
        assert_eq!(
            spread(&g, "zzz", &params(1, 1.0)),
            Err(ActivationError::UnknownPrime("zzz".into()))
        );
        let mut p = params(1, 1.0);
        p.retention = 1.5;
        assert!(matches!(spread(&g, "a", &p), Err(ActivationError::InvalidParams(_))));
        assert!(matches!(spread(&g, "a", &params(0, 1.0)), Err(ActivationError::InvalidParams(_))));
        assert!(matches!(spread(&g, "a", &params(1, 0.0)), Err(ActivationError::InvalidParams(_))));

        let lonely = SemanticNetwork::from_edges(["x"], Vec::<(&str, &str, u32)>::new()).unwrap();
        assert_eq!(
            spread(&lonely, "x", &params(1, 1.0)),
            Err(ActivationError::ZeroStrength("x".into()))
        );
    }

    #[test]
    fn diameter_small_graphs() {
        let path = net(&[("a", "b", 1), ("b", "c", 1), ("c", "d", 1)]);
        assert_eq!(diameter(&path).unwrap(), 3);
        let names = ["a", "b", "c", "d", "e"];
        let mut k5 = Vec::new();
        for i in 0..5 {
            for j in i + 1..5 {
                k5.push((names[i], names[j], 1));
            }
        }
        assert_eq!(diameter(&net(&k5)).unwrap(), 1);
        let single = SemanticNetwork::from_edges(["x"], Vec::<(&str, &str, u32)>::new()).unwrap();
        assert_eq!(diameter(&single).unwrap(), 0);
        let split = net(&[("a", "b", 1), ("c", "d", 1)]);
        assert_eq!(diameter(&split), Err(ActivationError::Disconnected));
    }

    #[test]
    fn batch_with_duplicates_and_unknown() {
        let g = net(&[("a", "b", 2), ("b", "c", 1)]);
        let p = params(3, 3.0);
        let m = spread_batch(&g, &["b", "a", "b"], &p).unwrap();
        assert_eq!(m.cols(), 3);
        assert_eq!(m.column(0), m.column(2));
        assert_eq!(m.column(1), spread(&g, "a", &p).unwrap().as_slice());
        assert_eq!(
            spread_batch(&g, &["a", "nope"], &p).unwrap_err(),
            ActivationError::UnknownPrime("nope".into())
        );
    }

    #[test]
    fn matrix_csv() {
        let g = net(&[("a", "b", 1)]);
        let m = spread_batch(&g, &["a"], &params(1, 2.0)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "node,a\na,1\nb,1\n");
    }
}
