//! Simple undirected graphs and the random d-regular instance generator.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Maximum number of full restarts of the pairing sampler.
pub const MAX_RESTARTS: usize = 10_000;

/// Simple undirected graph with 0-based node indices.
///
/// Edges are stored once, canonically as `(u, v)` with `u < v`, in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list, canonicalizing each pair.
    ///
    /// Rejects self-loops, duplicate edges and out-of-range indices.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, edges: canon, adj })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    /// Returns `Some(d)` if every node has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edge density `2|E| / (n(n-1))`. Zero for graphs with fewer than two nodes.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension(format!("permutation of length {} for n = {}", perm.len(), self.n)));
        }
        Graph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    /// Writes the edge list: header `n m`, then one `u v` line per edge.
    pub fn write_edgelist<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{} {}", self.n, self.edges.len())?;
        for &(u, v) in &self.edges {
            writeln!(sink, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn to_edgelist_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_edgelist(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    /// Parses the format produced by [`Graph::write_edgelist`].
    pub fn read_edgelist<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines().enumerate();
        let parse_pair = |lineno: usize, line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                let tok = it.next().ok_or_else(|| Error::Parse { line: lineno, msg: format!("missing {what}") })?;
                tok.parse()
                    .map_err(|_| Error::Parse { line: lineno, msg: format!("invalid {what} {tok:?}") })
            };
            let a = next("first field")?;
            let b = next("second field")?;
            if it.next().is_some() {
                return Err(Error::Parse { line: lineno, msg: "trailing fields".into() });
            }
            Ok((a, b))
        };

        let (n, m) = loop {
            match lines.next() {
                None => return Err(Error::Parse { line: 1, msg: "missing header".into() }),
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break parse_pair(i + 1, &line)?;
                }
            }
        };

        let mut edges = Vec::with_capacity(m);
        let mut last_line = 1;
        for (i, line) in lines {
            let line = line.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            last_line = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (u, v) = parse_pair(i + 1, &line)?;
            if u >= n || v >= n || u == v {
                return Err(Error::Parse { line: i + 1, msg: format!("invalid edge ({u}, {v}) for n = {n}") });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, edges).map_err(|e| Error::Parse { line: last_line, msg: e.to_string() })
    }
}

fn check_regular_params(n: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDegree { n, d, reason: "degree must be positive" });
    }
    if d >= n {
        return Err(Error::InvalidDegree { n, d, reason: "degree must be smaller than n" });
    }
    if !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidDegree { n, d, reason: "n * d must be even" });
    }
    Ok(())
}

/// Samples a simple d-regular graph on `n` nodes, seeded.
pub fn generate_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_regular_with(n, d, &mut rng)
}

/// Samples a simple d-regular graph using the caller's RNG.
///
/// Stubs are shuffled and paired; pairs that would form a self-loop or a
/// multi-edge are returned to the pool and re-shuffled. When the remaining
/// stubs admit no valid pair the whole attempt restarts.
pub fn generate_regular_with<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Graph> {
    check_regular_params(n, d)?;
    for _ in 0..MAX_RESTARTS {
        if let Some(edges) = try_pairing(n, d, rng) {
            return Graph::new(n, edges);
        }
    }
    Err(Error::SamplerExhausted { n, d, attempts: MAX_RESTARTS })
}

fn try_pairing<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover = Vec::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && edges.insert((u, v)) {
                continue;
            }
            leftover.push(u);
            leftover.push(v);
        }
        if !leftover.is_empty() && !has_valid_pair(&leftover, &edges) {
            return None;
        }
        stubs = leftover;
    }
    let mut out: Vec<_> = edges.into_iter().collect();
    out.sort_unstable();
    Some(out)
}

fn has_valid_pair(stubs: &[usize], edges: &HashSet<(usize, usize)>) -> bool {
    let mut nodes: Vec<usize> = stubs.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    for (i, &u) in nodes.iter().enumerate() {
        for &v in &nodes[i + 1..] {
            if !edges.contains(&(u, v)) {
                return true;
            }
        }
    }
    false
}
