//! Simulated network: topologies, minimum-depth spanning trees, the tree
//! vector-sum, and the conversion of latency into a count of inputs.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;
use crate::vector::Vector;

/// Undirected node graph with a per-hop one-way latency (ms) and a
/// system-wide arrival rate (inputs per ms).
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    k: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    pub latency: f64,
    pub rate: f64,
}

impl Topology {
    pub fn new(k: usize, edges: Vec<(usize, usize)>, latency: f64, rate: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Topology("need at least one node".into()));
        }
        if !(latency >= 0.0) || !latency.is_finite() {
            return Err(Error::Topology(format!("latency must be >= 0, got {latency}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Topology(format!("rate must be > 0, got {rate}")));
        }
        let mut adjacency = vec![Vec::new(); k];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= k || v >= k {
                return Err(Error::Topology(format!("edge ({u}, {v}) outside 0..{k}")));
            }
            if u == v {
                return Err(Error::Topology(format!("self-loop at node {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !adjacency[e.0].contains(&e.1) {
                adjacency[e.0].push(e.1);
                adjacency[e.1].push(e.0);
                canonical.push(e);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        canonical.sort_unstable();
        Ok(Topology {
            k,
            edges: canonical,
            adjacency,
            latency,
            rate,
        })
    }

    /// Node 0 joined to every other node.
    pub fn star(k: usize, latency: f64, rate: f64) -> Result<Self> {
        Topology::new(k, (1..k).map(|i| (0, i)).collect(), latency, rate)
    }

    /// `0 – 1 – … – (k−1)`.
    pub fn path(k: usize, latency: f64, rate: f64) -> Result<Self> {
        Topology::new(k, (1..k).map(|i| (i - 1, i)).collect(), latency, rate)
    }

    /// Complete `d`-ary tree in heap order: the parent of `i` is `(i−1)/d`.
    pub fn dary_tree(k: usize, d: usize, latency: f64, rate: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Topology("arity must be >= 1".into()));
        }
        Topology::new(k, (1..k).map(|i| ((i - 1) / d, i)).collect(), latency, rate)
    }

    pub fn complete(k: usize, latency: f64, rate: f64) -> Result<Self> {
        let edges = (0..k)
            .flat_map(|u| (u + 1..k).map(move |v| (u, v)))
            .collect();
        Topology::new(k, edges, latency, rate)
    }

    /// Random connected graph: a random recursive tree plus each remaining
    /// pair with probability `extra_edge_prob`.
    pub fn random_connected(
        k: usize,
        extra_edge_prob: f64,
        latency: f64,
        rate: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = (1..k).map(|i| (rng.below(i), i)).collect();
        for u in 0..k {
            for v in u + 1..k {
                if rng.bernoulli(extra_edge_prob) {
                    edges.push((u, v));
                }
            }
        }
        Topology::new(k, edges, latency, rate)
    }

    /// Parses the plain-text format: first line `k`, then one `u v` edge
    /// per line. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, latency: f64, rate: f64) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Topology("empty topology file".into()))?;
        let k: usize = first
            .parse()
            .map_err(|_| Error::Topology(format!("bad node count {first:?}")))?;
        let mut edges = Vec::new();
        for (no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [u, v] => u.parse::<usize>().ok().zip(v.parse::<usize>().ok()),
                _ => None,
            };
            let edge = parsed
                .ok_or_else(|| Error::Topology(format!("line {}: expected \"u v\", got {line:?}", no + 1)))?;
            edges.push(edge);
        }
        Topology::new(k, edges, latency, rate)
    }

    /// Inverse of [`Topology::parse`] (latency and rate are not part of the
    /// file format).
    pub fn format(&self) -> String {
        let mut out = format!("{}\n", self.k);
        for (u, v) in &self.edges {
            writeln!(out, "{u} {v}").expect("write to string");
        }
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Canonical edge list, each edge as `(min, max)`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of `node` in ascending order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    fn bfs_distances(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.k];
        let mut queue = VecDeque::from([root]);
        dist[root] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }
}

/// Rooted minimum-depth (BFS) spanning tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    level: Vec<usize>,
    depth: usize,
    /// Nodes sorted by decreasing level, then ascending id.
    bottom_up: Vec<usize>,
}

/// BFS tree from `root`; each node's parent is its lowest-id neighbour one
/// level closer to the root.
pub fn build_tree(topology: &Topology, root: usize) -> Result<SpanningTree> {
    let k = topology.k();
    if root >= k {
        return Err(Error::Topology(format!("root {root} outside 0..{k}")));
    }
    let dist = topology.bfs_distances(root);
    let level: Vec<usize> = dist
        .iter()
        .enumerate()
        .map(|(node, d)| d.ok_or_else(|| Error::Topology(format!("graph is disconnected: node {node} unreachable from root {root}"))))
        .collect::<Result<_>>()?;
    let mut parent = vec![None; k];
    let mut children = vec![Vec::new(); k];
    for node in 0..k {
        if node == root {
            continue;
        }
        let p = *topology
            .neighbors(node)
            .iter()
            .find(|&&v| level[v] + 1 == level[node])
            .expect("a BFS predecessor exists");
        parent[node] = Some(p);
        children[p].push(node);
    }
    let depth = level.iter().copied().max().unwrap_or(0);
    let mut bottom_up: Vec<usize> = (0..k).collect();
    bottom_up.sort_by_key(|&n| (std::cmp::Reverse(level[n]), n));
    Ok(SpanningTree {
        root,
        parent,
        children,
        level,
        depth,
        bottom_up,
    })
}

impl SpanningTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn k(&self) -> usize {
        self.parent.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Children of `node` in ascending id.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Distance of `node` from the root.
    pub fn level(&self, node: usize) -> usize {
        self.level[node]
    }
}

/// Outcome of one simulated vector-sum.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSum {
    pub sum: Vector,
    /// The value each node holds after the down-sweep.
    pub per_node: Vec<Vector>,
    pub up_messages: usize,
    pub down_messages: usize,
}

impl VectorSum {
    pub fn messages(&self) -> usize {
        self.up_messages + self.down_messages
    }
}

/// All-reduce over the tree. Each node adds its children's subtree sums in
/// ascending id and then its own vector, and sends the result to its
/// parent; the root's total is then broadcast back down every edge.
pub fn vector_sum(tree: &SpanningTree, per_node: &[Vector]) -> Result<VectorSum> {
    let k = tree.k();
    check_dim(k, per_node.len())?;
    let dim = per_node[0].dim();
    for v in per_node {
        check_dim(dim, v.dim())?;
    }
    let mut subtree: Vec<Option<Vector>> = vec![None; k];
    let mut up_messages = 0;
    for &node in &tree.bottom_up {
        let mut acc: Option<Vector> = None;
        for &c in tree.children(node) {
            let child = subtree[c].take().expect("children are reduced first");
            match &mut acc {
                Some(a) => a.add_assign(&child)?,
                None => acc = Some(child),
            }
        }
        let acc = match acc {
            Some(mut a) => {
                a.add_assign(&per_node[node])?;
                a
            }
            None => per_node[node].clone(),
        };
        if tree.parent(node).is_some() {
            up_messages += 1;
        }
        subtree[node] = Some(acc);
    }
    let sum = subtree[tree.root()].take().expect("root reduced last");
    let mut held: Vec<Option<Vector>> = vec![None; k];
    let mut down_messages = 0;
    held[tree.root()] = Some(sum.clone());
    for &node in tree.bottom_up.iter().rev() {
        let value = held[node].clone().expect("parents receive first");
        for &c in tree.children(node) {
            held[c] = Some(value.clone());
            down_messages += 1;
        }
    }
    Ok(VectorSum {
        sum,
        per_node: held.into_iter().map(|v| v.expect("every node reached")).collect(),
        up_messages,
        down_messages,
    })
}

/// Duration of one vector-sum: `2 · depth · ℓ` (one hop per level each way).
pub fn vector_sum_time(tree: &SpanningTree, latency: f64) -> f64 {
    2.0 * tree.depth() as f64 * latency
}

/// Inputs arriving during one vector-sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu {
    /// `r · vector_sum_time`, real-valued.
    pub raw: f64,
    /// `⌈raw⌉`.
    pub ceil: u64,
    /// `ceil` rounded up to a multiple of `k`.
    pub aligned: u64,
}

pub fn compute_mu(tree: &SpanningTree, latency: f64, rate: f64) -> Result<Mu> {
    if !(rate > 0.0) {
        return Err(Error::Topology(format!("rate must be > 0, got {rate}")));
    }
    if !(latency >= 0.0) {
        return Err(Error::Topology(format!("latency must be >= 0, got {latency}")));
    }
    let raw = rate * vector_sum_time(tree, latency);
    let ceil = raw.ceil() as u64;
    let k = tree.k() as u64;
    Ok(Mu {
        raw,
        ceil,
        aligned: ceil.div_ceil(k) * k,
    })
}
