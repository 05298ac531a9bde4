//! Directed communication graphs.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts made by [`gen_geometric`] before giving up.
pub const GEOMETRIC_ATTEMPTS: usize = 100;
/// Relative margin added to the default geometric radius.
pub const RADIUS_MARGIN: f64 = 0.1;

/// Strongly connected directed graph; an edge `(i, j)` means `i` transmits to `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct DirectedGraph {
    n: usize,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    diameter: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphFile> for DirectedGraph {
    type Error = Error;
    fn try_from(f: GraphFile) -> Result<Self> {
        DirectedGraph::new(f.n, &f.edges)
    }
}

impl From<DirectedGraph> for GraphFile {
    fn from(g: DirectedGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges(),
        }
    }
}

impl DirectedGraph {
    /// Builds and validates a graph; self loops and repeated edges are ignored.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a graph needs at least one node".into()));
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) outside {n} nodes")));
            }
            if i != j {
                out_adj[i].push(j);
                in_adj[j].push(i);
            }
        }
        for adj in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
        let mut g = Self {
            n,
            out_adj,
            in_adj,
            diameter: 0,
        };
        g.diameter = g.compute_diameter().ok_or(Error::NotStronglyConnected)?;
        Ok(g)
    }

    /// Every ordered pair connected.
    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Self::new(n, &edges)
    }

    /// One-way cycle `0 → 1 → … → n−1 → 0`.
    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| self.out_adj[i].iter().map(move |&j| (i, j))).collect()
    }

    fn compute_diameter(&self) -> Option<usize> {
        let mut diam = 0;
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            dist.fill(usize::MAX);
            dist[s] = 0;
            queue.push_back(s);
            let mut reached = 1;
            while let Some(u) = queue.pop_front() {
                for &v in &self.out_adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        diam = diam.max(dist[v]);
                        reached += 1;
                        queue.push_back(v);
                    }
                }
            }
            if reached < self.n {
                return None;
            }
        }
        Some(diam)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Longest shortest directed path.
pub fn diameter(g: &DirectedGraph) -> usize {
    g.diameter()
}

/// Bidirectional path `0 – 1 – … – n−1`.
pub fn gen_chain(n: usize) -> Result<DirectedGraph> {
    let edges: Vec<(usize, usize)> = (1..n).flat_map(|i| [(i - 1, i), (i, i - 1)]).collect();
    DirectedGraph::new(n, &edges)
}

/// `2√2·√(ln n / n)` enlarged by [`RADIUS_MARGIN`].
pub fn default_radius(n: usize) -> f64 {
    let nf = n.max(2) as f64;
    2.0 * 2f64.sqrt() * (nf.ln() / nf).sqrt() * (1.0 + RADIUS_MARGIN)
}

/// Random geometric graph: nodes uniform in the unit square, bidirectional
/// edges between nodes within `radius`, resampled until connected.
pub fn gen_geometric<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Result<DirectedGraph> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if n == 1 {
        return DirectedGraph::new(1, &[]);
    }
    for _ in 0..GEOMETRIC_ATTEMPTS {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                if dx * dx + dy * dy <= radius * radius {
                    edges.push((i, j));
                    edges.push((j, i));
                }
            }
        }
        match DirectedGraph::new(n, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::NotStronglyConnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed {
        attempts: GEOMETRIC_ATTEMPTS,
    })
}
