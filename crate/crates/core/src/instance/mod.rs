//! Graph, assignment and affinity data model.

mod format;

pub use format::{
    format_instance, format_sig, format_solution, parse_instance, parse_solution, read_instance,
    read_solution, write_instance, write_solution, Solution, SolveStatus,
};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Undirected multigraph stored as a dense symmetric count matrix.
///
/// `adj(i, i)` holds twice the number of self-loops at `i`, so that
/// `sum_ij adj(i, j) == 2m` holds uniformly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u64>,
    degrees: Vec<u64>,
    m: u64,
    neighbors: Vec<Vec<(usize, u64)>>,
}

impl Graph {
    /// Builds a graph from a row-major `n x n` adjacency matrix.
    pub fn from_adjacency(n: usize, adj: Vec<u64>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::Dimension(format!(
                "adjacency has {} entries, expected {}",
                adj.len(),
                n * n
            )));
        }
        for i in 0..n {
            if !adj[i * n + i].is_multiple_of(2) {
                return Err(Error::Invalid(format!(
                    "A[{i}][{i}] = {} is odd",
                    adj[i * n + i]
                )));
            }
            for j in (i + 1)..n {
                if adj[i * n + j] != adj[j * n + i] {
                    return Err(Error::Invalid(format!("adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        let degrees: Vec<u64> = (0..n).map(|i| adj[i * n..(i + 1) * n].iter().sum()).collect();
        let total: u64 = degrees.iter().sum();
        let neighbors = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && adj[i * n + j] > 0)
                    .map(|j| (j, adj[i * n + j]))
                    .collect()
            })
            .collect();
        Ok(Graph {
            n,
            adj,
            degrees,
            m: total / 2,
            neighbors,
        })
    }

    /// Builds a graph from 0-indexed `(i, j, count)` triples. For `i == j`
    /// the count is the number of self-loops. Repeated pairs accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut adj = vec![0u64; n * n];
        for &(i, j, c) in edges {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                adj[i * n + i] += 2 * c;
            } else {
                adj[i * n + j] += c;
                adj[j * n + i] += c;
            }
        }
        Self::from_adjacency(n, adj)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges, self-loops included.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn two_m(&self) -> u64 {
        2 * self.m
    }

    #[inline]
    pub fn adj(&self, i: usize, j: usize) -> u64 {
        self.adj[i * self.n + j]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> u64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn self_loops(&self, i: usize) -> u64 {
        self.adj(i, i) / 2
    }

    /// Neighbours of `i` other than `i` itself, with multiplicities.
    pub fn neighbors(&self, i: usize) -> &[(usize, u64)] {
        &self.neighbors[i]
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.degrees[i] == 0
    }

    /// Unordered pairs `i <= j` with a nonzero count, as `(i, j, count)`
    /// where `count` is the self-loop count when `i == j`.
    pub fn edge_list(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                let a = self.adj(i, j);
                if a > 0 {
                    out.push((i, j, if i == j { a / 2 } else { a }));
                }
            }
        }
        out
    }
}

/// Vertex-to-community labelling with labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("K must be at least 1".into()));
        }
        if let Some(&g) = labels.iter().find(|&&g| g >= k) {
            return Err(Error::InvalidGroup { group: g, k });
        }
        Ok(Assignment { labels, k })
    }

    /// All vertices in group 0.
    pub fn uniform(n: usize, k: usize) -> Self {
        Assignment {
            labels: vec![0; n],
            k: k.max(1),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn set(&mut self, i: usize, g: usize) {
        debug_assert!(g < self.k);
        self.labels[i] = g;
    }

    /// Returns a copy with `k` raised to `k` if smaller.
    pub fn with_k(&self, k: usize) -> Self {
        Assignment {
            labels: self.labels.clone(),
            k: self.k.max(k),
        }
    }

    /// Restricted-growth check: the first vertex is in group 0 and each
    /// vertex uses at most one more than the largest label seen before it.
    pub fn is_canonical(&self) -> bool {
        let mut next = 0usize;
        for &g in &self.labels {
            if g > next {
                return false;
            }
            if g == next {
                next += 1;
            }
        }
        true
    }

    /// Relabels groups by order of first occurrence.
    pub fn canonicalize(&self) -> Assignment {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&g| {
                if map[g] == usize::MAX {
                    map[g] = next;
                    next += 1;
                }
                map[g]
            })
            .collect();
        Assignment { labels, k: self.k }
    }

    /// True when both labelings induce the same set partition.
    pub fn same_partition(&self, other: &Assignment) -> bool {
        self.n() == other.n() && self.canonicalize().labels == other.canonicalize().labels
    }

    /// Number of nonempty groups.
    pub fn groups_used(&self) -> usize {
        let mut seen = vec![false; self.k];
        self.labels.iter().for_each(|&g| seen[g] = true);
        seen.into_iter().filter(|&s| s).count()
    }
}

/// Iterator over every canonical (restricted-growth) labelling of `n`
/// vertices with at most `k` groups, in lexicographic order.
pub struct CanonicalAssignments {
    n: usize,
    k: usize,
    current: Option<Vec<usize>>,
}

pub fn canonical_assignments(n: usize, k: usize) -> CanonicalAssignments {
    CanonicalAssignments {
        n,
        k,
        current: if k == 0 { None } else { Some(vec![0; n]) },
    }
}

impl Iterator for CanonicalAssignments {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let cur = self.current.take()?;
        let out = Assignment {
            labels: cur.clone(),
            k: self.k,
        };
        // advance: rightmost position that can be incremented under the
        // restricted-growth rule, then reset the tail to zero.
        let mut labels = cur;
        let mut prefix_max = vec![0usize; self.n];
        let mut mx = 0;
        for (i, &g) in labels.iter().enumerate() {
            prefix_max[i] = mx;
            mx = mx.max(g);
        }
        for i in (1..self.n).rev() {
            let limit = (prefix_max[i] + 1).min(self.k - 1);
            if labels[i] < limit {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|g| *g = 0);
                self.current = Some(labels);
                return Some(out);
            }
        }
        Some(out)
    }
}

/// Symmetric nonnegative `k x k` matrix of block rate multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    k: usize,
    data: Vec<T>,
}

impl<T: Real> AffinityMatrix<T> {
    pub fn new(k: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != k * k {
            return Err(Error::Dimension(format!(
                "affinity has {} entries, expected {}",
                data.len(),
                k * k
            )));
        }
        for r in 0..k {
            for s in 0..k {
                let v = data[r * k + s];
                if v.is_nan() || v < T::zero() {
                    return Err(Error::Invalid(format!("omega[{r}][{s}] = {v} is negative")));
                }
                if v != data[s * k + r] {
                    return Err(Error::Invalid(format!("omega not symmetric at ({r}, {s})")));
                }
            }
        }
        Ok(AffinityMatrix { k, data })
    }

    pub fn constant(k: usize, value: T) -> Self {
        AffinityMatrix {
            k,
            data: vec![value; k * k],
        }
    }

    pub fn zeros(k: usize) -> Self {
        Self::constant(k, T::zero())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize) -> T {
        self.data[r * self.k + s]
    }

    /// Sets both `(r, s)` and `(s, r)`.
    pub fn set(&mut self, r: usize, s: usize, v: T) {
        self.data[r * self.k + s] = v;
        self.data[s * self.k + r] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_entry(&self) -> T {
        self.data.iter().copied().fold(T::zero(), T::max)
    }

    pub fn cast<U: Real>(&self) -> AffinityMatrix<U> {
        AffinityMatrix {
            k: self.k,
            data: self.data.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// A graph together with the community count to fit and, for generated
/// instances, the planted parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub k: usize,
    pub ground_truth: Option<Assignment>,
    pub gen_omega: Option<AffinityMatrix<f64>>,
    pub seed: Option<u64>,
}

impl Instance {
    pub fn new(graph: Graph, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("K must be at least 1".into()));
        }
        Ok(Instance {
            graph,
            k,
            ground_truth: None,
            gen_omega: None,
            seed: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("K must be at least 1".into()));
        }
        if let Some(t) = &self.ground_truth {
            if t.n() != self.graph.n() {
                return Err(Error::Dimension(format!(
                    "ground truth has {} labels for {} vertices",
                    t.n(),
                    self.graph.n()
                )));
            }
            if t.k() > self.k {
                return Err(Error::Invalid(format!(
                    "ground truth uses K = {} > instance K = {}",
                    t.k(),
                    self.k
                )));
            }
        }
        if let Some(w) = &self.gen_omega {
            if w.k() != self.k {
                return Err(Error::Dimension(format!(
                    "generating omega is {}x{}, instance K = {}",
                    w.k(),
                    w.k(),
                    self.k
                )));
            }
        }
        Ok(())
    }
}
