//! Provably optimal maximum-likelihood labelling by depth-first
//! branch-and-bound over restricted-growth strings.
//!
//! A node fixes the labels of a prefix of the vertex order. Its bound adds,
//! for every block, the minimum over `w in [OMEGA_LOWER, 2m rho]` of the
//! block's assigned pair costs (closed form at the clamped stationary
//! point) and, for every pair that still touches an unassigned vertex, the
//! global minimum `Mlow_ij` of its cost. Both parts only grow as vertices
//! are assigned, so bounds are monotone along every branch.

mod estep;

pub use estep::{solve_estep_exact, EstepConfig, EstepResult};

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::em::{self, EmConfig, EmVariant};
use crate::error::{Error, Result};
use crate::instance::{AffinityMatrix, Assignment, Graph, Instance, SolveStatus};
use crate::likelihood::{constant_term, m_step, profile_objective, BlockStats};
use crate::relaxation::{build_bounds, BoundSet, PairTerm};
use crate::rng::{derive_seed, STREAM_WARM_START};
use crate::scalar::Real;

/// Absolute pruning tolerance.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrder {
    /// Highest degree first, ties by index.
    DegreeDescending,
    Input,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub time_limit: Option<Duration>,
    pub vertex_order: VertexOrder,
    /// Restrict the search to canonical labellings.
    pub use_sbc: bool,
    /// Seed the incumbent with one EM-LS2 run.
    pub warm_start: bool,
    pub seed: u64,
    pub threads: usize,
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: Some(Duration::from_secs(60)),
            vertex_order: VertexOrder::DegreeDescending,
            use_sbc: true,
            warm_start: true,
            seed: 0,
            threads: 1,
            trace: false,
        }
    }
}

/// One progress sample; emitted whenever the incumbent improves and once at
/// the end of the search.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TraceEvent {
    pub elapsed_s: f64,
    pub incumbent: f64,
    pub bound: f64,
    pub nodes: u64,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub assignment: Assignment,
    pub omega: AffinityMatrix<T>,
    /// Negative log-likelihood, constant included.
    pub objective: T,
    pub bound: T,
    /// `(UB - LB) / UB`.
    pub gap: T,
    pub status: SolveStatus,
    pub nodes: u64,
    pub wall_time: Duration,
    pub trace: Vec<TraceEvent>,
}

/// Read-only data shared by every search task.
struct Problem<'a, T> {
    graph: &'a Graph,
    k: usize,
    order: Vec<usize>,
    /// `tail[d]`: half the sum of `Mlow` over ordered pairs with an
    /// endpoint at position `>= d`.
    tail: Vec<T>,
    two_m: u64,
    lo: T,
    hi: T,
    constant: T,
    use_sbc: bool,
}

impl<T: Real> Problem<'_, T> {
    /// Lower bound on the final cost of every block given partial stats.
    fn assigned_cost(&self, st: &BlockStats) -> T {
        let two_m = T::from_count(self.two_m);
        let mut c = T::zero();
        for r in 0..self.k {
            for s in 0..self.k {
                let e = st.edges(r, s);
                if e == 0 {
                    continue;
                }
                let kk = T::from_count(st.kappa(r)) * T::from_count(st.kappa(s));
                let term = PairTerm::new(T::from_count(e), kk / two_m);
                c += term.minimum_on(self.lo, self.hi);
            }
        }
        c * T::lit(0.5)
    }

    fn node_bound(&self, st: &BlockStats, depth: usize) -> T {
        self.assigned_cost(st) + self.tail[depth] - self.constant
    }

    fn candidates(&self, used: usize) -> usize {
        if self.use_sbc {
            (used + 1).min(self.k)
        } else {
            self.k
        }
    }
}

struct Shared<T> {
    best_bits: AtomicU64,
    best: Mutex<Option<(T, Vec<usize>)>>,
    nodes: AtomicU64,
    aborted: AtomicBool,
    trace: Option<Mutex<Vec<TraceEvent>>>,
    start: Instant,
    deadline: Option<Instant>,
    root_bound: f64,
}

impl<T: Real> Shared<T> {
    fn incumbent(&self) -> T {
        T::lit(f64::from_bits(self.best_bits.load(Ordering::Relaxed)))
    }

    fn offer(&self, value: T, labels: &[usize]) {
        let mut best = self.best.lock().expect("incumbent lock");
        let better = best.as_ref().is_none_or(|(v, _)| value < *v);
        if better {
            *best = Some((value, labels.to_vec()));
            self.best_bits.store(value.as_f64().to_bits(), Ordering::Relaxed);
            if let Some(tr) = &self.trace {
                tr.lock().expect("trace lock").push(TraceEvent {
                    elapsed_s: self.start.elapsed().as_secs_f64(),
                    incumbent: value.as_f64(),
                    bound: self.root_bound,
                    nodes: self.nodes.load(Ordering::Relaxed),
                });
            }
        }
    }

    fn out_of_time(&self) -> bool {
        if self.aborted.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                self.aborted.store(true, Ordering::Relaxed);
                return true;
            }
        }
        false
    }
}

/// Mutable per-task search state.
struct Task<'p, 'g, T> {
    p: &'p Problem<'g, T>,
    shared: &'p Shared<T>,
    stats: BlockStats,
    /// labels by vertex id; `usize::MAX` when unassigned
    labels: Vec<usize>,
    links: Vec<u64>,
    steps: u64,
}

impl<T: Real> Task<'_, '_, T> {
    fn place(&mut self, v: usize, r: usize) {
        let g = self.p.graph;
        self.links.iter_mut().for_each(|x| *x = 0);
        for &(u, c) in g.neighbors(v) {
            let l = self.labels[u];
            if l != usize::MAX {
                self.links[l] += c;
            }
        }
        self.stats.adjust(&self.links, g.adj(v, v), g.degree(v), r, true);
        self.labels[v] = r;
    }

    fn unplace(&mut self, v: usize, r: usize) {
        let g = self.p.graph;
        self.labels[v] = usize::MAX;
        self.links.iter_mut().for_each(|x| *x = 0);
        for &(u, c) in g.neighbors(v) {
            let l = self.labels[u];
            if l != usize::MAX {
                self.links[l] += c;
            }
        }
        self.stats.adjust(&self.links, g.adj(v, v), g.degree(v), r, false);
    }

    fn prunable(&self, bound: T) -> bool {
        bound >= self.shared.incumbent() - T::lit(PRUNE_TOL)
    }

    /// Explores the subtree below a node at `depth` (its prefix is already
    /// placed). Returns `None` when the subtree was fully resolved, or a
    /// lower bound on the unexplored remainder when the search was cut off.
    fn explore(&mut self, depth: usize, used: usize, bound: T) -> Option<T> {
        let p = self.p;
        if depth == p.order.len() {
            let labels = self.labels.clone();
            self.shared.offer(bound, &labels);
            return None;
        }
        self.steps += 1;
        if self.steps.is_multiple_of(256) && self.shared.out_of_time() {
            return Some(bound);
        }
        let v = p.order[depth];
        let n_cand = p.candidates(used);
        let mut open: Option<T> = None;
        for r in 0..n_cand {
            self.place(v, r);
            let child_used = used.max(r + 1);
            let child_bound = p.node_bound(&self.stats, depth + 1).max(bound);
            let branched = n_cand > 1;
            if !self.prunable(child_bound) {
                if open.is_some() {
                    open = Some(open.unwrap().min(child_bound));
                } else {
                    if branched {
                        self.shared.nodes.fetch_add(1, Ordering::Relaxed);
                    }
                    if let Some(lb) = self.explore(depth + 1, child_used, child_bound) {
                        open = Some(lb);
                    }
                }
            }
            self.unplace(v, r);
        }
        open
    }
}

fn vertex_order(g: &Graph, order: VertexOrder) -> Vec<usize> {
    let mut v: Vec<usize> = (0..g.n()).collect();
    if order == VertexOrder::DegreeDescending {
        v.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
    }
    v
}

fn tail_bounds<T: Real>(g: &Graph, bounds: &BoundSet<T>, order: &[usize]) -> Vec<T> {
    let n = g.n();
    let mut pos = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let mut bucket = vec![T::zero(); n + 1];
    for i in 0..n {
        for j in 0..n {
            bucket[pos[i].max(pos[j])] += T::lit(0.5) * bounds.mlow(i, j);
        }
    }
    let mut tail = vec![T::zero(); n + 1];
    for d in (0..n).rev() {
        tail[d] = tail[d + 1] + bucket[d];
    }
    tail
}

pub fn solve_exact<T: Real>(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let g = &inst.graph;
    if g.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let k = inst.k;
    let bounds: BoundSet<T> = build_bounds(g)?;
    let order = vertex_order(g, cfg.vertex_order);
    let problem = Problem {
        graph: g,
        k,
        tail: tail_bounds(g, &bounds, &order),
        order,
        two_m: g.two_m(),
        lo: bounds.omega_lower,
        hi: bounds.omega_upper,
        constant: constant_term(g)?,
        use_sbc: cfg.use_sbc,
    };
    let root_stats = BlockStats::zeros(k);
    let root_bound = problem.node_bound(&root_stats, 0);

    let shared = Shared {
        best_bits: AtomicU64::new(f64::INFINITY.to_bits()),
        best: Mutex::new(None),
        nodes: AtomicU64::new(1),
        aborted: AtomicBool::new(false),
        trace: cfg.trace.then(|| Mutex::new(Vec::new())),
        start,
        deadline: cfg.time_limit.map(|d| start + d),
        root_bound: root_bound.as_f64(),
    };

    if cfg.warm_start && k > 1 {
        let em_cfg = EmConfig {
            variant: EmVariant::Ls2,
            trials: 1,
            seed: derive_seed(cfg.seed, STREAM_WARM_START, 0),
            threads: 1,
            ..EmConfig::default()
        };
        let warm = em::run_single::<T>(inst, &em_cfg, 0)?;
        shared.offer(warm.objective, warm.assignment.labels());
    }

    let open = if cfg.threads <= 1 {
        let mut task = Task {
            p: &problem,
            shared: &shared,
            stats: root_stats,
            labels: vec![usize::MAX; g.n()],
            links: vec![0; k],
            steps: 0,
        };
        task.explore(0, 0, root_bound)
    } else {
        parallel_search(&problem, &shared, cfg.threads)?
    };

    let (best_value, best_labels) = shared
        .best
        .lock()
        .expect("incumbent lock")
        .clone()
        .expect("search always reaches a leaf or has a warm start");
    let assignment = Assignment::new(best_labels, k)?.canonicalize();
    let objective: T = profile_objective(g, &assignment)?;
    debug_assert!((objective - best_value).abs() < T::lit(1e-6) * (T::one() + objective.abs()));
    let omega = m_step(g, &assignment)?;
    let (status, bound) = match open {
        None => (SolveStatus::Optimal, objective),
        Some(lb) => (SolveStatus::TimeLimit, lb.min(objective)),
    };
    let gap = if status == SolveStatus::Optimal || objective == T::zero() {
        T::zero()
    } else {
        (objective - bound) / objective
    };
    let nodes = shared.nodes.load(Ordering::Relaxed);
    let mut trace = shared.trace.map(|t| t.into_inner().expect("trace lock")).unwrap_or_default();
    if cfg.trace {
        trace.push(TraceEvent {
            elapsed_s: start.elapsed().as_secs_f64(),
            incumbent: objective.as_f64(),
            bound: bound.as_f64(),
            nodes,
        });
    }
    Ok(SolveReport {
        assignment,
        omega,
        objective,
        bound,
        gap,
        status,
        nodes,
        wall_time: start.elapsed(),
        trace,
    })
}

/// Splits the tree into prefixes deep enough to keep `threads` workers
/// busy and explores them on a dedicated pool, sharing the incumbent.
fn parallel_search<T: Real>(problem: &Problem<'_, T>, shared: &Shared<T>, threads: usize) -> Result<Option<T>> {
    let n = problem.order.len();
    let k = problem.k;
    // breadth-first expansion of prefixes (labels in order positions)
    let mut frontier: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    while frontier.len() < threads * 8 && frontier[0].0.len() < n {
        let mut next = Vec::new();
        for (prefix, used) in frontier {
            for r in 0..problem.candidates(used) {
                let mut p = prefix.clone();
                p.push(r);
                next.push((p, used.max(r + 1)));
            }
        }
        frontier = next;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let g = problem.graph;
    let results: Vec<Option<T>> = pool.install(|| {
        use rayon::prelude::*;
        frontier
            .par_iter()
            .map(|(prefix, used)| {
                let mut task = Task {
                    p: problem,
                    shared,
                    stats: BlockStats::zeros(k),
                    labels: vec![usize::MAX; g.n()],
                    links: vec![0; k],
                    steps: 0,
                };
                for (d, &r) in prefix.iter().enumerate() {
                    task.place(problem.order[d], r);
                }
                let depth = prefix.len();
                let bound = problem.node_bound(&task.stats, depth);
                shared.nodes.fetch_add(1, Ordering::Relaxed);
                if task.prunable(bound) {
                    None
                } else if shared.out_of_time() {
                    Some(bound)
                } else {
                    task.explore(depth, *used, bound)
                }
            })
            .collect()
    });
    Ok(results.into_iter().flatten().reduce(T::min))
}
