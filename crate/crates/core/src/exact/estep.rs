//! Globally optimal E-step: with the affinities fixed, find the labelling
//! minimising `1/2 sum_ij f_ij(omega_{g_i g_j})` over all `K^n` labellings.
//!
//! Labels are distinguishable once the affinities are fixed, so no symmetry
//! breaking applies. Vertices are branched in input order with labels in
//! ascending order, and only strict improvements replace the incumbent, so
//! ties resolve to the lexicographically first optimum.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::{AffinityMatrix, Assignment, Instance};
use crate::relaxation::PairTerm;
use crate::scalar::Real;

use super::PRUNE_TOL;

#[derive(Debug, Clone, Default)]
pub struct EstepConfig {
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone)]
pub struct EstepResult<T> {
    pub assignment: Assignment,
    /// `1/2 sum_ij f_ij(omega_{g_i g_j})`, i.e. `-core`.
    pub cost: T,
    pub optimal: bool,
    pub nodes: u64,
}

struct Search<T> {
    n: usize,
    k: usize,
    /// `cell[(i * n + j) * k * k + r * k + s] = f_ij(omega_rs)` for `i > j`,
    /// and `f_ii(omega_rr) / 2` on the diagonal slot `r * k + r`.
    cell: Vec<T>,
    tail: Vec<T>,
    labels: Vec<usize>,
    best: T,
    best_labels: Option<Vec<usize>>,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl<T: Real> Search<T> {
    #[inline]
    fn pair(&self, i: usize, j: usize, r: usize, s: usize) -> T {
        self.cell[(i * self.n + j) * self.k * self.k + r * self.k + s]
    }

    /// Cost of placing vertex `d` in group `r` against vertices `0..d`.
    fn place_cost(&self, d: usize, r: usize) -> T {
        let mut c = self.pair(d, d, r, r);
        for j in 0..d {
            c += self.pair(d, j, r, self.labels[j]);
        }
        c
    }

    fn prunable(&self, bound: T) -> bool {
        if bound.is_infinite() {
            return true;
        }
        self.best.is_finite() && bound >= self.best - T::lit(PRUNE_TOL)
    }

    fn explore(&mut self, d: usize, cost: T) {
        if d == self.n {
            if cost < self.best || self.best_labels.is_none() {
                self.best = cost;
                self.best_labels = Some(self.labels.clone());
            }
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) {
            if let Some(dl) = self.deadline {
                if Instant::now() >= dl {
                    self.timed_out = true;
                }
            }
        }
        if self.timed_out {
            return;
        }
        for r in 0..self.k {
            let c = cost + self.place_cost(d, r);
            if self.prunable(c + self.tail[d + 1]) {
                continue;
            }
            self.labels[d] = r;
            self.explore(d + 1, c);
            if self.timed_out {
                return;
            }
        }
    }
}

pub fn solve_estep_exact<T: Real>(
    inst: &Instance,
    omega: &AffinityMatrix<T>,
    cfg: &EstepConfig,
) -> Result<EstepResult<T>> {
    let g = &inst.graph;
    if g.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let (n, k) = (g.n(), omega.k());
    if k < inst.k {
        return Err(Error::Dimension(format!("omega is {k}x{k}, instance K = {}", inst.k)));
    }
    let kk = k * k;
    let half = T::lit(0.5);
    let mut cell = vec![T::zero(); n * n * kk];
    // later[p]: cheapest possible cost of the pairs whose later endpoint is p
    let mut later = vec![T::zero(); n];
    for i in 0..n {
        for j in 0..=i {
            let term = PairTerm::<T>::of(g, i, j);
            let base = (i * n + j) * kk;
            let mut best = T::infinity();
            for r in 0..k {
                for s in 0..k {
                    if i == j && r != s {
                        continue;
                    }
                    let mut v = term.value(omega.get(r, s));
                    if i == j {
                        v *= half;
                    }
                    cell[base + r * k + s] = v;
                    best = best.min(v);
                }
            }
            later[i] += best;
        }
    }
    let mut tail = vec![T::zero(); n + 1];
    for d in (0..n).rev() {
        tail[d] = tail[d + 1] + later[d];
    }
    let start = Instant::now();
    let mut search = Search {
        n,
        k,
        cell,
        tail,
        labels: vec![0; n],
        best: T::infinity(),
        best_labels: None,
        nodes: 0,
        deadline: cfg.time_limit.map(|t| start + t),
        timed_out: false,
    };
    search.explore(0, T::zero());
    let (labels, cost) = match search.best_labels.take() {
        Some(l) => (l, search.best),
        // every labelling has infinite cost
        None => (vec![0; n], T::infinity()),
    };
    Ok(EstepResult {
        assignment: Assignment::new(labels, k)?,
        cost,
        optimal: !search.timed_out,
        nodes: search.nodes,
    })
}
