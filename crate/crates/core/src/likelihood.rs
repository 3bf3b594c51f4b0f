//! DCSBM log-likelihood with the configuration-model degree correction
//! `theta_i * theta_j = k_i k_j / 2m`.
//!
//! The likelihood splits into a part that depends on the labelling and the
//! affinities,
//!
//! ```text
//! core = 1/2 * sum_rs [ m_rs ln(omega_rs) - kappa_r kappa_s / 2m * omega_rs ]
//! ```
//!
//! and a graph-only constant. Minimisation code works with the objective
//! `-(core + constant)`.

use crate::error::{Error, Result};
use crate::instance::{AffinityMatrix, Assignment, Graph};
use crate::scalar::{ln_factorial, xlogy, Real};

/// Edge counts between groups and per-group degree sums for one labelling.
///
/// `edges(r, r)` counts every internal edge twice (self-loops included via
/// the `A_ii = 2 * loops` convention), so `sum_rs edges(r, s) == 2m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    k: usize,
    m_rs: Vec<u64>,
    kappa: Vec<u64>,
}

impl BlockStats {
    pub fn zeros(k: usize) -> Self {
        BlockStats {
            k,
            m_rs: vec![0; k * k],
            kappa: vec![0; k],
        }
    }

    pub fn from_assignment(g: &Graph, a: &Assignment) -> Result<Self> {
        check_dims(g, a)?;
        let k = a.k();
        let mut st = BlockStats::zeros(k);
        for i in 0..g.n() {
            let r = a.label(i);
            st.kappa[r] += g.degree(i);
            for j in 0..g.n() {
                st.m_rs[r * k + a.label(j)] += g.adj(i, j);
            }
        }
        Ok(st)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn edges(&self, r: usize, s: usize) -> u64 {
        self.m_rs[r * self.k + s]
    }

    #[inline]
    pub fn kappa(&self, r: usize) -> u64 {
        self.kappa[r]
    }

    /// Profile contribution of the ordered cell `(r, s)`:
    /// `m_rs ln(2m m_rs / (kappa_r kappa_s))`, zero for empty cells.
    #[inline]
    fn cell_profile<T: Real>(two_m: T, m_rs: u64, kr: u64, ks: u64) -> T {
        if m_rs == 0 {
            return T::zero();
        }
        let m = T::from_count(m_rs);
        m * (two_m * m / (T::from_count(kr) * T::from_count(ks))).ln()
    }

    /// Change in the profile log-likelihood when a vertex with group links
    /// `links`, diagonal entry `self_adj` and degree `degree` moves from
    /// group `from` to group `to`. `links[t]` counts edges to members of `t`
    /// other than the vertex itself.
    pub fn profile_delta<T: Real>(
        &self,
        two_m: u64,
        links: &[u64],
        self_adj: u64,
        degree: u64,
        from: usize,
        to: usize,
    ) -> T {
        debug_assert_ne!(from, to);
        let two_m_t = T::from_count(two_m);
        let k = self.k;
        let new_kappa = |r: usize| -> u64 {
            if r == from {
                self.kappa[from] - degree
            } else if r == to {
                self.kappa[to] + degree
            } else {
                self.kappa[r]
            }
        };
        // new m_rs for r in {from, to}
        let new_edges = |r: usize, s: usize| -> u64 {
            let cur = self.edges(r, s);
            match (r == from, r == to, s == from, s == to) {
                (true, _, true, _) => cur - 2 * links[from] - self_adj,
                (_, true, _, true) => cur + 2 * links[to] + self_adj,
                (true, _, _, true) | (_, true, true, _) => cur + links[from] - links[to],
                (true, _, _, _) => cur - links[s],
                (_, true, _, _) => cur + links[s],
                _ => cur,
            }
        };
        let mut delta = T::zero();
        for &r in &[from, to] {
            for s in 0..k {
                let w = if s == from || s == to { T::one() } else { T::lit(2.0) };
                let old = Self::cell_profile(two_m_t, self.edges(r, s), self.kappa[r], self.kappa[s]);
                let new = Self::cell_profile(two_m_t, new_edges(r, s), new_kappa(r), new_kappa(s));
                delta += w * (new - old);
            }
        }
        delta * T::lit(0.5)
    }

    /// Applies the move described in [`BlockStats::profile_delta`].
    pub fn apply_move(&mut self, links: &[u64], self_adj: u64, degree: u64, from: usize, to: usize) {
        let k = self.k;
        for t in 0..k {
            if t != from && t != to {
                self.m_rs[from * k + t] -= links[t];
                self.m_rs[t * k + from] -= links[t];
                self.m_rs[to * k + t] += links[t];
                self.m_rs[t * k + to] += links[t];
            }
        }
        let cross = self.m_rs[from * k + to] + links[from] - links[to];
        self.m_rs[from * k + to] = cross;
        self.m_rs[to * k + from] = cross;
        self.m_rs[from * k + from] -= 2 * links[from] + self_adj;
        self.m_rs[to * k + to] += 2 * links[to] + self_adj;
        self.kappa[from] -= degree;
        self.kappa[to] += degree;
    }
}

impl BlockStats {
    /// Adds (or removes) a vertex to group `r` given its links to the
    /// vertices already counted.
    pub(crate) fn adjust(&mut self, links: &[u64], self_adj: u64, degree: u64, r: usize, add: bool) {
        let k = self.k;
        let step = |x: &mut u64, d: u64| {
            if add {
                *x += d
            } else {
                *x -= d
            }
        };
        for t in 0..k {
            if t != r {
                step(&mut self.m_rs[r * k + t], links[t]);
                step(&mut self.m_rs[t * k + r], links[t]);
            }
        }
        step(&mut self.m_rs[r * k + r], 2 * links[r] + self_adj);
        step(&mut self.kappa[r], degree);
    }
}

/// Edges from `i` to each group under `labels`, excluding `i` itself.
pub fn group_links(g: &Graph, labels: &[usize], k: usize, i: usize, out: &mut Vec<u64>) {
    out.clear();
    out.resize(k, 0);
    for &(j, c) in g.neighbors(i) {
        out[labels[j]] += c;
    }
}

fn check_dims(g: &Graph, a: &Assignment) -> Result<()> {
    if a.n() != g.n() {
        return Err(Error::Dimension(format!(
            "assignment has {} labels for {} vertices",
            a.n(),
            g.n()
        )));
    }
    Ok(())
}

/// Log-likelihood split into its labelling-dependent and constant parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodValue<T> {
    pub core: T,
    pub constant: T,
}

impl<T: Real> LikelihoodValue<T> {
    pub fn total(&self) -> T {
        self.core + self.constant
    }

    /// Negative log-likelihood, the quantity every solver minimises.
    pub fn objective(&self) -> T {
        -self.total()
    }
}

/// Graph-only part of the log-likelihood:
/// `sum_{i<j} [A_ij ln(k_i k_j / 2m) - ln A_ij!]
///  + sum_i [(A_ii/2) ln(k_i^2 / 4m) - ln (A_ii/2)!]`.
pub fn constant_term<T: Real>(g: &Graph) -> Result<T> {
    if g.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let two_m = T::from_count(g.two_m());
    let n = g.n();
    let mut c = T::zero();
    for i in 0..n {
        let ki = T::from_count(g.degree(i));
        for j in (i + 1)..n {
            let a = g.adj(i, j);
            if a > 0 {
                let kj = T::from_count(g.degree(j));
                c += xlogy(T::from_count(a), ki * kj / two_m) - ln_factorial::<T>(a);
            }
        }
        let loops = g.self_loops(i);
        if loops > 0 {
            c += xlogy(T::from_count(loops), ki * ki / (T::lit(2.0) * two_m)) - ln_factorial::<T>(loops);
        }
    }
    Ok(c)
}

/// `core` evaluated from block statistics. Returns `-inf` when some block
/// with edges has zero affinity.
pub fn core_from_stats<T: Real>(two_m: u64, stats: &BlockStats, omega: &AffinityMatrix<T>) -> T {
    let two_m = T::from_count(two_m);
    let k = stats.k();
    let mut core = T::zero();
    for r in 0..k {
        for s in 0..k {
            let w = omega.get(r, s);
            let kk = T::from_count(stats.kappa(r)) * T::from_count(stats.kappa(s));
            core += xlogy(T::from_count(stats.edges(r, s)), w) - kk / two_m * w;
        }
    }
    core * T::lit(0.5)
}

pub fn log_likelihood<T: Real>(
    g: &Graph,
    a: &Assignment,
    omega: &AffinityMatrix<T>,
) -> Result<LikelihoodValue<T>> {
    if omega.k() < a.k() {
        return Err(Error::Dimension(format!(
            "omega is {0}x{0} but assignment uses K = {1}",
            omega.k(),
            a.k()
        )));
    }
    let constant = constant_term(g)?;
    let stats = BlockStats::from_assignment(g, &a.with_k(omega.k()))?;
    Ok(LikelihoodValue {
        core: core_from_stats(g.two_m(), &stats, omega),
        constant,
    })
}

/// Closed-form maximiser `omega_rs = 2m m_rs / (kappa_r kappa_s)`; cells
/// touching an empty group get 0.
pub fn m_step_from_stats<T: Real>(two_m: u64, stats: &BlockStats) -> AffinityMatrix<T> {
    let k = stats.k();
    let two_m = T::from_count(two_m);
    let mut w = AffinityMatrix::zeros(k);
    for r in 0..k {
        for s in r..k {
            let kk = stats.kappa(r) * stats.kappa(s);
            if kk > 0 {
                w.set(r, s, two_m * T::from_count(stats.edges(r, s)) / T::from_count(kk));
            }
        }
    }
    w
}

pub fn m_step<T: Real>(g: &Graph, a: &Assignment) -> Result<AffinityMatrix<T>> {
    let stats = BlockStats::from_assignment(g, a)?;
    Ok(m_step_from_stats(g.two_m(), &stats))
}

/// `core` at the M-step optimum: `1/2 sum_{m_rs > 0} m_rs ln(2m m_rs /
/// (kappa_r kappa_s)) - m`.
pub fn profile_log_likelihood<T: Real>(g: &Graph, stats: &BlockStats) -> T {
    profile_from_stats(g.two_m(), stats)
}

pub fn profile_from_stats<T: Real>(two_m: u64, stats: &BlockStats) -> T {
    let k = stats.k();
    let tm = T::from_count(two_m);
    let mut s = T::zero();
    for r in 0..k {
        for c in 0..k {
            s += BlockStats::cell_profile(tm, stats.edges(r, c), stats.kappa(r), stats.kappa(c));
        }
    }
    s * T::lit(0.5) - T::from_count(two_m / 2)
}

/// Negative log-likelihood (constant included) of `a` at its M-step
/// affinities.
pub fn profile_objective<T: Real>(g: &Graph, a: &Assignment) -> Result<T> {
    let stats = BlockStats::from_assignment(g, a)?;
    Ok(-(profile_log_likelihood::<T>(g, &stats) + constant_term::<T>(g)?))
}

/// Profile change for moving vertex `i` to group `to`, together with the
/// statistics after the move.
pub fn relocation_delta<T: Real>(
    g: &Graph,
    stats: &BlockStats,
    a: &Assignment,
    i: usize,
    to: usize,
) -> Result<(T, BlockStats)> {
    check_dims(g, a)?;
    if to >= stats.k() {
        return Err(Error::InvalidGroup { group: to, k: stats.k() });
    }
    let from = a.label(i);
    if from == to {
        return Err(Error::Invalid(format!("vertex {i} is already in group {to}")));
    }
    let mut links = Vec::new();
    group_links(g, a.labels(), stats.k(), i, &mut links);
    let delta = stats.profile_delta(g.two_m(), &links, g.adj(i, i), g.degree(i), from, to);
    let mut next = stats.clone();
    next.apply_move(&links, g.adj(i, i), g.degree(i), from, to);
    Ok((delta, next))
}

/// Change in `core` at fixed affinities when vertex `i` (with the given
/// links, computed under the current labels) moves from `from` to `to`.
pub fn fixed_omega_delta<T: Real>(
    g: &Graph,
    stats: &BlockStats,
    omega: &AffinityMatrix<T>,
    links: &[u64],
    i: usize,
    from: usize,
    to: usize,
) -> T {
    let two_m = T::from_count(g.two_m());
    let ki = T::from_count(g.degree(i));
    let mut d = T::zero();
    for t in 0..stats.k() {
        let kappa_other = stats.kappa(t) - if t == from { g.degree(i) } else { 0 };
        let e = T::from_count(links[t]);
        let (wn, wo) = (omega.get(to, t), omega.get(from, t));
        d += xlogy(e, wn) - xlogy(e, wo) - ki * T::from_count(kappa_other) / two_m * (wn - wo);
    }
    let aii = T::from_count(g.adj(i, i));
    let (wn, wo) = (omega.get(to, to), omega.get(from, from));
    d += T::lit(0.5) * (xlogy(aii, wn) - xlogy(aii, wo) - ki * ki / two_m * (wn - wo));
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex() -> Graph {
        Graph::from_edges(2, &[(0, 1, 1)]).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn constant_for_single_edge() {
        let c: f64 = constant_term(&two_vertex()).unwrap();
        assert!((c - 0.5f64.ln()).abs() < 1e-15);
        assert!((c + 0.693147).abs() < 1e-6);
    }

    #[test]
    fn empty_graph_has_no_likelihood() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert!(matches!(constant_term::<f64>(&g), Err(Error::EmptyGraph)));
    }

    #[test]
    fn unit_omega_core_is_minus_m() {
        let g = Graph::from_edges(4, &[(0, 1, 2), (1, 2, 1), (2, 3, 1), (3, 3, 1)]).unwrap();
        let a = Assignment::new(vec![0, 1, 1, 0], 2).unwrap();
        let v = log_likelihood(&g, &a, &AffinityMatrix::constant(2, 1.0f64)).unwrap();
        assert!((v.core + g.m() as f64).abs() < 1e-12);
        assert_eq!(v.total(), v.core + v.constant);
        assert_eq!(v.objective(), -v.total());
    }

    #[test]
    fn zero_affinity_on_used_block_is_minus_infinity() {
        let g = two_vertex();
        let a = Assignment::new(vec![0, 1], 2).unwrap();
        let w = AffinityMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(log_likelihood(&g, &a, &w).unwrap().core, f64::NEG_INFINITY);
    }

    #[test]
    fn single_block_m_step_is_one() {
        let g = Graph::from_edges(3, &[(0, 1, 1), (1, 2, 2)]).unwrap();
        let a = Assignment::uniform(3, 1);
        let w: AffinityMatrix<f64> = m_step(&g, &a).unwrap();
        assert!((w.get(0, 0) - 1.0).abs() < 1e-15);
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        assert!((profile_log_likelihood::<f64>(&g, &st) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn m_step_zero_for_edgeless_block() {
        let g = Graph::from_edges(4, &[(0, 1, 1), (2, 3, 1)]).unwrap();
        let a = Assignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let w: AffinityMatrix<f64> = m_step(&g, &a).unwrap();
        assert_eq!(w.get(0, 1), 0.0);
        // empty group
        let a = Assignment::new(vec![0, 0, 0, 0], 2).unwrap();
        let w: AffinityMatrix<f64> = m_step(&g, &a).unwrap();
        assert_eq!(w.get(1, 1), 0.0);
        assert_eq!(w.get(0, 1), 0.0);
    }

    #[test]
    fn move_and_back_restores_stats() {
        let g = Graph::from_edges(5, &[(0, 1, 1), (1, 2, 2), (2, 2, 1), (3, 4, 1), (0, 4, 1)]).unwrap();
        let a = Assignment::new(vec![0, 0, 1, 1, 2], 3).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let (d1, st1) = relocation_delta::<f64>(&g, &st, &a, 2, 0).unwrap();
        let mut a1 = a.clone();
        a1.set(2, 0);
        assert_eq!(st1, BlockStats::from_assignment(&g, &a1).unwrap());
        let (d2, st2) = relocation_delta::<f64>(&g, &st1, &a1, 2, 1).unwrap();
        assert_eq!(st2, st);
        assert!((d1 + d2).abs() < 1e-12);
    }

    #[test]
    fn isolated_vertex_moves_are_free() {
        let g = Graph::from_edges(3, &[(0, 1, 1)]).unwrap();
        let a = Assignment::new(vec![0, 1, 0], 2).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let (d, st2) = relocation_delta::<f64>(&g, &st, &a, 2, 1).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(st2, st);
    }

    #[test]
    fn relocation_rejects_bad_targets() {
        let g = two_vertex();
        let a = Assignment::new(vec![0, 1], 2).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        assert!(matches!(
            relocation_delta::<f64>(&g, &st, &a, 0, 5),
            Err(Error::InvalidGroup { group: 5, .. })
        ));
        assert!(relocation_delta::<f64>(&g, &st, &a, 0, 0).is_err());
    }

    #[test]
    fn fixed_omega_delta_matches_recompute() {
        let g = Graph::from_edges(5, &[(0, 1, 1), (1, 2, 2), (2, 2, 1), (3, 4, 1), (0, 4, 1), (1, 3, 1)]).unwrap();
        let a = Assignment::new(vec![0, 0, 1, 1, 2], 3).unwrap();
        let w = AffinityMatrix::<f64>::new(3, vec![0.7, 0.2, 0.3, 0.2, 1.4, 0.5, 0.3, 0.5, 0.9]).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let before = core_from_stats(g.two_m(), &st, &w);
        let mut links = Vec::new();
        for i in 0..5 {
            group_links(&g, a.labels(), 3, i, &mut links);
            for to in 0..3 {
                if to == a.label(i) {
                    continue;
                }
                let mut b = a.clone();
                b.set(i, to);
                let after = core_from_stats(g.two_m(), &BlockStats::from_assignment(&g, &b).unwrap(), &w);
                let d = fixed_omega_delta(&g, &st, &w, &links, i, a.label(i), to);
                assert!((d - (after - before)).abs() < 1e-12, "i={i} to={to}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = Graph::from_edges(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).unwrap();
        let a = Assignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let w32: AffinityMatrix<f32> = m_step(&g, &a).unwrap();
        let p32: f32 = profile_log_likelihood(&g, &st);
        let p64: f64 = profile_log_likelihood(&g, &st);
        assert!((p32 as f64 - p64).abs() < 1e-5);
        assert!((core_from_stats(g.two_m(), &st, &w32) - p32).abs() < 1e-5);
    }
}
