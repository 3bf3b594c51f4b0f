//! Outer approximation of the per-pair cost
//! `f_ij(w) = -A_ij ln w + (k_i k_j / 2m) w`, the bounds that make its
//! big-M linearization tight, and lazy cut separation.

mod export;

pub use export::{export_milp, milp_to_strings, MilpExport, MilpOptions};

use crate::error::{Error, Result};
use crate::instance::{AffinityMatrix, Assignment, Graph};
use crate::scalar::Real;

/// Lower bound imposed on every affinity in the linearized model.
pub const OMEGA_LOWER: f64 = 1e-12;
/// Default cut-violation tolerance.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Default number of initial tangent breakpoints.
pub const DEFAULT_BREAKPOINTS: usize = 8;

/// Coefficients of one pair cost: `f(w) = -edges * ln(w) + rate * w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm<T> {
    pub edges: T,
    pub rate: T,
}

impl<T: Real> PairTerm<T> {
    pub fn new(edges: T, rate: T) -> Self {
        PairTerm { edges, rate }
    }

    /// The term for vertices `i, j` (`i == j` allowed).
    pub fn of(g: &Graph, i: usize, j: usize) -> Self {
        let kk = T::from_count(g.degree(i)) * T::from_count(g.degree(j));
        PairTerm {
            edges: T::from_count(g.adj(i, j)),
            rate: kk / T::from_count(g.two_m()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.edges == T::zero() && self.rate == T::zero()
    }

    pub fn eval(&self, w: T) -> Result<T> {
        if w < T::zero() || (w == T::zero() && self.edges > T::zero()) {
            return Err(Error::LogOfZero(self.edges.as_f64() as u64));
        }
        Ok(self.value(w))
    }

    /// Unchecked evaluation; `+inf` at `w = 0` when the pair has edges.
    #[inline]
    pub fn value(&self, w: T) -> T {
        if self.edges == T::zero() {
            self.rate * w
        } else {
            -self.edges * w.ln() + self.rate * w
        }
    }

    /// Global minimum over `w > 0` (0 for edge-free pairs, attained at 0).
    pub fn minimum(&self) -> T {
        if self.edges == T::zero() {
            T::zero()
        } else {
            self.edges * (T::one() - self.edges.ln() + self.rate.ln())
        }
    }

    /// Minimum over `[lo, hi]`, found by clamping the stationary point.
    pub fn minimum_on(&self, lo: T, hi: T) -> T {
        if self.edges == T::zero() {
            return self.rate * lo;
        }
        let w = (self.edges / self.rate).max(lo).min(hi);
        self.value(w)
    }
}

/// `f_ij(w)`; errors at `w = 0` when the pair has edges.
pub fn f_eval<T: Real>(g: &Graph, i: usize, j: usize, w: T) -> Result<T> {
    PairTerm::of(g, i, j).eval(w)
}

/// Supporting line of `f_ij` at `breakpoint`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCut<T> {
    pub i: usize,
    pub j: usize,
    pub breakpoint: T,
    pub slope: T,
    pub intercept: T,
}

impl<T: Real> TangentCut<T> {
    pub fn from_term(i: usize, j: usize, term: &PairTerm<T>, breakpoint: T) -> Self {
        TangentCut {
            i,
            j,
            breakpoint,
            slope: -term.edges / breakpoint + term.rate,
            intercept: term.edges * (T::one() - breakpoint.ln()),
        }
    }

    pub fn at(g: &Graph, i: usize, j: usize, breakpoint: T) -> Self {
        Self::from_term(i, j, &PairTerm::of(g, i, j), breakpoint)
    }

    #[inline]
    pub fn value(&self, w: T) -> T {
        self.slope * w + self.intercept
    }
}

/// Affinity range and per-pair bounds on `f_ij` over that range.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet<T> {
    n: usize,
    pub rho: T,
    pub omega_lower: T,
    pub omega_upper: T,
    mlow: Vec<T>,
    mup: Vec<T>,
}

impl<T: Real> BoundSet<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn mlow(&self, i: usize, j: usize) -> T {
        self.mlow[i * self.n + j]
    }

    #[inline]
    pub fn mup(&self, i: usize, j: usize) -> T {
        self.mup[i * self.n + j]
    }
}

/// `rho = max A_ij / (k_i k_j)` over pairs with nonzero degrees (diagonal
/// included), `omega_upper = 2m rho`, and `Mlow <= f_ij <= Mup` on
/// `[OMEGA_LOWER, omega_upper]`.
pub fn build_bounds<T: Real>(g: &Graph) -> Result<BoundSet<T>> {
    if g.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = g.n();
    let mut rho = T::zero();
    let mut any = false;
    for i in 0..n {
        for j in 0..n {
            let kk = g.degree(i) * g.degree(j);
            if kk > 0 {
                any = true;
                rho = rho.max(T::from_count(g.adj(i, j)) / T::from_count(kk));
            }
        }
    }
    if !any {
        return Err(Error::AllIsolated);
    }
    let lo = T::lit(OMEGA_LOWER);
    let hi = T::from_count(g.two_m()) * rho;
    let mut mlow = vec![T::zero(); n * n];
    let mut mup = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if g.degree(i) * g.degree(j) == 0 {
                continue;
            }
            let t = PairTerm::<T>::of(g, i, j);
            let idx = i * n + j;
            if t.edges == T::zero() {
                mup[idx] = t.rate * hi;
            } else {
                mlow[idx] = t.minimum();
                mup[idx] = t.value(lo).max(t.value(hi));
            }
        }
    }
    Ok(BoundSet {
        n,
        rho,
        omega_lower: lo,
        omega_upper: hi,
        mlow,
        mup,
    })
}

/// `count` log-spaced breakpoints on `[max(OMEGA_LOWER, 1e-3), omega_upper]`.
pub fn default_breakpoints<T: Real>(bounds: &BoundSet<T>, count: usize) -> Vec<T> {
    let lo = bounds.omega_lower.max(T::lit(1e-3));
    let hi = bounds.omega_upper.max(lo);
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (llo, lhi) = (lo.ln(), hi.ln());
            let steps = T::from_count(count as u64 - 1);
            (0..count)
                .map(|p| (llo + (lhi - llo) * T::from_count(p as u64) / steps).exp())
                .collect()
        }
    }
}

/// Tangent cuts currently in a model: a breakpoint set shared by every
/// pair plus cuts added for individual pairs.
#[derive(Debug, Clone)]
pub struct CutPool<T> {
    n: usize,
    shared: Vec<T>,
    per_pair: Vec<Vec<TangentCut<T>>>,
}

impl<T: Real> CutPool<T> {
    pub fn new(n: usize, shared_breakpoints: Vec<T>) -> Self {
        CutPool {
            n,
            shared: shared_breakpoints,
            per_pair: vec![Vec::new(); n * n],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * self.n + b
    }

    pub fn add(&mut self, cut: TangentCut<T>) {
        let s = self.slot(cut.i, cut.j);
        self.per_pair[s].push(cut);
    }

    pub fn len(&self) -> usize {
        self.per_pair.iter().map(Vec::len).sum::<usize>() + self.shared.len() * self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Piecewise-linear underestimate of `f_ij` at `w`; `-inf` if the pair
    /// has no cuts.
    pub fn underestimate(&self, i: usize, j: usize, term: &PairTerm<T>, w: T) -> T {
        let shared = self
            .shared
            .iter()
            .map(|&b| TangentCut::from_term(i, j, term, b).value(w));
        let own = self.per_pair[self.slot(i, j)].iter().map(|c| c.value(w));
        shared.chain(own).fold(T::neg_infinity(), T::max)
    }
}

/// An integer-feasible point of the linearized model: labels fix the
/// active cells `y_ijrs`, `omega` the continuous affinities.
#[derive(Debug, Clone)]
pub struct SeparationPoint<T> {
    pub labels: Assignment,
    pub omega: AffinityMatrix<T>,
}

/// Tangent cuts at the current affinity for every active cell whose true
/// cost exceeds the pool's underestimate by more than `eps`. Empty iff the
/// point is `eps`-feasible.
pub fn separate_cuts<T: Real>(
    g: &Graph,
    point: &SeparationPoint<T>,
    pool: &CutPool<T>,
    eps: T,
) -> Vec<TangentCut<T>> {
    let n = g.n();
    let lo = T::lit(OMEGA_LOWER);
    let mut cuts = Vec::new();
    for i in 0..n {
        for j in i..n {
            let term = PairTerm::<T>::of(g, i, j);
            if term.is_zero() {
                continue;
            }
            if let Some(cut) = separate_pair(i, j, &term, point.omega.get(point.labels.label(i), point.labels.label(j)).max(lo), pool, eps) {
                cuts.push(cut);
            }
        }
    }
    cuts
}

/// Separation for a single pair term at affinity `w`.
pub fn separate_pair<T: Real>(
    i: usize,
    j: usize,
    term: &PairTerm<T>,
    w: T,
    pool: &CutPool<T>,
    eps: T,
) -> Option<TangentCut<T>> {
    let violation = term.value(w) - pool.underestimate(i, j, term, w);
    (violation > eps).then(|| TangentCut::from_term(i, j, term, w))
}
