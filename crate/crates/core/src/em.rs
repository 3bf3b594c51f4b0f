//! Expectation-maximization local search heuristics.
//!
//! * `Ls1`: relocations evaluated at fixed affinities, M-step between
//!   passes.
//! * `Ls2`: every relocation is scored at its own re-optimised affinities,
//!   i.e. by the change in the profile likelihood.
//! * `Exact`: alternates the closed-form M-step with a globally optimal
//!   E-step.
//!
//! LS1 and LS2 use first-improvement acceptance, scanning vertices by index
//! and target groups by index.

use std::time::{Duration, Instant};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::exact::{solve_estep_exact, EstepConfig};
use crate::instance::{AffinityMatrix, Assignment, Instance};
use crate::likelihood::{
    constant_term, core_from_stats, fixed_omega_delta, group_links, m_step_from_stats,
    profile_from_stats, BlockStats,
};
use crate::rng::{derive_seed, rng_from_seed, Rng, STREAM_TRIAL};
use crate::scalar::Real;

/// Minimum accepted improvement of a single relocation.
pub const MOVE_TOL: f64 = 1e-12;
/// Minimum improvement for another EM-exact iteration.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmVariant {
    Ls1,
    Ls2,
    Exact,
}

impl EmVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            EmVariant::Ls1 => "em-ls1",
            EmVariant::Ls2 => "em-ls2",
            EmVariant::Exact => "em-exact",
        }
    }
}

impl std::str::FromStr for EmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "em-ls1" | "ls1" => Ok(EmVariant::Ls1),
            "em-ls2" | "ls2" => Ok(EmVariant::Ls2),
            "em-exact" | "exact" => Ok(EmVariant::Exact),
            _ => Err(Error::Config(format!("unknown EM variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmConfig {
    pub variant: EmVariant,
    pub trials: usize,
    pub seed: u64,
    /// Relocation budget per trial (LS1/LS2) or iteration budget (Exact).
    pub max_relocations: usize,
    pub estep_time_limit: Option<Duration>,
    pub threads: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            variant: EmVariant::Ls2,
            trials: 50,
            seed: 0,
            max_relocations: 10_000,
            estep_time_limit: None,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult<T> {
    pub assignment: Assignment,
    pub omega: AffinityMatrix<T>,
    /// Negative log-likelihood at `omega`, constant included.
    pub objective: T,
    /// Accepted relocations (LS1/LS2) or completed E/M rounds (Exact).
    pub iterations: usize,
    pub wall_time: Duration,
    pub converged: bool,
    /// Objective after the initial M-step and after every accepted step.
    pub trace: Vec<T>,
}

fn random_assignment(n: usize, k: usize, rng: &mut Rng) -> Assignment {
    let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
    Assignment::new(labels, k).expect("labels drawn in range")
}

fn check(inst: &Instance) -> Result<()> {
    if inst.graph.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(())
}

fn finish<T: Real>(
    inst: &Instance,
    labels: Assignment,
    stats: &BlockStats,
    constant: T,
    iterations: usize,
    start: Instant,
    converged: bool,
    trace: Vec<T>,
) -> TrialResult<T> {
    let two_m = inst.graph.two_m();
    TrialResult {
        omega: m_step_from_stats(two_m, stats),
        objective: -(profile_from_stats::<T>(two_m, stats) + constant),
        assignment: labels,
        iterations,
        wall_time: start.elapsed(),
        converged,
        trace,
    }
}

pub fn em_ls1<T: Real>(inst: &Instance, rng: &mut Rng, cfg: &EmConfig) -> Result<TrialResult<T>> {
    check(inst)?;
    let start = Instant::now();
    let g = &inst.graph;
    let k = inst.k;
    let mut a = random_assignment(g.n(), k, rng);
    ls1_from(inst, &mut a, cfg, start)
}

fn ls1_from<T: Real>(
    inst: &Instance,
    a: &mut Assignment,
    cfg: &EmConfig,
    start: Instant,
) -> Result<TrialResult<T>> {
    let g = &inst.graph;
    let k = a.k();
    let constant: T = constant_term(g)?;
    let mut stats = BlockStats::from_assignment(g, a)?;
    let tol = T::lit(MOVE_TOL);
    let mut links = Vec::with_capacity(k);
    let mut trace = Vec::new();
    let mut moves = 0usize;
    let mut converged = true;
    'outer: loop {
        let omega: AffinityMatrix<T> = m_step_from_stats(g.two_m(), &stats);
        let mut core = core_from_stats(g.two_m(), &stats, &omega);
        trace.push(-(core + constant));
        let mut improved = false;
        loop {
            let mut moved = false;
            for i in 0..g.n() {
                group_links(g, a.labels(), k, i, &mut links);
                for to in 0..k {
                    let from = a.label(i);
                    if to == from {
                        continue;
                    }
                    let d = fixed_omega_delta(g, &stats, &omega, &links, i, from, to);
                    if d > tol {
                        stats.apply_move(&links, g.adj(i, i), g.degree(i), from, to);
                        a.set(i, to);
                        core += d;
                        trace.push(-(core + constant));
                        moved = true;
                        moves += 1;
                        if moves >= cfg.max_relocations {
                            converged = false;
                            break 'outer;
                        }
                    }
                }
            }
            if !moved {
                break;
            }
            improved = true;
        }
        if !improved {
            break;
        }
    }
    let out = finish(inst, a.clone(), &stats, constant, moves, start, converged, trace);
    Ok(with_final(out))
}

/// Appends the final objective to the trace if the last step did not
/// already record it.
fn with_final<T: Real>(mut r: TrialResult<T>) -> TrialResult<T> {
    if r.trace.last().is_none_or(|&t| t != r.objective) {
        r.trace.push(r.objective);
    }
    r
}

pub fn em_ls2<T: Real>(inst: &Instance, rng: &mut Rng, cfg: &EmConfig) -> Result<TrialResult<T>> {
    check(inst)?;
    let start = Instant::now();
    let mut a = random_assignment(inst.graph.n(), inst.k, rng);
    ls2_from(inst, &mut a, cfg, start)
}

fn ls2_from<T: Real>(
    inst: &Instance,
    a: &mut Assignment,
    cfg: &EmConfig,
    start: Instant,
) -> Result<TrialResult<T>> {
    let g = &inst.graph;
    let k = a.k();
    let two_m = g.two_m();
    let constant: T = constant_term(g)?;
    let mut stats = BlockStats::from_assignment(g, a)?;
    let tol = T::lit(MOVE_TOL);
    let mut links = Vec::with_capacity(k);
    let mut profile: T = profile_from_stats(two_m, &stats);
    let mut trace = vec![-(profile + constant)];
    let mut moves = 0usize;
    let mut converged = true;
    'outer: loop {
        let mut moved = false;
        for i in 0..g.n() {
            group_links(g, a.labels(), k, i, &mut links);
            for to in 0..k {
                let from = a.label(i);
                if to == from {
                    continue;
                }
                let d: T = stats.profile_delta(two_m, &links, g.adj(i, i), g.degree(i), from, to);
                if d > tol {
                    stats.apply_move(&links, g.adj(i, i), g.degree(i), from, to);
                    a.set(i, to);
                    profile += d;
                    trace.push(-(profile + constant));
                    moved = true;
                    moves += 1;
                    if moves >= cfg.max_relocations {
                        converged = false;
                        break 'outer;
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    Ok(with_final(finish(inst, a.clone(), &stats, constant, moves, start, converged, trace)))
}

pub fn em_exact<T: Real>(inst: &Instance, rng: &mut Rng, cfg: &EmConfig) -> Result<TrialResult<T>> {
    check(inst)?;
    let start = Instant::now();
    let g = &inst.graph;
    let constant: T = constant_term(g)?;
    let mut a = random_assignment(g.n(), inst.k, rng);
    let mut stats = BlockStats::from_assignment(g, &a)?;
    let mut objective = -(profile_from_stats::<T>(g.two_m(), &stats) + constant);
    let mut trace = vec![objective];
    let mut rounds = 0usize;
    let mut converged = true;
    let estep_cfg = EstepConfig {
        time_limit: cfg.estep_time_limit,
    };
    loop {
        let omega: AffinityMatrix<T> = m_step_from_stats(g.two_m(), &stats);
        let e = solve_estep_exact(inst, &omega, &estep_cfg)?;
        if !e.optimal {
            converged = false;
        }
        let next_stats = BlockStats::from_assignment(g, &e.assignment)?;
        let next = -(profile_from_stats::<T>(g.two_m(), &next_stats) + constant);
        if objective - next > T::lit(CONVERGENCE_TOL) {
            a = e.assignment;
            stats = next_stats;
            objective = next;
            trace.push(objective);
            rounds += 1;
        } else {
            break;
        }
        if !converged || rounds >= cfg.max_relocations {
            converged = false;
            break;
        }
    }
    Ok(with_final(finish(inst, a, &stats, constant, rounds, start, converged, trace)))
}

/// LS1 or LS2 started from a given labelling (used for fixed-point checks).
pub fn local_search_from<T: Real>(
    inst: &Instance,
    start_labels: &Assignment,
    variant: EmVariant,
    cfg: &EmConfig,
) -> Result<TrialResult<T>> {
    check(inst)?;
    let mut a = start_labels.with_k(inst.k);
    match variant {
        EmVariant::Ls1 => ls1_from(inst, &mut a, cfg, Instant::now()),
        EmVariant::Ls2 => ls2_from(inst, &mut a, cfg, Instant::now()),
        EmVariant::Exact => Err(Error::Config("EM-exact has no local-search form".into())),
    }
}

/// Runs trial `index` of `cfg` in isolation, seeded with
/// `derive_seed(cfg.seed, STREAM_TRIAL, index)`.
pub fn run_single<T: Real>(inst: &Instance, cfg: &EmConfig, index: usize) -> Result<TrialResult<T>> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, STREAM_TRIAL, index as u64));
    match cfg.variant {
        EmVariant::Ls1 => em_ls1(inst, &mut rng, cfg),
        EmVariant::Ls2 => em_ls2(inst, &mut rng, cfg),
        EmVariant::Exact => em_exact(inst, &mut rng, cfg),
    }
}

#[derive(Debug, Clone)]
pub struct TrialSummary<T> {
    pub trials: usize,
    pub mean_objective: T,
    pub min_objective: T,
    pub best_trial: usize,
    /// Mean of `100 (obj - bks) / bks` when a reference was supplied.
    pub mean_gap_pct: Option<T>,
    pub mean_wall_time: Duration,
}

pub fn summarize<T: Real>(results: &[TrialResult<T>], bks: Option<T>) -> TrialSummary<T> {
    let count = T::from_count(results.len().max(1) as u64);
    let (best_trial, min_objective) = results
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |(bi, bv), (i, r)| {
            if r.objective < bv {
                (i, r.objective)
            } else {
                (bi, bv)
            }
        });
    let mean_objective = results.iter().map(|r| r.objective).sum::<T>() / count;
    let mean_gap_pct = bks.map(|b| {
        results
            .iter()
            .map(|r| T::lit(100.0) * (r.objective - b) / b)
            .sum::<T>()
            / count
    });
    let total: Duration = results.iter().map(|r| r.wall_time).sum();
    TrialSummary {
        trials: results.len(),
        mean_objective,
        min_objective,
        best_trial,
        mean_gap_pct,
        mean_wall_time: total / results.len().max(1) as u32,
    }
}

/// Runs `cfg.trials` independent trials; results are in trial order
/// whatever the thread count.
pub fn run_trials<T: Real>(inst: &Instance, cfg: &EmConfig) -> Result<Vec<TrialResult<T>>> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cfg.threads <= 1 {
        return (0..cfg.trials).map(|t| run_single(inst, cfg, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        use rayon::prelude::*;
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_single(inst, cfg, t))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Graph;

    fn two_cliques() -> Instance {
        let mut e = Vec::new();
        for (a, b) in [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)] {
            e.push((a, b, 1));
            e.push((a + 4, b + 4, 1));
        }
        e.push((3, 4, 1));
        Instance::new(Graph::from_edges(8, &e).unwrap(), 2).unwrap()
    }

    fn nonincreasing(tr: &[f64]) -> bool {
        tr.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    }

    #[test]
    fn traces_are_monotone() {
        let inst = two_cliques();
        for variant in [EmVariant::Ls1, EmVariant::Ls2, EmVariant::Exact] {
            let cfg = EmConfig { variant, trials: 10, seed: 3, ..EmConfig::default() };
            for r in run_trials::<f64>(&inst, &cfg).unwrap() {
                assert!(nonincreasing(&r.trace), "{variant:?}: {:?}", r.trace);
                assert!(r.converged);
                assert!((r.trace.last().unwrap() - r.objective).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_point_is_kept() {
        let inst = two_cliques();
        let opt = Assignment::new(vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        for v in [EmVariant::Ls1, EmVariant::Ls2] {
            let r: TrialResult<f64> = local_search_from(&inst, &opt, v, &EmConfig::default()).unwrap();
            assert_eq!(r.assignment, opt);
            assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn single_trial_matches_run_single() {
        let inst = two_cliques();
        let cfg = EmConfig { trials: 1, seed: 11, ..EmConfig::default() };
        let a = run_trials::<f64>(&inst, &cfg).unwrap();
        let b = run_single::<f64>(&inst, &cfg, 0).unwrap();
        assert_eq!(a[0].assignment, b.assignment);
        assert_eq!(a[0].objective, b.objective);
    }

    #[test]
    fn parallel_trials_match_sequential() {
        let inst = two_cliques();
        let cfg = EmConfig { trials: 12, seed: 5, variant: EmVariant::Ls1, ..EmConfig::default() };
        let seq = run_trials::<f64>(&inst, &cfg).unwrap();
        let par = run_trials::<f64>(&inst, &EmConfig { threads: 4, ..cfg }).unwrap();
        let objs = |v: &[TrialResult<f64>]| v.iter().map(|r| r.objective).collect::<Vec<_>>();
        assert_eq!(objs(&seq), objs(&par));
    }

    #[test]
    fn isolated_vertex_never_moves() {
        let g = Graph::from_edges(3, &[(0, 1, 1)]).unwrap();
        let inst = Instance::new(g, 2).unwrap();
        let start = Assignment::new(vec![0, 1, 1], 2).unwrap();
        let r: TrialResult<f64> = local_search_from(&inst, &start, EmVariant::Ls2, &EmConfig::default()).unwrap();
        assert_eq!(r.assignment.label(2), 1);
    }

    #[test]
    fn summary_statistics() {
        let inst = two_cliques();
        let cfg = EmConfig { trials: 5, seed: 1, ..EmConfig::default() };
        let res = run_trials::<f64>(&inst, &cfg).unwrap();
        let s = summarize(&res, Some(res[0].objective));
        assert_eq!(s.trials, 5);
        assert!(s.min_objective <= s.mean_objective);
        assert_eq!(res[s.best_trial].objective, s.min_objective);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = EmConfig { trials: 0, ..EmConfig::default() };
        assert!(run_trials::<f64>(&two_cliques(), &cfg).is_err());
    }
}
