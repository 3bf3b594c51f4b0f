#![allow(dead_code)]

use dcsbm_core::instance::{Assignment, Graph, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random multigraph with `m >= 1`; every vertex gets at least one edge
/// when `connected` is set.
pub fn random_graph(n: usize, seed: u64, max_count: u64, connected: bool) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i..n {
                let c = if i == j {
                    u64::from(rng.random_bool(0.15)) * rng.random_range(1..=2)
                } else if rng.random_bool(0.45) {
                    rng.random_range(1..=max_count)
                } else {
                    0
                };
                if c > 0 {
                    edges.push((i, j, c));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).unwrap();
        if g.m() > 0 && (!connected || (0..n).all(|i| !g.is_isolated(i))) {
            return g;
        }
    }
}

pub fn random_instance(n: usize, k: usize, seed: u64) -> Instance {
    Instance::new(random_graph(n, seed, 3, true), k).unwrap()
}

fn ln_fact(n: u64) -> f64 {
    (2..=n).map(|x| (x as f64).ln()).sum()
}

/// Poisson log-probability; `0 ln 0 = 0`, and a positive count at rate 0
/// is impossible.
fn ln_poisson(x: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    x as f64 * lambda.ln() - lambda - ln_fact(x)
}

/// Log-likelihood summed pair by pair straight from the generative model:
/// `A_ij ~ Poisson(k_i k_j w / 2m)` for `i < j` and
/// `A_ii / 2 ~ Poisson(k_i^2 w / 4m)`.
pub fn poisson_loglik(g: &Graph, labels: &[usize], w: &[Vec<f64>]) -> f64 {
    let two_m = g.two_m() as f64;
    let n = g.n();
    let mut ll = 0.0;
    for i in 0..n {
        let ki = g.degree(i) as f64;
        for j in i..n {
            let kj = g.degree(j) as f64;
            let om = w[labels[i]][labels[j]];
            if i == j {
                ll += ln_poisson(g.adj(i, i) / 2, ki * ki * om / (2.0 * two_m));
            } else {
                ll += ln_poisson(g.adj(i, j), ki * kj * om / two_m);
            }
        }
    }
    ll
}

/// Closed-form M-step from pairwise sums.
pub fn oracle_m_step(g: &Graph, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut m = vec![vec![0.0; k]; k];
    let mut kappa = vec![0.0; k];
    for i in 0..n {
        kappa[labels[i]] += g.degree(i) as f64;
        for j in 0..n {
            m[labels[i]][labels[j]] += g.adj(i, j) as f64;
        }
    }
    let two_m = g.two_m() as f64;
    (0..k)
        .map(|r| {
            (0..k)
                .map(|s| {
                    let kk = kappa[r] * kappa[s];
                    if kk > 0.0 {
                        two_m * m[r][s] / kk
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Negative profile log-likelihood of a labelling.
pub fn oracle_objective(g: &Graph, labels: &[usize], k: usize) -> f64 {
    -poisson_loglik(g, labels, &oracle_m_step(g, labels, k))
}

/// Every labelling in `{0..k}^n`.
pub fn all_labellings(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (k as u64).pow(n as u32);
    (0..total).map(move |mut code| {
        let mut l = vec![0; n];
        for x in l.iter_mut() {
            *x = (code % k as u64) as usize;
            code /= k as u64;
        }
        l
    })
}

/// Minimum objective over all `k^n` labellings.
pub fn brute_force(g: &Graph, k: usize) -> (f64, Vec<usize>) {
    all_labellings(g.n(), k)
        .map(|l| (oracle_objective(g, &l, k), l))
        .fold((f64::INFINITY, Vec::new()), |best, cur| if cur.0 < best.0 { cur } else { best })
}

pub fn assignment(labels: &[usize], k: usize) -> Assignment {
    Assignment::new(labels.to_vec(), k).unwrap()
}
