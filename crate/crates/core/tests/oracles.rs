mod common;

use common::*;
use dcsbm_core::em::{local_search_from, run_trials, EmConfig, EmVariant};
use dcsbm_core::exact::{solve_estep_exact, solve_exact, EstepConfig, SolveConfig, VertexOrder};
use dcsbm_core::generator::{generate_seeded, sample_graph, GeneratorConfig, OmegaSpec};
use dcsbm_core::instance::{AffinityMatrix, Instance, SolveStatus};
use dcsbm_core::likelihood::{constant_term, log_likelihood, m_step, profile_objective};
use dcsbm_core::rng::rng_from_seed;

#[test]
fn likelihood_matches_poisson_model() {
    for seed in 0..40 {
        let g = random_graph(6, seed, 3, false);
        let k = 3;
        let labels: Vec<usize> = (0..6).map(|i| (i * 7 + seed as usize) % k).collect();
        let a = assignment(&labels, k);
        let w: AffinityMatrix<f64> = m_step(&g, &a).unwrap();
        let wv: Vec<Vec<f64>> = (0..k).map(|r| (0..k).map(|s| w.get(r, s)).collect()).collect();
        let ll = log_likelihood(&g, &a, &w).unwrap().total();
        let oracle = poisson_loglik(&g, &labels, &wv);
        assert!((ll - oracle).abs() < 1e-9, "seed {seed}: {ll} vs {oracle}");
        let p: f64 = profile_objective(&g, &a).unwrap();
        assert!((p + oracle).abs() < 1e-9);
    }
}

#[test]
fn constant_for_two_vertices() {
    let g = dcsbm_core::Graph::from_edges(2, &[(0, 1, 1)]).unwrap();
    let c: f64 = constant_term(&g).unwrap();
    assert!((c - 0.5f64.ln()).abs() < 1e-12);
}

#[test]
fn exact_matches_brute_force() {
    for seed in 0..30u64 {
        let n = 4 + (seed % 4) as usize;
        let k = 2 + (seed % 2) as usize;
        let inst = random_instance(n, k, 1000 + seed);
        let (best, _) = brute_force(&inst.graph, k);
        for (sbc, order) in [(true, VertexOrder::DegreeDescending), (false, VertexOrder::Input)] {
            let cfg = SolveConfig { use_sbc: sbc, vertex_order: order, time_limit: None, ..SolveConfig::default() };
            let rep = solve_exact::<f64>(&inst, &cfg).unwrap();
            assert_eq!(rep.status, SolveStatus::Optimal);
            assert!((rep.objective - best).abs() < 1e-8, "seed {seed}: {} vs {best}", rep.objective);
            assert!(rep.bound <= rep.objective + 1e-9);
            let recomputed = oracle_objective(&inst.graph, rep.assignment.labels(), k);
            assert!((recomputed - rep.objective).abs() < 1e-8);
        }
    }
}

#[test]
fn exact_in_f32_is_close() {
    for seed in 0..5u64 {
        let inst = random_instance(6, 2, 50 + seed);
        let (best, _) = brute_force(&inst.graph, 2);
        let rep = solve_exact::<f32>(&inst, &SolveConfig { time_limit: None, ..SolveConfig::default() }).unwrap();
        assert!((f64::from(rep.objective) - best).abs() < 1e-3 * best.abs().max(1.0));
    }
}

#[test]
fn parallel_exact_agrees() {
    for seed in 0..8u64 {
        let inst = random_instance(8, 3, 77 + seed);
        let serial = solve_exact::<f64>(&inst, &SolveConfig { time_limit: None, ..SolveConfig::default() }).unwrap();
        let par = solve_exact::<f64>(&inst, &SolveConfig { time_limit: None, threads: 4, ..SolveConfig::default() })
            .unwrap();
        assert!((serial.objective - par.objective).abs() < 1e-9);
        assert_eq!(par.status, SolveStatus::Optimal);
    }
}

/// Minimum of `sum_{i<=j}` pair costs at fixed affinities, by enumeration.
fn estep_brute(inst: &Instance, w: &[Vec<f64>]) -> f64 {
    all_labellings(inst.graph.n(), inst.k)
        .map(|l| -poisson_loglik(&inst.graph, &l, w))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn estep_matches_enumeration() {
    for seed in 0..20u64 {
        let n = 4 + (seed % 5) as usize;
        let k = 2 + (seed % 2) as usize;
        let inst = random_instance(n, k, 300 + seed);
        let labels: Vec<usize> = (0..n).map(|i| (i + seed as usize) % k).collect();
        let w: AffinityMatrix<f64> = m_step(&inst.graph, &assignment(&labels, k)).unwrap();
        let wv: Vec<Vec<f64>> = (0..k).map(|r| (0..k).map(|s| w.get(r, s)).collect()).collect();
        let r = solve_estep_exact(&inst, &w, &EstepConfig::default()).unwrap();
        assert!(r.optimal);
        let got = -poisson_loglik(&inst.graph, r.assignment.labels(), &wv);
        let want = estep_brute(&inst, &wv);
        assert!((got - want).abs() < 1e-8, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn heuristics_never_beat_the_optimum() {
    for seed in 0..10u64 {
        let inst = random_instance(7, 2, 500 + seed);
        let opt = solve_exact::<f64>(&inst, &SolveConfig { time_limit: None, ..SolveConfig::default() }).unwrap();
        for variant in [EmVariant::Ls1, EmVariant::Ls2, EmVariant::Exact] {
            let cfg = EmConfig { variant, trials: 10, seed, ..EmConfig::default() };
            for r in run_trials::<f64>(&inst, &cfg).unwrap() {
                assert!(r.objective >= opt.objective - 1e-9);
            }
        }
    }
}

#[test]
fn ls2_stops_at_profile_local_optima() {
    for seed in 0..15u64 {
        let inst = random_instance(8, 3, 900 + seed);
        let cfg = EmConfig { variant: EmVariant::Ls2, trials: 5, seed, ..EmConfig::default() };
        for r in run_trials::<f64>(&inst, &cfg).unwrap() {
            let base = oracle_objective(&inst.graph, r.assignment.labels(), 3);
            assert!((base - r.objective).abs() < 1e-9);
            for i in 0..8 {
                for to in 0..3 {
                    let mut l = r.assignment.labels().to_vec();
                    if l[i] == to {
                        continue;
                    }
                    l[i] = to;
                    assert!(oracle_objective(&inst.graph, &l, 3) >= base - 1e-9, "seed {seed} i {i} to {to}");
                }
            }
        }
    }
}

#[test]
fn ls1_and_ls2_keep_an_optimal_labelling() {
    let inst = random_instance(7, 2, 4242);
    let opt = solve_exact::<f64>(&inst, &SolveConfig { time_limit: None, ..SolveConfig::default() }).unwrap();
    for v in [EmVariant::Ls1, EmVariant::Ls2] {
        let r = local_search_from::<f64>(&inst, &opt.assignment, v, &EmConfig::default()).unwrap();
        assert!((r.objective - opt.objective).abs() < 1e-9);
    }
}

#[test]
fn generator_edge_means_follow_the_model() {
    let cfg = GeneratorConfig::new(
        4,
        2,
        OmegaSpec::Explicit(AffinityMatrix::new(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap()),
        0,
    );
    let truth = assignment(&[0, 0, 1, 1], 2);
    let w = AffinityMatrix::new(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
    let mut rng = rng_from_seed(99);
    let draws = 20_000;
    let mut sum = [0.0; 16];
    for _ in 0..draws {
        let g = sample_graph(&cfg, &w, &truth, &mut rng).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                sum[i * 4 + j] += g.adj(i, j) as f64;
            }
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            let om = w.get(truth.label(i), truth.label(j));
            let mean = sum[i * 4 + j] / draws as f64;
            // A_ii counts each loop twice, so its mean is omega as well.
            let sd = (om / draws as f64).sqrt() * if i == j { 2.0f64.sqrt() } else { 1.0 };
            assert!((mean - om).abs() < 5.0 * sd, "({i},{j}) mean {mean} expected {om}");
        }
    }
}

#[test]
fn generated_instances_respect_rejection_rules() {
    for seed in 0..20 {
        let cfg = GeneratorConfig::new(8, 3, OmegaSpec::S2Strength(dcsbm_core::generator::Strength::Low), seed);
        let inst = generate_seeded(&cfg).unwrap();
        assert!((0..8).all(|i| !inst.graph.is_isolated(i)));
        assert_eq!(inst.ground_truth.as_ref().unwrap().groups_used(), 3);
    }
}
