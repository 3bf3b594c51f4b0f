mod common;

use common::*;
use dcsbm_core::em::{run_single, EmConfig, EmVariant};
use dcsbm_core::evaluation::agreement;
use dcsbm_core::instance::{
    format_instance, format_solution, parse_instance, parse_solution, AffinityMatrix, Assignment, Graph,
    Instance, Solution, SolveStatus,
};
use dcsbm_core::likelihood::{
    core_from_stats, fixed_omega_delta, group_links, m_step_from_stats, profile_from_stats, relocation_delta,
    BlockStats,
};
use dcsbm_core::relaxation::{build_bounds, default_breakpoints, PairTerm, TangentCut};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let pairs = n * (n + 1) / 2;
            (Just(n), prop::collection::vec(0u64..4, pairs))
        })
        .prop_filter_map("graph needs an edge", |(n, counts)| {
            let mut edges = Vec::new();
            let mut it = counts.into_iter();
            for i in 0..n {
                for j in i..n {
                    let c = it.next().unwrap();
                    // thin out loops
                    let c = if i == j { c / 3 } else { c };
                    if c > 0 {
                        edges.push((i, j, c));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            (g.m() > 0).then_some(g)
        })
}

fn labelled(max_n: usize, max_k: usize) -> impl Strategy<Value = (Graph, Assignment)> {
    (graph_strategy(max_n), 1..=max_k).prop_flat_map(|(g, k)| {
        let n = g.n();
        (Just(g), prop::collection::vec(0..k, n).prop_map(move |l| Assignment::new(l, k).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_stable((_, a) in labelled(8, 4)) {
        let c = a.canonicalize();
        prop_assert!(c.is_canonical());
        prop_assert!(c.same_partition(&a));
        prop_assert_eq!(c.canonicalize(), c.clone());
    }

    #[test]
    fn profile_equals_core_at_m_step((g, a) in labelled(9, 4)) {
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let w: AffinityMatrix<f64> = m_step_from_stats(g.two_m(), &st);
        let core = core_from_stats(g.two_m(), &st, &w);
        let prof: f64 = profile_from_stats(g.two_m(), &st);
        prop_assert!((core - prof).abs() < 1e-9);
    }

    #[test]
    fn m_step_respects_upper_bound((g, a) in labelled(9, 4)) {
        let b = build_bounds::<f64>(&g).unwrap();
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let w: AffinityMatrix<f64> = m_step_from_stats(g.two_m(), &st);
        prop_assert!(w.max_entry() <= b.omega_upper * (1.0 + 1e-12));
    }

    #[test]
    fn relocation_delta_matches_recomputation((g, a) in labelled(9, 4), vi in 0usize..9, to in 0usize..4) {
        let i = vi % g.n();
        let to = to % a.k();
        prop_assume!(to != a.label(i));
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let (d, next) = relocation_delta::<f64>(&g, &st, &a, i, to).unwrap();
        let mut l = a.labels().to_vec();
        l[i] = to;
        let b = Assignment::new(l, a.k()).unwrap();
        let st_b = BlockStats::from_assignment(&g, &b).unwrap();
        prop_assert_eq!(&next, &st_b);
        let before: f64 = profile_from_stats(g.two_m(), &st);
        let after: f64 = profile_from_stats(g.two_m(), &st_b);
        prop_assert!((d - (after - before)).abs() < 1e-9);
    }

    #[test]
    fn fixed_omega_delta_matches_recomputation((g, a) in labelled(8, 3), vi in 0usize..8, to in 0usize..3, seed in 0u64..1000) {
        let i = vi % g.n();
        let to = to % a.k();
        prop_assume!(to != a.label(i));
        let k = a.k();
        let vals: Vec<f64> = (0..k * k).map(|x| 0.1 + ((x as u64 * 31 + seed) % 17) as f64 / 5.0).collect();
        let mut w = AffinityMatrix::<f64>::zeros(k);
        for r in 0..k {
            for s in r..k {
                w.set(r, s, vals[r * k + s]);
            }
        }
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let mut links = Vec::new();
        group_links(&g, a.labels(), k, i, &mut links);
        let d = fixed_omega_delta(&g, &st, &w, &links, i, a.label(i), to);
        let mut l = a.labels().to_vec();
        l[i] = to;
        let st_b = BlockStats::from_assignment(&g, &Assignment::new(l, k).unwrap()).unwrap();
        let diff = core_from_stats(g.two_m(), &st_b, &w) - core_from_stats(g.two_m(), &st, &w);
        prop_assert!((d - diff).abs() < 1e-9);
    }

    #[test]
    fn pair_bounds_and_cuts_hold(g in graph_strategy(7)) {
        let b = build_bounds::<f64>(&g).unwrap();
        let bps = default_breakpoints(&b, 6);
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                if g.degree(i) * g.degree(j) == 0 {
                    continue;
                }
                let t = PairTerm::<f64>::of(&g, i, j);
                for p in 0..100 {
                    let w = b.omega_lower + (b.omega_upper - b.omega_lower) * p as f64 / 99.0;
                    let f = t.value(w);
                    prop_assert!(b.mlow(i, j) <= f + 1e-12 * f.abs().max(1.0));
                    prop_assert!(f <= b.mup(i, j) + 1e-12 * f.abs().max(1.0));
                    for &bp in &bps {
                        let cut = TangentCut::from_term(i, j, &t, bp);
                        prop_assert!(cut.value(w) <= f + 1e-12 * f.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn agreement_is_permutation_invariant((_, a) in labelled(10, 4), shift in 0usize..4) {
        let k = a.k();
        let perm: Vec<usize> = a.labels().iter().map(|&l| (l + shift) % k).collect();
        let b = Assignment::new(perm, k).unwrap();
        prop_assert_eq!(agreement(&a, &b).unwrap(), 1.0);
        let t = Assignment::new(a.labels().iter().map(|&l| (l * 7 + 1) % k).collect(), k).unwrap();
        prop_assert_eq!(agreement(&a, &t).unwrap(), agreement(&t, &a).unwrap());
        prop_assert_eq!(agreement(&b, &t).unwrap(), agreement(&a, &t).unwrap());
    }

    #[test]
    fn instance_text_round_trip((g, a) in labelled(8, 3), seed in any::<u64>()) {
        let inst = Instance {
            graph: g,
            k: a.k(),
            ground_truth: Some(a),
            gen_omega: None,
            seed: Some(seed),
        };
        let text = format_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(format_instance(&back), text);
        prop_assert_eq!(back.graph, inst.graph);
    }

    #[test]
    fn solution_text_round_trip((g, a) in labelled(8, 3)) {
        let st = BlockStats::from_assignment(&g, &a).unwrap();
        let omega: AffinityMatrix<f64> = m_step_from_stats(g.two_m(), &st);
        let sol = Solution { objective: 12.5, status: SolveStatus::Feasible, labels: a, omega };
        let back = parse_solution(&format_solution(&sol)).unwrap();
        prop_assert_eq!(back.labels, sol.labels);
        prop_assert_eq!(back.status, sol.status);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn em_traces_are_monotone(g in graph_strategy(9), k in 1usize..=3, seed in any::<u64>(), v in 0usize..3) {
        let variant = [EmVariant::Ls1, EmVariant::Ls2, EmVariant::Exact][v];
        let inst = Instance::new(g, k).unwrap();
        let r = run_single::<f64>(&inst, &EmConfig { variant, seed, ..EmConfig::default() }, 0).unwrap();
        for w in r.trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
        let oracle = oracle_objective(&inst.graph, r.assignment.labels(), k);
        prop_assert!((oracle - r.objective).abs() < 1e-8);
    }
}
