use localsim_core::compilers::CompiledViaColoring;
use localsim_core::decomposition::mpx_clustering;
use localsim_core::engine::{
    max_degree_first, random_order, reverse_order, run_function_mode, run_message_mode, run_sequential, FromFunction, FromProtocol,
    Order,
};
use localsim_core::generators::{self, random_bounded_degree};
use localsim_core::ids::{assign_ids, IdMode};
use localsim_core::problems::{check_solution, Mis, ProperColoring};
use localsim_core::round_elim::{eliminate, random_table, search_table, verify_table, ViewKind};
use localsim_core::symmetry::{
    check_proper, linial_reduce_once, luby_labels, Cycle3Bounded, GreedyColoring, GreedyMis, LinialProtocol, LubyProtocol,
};
use localsim_core::RandomTape;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn function_and_message_views_agree(n in 5usize..120, delta in 2usize..5, seed in any::<u64>()) {
        let g = random_bounded_degree(n, delta, seed).unwrap();
        let ids = assign_ids(&g, 3, seed, IdMode::Random).unwrap();
        let lin = LinialProtocol { delta: g.max_degree(), exponent: 3, initial_range: Some(ids.range_bound - 1) };
        prop_assert_eq!(
            run_message_mode(&lin, &g, &ids.ids).unwrap().labels,
            run_function_mode(&FromProtocol(lin), &g, &ids.ids).unwrap().labels
        );
        let tape = RandomTape::generate(n, 64 * 4, seed ^ 1);
        let labels = luby_labels(&ids, &tape);
        let luby = LubyProtocol { iterations: 4 };
        prop_assert_eq!(
            run_message_mode(&luby, &g, &labels).unwrap().labels,
            run_function_mode(&FromProtocol(luby), &g, &labels).unwrap().labels
        );
        let comp = CompiledViaColoring::new(GreedyColoring::<()>::new(), g.max_degree(), 3);
        let lab: Vec<((), u64)> = ids.ids.iter().map(|&x| ((), x)).collect();
        prop_assert_eq!(
            run_function_mode(&comp, &g, &lab).unwrap().labels,
            run_message_mode(&FromFunction(comp), &g, &lab).unwrap().labels
        );
    }

    #[test]
    fn cycle_views_agree(n in 3usize..150, seed in any::<u64>()) {
        let g = generators::cycle(n).unwrap();
        let tape = RandomTape::generate(n, 2, seed);
        let bits: Vec<u64> = (0..n).map(|u| tape.bits(u, 0, 2)).collect();
        let alg = Cycle3Bounded { lookback: 4, retry: true };
        prop_assert_eq!(
            run_function_mode(&alg, &g, &bits).unwrap().labels,
            run_message_mode(&FromFunction(alg), &g, &bits).unwrap().labels
        );
    }

    #[test]
    fn greedy_under_adversarial_orders(n in 2usize..80, delta in 1usize..6, seed in any::<u64>()) {
        let g = random_bounded_degree(n, delta, seed).unwrap();
        let inputs = vec![(); n];
        let orders = || [
            Order::Adversary(max_degree_first()),
            Order::Given(reverse_order(n)),
            Order::Given(random_order(n, seed)),
            Order::Seeded(seed ^ 7),
        ];
        for o in orders() {
            let r = run_sequential(&GreedyMis::<()>::new(), &g, &inputs, o).unwrap();
            prop_assert!(check_solution(&Mis, &g, &r.labels).unwrap().valid);
        }
        let k = g.max_degree() as u32 + 1;
        for o in orders() {
            let r = run_sequential(&GreedyColoring::<()>::new(), &g, &inputs, o).unwrap();
            let valid = check_solution(&ProperColoring { k }, &g, &r.labels).unwrap().valid;
            prop_assert!(valid);
        }
    }

    #[test]
    fn sequential_runs_are_deterministic(n in 2usize..60, seed in any::<u64>()) {
        let g = random_bounded_degree(n, 4, seed).unwrap();
        let inputs = vec![(); n];
        let a = run_sequential(&GreedyColoring::<()>::new(), &g, &inputs, Order::Seeded(seed)).unwrap();
        let b = run_sequential(&GreedyColoring::<()>::new(), &g, &inputs, Order::Seeded(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn linial_step_keeps_proper(n in 2usize..100, delta in 1usize..5, seed in any::<u64>()) {
        let g = random_bounded_degree(n, delta, seed).unwrap();
        let ids = assign_ids(&g, 2, seed, IdMode::Random).unwrap();
        let (c, k) = linial_reduce_once(&g, &ids.ids, ids.range_bound - 1).unwrap();
        prop_assert!(check_proper(&g, &c).is_ok());
        prop_assert!(c.iter().all(|&x| x >= 1 && x <= k));
    }

    #[test]
    fn mpx_is_seeded_and_separated(n in 2usize..200, seed in any::<u64>()) {
        let g = random_bounded_degree(n, 3, seed).unwrap();
        let (a, _) = mpx_clustering(&g, seed);
        let (b, _) = mpx_clustering(&g, seed);
        prop_assert_eq!(&a, &b);
        for &(u, v) in g.edges() {
            if let (Some(x), Some(y)) = (a.cluster[u], a.cluster[v]) {
                prop_assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn mis_validity_changes_only_near_edit(n in 3usize..40, seed in any::<u64>(), v in any::<prop::sample::Index>()) {
        let g = random_bounded_degree(n, 3, seed).unwrap();
        let labels: Vec<bool> = (0..n).map(|u| (seed >> (u % 64)) & 1 == 1).collect();
        let v = v.index(n);
        let mut edited = labels.clone();
        edited[v] = !edited[v];
        let bad = |l: &[bool]| check_solution(&Mis, &g, l).unwrap().violating_nodes();
        let (a, b) = (bad(&labels), bad(&edited));
        let ball = g.ball_nodes(v, 1);
        for u in 0..n {
            if a.contains(&u) != b.contains(&u) {
                prop_assert!(ball.contains(&u), "node {} changed but is far from {}", u, v);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn elimination_keeps_valid_tables_valid(n_ids in 3u8..8, k in 3u64..6, seed in any::<u64>(), node in any::<bool>()) {
        let kind = if node { ViewKind::Node { t: 1 } } else { ViewKind::Edge { s: 0 } };
        let tab = search_table(kind, n_ids, k, Some(seed), 1 << 20).or_else(|| {
            let t = random_table(kind, n_ids, k, seed);
            verify_table(&t).is_ok().then_some(t)
        });
        if let Some(tab) = tab {
            let e = eliminate(&tab).unwrap();
            prop_assert!(verify_table(&e).is_ok());
            prop_assert_eq!(e.k, 1u64 << k);
            prop_assert!(e.entries.values().all(|&c| c < e.k));
            prop_assert_eq!(eliminate(&tab).unwrap(), e);
        }
    }
}
