use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treespan::cnf::{
    all_sign_patterns, evaluate, exhaustive_solve_within, parse_dimacs, random_formula, random_planted, Assignment, Formula,
    ParseMode,
};
use treespan::decider::{ambiguous_variables, extract_assignment, verify_distance_chain};
use treespan::graph::{
    bfs_distances, check_ball_connectivity, graph_from_edges, is_bfs_tree, is_v_concentrated, max_stretch, Graph, SpanningTree,
};
use treespan::oracles::{
    all_pairs_stretch, concentrated_by_definition, exact_mmst, for_each_spanning_tree, min_concentrated_stretch,
    random_connected_graph, sample_bfs_tree, DEFAULT_CAP,
};
use treespan::reduction::{build_reduction, get_bb, VertexLabel};
use treespan::witness::{certify, tree_7_spanner};

fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0.2f64..0.9, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_connected_graph(n, p, &mut rng)
    })
}

fn planted(max_n: usize, max_m: usize) -> impl Strategy<Value = (Formula, Assignment)> {
    (3..=max_n, 1..=max_m, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Assignment::from_index(n, seed % (1 << n));
        (random_planted(&a, m, &mut rng).unwrap(), a)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stretch_at_least_one_and_one_only_on_trees(g in connected_graph(9), seed in any::<u64>()) {
        let t = sample_bfs_tree(&g, 0, seed).unwrap();
        let report = max_stretch(&t);
        prop_assert!(report.per_edge_tree_distance.iter().all(|&(_, d)| d >= 1));
        prop_assert_eq!(report.max_stretch == 1, g.is_tree());
    }

    #[test]
    fn bfs_trees_are_concentrated(g in connected_graph(10), seed in any::<u64>()) {
        for root in 0..g.vertex_count() {
            let t = sample_bfs_tree(&g, root, seed).unwrap();
            prop_assert!(is_bfs_tree(&t, root).unwrap());
            prop_assert!(is_v_concentrated(&t, root).unwrap());
            prop_assert!(concentrated_by_definition(&t, root).unwrap());
        }
    }

    #[test]
    fn fast_concentration_matches_definition(g in connected_graph(7)) {
        for_each_spanning_tree(&g, DEFAULT_CAP, |edges| {
            let t = SpanningTree::new(&g, edges.iter().copied()).unwrap();
            for root in 0..g.vertex_count() {
                assert_eq!(is_v_concentrated(&t, root).unwrap(), concentrated_by_definition(&t, root).unwrap());
            }
        }).unwrap();
    }

    #[test]
    fn edge_stretch_equals_all_pairs_stretch(g in connected_graph(8), seed in any::<u64>()) {
        let t = sample_bfs_tree(&g, (seed as usize) % g.vertex_count(), seed).unwrap();
        let (dt, dg) = all_pairs_stretch(&t).unwrap();
        prop_assert_eq!(dt, max_stretch(&t).max_stretch * dg);
    }

    #[test]
    fn mmst_is_optimal_and_keeps_balls_connected(g in connected_graph(6)) {
        let (best, witness) = exact_mmst(&g, DEFAULT_CAP).unwrap();
        prop_assert_eq!(max_stretch(&witness).max_stretch, best);
        for_each_spanning_tree(&g, DEFAULT_CAP, |edges| {
            let t = SpanningTree::new(&g, edges.iter().copied()).unwrap();
            assert!(max_stretch(&t).max_stretch >= best);
        }).unwrap();
        for root in 0..g.vertex_count() {
            prop_assert!(check_ball_connectivity(&witness, root, best).unwrap());
            prop_assert!(min_concentrated_stretch(&g, root, DEFAULT_CAP).unwrap().0 >= best);
        }
    }

    #[test]
    fn solver_agrees_with_brute_force(n in 3usize..=12, m in 1usize..=40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(n, m, &mut rng).unwrap();
        match exhaustive_solve_within(&f, 12).unwrap() {
            Some(a) => prop_assert!(evaluate(&f, &a).unwrap()),
            None => {
                for code in 0..1u64 << n {
                    prop_assert!(!evaluate(&f, &Assignment::from_index(n, code)).unwrap());
                }
            }
        }
    }

    #[test]
    fn dimacs_round_trip(n in 3usize..=10, m in 1usize..=12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(n, m, &mut rng).unwrap();
        prop_assert_eq!(parse_dimacs(&f.to_dimacs(), ParseMode::Strict).unwrap(), f);
    }

    #[test]
    fn reduction_graphs_are_connected_with_layered_distances((f, _) in planted(5, 3)) {
        let rg = build_reduction(&f, 2).unwrap();
        let g = rg.graph();
        let d = bfs_distances(g, rg.center()).unwrap();
        for b in rg.blocks() {
            let layer = b.id.layer;
            prop_assert_eq!(d[b.vplus], 2 * layer);
            prop_assert_eq!(d[b.vminus], 2 * layer);
            for x in b.var_vertices.iter().chain(b.var_clause_vertices.iter().flatten()) {
                prop_assert_eq!(d[*x], 2 * layer + 1);
                // Only the glue vertices are closer.
                let closer: Vec<_> = g.neighbors(*x).iter().copied().filter(|&y| d[y] < d[*x]).collect();
                prop_assert!(closer.iter().all(|&y| y == b.vplus || y == b.vminus));
            }
            for (ci, qs) in b.q_vertices.iter().enumerate() {
                let garray = b.g_array(ci, rg.clause_variables(ci));
                for &q in qs {
                    prop_assert_eq!(d[q], 2 * layer + 2);
                    for &y in g.neighbors(q) {
                        if d[y] < d[q] {
                            prop_assert!(garray.contains(&y));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn get_bb_deterministic((f, _) in planted(5, 4)) {
        prop_assert_eq!(get_bb(&f, 2, 3).unwrap(), get_bb(&f, 2, 3).unwrap());
    }

    #[test]
    fn witness_is_a_certified_7_spanner((f, a) in planted(5, 4), h in 2usize..=3) {
        let rg = build_reduction(&f, h).unwrap();
        let w = tree_7_spanner(&rg, &f, &a).unwrap();
        let cert = certify(&rg, &w.tree).unwrap();
        prop_assert!(cert.is_tree_7_spanner_witness(), "{:?}", cert);
        prop_assert_eq!(&tree_7_spanner(&rg, &f, &a).unwrap().tree, &w.tree);
        for b in rg.blocks() {
            prop_assert_eq!(extract_assignment(&w.tree, &rg, b.id).unwrap(), a.clone());
        }
    }

    #[test]
    fn concentrated_trees_contain_path_and_are_unambiguous((f, _) in planted(4, 3), seed in any::<u64>()) {
        let rg = build_reduction(&f, 2).unwrap();
        let t = sample_bfs_tree(rg.graph(), rg.center(), seed).unwrap();
        let [q1, p1, v, p2, q2] = rg.path();
        for (x, y) in [(q1, p1), (p1, v), (v, p2), (p2, q2)] {
            prop_assert!(t.contains(x, y));
        }
        for b in rg.blocks() {
            prop_assert!(ambiguous_variables(&t, &rg, b.id).unwrap().is_empty());
        }
    }

    #[test]
    fn unsat_lower_bound(seed in any::<u64>(), extra in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clauses = all_sign_patterns(4, [1, 3, 4]).unwrap().clauses().to_vec();
        if extra > 0 {
            clauses.extend_from_slice(random_formula(4, extra, &mut rng).unwrap().clauses());
        }
        let f = Formula::new(4, clauses).unwrap();
        let h = 2;
        let rg = build_reduction(&f, h).unwrap();
        let t = sample_bfs_tree(rg.graph(), rg.center(), seed).unwrap();
        prop_assert!(max_stretch(&t).max_stretch > 4 * h);
        let chain = verify_distance_chain(&t, &rg, &f).unwrap();
        prop_assert!(chain.layers[&h].1 >= 4 * h);
        prop_assert!(chain.stretched_edge.1 > 4 * h);
    }
}

#[test]
fn concentration_depends_on_root() {
    let c4 = graph_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let t = SpanningTree::new(&c4, [(0, 1), (1, 2), (0, 3)].map(|(a, b)| treespan::graph::Edge::new(a, b))).unwrap();
    assert!(is_v_concentrated(&t, 0).unwrap());
    assert!(!is_v_concentrated(&t, 2).unwrap());
    assert!(!concentrated_by_definition(&t, 2).unwrap());
}

#[test]
fn identified_vertices_keep_both_roles() {
    let f = Formula::from_triples(3, &[[1, 2, -3], [-1, 2, 3]]).unwrap();
    let rg = build_reduction(&f, 3).unwrap();
    for b in rg.blocks().iter().skip(1) {
        let roles = rg.roles(b.vplus);
        assert!(roles.iter().any(|r| matches!(r, VertexLabel::Q { .. })));
        assert!(roles.iter().any(|r| matches!(r, VertexLabel::VPlus(id) if *id == b.id)));
    }
}
