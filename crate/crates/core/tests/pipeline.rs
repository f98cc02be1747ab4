use degulab_core::construction::{build_construction, build_construction_with, verify_homogeneity, ConstructionParams, LayerStorage};
use degulab_core::hosts::{embed_into_almost_regular, erdos_gallai, realize_degree_sequence};
use degulab_core::io::{read_dgl, write_dgl};
use degulab_core::pair::check_degular;
use degulab_core::partition::{check_degular_partition, refinement_beta};
use degulab_core::rounding::round_to_simple;
use degulab_core::{GraphKind, VertexSet, WeightedGraph};
use proptest::prelude::*;

fn simple_graph() -> impl Strategy<Value = WeightedGraph> {
    (1usize..20).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut g = WeightedGraph::empty(n, GraphKind::Simple);
            let mut k = 0;
            for u in 0..n {
                for v in (u + 1)..n {
                    if bits[k] {
                        g.set_weight(u, v, 1.0).unwrap();
                    }
                    k += 1;
                }
            }
            g
        })
    })
}

fn weighted_graph() -> impl Strategy<Value = WeightedGraph> {
    (2usize..16).prop_flat_map(|n| {
        proptest::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], n * (n - 1) / 2)
            .prop_map(move |w| WeightedGraph::from_upper(n, GraphKind::Weighted, w).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn finest_level_has_no_bad_pairs(seed in any::<u64>(), k in 1usize..4) {
        let b = build_construction(32 * k, 3, 0.02, 1, seed).unwrap();
        let z = b.level_partition(3);
        let v = check_degular_partition(&b.total, &z, 0.0).unwrap();
        prop_assert!(v.equitable);
        prop_assert!(v.bad_pairs.is_empty());
        prop_assert!(verify_homogeneity(&b).pass);
    }

    #[test]
    fn total_only_matches_materialized(seed in any::<u64>()) {
        let full = build_construction(64, 3, 0.02, 1, seed).unwrap();
        let mut p = ConstructionParams::new(64, 3, 0.02, 1, seed);
        p.storage = LayerStorage::TotalOnly;
        let lean = build_construction_with(&p).unwrap();
        prop_assert_eq!(full.total.upper(), lean.total.upper());
        prop_assert!(lean.layers.is_none());
    }

    #[test]
    fn level_partitions_nest(seed in any::<u64>()) {
        let b = build_construction(64, 3, 0.02, 1, seed).unwrap();
        for r in 1..=3 {
            let rep = refinement_beta(&b.level_partition(r), &b.level_partition(r - 1)).unwrap();
            prop_assert_eq!(rep.beta, 0.0);
        }
    }

    #[test]
    fn rounding_respects_support(g in weighted_graph(), seed in any::<u64>()) {
        let s = round_to_simple(&g, seed);
        prop_assert!(s.is_simple());
        for u in 0..g.n() {
            for v in (u + 1)..g.n() {
                let w = g.weight(u, v);
                if w == 0.0 {
                    prop_assert!(!s.has_edge(u, v));
                }
                if w == 1.0 {
                    prop_assert!(s.has_edge(u, v));
                }
            }
        }
        let again = round_to_simple(&g, seed);
        prop_assert_eq!(again.upper(), s.upper());
    }

    #[test]
    fn dgl_round_trip(g in weighted_graph()) {
        let mut buf = Vec::new();
        write_dgl(&g, &mut buf).unwrap();
        let back = read_dgl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.upper(), g.upper());
        let binary = g.upper().iter().all(|&w| w == 0.0 || w == 1.0);
        prop_assert_eq!(back.is_simple(), binary);
    }

    #[test]
    fn degree_sequences_of_graphs_are_realized(g in simple_graph()) {
        let d: Vec<usize> = g.degrees().iter().map(|&x| x as usize).collect();
        prop_assert!(erdos_gallai(&d).is_none());
        let h = realize_degree_sequence(&d).unwrap().unwrap();
        let hd: Vec<usize> = h.degrees().iter().map(|&x| x as usize).collect();
        prop_assert_eq!(hd, d);
    }

    #[test]
    fn embedding_is_induced_and_almost_regular(g in simple_graph()) {
        let e = embed_into_almost_regular(&g).unwrap();
        let vs: Vec<usize> = (0..g.n()).collect();
        let induced = e.host.induced(&vs);
        prop_assert_eq!(induced.upper(), g.upper());
        prop_assert!(e.report.spread <= 1);
        prop_assert_eq!(e.host.n(), 2 * g.n());
    }

    #[test]
    fn rounded_pairs_keep_degularity_of_complete_blocks(seed in any::<u64>(), h in 2usize..10) {
        // 0/1 weights round to themselves, so verdicts agree
        let g = WeightedGraph::from_fn(2 * h, GraphKind::Weighted, |u, v| if (u < h) != (v < h) && (u + v) % 3 == 0 { 1.0 } else { 0.0 }).unwrap();
        let s = round_to_simple(&g, seed);
        let (a, b) = (VertexSet::range(0, h), VertexSet::range(h, 2 * h));
        for eps in [0.0, 0.1, 0.3] {
            prop_assert_eq!(check_degular(&g, &a, &b, eps).unwrap().pass, check_degular(&s, &a, &b, eps).unwrap().pass);
        }
    }
}
