mod common;

use common::*;
use eprm::decision::speed_graph_po;
use eprm::rgs::{
    classify, from_perm, longest_path_reduce, remove_cycles, to_perm, GraphEvent, GraphKind,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64) -> GraphEvent {
    random_graph(&mut ChaCha8Rng::seed_from_u64(seed), 6)
}

/// Cycle removal only ever deletes edges, so the oracle vote of an input
/// without opposite pairs is the input itself.
fn without_opposite_pairs(g: &GraphEvent) -> GraphEvent {
    vote_oracle(g, &GraphEvent::empty())
}

proptest! {
    #[test]
    fn remove_cycles_yields_acyclic_subgraph(seed in any::<u64>()) {
        let g = without_opposite_pairs(&graph(seed));
        let out = remove_cycles(&g);
        prop_assert!(is_acyclic(&out));
        prop_assert!(out.edges().is_subset(g.edges()));
        prop_assert_eq!(out.nodes(), g.nodes());
        prop_assert_eq!(remove_cycles(&out), out);
    }

    #[test]
    fn reduction_keeps_reachability(seed in any::<u64>()) {
        let dag = remove_cycles(&without_opposite_pairs(&graph(seed)));
        let reduced = longest_path_reduce(&dag);
        prop_assert_eq!(closure(&reduced), closure(&dag));
        prop_assert!(is_shortcut_free(&reduced));
        prop_assert!(reduced.edges().is_subset(dag.edges()));
        prop_assert_eq!(longest_path_reduce(&reduced), reduced);
    }

    #[test]
    fn speed_graph_output_is_reduced_vote(a in any::<u64>(), b in any::<u64>()) {
        let (ga, gb) = (graph(a), graph(b));
        let out = speed_graph_po(&ga, &gb);
        prop_assert_ne!(classify(&out), GraphKind::Cyclic);
        prop_assert!(is_shortcut_free(&out));
        prop_assert_eq!(closure(&out), closure(&remove_cycles(&vote_oracle(&ga, &gb))));
        prop_assert_eq!(speed_graph_po(&ga, &gb), speed_graph_po(&gb, &ga));
    }

    #[test]
    fn agreeing_chains_fuse_to_themselves(seed in any::<u64>(), n in 2usize..=6) {
        let p = random_perm(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let chain = from_perm(&p);
        let out = speed_graph_po(&chain, &chain);
        if p.len() >= 2 {
            prop_assert_eq!(to_perm(&out), Some(p));
        } else {
            prop_assert!(out.edges().is_empty());
        }
    }
}
