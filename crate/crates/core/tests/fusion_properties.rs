mod common;

use std::collections::BTreeMap;

use common::*;
use eprm::evidence::{dempster_combine, pignistic, MassAssignment, SetEvent};
use eprm::pattern::{fuse_sequence, fuse_two, Intersection, RightIntersection, Union};
use eprm::rps::rps_right_combine;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #[test]
    fn dempster_matches_enumeration(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let a = random_mask_source(&mut r, n);
        let b = random_mask_source(&mut r, n);
        let got = dempster_combine(&mask_source(n, &a), &mask_source(n, &b));
        match dempster_oracle(&a, &b) {
            None => prop_assert!(got.is_err()),
            Some((expected, k)) => {
                let (fused, conflict) = got.unwrap();
                prop_assert!(fused.approx_eq(&mask_source(n, &expected), 1e-9));
                prop_assert!((conflict - k).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn intersection_is_order_free(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let sources: Vec<MassAssignment<SetEvent>> =
            (0..3).map(|_| mask_source(n, &random_mask_source(&mut r, n))).collect();
        let forward = fuse_sequence(&sources, &Intersection);
        let reversed: Vec<_> = sources.iter().rev().cloned().collect();
        let backward = fuse_sequence(&reversed, &Intersection);
        match (forward, backward) {
            (Ok(f), Ok(b)) => prop_assert!(f.approx_eq(&b, 1e-9)),
            (f, b) => prop_assert_eq!(f.is_err(), b.is_err()),
        }
    }

    #[test]
    fn outputs_are_normalized(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let m = n.min(4);
        let a = mask_source(m, &random_mask_source(&mut r, m));
        let b = mask_source(m, &random_mask_source(&mut r, m));
        if let Ok(f) = fuse_two(&a, &b, &Intersection) {
            prop_assert!(well_formed(&f));
        }
        prop_assert!(well_formed(&fuse_two(&a, &b, &Union).unwrap()));
        let perms = [random_perm_source(&mut r, n), random_perm_source(&mut r, n)];
        if let Ok(f) = fuse_sequence(&perms, &RightIntersection) {
            prop_assert!(well_formed(&f));
        }
    }

    #[test]
    fn rps_fold_matches_generic_fusion(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let sources: Vec<_> = (0..3).map(|_| random_perm_source(&mut r, n)).collect();
        let direct = rps_right_combine(&sources);
        let generic = fuse_sequence(&sources, &RightIntersection);
        match (direct, generic) {
            (Ok(d), Ok(g)) => prop_assert!(d.approx_eq(&g, 1e-12)),
            (d, g) => prop_assert_eq!(d, g),
        }
    }

    #[test]
    fn pignistic_of_bayesian_source_is_identity(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let weights = random_weights(&mut r, n);
        let source = MassAssignment::new(
            space(n),
            LABELS[..n].iter().zip(&weights).map(|(l, &w)| (SetEvent::new([*l]), w)),
        )
        .unwrap();
        let expected: BTreeMap<String, f64> =
            LABELS[..n].iter().map(|l| l.to_string()).zip(weights).collect();
        let p = pignistic(&source);
        prop_assert_eq!(p.len(), expected.len());
        for (l, w) in &expected {
            prop_assert!((p[l] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuous_source_is_neutral(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let sp = space(n);
        let b = mask_source(n, &random_mask_source(&mut r, n));
        let vacuous = MassAssignment::new(sp.clone(), [(SetEvent::full(&sp), 1.0)]).unwrap();
        prop_assert!(fuse_two(&vacuous, &b, &Intersection).unwrap().approx_eq(&b, 1e-12));
        prop_assert!(fuse_two(&b, &vacuous, &Intersection).unwrap().approx_eq(&b, 1e-12));
    }
}
