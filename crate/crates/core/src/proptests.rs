//! Invariants checked on randomly grown trees.

use crate::bijections::{
    bucket_to_diamond, cluster, cluster_bundled, debucket, diamond_to_bucket, uncluster_bundled, BundleVariant,
    IncreasingDiamond,
};
use crate::codec::{decode, encode, from_json, to_json};
use crate::dist_desc::{pmf_tau, pmf_x, pmf_y};
use crate::dist_k::pmf_k;
use crate::grow::{attraction_probs, sample_tree};
use crate::scalar::int;
use crate::{BucketTree, FamilyKind, FamilySpec, RngStream};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = FamilySpec> {
    prop_oneof![
        (1u32..=4).prop_map(FamilySpec::recursive),
        (1u32..=3, 2u32..=4).prop_map(|(b, d)| FamilySpec::ary(b, d)),
        (1u32..=4, 1i64..=3).prop_map(|(b, a)| FamilySpec::port(b, int(a))),
    ]
}

fn grown(f: &FamilySpec, n: usize, seed: u64) -> BucketTree {
    sample_tree(f, n, &mut RngStream::new(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_trees_are_valid(f in family(), n in 1usize..120, seed in any::<u64>()) {
        let t = grown(&f, n, seed);
        prop_assert_eq!(t.size(), n);
        prop_assert!(t.is_valid());
        prop_assert!(t.census().unwrap().identities_hold(n, f.b));
    }

    #[test]
    fn codec_round_trips(f in family(), n in 1usize..80, seed in any::<u64>()) {
        let t = grown(&f, n, seed);
        prop_assert_eq!(&decode(&encode(&t), f.b).unwrap(), &t);
        prop_assert_eq!(&from_json(&to_json(&t)).unwrap(), &t);
    }

    #[test]
    fn canonical_form_is_idempotent(f in family(), n in 1usize..80, seed in any::<u64>()) {
        let c = grown(&f, n, seed).canonicalize().unwrap();
        prop_assert!(c.is_canonical());
        prop_assert_eq!(&c.canonicalize().unwrap(), &c);
    }

    #[test]
    fn same_seed_same_tree(f in family(), n in 1usize..80, seed in any::<u64>()) {
        prop_assert_eq!(grown(&f, n, seed), grown(&f, n, seed));
    }

    #[test]
    fn attraction_is_a_distribution(f in family(), n in 1usize..40, seed in any::<u64>()) {
        let t = grown(&f, n, seed);
        prop_assert_eq!(attraction_probs(&f, &t).unwrap().total(), int(1));
    }

    #[test]
    fn cluster_inverts_debucketing(b in 2u32..=4, n in 1usize..80, seed in any::<u64>()) {
        let t = grown(&FamilySpec::recursive(b), n, seed);
        prop_assert_eq!(cluster(&debucket(&t), b).unwrap(), t);
    }

    #[test]
    fn diamonds_round_trip(n in 1usize..80, seed in any::<u64>()) {
        let t = grown(&FamilySpec::port(2, int(1)), n, seed);
        let d = bucket_to_diamond(&t).unwrap();
        prop_assert_eq!(d.size(), n);
        let reparsed: IncreasingDiamond = d.to_string().parse().unwrap();
        prop_assert_eq!(&reparsed, &d);
        prop_assert_eq!(diamond_to_bucket(&d).unwrap(), t);
    }

    #[test]
    fn bundled_clusterings_round_trip(n in 1usize..80, seed in any::<u64>()) {
        let port = grown(&FamilySpec::port(1, int(1)), n, seed);
        let b = cluster_bundled(&port, BundleVariant::ThreeBundlePort).unwrap();
        prop_assert_eq!(uncluster_bundled(&b, BundleVariant::ThreeBundlePort).unwrap(), port);
        let rec = grown(&FamilySpec::recursive(1), n, seed).canonicalize().unwrap();
        let b = cluster_bundled(&rec, BundleVariant::TwoBundleRecursive).unwrap();
        prop_assert_eq!(uncluster_bundled(&b, BundleVariant::TwoBundleRecursive).unwrap(), rec);
    }

    #[test]
    fn bucket_size_law_is_a_distribution(f in family(), n in 1usize..400) {
        let p = pmf_k(&f, n).unwrap();
        prop_assert!(p.is_probability());
        prop_assert!(p.support().all(|m| m >= 1 && m <= f.b as i64));
    }

    #[test]
    fn descendant_laws_are_distributions(f in family(), n in 1usize..60, j in 1usize..60) {
        prop_assume!(j <= n);
        let y = pmf_y::<f64>(&f, n, j).unwrap();
        prop_assert!(y.is_probability());
        prop_assert!(y.support().all(|v| v >= 1 && v <= (n + 1 - j) as i64));
        let tau = pmf_tau::<f64>(&f, n, j).unwrap();
        prop_assert!(tau.is_probability());
        if !matches!(f.kind, FamilyKind::Ary { .. }) {
            let x = pmf_x::<f64>(&f, n, j).unwrap();
            prop_assert!(x.is_probability());
            prop_assert!(x.support().all(|v| v >= 0 && v <= (n - j) as i64));
        }
    }
}
