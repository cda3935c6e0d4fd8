use gifs::code_space::{
    address_count, code_metric, enumerate_addresses, subaddress_positions, CodeMetricParams,
};
use gifs::metric_sets::{decimate, decimation_bound, hausdorff, hausdorff_bucketed, PointSet};
use gifs::{Address, EnumCap, PointMetric, Symbol};
use proptest::prelude::*;

fn address(max_arity: usize, max_depth: usize, i_count: u32) -> impl Strategy<Value = Address> {
    (1..=max_arity, 1..=max_depth).prop_flat_map(move |(m, k)| {
        let n = gifs::code_space::symbol_count(m, k).unwrap();
        prop::collection::vec(0..i_count, n).prop_map(move |s| {
            Address::from_flat(m, k, s.into_iter().map(Symbol).collect()).unwrap()
        })
    })
}

/// Two addresses of the same shape.
fn address_pair() -> impl Strategy<Value = (Address, Address, Address)> {
    (1..=3usize, 1..=3usize).prop_flat_map(|(m, k)| {
        let n = gifs::code_space::symbol_count(m, k).unwrap();
        let one = prop::collection::vec(0..3u32, n);
        (one.clone(), one.clone(), one).prop_map(move |(a, b, c)| {
            let mk = |v: Vec<u32>| {
                Address::from_flat(m, k, v.into_iter().map(Symbol).collect()).unwrap()
            };
            (mk(a), mk(b), mk(c))
        })
    })
}

proptest! {
    #[test]
    fn combine_inverts_subaddress(a in address(3, 4, 4)) {
        prop_assume!(a.depth() >= 2);
        let parts: Vec<Address> = (1..=a.arity()).map(|i| a.subaddress(i).unwrap()).collect();
        prop_assert_eq!(Address::combine(a.head(), &parts).unwrap(), a.clone());
        for (i, p) in parts.iter().enumerate() {
            let from_positions: Vec<Symbol> = subaddress_positions(a.arity(), a.depth(), i + 1)
                .into_iter()
                .map(|q| a.symbols()[q])
                .collect();
            // level 1 of the sub-address is level 2 of a, block i
            prop_assert_eq!(&from_positions[..], p.symbols());
        }
    }

    #[test]
    fn parse_inverts_display(a in address(3, 3, 5)) {
        prop_assert_eq!(Address::parse(&a.to_string(), a.arity()).unwrap(), a);
    }

    #[test]
    fn code_metric_is_a_bounded_ultrametric_like_metric((a, b, c) in address_pair(), base in 0.05f64..0.95) {
        let p = CodeMetricParams::new(base).unwrap();
        let ab = code_metric(&a, &b, p).unwrap();
        prop_assert_eq!(ab, code_metric(&b, &a, p).unwrap());
        prop_assert_eq!(ab == 0.0, a == b);
        prop_assert!(ab <= p.bound(a.depth()) + 1e-15);
        let ac = code_metric(&a, &c, p).unwrap();
        let cb = code_metric(&c, &b, p).unwrap();
        prop_assert!(ab <= ac + cb + 1e-15);
    }

    #[test]
    fn truncation_keeps_leading_levels(a in address(3, 4, 3), keep in 1usize..4) {
        prop_assume!(keep <= a.depth());
        let t = a.truncate(keep).unwrap();
        for j in 1..=keep {
            prop_assert_eq!(t.level(j), a.level(j));
        }
    }
}

#[test]
fn enumeration_counts_and_order() {
    // |I|^((m^k - 1)/(m - 1)) from a nested-product recursion
    fn nested(i: u128, m: u32, k: u32) -> u128 {
        if k == 1 {
            i
        } else {
            i * nested(i, m, k - 1).pow(m)
        }
    }
    for (i, m, k) in [
        (2usize, 2usize, 3usize),
        (3, 2, 2),
        (2, 3, 2),
        (4, 1, 5),
        (1, 3, 3),
    ] {
        let all = enumerate_addresses(i, m, k, EnumCap::default()).unwrap();
        assert_eq!(all.len() as u128, nested(i as u128, m as u32, k as u32));
        assert_eq!(address_count(i, m, k), Some(all.len() as u128));
        for (n, a) in all.iter().enumerate() {
            assert_eq!(a.index_in(i), n as u128);
        }
        assert!(all.windows(2).all(|w| w[0].symbols() < w[1].symbols()));
    }
}

#[test]
fn exhaustive_combine_subaddress_algebra() {
    // m = 2, |I| = 2, depths 2 and 3
    for k in 2..=3 {
        let all = enumerate_addresses(2, 2, k, EnumCap::default()).unwrap();
        let smaller = enumerate_addresses(2, 2, k - 1, EnumCap::default()).unwrap();
        for a in &all {
            let parts = [a.subaddress(1).unwrap(), a.subaddress(2).unwrap()];
            assert_eq!(&Address::combine(a.head(), &parts).unwrap(), a);
        }
        for i in 0..2u32 {
            for b1 in &smaller {
                for b2 in &smaller {
                    let c = Address::combine(Symbol(i), &[b1.clone(), b2.clone()]).unwrap();
                    assert_eq!(c.head(), Symbol(i));
                    assert_eq!(&c.subaddress(1).unwrap(), b1);
                    assert_eq!(&c.subaddress(2).unwrap(), b2);
                }
            }
        }
    }
}

fn cloud(dim: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), 1..40)
        .prop_map(move |pts| PointSet::new(dim, &pts).unwrap())
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric_on_clouds(a in cloud(2), b in cloud(2), c in cloud(2)) {
        let m = PointMetric::Euclidean;
        let ab = hausdorff(&a, &b, m).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a, m).unwrap());
        prop_assert_eq!(hausdorff(&a, &a, m).unwrap(), 0.0);
        let ac = hausdorff(&a, &c, m).unwrap();
        let cb = hausdorff(&c, &b, m).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn decimation_error_within_bound(a in cloud(2), eps in 0.01f64..0.5, max in any::<bool>()) {
        let metric = if max { PointMetric::Max } else { PointMetric::Euclidean };
        let d = decimate(&a, eps).unwrap();
        prop_assert!(d.len() <= a.len());
        prop_assert!(hausdorff(&a, &d, metric).unwrap() <= decimation_bound(2, eps, metric) + 1e-12);
    }

    #[test]
    fn bucketed_hausdorff_matches_brute_force(a in cloud(2), b in cloud(2), eps in 0.01f64..0.3) {
        let (da, db) = (decimate(&a, eps).unwrap(), decimate(&b, eps).unwrap());
        for metric in [PointMetric::Euclidean, PointMetric::Max] {
            let brute = gifs::metric_sets::directed_hausdorff(&da, &db, metric).unwrap()
                .max(gifs::metric_sets::directed_hausdorff(&db, &da, metric).unwrap());
            prop_assert_eq!(hausdorff_bucketed(&da, &db, metric).unwrap(), brute);
        }
    }
}
