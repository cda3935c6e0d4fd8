use gifs::catalog;
use gifs::diagnostics::{
    check_meir_keeler, classify, estimate_lipschitz, ClassifyConfig, ContractionClass,
    MeirKeelerParams, SampleBox,
};
use gifs::{AffineMap, GifsSystem, PointMetric};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn affine_map(seed: u64, m: usize, d: usize, scale: f64) -> AffineMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = (0..m)
        .map(|_| {
            (0..d)
                .map(|_| (0..d).map(|_| scale * rng.gen_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    AffineMap::new(blocks, vec![0.1; d]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn measured_lipschitz_never_exceeds_analytic(
        seed in any::<u64>(), m in 1usize..=3, d in 1usize..=3, max in any::<bool>(),
    ) {
        let metric = if max { PointMetric::Max } else { PointMetric::Euclidean };
        let f = affine_map(seed, m, d, 1.5);
        let bx = SampleBox::new(vec![(-1.0, 2.0); d]).unwrap();
        let est = estimate_lipschitz(&f, metric, &bx, 500, seed).unwrap();
        prop_assert!(est.measured <= est.analytic.unwrap() + 1e-9);
    }

    /// A strict contraction with factor `L` passes the Meir-Keeler check with
    /// `δ_ε = ε(1-L)/(2L)` and `λ_ε = ε(1-L)/4`.
    #[test]
    fn strict_contraction_passes_derived_meir_keeler(seed in any::<u64>(), m in 1usize..=2, d in 1usize..=2) {
        let maps = (0..3).map(|i| affine_map(seed.wrapping_add(i), m, d, 0.3)).collect();
        let s = GifsSystem::new(maps, PointMetric::Euclidean).unwrap();
        let cfg = ClassifyConfig {
            sample_box: Some(SampleBox::new(vec![(-1.0, 1.0); d]).unwrap()),
            samples: 500,
            ..ClassifyConfig::default()
        };
        let c = classify(&s, &cfg).unwrap();
        if c.class == ContractionClass::StrictContraction {
            let l = c.evidence.sup_analytic().unwrap();
            let params = MeirKeelerParams::from_contraction_factor(l, vec![0.1, 0.5, 1.0]).unwrap();
            let report = check_meir_keeler(&s, &params, cfg.sample_box.as_ref().unwrap(), 2000, seed).unwrap();
            prop_assert!(report.passed(), "{}", report.report());
        }
    }
}

#[test]
fn dyadic_family_meets_derived_rule_too() {
    let s = catalog::dyadic_average_family(10);
    let params = MeirKeelerParams::from_contraction_factor(0.5, vec![0.1, 0.5, 1.0]).unwrap();
    let report = check_meir_keeler(&s, &params, &SampleBox::unit(1), 20_000, 3).unwrap();
    assert!(report.passed(), "{}", report.report());
}

/// More samples never turn an expanding system into a verified class.
#[test]
fn expanding_stays_unverified_as_samples_grow() {
    let expanding = GifsSystem::new(
        vec![AffineMap::new(vec![vec![vec![2.0]], vec![vec![0.0]]], vec![0.0]).unwrap()],
        PointMetric::Euclidean,
    )
    .unwrap();
    for samples in [100, 1000, 10_000] {
        let c = classify(
            &expanding,
            &ClassifyConfig {
                samples,
                ..ClassifyConfig::default()
            },
        )
        .unwrap();
        assert_eq!(c.class, ContractionClass::Unverified);
    }
}

#[test]
fn strict_contraction_implies_operator_ratio() {
    let s = catalog::dyadic_average_family(4);
    let c = classify(
        &s,
        &ClassifyConfig {
            sample_box: Some(SampleBox::unit(1)),
            samples: 500,
            ..ClassifyConfig::default()
        },
    )
    .unwrap();
    assert_eq!(c.class, ContractionClass::StrictContraction);
    let l = c.evidence.sup_analytic().unwrap();
    let ratio = gifs::projection::operator_contraction_ratio(
        &s,
        2,
        50,
        &[(0.0, 1.0)],
        1,
        gifs::EnumCap::default(),
    )
    .unwrap();
    assert!(ratio <= l + 1e-9);
}
