use gifs::catalog;
use gifs::code_space::symbol_count;
use gifs::projection::{
    apply_h, check_combine_identity, check_functional_equation, operator_contraction_ratio,
    pi_iterate, random_code_function, sup_distance, CodeFunction, CodeShape, PiConfig,
};
use gifs::system::diagonal_power;
use gifs::{Address, AffineMap, EnumCap, GifsSystem, PointMap, PointMetric, Symbol};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recursive word evaluation straight from the definition.
fn word_oracle(s: &GifsSystem, alpha: &Address, args: &[Vec<f64>]) -> Vec<f64> {
    let m = s.arity();
    if alpha.depth() == 1 {
        return s.eval_map(alpha.head(), args).unwrap();
    }
    let block = args.len() / m;
    let inner: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            word_oracle(
                s,
                &alpha.subaddress(j + 1).unwrap(),
                &args[j * block..(j + 1) * block],
            )
        })
        .collect();
    s.eval_map(alpha.head(), &inner).unwrap()
}

fn random_address(rng: &mut impl Rng, i_count: usize, m: usize, k: usize) -> Address {
    let n = symbol_count(m, k).unwrap();
    let symbols = (0..n)
        .map(|_| Symbol(rng.gen_range(0..i_count) as u32))
        .collect();
    Address::from_flat(m, k, symbols).unwrap()
}

/// Random affine system with `|I|` maps of order `m` on `R^d`.
fn affine_system(seed: u64, i_count: usize, m: usize, d: usize, scale: f64) -> GifsSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = (0..i_count)
        .map(|_| {
            let blocks = (0..m)
                .map(|_| {
                    (0..d)
                        .map(|_| (0..d).map(|_| scale * rng.gen_range(-1.0..1.0)).collect())
                        .collect()
                })
                .collect();
            let offset = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            AffineMap::new(blocks, offset).unwrap()
        })
        .collect();
    GifsSystem::new(maps, PointMetric::Euclidean).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eval_word_matches_recursive_definition(
        seed in any::<u64>(), m in 1usize..=3, d in 1usize..=2, k in 1usize..=3,
    ) {
        let s = affine_system(seed, 3, m, d, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let alpha = random_address(&mut rng, 3, m, k);
        let leaves = m.pow(k as u32);
        let args: Vec<Vec<f64>> = (0..leaves)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        prop_assert_eq!(s.eval_word(&alpha, &args).unwrap(), word_oracle(&s, &alpha, &args));
        let x = args[0].clone();
        prop_assert_eq!(
            s.eval_word_constant(&alpha, &x).unwrap(),
            s.eval_word(&alpha, &vec![x; leaves]).unwrap()
        );
    }

    #[test]
    fn pi_value_depends_only_on_leading_levels(seed in any::<u64>(), m in 1usize..=2, k in 1usize..=2) {
        let s = affine_system(seed, 2, m, 1, 0.45);
        let x0 = vec![0.3];
        let pi = pi_iterate(&s, &x0, k, &PiConfig::default()).unwrap().function;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let long = random_address(&mut rng, 2, m, k + 2);
        // rewrite every level below k and compare
        let mut other = long.symbols().to_vec();
        let keep = symbol_count(m, k).unwrap();
        for sym in other.iter_mut().skip(keep) {
            *sym = Symbol(1 - sym.0);
        }
        let other = Address::from_flat(m, k + 2, other).unwrap();
        prop_assert_eq!(pi.value(&s, &long).unwrap(), pi.value(&s, &other).unwrap());
    }

    #[test]
    fn functional_equation_holds_for_random_systems(seed in any::<u64>(), m in 1usize..=2, d in 1usize..=2) {
        let s = affine_system(seed, 2, m, d, 0.4);
        let x0 = s.default_seed();
        prop_assert!(check_functional_equation(&s, &x0, 3, &PiConfig::default()).unwrap() <= 1e-12);
        prop_assert!(check_combine_identity(&s, &x0, 3, 20, &PiConfig::default()).unwrap() <= 1e-12);
    }

    #[test]
    fn operator_ratio_bounded_by_sup_lip(seed in any::<u64>(), m in 1usize..=2) {
        let s = affine_system(seed, 3, m, 1, 0.45);
        let l = s.sup_lipschitz();
        let ratio = operator_contraction_ratio(&s, 1, 10, &[(-1.0, 1.0)], seed, EnumCap::default()).unwrap();
        prop_assert!(ratio <= l + 1e-9, "ratio {} > sup lip {}", ratio, l);
    }
}

#[test]
fn pi_zero_column_equals_diagonal_power() {
    let s = catalog::dyadic_average_family(4);
    let f0: &dyn PointMap = &s.maps()[0];
    for k in 1..=4 {
        let pi = pi_iterate(&s, &[0.0], k, &PiConfig::default())
            .unwrap()
            .function;
        let zeros = Address::constant(2, k, Symbol(0)).unwrap();
        assert_eq!(
            pi.value(&s, &zeros).unwrap(),
            diagonal_power(f0, k, &[0.0]).unwrap()
        );
    }
}

/// Depth 4 with four maps has 4^15 addresses, so that depth runs on the
/// two-map truncation.
#[test]
fn seed_independence_bound() {
    let dyadic = |k: usize| catalog::dyadic_average_family(if k <= 3 { 4 } else { 2 });
    for (family, l) in [
        (&dyadic as &dyn Fn(usize) -> GifsSystem, 0.5),
        (&|_| catalog::cantor(), 1.0 / 3.0),
    ] {
        for k in 1..=4 {
            let s = family(k);
            let a = pi_iterate(&s, &[0.0], k, &PiConfig::default())
                .unwrap()
                .function;
            let b = pi_iterate(&s, &[1.0], k, &PiConfig::default())
                .unwrap()
                .function;
            let gap = sup_distance(&s, &a, &b, EnumCap::default()).unwrap();
            assert!(gap <= f64::powi(l, k as i32) + 1e-9, "k={k} gap={gap}");
        }
    }
}

#[test]
fn sup_distance_matches_direct_scan() {
    let s = catalog::dyadic_average_family(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let g = random_code_function(&s, 2, &[(-1.0, 1.0)], &mut rng, EnumCap::default()).unwrap();
        let h = random_code_function(&s, 2, &[(-1.0, 1.0)], &mut rng, EnumCap::default()).unwrap();
        let (tg, th) = (g.table().unwrap(), h.table().unwrap());
        let mut scan = 0.0f64;
        for i in 0..tg.len() {
            scan = scan.max((tg[i] - th[i]).abs());
        }
        assert_eq!(sup_distance(&s, &g, &h, EnumCap::default()).unwrap(), scan);
    }
}

/// Pairs of depth-1 code functions of the truncated dyadic family with
/// `d_u(g, h) < ε + ε/3` must map to `d_u < ε - ε/9`.
#[test]
fn meir_keeler_transfers_to_operator() {
    let s = catalog::dyadic_average_family(4);
    let shape = CodeShape::of(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cap = EnumCap::default();
    for eps in [0.1, 0.5, 1.0] {
        let limit = eps + eps / 3.0;
        let target = eps - eps / 9.0;
        let mut violations = 0;
        for _ in 0..10_000 {
            let g = random_code_function(&s, 1, &[(-2.0, 2.0)], &mut rng, cap).unwrap();
            let r = limit * (1.0 - rng.gen::<f64>().powi(2)) * (1.0 - 1e-12);
            let shifted: Vec<f64> = g
                .table()
                .unwrap()
                .iter()
                .map(|v| v + r * rng.gen_range(-1.0..=1.0f64).signum() * rng.gen_range(0.9..=1.0))
                .collect();
            let h = CodeFunction::from_table(shape, 1, shifted).unwrap();
            if sup_distance(&s, &g, &h, cap).unwrap() >= limit {
                continue;
            }
            let hg = apply_h(&s, &[&g, &g], cap).unwrap();
            let hh = apply_h(&s, &[&h, &h], cap).unwrap();
            if sup_distance(&s, &hg, &hh, cap).unwrap() >= target {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "eps={eps}");
    }
}

/// With `φ(t) = L t`, image distances under the operator never exceed
/// `φ(input distance)`.
#[test]
fn phi_contraction_transfers_to_operator() {
    let s = catalog::dyadic_average_family(4);
    let l = s.sup_lipschitz();
    let cap = EnumCap::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let g = random_code_function(&s, 2, &[(0.0, 1.0)], &mut rng, cap).unwrap();
        let h = random_code_function(&s, 2, &[(0.0, 1.0)], &mut rng, cap).unwrap();
        let before = sup_distance(&s, &g, &h, cap).unwrap();
        let after = sup_distance(
            &s,
            &apply_h(&s, &[&g, &g], cap).unwrap(),
            &apply_h(&s, &[&h, &h], cap).unwrap(),
            cap,
        )
        .unwrap();
        assert!(after <= l * before + 1e-9);
    }
}

#[test]
fn order_one_words_are_compositions() {
    let s = catalog::cantor();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let k = rng.gen_range(1..=12);
        let alpha = random_address(&mut rng, 2, 1, k);
        let x = vec![rng.gen_range(-1.0..2.0)];
        let mut y = x.clone();
        for sym in alpha.symbols().iter().rev() {
            y = s.eval_map(*sym, &[y]).unwrap();
        }
        assert_eq!(s.eval_word(&alpha, &[x]).unwrap(), y);
    }
}
