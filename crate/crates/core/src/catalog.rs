//! Ready-made systems used by tests, examples and the bundled specs.

use crate::system::{AffineMap, GifsSystem, PointMetric, Truncation};

/// Name recorded in the truncation note of [`dyadic_average_family`].
pub const DYADIC_FAMILY_NAME: &str = "dyadic-average";

/// The order-2 family on `[0, 1]` given by
/// `f_n(x, y) = (x + y) / 2^(n+2) + 1 / 2^(n+1)`, cut after `count` maps.
/// Its attractor is `[0, 1]` in the untruncated limit.
pub fn dyadic_average_family(count: usize) -> GifsSystem {
    assert!(count >= 1, "family needs at least one map");
    let maps = (0..count)
        .map(|n| {
            let scale = 0.5f64.powi(n as i32 + 2);
            let offset = 0.5f64.powi(n as i32 + 1);
            AffineMap::uniform_scaling(2, scale, vec![offset]).expect("valid shape")
        })
        .collect();
    GifsSystem::new(maps, PointMetric::Euclidean)
        .expect("valid system")
        .with_truncation(Truncation {
            family_name: DYADIC_FAMILY_NAME.to_string(),
            truncated_at: count,
        })
}

/// The middle-thirds Cantor system `{x/3, x/3 + 2/3}` (order 1).
pub fn cantor() -> GifsSystem {
    let third = 1.0 / 3.0;
    let maps = vec![
        AffineMap::new(vec![vec![vec![third]]], vec![0.0]).expect("valid shape"),
        AffineMap::new(vec![vec![vec![third]]], vec![2.0 / 3.0]).expect("valid shape"),
    ];
    GifsSystem::new(maps, PointMetric::Euclidean).expect("valid system")
}

/// The Sierpinski triangle as an order-1 system in the plane.
pub fn sierpinski() -> GifsSystem {
    let half = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
    let maps = [[0.0, 0.0], [0.5, 0.0], [0.25, 0.5]]
        .iter()
        .map(|o| AffineMap::new(vec![half.clone()], o.to_vec()).expect("valid shape"))
        .collect();
    GifsSystem::new(maps, PointMetric::Euclidean).expect("valid system")
}

/// A single constant map of order `arity`.
pub fn constant(arity: usize, value: Vec<f64>) -> GifsSystem {
    GifsSystem::new(
        vec![AffineMap::constant(arity, value).expect("valid shape")],
        PointMetric::Euclidean,
    )
    .expect("valid system")
}
