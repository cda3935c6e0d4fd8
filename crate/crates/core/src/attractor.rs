//! The fractal operator on finite point sets, deterministic attractor
//! iteration and the diameter-decay profile of word-map images.
//!
//! Closure of the union of images has no finite analogue; it is realised by
//! snapping images to a grid of spacing `grid_eps`, which moves every point
//! by at most [`decimation_bound`].
//!
//! When the Cartesian product of the argument sets is larger than the
//! product cap, argument tuples are drawn from the additive recurrence
//! `frac(1/2 + r * g^-j)` (`g` the generalized golden ratio of dimension
//! `m`), which spreads them evenly over the index grid and is fully
//! reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::code_space::{address_count, Address, Symbol};
use crate::error::{GifsError, Result};
use crate::metric_sets::{decimate, diameter, hausdorff, GridCells, PointSet};
use crate::system::{GifsSystem, PointMap};

/// Default cap on argument tuples per map in one fractal step.
pub const DEFAULT_PRODUCT_CAP: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub grid_eps: f64,
    pub product_cap: usize,
    /// Iteration stops (unconverged) when a set grows past this many points.
    pub max_points: usize,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        AttractorConfig {
            tol: 1e-3,
            max_iter: 200,
            grid_eps: 1e-3,
            product_cap: DEFAULT_PRODUCT_CAP,
            max_points: 4_000_000,
        }
    }
}

/// Trajectory of `X_{n+1} = F(X_n, ..., X_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorRun {
    pub iterates: Vec<PointSet>,
    /// `h(X_n, X_{n+1})`, one per step.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub grid_eps: f64,
}

impl AttractorRun {
    pub fn final_set(&self) -> &PointSet {
        self.iterates.last().expect("a run holds at least the seed")
    }

    pub fn steps(&self) -> usize {
        self.residuals.len()
    }
}

/// Argument-tuple schedule over `m` sets of the given sizes.
#[derive(Debug, Clone)]
struct TupleSchedule {
    sizes: Vec<usize>,
    total: usize,
    /// `None` when the full product is enumerated.
    weights: Option<Vec<f64>>,
}

impl TupleSchedule {
    fn new(sizes: Vec<usize>, cap: usize) -> Self {
        let product = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
        match product {
            Some(p) if p <= cap => TupleSchedule {
                sizes,
                total: p,
                weights: None,
            },
            _ => {
                let m = sizes.len();
                let g = generalized_golden_ratio(m);
                let weights = (1..=m).map(|j| g.powi(-(j as i32)).fract()).collect();
                TupleSchedule {
                    sizes,
                    total: cap.max(1),
                    weights: Some(weights),
                }
            }
        }
    }

    fn is_exhaustive(&self) -> bool {
        self.weights.is_none()
    }

    fn indices(&self, r: usize, out: &mut [usize]) {
        match &self.weights {
            None => {
                let mut rest = r;
                for (slot, &s) in out.iter_mut().zip(&self.sizes).rev() {
                    *slot = rest % s;
                    rest /= s;
                }
            }
            Some(w) => {
                for ((slot, &s), &a) in out.iter_mut().zip(&self.sizes).zip(w) {
                    let u = (0.5 + r as f64 * a).fract();
                    *slot = ((u * s as f64) as usize).min(s - 1);
                }
            }
        }
    }
}

/// Unique positive root of `x^(m+1) = x + 1`.
fn generalized_golden_ratio(m: usize) -> f64 {
    let e = (m + 1) as i32;
    let mut x = 1.5f64;
    for _ in 0..100 {
        let f = x.powi(e) - x - 1.0;
        let df = e as f64 * x.powi(e - 1) - 1.0;
        x -= f / df;
    }
    x
}

/// One application of the fractal operator:
/// `decimate(∪_i f_i(B_1 × ... × B_m), grid_eps)`.
pub fn fractal_step(
    system: &GifsSystem,
    sets: &[&PointSet],
    grid_eps: f64,
    product_cap: usize,
) -> Result<PointSet> {
    fractal_step_impl(system, sets, grid_eps, product_cap).map(|(s, _)| s)
}

fn fractal_step_impl(
    system: &GifsSystem,
    sets: &[&PointSet],
    grid_eps: f64,
    product_cap: usize,
) -> Result<(PointSet, bool)> {
    let (m, d) = (system.arity(), system.dim());
    if sets.len() != m {
        return Err(GifsError::ShapeMismatch(format!(
            "fractal operator of order {m} got {} sets",
            sets.len()
        )));
    }
    if let Some(s) = sets.iter().find(|s| s.dim() != d) {
        return Err(GifsError::ShapeMismatch(format!(
            "set of dimension {} for a system of dimension {d}",
            s.dim()
        )));
    }
    if !(grid_eps > 0.0) {
        return Err(GifsError::InvalidParameter("grid_eps must be > 0".into()));
    }
    let schedule = TupleSchedule::new(sets.iter().map(|s| s.len()).collect(), product_cap);
    let maps = system.maps();
    let cells = (0..schedule.total)
        .into_par_iter()
        .fold(
            || {
                (
                    GridCells::new(d, grid_eps),
                    vec![0usize; m],
                    vec![0.0; m * d],
                    vec![0.0; d],
                )
            },
            |(mut cells, mut idx, mut args, mut out), r| {
                schedule.indices(r, &mut idx);
                for (j, (&i, set)) in idx.iter().zip(sets).enumerate() {
                    args[j * d..(j + 1) * d].copy_from_slice(set.point(i));
                }
                for f in maps {
                    f.apply_into(&args, &mut out);
                    cells.insert(&out);
                }
                (cells, idx, args, out)
            },
        )
        .map(|(cells, ..)| cells)
        .reduce(
            || GridCells::new(d, grid_eps),
            |mut a, b| {
                if a.len() < b.len() {
                    let mut b = b;
                    b.merge(a);
                    b
                } else {
                    a.merge(b);
                    a
                }
            },
        );
    Ok((cells.into_point_set()?, schedule.is_exhaustive()))
}

/// Seed set used when none is given: the diagonal fixed point of map 0.
pub fn default_seed_set(system: &GifsSystem) -> PointSet {
    PointSet::singleton(system.default_seed()).expect("seed has the system dimension")
}

/// Iterates the fractal operator on the diagonal from `seed` until
/// `h(X_n, X_{n+1}) <= tol` or `max_iter` steps.
pub fn attractor_iterate(
    system: &GifsSystem,
    seed: &PointSet,
    config: &AttractorConfig,
) -> Result<AttractorRun> {
    if !(config.tol > 0.0) {
        return Err(GifsError::InvalidParameter(format!(
            "tol must be > 0, got {}",
            config.tol
        )));
    }
    if seed.dim() != system.dim() {
        return Err(GifsError::ShapeMismatch(format!(
            "seed of dimension {} for a system of dimension {}",
            seed.dim(),
            system.dim()
        )));
    }
    let metric = system.point_metric();
    let mut iterates = vec![decimate(seed, config.grid_eps)?];
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let current = iterates.last().expect("nonempty");
        let args = vec![current; system.arity()];
        let next = fractal_step(system, &args, config.grid_eps, config.product_cap)?;
        let r = hausdorff(current, &next, metric)?;
        let oversized = next.len() > config.max_points;
        residuals.push(r);
        iterates.push(next);
        if r <= config.tol {
            converged = true;
            break;
        }
        if !r.is_finite() || oversized {
            break;
        }
    }
    Ok(AttractorRun {
        iterates,
        residuals,
        converged,
        grid_eps: config.grid_eps,
    })
}

/// Hausdorff gap between the attractor approximations of a truncated family
/// and of the same family with one more map, both run from `seed`.
pub fn truncation_sensitivity(
    truncated: &AttractorRun,
    extended: &GifsSystem,
    seed: &PointSet,
    config: &AttractorConfig,
) -> Result<f64> {
    let run = attractor_iterate(extended, seed, config)?;
    hausdorff(
        truncated.final_set(),
        run.final_set(),
        extended.point_metric(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileConfig {
    /// Addresses per depth before switching to a deterministic sample.
    pub address_cap: usize,
    /// Argument tuples per address.
    pub tuple_cap: usize,
    pub seed: u64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            address_cap: 256,
            tuple_cap: 256,
            seed: 0x6A1F5,
        }
    }
}

/// `d_n = sup_α diam f_α(A, ..., A)` over depth-`n` addresses, `n = 1..=n_max`.
///
/// Addresses are enumerated when there are at most `address_cap` of them;
/// otherwise the constant addresses plus a seeded random sample are used.
/// For each address the image is taken over the diagonal tuples `(a, ..., a)`
/// for a stride subsample of `A` (endpoints included) plus seeded random
/// mixed tuples, so every `d_n` is a lower estimate of the true supremum.
pub fn diameter_decay_profile(
    system: &GifsSystem,
    set: &PointSet,
    n_max: usize,
    config: &ProfileConfig,
) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(GifsError::InvalidParameter("n_max must be >= 1".into()));
    }
    if set.dim() != system.dim() {
        return Err(GifsError::ShapeMismatch(format!(
            "set of dimension {} for a system of dimension {}",
            set.dim(),
            system.dim()
        )));
    }
    let diagonal = stride_subsample(set.len(), (config.tuple_cap / 2).max(2));
    let mixed = config.tuple_cap.saturating_sub(diagonal.len());
    (1..=n_max)
        .map(|n| {
            let addresses = profile_addresses(system, n, config)?;
            let leaves = system.arity().pow(n as u32);
            let diam = addresses
                .par_iter()
                .enumerate()
                .map(|(ai, alpha)| -> Result<f64> {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(config.seed ^ ((n as u64) << 32) ^ ai as u64);
                    let mut images = Vec::with_capacity((diagonal.len() + mixed) * set.dim());
                    for &i in &diagonal {
                        images.extend(system.eval_word_constant(alpha, set.point(i))?);
                    }
                    for _ in 0..mixed {
                        let args: Vec<Vec<f64>> = (0..leaves)
                            .map(|_| set.point(rng.gen_range(0..set.len())).to_vec())
                            .collect();
                        images.extend(system.eval_word(alpha, &args)?);
                    }
                    let images = PointSet::from_flat(set.dim(), images)?;
                    Ok(diameter(&images, system.point_metric()))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(diam.into_iter().fold(0.0, f64::max))
        })
        .collect()
}

fn profile_addresses(
    system: &GifsSystem,
    n: usize,
    config: &ProfileConfig,
) -> Result<Vec<Address>> {
    let (i_count, m) = (system.map_count(), system.arity());
    let exhaustive = address_count(i_count, m, n).is_some_and(|c| c <= config.address_cap as u128);
    if exhaustive {
        return crate::code_space::enumerate_addresses(
            i_count,
            m,
            n,
            crate::code_space::EnumCap(config.address_cap),
        );
    }
    let mut out: Vec<Address> = (0..i_count.min(config.address_cap))
        .map(|i| Address::constant(m, n, Symbol(i as u32)))
        .collect::<Result<_>>()?;
    let len = crate::code_space::symbol_count(m, n)
        .ok_or_else(|| GifsError::InvalidParameter(format!("depth {n} too large")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(n as u64));
    while out.len() < config.address_cap {
        let symbols = (0..len)
            .map(|_| Symbol(rng.gen_range(0..i_count) as u32))
            .collect();
        out.push(Address::from_flat(m, n, symbols)?);
    }
    Ok(out)
}

/// `count` indices spread evenly over `0..len`, first and last included.
fn stride_subsample(len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|t| ((t as f64) * (len - 1) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}
