//! Sampled checks of the contraction hypotheses under which the attractor
//! and the canonical projection exist: Lipschitz estimates, comparison
//! function (φ) contractions, Meir-Keeler conditions and an overall
//! classification.
//!
//! Sampling cannot prove a strict inequality. Every sampled verdict means
//! "no violation among the pairs drawn" and reports say so.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attractor::{attractor_iterate, default_seed_set, AttractorConfig};
use crate::error::{GifsError, Result};
use crate::metric_sets::PointSet;
use crate::system::{GifsSystem, PointMap, PointMetric, TupleMetric};

const BATCH: usize = 1024;

/// Rounding allowance for `d(f(x), f(y)) <= φ(t)`, relative to `1 + t`:
/// pairs on which an affine map attains its constant tie up to the last bit.
pub const PHI_SLACK: f64 = 1e-12;

/// Default sampling seed.
pub const DEFAULT_SEED: u64 = 0xD1A6;

/// Axis-aligned box in `X = R^D`; argument tuples are drawn from its `m`-th
/// power.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    bounds: Vec<(f64, f64)>,
}

impl SampleBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(GifsError::InvalidParameter(
                "box needs at least one axis".into(),
            ));
        }
        for (c, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GifsError::InvalidParameter(format!(
                    "degenerate box on axis {c}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(SampleBox { bounds })
    }

    pub fn unit(dim: usize) -> Self {
        SampleBox {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    /// Bounding box of `set` inflated by `inflate` times its widest side on
    /// every side. Flat axes get half-width 1/2.
    pub fn around(set: &PointSet, inflate: f64) -> Result<Self> {
        let bb = set.bounding_box();
        let widest = bb.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
        let pad = inflate * widest;
        SampleBox::new(
            bb.into_iter()
                .map(|(lo, hi)| {
                    if hi - lo > 0.0 {
                        (lo - pad, hi + pad)
                    } else {
                        (lo - 0.5, hi + 0.5)
                    }
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Length of the widest side.
    pub fn width(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }

    fn describe(&self) -> String {
        self.bounds
            .iter()
            .map(|(lo, hi)| format!("[{lo},{hi}]"))
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// A comparison function `φ`: nondecreasing, right-continuous, `φ(t) < t`
/// for `t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonFunction {
    /// `φ(t) = factor * t`.
    Linear { factor: f64 },
    /// Step function: `φ(t) = v_i` for `t_i <= t < t_{i+1}`, the last value
    /// extending to infinity. Starts at `(0, 0)`.
    Tabulated { steps: Vec<(f64, f64)> },
}

impl ComparisonFunction {
    pub fn linear(factor: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&factor) {
            return Err(GifsError::InvalidParameter(format!(
                "linear comparison factor must lie in [0, 1), got {factor}"
            )));
        }
        Ok(ComparisonFunction::Linear { factor })
    }

    pub fn tabulated(steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.first() != Some(&(0.0, 0.0)) {
            return Err(GifsError::InvalidParameter(
                "tabulated comparison function must start at (0, 0)".into(),
            ));
        }
        for w in steps.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if !(t1 > t0) || !(v1 >= v0) {
                return Err(GifsError::InvalidParameter(
                    "breakpoints must increase and values must not decrease".into(),
                ));
            }
            if !(v1 < t1) || !t1.is_finite() {
                return Err(GifsError::InvalidParameter(format!(
                    "value {v1} at breakpoint {t1} violates phi(t) < t"
                )));
            }
        }
        Ok(ComparisonFunction::Tabulated { steps })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ComparisonFunction::Linear { factor } => factor * t,
            ComparisonFunction::Tabulated { steps } => {
                let i = steps.partition_point(|&(ti, _)| ti <= t);
                if i == 0 {
                    0.0
                } else {
                    steps[i - 1].1
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ComparisonFunction::Linear { factor } => format!("linear({factor})"),
            ComparisonFunction::Tabulated { steps } => format!("tabulated({} steps)", steps.len()),
        }
    }
}

/// `δ_ε = delta_factor * ε` and, for the uniform variant,
/// `λ_ε = lambda_factor * ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeirKeelerParams {
    pub epsilons: Vec<f64>,
    pub delta_factor: f64,
    pub lambda_factor: Option<f64>,
}

impl MeirKeelerParams {
    pub fn new(epsilons: Vec<f64>, delta_factor: f64, lambda_factor: Option<f64>) -> Result<Self> {
        if epsilons.is_empty() || epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(GifsError::InvalidParameter(
                "epsilons must be a nonempty list of positive numbers".into(),
            ));
        }
        if !(delta_factor.is_finite() && delta_factor > 0.0) {
            return Err(GifsError::InvalidParameter(format!(
                "delta factor must be positive, got {delta_factor}"
            )));
        }
        if let Some(l) = lambda_factor {
            if !(l > 0.0 && l < 1.0) {
                return Err(GifsError::InvalidParameter(format!(
                    "lambda factor must lie in (0, 1), got {l}"
                )));
            }
        }
        Ok(MeirKeelerParams {
            epsilons,
            delta_factor,
            lambda_factor,
        })
    }

    /// Constants valid for any family with `sup lip <= factor < 1`:
    /// `δ_ε = ε(1-L)/(2L)` and `λ_ε = ε(1-L)/4`. Pairs closer than
    /// `ε + δ_ε` then map within `ε(1+L)/2 <= ε - λ_ε`.
    pub fn from_contraction_factor(factor: f64, epsilons: Vec<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&factor) {
            return Err(GifsError::InvalidParameter(format!(
                "contraction factor must lie in [0, 1), got {factor}"
            )));
        }
        let delta = if factor == 0.0 {
            1.0
        } else {
            (1.0 - factor) / (2.0 * factor)
        };
        MeirKeelerParams::new(epsilons, delta, Some((1.0 - factor) / 4.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// Largest sampled `d(f(x), f(y)) / d_max(x, y)`.
    pub measured: f64,
    pub analytic: Option<f64>,
    pub pairs: usize,
}

/// A sampled pair of argument tuples, each stored back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstPair {
    pub map: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: Option<f64>,
    /// Images must be strictly closer than this.
    pub target: f64,
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `target - d(f_i(x), f_i(y))`; negative or zero on violation.
    pub worst_margin: f64,
    pub worst_pair: Option<WorstPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeirKeelerReport {
    pub per_epsilon: Vec<EpsilonReport>,
    pub uniform: bool,
    pub seed: u64,
}

impl MeirKeelerReport {
    pub fn violations(&self) -> usize {
        self.per_epsilon.iter().map(|e| e.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn worst_margin(&self) -> f64 {
        self.per_epsilon
            .iter()
            .map(|e| e.worst_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiReport {
    /// Largest `d(f(x), f(y)) - φ(d_max(x, y))`; a pair violates when its
    /// excess is above [`PHI_SLACK`]` * (1 + d_max(x, y))`.
    pub max_excess: f64,
    pub pairs: usize,
    pub violations: usize,
    pub worst_pair: Option<WorstPair>,
}

impl PhiReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Deterministic batches: batch `b` draws from stream `b` of the seed, so
/// results do not depend on the thread count.
fn run_batches<A: Send>(
    n: usize,
    seed: u64,
    batch: impl Fn(&mut ChaCha8Rng, usize, usize) -> A + Sync,
) -> Vec<A> {
    (0..n.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let start = b * BATCH;
            batch(&mut rng, start, BATCH.min(n - start))
        })
        .collect()
}

/// Direction of unit length under `metric`.
fn direction(rng: &mut impl Rng, dim: usize, metric: PointMetric) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = match metric {
            PointMetric::Euclidean => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            PointMetric::Max => v.iter().fold(0.0, |a: f64, c| a.max(c.abs())),
        };
        if n > 1e-3 && (metric == PointMetric::Max || n <= 1.0) {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// A point of the box together with `point + shift`, the shift clamped so
/// both stay inside.
fn shifted_pair(rng: &mut impl Rng, bx: &SampleBox, shift: &[f64], x: &mut [f64], y: &mut [f64]) {
    for (c, &(lo, hi)) in bx.bounds.iter().enumerate() {
        let s = shift[c].clamp(lo - hi, hi - lo);
        let a = lo + s.min(0.0).abs();
        let b = hi - s.max(0.0);
        let p = if b > a { rng.gen_range(a..=b) } else { a };
        x[c] = p;
        y[c] = (p + s).clamp(lo, hi);
    }
}

/// Draws a pair of `m`-tuples. With `radius = Some(r)` the tuples are at
/// most `r` apart in `d_max` with one argument shifted by about `r`;
/// otherwise the separation is spread over the box. The mode alternates
/// between a common shift of every argument, a single shifted argument, and
/// independent shifts.
fn sample_pair(
    rng: &mut impl Rng,
    bx: &SampleBox,
    arity: usize,
    metric: PointMetric,
    radius: Option<f64>,
    mode: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = bx.dim();
    let mut x = vec![0.0; arity * d];
    let mut y = vec![0.0; arity * d];
    let draw_radius = |rng: &mut dyn rand::RngCore| match radius {
        Some(r) => r * (1.0 - rng.gen::<f64>().powi(2)),
        None => bx.width() * rng.gen::<f64>(),
    };
    match mode % 4 {
        0 => {
            for j in 0..arity {
                for (c, &(lo, hi)) in bx.bounds.iter().enumerate() {
                    x[j * d + c] = rng.gen_range(lo..=hi);
                    y[j * d + c] = rng.gen_range(lo..=hi);
                }
            }
            if let Some(r) = radius {
                // pull y towards x to respect the radius
                let tm = TupleMetric {
                    point: metric,
                    dim: d,
                };
                let dist = tm.distance(&x, &y);
                if dist >= r {
                    let t = r * (1.0 - 1e-12) / dist;
                    for k in 0..x.len() {
                        y[k] = x[k] + (y[k] - x[k]) * t;
                    }
                }
            }
        }
        1 => {
            let r = draw_radius(rng);
            let shift: Vec<f64> = direction(rng, d, metric)
                .into_iter()
                .map(|c| c * r)
                .collect();
            for j in 0..arity {
                shifted_pair(
                    rng,
                    bx,
                    &shift,
                    &mut x[j * d..(j + 1) * d],
                    &mut y[j * d..(j + 1) * d],
                );
            }
        }
        2 => {
            let moved = rng.gen_range(0..arity);
            let r = draw_radius(rng);
            for j in 0..arity {
                let scale = if j == moved { r } else { 0.0 };
                let shift: Vec<f64> = direction(rng, d, metric)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect();
                shifted_pair(
                    rng,
                    bx,
                    &shift,
                    &mut x[j * d..(j + 1) * d],
                    &mut y[j * d..(j + 1) * d],
                );
            }
        }
        _ => {
            let full = rng.gen_range(0..arity);
            let r = draw_radius(rng);
            for j in 0..arity {
                let scale = if j == full { r } else { r * rng.gen::<f64>() };
                let shift: Vec<f64> = direction(rng, d, metric)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect();
                shifted_pair(
                    rng,
                    bx,
                    &shift,
                    &mut x[j * d..(j + 1) * d],
                    &mut y[j * d..(j + 1) * d],
                );
            }
        }
    }
    (x, y)
}

fn check_box(bx: &SampleBox, dim: usize) -> Result<()> {
    if bx.dim() != dim {
        return Err(GifsError::ShapeMismatch(format!(
            "box of dimension {} for maps of dimension {dim}",
            bx.dim()
        )));
    }
    Ok(())
}

/// Sampled and (for affine maps) exact Lipschitz constant of `f` with
/// respect to `d_max` on argument tuples.
pub fn estimate_lipschitz(
    f: &dyn PointMap,
    metric: PointMetric,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if n_samples < 2 {
        return Err(GifsError::InvalidParameter("n_samples must be >= 2".into()));
    }
    check_box(bx, f.dim())?;
    let tm = TupleMetric {
        point: metric,
        dim: f.dim(),
    };
    let measured = run_batches(n_samples, seed, |rng, start, count| {
        (start..start + count)
            .map(|s| {
                let (x, y) = sample_pair(rng, bx, f.arity(), metric, None, s);
                let dx = tm.distance(&x, &y);
                if dx > 0.0 {
                    metric.distance(&f.apply(&x), &f.apply(&y)) / dx
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    Ok(LipschitzEstimate {
        measured,
        analytic: f.analytic_lipschitz(metric),
        pairs: n_samples,
    })
}

#[derive(Default)]
struct Tally {
    pairs: usize,
    violations: usize,
    worst: f64,
    worst_pair: Option<WorstPair>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            worst: f64::NEG_INFINITY,
            ..Tally::default()
        }
    }

    /// `score` grows with badness; `violated` marks a failed inequality.
    fn record(&mut self, score: f64, violated: bool, pair: impl FnOnce() -> WorstPair) {
        self.pairs += 1;
        self.violations += violated as usize;
        if score > self.worst {
            self.worst = score;
            self.worst_pair = Some(pair());
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.pairs += other.pairs;
        self.violations += other.violations;
        if other.worst > self.worst {
            self.worst = other.worst;
            self.worst_pair = other.worst_pair;
        }
        self
    }
}

/// For each `ε`, draws `n_samples` pairs with `d_max(x, y) < ε + δ_ε`,
/// cycling through the maps, and counts pairs whose images are not strictly
/// closer than `ε` (or `ε - λ_ε` when a lambda rule is given).
pub fn check_meir_keeler(
    system: &GifsSystem,
    params: &MeirKeelerParams,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<MeirKeelerReport> {
    let maps: Vec<&dyn PointMap> = system.maps().iter().map(|f| f as &dyn PointMap).collect();
    meir_keeler_for(&maps, system.point_metric(), params, bx, n_samples, seed)
}

fn meir_keeler_for(
    maps: &[&dyn PointMap],
    metric: PointMetric,
    params: &MeirKeelerParams,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<MeirKeelerReport> {
    if n_samples == 0 {
        return Err(GifsError::InvalidParameter("n_samples must be >= 1".into()));
    }
    let (arity, dim) = (maps[0].arity(), maps[0].dim());
    check_box(bx, dim)?;
    let tm = TupleMetric { point: metric, dim };
    let mut per_epsilon = Vec::with_capacity(params.epsilons.len());
    for (e_idx, &eps) in params.epsilons.iter().enumerate() {
        let delta = params.delta_factor * eps;
        let lambda = params.lambda_factor.map(|l| l * eps);
        let target = eps - lambda.unwrap_or(0.0);
        let limit = eps + delta;
        let tally = run_batches(
            n_samples,
            seed ^ ((e_idx as u64 + 1) << 32),
            |rng, start, count| {
                let mut t = Tally::new();
                for s in start..start + count {
                    let i = s % maps.len();
                    let (x, y) = sample_pair(rng, bx, arity, metric, Some(limit), s / maps.len());
                    if tm.distance(&x, &y) >= limit {
                        continue;
                    }
                    let gap = metric.distance(&maps[i].apply(&x), &maps[i].apply(&y));
                    t.record(gap - target, gap >= target, || WorstPair { map: i, x, y });
                }
                t
            },
        )
        .into_iter()
        .fold(Tally::new(), Tally::merge);
        per_epsilon.push(EpsilonReport {
            epsilon: eps,
            delta,
            lambda,
            target,
            pairs: tally.pairs,
            violations: tally.violations,
            worst_margin: -tally.worst,
            worst_pair: tally.worst_pair,
        });
    }
    Ok(MeirKeelerReport {
        per_epsilon,
        uniform: params.lambda_factor.is_some(),
        seed,
    })
}

/// Samples `d(f(x), f(y)) - φ(d_max(x, y))` over pairs in the box.
pub fn check_phi_contraction(
    f: &dyn PointMap,
    metric: PointMetric,
    phi: &ComparisonFunction,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<PhiReport> {
    if n_samples == 0 {
        return Err(GifsError::InvalidParameter("n_samples must be >= 1".into()));
    }
    check_box(bx, f.dim())?;
    let tm = TupleMetric {
        point: metric,
        dim: f.dim(),
    };
    let tally = run_batches(n_samples, seed, |rng, start, count| {
        let mut t = Tally::new();
        for s in start..start + count {
            let (x, y) = sample_pair(rng, bx, f.arity(), metric, None, s);
            let dx = tm.distance(&x, &y);
            let excess = metric.distance(&f.apply(&x), &f.apply(&y)) - phi.eval(dx);
            t.record(excess, excess > PHI_SLACK * (1.0 + dx), || WorstPair {
                map: 0,
                x,
                y,
            });
        }
        t
    })
    .into_iter()
    .fold(Tally::new(), Tally::merge);
    Ok(PhiReport {
        max_excess: tally.worst,
        pairs: tally.pairs,
        violations: tally.violations,
        worst_pair: tally.worst_pair,
    })
}

/// Counts sampled pairs `x != y` with `d(f_i(x), f_i(y)) >= d_max(x, y)`.
pub fn count_non_contractive(
    system: &GifsSystem,
    bx: &SampleBox,
    n_samples: usize,
    seed: u64,
) -> Result<usize> {
    check_box(bx, system.dim())?;
    let metric = system.point_metric();
    let tm = system.tuple_metric();
    let maps = system.maps();
    Ok(run_batches(n_samples, seed, |rng, start, count| {
        (start..start + count)
            .filter(|&s| {
                let f = &maps[s % maps.len()];
                let (x, y) = sample_pair(rng, bx, system.arity(), metric, None, s / maps.len());
                let dx = tm.distance(&x, &y);
                dx > 0.0 && metric.distance(&f.apply(&x), &f.apply(&y)) >= dx
            })
            .count()
    })
    .into_iter()
    .sum())
}

/// Which hypothesis of the existence theorem the system was found to meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionClass {
    StrictContraction,
    PhiContraction,
    UniformMeirKeeler,
    FiniteMeirKeeler,
    Unverified,
}

impl ContractionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ContractionClass::StrictContraction => "StrictContraction",
            ContractionClass::PhiContraction => "PhiContraction",
            ContractionClass::UniformMeirKeeler => "UniformMeirKeeler",
            ContractionClass::FiniteMeirKeeler => "FiniteMeirKeeler",
            ContractionClass::Unverified => "Unverified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    /// `None` uses [`default_box`].
    pub sample_box: Option<SampleBox>,
    pub samples: usize,
    pub seed: u64,
    /// Accept an analytic `sup lip < 1` without sampling.
    pub use_analytic: bool,
    pub phi: Option<ComparisonFunction>,
    pub meir_keeler: Option<MeirKeelerParams>,
    /// Radii for the per-map search, as fractions of the box width.
    pub finite_epsilons: Vec<f64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            sample_box: None,
            samples: 10_000,
            seed: DEFAULT_SEED,
            use_analytic: true,
            phi: None,
            meir_keeler: None,
            finite_epsilons: vec![0.1, 0.5, 1.0],
        }
    }
}

/// Per-map outcome of the finite Meir-Keeler search.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeirKeelerMap {
    /// Largest `δ_ε / ε` (from 1/2, 1/4, ...) with no violation, per `ε`.
    pub delta_factors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub sample_box: SampleBox,
    pub samples: usize,
    pub seed: u64,
    pub lipschitz: Vec<LipschitzEstimate>,
    pub non_contractive_pairs: usize,
    pub phi: Option<Vec<PhiReport>>,
    pub meir_keeler: Option<MeirKeelerReport>,
    pub finite: Option<Vec<FiniteMeirKeelerMap>>,
    /// True when the verdict rests on sampling.
    pub evidence_only: bool,
}

impl Evidence {
    pub fn sup_analytic(&self) -> Option<f64> {
        self.lipschitz
            .iter()
            .map(|l| l.analytic)
            .try_fold(0.0, |a: f64, l| l.map(|l| a.max(l)))
    }

    pub fn sup_measured(&self) -> f64 {
        self.lipschitz
            .iter()
            .map(|l| l.measured)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: ContractionClass,
    pub evidence: Evidence,
}

/// Sampling box from an attractor approximation, inflated by 10%; the unit
/// box when the run does not converge to a finite set.
pub fn default_box(system: &GifsSystem) -> SampleBox {
    let config = AttractorConfig {
        max_iter: 100,
        max_points: 200_000,
        ..AttractorConfig::default()
    };
    match attractor_iterate(system, &default_seed_set(system), &config) {
        Ok(run) if run.converged && run.final_set().coords().iter().all(|v| v.is_finite()) => {
            SampleBox::around(run.final_set(), 0.1)
                .unwrap_or_else(|_| SampleBox::unit(system.dim()))
        }
        _ => SampleBox::unit(system.dim()),
    }
}

/// Tries, in order: analytic strict contraction, the user comparison
/// function, the user uniform Meir-Keeler constants, and a per-map
/// Meir-Keeler search (finite systems only).
pub fn classify(system: &GifsSystem, config: &ClassifyConfig) -> Result<Classification> {
    let bx = match &config.sample_box {
        Some(b) => b.clone(),
        None => default_box(system),
    };
    let metric = system.point_metric();
    let lipschitz = system
        .maps()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            estimate_lipschitz(
                f,
                metric,
                &bx,
                config.samples.max(2),
                config.seed ^ i as u64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let non_contractive_pairs = count_non_contractive(system, &bx, config.samples, config.seed)?;
    let mut evidence = Evidence {
        sample_box: bx.clone(),
        samples: config.samples,
        seed: config.seed,
        lipschitz,
        non_contractive_pairs,
        phi: None,
        meir_keeler: None,
        finite: None,
        evidence_only: false,
    };
    if config.use_analytic && evidence.sup_analytic().is_some_and(|l| l < 1.0) {
        return Ok(Classification {
            class: ContractionClass::StrictContraction,
            evidence,
        });
    }
    evidence.evidence_only = true;
    if let Some(phi) = &config.phi {
        let reports = system
            .maps()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                check_phi_contraction(f, metric, phi, &bx, config.samples, config.seed ^ i as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        let passed = reports.iter().all(PhiReport::passed);
        evidence.phi = Some(reports);
        if passed {
            return Ok(Classification {
                class: ContractionClass::PhiContraction,
                evidence,
            });
        }
    }
    if let Some(mk) = config
        .meir_keeler
        .as_ref()
        .filter(|p| p.lambda_factor.is_some())
    {
        let report = check_meir_keeler(system, mk, &bx, config.samples, config.seed)?;
        let passed = report.passed();
        evidence.meir_keeler = Some(report);
        if passed {
            return Ok(Classification {
                class: ContractionClass::UniformMeirKeeler,
                evidence,
            });
        }
    }
    if system.truncation().is_none() {
        let epsilons: Vec<f64> = config
            .finite_epsilons
            .iter()
            .map(|e| e * bx.width())
            .collect();
        let per_map = system
            .maps()
            .iter()
            .map(|f| finite_search(f, metric, &epsilons, &bx, config.samples, config.seed))
            .collect::<Result<Vec<_>>>()?;
        let passed = per_map
            .iter()
            .all(|m| m.delta_factors.iter().all(Option::is_some));
        evidence.finite = Some(per_map);
        if passed {
            return Ok(Classification {
                class: ContractionClass::FiniteMeirKeeler,
                evidence,
            });
        }
    }
    Ok(Classification {
        class: ContractionClass::Unverified,
        evidence,
    })
}

fn finite_search(
    f: &dyn PointMap,
    metric: PointMetric,
    epsilons: &[f64],
    bx: &SampleBox,
    samples: usize,
    seed: u64,
) -> Result<FiniteMeirKeelerMap> {
    let mut delta_factors = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut found = None;
        for j in 1..=10 {
            let factor = 0.5f64.powi(j);
            let params = MeirKeelerParams::new(vec![eps], factor, None)?;
            if meir_keeler_for(&[f], metric, &params, bx, samples, seed)?.passed() {
                found = Some(factor);
                break;
            }
        }
        delta_factors.push(found);
    }
    Ok(FiniteMeirKeelerMap { delta_factors })
}

impl Classification {
    /// Flat `key=value` report, one entry per line.
    pub fn report(&self) -> String {
        let e = &self.evidence;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k}={v}").expect("writing to a String");
        };
        kv("class", self.class.as_str().into());
        kv(
            "basis",
            if self.class == ContractionClass::Unverified {
                "no hypothesis passed; see the violation counts".into()
            } else if e.evidence_only {
                format!(
                    "no violation found in {} sampled pairs (evidence, not proof)",
                    e.samples
                )
            } else {
                "analytic Lipschitz bound".into()
            },
        );
        kv("box", e.sample_box.describe());
        kv("seed", e.seed.to_string());
        kv("samples", e.samples.to_string());
        match e.sup_analytic() {
            Some(l) => kv("sup_lip_analytic", l.to_string()),
            None => kv("sup_lip_analytic", "unknown".into()),
        }
        kv("sup_lip_measured", e.sup_measured().to_string());
        for (i, l) in e.lipschitz.iter().enumerate() {
            kv(&format!("map.{i}.lip_measured"), l.measured.to_string());
            if let Some(a) = l.analytic {
                kv(&format!("map.{i}.lip_analytic"), a.to_string());
            }
        }
        kv(
            "contractive.non_contractive_pairs",
            e.non_contractive_pairs.to_string(),
        );
        if let Some(phi) = &e.phi {
            for (i, r) in phi.iter().enumerate() {
                kv(&format!("phi.map.{i}.max_excess"), r.max_excess.to_string());
                kv(&format!("phi.map.{i}.violations"), r.violations.to_string());
            }
        }
        if let Some(mk) = &e.meir_keeler {
            write_meir_keeler(&mut kv, mk);
        }
        if let Some(finite) = &e.finite {
            for (i, m) in finite.iter().enumerate() {
                let v: Vec<String> = m
                    .delta_factors
                    .iter()
                    .map(|d| d.map_or("none".into(), |d| d.to_string()))
                    .collect();
                kv(&format!("finite.map.{i}.delta_factors"), v.join(","));
            }
        }
        out
    }
}

fn write_meir_keeler(kv: &mut impl FnMut(&str, String), mk: &MeirKeelerReport) {
    kv("meir_keeler.uniform", mk.uniform.to_string());
    kv("meir_keeler.violations", mk.violations().to_string());
    kv("meir_keeler.worst_margin", mk.worst_margin().to_string());
    for e in &mk.per_epsilon {
        let p = format!("meir_keeler.eps.{}", e.epsilon);
        kv(&format!("{p}.delta"), e.delta.to_string());
        if let Some(l) = e.lambda {
            kv(&format!("{p}.lambda"), l.to_string());
        }
        kv(&format!("{p}.pairs"), e.pairs.to_string());
        kv(&format!("{p}.violations"), e.violations.to_string());
        kv(&format!("{p}.worst_margin"), e.worst_margin.to_string());
    }
}

impl MeirKeelerReport {
    /// Flat `key=value` report.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k}={v}").expect("writing to a String");
        };
        kv(
            "basis",
            "no violation found among sampled pairs (evidence, not proof)".into(),
        );
        kv("seed", self.seed.to_string());
        write_meir_keeler(&mut kv, self);
        out
    }

    /// Worst pair per epsilon as CSV: `epsilon,map,x...,y...`.
    pub fn worst_pairs_csv(&self) -> String {
        let mut out = String::new();
        for e in &self.per_epsilon {
            if let Some(p) = &e.worst_pair {
                let coords: Vec<String> = p.x.iter().chain(&p.y).map(f64::to_string).collect();
                writeln!(out, "{},{},{}", e.epsilon, p.map, coords.join(","))
                    .expect("writing to a String");
            }
        }
        out
    }
}
