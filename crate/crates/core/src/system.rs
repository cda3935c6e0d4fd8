//! System definition: affine maps `X^m -> X` on `X = R^D`, the word maps
//! `f_α`, diagonal powers `f^[k]` and diagonal fixed points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::code_space::{Address, CodeMetricParams, Symbol};
use crate::error::{GifsError, Result};

/// Metric on the base space `R^D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointMetric {
    #[default]
    Euclidean,
    Max,
}

impl PointMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            PointMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            PointMetric::Max => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// `d_max` on flat tuples of `D`-dimensional points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleMetric {
    pub point: PointMetric,
    pub dim: usize,
}

impl TupleMetric {
    pub fn distance(&self, xs: &[f64], ys: &[f64]) -> f64 {
        xs.chunks_exact(self.dim)
            .zip(ys.chunks_exact(self.dim))
            .map(|(x, y)| self.point.distance(x, y))
            .fold(0.0, f64::max)
    }
}

/// A map `X^m -> X`. Only affine maps are provided; the trait keeps the
/// evaluation and diagnostics code independent of the map family.
pub trait PointMap: Sync {
    fn arity(&self) -> usize;
    fn dim(&self) -> usize;
    /// Evaluates on `m` points stored back to back in `args`.
    fn apply_into(&self, args: &[f64], out: &mut [f64]);
    /// Lipschitz constant w.r.t. `d_max` on arguments, when known in closed form.
    fn analytic_lipschitz(&self, metric: PointMetric) -> Option<f64>;

    fn apply(&self, args: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(args, &mut out);
        out
    }
}

/// `f(x_1, ..., x_m) = sum_j A_j x_j + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    arity: usize,
    dim: usize,
    /// Block `j`, row `r`, column `c` lives at `j*D*D + r*D + c`.
    blocks: Vec<f64>,
    offset: Vec<f64>,
}

impl AffineMap {
    /// `blocks[j]` is the row-major `D x D` matrix `A_{j+1}`.
    pub fn new(blocks: Vec<Vec<Vec<f64>>>, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        if dim == 0 {
            return Err(GifsError::ShapeMismatch("offset must be nonempty".into()));
        }
        if blocks.is_empty() {
            return Err(GifsError::ShapeMismatch(
                "at least one block required".into(),
            ));
        }
        let arity = blocks.len();
        let mut flat = Vec::with_capacity(arity * dim * dim);
        for (j, block) in blocks.iter().enumerate() {
            if block.len() != dim {
                return Err(GifsError::ShapeMismatch(format!(
                    "block {j} has {} rows, expected {dim}",
                    block.len()
                )));
            }
            for (r, row) in block.iter().enumerate() {
                if row.len() != dim {
                    return Err(GifsError::ShapeMismatch(format!(
                        "block {j} row {r} has {} columns, expected {dim}",
                        row.len()
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        if flat.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(GifsError::InvalidParameter(
                "affine coefficients must be finite".into(),
            ));
        }
        Ok(AffineMap {
            arity,
            dim,
            blocks: flat,
            offset,
        })
    }

    /// The map with all blocks zero and the given offset.
    pub fn constant(arity: usize, value: Vec<f64>) -> Result<Self> {
        let dim = value.len();
        AffineMap::new(vec![vec![vec![0.0; dim]; dim]; arity.max(1)], value)
    }

    /// `f(x_1..x_m) = scale * sum_j x_j + offset`, i.e. every block is
    /// `scale * Id`.
    pub fn uniform_scaling(arity: usize, scale: f64, offset: Vec<f64>) -> Result<Self> {
        let dim = offset.len();
        let block: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| if r == c { scale } else { 0.0 }).collect())
            .collect();
        AffineMap::new(vec![block; arity], offset)
    }

    pub fn block(&self, j: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        self.blocks[j * d * d..(j + 1) * d * d]
            .chunks_exact(d)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn blocks(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.arity).map(|j| self.block(j)).collect()
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Spectral norm of block `j`.
    fn block_spectral_norm(&self, j: usize) -> f64 {
        let d = self.dim;
        let m = DMatrix::from_row_slice(d, d, &self.blocks[j * d * d..(j + 1) * d * d]);
        m.singular_values().max()
    }
}

impl PointMap for AffineMap {
    fn arity(&self) -> usize {
        self.arity
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, args: &[f64], out: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(args.len(), self.arity * d);
        for (r, slot) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for j in 0..self.arity {
                let row = &self.blocks[j * d * d + r * d..j * d * d + (r + 1) * d];
                let x = &args[j * d..(j + 1) * d];
                for (a, v) in row.iter().zip(x) {
                    acc += a * v;
                }
            }
            *slot = acc + self.offset[r];
        }
    }

    /// Under the max point metric this is the induced norm of `[A_1 .. A_m]`
    /// (max absolute row sum), which is exact. Under the euclidean metric it
    /// is `sum_j ||A_j||_2`, exact when `m = 1` or `D = 1` and an upper bound
    /// otherwise.
    fn analytic_lipschitz(&self, metric: PointMetric) -> Option<f64> {
        let d = self.dim;
        Some(match metric {
            PointMetric::Max => (0..d)
                .map(|r| {
                    (0..self.arity)
                        .map(|j| {
                            let s = j * d * d + r * d;
                            self.blocks[s..s + d].iter().map(|a| a.abs()).sum::<f64>()
                        })
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            PointMetric::Euclidean if d == 1 => self.blocks.iter().map(|a| a.abs()).sum(),
            PointMetric::Euclidean => (0..self.arity).map(|j| self.block_spectral_norm(j)).sum(),
        })
    }
}

/// Provenance of a system obtained by cutting an infinite family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub family_name: String,
    pub truncated_at: usize,
}

/// A generalized iterated function system of order `m` on `R^D` with a
/// finite (possibly truncated) list of affine maps.
#[derive(Debug, Clone, PartialEq)]
pub struct GifsSystem {
    arity: usize,
    dim: usize,
    maps: Vec<AffineMap>,
    point_metric: PointMetric,
    code_params: CodeMetricParams,
    truncation: Option<Truncation>,
}

impl GifsSystem {
    pub fn new(maps: Vec<AffineMap>, point_metric: PointMetric) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| GifsError::InvalidParameter("a system needs at least one map".into()))?;
        let (arity, dim) = (first.arity, first.dim);
        for (i, f) in maps.iter().enumerate() {
            if f.arity != arity || f.dim != dim {
                return Err(GifsError::ShapeMismatch(format!(
                    "map {i} has (m={}, D={}), expected (m={arity}, D={dim})",
                    f.arity, f.dim
                )));
            }
        }
        if maps.len() > u32::MAX as usize {
            return Err(GifsError::InvalidParameter("too many maps".into()));
        }
        Ok(GifsSystem {
            arity,
            dim,
            maps,
            point_metric,
            code_params: CodeMetricParams::default(),
            truncation: None,
        })
    }

    pub fn with_code_params(mut self, params: CodeMetricParams) -> Self {
        self.code_params = params;
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = Some(truncation);
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|I|`.
    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, i: Symbol) -> Result<&AffineMap> {
        self.maps.get(i.index()).ok_or(GifsError::SymbolOutOfRange {
            symbol: i.0,
            count: self.maps.len(),
        })
    }

    pub fn point_metric(&self) -> PointMetric {
        self.point_metric
    }

    pub fn tuple_metric(&self) -> TupleMetric {
        TupleMetric {
            point: self.point_metric,
            dim: self.dim,
        }
    }

    pub fn code_params(&self) -> CodeMetricParams {
        self.code_params
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.point_metric.distance(a, b)
    }

    /// `sup_i lip(f_i)` from the closed-form constants.
    pub fn sup_lipschitz(&self) -> f64 {
        self.maps
            .iter()
            .map(|f| {
                f.analytic_lipschitz(self.point_metric)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(GifsError::ShapeMismatch(format!(
                "point has dimension {}, expected {}",
                p.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `f_i(x_1, ..., x_m)`.
    pub fn eval_map(&self, i: Symbol, args: &[Vec<f64>]) -> Result<Vec<f64>> {
        let f = self.map(i)?;
        if args.len() != self.arity {
            return Err(GifsError::ShapeMismatch(format!(
                "map takes {} arguments, got {}",
                self.arity,
                args.len()
            )));
        }
        let mut flat = Vec::with_capacity(self.arity * self.dim);
        for a in args {
            self.check_point(a)?;
            flat.extend_from_slice(a);
        }
        Ok(f.apply(&flat))
    }

    /// `f_α(x_1, ..., x_{m^k})`. Block `j` of `m^(k-1)` consecutive
    /// arguments feeds `f_{α(j)}`.
    pub fn eval_word(&self, alpha: &Address, args: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_address(alpha)?;
        let leaves = self.leaf_count(alpha)?;
        if args.len() != leaves {
            return Err(GifsError::ShapeMismatch(format!(
                "word of depth {} takes {leaves} arguments, got {}",
                alpha.depth(),
                args.len()
            )));
        }
        let mut flat = Vec::with_capacity(leaves * self.dim);
        for a in args {
            self.check_point(a)?;
            flat.extend_from_slice(a);
        }
        let (d, m) = (self.dim, self.arity);
        let bottom = alpha.level(alpha.depth());
        let mut values = vec![0.0; bottom.len() * d];
        for (p, s) in bottom.iter().enumerate() {
            self.maps[s.index()].apply_into(
                &flat[p * m * d..(p + 1) * m * d],
                &mut values[p * d..(p + 1) * d],
            );
        }
        Ok(self.fold_levels(alpha, values))
    }

    /// `f_α(x, ..., x)`: every argument is the same point.
    pub fn eval_word_constant(&self, alpha: &Address, x: &[f64]) -> Result<Vec<f64>> {
        self.check_address(alpha)?;
        self.check_point(x)?;
        let d = self.dim;
        let diagonal: Vec<f64> = x.repeat(self.arity);
        let mut cache: Vec<Option<Vec<f64>>> = vec![None; self.maps.len()];
        let bottom = alpha.level(alpha.depth());
        let mut values = vec![0.0; bottom.len() * d];
        for (p, s) in bottom.iter().enumerate() {
            let v = cache[s.index()].get_or_insert_with(|| self.maps[s.index()].apply(&diagonal));
            values[p * d..(p + 1) * d].copy_from_slice(v);
        }
        Ok(self.fold_levels(alpha, values))
    }

    /// Folds node values of the deepest level upward to the root.
    fn fold_levels(&self, alpha: &Address, mut values: Vec<f64>) -> Vec<f64> {
        let (d, m) = (self.dim, self.arity);
        for j in (1..alpha.depth()).rev() {
            let level = alpha.level(j);
            let mut next = vec![0.0; level.len() * d];
            for (p, s) in level.iter().enumerate() {
                self.maps[s.index()].apply_into(
                    &values[p * m * d..(p + 1) * m * d],
                    &mut next[p * d..(p + 1) * d],
                );
            }
            values = next;
        }
        values
    }

    fn check_address(&self, alpha: &Address) -> Result<()> {
        if alpha.arity() != self.arity {
            return Err(GifsError::ShapeMismatch(format!(
                "address arity {} does not match system arity {}",
                alpha.arity(),
                self.arity
            )));
        }
        alpha.validate(self.maps.len())
    }

    fn leaf_count(&self, alpha: &Address) -> Result<usize> {
        u32::try_from(alpha.depth())
            .ok()
            .and_then(|k| self.arity.checked_pow(k))
            .ok_or_else(|| GifsError::ShapeMismatch("word too deep".into()))
    }

    /// Fixed point of map `i`'s diagonal `x -> f_i(x, ..., x)`, iterated
    /// from the origin.
    pub fn diagonal_fixed_point(&self, i: Symbol, tol: f64, max_iter: usize) -> Result<FixedPoint> {
        fixed_point_diagonal(
            self.map(i)?,
            self.point_metric,
            &vec![0.0; self.dim],
            tol,
            max_iter,
        )
    }

    /// Default seed point: the diagonal fixed point of map 0, or the origin
    /// when that iteration does not produce a finite point.
    pub fn default_seed(&self) -> Vec<f64> {
        match self.diagonal_fixed_point(Symbol(0), 1e-13, 10_000) {
            Ok(fp) if fp.point.iter().all(|v| v.is_finite()) => fp.point,
            _ => vec![0.0; self.dim],
        }
    }
}

/// `f^[k](x, ..., x)`; for `m = 1` this is the `k`-fold composite.
pub fn diagonal_power(f: &dyn PointMap, k: usize, x: &[f64]) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(GifsError::InvalidParameter(
            "diagonal power needs k >= 1".into(),
        ));
    }
    if x.len() != f.dim() {
        return Err(GifsError::ShapeMismatch(format!(
            "point has dimension {}, expected {}",
            x.len(),
            f.dim()
        )));
    }
    let mut y = x.to_vec();
    for _ in 0..k {
        y = f.apply(&y.repeat(f.arity()));
    }
    Ok(y)
}

/// Outcome of a diagonal fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub point: Vec<f64>,
    /// Last step `d(x_n, x_{n+1})`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Every step size, in order.
    pub steps: Vec<f64>,
}

/// Iterates `x -> f(x, ..., x)` until a step is at most `tol` or `max_iter`
/// steps were taken. Non-convergence is reported through
/// [`FixedPoint::converged`].
pub fn fixed_point_diagonal(
    f: &dyn PointMap,
    metric: PointMetric,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(GifsError::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    if x0.len() != f.dim() {
        return Err(GifsError::ShapeMismatch(format!(
            "seed has dimension {}, expected {}",
            x0.len(),
            f.dim()
        )));
    }
    let mut x = x0.to_vec();
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = f.apply(&x.repeat(f.arity()));
        let step = metric.distance(&x, &next);
        steps.push(step);
        x = next;
        if step <= tol {
            converged = true;
            break;
        }
        if !step.is_finite() {
            break;
        }
    }
    Ok(FixedPoint {
        residual: steps.last().copied().unwrap_or(f64::INFINITY),
        iterations: steps.len(),
        point: x,
        converged,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn eval_map_on_dyadic_family() {
        let s = catalog::dyadic_average_family(4);
        assert_eq!(
            s.eval_map(Symbol(0), &[vec![0.0], vec![0.0]]).unwrap(),
            vec![0.5]
        );
        assert_eq!(
            s.eval_map(Symbol(0), &[vec![1.0], vec![1.0]]).unwrap(),
            vec![1.0]
        );
        assert!(s.eval_map(Symbol(9), &[vec![0.0], vec![0.0]]).is_err());
        assert!(s.eval_map(Symbol(0), &[vec![0.0]]).is_err());
        assert!(s.eval_map(Symbol(0), &[vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn constant_map_ignores_arguments() {
        let s = GifsSystem::new(
            vec![AffineMap::constant(2, vec![3.0, -1.0]).unwrap()],
            PointMetric::Euclidean,
        )
        .unwrap();
        let v = s
            .eval_map(Symbol(0), &[vec![7.0, 8.0], vec![-2.0, 0.5]])
            .unwrap();
        assert_eq!(v, vec![3.0, -1.0]);
        for k in 1..5 {
            assert_eq!(
                diagonal_power(&s.maps()[0], k, &[9.0, 9.0]).unwrap(),
                vec![3.0, -1.0]
            );
        }
        let fp = fixed_point_diagonal(&s.maps()[0], PointMetric::Euclidean, &[5.0, 5.0], 1e-12, 10)
            .unwrap();
        assert!(fp.converged);
        assert_eq!(fp.point, vec![3.0, -1.0]);
        assert!(fp.iterations <= 2);
    }

    #[test]
    fn eval_word_depth_one_is_eval_map() {
        let s = catalog::dyadic_average_family(3);
        for i in 0..3 {
            let a = Address::constant(2, 1, Symbol(i)).unwrap();
            let args = vec![vec![0.3], vec![0.9]];
            assert_eq!(
                s.eval_word(&a, &args).unwrap(),
                s.eval_map(Symbol(i), &args).unwrap()
            );
        }
    }

    #[test]
    fn eval_word_depth_two_zeros() {
        let s = catalog::dyadic_average_family(2);
        let a = Address::constant(2, 2, Symbol(0)).unwrap();
        let args = vec![vec![0.0]; 4];
        assert_eq!(s.eval_word(&a, &args).unwrap(), vec![0.75]);
        assert_eq!(s.eval_word_constant(&a, &[0.0]).unwrap(), vec![0.75]);
        assert!(s.eval_word(&a, &args[..3]).is_err());
    }

    #[test]
    fn diagonal_power_dyadic() {
        let s = catalog::dyadic_average_family(2);
        let f0 = &s.maps()[0];
        let got: Vec<f64> = (1..=3)
            .map(|k| diagonal_power(f0, k, &[0.0]).unwrap()[0])
            .collect();
        assert_eq!(got, vec![0.5, 0.75, 0.875]);
        assert!(diagonal_power(f0, 0, &[0.0]).is_err());
    }

    #[test]
    fn diagonal_fixed_points() {
        let s = catalog::dyadic_average_family(2);
        let fp = fixed_point_diagonal(&s.maps()[0], PointMetric::Euclidean, &[0.0], 1e-10, 1000)
            .unwrap();
        assert!(fp.converged);
        assert!((fp.point[0] - 1.0).abs() < 1e-9);
        let fp = fixed_point_diagonal(&s.maps()[1], PointMetric::Euclidean, &[0.0], 1e-10, 1000)
            .unwrap();
        assert!((fp.point[0] - 1.0 / 3.0).abs() < 1e-9);
        // contraction of the step sizes at rate lip(f_1) = 1/4
        for w in fp.steps.windows(2) {
            assert!(w[1] <= 0.25 * w[0] + 1e-15);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let f = AffineMap::new(vec![vec![vec![2.0]]], vec![1.0]).unwrap();
        let fp = fixed_point_diagonal(&f, PointMetric::Euclidean, &[0.0], 1e-9, 20).unwrap();
        assert!(!fp.converged);
        assert_eq!(fp.iterations, 20);
        assert!(fixed_point_diagonal(&f, PointMetric::Euclidean, &[0.0], 0.0, 20).is_err());
    }

    #[test]
    fn analytic_lipschitz_constants() {
        let s = catalog::dyadic_average_family(5);
        for (n, f) in s.maps().iter().enumerate() {
            let l = f.analytic_lipschitz(PointMetric::Euclidean).unwrap();
            assert_eq!(l, 0.5f64.powi(n as i32 + 1));
        }
        assert_eq!(s.sup_lipschitz(), 0.5);

        let rot =
            AffineMap::new(vec![vec![vec![0.0, -0.5], vec![0.5, 0.0]]], vec![0.0, 0.0]).unwrap();
        let l = rot.analytic_lipschitz(PointMetric::Euclidean).unwrap();
        assert!((l - 0.5).abs() < 1e-12);
        assert_eq!(rot.analytic_lipschitz(PointMetric::Max).unwrap(), 0.5);
    }

    #[test]
    fn system_rejects_mixed_shapes() {
        let a = AffineMap::constant(2, vec![0.0]).unwrap();
        let b = AffineMap::constant(1, vec![0.0]).unwrap();
        assert!(GifsSystem::new(vec![a, b], PointMetric::Euclidean).is_err());
        assert!(GifsSystem::new(vec![], PointMetric::Euclidean).is_err());
        assert!(AffineMap::new(vec![vec![vec![1.0, 0.0]]], vec![0.0]).is_err());
    }

    #[test]
    fn default_seed_is_map_zero_fixed_point() {
        let s = catalog::dyadic_average_family(3);
        assert!((s.default_seed()[0] - 1.0).abs() < 1e-12);
        let c = catalog::cantor();
        assert_eq!(c.default_seed(), vec![0.0]);
    }
}
