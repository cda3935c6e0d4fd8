//! Finite point sets standing in for bounded subsets of `R^D`: the
//! Hausdorff-Pompeiu distance, diameters, grid decimation and the CSV point
//! format.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{GifsError, Result};
use crate::system::PointMetric;

/// A finite nonempty set of `D`-dimensional points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    /// Points back to back.
    coords: Vec<f64>,
    grid_eps: Option<f64>,
}

impl PointSet {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(GifsError::ShapeMismatch(format!(
                "point of dimension {} in a set of dimension {dim}",
                p.len()
            )));
        }
        PointSet::from_flat(dim, points.concat())
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(GifsError::InvalidParameter("dimension must be >= 1".into()));
        }
        if coords.is_empty() {
            return Err(GifsError::InvalidParameter(
                "point set must be nonempty".into(),
            ));
        }
        if coords.len() % dim != 0 {
            return Err(GifsError::ShapeMismatch(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet {
            dim,
            coords,
            grid_eps: None,
        })
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        PointSet::from_flat(point.len(), point)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn grid_eps(&self) -> Option<f64> {
        self.grid_eps
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Set union; duplicates are kept.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        same_dim(self, other)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointSet::from_flat(self.dim, coords)
    }

    /// Per-coordinate `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (b, &v) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    /// Serializes as CSV: one point per line, coordinates separated by `,`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.coords.len() * 12);
        for p in self.iter() {
            for (c, v) in p.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV point format. Text after `#` is a comment; blank
    /// lines are skipped. Errors carry the 1-based line number.
    pub fn from_csv(text: &str) -> Result<PointSet> {
        let mut dim = None;
        let mut coords = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| GifsError::SpecParse {
                line: n + 1,
                column: 1,
                reason,
            };
            let row = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number {:?}", t.trim())))
                })
                .collect::<Result<Vec<f64>>>()?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(bad(format!(
                        "expected {d} coordinates, found {}",
                        row.len()
                    )))
                }
                _ => {}
            }
            coords.extend(row);
        }
        let dim = dim.ok_or_else(|| GifsError::InvalidParameter("no points in input".into()))?;
        PointSet::from_flat(dim, coords)
    }
}

fn same_dim(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(GifsError::ShapeMismatch(format!(
            "point sets of dimension {} and {}",
            a.dim, b.dim
        )));
    }
    Ok(())
}

/// `sup_{a in A} inf_{b in B} d(a, b)`.
pub fn directed_hausdorff(a: &PointSet, b: &PointSet, metric: PointMetric) -> Result<f64> {
    same_dim(a, b)?;
    let d = a.dim;
    Ok(a.coords
        .par_chunks_exact(d)
        .map(|p| {
            b.iter()
                .map(|q| metric.distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max))
}

/// Hausdorff-Pompeiu distance `max{d(A, B), d(B, A)}`.
///
/// Exact. Large pairs of sets decimated on the same grid go through
/// [`hausdorff_bucketed`]; everything else is brute force.
pub fn hausdorff(a: &PointSet, b: &PointSet, metric: PointMetric) -> Result<f64> {
    same_dim(a, b)?;
    match (a.grid_eps, b.grid_eps) {
        (Some(ea), Some(eb)) if ea == eb && a.len() * b.len() > BUCKET_THRESHOLD => {
            hausdorff_bucketed(a, b, metric)
        }
        _ => Ok(directed_hausdorff(a, b, metric)?.max(directed_hausdorff(b, a, metric)?)),
    }
}

const BUCKET_THRESHOLD: usize = 1 << 20;
const MAX_SHELL: i64 = 48;

/// Exact Hausdorff distance between two sets snapped to the same grid,
/// searching grid cells in growing Chebyshev shells around each point.
pub fn hausdorff_bucketed(a: &PointSet, b: &PointSet, metric: PointMetric) -> Result<f64> {
    same_dim(a, b)?;
    let eps = match (a.grid_eps, b.grid_eps) {
        (Some(ea), Some(eb)) if ea == eb => ea,
        _ => {
            return Err(GifsError::InvalidParameter(
                "bucketed Hausdorff needs two sets decimated on the same grid".into(),
            ))
        }
    };
    Ok(directed_bucketed(a, b, eps, metric).max(directed_bucketed(b, a, eps, metric)))
}

fn directed_bucketed(a: &PointSet, b: &PointSet, eps: f64, metric: PointMetric) -> f64 {
    let d = a.dim;
    let cells: std::collections::HashMap<Vec<i64>, usize> = b
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().map(|&v| grid_index(v, eps)).collect(), i))
        .collect();
    a.coords
        .par_chunks_exact(d)
        .map(|p| {
            let centre: Vec<i64> = p.iter().map(|&v| grid_index(v, eps)).collect();
            let mut best = f64::INFINITY;
            let mut key = vec![0i64; d];
            for r in 0..=MAX_SHELL {
                for_each_shell_cell(&centre, r, &mut key, &mut |k| {
                    if let Some(&j) = cells.get(k) {
                        best = best.min(metric.distance(p, b.point(j)));
                    }
                });
                // every cell of shell r+1 is at least (r+1)*eps away
                if best <= (r + 1) as f64 * eps * (1.0 - 1e-9) {
                    return best;
                }
            }
            b.iter()
                .map(|q| metric.distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Visits the cells at Chebyshev distance exactly `r` from `centre`.
fn for_each_shell_cell(centre: &[i64], r: i64, key: &mut [i64], visit: &mut dyn FnMut(&[i64])) {
    fn rec(
        centre: &[i64],
        r: i64,
        axis: usize,
        on_shell: bool,
        key: &mut [i64],
        visit: &mut dyn FnMut(&[i64]),
    ) {
        if axis == centre.len() {
            if on_shell {
                visit(key);
            }
            return;
        }
        for off in -r..=r {
            key[axis] = centre[axis] + off;
            rec(centre, r, axis + 1, on_shell || off.abs() == r, key, visit);
        }
    }
    rec(centre, r, 0, r == 0, key, visit);
}

/// Largest pairwise distance.
pub fn diameter(a: &PointSet, metric: PointMetric) -> f64 {
    let d = a.dim;
    a.coords
        .par_chunks_exact(d)
        .enumerate()
        .map(|(i, p)| {
            a.coords[(i + 1) * d..]
                .chunks_exact(d)
                .map(|q| metric.distance(p, q))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Index of the grid cell containing `v`; halves round away from zero.
pub fn grid_index(v: f64, grid_eps: f64) -> i64 {
    (v / grid_eps).round() as i64
}

/// Deduplicating accumulator of grid-snapped points.
#[derive(Debug, Clone)]
pub struct GridCells {
    dim: usize,
    grid_eps: f64,
    cells: HashSet<Vec<i64>>,
    key: Vec<i64>,
}

impl GridCells {
    pub fn new(dim: usize, grid_eps: f64) -> Self {
        GridCells {
            dim,
            grid_eps,
            cells: HashSet::new(),
            key: vec![0; dim],
        }
    }

    pub fn insert(&mut self, p: &[f64]) {
        for (k, &v) in self.key.iter_mut().zip(p) {
            *k = grid_index(v, self.grid_eps);
        }
        if !self.cells.contains(self.key.as_slice()) {
            self.cells.insert(self.key.clone());
        }
    }

    pub fn merge(&mut self, other: GridCells) {
        self.cells.extend(other.cells);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell centres in lexicographic cell order.
    pub fn into_point_set(self) -> Result<PointSet> {
        let mut keys: Vec<Vec<i64>> = self.cells.into_iter().collect();
        keys.sort_unstable();
        let coords = keys
            .iter()
            .flat_map(|k| k.iter().map(|&i| i as f64 * self.grid_eps))
            .collect();
        let mut set = PointSet::from_flat(self.dim, coords)?;
        set.grid_eps = Some(self.grid_eps);
        Ok(set)
    }
}

/// Snaps every point to the `grid_eps` lattice and removes duplicates.
/// Each point moves by at most `grid_eps / 2` per coordinate.
pub fn decimate(a: &PointSet, grid_eps: f64) -> Result<PointSet> {
    if !(grid_eps > 0.0) || !grid_eps.is_finite() {
        return Err(GifsError::InvalidParameter(format!(
            "grid_eps must be a positive finite number, got {grid_eps}"
        )));
    }
    let mut cells = GridCells::new(a.dim, grid_eps);
    for p in a.iter() {
        cells.insert(p);
    }
    cells.into_point_set()
}

/// Worst-case Hausdorff displacement introduced by [`decimate`].
pub fn decimation_bound(dim: usize, grid_eps: f64, metric: PointMetric) -> f64 {
    match metric {
        PointMetric::Euclidean => grid_eps * (dim as f64).sqrt() / 2.0,
        PointMetric::Max => grid_eps / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> PointSet {
        PointSet::from_flat(1, points.to_vec()).unwrap()
    }

    const E: PointMetric = PointMetric::Euclidean;

    #[test]
    fn hausdorff_examples() {
        let a = line(&[0.0, 0.3, 1.0]);
        assert_eq!(hausdorff(&a, &a, E).unwrap(), 0.0);
        assert_eq!(hausdorff(&line(&[0.0]), &line(&[1.0]), E).unwrap(), 1.0);
        assert_eq!(
            hausdorff(&line(&[0.0, 1.0]), &line(&[0.5]), E).unwrap(),
            0.5
        );
        let p = PointSet::singleton(vec![0.0, 0.0]).unwrap();
        assert!(hausdorff(&a, &p, E).is_err());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&line(&[0.4]), E), 0.0);
        assert_eq!(diameter(&line(&[0.0, 1.0]), E), 1.0);
        let square = PointSet::new(
            2,
            &[
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
        )
        .unwrap();
        assert_eq!(diameter(&square, E), 2f64.sqrt());
        assert_eq!(diameter(&square, PointMetric::Max), 1.0);
    }

    #[test]
    fn decimate_examples() {
        let g = decimate(&line(&[0.0, 0.001, 0.002]), 1e-3).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(decimate(&g, 1e-3).unwrap(), g);
        let c = decimate(&line(&[0.0, 1e-9]), 1e-3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.grid_eps(), Some(1e-3));
        assert!(decimate(&c, 0.0).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(grid_index(0.5, 1.0), 1);
        assert_eq!(grid_index(-0.5, 1.0), -1);
        assert_eq!(grid_index(2.5, 1.0), 3);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let s = PointSet::new(2, &[vec![0.25, -1.0], vec![3.0, 1e-7]]).unwrap();
        let text = s.to_csv();
        assert_eq!(text, "0.25,-1\n3,0.0000001\n");
        assert_eq!(PointSet::from_csv(&text).unwrap(), s);
        let parsed = PointSet::from_csv("# header\n0.5\n\n1 # trailing\n").unwrap();
        assert_eq!(parsed, line(&[0.5, 1.0]));
        assert!(matches!(
            PointSet::from_csv("1,2\n3\n"),
            Err(GifsError::SpecParse { line: 2, .. })
        ));
        assert!(PointSet::from_csv("# nothing\n").is_err());
    }

    #[test]
    fn empty_sets_rejected() {
        assert!(PointSet::from_flat(1, vec![]).is_err());
        assert!(PointSet::from_flat(2, vec![1.0]).is_err());
    }
}
