//! Code functions, the operator
//! `H(g_1, ..., g_m)(α) = f_{α^1}(g_1(α(1)), ..., g_m(α(m)))`, its diagonal
//! iteration towards the canonical projection, evaluation of the projection
//! at a single address, and numerical checks of the identities the
//! projection satisfies.
//!
//! A code function of depth `k` depends only on the first `k` levels of its
//! argument. Iterating `H` on the diagonal from a constant `x0` gives, at
//! depth `k`, the table `α -> f_α(x0, ..., x0)`; both routes are available
//! (table iteration and direct word evaluation) and agree bit for bit.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attractor::AttractorRun;
use crate::code_space::{
    address_count, subaddress_positions, symbol_count, Address, AddressStream, EnumCap, Symbol,
};
use crate::error::{GifsError, Result};
use crate::metric_sets::{hausdorff, PointSet};
use crate::system::{GifsSystem, PointMap};

/// Shape of the system a code function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeShape {
    pub arity: usize,
    pub symbols: usize,
    pub dim: usize,
}

impl CodeShape {
    pub fn of(system: &GifsSystem) -> Self {
        CodeShape {
            arity: system.arity(),
            symbols: system.map_count(),
            dim: system.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Constant(Vec<f64>),
    /// Values in canonical enumeration order, back to back.
    Table(Vec<f64>),
    /// `α -> f_α(seed, ..., seed)` evaluated on demand.
    Word(Vec<f64>),
}

/// A map from depth-`k` addresses to points.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeFunction {
    shape: CodeShape,
    depth: usize,
    repr: Repr,
}

impl CodeFunction {
    /// The constant function; it has depth 0.
    pub fn constant(shape: CodeShape, value: Vec<f64>) -> Result<Self> {
        check_dim(shape, &value)?;
        Ok(CodeFunction {
            shape,
            depth: 0,
            repr: Repr::Constant(value),
        })
    }

    pub fn from_table(shape: CodeShape, depth: usize, values: Vec<f64>) -> Result<Self> {
        let count = address_count(shape.symbols, shape.arity, depth)
            .filter(|_| depth >= 1)
            .ok_or_else(|| GifsError::InvalidParameter(format!("bad table depth {depth}")))?;
        if values.len() as u128 != count * shape.dim as u128 {
            return Err(GifsError::ShapeMismatch(format!(
                "table of depth {depth} needs {count} points of dimension {}, got {} values",
                shape.dim,
                values.len()
            )));
        }
        Ok(CodeFunction {
            shape,
            depth,
            repr: Repr::Table(values),
        })
    }

    /// Lazy form of the depth-`depth` diagonal iterate from `seed`.
    pub fn word(shape: CodeShape, depth: usize, seed: Vec<f64>) -> Result<Self> {
        check_dim(shape, &seed)?;
        if depth == 0 {
            return CodeFunction::constant(shape, seed);
        }
        Ok(CodeFunction {
            shape,
            depth,
            repr: Repr::Word(seed),
        })
    }

    pub fn shape(&self) -> CodeShape {
        self.shape
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Table(_))
    }

    pub fn table(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn table_mut(&mut self) -> Option<&mut [f64]> {
        match &mut self.repr {
            Repr::Table(t) => Some(t),
            _ => None,
        }
    }

    /// Number of table entries (`|_kΩ|`).
    pub fn len(&self) -> Option<usize> {
        self.table().map(|t| t.len() / self.shape.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Value of entry `index` of a tabulated function.
    pub fn entry(&self, index: usize) -> &[f64] {
        let d = self.shape.dim;
        match &self.repr {
            Repr::Table(t) => &t[index * d..(index + 1) * d],
            Repr::Constant(c) => c,
            Repr::Word(_) => panic!("lazy code functions have no entries"),
        }
    }

    /// Value at `alpha`, which may be deeper than the function; only its
    /// first `depth` levels are read.
    pub fn value(&self, system: &GifsSystem, alpha: &Address) -> Result<Vec<f64>> {
        if CodeShape::of(system) != self.shape {
            return Err(GifsError::ShapeMismatch(
                "code function belongs to a different system".into(),
            ));
        }
        if alpha.depth() < self.depth {
            return Err(GifsError::DepthTooSmall {
                depth: alpha.depth(),
                required: self.depth,
            });
        }
        match &self.repr {
            Repr::Constant(c) => Ok(c.clone()),
            Repr::Table(_) => {
                let prefix = prefix_of(alpha, self.depth)?;
                prefix.validate(self.shape.symbols)?;
                Ok(self
                    .entry(prefix.index_in(self.shape.symbols) as usize)
                    .to_vec())
            }
            Repr::Word(seed) => system.eval_word_constant(&prefix_of(alpha, self.depth)?, seed),
        }
    }

    /// Table values as a point set.
    pub fn point_set(&self) -> Result<PointSet> {
        match &self.repr {
            Repr::Table(t) => PointSet::from_flat(self.shape.dim, t.clone()),
            Repr::Constant(c) => PointSet::singleton(c.clone()),
            Repr::Word(_) => Err(GifsError::NotTabulated(self.depth)),
        }
    }

    /// Text form: a `depth=k m=.. I=.. D=..` header, then one
    /// `address<TAB>point` line per address in canonical order.
    pub fn to_table_text(&self) -> Result<String> {
        let table = self.table().ok_or(GifsError::NotTabulated(self.depth))?;
        let s = self.shape;
        let mut out = format!(
            "depth={} m={} I={} D={}\n",
            self.depth, s.arity, s.symbols, s.dim
        );
        for (i, p) in table.chunks_exact(s.dim).enumerate() {
            let a = Address::from_index(i as u128, s.symbols, s.arity, self.depth)?;
            write!(out, "{a}\t").expect("writing to a String");
            for (c, v) in p.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses [`CodeFunction::to_table_text`] output. Addresses must appear
    /// in canonical order.
    pub fn from_table_text(text: &str) -> Result<CodeFunction> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty table".into()))?;
        let mut fields = [None; 4];
        for tok in header.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| parse_err(1, format!("bad header field {tok:?}")))?;
            let slot = ["depth", "m", "I", "D"]
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| parse_err(1, format!("unknown header field {key:?}")))?;
            fields[slot] = Some(
                value
                    .parse::<usize>()
                    .map_err(|_| parse_err(1, format!("bad value {value:?}")))?,
            );
        }
        let [Some(depth), Some(arity), Some(symbols), Some(dim)] = fields else {
            return Err(parse_err(1, "header needs depth, m, I and D".into()));
        };
        let shape = CodeShape {
            arity,
            symbols,
            dim,
        };
        let mut values = Vec::new();
        let mut expected = 0u128;
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (addr, point) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(n + 1, "missing tab separator".into()))?;
            let a = Address::parse(addr, arity).map_err(|e| parse_err(n + 1, e.to_string()))?;
            if a.depth() != depth || a.index_in(symbols) != expected {
                return Err(parse_err(n + 1, format!("unexpected address {addr}")));
            }
            expected += 1;
            let row = point
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| parse_err(n + 1, format!("bad point {point:?}")))?;
            if row.len() != dim {
                return Err(parse_err(
                    n + 1,
                    format!("point has {} coordinates", row.len()),
                ));
            }
            values.extend(row);
        }
        CodeFunction::from_table(shape, depth, values)
    }
}

fn parse_err(line: usize, reason: String) -> GifsError {
    GifsError::SpecParse {
        line,
        column: 1,
        reason,
    }
}

fn check_dim(shape: CodeShape, p: &[f64]) -> Result<()> {
    if p.len() != shape.dim {
        return Err(GifsError::ShapeMismatch(format!(
            "point of dimension {} for a system of dimension {}",
            p.len(),
            shape.dim
        )));
    }
    Ok(())
}

fn prefix_of(alpha: &Address, depth: usize) -> Result<Address> {
    if alpha.depth() == depth {
        Ok(alpha.clone())
    } else {
        alpha.truncate(depth)
    }
}

/// Digits of the `index`-th flat address of length `len`, base `base`.
fn decode_digits(mut index: usize, base: usize, out: &mut [u32]) {
    for d in out.iter_mut().rev() {
        *d = (index % base) as u32;
        index /= base;
    }
}

/// `H(g_1, ..., g_m)`: a depth-`k+1` table from `m` depth-`k` tabulated (or
/// constant) code functions.
pub fn apply_h(system: &GifsSystem, parts: &[&CodeFunction], cap: EnumCap) -> Result<CodeFunction> {
    let shape = CodeShape::of(system);
    let m = shape.arity;
    if parts.len() != m {
        return Err(GifsError::ShapeMismatch(format!(
            "operator of order {m} got {} code functions",
            parts.len()
        )));
    }
    let depth = parts[0].depth;
    for g in parts {
        if g.shape != shape {
            return Err(GifsError::ShapeMismatch(
                "code function belongs to a different system".into(),
            ));
        }
        if g.depth != depth {
            return Err(GifsError::ShapeMismatch(format!(
                "code functions of depths {depth} and {}",
                g.depth
            )));
        }
        if matches!(g.repr, Repr::Word(_)) {
            return Err(GifsError::NotTabulated(g.depth));
        }
    }
    let new_depth = depth + 1;
    let count = cap.check(shape.symbols, m, new_depth)?;
    let d = shape.dim;
    let len = symbol_count(m, new_depth).expect("bounded by cap");
    let positions: Vec<Vec<usize>> = (1..=m)
        .map(|j| subaddress_positions(m, new_depth, j))
        .collect();
    let maps = system.maps();
    let mut values = vec![0.0; count * d];
    values.par_chunks_mut(d).enumerate().for_each_init(
        || (vec![0u32; len], vec![0.0; m * d]),
        |(digits, args), (t, out)| {
            decode_digits(t, shape.symbols, digits);
            for (j, g) in parts.iter().enumerate() {
                let idx = positions[j]
                    .iter()
                    .fold(0usize, |acc, &p| acc * shape.symbols + digits[p] as usize);
                args[j * d..(j + 1) * d].copy_from_slice(g.entry(idx));
            }
            maps[digits[0] as usize].apply_into(args, out);
        },
    );
    CodeFunction::from_table(shape, new_depth, values)
}

/// `d_u(g, h) = sup_α d(g(α), h(α))` over the common depth.
pub fn sup_distance(
    system: &GifsSystem,
    g: &CodeFunction,
    h: &CodeFunction,
    cap: EnumCap,
) -> Result<f64> {
    if g.depth != h.depth {
        return Err(GifsError::ShapeMismatch(format!(
            "code functions of depths {} and {}",
            g.depth, h.depth
        )));
    }
    sup_distance_on_prefixes(system, g, h, cap)
}

/// Sup distance over addresses of depth `max(depth(g), depth(h))`; the
/// shallower function reads only the matching prefix.
pub fn sup_distance_on_prefixes(
    system: &GifsSystem,
    g: &CodeFunction,
    h: &CodeFunction,
    cap: EnumCap,
) -> Result<f64> {
    let shape = CodeShape::of(system);
    if g.shape != shape || h.shape != shape {
        return Err(GifsError::ShapeMismatch(
            "code function belongs to a different system".into(),
        ));
    }
    let metric = system.point_metric();
    if let (Repr::Table(a), Repr::Table(b)) = (&g.repr, &h.repr) {
        if g.depth == h.depth {
            return Ok(a
                .par_chunks_exact(shape.dim)
                .zip(b.par_chunks_exact(shape.dim))
                .map(|(p, q)| metric.distance(p, q))
                .reduce(|| 0.0, f64::max));
        }
    }
    let depth = g.depth.max(h.depth);
    if depth == 0 {
        return Ok(metric.distance(g.entry(0), h.entry(0)));
    }
    let count = cap.check(shape.symbols, shape.arity, depth)?;
    (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let a = Address::from_index(i as u128, shape.symbols, shape.arity, depth)?;
            Ok(metric.distance(&g.value(system, &a)?, &h.value(system, &a)?))
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

/// Enumeration and sampling limits shared by the projection routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PiConfig {
    pub cap: EnumCap,
    /// Fall back to lazy word evaluation when tabulation exceeds the cap.
    pub lazy_fallback: bool,
    /// Addresses examined per check when the address set is not enumerable.
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            cap: EnumCap::default(),
            lazy_fallback: true,
            sample_size: 4096,
            seed: 0x5EED,
        }
    }
}

/// Result of [`pi_iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct PiIteration {
    pub function: CodeFunction,
    /// `step_sizes[n] = d_u(g_n, g_{n+1})` on matched prefixes.
    pub step_sizes: Vec<f64>,
    /// True when some steps were measured on an address sample.
    pub sampled: bool,
}

/// `g_0 = x0`, `g_{n+1} = H(g_n, ..., g_n)`, returning `g_depth`.
pub fn pi_iterate(
    system: &GifsSystem,
    x0: &[f64],
    depth: usize,
    config: &PiConfig,
) -> Result<PiIteration> {
    if depth == 0 {
        return Err(GifsError::InvalidParameter("depth must be >= 1".into()));
    }
    let shape = CodeShape::of(system);
    let mut g = CodeFunction::constant(shape, x0.to_vec())?;
    let mut steps = Vec::with_capacity(depth);
    let tabulable = |k: usize| {
        address_count(shape.symbols, shape.arity, k).is_some_and(|c| c <= config.cap.0 as u128)
    };
    if !tabulable(depth) && !config.lazy_fallback {
        config.cap.check(shape.symbols, shape.arity, depth)?;
    }
    let mut n = 0;
    while n < depth && tabulable(n + 1) {
        let parts = vec![&g; shape.arity];
        let next = apply_h(system, &parts, config.cap)?;
        steps.push(sup_distance_on_prefixes(system, &g, &next, config.cap)?);
        g = next;
        n += 1;
    }
    if n == depth {
        return Ok(PiIteration {
            function: g,
            step_sizes: steps,
            sampled: false,
        });
    }
    for k in n..depth {
        let sample = sample_addresses(system, k + 1, config.sample_size, config.seed)?;
        let step = sample
            .par_iter()
            .map(|a| -> Result<f64> {
                let short = if k == 0 {
                    x0.to_vec()
                } else {
                    system.eval_word_constant(&a.truncate(k)?, x0)?
                };
                Ok(system.distance(&short, &system.eval_word_constant(a, x0)?))
            })
            .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
        steps.push(step);
    }
    Ok(PiIteration {
        function: CodeFunction::word(shape, depth, x0.to_vec())?,
        step_sizes: steps,
        sampled: true,
    })
}

/// Constant addresses followed by seeded random ones, `size` in total.
fn sample_addresses(
    system: &GifsSystem,
    depth: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<Address>> {
    let (i_count, m) = (system.map_count(), system.arity());
    let len = symbol_count(m, depth)
        .ok_or_else(|| GifsError::InvalidParameter(format!("depth {depth} too large")))?;
    let mut out: Vec<Address> = (0..i_count.min(size))
        .map(|i| Address::constant(m, depth, Symbol(i as u32)))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ depth as u64);
    while out.len() < size {
        let symbols = (0..len)
            .map(|_| Symbol(rng.gen_range(0..i_count) as u32))
            .collect();
        out.push(Address::from_flat(m, depth, symbols)?);
    }
    Ok(out)
}

/// Every depth-`depth` address when enumerable within the cap, else a
/// deterministic sample. The flag is true for a sample.
fn addresses_for_check(
    system: &GifsSystem,
    depth: usize,
    config: &PiConfig,
) -> Result<(Vec<Address>, bool)> {
    let (i_count, m) = (system.map_count(), system.arity());
    match crate::code_space::enumerate_addresses(i_count, m, depth, config.cap) {
        Ok(all) => Ok((all, false)),
        Err(GifsError::CapExceeded { .. }) => Ok((
            sample_addresses(system, depth, config.sample_size, config.seed)?,
            true,
        )),
        Err(e) => Err(e),
    }
}

/// Outcome of [`project`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub error_bound: f64,
    pub depth_used: usize,
    /// False when the bound did not reach the tolerance within the depth
    /// cap; `point` is then the best available estimate.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    /// Largest number of address symbols materialised.
    pub symbol_cap: usize,
    /// Measured diameter-decay profile `d_1, d_2, ...`, used as the error
    /// bound at depths it covers.
    pub profile: Option<Vec<f64>>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            symbol_cap: 1 << 24,
            profile: None,
        }
    }
}

/// Radius bound `sup_{a in A} d(a, x*) <= max_i d(f_i(x*, .., x*), x*) / (1 - L)`
/// for the attractor of a system with `sup lip = L < 1`; `None` otherwise.
pub fn attractor_radius_bound(system: &GifsSystem, centre: &[f64]) -> Option<f64> {
    let l = system.sup_lipschitz();
    if !(l < 1.0) {
        return None;
    }
    let diag = centre.repeat(system.arity());
    let spread = system
        .maps()
        .iter()
        .map(|f| system.distance(&f.apply(&diag), centre))
        .fold(0.0, f64::max);
    Some(spread / (1.0 - l))
}

/// The canonical projection of an address: `f_{α|k}(x*, ..., x*)` for the
/// smallest depth `k` whose diameter bound is at most `tol`, where `x*` is
/// the default seed.
pub fn project(
    system: &GifsSystem,
    stream: &AddressStream,
    tol: f64,
    config: &ProjectConfig,
) -> Result<ProjectionResult> {
    if !(tol > 0.0) {
        return Err(GifsError::InvalidParameter(format!(
            "tol must be > 0, got {tol}"
        )));
    }
    if stream.arity() != system.arity() {
        return Err(GifsError::ShapeMismatch(format!(
            "address arity {} does not match system arity {}",
            stream.arity(),
            system.arity()
        )));
    }
    stream.validate(system.map_count())?;
    let x_star = system.default_seed();
    let l = system.sup_lipschitz();
    let diam_bound = attractor_radius_bound(system, &x_star).map(|r| 2.0 * r);
    let bound = |k: usize| -> f64 {
        if let Some(d) = config.profile.as_ref().and_then(|p| p.get(k - 1)) {
            return *d;
        }
        match diam_bound {
            Some(diam) if diam == 0.0 || l == 0.0 => 0.0,
            Some(diam) => l.powi(k as i32) * diam,
            None => f64::INFINITY,
        }
    };
    let mut max_depth = 0;
    while symbol_count(system.arity(), max_depth + 1).is_some_and(|n| n <= config.symbol_cap)
        && stream.max_depth().is_none_or(|d| max_depth < d)
    {
        max_depth += 1;
        if bound(max_depth) <= tol {
            break;
        }
    }
    if max_depth == 0 {
        return Err(GifsError::InvalidParameter(
            "address stream yields no level within the symbol cap".into(),
        ));
    }
    let alpha = stream
        .take(max_depth)
        .expect("depth checked against the stream");
    let error_bound = bound(max_depth);
    Ok(ProjectionResult {
        point: system.eval_word_constant(&alpha, &x_star)?,
        error_bound,
        depth_used: max_depth,
        converged: error_bound <= tol,
    })
}

/// `sup_α d(g(α), f_{α^1}(g'(α(1)), ..., g'(α(m))))` over depth-`k`
/// addresses, where `g` has depth `k` and `g'` depth `k - 1`. Evaluated
/// through address slicing, independently of [`apply_h`]'s index arithmetic.
pub fn functional_equation_residual(
    system: &GifsSystem,
    g: &CodeFunction,
    g_prev: &CodeFunction,
    config: &PiConfig,
) -> Result<f64> {
    let k = g.depth();
    if k < 1 || g_prev.depth() + 1 != k {
        return Err(GifsError::ShapeMismatch(format!(
            "need depths k and k-1, got {} and {}",
            k,
            g_prev.depth()
        )));
    }
    let (addresses, _) = addresses_for_check(system, k, config)?;
    addresses
        .par_iter()
        .map(|alpha| -> Result<f64> {
            let args = if k == 1 {
                vec![g_prev.value(system, alpha)?; system.arity()]
            } else {
                (1..=system.arity())
                    .map(|j| g_prev.value(system, &alpha.subaddress(j)?))
                    .collect::<Result<Vec<_>>>()?
            };
            let rhs = system.eval_map(alpha.head(), &args)?;
            Ok(system.distance(&g.value(system, alpha)?, &rhs))
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

/// Residual of `H(π, ..., π) = π` at depth `depth >= 2`, with `π_k` the
/// depth-`k` diagonal iterate from `x0`.
pub fn check_functional_equation(
    system: &GifsSystem,
    x0: &[f64],
    depth: usize,
    config: &PiConfig,
) -> Result<f64> {
    if depth < 2 {
        return Err(GifsError::DepthTooSmall { depth, required: 2 });
    }
    let g = pi_iterate(system, x0, depth, config)?.function;
    let g_prev = pi_iterate(system, x0, depth - 1, config)?.function;
    functional_equation_residual(system, &g, &g_prev, config)
}

/// `h(π_k(Ω_k), A*)` where `A*` is the final iterate of an attractor run.
pub fn image_closure_check(
    system: &GifsSystem,
    x0: &[f64],
    depth: usize,
    run: &AttractorRun,
    config: &PiConfig,
) -> Result<f64> {
    let pi = pi_iterate(system, x0, depth, config)?.function;
    let image = match pi.point_set() {
        Ok(set) => set,
        Err(GifsError::NotTabulated(_)) => {
            let (addresses, _) = addresses_for_check(system, depth, config)?;
            let coords = addresses
                .par_iter()
                .map(|a| pi.value(system, a))
                .collect::<Result<Vec<_>>>()?
                .concat();
            PointSet::from_flat(system.dim(), coords)?
        }
        Err(e) => return Err(e),
    };
    hausdorff(&image, run.final_set(), system.point_metric())
}

/// Largest `d(π_k(F_i(β_1..β_m)), f_i(π_{k-1}(β_1), .., π_{k-1}(β_m)))` over
/// `trials` seeded random draws of `i` and depth-`(k-1)` addresses `β_j`.
pub fn check_combine_identity(
    system: &GifsSystem,
    x0: &[f64],
    depth: usize,
    trials: usize,
    config: &PiConfig,
) -> Result<f64> {
    if depth < 2 {
        return Err(GifsError::DepthTooSmall { depth, required: 2 });
    }
    let pi_k = pi_iterate(system, x0, depth, config)?.function;
    let pi_prev = pi_iterate(system, x0, depth - 1, config)?.function;
    let (i_count, m) = (system.map_count(), system.arity());
    let len = symbol_count(m, depth - 1).expect("depth is enumerable");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let head = Symbol(rng.gen_range(0..i_count) as u32);
        let parts = (0..m)
            .map(|_| {
                let symbols = (0..len)
                    .map(|_| Symbol(rng.gen_range(0..i_count) as u32))
                    .collect();
                Address::from_flat(m, depth - 1, symbols)
            })
            .collect::<Result<Vec<_>>>()?;
        let alpha = Address::combine(head, &parts)?;
        let args = parts
            .iter()
            .map(|b| pi_prev.value(system, b))
            .collect::<Result<Vec<_>>>()?;
        let rhs = system.eval_map(head, &args)?;
        worst = worst.max(system.distance(&pi_k.value(system, &alpha)?, &rhs));
    }
    Ok(worst)
}

/// A depth-`depth` table with entries drawn uniformly from `bounds`.
pub fn random_code_function(
    system: &GifsSystem,
    depth: usize,
    bounds: &[(f64, f64)],
    rng: &mut impl Rng,
    cap: EnumCap,
) -> Result<CodeFunction> {
    let shape = CodeShape::of(system);
    if bounds.len() != shape.dim {
        return Err(GifsError::ShapeMismatch(
            "bounds must match the dimension".into(),
        ));
    }
    let count = cap.check(shape.symbols, shape.arity, depth)?;
    let values = (0..count)
        .flat_map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect::<Vec<_>>()
        })
        .collect();
    CodeFunction::from_table(shape, depth, values)
}

/// Largest observed `d_u(H(g,..,g), H(h,..,h)) / d_u(g, h)` over `pairs`
/// random same-depth tables with entries in `bounds`.
pub fn operator_contraction_ratio(
    system: &GifsSystem,
    depth: usize,
    pairs: usize,
    bounds: &[(f64, f64)],
    seed: u64,
    cap: EnumCap,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let g = random_code_function(system, depth, bounds, &mut rng, cap)?;
        let h = random_code_function(system, depth, bounds, &mut rng, cap)?;
        let before = sup_distance(system, &g, &h, cap)?;
        if before == 0.0 {
            continue;
        }
        let hg = apply_h(system, &vec![&g; system.arity()], cap)?;
        let hh = apply_h(system, &vec![&h; system.arity()], cap)?;
        worst = worst.max(sup_distance(system, &hg, &hh, cap)? / before);
    }
    Ok(worst)
}
