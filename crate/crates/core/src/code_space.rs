//! Hierarchical code space: finite-depth addresses, their canonical
//! enumeration, the level metric, sub-address slicing and the combinators
//! that glue `m` addresses under a new root symbol.
//!
//! A depth-`k` address over arity `m` is a complete `m`-ary tree of height
//! `k` whose nodes carry symbols. Level `j` (1-based) holds `m^(j-1)`
//! symbols. Addresses are stored flat, level after level, which is exactly
//! heap order: the children of the node at level `j`, position `p` are the
//! nodes at level `j+1`, positions `p*m .. p*m + m`.
//!
//! String form: levels separated by `/`, symbols within a level by `,`,
//! e.g. `0/1,0/1,1,0,1` for `m = 2`, depth 3.

use std::fmt;

use crate::error::{GifsError, Result};

/// Default cap on the number of addresses any enumeration may produce.
pub const DEFAULT_ENUM_CAP: usize = 200_000;

/// An element of the index set `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Symbol(pub u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Upper bound on the size of an address enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumCap(pub usize);

impl Default for EnumCap {
    fn default() -> Self {
        EnumCap(DEFAULT_ENUM_CAP)
    }
}

impl EnumCap {
    /// Reads `GIFS_ENUM_CAP`, falling back to the default when unset or
    /// unparsable.
    pub fn from_env() -> Self {
        std::env::var("GIFS_ENUM_CAP")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .map(EnumCap)
            .unwrap_or_default()
    }

    pub fn check(self, i_count: usize, arity: usize, depth: usize) -> Result<usize> {
        match address_count(i_count, arity, depth) {
            Some(n) if n <= self.0 as u128 => Ok(n as usize),
            count => Err(GifsError::CapExceeded { count, cap: self.0 }),
        }
    }
}

/// Parameters of the code-space metric `sum_j C^j [level j differs]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeMetricParams {
    base: f64,
}

impl Default for CodeMetricParams {
    fn default() -> Self {
        CodeMetricParams { base: 0.5 }
    }
}

impl CodeMetricParams {
    pub fn new(base: f64) -> Result<Self> {
        if base > 0.0 && base < 1.0 {
            Ok(CodeMetricParams { base })
        } else {
            Err(GifsError::InvalidParameter(format!(
                "code metric base must lie in (0, 1), got {base}"
            )))
        }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Supremum of the metric over depth-`k` addresses: `C(1 - C^k)/(1 - C)`.
    pub fn bound(&self, depth: usize) -> f64 {
        let c = self.base;
        c * (1.0 - c.powi(depth as i32)) / (1.0 - c)
    }
}

/// Number of symbols at level `level` (1-based).
pub fn level_len(arity: usize, level: usize) -> Option<usize> {
    arity.checked_pow(u32::try_from(level.checked_sub(1)?).ok()?)
}

/// Offset of level `level` (1-based) in the flat symbol array.
pub fn level_offset(arity: usize, level: usize) -> Option<usize> {
    symbol_count(arity, level.checked_sub(1)?)
}

/// Total number of symbols in a depth-`depth` address: `(m^k - 1)/(m - 1)`,
/// or `k` when `m = 1`.
pub fn symbol_count(arity: usize, depth: usize) -> Option<usize> {
    let mut total = 0usize;
    let mut len = 1usize;
    for _ in 0..depth {
        total = total.checked_add(len)?;
        len = len.checked_mul(arity)?;
    }
    Some(total)
}

/// Number of depth-`depth` addresses over an alphabet of `i_count` symbols:
/// `i_count^((m^k - 1)/(m - 1))`. `None` on overflow.
pub fn address_count(i_count: usize, arity: usize, depth: usize) -> Option<u128> {
    let exponent = u32::try_from(symbol_count(arity, depth)?).ok()?;
    (i_count as u128).checked_pow(exponent)
}

/// A depth-`k` word of the code space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    arity: usize,
    depth: usize,
    symbols: Vec<Symbol>,
}

impl Address {
    /// Builds an address from explicit levels.
    pub fn new(arity: usize, levels: Vec<Vec<Symbol>>) -> Result<Self> {
        if arity == 0 {
            return Err(GifsError::InvalidParameter("arity must be >= 1".into()));
        }
        if levels.is_empty() {
            return Err(GifsError::DepthTooSmall {
                depth: 0,
                required: 1,
            });
        }
        let depth = levels.len();
        let mut symbols = Vec::with_capacity(symbol_count(arity, depth).unwrap_or(0));
        for (j, level) in levels.into_iter().enumerate() {
            let expected = level_len(arity, j + 1).ok_or_else(|| {
                GifsError::ShapeMismatch(format!("level {} is too large to index", j + 1))
            })?;
            if level.len() != expected {
                return Err(GifsError::ShapeMismatch(format!(
                    "level {} has {} symbols, expected {expected}",
                    j + 1,
                    level.len()
                )));
            }
            symbols.extend(level);
        }
        Ok(Address {
            arity,
            depth,
            symbols,
        })
    }

    /// Builds an address from its flat (level-after-level) symbol array.
    pub fn from_flat(arity: usize, depth: usize, symbols: Vec<Symbol>) -> Result<Self> {
        if arity == 0 || depth == 0 {
            return Err(GifsError::InvalidParameter(
                "arity and depth must be >= 1".into(),
            ));
        }
        let expected = symbol_count(arity, depth)
            .ok_or_else(|| GifsError::ShapeMismatch("address too large".into()))?;
        if symbols.len() != expected {
            return Err(GifsError::ShapeMismatch(format!(
                "flat address of depth {depth} needs {expected} symbols, got {}",
                symbols.len()
            )));
        }
        Ok(Address {
            arity,
            depth,
            symbols,
        })
    }

    /// The address whose every symbol is `symbol`.
    pub fn constant(arity: usize, depth: usize, symbol: Symbol) -> Result<Self> {
        let n = symbol_count(arity, depth)
            .ok_or_else(|| GifsError::ShapeMismatch("address too large".into()))?;
        Address::from_flat(arity, depth, vec![symbol; n])
    }

    /// Decodes the `index`-th address of the canonical enumeration.
    pub fn from_index(index: u128, i_count: usize, arity: usize, depth: usize) -> Result<Self> {
        let n = symbol_count(arity, depth)
            .ok_or_else(|| GifsError::ShapeMismatch("address too large".into()))?;
        if let Some(total) = address_count(i_count, arity, depth) {
            if index >= total {
                return Err(GifsError::InvalidParameter(format!(
                    "index {index} out of range for {total} addresses"
                )));
            }
        }
        let mut symbols = vec![Symbol(0); n];
        let mut rest = index;
        let base = i_count as u128;
        for slot in symbols.iter_mut().rev() {
            *slot = Symbol((rest % base) as u32);
            rest /= base;
        }
        Address::from_flat(arity, depth, symbols)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Flat symbol array, level after level.
    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// The root symbol `α^1`.
    pub fn head(&self) -> Symbol {
        self.symbols[0]
    }

    /// Level `j` (1-based). Panics when `j` is not in `1..=depth`.
    pub fn level(&self, j: usize) -> &[Symbol] {
        assert!(j >= 1 && j <= self.depth, "level {j} out of range");
        let off = level_offset(self.arity, j).expect("level offset fits");
        let len = level_len(self.arity, j).expect("level length fits");
        &self.symbols[off..off + len]
    }

    pub fn levels(&self) -> impl Iterator<Item = &[Symbol]> {
        (1..=self.depth).map(move |j| self.level(j))
    }

    /// Position in the canonical enumeration over `i_count` symbols.
    pub fn index_in(&self, i_count: usize) -> u128 {
        self.symbols
            .iter()
            .fold(0u128, |acc, s| acc * i_count as u128 + s.0 as u128)
    }

    /// Checks every symbol against an index set of size `i_count`.
    pub fn validate(&self, i_count: usize) -> Result<()> {
        match self.symbols.iter().find(|s| s.index() >= i_count) {
            Some(s) => Err(GifsError::SymbolOutOfRange {
                symbol: s.0,
                count: i_count,
            }),
            None => Ok(()),
        }
    }

    /// The first `depth` levels.
    pub fn truncate(&self, depth: usize) -> Result<Address> {
        if depth == 0 || depth > self.depth {
            return Err(GifsError::InvalidParameter(format!(
                "cannot truncate a depth-{} address to depth {depth}",
                self.depth
            )));
        }
        let n = symbol_count(self.arity, depth).expect("smaller than self");
        Ok(Address {
            arity: self.arity,
            depth,
            symbols: self.symbols[..n].to_vec(),
        })
    }

    /// The sub-address `α(i)`, `i` in `1..=m`: level `j` is the `i`-th block
    /// of length `m^(j-1)` of level `j+1`.
    pub fn subaddress(&self, i: usize) -> Result<Address> {
        if self.depth < 2 {
            return Err(GifsError::DepthTooSmall {
                depth: self.depth,
                required: 2,
            });
        }
        if i == 0 || i > self.arity {
            return Err(GifsError::PositionOutOfRange {
                position: i,
                arity: self.arity,
            });
        }
        let symbols = subaddress_positions(self.arity, self.depth, i)
            .into_iter()
            .map(|p| self.symbols[p])
            .collect();
        Ok(Address {
            arity: self.arity,
            depth: self.depth - 1,
            symbols,
        })
    }

    /// The combinator `F_i(β_1, ..., β_m)`: root `i`, level `j+1` is the
    /// concatenation of the `β`s' level `j`.
    pub fn combine(head: Symbol, parts: &[Address]) -> Result<Address> {
        let first = parts
            .first()
            .ok_or_else(|| GifsError::ShapeMismatch("combine needs m >= 1 parts".into()))?;
        let (arity, depth) = (first.arity, first.depth);
        if parts.len() != arity {
            return Err(GifsError::ShapeMismatch(format!(
                "combine got {} parts for arity {arity}",
                parts.len()
            )));
        }
        if let Some(bad) = parts.iter().find(|p| p.arity != arity || p.depth != depth) {
            return Err(GifsError::ShapeMismatch(format!(
                "combine parts disagree: (m={arity}, k={depth}) vs (m={}, k={})",
                bad.arity, bad.depth
            )));
        }
        let mut symbols = Vec::with_capacity(1 + arity * first.symbols.len());
        symbols.push(head);
        for j in 1..=depth {
            for part in parts {
                symbols.extend_from_slice(part.level(j));
            }
        }
        Ok(Address {
            arity,
            depth: depth + 1,
            symbols,
        })
    }

    /// Parses the `/`- and `,`-separated string form.
    pub fn parse(input: &str, arity: usize) -> Result<Address> {
        let levels = parse_levels(input, input.trim())?;
        Address::new(arity, levels).map_err(|e| GifsError::AddressSyntax {
            input: input.to_string(),
            reason: e.to_string(),
        })
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_levels(f, self.levels())
    }
}

fn write_levels<'a>(
    f: &mut fmt::Formatter<'_>,
    levels: impl Iterator<Item = &'a [Symbol]>,
) -> fmt::Result {
    for (j, level) in levels.enumerate() {
        if j > 0 {
            f.write_str("/")?;
        }
        for (p, s) in level.iter().enumerate() {
            if p > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
    }
    Ok(())
}

fn parse_levels(input: &str, body: &str) -> Result<Vec<Vec<Symbol>>> {
    let syntax = |reason: String| GifsError::AddressSyntax {
        input: input.to_string(),
        reason,
    };
    if body.is_empty() {
        return Err(syntax("empty address".into()));
    }
    body.split('/')
        .map(|level| {
            level
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<u32>()
                        .map(Symbol)
                        .map_err(|_| syntax(format!("bad symbol {:?}", tok.trim())))
                })
                .collect()
        })
        .collect()
}

/// Flat positions, in order, of the symbols of `α(i)` inside a depth-`depth`
/// address.
pub fn subaddress_positions(arity: usize, depth: usize, i: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 1..depth {
        let block = level_len(arity, j).expect("level fits");
        let start = level_offset(arity, j + 1).expect("level fits") + (i - 1) * block;
        out.extend(start..start + block);
    }
    out
}

/// All depth-`depth` addresses, once each, in lexicographic order of their
/// flat symbol arrays.
pub fn enumerate_addresses(
    i_count: usize,
    arity: usize,
    depth: usize,
    cap: EnumCap,
) -> Result<Vec<Address>> {
    if i_count == 0 || arity == 0 || depth == 0 {
        return Err(GifsError::InvalidParameter(
            "enumeration needs |I| >= 1, m >= 1 and k >= 1".into(),
        ));
    }
    let total = cap.check(i_count, arity, depth)?;
    let n = symbol_count(arity, depth).expect("bounded by cap");
    let mut digits = vec![0u32; n];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        out.push(Address {
            arity,
            depth,
            symbols: digits.iter().copied().map(Symbol).collect(),
        });
        // odometer, last symbol fastest
        for d in digits.iter_mut().rev() {
            *d += 1;
            if (*d as usize) < i_count {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

/// `sum_{j=1..k} C^j [α^j != β^j]`.
pub fn code_metric(a: &Address, b: &Address, params: CodeMetricParams) -> Result<f64> {
    if a.arity != b.arity || a.depth != b.depth {
        return Err(GifsError::ShapeMismatch(format!(
            "code metric needs equal shapes, got (m={}, k={}) and (m={}, k={})",
            a.arity, a.depth, b.arity, b.depth
        )));
    }
    let mut weight = 1.0;
    let mut total = 0.0;
    for (la, lb) in a.levels().zip(b.levels()) {
        weight *= params.base;
        if la != lb {
            total += weight;
        }
    }
    Ok(total)
}

/// A lazily materialised infinite (or finite) address: explicit prefix
/// levels followed by a cycle of level patterns.
///
/// Each pattern of the cycle fills one level by tiling its symbols. So
/// `(0)` is the all-zeros address, `0/1,1...(2)` has two explicit levels
/// and every deeper level made of `2`s, and `(0/1)` alternates all-zero and
/// all-one levels. Without a cycle the stream ends after its prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressStream {
    arity: usize,
    prefix: Vec<Vec<Symbol>>,
    period: Vec<Vec<Symbol>>,
}

impl AddressStream {
    pub fn new(arity: usize, prefix: Vec<Vec<Symbol>>, period: Vec<Vec<Symbol>>) -> Result<Self> {
        if arity == 0 {
            return Err(GifsError::InvalidParameter("arity must be >= 1".into()));
        }
        for (j, level) in prefix.iter().enumerate() {
            if Some(level.len()) != level_len(arity, j + 1) {
                return Err(GifsError::ShapeMismatch(format!(
                    "prefix level {} has {} symbols, expected {}",
                    j + 1,
                    level.len(),
                    level_len(arity, j + 1).unwrap_or(usize::MAX)
                )));
            }
        }
        if period.iter().any(Vec::is_empty) {
            return Err(GifsError::InvalidParameter("empty period pattern".into()));
        }
        if prefix.is_empty() && period.is_empty() {
            return Err(GifsError::InvalidParameter("empty address stream".into()));
        }
        Ok(AddressStream {
            arity,
            prefix,
            period,
        })
    }

    /// The stream that repeats a finite address's levels and then ends.
    pub fn finite(address: &Address) -> Self {
        AddressStream {
            arity: address.arity,
            prefix: address.levels().map(<[Symbol]>::to_vec).collect(),
            period: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `None` for infinite streams.
    pub fn max_depth(&self) -> Option<usize> {
        self.period.is_empty().then_some(self.prefix.len())
    }

    /// Level `j` (1-based), or `None` past the end of a finite stream.
    pub fn level(&self, j: usize) -> Option<Vec<Symbol>> {
        if j == 0 {
            return None;
        }
        if j <= self.prefix.len() {
            return Some(self.prefix[j - 1].clone());
        }
        if self.period.is_empty() {
            return None;
        }
        let pattern = &self.period[(j - self.prefix.len() - 1) % self.period.len()];
        let len = level_len(self.arity, j)?;
        Some(pattern.iter().copied().cycle().take(len).collect())
    }

    /// The depth-`depth` truncation, or `None` when the stream is too short.
    pub fn take(&self, depth: usize) -> Option<Address> {
        if depth == 0 || self.max_depth().is_some_and(|d| depth > d) {
            return None;
        }
        let mut symbols = Vec::with_capacity(symbol_count(self.arity, depth)?);
        for j in 1..=depth {
            symbols.extend(self.level(j)?);
        }
        Some(Address {
            arity: self.arity,
            depth,
            symbols,
        })
    }

    pub fn validate(&self, i_count: usize) -> Result<()> {
        let bad = self
            .prefix
            .iter()
            .chain(self.period.iter())
            .flatten()
            .find(|s| s.index() >= i_count);
        match bad {
            Some(s) => Err(GifsError::SymbolOutOfRange {
                symbol: s.0,
                count: i_count,
            }),
            None => Ok(()),
        }
    }

    /// Parses `prefix`, `prefix...(period)` or `(period)`.
    pub fn parse(input: &str, arity: usize) -> Result<AddressStream> {
        let s = input.trim();
        let syntax = |reason: &str| GifsError::AddressSyntax {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let (prefix_part, period_part) = if let Some((pre, per)) = s.split_once("...") {
            if pre.trim().is_empty() {
                return Err(syntax("empty prefix before '...'"));
            }
            (Some(pre.trim()), Some(per.trim()))
        } else if s.starts_with('(') {
            (None, Some(s))
        } else {
            (Some(s), None)
        };
        let prefix = match prefix_part {
            Some(p) => parse_levels(input, p)?,
            None => Vec::new(),
        };
        let period = match period_part {
            Some(p) => {
                let inner = p
                    .strip_prefix('(')
                    .and_then(|q| q.strip_suffix(')'))
                    .ok_or_else(|| syntax("period must be written as (...)"))?;
                parse_levels(input, inner.trim())?
            }
            None => Vec::new(),
        };
        AddressStream::new(arity, prefix, period).map_err(|e| GifsError::AddressSyntax {
            input: input.to_string(),
            reason: e.to_string(),
        })
    }
}

impl fmt::Display for AddressStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_levels(f, self.prefix.iter().map(Vec::as_slice))?;
        if !self.period.is_empty() {
            if !self.prefix.is_empty() {
                f.write_str("...")?;
            }
            f.write_str("(")?;
            write_levels(f, self.period.iter().map(Vec::as_slice))?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(v: &[u32]) -> Vec<Symbol> {
        v.iter().copied().map(Symbol).collect()
    }

    fn addr(m: usize, levels: &[&[u32]]) -> Address {
        Address::new(m, levels.iter().map(|l| syms(l)).collect()).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        let cap = EnumCap::default();
        assert_eq!(enumerate_addresses(2, 1, 3, cap).unwrap().len(), 8);
        assert_eq!(enumerate_addresses(2, 2, 2, cap).unwrap().len(), 8);
        assert_eq!(enumerate_addresses(1, 3, 4, cap).unwrap().len(), 1);
    }

    #[test]
    fn enumeration_matches_nested_products() {
        // Ω_2 for m = 2, |I| = 2: level 1 in I, level 2 in I × I.
        let mut oracle = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    oracle.push(addr(2, &[&[a], &[b, c]]));
                }
            }
        }
        let got = enumerate_addresses(2, 2, 2, EnumCap::default()).unwrap();
        assert_eq!(got, oracle);
        for (i, a) in got.iter().enumerate() {
            assert_eq!(a.index_in(2), i as u128);
            assert_eq!(&Address::from_index(i as u128, 2, 2, 2).unwrap(), a);
        }
    }

    #[test]
    fn enumeration_cap_reports_count() {
        let err = enumerate_addresses(10, 2, 3, EnumCap(1000)).unwrap_err();
        assert_eq!(
            err,
            GifsError::CapExceeded {
                count: Some(10_000_000),
                cap: 1000
            }
        );
        let err = enumerate_addresses(10, 2, 9, EnumCap(1000)).unwrap_err();
        assert!(matches!(err, GifsError::CapExceeded { count: None, .. }));
    }

    #[test]
    fn subaddress_examples() {
        let a = addr(2, &[&[0], &[1, 0]]);
        assert_eq!(a.subaddress(1).unwrap(), addr(2, &[&[1]]));
        let a = addr(2, &[&[0], &[1, 0], &[1, 1, 0, 1]]);
        assert_eq!(a.subaddress(2).unwrap(), addr(2, &[&[0], &[0, 1]]));
        let a = addr(1, &[&[5], &[6], &[7]]);
        assert_eq!(a.subaddress(1).unwrap(), addr(1, &[&[6], &[7]]));
    }

    #[test]
    fn subaddress_errors() {
        let a = addr(2, &[&[0]]);
        assert!(matches!(
            a.subaddress(1),
            Err(GifsError::DepthTooSmall { depth: 1, .. })
        ));
        let a = addr(2, &[&[0], &[1, 0]]);
        assert!(matches!(
            a.subaddress(3),
            Err(GifsError::PositionOutOfRange { .. })
        ));
        assert!(a.subaddress(0).is_err());
    }

    #[test]
    fn combine_examples() {
        let got = Address::combine(Symbol(0), &[addr(2, &[&[1]]), addr(2, &[&[0]])]).unwrap();
        assert_eq!(got, addr(2, &[&[0], &[1, 0]]));
        let got = Address::combine(Symbol(4), &[addr(1, &[&[5], &[6]])]).unwrap();
        assert_eq!(got, addr(1, &[&[4], &[5], &[6]]));
    }

    #[test]
    fn combine_rejects_mismatch() {
        let a = addr(2, &[&[1]]);
        let b = addr(2, &[&[1], &[0, 0]]);
        assert!(Address::combine(Symbol(0), &[a.clone(), b]).is_err());
        assert!(Address::combine(Symbol(0), &[a]).is_err());
    }

    #[test]
    fn metric_examples() {
        let p = CodeMetricParams::default();
        let a = addr(2, &[&[0], &[1, 0], &[1, 1, 0, 1]]);
        assert_eq!(code_metric(&a, &a, p).unwrap(), 0.0);
        let b = addr(2, &[&[1], &[1, 0], &[1, 1, 0, 1]]);
        assert_eq!(code_metric(&a, &b, p).unwrap(), 0.5);
        let c = addr(2, &[&[1], &[0, 0], &[1, 1, 1, 1]]);
        assert_eq!(code_metric(&a, &c, p).unwrap(), 0.875);
        assert!(code_metric(&a, &a.truncate(2).unwrap(), p).is_err());
    }

    #[test]
    fn metric_params_validated() {
        assert!(CodeMetricParams::new(0.0).is_err());
        assert!(CodeMetricParams::new(1.0).is_err());
        assert!(CodeMetricParams::new(0.3).is_ok());
    }

    #[test]
    fn string_round_trip() {
        let a = addr(2, &[&[0], &[1, 0], &[1, 1, 0, 1]]);
        assert_eq!(a.to_string(), "0/1,0/1,1,0,1");
        assert_eq!(Address::parse("0/1,0/1,1,0,1", 2).unwrap(), a);
        assert!(Address::parse("0/1/1", 2).is_err());
        assert!(Address::parse("0/x", 1).is_err());
    }

    #[test]
    fn streams() {
        let s = AddressStream::parse("(0)", 2).unwrap();
        assert_eq!(s.max_depth(), None);
        assert_eq!(
            s.take(3).unwrap(),
            Address::constant(2, 3, Symbol(0)).unwrap()
        );

        let s = AddressStream::parse("0/1,1...(2)", 2).unwrap();
        assert_eq!(s.take(3).unwrap(), addr(2, &[&[0], &[1, 1], &[2, 2, 2, 2]]));
        assert_eq!(s.to_string(), "0/1,1...(2)");

        let s = AddressStream::parse("(0/1)", 1).unwrap();
        assert_eq!(s.take(4).unwrap(), addr(1, &[&[0], &[1], &[0], &[1]]));

        let s = AddressStream::parse("(0,1)", 2).unwrap();
        assert_eq!(s.take(3).unwrap(), addr(2, &[&[0], &[0, 1], &[0, 1, 0, 1]]));

        let s = AddressStream::parse("3/1,2", 2).unwrap();
        assert_eq!(s.max_depth(), Some(2));
        assert!(s.take(3).is_none());
        assert!(s.validate(3).is_err());
        assert!(AddressStream::parse("0/1...", 2).is_err());
        assert!(AddressStream::parse("()", 2).is_err());
    }
}
