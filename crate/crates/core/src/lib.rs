//! Generalized iterated function systems of order `m`: maps `f_i: X^m -> X`
//! on `X = R^D`, their attractors, the hierarchical code space and the
//! canonical projection from codes onto the attractor.
//!
//! The modules build on each other in this order: [`code_space`] (addresses
//! and their algebra), [`system`] (maps and word evaluation), [`metric_sets`]
//! (finite point sets and Hausdorff distance), [`attractor`] (the fractal
//! operator), [`projection`] (the code-function operator and the canonical
//! projection) and [`diagnostics`] (sampled contraction checks).

pub mod attractor;
pub mod catalog;
pub mod code_space;
pub mod diagnostics;
pub mod error;
pub mod metric_sets;
pub mod projection;
pub mod system;

pub use code_space::{Address, AddressStream, EnumCap, Symbol};
pub use error::{GifsError, Result};
pub use metric_sets::PointSet;
pub use system::{AffineMap, GifsSystem, PointMap, PointMetric};
