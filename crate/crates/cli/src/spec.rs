//! JSON system specifications.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "order": 1,
//!   "point_metric": "euclidean",
//!   "maps": [
//!     { "blocks": [[[0.3333333333333333]]], "offset": [0.0] },
//!     { "blocks": [[[0.3333333333333333]]], "offset": [0.6666666666666666] }
//!   ]
//! }
//! ```
//!
//! A `family` entry adds maps `n = 0..count-1` whose coefficients are either
//! numbers or `{"coef": c, "ratio": r, "shift": s}`, meaning `c * r^(n+s)`.
//! Families are rendered to explicit maps at load time.

use std::path::Path;

use gifs::code_space::CodeMetricParams;
use gifs::diagnostics::{ComparisonFunction, MeirKeelerParams};
use gifs::system::Truncation;
use gifs::{AffineMap, GifsError, GifsSystem, PointMap, PointMetric};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_base() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dimension: usize,
    pub order: usize,
    #[serde(default)]
    pub point_metric: PointMetric,
    #[serde(default = "default_base")]
    pub code_metric_base: f64,
    #[serde(default)]
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meir_keeler: Option<MeirKeelerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// `m` row-major `D x D` matrices.
    pub blocks: Vec<Vec<Vec<f64>>>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Number(f64),
    Geometric {
        coef: f64,
        ratio: f64,
        #[serde(default)]
        shift: f64,
    },
}

impl Coef {
    pub fn at(self, n: usize) -> f64 {
        match self {
            Coef::Number(v) => v,
            Coef::Geometric { coef, ratio, shift } => {
                let e = n as f64 + shift;
                if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
                    coef * ratio.powi(e as i32)
                } else {
                    coef * ratio.powf(e)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub count: usize,
    pub blocks: Vec<Vec<Vec<Coef>>>,
    pub offset: Vec<Coef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeirKeelerSpec {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub delta_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_factor: Option<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiSpec {
    Linear(f64),
    /// `[t, φ(t)]` breakpoints starting at `[0, 0]`.
    Tabulated(Vec<(f64, f64)>),
}

fn spec_err(path: impl Into<String>, reason: impl Into<String>) -> GifsError {
    GifsError::Spec {
        path: path.into(),
        reason: reason.into(),
    }
}

fn check_vector(path: &str, v: &[f64], dim: usize) -> Result<(), GifsError> {
    if v.len() != dim {
        return Err(spec_err(
            path,
            format!("expected {dim} entries, found {}", v.len()),
        ));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(spec_err(format!("{path}[{i}]"), "value is not finite"));
    }
    Ok(())
}

fn check_map(
    path: &str,
    blocks: &[Vec<Vec<f64>>],
    offset: &[f64],
    m: usize,
    d: usize,
) -> Result<(), GifsError> {
    if blocks.len() != m {
        return Err(spec_err(
            format!("{path}.blocks"),
            format!("expected {m} blocks for order {m}, found {}", blocks.len()),
        ));
    }
    for (j, block) in blocks.iter().enumerate() {
        let bp = format!("{path}.blocks[{j}]");
        if block.len() != d {
            return Err(spec_err(
                &bp,
                format!("expected {d} rows, found {}", block.len()),
            ));
        }
        for (r, row) in block.iter().enumerate() {
            check_vector(&format!("{bp}[{r}]"), row, d)?;
        }
    }
    check_vector(&format!("{path}.offset"), offset, d)
}

impl SystemSpec {
    pub fn parse(text: &str) -> Result<SystemSpec, GifsError> {
        serde_json::from_str(text).map_err(|e| GifsError::SpecParse {
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("specs serialize");
        s.push('\n');
        s
    }

    /// The `n`-th family member as explicit coefficients.
    fn family_map(family: &FamilySpec, n: usize) -> MapSpec {
        MapSpec {
            blocks: family
                .blocks
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|row| row.iter().map(|c| c.at(n)).collect())
                        .collect()
                })
                .collect(),
            offset: family.offset.iter().map(|c| c.at(n)).collect(),
        }
    }

    /// Same spec with the family rendered to explicit maps.
    pub fn normalized(&self) -> SystemSpec {
        let mut out = self.clone();
        if let Some(f) = out.family.take() {
            out.maps
                .extend((0..f.count).map(|n| SystemSpec::family_map(&f, n)));
        }
        out
    }

    /// Same spec with the family cut after `count` members.
    pub fn with_family_count(&self, count: usize) -> Option<SystemSpec> {
        let mut out = self.clone();
        out.family.as_mut()?.count = count;
        Some(out)
    }

    pub fn to_system(&self) -> Result<GifsSystem, GifsError> {
        let (m, d) = (self.order, self.dimension);
        if d == 0 {
            return Err(spec_err("dimension", "must be at least 1"));
        }
        if m == 0 {
            return Err(spec_err("order", "must be at least 1"));
        }
        for (i, map) in self.maps.iter().enumerate() {
            check_map(&format!("maps[{i}]"), &map.blocks, &map.offset, m, d)?;
        }
        let mut maps = self.maps.clone();
        if let Some(f) = &self.family {
            if f.count == 0 {
                return Err(spec_err("family.count", "must be at least 1"));
            }
            for n in 0..f.count {
                let rendered = SystemSpec::family_map(f, n);
                check_map(
                    &format!("family[n={n}]"),
                    &rendered.blocks,
                    &rendered.offset,
                    m,
                    d,
                )?;
                maps.push(rendered);
            }
        }
        if maps.is_empty() {
            return Err(spec_err("maps", "the system needs at least one map"));
        }
        let affine = maps
            .into_iter()
            .enumerate()
            .map(|(i, map)| {
                AffineMap::new(map.blocks, map.offset)
                    .map_err(|e| spec_err(format!("maps[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let params = CodeMetricParams::new(self.code_metric_base)
            .map_err(|e| spec_err("code_metric_base", e.to_string()))?;
        let mut system = GifsSystem::new(affine, self.point_metric)?.with_code_params(params);
        if let Some(f) = &self.family {
            system = system.with_truncation(Truncation {
                family_name: f.name.clone(),
                truncated_at: f.count,
            });
        }
        Ok(system)
    }

    /// Explicit-map spec of a system.
    pub fn from_system(system: &GifsSystem) -> SystemSpec {
        SystemSpec {
            dimension: system.dim(),
            order: system.arity(),
            point_metric: system.point_metric(),
            code_metric_base: system.code_params().base(),
            maps: system
                .maps()
                .iter()
                .map(|f| MapSpec {
                    blocks: f.blocks(),
                    offset: f.offset().to_vec(),
                })
                .collect(),
            family: None,
            meir_keeler: None,
            phi: None,
        }
    }

    pub fn meir_keeler_params(&self) -> Result<Option<MeirKeelerParams>, GifsError> {
        self.meir_keeler
            .as_ref()
            .map(|mk| {
                MeirKeelerParams::new(mk.epsilons.clone(), mk.delta_factor, mk.lambda_factor)
                    .map_err(|e| spec_err("meir_keeler", e.to_string()))
            })
            .transpose()
    }

    pub fn comparison_function(&self) -> Result<Option<ComparisonFunction>, GifsError> {
        self.phi
            .as_ref()
            .map(|phi| {
                match phi {
                    PhiSpec::Linear(l) => ComparisonFunction::linear(*l),
                    PhiSpec::Tabulated(steps) => ComparisonFunction::tabulated(steps.clone()),
                }
                .map_err(|e| spec_err("phi", e.to_string()))
            })
            .transpose()
    }
}

/// Specs shipped with the binary, addressable by file name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("gifs5.json", include_str!("../specs/gifs5.json")),
    ("cantor.json", include_str!("../specs/cantor.json")),
    ("sierpinski.json", include_str!("../specs/sierpinski.json")),
    ("constant.json", include_str!("../specs/constant.json")),
    ("single.json", include_str!("../specs/single.json")),
    ("expanding.json", include_str!("../specs/expanding.json")),
];

/// A loaded spec together with its validated system.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub spec: SystemSpec,
    pub system: GifsSystem,
}

impl Loaded {
    pub fn from_text(text: &str) -> Result<Loaded, GifsError> {
        let spec = SystemSpec::parse(text)?;
        let system = spec.to_system()?;
        Ok(Loaded { spec, system })
    }

    /// The system with one more family member, when the spec has a family.
    pub fn extended(&self) -> Result<Option<GifsSystem>, GifsError> {
        match &self.spec.family {
            Some(f) => Ok(Some(
                self.spec
                    .with_family_count(f.count + 1)
                    .expect("has family")
                    .to_system()?,
            )),
            None => Ok(None),
        }
    }
}

/// Reads a spec file; a bare bundled name (e.g. `gifs5.json`) that does not
/// exist on disk resolves to the bundled copy.
pub fn load_spec(path: &Path) -> Result<Loaded, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let name = path.to_str().unwrap_or_default();
            match BUNDLED.iter().find(|(n, _)| *n == name) {
                Some((_, text)) => text.to_string(),
                None => return Err(CliError::Io(path.display().to_string(), e)),
            }
        }
    };
    Ok(Loaded::from_text(&text)?)
}

/// Analytic `sup lip` of a spec's maps, for reports.
pub fn sup_lipschitz(system: &GifsSystem) -> Option<f64> {
    system
        .maps()
        .iter()
        .map(|f| f.analytic_lipschitz(system.point_metric()))
        .try_fold(0.0f64, |a, l| l.map(|l| a.max(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gifs::catalog;

    fn bundled(name: &str) -> Loaded {
        let text = BUNDLED.iter().find(|(n, _)| *n == name).unwrap().1;
        Loaded::from_text(text).unwrap()
    }

    #[test]
    fn gifs5_renders_the_dyadic_family() {
        let l = bundled("gifs5.json");
        assert_eq!(l.system.map_count(), 10);
        assert_eq!(l.system.arity(), 2);
        assert_eq!(l.system.dim(), 1);
        assert_eq!(l.system.maps(), catalog::dyadic_average_family(10).maps());
        assert_eq!(l.system.truncation().unwrap().truncated_at, 10);
        assert_eq!(l.extended().unwrap().unwrap().map_count(), 11);
        let mk = l.spec.meir_keeler_params().unwrap().unwrap();
        assert!((mk.delta_factor - 1.0 / 3.0).abs() < 1e-15);
        assert!((mk.lambda_factor.unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn cantor_matches_hand_written_maps() {
        let l = bundled("cantor.json");
        assert_eq!(l.system.arity(), 1);
        assert_eq!(l.system.maps(), catalog::cantor().maps());
        assert!(l.extended().unwrap().is_none());
    }

    #[test]
    fn every_bundled_spec_loads() {
        for (name, _) in BUNDLED {
            bundled(name);
        }
    }

    #[test]
    fn malformed_row_names_the_map() {
        let text = r#"{"dimension": 2, "order": 1, "maps": [
            {"blocks": [[[0.5, 0], [0, 0.5]]], "offset": [0, 0]},
            {"blocks": [[[0.5, 0], [0.5]]], "offset": [0, 0]}
        ]}"#;
        match Loaded::from_text(text) {
            Err(GifsError::Spec { path, .. }) => assert_eq!(path, "maps[1].blocks[0][1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_location() {
        let text = "{\n  \"dimension\": 1,\n  \"order\": 1,\n  \"maps\": [}\n";
        match SystemSpec::parse(text) {
            Err(GifsError::SpecParse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            SystemSpec::parse(r#"{"dimension": 1, "order": 1, "colour": 3}"#),
            Err(GifsError::SpecParse { .. })
        ));
    }

    #[test]
    fn round_trip_after_normalization() {
        for (name, _) in BUNDLED {
            let l = bundled(name);
            let normal = l.spec.normalized();
            let reparsed = SystemSpec::parse(&normal.to_json()).unwrap();
            assert_eq!(reparsed, normal);
            let again = SystemSpec::from_system(&l.system);
            assert_eq!(again.maps, normal.maps);
            assert_eq!(again.to_system().unwrap().maps(), l.system.maps());
        }
    }

    #[test]
    fn geometric_coefficients() {
        let c = Coef::Geometric {
            coef: 3.0,
            ratio: 0.5,
            shift: 1.0,
        };
        assert_eq!(c.at(0), 1.5);
        assert_eq!(c.at(2), 0.375);
        assert_eq!(Coef::Number(2.0).at(7), 2.0);
    }
}
