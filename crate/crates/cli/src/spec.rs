//! JSON sheaf specifications.
//!
//! ```json
//! {
//!   "entities": ["a", "b"],
//!   "subbase": [["a", "b"], ["b"]],
//!   "stalks": {
//!     "a+b": {"factors": [{"kind": "euclidean", "dim": 2}, {"kind": "time", "weight": 500}]},
//!     "b": {"kind": "euclidean", "dim": 1}
//!   },
//!   "restrictions": [{"from": "a+b", "to": "b", "kind": "projection", "indices": [0]}],
//!   "weights": {"time": 500}
//! }
//! ```
//!
//! Open-set keys are entity names in sorted order joined by `+`. `weights` gives a default
//! weight per factor kind for factors that do not set their own.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sheaf_core::linalg::Matrix;
use sheaf_core::sheaf::{Block, Catalog, MapBody, Sheaf, SheafBuilder};
use sheaf_core::spaces::{Factor, FactorKind, ValueSpace};
use sheaf_core::topology::{generate_topology, EntityUniverse, Topology};

use crate::error::{CliError, CliResult};

/// A whole sheaf declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheafSpec {
    /// Entity names.
    pub entities: Vec<String>,
    /// Sensor domains generating the topology.
    pub subbase: Vec<Vec<String>>,
    /// Declared stalks by open-set key.
    pub stalks: BTreeMap<String, SpaceSpec>,
    /// Declared restrictions.
    #[serde(default)]
    pub restrictions: Vec<RestrictionSpec>,
    /// Default weight per factor kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<String, f64>>,
}

/// A value space: one factor or a product of factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    /// Product of factors.
    Product {
        /// Factors in coordinate order.
        factors: Vec<FactorSpec>,
    },
    /// A single factor.
    Single(FactorSpec),
}

/// One factor with optional weight and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    /// The kind and its parameters.
    #[serde(flatten)]
    pub kind: KindSpec,
    /// Metric weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Per-coordinate sampling and binning bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(f64, f64)>>,
}

/// Factor kinds as written in specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KindSpec {
    /// `ℝⁿ`.
    Euclidean {
        /// Dimension.
        dim: usize,
    },
    /// Angle in degrees.
    Circle,
    /// Longitude and latitude in degrees.
    Geo2d,
    /// Longitude, latitude in degrees and altitude in km.
    Geo3d,
    /// Time in hours.
    Time,
    /// Finite label set.
    Discrete {
        /// Labels in index order.
        labels: Vec<String>,
    },
    /// Probability simplex.
    Simplex {
        /// Number of bins.
        bins: usize,
    },
}

/// A restriction from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionSpec {
    /// Larger open.
    pub from: String,
    /// Smaller open.
    pub to: String,
    /// The map.
    #[serde(flatten)]
    pub map: MapSpec,
}

/// Map bodies as written in specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// Unchanged coordinates.
    Identity,
    /// Picks coordinates.
    Projection {
        /// Input indices in output order.
        indices: Vec<usize>,
    },
    /// Matrix product; `matrix` is a list of rows.
    Linear {
        /// Rows.
        matrix: Vec<Vec<f64>>,
        /// Column count, needed only when `matrix` has no rows.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cols: Option<usize>,
    },
    /// `matrix * x + offset`.
    Affine {
        /// Rows.
        matrix: Vec<Vec<f64>>,
        /// Offset.
        offset: Vec<f64>,
    },
    /// A catalog map.
    Builtin {
        /// Catalog name.
        name: String,
        /// Parameter values.
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    /// Maps applied left to right.
    Composite {
        /// Steps.
        steps: Vec<MapSpec>,
    },
    /// Maps applied to input slices, outputs concatenated.
    Blocks {
        /// Blocks in output order.
        blocks: Vec<BlockSpec>,
    },
}

/// One block of a [`MapSpec::Blocks`] map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// First input coordinate.
    pub start: usize,
    /// Number of input coordinates.
    pub len: usize,
    /// Map applied to the slice.
    pub map: MapSpec,
}

fn matrix_from_rows(rows: &[Vec<f64>], cols: Option<usize>, context: &str) -> CliResult<Matrix> {
    let width = match (rows.first(), cols) {
        (Some(r), _) => r.len(),
        (None, Some(c)) => c,
        (None, None) => return Err(CliError::invalid(context, "an empty matrix needs `cols`")),
    };
    if rows.iter().any(|r| r.len() != width) {
        return Err(CliError::invalid(context, "matrix rows have different lengths"));
    }
    Ok(Matrix::from_rows(rows, width))
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

impl MapSpec {
    fn to_body(&self, catalog: &Catalog, context: &str) -> CliResult<MapBody> {
        Ok(match self {
            MapSpec::Identity => MapBody::Identity,
            MapSpec::Projection { indices } => MapBody::Projection(indices.clone()),
            MapSpec::Linear { matrix, cols } => MapBody::Linear(matrix_from_rows(matrix, *cols, context)?),
            MapSpec::Affine { matrix, offset } => {
                let m = matrix_from_rows(matrix, None, context)?;
                if m.rows() != offset.len() {
                    return Err(CliError::invalid(context, "affine offset length differs from the row count"));
                }
                MapBody::Affine { matrix: m, offset: offset.clone() }
            }
            MapSpec::Builtin { name, params } => MapBody::Builtin(catalog.instantiate(name, params.clone())?),
            MapSpec::Composite { steps } => {
                MapBody::Composite(steps.iter().map(|s| s.to_body(catalog, context)).collect::<CliResult<_>>()?)
            }
            MapSpec::Blocks { blocks } => MapBody::Blocks(
                blocks
                    .iter()
                    .map(|b| Ok(Block { start: b.start, len: b.len, map: b.map.to_body(catalog, context)? }))
                    .collect::<CliResult<_>>()?,
            ),
        })
    }

    /// Spec form of a map body.
    pub fn from_body(body: &MapBody) -> Self {
        match body {
            MapBody::Identity => MapSpec::Identity,
            MapBody::Projection(i) => MapSpec::Projection { indices: i.clone() },
            MapBody::Linear(m) => {
                MapSpec::Linear { matrix: matrix_rows(m), cols: if m.rows() == 0 { Some(m.cols()) } else { None } }
            }
            MapBody::Affine { matrix, offset } => {
                MapSpec::Affine { matrix: matrix_rows(matrix), offset: offset.clone() }
            }
            MapBody::Builtin(b) => MapSpec::Builtin { name: b.name().to_string(), params: b.params().clone() },
            MapBody::Composite(steps) => MapSpec::Composite { steps: steps.iter().map(MapSpec::from_body).collect() },
            MapBody::Blocks(blocks) => MapSpec::Blocks {
                blocks: blocks
                    .iter()
                    .map(|b| BlockSpec { start: b.start, len: b.len, map: MapSpec::from_body(&b.map) })
                    .collect(),
            },
        }
    }
}

impl FactorSpec {
    fn to_factor(&self, weights: Option<&BTreeMap<String, f64>>) -> Factor {
        let kind = match &self.kind {
            KindSpec::Euclidean { dim } => FactorKind::Euclidean(*dim),
            KindSpec::Circle => FactorKind::Circle,
            KindSpec::Geo2d => FactorKind::GeoPosition2D,
            KindSpec::Geo3d => FactorKind::GeoPosition3D,
            KindSpec::Time => FactorKind::Time,
            KindSpec::Discrete { labels } => FactorKind::Discrete(labels.clone()),
            KindSpec::Simplex { bins } => FactorKind::Simplex(*bins),
        };
        let default = weights.and_then(|w| w.get(kind.name()).copied()).unwrap_or(1.0);
        Factor { weight: self.weight.unwrap_or(default), bounds: self.bounds.clone(), kind }
    }

    fn from_factor(f: &Factor) -> Self {
        let kind = match &f.kind {
            FactorKind::Euclidean(n) => KindSpec::Euclidean { dim: *n },
            FactorKind::Circle => KindSpec::Circle,
            FactorKind::GeoPosition2D => KindSpec::Geo2d,
            FactorKind::GeoPosition3D => KindSpec::Geo3d,
            FactorKind::Time => KindSpec::Time,
            FactorKind::Discrete(l) => KindSpec::Discrete { labels: l.clone() },
            FactorKind::Simplex(n) => KindSpec::Simplex { bins: *n },
        };
        FactorSpec { kind, weight: Some(f.weight), bounds: f.bounds.clone() }
    }
}

impl SpaceSpec {
    fn to_space(&self, weights: Option<&BTreeMap<String, f64>>, context: &str) -> CliResult<ValueSpace> {
        let factors: Vec<Factor> = match self {
            SpaceSpec::Single(f) => vec![f.to_factor(weights)],
            SpaceSpec::Product { factors } => factors.iter().map(|f| f.to_factor(weights)).collect(),
        };
        for f in &factors {
            if !(f.weight.is_finite() && f.weight > 0.0) {
                return Err(CliError::invalid(context, format!("weight {} is not positive", f.weight)));
            }
            if let Some(b) = &f.bounds {
                if b.len() != f.kind.dim()
                    || b.iter().any(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less))
                {
                    return Err(CliError::invalid(
                        context,
                        "bounds need one increasing (low, high) pair per coordinate",
                    ));
                }
            }
        }
        Ok(ValueSpace::from_factors(factors))
    }

    fn from_space(space: &ValueSpace) -> Self {
        match space.factors() {
            [f] => SpaceSpec::Single(FactorSpec::from_factor(f)),
            fs => SpaceSpec::Product { factors: fs.iter().map(FactorSpec::from_factor).collect() },
        }
    }
}

fn names_of(topology: &Topology, set: sheaf_core::topology::EntitySet) -> Vec<String> {
    let names = topology.universe().names();
    set.iter().map(|i| names[i].clone()).collect()
}

impl SheafSpec {
    /// Parses a spec from JSON text; `origin` names the source in errors.
    pub fn from_json(text: &str, origin: &Path) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|source| CliError::Json { path: origin.to_path_buf(), source })
    }

    /// Reads a spec file.
    pub fn read(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("specs always serialize");
        s.push('\n');
        s
    }

    /// Builds the sheaf, resolving builtins against `catalog`.
    pub fn build_with(&self, catalog: &Catalog) -> CliResult<Sheaf> {
        let universe = EntityUniverse::new(self.entities.iter().map(String::as_str))?;
        let topology = generate_topology(universe, &self.subbase)?;
        let weights = self.weights.as_ref();
        let mut b = SheafBuilder::new(topology);
        for (key, space) in &self.stalks {
            let open = b.topology().open_by_key(key)?;
            b.stalk(open, space.to_space(weights, &format!("stalk `{key}`"))?);
        }
        for r in &self.restrictions {
            let context = format!("restriction `{}` -> `{}`", r.from, r.to);
            let from = b.topology().open_by_key(&r.from)?;
            let to = b.topology().open_by_key(&r.to)?;
            let body = r.map.to_body(catalog, &context)?;
            b.restriction(from, to, body);
        }
        Ok(b.build()?)
    }

    /// Builds the sheaf with the standard catalog.
    pub fn build(&self) -> CliResult<Sheaf> {
        self.build_with(&Catalog::standard())
    }

    /// Spec declaring exactly the stalks and restrictions declared in `sheaf`.
    pub fn from_sheaf(sheaf: &Sheaf) -> Self {
        let t = sheaf.topology();
        let stalks = t
            .nonempty_ids()
            .filter(|&id| sheaf.is_declared(id))
            .map(|id| (t.key(id), SpaceSpec::from_space(sheaf.stalk(id))))
            .collect();
        let restrictions = sheaf
            .declared_maps()
            .iter()
            .map(|(&(from, to), body)| RestrictionSpec {
                from: t.key(from),
                to: t.key(to),
                map: MapSpec::from_body(body),
            })
            .collect();
        SheafSpec {
            entities: t.universe().names().to_vec(),
            subbase: t.subbase().iter().map(|s| names_of(t, *s)).collect(),
            stalks,
            restrictions,
            weights: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sheaf_core::scenarios::{build_obstacle_sheaves, build_sar_sheaf, ObstacleParams, SarParameters};

    #[test]
    fn parses_the_documented_example() {
        let text = r#"{
          "entities": ["a", "b"],
          "subbase": [["a", "b"], ["b"]],
          "stalks": {
            "a+b": {"factors": [{"kind": "euclidean", "dim": 2}, {"kind": "time", "weight": 500}]},
            "b": {"kind": "euclidean", "dim": 1}
          },
          "restrictions": [{"from": "a+b", "to": "b", "kind": "projection", "indices": [0]}],
          "weights": {"time": 500}
        }"#;
        let spec = SheafSpec::from_json(text, Path::new("inline")).unwrap();
        let s = spec.build().unwrap();
        assert_eq!(s.stalk(s.topology().whole()).dim(), 3);
    }

    #[test]
    fn sheaves_survive_a_round_trip() {
        let (m, p) = build_obstacle_sheaves(ObstacleParams::default()).unwrap();
        let sar = build_sar_sheaf(&SarParameters::default()).unwrap();
        for s in [m, p, sar] {
            let spec = SheafSpec::from_sheaf(&s);
            let again = SheafSpec::from_json(&spec.to_json(), Path::new("inline")).unwrap();
            assert_eq!(again, spec);
            let rebuilt = again.build().unwrap();
            assert_eq!(rebuilt.declared_maps(), s.declared_maps());
            for id in s.topology().ids() {
                assert_eq!(rebuilt.stalk(id), s.stalk(id));
            }
        }
    }

    #[test]
    fn unknown_builtins_and_keys_are_reported() {
        let text = r#"{"entities": ["a"], "subbase": [["a"]], "stalks": {"b": {"kind": "circle"}}}"#;
        let err = SheafSpec::from_json(text, Path::new("x")).unwrap().build().unwrap_err();
        assert!(err.to_string().contains('b'), "{err}");
        let text = r#"{"entities": ["a", "b"], "subbase": [["a", "b"], ["a"]],
            "stalks": {"a+b": {"kind": "geo2d"}, "a": {"kind": "circle"}},
            "restrictions": [{"from": "a+b", "to": "a", "kind": "builtin", "name": "nope"}]}"#;
        let err = SheafSpec::from_json(text, Path::new("x")).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
