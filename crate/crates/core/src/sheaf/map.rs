//! Restriction map bodies and the catalog of named nonlinear builtins.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::geo;
use crate::linalg::Matrix;
use crate::topology::OpenId;
use crate::{Error, Result};

/// Signature of a builtin map: resolved parameters (in declaration order) and input.
pub type BuiltinFn = fn(params: &[f64], input: &[f64]) -> Vec<f64>;

/// A parameter of a builtin, with an optional default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    /// Parameter name.
    pub name: &'static str,
    /// Value used when the parameter is omitted.
    pub default: Option<f64>,
}

/// Definition of a named nonlinear map.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinDef {
    /// Registered name.
    pub name: &'static str,
    /// Parameters in the order passed to `eval`.
    pub params: &'static [ParamSpec],
    /// Input dimension.
    pub input_dim: usize,
    /// Output dimension.
    pub output_dim: usize,
    /// The map itself.
    pub eval: BuiltinFn,
}

const EARTH: ParamSpec = ParamSpec { name: "earth_radius_km", default: Some(geo::EARTH_RADIUS_KM) };
const REF_LON: ParamSpec = ParamSpec { name: "ref_lon", default: None };
const REF_LAT: ParamSpec = ParamSpec { name: "ref_lat", default: None };

fn eval_dead_reckon(p: &[f64], s: &[f64]) -> Vec<f64> {
    let (lon, lat) = geo::dead_reckon(s[0], s[1], s[3], s[4], s[5], p[0]);
    vec![lon, lat]
}

fn eval_track_bearing(p: &[f64], s: &[f64]) -> Vec<f64> {
    let (lon, lat) = geo::dead_reckon(s[0], s[1], s[3], s[4], s[5], p[2]);
    vec![geo::bearing_deg(p[0], p[1], lon, lat), s[5]]
}

fn eval_point_bearing(p: &[f64], s: &[f64]) -> Vec<f64> {
    vec![geo::bearing_deg(p[0], p[1], s[0], s[1])]
}

/// Dead reckoning: `(lon, lat, alt_km, v_east, v_north, t)` to the `(lon, lat)` reached after
/// `t` hours at the given velocity (km/h).
pub const DEAD_RECKON: BuiltinDef =
    BuiltinDef { name: "dead_reckon", params: &[EARTH], input_dim: 6, output_dim: 2, eval: eval_dead_reckon };

/// Bearing from a fixed reference to the dead-reckoned position, paired with the time:
/// `(lon, lat, alt_km, v_east, v_north, t)` to `(bearing_deg, t)`.
pub const TRACK_BEARING: BuiltinDef = BuiltinDef {
    name: "track_bearing",
    params: &[REF_LON, REF_LAT, EARTH],
    input_dim: 6,
    output_dim: 2,
    eval: eval_track_bearing,
};

/// Bearing from a fixed reference to a surface position: `(lon, lat)` to `bearing_deg`.
pub const POINT_BEARING: BuiltinDef = BuiltinDef {
    name: "point_bearing",
    params: &[REF_LON, REF_LAT],
    input_dim: 2,
    output_dim: 1,
    eval: eval_point_bearing,
};

/// Registry of builtin maps, looked up by name.
#[derive(Debug, Clone)]
pub struct Catalog {
    defs: Vec<BuiltinDef>,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::standard()
    }
}

impl Catalog {
    /// Empty catalog.
    pub fn empty() -> Self {
        Self { defs: Vec::new() }
    }

    /// Catalog with `dead_reckon`, `track_bearing` and `point_bearing`.
    pub fn standard() -> Self {
        Self { defs: vec![DEAD_RECKON, TRACK_BEARING, POINT_BEARING] }
    }

    /// Adds or replaces a definition.
    pub fn register(&mut self, def: BuiltinDef) {
        self.defs.retain(|d| d.name != def.name);
        self.defs.push(def);
    }

    /// Looks a definition up.
    pub fn get(&self, name: &str) -> Option<&BuiltinDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    /// Resolves a builtin with user parameters.
    pub fn instantiate(&self, name: &str, params: BTreeMap<String, f64>) -> Result<Builtin> {
        let def = *self.get(name).ok_or_else(|| Error::UnknownBuiltin(name.to_string()))?;
        Builtin::new(def, params)
    }
}

/// A builtin definition bound to parameter values.
#[derive(Debug, Clone)]
pub struct Builtin {
    def: BuiltinDef,
    params: BTreeMap<String, f64>,
    resolved: Vec<f64>,
}

impl Builtin {
    /// Binds parameters; unknown names are rejected and missing ones fall back to defaults.
    pub fn new(def: BuiltinDef, params: BTreeMap<String, f64>) -> Result<Self> {
        if let Some(extra) = params.keys().find(|k| !def.params.iter().any(|p| p.name == k.as_str())) {
            return Err(Error::InvalidOptions(format!("builtin `{}` has no parameter `{extra}`", def.name)));
        }
        let resolved =
            def.params
                .iter()
                .map(|p| {
                    params.get(p.name).copied().or(p.default).ok_or_else(|| Error::MissingParameter {
                        name: def.name.to_string(),
                        param: p.name.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        Ok(Self { def, params, resolved })
    }

    /// Registered name.
    pub fn name(&self) -> &'static str {
        self.def.name
    }

    /// The definition.
    pub fn def(&self) -> &BuiltinDef {
        &self.def
    }

    /// Parameters as supplied (defaults not included).
    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }
}

impl PartialEq for Builtin {
    fn eq(&self, other: &Self) -> bool {
        self.def.name == other.def.name && self.resolved == other.resolved
    }
}

/// A contiguous input slice fed to an inner map, used for maps between product stalks.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// First input coordinate read by the block.
    pub start: usize,
    /// Number of input coordinates read by the block.
    pub len: usize,
    /// Map applied to the slice.
    pub map: MapBody,
}

/// What a restriction map does to coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum MapBody {
    /// Returns the input unchanged.
    Identity,
    /// Picks the listed input coordinates, in order.
    Projection(Vec<usize>),
    /// Multiplies by a matrix.
    Linear(Matrix),
    /// `matrix * x + offset`.
    Affine {
        /// Linear part.
        matrix: Matrix,
        /// Offset vector.
        offset: Vec<f64>,
    },
    /// Named nonlinear map from a [`Catalog`].
    Builtin(Builtin),
    /// Applies the listed maps left to right.
    Composite(Vec<MapBody>),
    /// Applies each block to its input slice and concatenates the outputs.
    Blocks(Vec<Block>),
}

impl MapBody {
    /// Applies the map.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MapBody::Identity => x.to_vec(),
            MapBody::Projection(idx) => idx.iter().map(|&i| x[i]).collect(),
            MapBody::Linear(m) => m.mul_vec(x),
            MapBody::Affine { matrix, offset } => {
                let mut y = matrix.mul_vec(x);
                for (v, o) in y.iter_mut().zip(offset) {
                    *v += o;
                }
                y
            }
            MapBody::Builtin(b) => (b.def.eval)(&b.resolved, x),
            MapBody::Composite(parts) => {
                let mut cur = x.to_vec();
                for p in parts {
                    cur = p.apply(&cur);
                }
                cur
            }
            MapBody::Blocks(blocks) => {
                let mut out = Vec::new();
                for b in blocks {
                    out.extend(b.map.apply(&x[b.start..b.start + b.len]));
                }
                out
            }
        }
    }

    /// Output dimension for a given input dimension, or an error when the shapes do not fit.
    pub fn output_dim(&self, input_dim: usize) -> Result<usize> {
        let mismatch = |what: String| Err(Error::SpaceMismatch(what));
        match self {
            MapBody::Identity => Ok(input_dim),
            MapBody::Projection(idx) => match idx.iter().find(|&&i| i >= input_dim) {
                Some(i) => mismatch(format!("projection index {i} out of range for dimension {input_dim}")),
                None => Ok(idx.len()),
            },
            MapBody::Linear(m) => {
                if m.cols() == input_dim {
                    Ok(m.rows())
                } else {
                    mismatch(format!("matrix has {} columns, input has dimension {input_dim}", m.cols()))
                }
            }
            MapBody::Affine { matrix, offset } => {
                if matrix.cols() != input_dim {
                    mismatch(format!("matrix has {} columns, input has dimension {input_dim}", matrix.cols()))
                } else if offset.len() != matrix.rows() {
                    mismatch(format!("offset has {} entries, matrix has {} rows", offset.len(), matrix.rows()))
                } else {
                    Ok(matrix.rows())
                }
            }
            MapBody::Builtin(b) => {
                if b.def.input_dim == input_dim {
                    Ok(b.def.output_dim)
                } else {
                    mismatch(format!(
                        "builtin `{}` takes {} coordinates, input has dimension {input_dim}",
                        b.def.name, b.def.input_dim
                    ))
                }
            }
            MapBody::Composite(parts) => parts.iter().try_fold(input_dim, |d, p| p.output_dim(d)),
            MapBody::Blocks(blocks) => {
                let mut total = 0;
                for b in blocks {
                    if b.start + b.len > input_dim {
                        return mismatch(format!(
                            "block {}..{} exceeds dimension {input_dim}",
                            b.start,
                            b.start + b.len
                        ));
                    }
                    total += b.map.output_dim(b.len)?;
                }
                Ok(total)
            }
        }
    }

    /// True when the map is linear (affine maps count only with a zero offset).
    pub fn is_linear(&self) -> bool {
        match self {
            MapBody::Identity | MapBody::Projection(_) | MapBody::Linear(_) => true,
            MapBody::Affine { offset, .. } => offset.iter().all(|o| *o == 0.0),
            MapBody::Builtin(_) => false,
            MapBody::Composite(parts) => parts.iter().all(MapBody::is_linear),
            MapBody::Blocks(blocks) => blocks.iter().all(|b| b.map.is_linear()),
        }
    }

    /// Matrix of a linear map, obtained by applying it to the standard basis.
    pub fn to_matrix(&self, input_dim: usize) -> Result<Matrix> {
        if !self.is_linear() {
            return Err(Error::NonlinearSheaf);
        }
        let out = self.output_dim(input_dim)?;
        let mut m = Matrix::zeros(out, input_dim);
        let mut e = vec![0.0; input_dim];
        for j in 0..input_dim {
            e[j] = 1.0;
            for (i, v) in self.apply(&e).into_iter().enumerate() {
                m[(i, j)] = v;
            }
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Sequential composition `self` then `next`, flattening nested composites and
    /// dropping identities.
    pub fn then(self, next: MapBody) -> MapBody {
        let mut parts = Vec::new();
        for m in [self, next] {
            match m {
                MapBody::Identity => {}
                MapBody::Composite(inner) => parts.extend(inner),
                other => parts.push(other),
            }
        }
        match parts.len() {
            0 => MapBody::Identity,
            1 => parts.pop().expect("one part"),
            _ => MapBody::Composite(parts),
        }
    }
}

/// A restriction map between two opens.
#[derive(Debug, Clone)]
pub struct RestrictionMap {
    /// Larger open.
    pub from: OpenId,
    /// Smaller open.
    pub to: OpenId,
    /// Coordinate transformation.
    pub body: MapBody,
    pub(crate) circular_outputs: Vec<usize>,
}

impl RestrictionMap {
    /// Applies the map and wraps circular output coordinates into `[0, 360)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.body.apply(x);
        for &i in &self.circular_outputs {
            y[i] = geo::normalize_degrees(y[i]);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_and_composite() {
        let p = MapBody::Projection(vec![2, 0]);
        assert_eq!(p.apply(&[1.0, 2.0, 3.0]), vec![3.0, 1.0]);
        assert_eq!(p.output_dim(3).unwrap(), 2);
        assert!(p.output_dim(2).is_err());
        let c = p.clone().then(MapBody::Linear(Matrix::from_rows(&[[1.0, 1.0]], 2)));
        assert_eq!(c.apply(&[1.0, 2.0, 3.0]), vec![4.0]);
        assert_eq!(c.to_matrix(3).unwrap(), Matrix::from_rows(&[[1.0, 0.0, 1.0]], 3));
    }

    #[test]
    fn identity_composition_collapses() {
        assert_eq!(MapBody::Identity.then(MapBody::Identity), MapBody::Identity);
        assert_eq!(MapBody::Identity.then(MapBody::Projection(vec![0])), MapBody::Projection(vec![0]));
    }

    #[test]
    fn blocks_concatenate() {
        let b = MapBody::Blocks(vec![
            Block { start: 0, len: 2, map: MapBody::Projection(vec![1]) },
            Block { start: 2, len: 1, map: MapBody::Linear(Matrix::from_rows(&[[2.0]], 1)) },
        ]);
        assert_eq!(b.apply(&[5.0, 6.0, 7.0]), vec![6.0, 14.0]);
        assert_eq!(b.output_dim(3).unwrap(), 2);
        assert!(b.is_linear());
    }

    #[test]
    fn affine_with_offset_is_not_linear() {
        let a = MapBody::Affine { matrix: Matrix::identity(1), offset: vec![1.0] };
        assert!(!a.is_linear());
        assert_eq!(a.apply(&[1.0]), vec![2.0]);
        assert_eq!(a.to_matrix(1), Err(Error::NonlinearSheaf));
    }

    #[test]
    fn catalog_resolves_parameters() {
        let cat = Catalog::standard();
        assert!(matches!(cat.instantiate("nope", BTreeMap::new()), Err(Error::UnknownBuiltin(_))));
        let err = cat.instantiate("point_bearing", BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::MissingParameter { .. }));
        let mut params = BTreeMap::new();
        params.insert("ref_lon".to_string(), 0.0);
        params.insert("ref_lat".to_string(), 0.0);
        let b = cat.instantiate("point_bearing", params).unwrap();
        let m = MapBody::Builtin(b);
        assert!((m.apply(&[1.0, 0.0])[0] - 90.0).abs() < 1e-12);
        let dr = MapBody::Builtin(cat.instantiate("dead_reckon", BTreeMap::new()).unwrap());
        assert_eq!(dr.output_dim(6).unwrap(), 2);
    }
}
