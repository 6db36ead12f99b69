//! Search and rescue for a downed aircraft.
//!
//! Entities: position `x, y, z`, velocity `v_x, v_y`, time since the last fix `t`, the two
//! direction-finder bearings `theta1, theta2`, and the satellite detection `s`. Sensors:
//!
//! | open | entities | sensor | stalk |
//! |------|----------|--------|-------|
//! | `U1` | `x, y, z` | flight plan | geo3d |
//! | `U2` | `x, y, z, v_x, v_y` | air traffic control | geo3d × ℝ² |
//! | `U3` | `theta1, t` | direction finder 1 | circle × time |
//! | `U4` | `theta2, t` | direction finder 2 | circle × time |
//! | `U5` | `s, theta1, theta2` | satellite | geo2d |
//! | `X` | everything | field office | geo3d × ℝ² × time |
//!
//! Internally longitudes are east-positive degrees, altitudes are kilometres and
//! velocities are `(east, north)` in km/h. The recorded cases keep their original units
//! (degrees west, metres, and a westward `v_x`) and are converted on the way in.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::consistency::Assignment;
use crate::geo;
use crate::sheaf::{Builtin, MapBody, Sheaf, SheafBuilder, DEAD_RECKON, POINT_BEARING, TRACK_BEARING};
use crate::spaces::{Factor, FactorKind, ValueSpace};
use crate::topology::{generate_topology, EntityUniverse, OpenId, Topology};
use crate::Result;

/// Entity names in universe order.
pub const SAR_ENTITIES: [&str; 9] = ["x", "y", "z", "v_x", "v_y", "t", "theta1", "theta2", "s"];

const U1: &[&str] = &["x", "y", "z"];
const U2: &[&str] = &["x", "y", "z", "v_x", "v_y"];
const U3: &[&str] = &["theta1", "t"];
const U4: &[&str] = &["theta2", "t"];
const U5: &[&str] = &["s", "theta1", "theta2"];

/// Metric weights that turn angles, times and velocities into kilometre-like units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarWeights {
    /// Kilometres per degree of bearing.
    pub bearing: f64,
    /// Kilometres per hour of time.
    pub time: f64,
    /// Kilometres per km/h of velocity.
    pub velocity: f64,
}

impl Default for SarWeights {
    fn default() -> Self {
        Self { bearing: 25.0, time: 500.0, velocity: 1.0 }
    }
}

/// Fixed geometry of the search: sensor sites, the true crash site and the metric weights.
/// Positions are `(lon, lat)` with east positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarParameters {
    /// Direction finder 1.
    pub rdf1: (f64, f64),
    /// Direction finder 2.
    pub rdf2: (f64, f64),
    /// Where the aircraft actually came down.
    pub true_crash: (f64, f64),
    /// Sphere radius for all geometry.
    pub earth_radius_km: f64,
    /// Metric weights.
    pub weights: SarWeights,
}

impl Default for SarParameters {
    fn default() -> Self {
        Self {
            rdf1: (-73.662574, 42.7338328),
            rdf2: (-77.0897374, 38.9352387),
            true_crash: (-64.63672, 44.24545),
            earth_radius_km: geo::EARTH_RADIUS_KM,
            weights: SarWeights::default(),
        }
    }
}

/// Published fused estimates for one case, in recorded units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedExpectation {
    /// Field office values `[x °W, y °N, z m, v_x km/h W, v_y km/h N, t h]`.
    pub field: [f64; 6],
    /// Crash estimate `(°W, °N)`.
    pub crash: (f64, f64),
    /// Distance to the true crash site, km.
    pub error_km: f64,
}

/// One recorded case, in recorded units (°W, °N, m, km/h with `v_x` positive westward, h).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarCase {
    /// 1, 2 or 3.
    pub id: u8,
    /// Flight plan `[x, y, z]`.
    pub flight_plan: [f64; 3],
    /// Air traffic control `[x, y, z, v_x, v_y]`.
    pub atc: [f64; 5],
    /// Direction finder 1 `[theta1 °, t h]`.
    pub rdf1: [f64; 2],
    /// Direction finder 2 `[theta2 °, t h]`.
    pub rdf2: [f64; 2],
    /// Satellite detection `[s_x, s_y]`.
    pub satellite: [f64; 2],
    /// Field office `[x, y, z, v_x, v_y, t]`.
    pub field: [f64; 6],
    /// Published crash estimate from the field office values `(°W, °N)`.
    pub crash_estimate: (f64, f64),
    /// Published consistency radius, km.
    pub radius_km: f64,
    /// Published distance from the crash estimate to the true site, km.
    pub error_km: f64,
    /// Published fused results.
    pub fused: FusedExpectation,
}

/// The three recorded cases.
pub const SAR_CASES: [SarCase; 3] = [
    SarCase {
        id: 1,
        flight_plan: [70.662, 42.829, 11178.0],
        atc: [70.587, 42.741, 11346.0, -495.0, 164.0],
        rdf1: [77.1, 0.943],
        rdf2: [61.3, 0.890],
        satellite: [64.599, 44.243],
        field: [70.649, 42.753, 11220.0, -495.0, 164.0, 0.928],
        crash_estimate: (65.0013, 44.1277),
        radius_km: 15.7,
        error_km: 16.1,
        fused: FusedExpectation {
            field: [70.9391, 42.7849, 10963.0, -493.6, 168.6, 0.952],
            crash: (65.1704, 44.2307),
            error_km: 2.01,
        },
    },
    SarCase {
        id: 2,
        flight_plan: [70.663, 42.752, 11299.0],
        atc: [70.657, 42.773, 11346.0, -495.0, 164.0],
        rdf1: [77.2, 0.930],
        rdf2: [63.2, 0.974],
        satellite: [64.630, 44.287],
        field: [70.668, 42.809, 11431.0, -495.0, 164.0, 1.05],
        crash_estimate: (64.2396, 44.3721),
        radius_km: 11.6,
        error_km: 17.3,
        fused: FusedExpectation {
            field: [71.8296, 42.7806, 11730.0, -497.2, 162.2, 1.04],
            crash: (65.4553, 44.3069),
            error_km: 8.38,
        },
    },
    SarCase {
        id: 3,
        flight_plan: [70.612, 42.834, 11237.0],
        atc: [70.617, 42.834, 11236.0, -419.0, 310.0],
        rdf1: [77.2, 0.985],
        rdf2: [63.3, 1.05],
        satellite: [62.742, 44.550],
        field: [70.626, 42.814, 11239.0, -419.0, 311.0, 1.02],
        crash_estimate: (65.3745, 45.6703),
        radius_km: 152.0,
        error_km: 193.0,
        fused: FusedExpectation {
            field: [75.7569, 42.5831, 12452.0, -436.6, 280.9, 0.872],
            crash: (71.0939, 44.7919),
            error_km: 74.4,
        },
    },
];

/// Looks up a recorded case by id.
pub fn sar_case(id: u8) -> Option<&'static SarCase> {
    SAR_CASES.iter().find(|c| c.id == id)
}

/// Handles to the opens of the search-and-rescue topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SarOpens {
    /// Flight plan.
    pub u1: OpenId,
    /// Air traffic control.
    pub u2: OpenId,
    /// Direction finder 1.
    pub u3: OpenId,
    /// Direction finder 2.
    pub u4: OpenId,
    /// Satellite.
    pub u5: OpenId,
    /// `{t}`.
    pub t: OpenId,
    /// `{theta1}`.
    pub theta1: OpenId,
    /// `{theta2}`.
    pub theta2: OpenId,
    /// Field office.
    pub x: OpenId,
}

/// Resolves the named opens in a search-and-rescue topology.
pub fn sar_opens(topology: &Topology) -> Result<SarOpens> {
    Ok(SarOpens {
        u1: topology.open_by_names(U1)?,
        u2: topology.open_by_names(U2)?,
        u3: topology.open_by_names(U3)?,
        u4: topology.open_by_names(U4)?,
        u5: topology.open_by_names(U5)?,
        t: topology.open_by_names(&["t"])?,
        theta1: topology.open_by_names(&["theta1"])?,
        theta2: topology.open_by_names(&["theta2"])?,
        x: topology.whole(),
    })
}

fn factor(kind: FactorKind, weight: f64, bounds: Option<Vec<(f64, f64)>>) -> Factor {
    Factor { kind, weight, bounds }
}

fn position() -> Factor {
    factor(FactorKind::GeoPosition3D, 1.0, Some(vec![(-80.0, -55.0), (35.0, 50.0), (0.0, 15.0)]))
}

fn surface() -> Factor {
    factor(FactorKind::GeoPosition2D, 1.0, Some(vec![(-80.0, -55.0), (35.0, 50.0)]))
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (String::from(k), v)).collect()
}

/// Builds the search-and-rescue sheaf. The bounds on the stalks cover the recorded cases
/// and are used only for sampling and binning.
pub fn build_sar_sheaf(p: &SarParameters) -> Result<Sheaf> {
    let w = p.weights;
    let velocity = || factor(FactorKind::Euclidean(2), w.velocity, Some(vec![(-1000.0, 1000.0); 2]));
    let time = || factor(FactorKind::Time, w.time, Some(vec![(0.0, 3.0)]));
    let bearing = || factor(FactorKind::Circle, w.bearing, None);

    let t = generate_topology(
        EntityUniverse::new(SAR_ENTITIES)?,
        &[U1.to_vec(), U2.to_vec(), U3.to_vec(), U4.to_vec(), U5.to_vec(), SAR_ENTITIES.to_vec()],
    )?;
    let o = sar_opens(&t)?;
    let mut b = SheafBuilder::new(t);
    b.stalk(o.x, ValueSpace::from_factors(vec![position(), velocity(), time()]));
    b.stalk(o.u1, ValueSpace::from_factors(vec![position()]));
    b.stalk(o.u2, ValueSpace::from_factors(vec![position(), velocity()]));
    b.stalk(o.u3, ValueSpace::from_factors(vec![bearing(), time()]));
    b.stalk(o.u4, ValueSpace::from_factors(vec![bearing(), time()]));
    b.stalk(o.u5, ValueSpace::from_factors(vec![surface()]));
    b.stalk(o.t, ValueSpace::from_factors(vec![time()]));
    b.stalk(o.theta1, ValueSpace::from_factors(vec![bearing()]));
    b.stalk(o.theta2, ValueSpace::from_factors(vec![bearing()]));

    let r = p.earth_radius_km;
    let site = |s: (f64, f64)| params(&[("ref_lon", s.0), ("ref_lat", s.1), ("earth_radius_km", r)]);
    let track = |s| Builtin::new(TRACK_BEARING, site(s)).map(MapBody::Builtin);
    let point = |s: (f64, f64)| {
        Builtin::new(POINT_BEARING, params(&[("ref_lon", s.0), ("ref_lat", s.1)])).map(MapBody::Builtin)
    };

    b.restriction(o.x, o.u2, MapBody::Projection((0..5).collect()));
    b.restriction(o.x, o.u3, track(p.rdf1)?);
    b.restriction(o.x, o.u4, track(p.rdf2)?);
    b.restriction(o.x, o.u5, MapBody::Builtin(Builtin::new(DEAD_RECKON, params(&[("earth_radius_km", r)]))?));
    b.restriction(o.u2, o.u1, MapBody::Projection(vec![0, 1, 2]));
    b.restriction(o.u3, o.theta1, MapBody::Projection(vec![0]));
    b.restriction(o.u3, o.t, MapBody::Projection(vec![1]));
    b.restriction(o.u4, o.theta2, MapBody::Projection(vec![0]));
    b.restriction(o.u4, o.t, MapBody::Projection(vec![1]));
    b.restriction(o.u5, o.theta1, point(p.rdf1)?);
    b.restriction(o.u5, o.theta2, point(p.rdf2)?);
    b.build()
}

/// Converts recorded field office values `[x °W, y °N, z m, v_x km/h W, v_y km/h N, t h]`
/// to the internal state `(lon, lat, alt_km, v_east, v_north, t)`.
pub fn field_state(recorded: &[f64; 6]) -> Vec<f64> {
    vec![-recorded[0], recorded[1], recorded[2] / 1000.0, -recorded[3], recorded[4], recorded[5]]
}

/// Converts an internal state back to recorded units.
pub fn recorded_field(state: &[f64]) -> [f64; 6] {
    [-state[0], state[1], state[2] * 1000.0, -state[3], state[4], state[5]]
}

/// Populates `U1`…`U5` and `X` from a recorded case.
pub fn sar_case_assignment<'s>(sheaf: &'s Sheaf, case: &SarCase) -> Result<Assignment<'s>> {
    let o = sar_opens(sheaf.topology())?;
    let fp = case.flight_plan;
    let atc = case.atc;
    let mut a = Assignment::new(sheaf);
    a.set(o.u1, vec![-fp[0], fp[1], fp[2] / 1000.0])?;
    a.set(o.u2, vec![-atc[0], atc[1], atc[2] / 1000.0, -atc[3], atc[4]])?;
    a.set(o.u3, case.rdf1.to_vec())?;
    a.set(o.u4, case.rdf2.to_vec())?;
    a.set(o.u5, vec![-case.satellite[0], case.satellite[1]])?;
    a.set(o.x, field_state(&case.field))?;
    Ok(a)
}

/// Dead-reckoned crash site `(lon, lat)` (east positive) of an internal state.
pub fn crash_estimate(p: &SarParameters, state: &[f64]) -> (f64, f64) {
    geo::dead_reckon(state[0], state[1], state[3], state[4], state[5], p.earth_radius_km)
}

/// Great-circle distance from `(lon, lat)` to the true crash site, km.
pub fn crash_error_km(p: &SarParameters, site: (f64, f64)) -> f64 {
    geo::haversine_km(site.0, site.1, p.true_crash.0, p.true_crash.1, p.earth_radius_km)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::consistency_radius;

    #[test]
    fn all_sensor_opens_are_declared() {
        let s = build_sar_sheaf(&SarParameters::default()).unwrap();
        let o = sar_opens(s.topology()).unwrap();
        for id in [o.u1, o.u2, o.u3, o.u4, o.u5, o.t, o.theta1, o.theta2, o.x] {
            assert!(s.is_declared(id));
        }
        assert_eq!(s.stalk(o.x).dim(), 6);
        assert!(!s.is_linear());
    }

    #[test]
    fn unit_conversions_round_trip() {
        let c = sar_case(1).unwrap();
        let st = field_state(&c.field);
        assert_eq!(st[0], -70.649);
        assert_eq!(st[3], 495.0);
        let back = recorded_field(&st);
        for (x, y) in back.iter().zip(c.field) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn satellite_bearing_matches_track_bearing_at_rest() {
        let p = SarParameters::default();
        let s = build_sar_sheaf(&p).unwrap();
        let o = sar_opens(s.topology()).unwrap();
        let (lon, lat) = p.true_crash;
        let via_track = s.restrict_coords(o.x, o.theta1, &[lon, lat, 11.0, 0.0, 0.0, 1.0]).unwrap();
        let via_point = s.restrict_coords(o.u5, o.theta1, &[lon, lat]).unwrap();
        assert!((via_track[0] - via_point[0]).abs() < 1e-12);
    }

    #[test]
    fn recorded_cases_give_finite_radii() {
        let p = SarParameters::default();
        let s = build_sar_sheaf(&p).unwrap();
        for c in &SAR_CASES {
            let a = sar_case_assignment(&s, c).unwrap();
            let r = consistency_radius(&a).unwrap();
            assert!(r.radius.is_finite() && r.radius > 0.0);
        }
    }

    #[test]
    fn crash_estimate_heads_east() {
        let p = SarParameters::default();
        let c = sar_case(1).unwrap();
        let (lon, lat) = crash_estimate(&p, &field_state(&c.field));
        assert!(lon > -66.0 && lon < -64.0 && lat > 44.0 && lat < 44.3);
    }
}
