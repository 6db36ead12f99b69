//! Spherical-earth helpers shared by the geographic value spaces and the search-and-rescue maps.
//!
//! Positions are `(longitude, latitude)` in decimal degrees with east and north positive.

/// Mean earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Kilometres per degree of latitude on a sphere of the given radius.
pub fn km_per_degree(earth_radius_km: f64) -> f64 {
    earth_radius_km * core::f64::consts::PI / 180.0
}

/// Great-circle distance in kilometres between `(lon1, lat1)` and `(lon2, lat2)`.
pub fn haversine_km(lon1: f64, lat1: f64, lon2: f64, lat2: f64, earth_radius_km: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = p2 - p1;
    let dlambda = (lon2 - lon1).to_radians();
    let s1 = libm::sin(dphi / 2.0);
    let s2 = libm::sin(dlambda / 2.0);
    let h = s1 * s1 + libm::cos(p1) * libm::cos(p2) * s2 * s2;
    2.0 * earth_radius_km * libm::asin(libm::sqrt(h.clamp(0.0, 1.0)))
}

/// Bearing in degrees clockwise from north, in `[0, 360)`, of `target` as seen from `origin`,
/// using a local equirectangular projection at the origin's latitude.
pub fn bearing_deg(origin_lon: f64, origin_lat: f64, target_lon: f64, target_lat: f64) -> f64 {
    let east = (target_lon - origin_lon) * libm::cos(origin_lat.to_radians());
    let north = target_lat - origin_lat;
    normalize_degrees(libm::atan2(east, north).to_degrees())
}

/// Moves a position by an east/north velocity (km/h) for `hours`, converting kilometres to
/// degrees at the starting latitude. Returns `(lon, lat)`.
pub fn dead_reckon(
    lon: f64,
    lat: f64,
    v_east_kmh: f64,
    v_north_kmh: f64,
    hours: f64,
    earth_radius_km: f64,
) -> (f64, f64) {
    let k = km_per_degree(earth_radius_km);
    let dlon = v_east_kmh * hours / (k * libm::cos(lat.to_radians()));
    let dlat = v_north_kmh * hours / k;
    (lon + dlon, lat + dlat)
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn normalize_degrees(a: f64) -> f64 {
    let r = a - 360.0 * libm::floor(a / 360.0);
    // the subtraction can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Shortest arc between two angles in degrees, in `[0, 180]`.
pub fn angle_difference_deg(a: f64, b: f64) -> f64 {
    let d = normalize_degrees(a - b);
    d.min(360.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haversine_quarter_meridian() {
        let d = haversine_km(0.0, 0.0, 0.0, 90.0, EARTH_RADIUS_KM);
        assert!((d - EARTH_RADIUS_KM * core::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn bearing_cardinal_directions() {
        assert!(bearing_deg(0.0, 0.0, 0.0, 1.0).abs() < 1e-12);
        assert!((bearing_deg(0.0, 0.0, 1.0, 0.0) - 90.0).abs() < 1e-12);
        assert!((bearing_deg(0.0, 0.0, 0.0, -1.0) - 180.0).abs() < 1e-12);
        assert!((bearing_deg(0.0, 0.0, -1.0, 0.0) - 270.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_and_difference() {
        assert_eq!(normalize_degrees(-1.0), 359.0);
        assert_eq!(normalize_degrees(720.0), 0.0);
        assert!(normalize_degrees(-1e-18) < 360.0);
        assert!((angle_difference_deg(359.0, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dead_reckon_north_one_degree() {
        let k = km_per_degree(EARTH_RADIUS_KM);
        let (lon, lat) = dead_reckon(10.0, 20.0, 0.0, k, 1.0, EARTH_RADIUS_KM);
        assert!((lon - 10.0).abs() < 1e-12 && (lat - 21.0).abs() < 1e-12);
    }
}
