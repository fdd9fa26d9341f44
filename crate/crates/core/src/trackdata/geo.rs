/// Mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;
pub const KM_PER_NM: f64 = 1.852;
pub const FT_PER_KM: f64 = 1000.0 / 0.3048;

/// Equirectangular tangent-plane projection about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
}

impl LocalFrame {
    pub fn new(lat0: f64, lon0: f64) -> Self {
        Self {
            lat0,
            lon0,
            cos_lat0: lat0.to_radians().cos(),
        }
    }

    /// `(east, north)` in km.
    pub fn to_local(&self, lat: f64, lon: f64) -> (f64, f64) {
        let mut dlon = lon - self.lon0;
        if dlon > 180.0 {
            dlon -= 360.0;
        } else if dlon < -180.0 {
            dlon += 360.0;
        }
        (
            EARTH_RADIUS_KM * dlon.to_radians() * self.cos_lat0,
            EARTH_RADIUS_KM * (lat - self.lat0).to_radians(),
        )
    }

    /// Inverse of [`to_local`](Self::to_local).
    pub fn to_geodetic(&self, east_km: f64, north_km: f64) -> (f64, f64) {
        let lat = self.lat0 + (north_km / EARTH_RADIUS_KM).to_degrees();
        let mut lon = self.lon0 + (east_km / (EARTH_RADIUS_KM * self.cos_lat0)).to_degrees();
        if lon > 180.0 {
            lon -= 360.0;
        } else if lon < -180.0 {
            lon += 360.0;
        }
        (lat, lon)
    }
}

/// Signed angle `a - b` folded into `(-180, 180]` degrees.
pub(crate) fn angle_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}
