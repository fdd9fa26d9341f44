//! Track, runway and registration records plus arrival windowing and feature
//! preparation.

mod features;
mod geo;
mod io;
mod registration;
mod window;

use serde::{Deserialize, Serialize};

pub use features::{featurize, fit_norm_stats, normalize, FeatureWindow, NormStats, RawFeatures, FEATURE_COUNT};
pub use geo::{LocalFrame, EARTH_RADIUS_KM, FT_PER_KM, KM_PER_NM};
pub use io::{load_runways, load_tracks, save_runways, save_tracks, write_tracks, MalformedPolicy, TrackLoad};
pub use registration::{load_registration, AircraftClass, DuplicateKey, RegistrationRecord, RegistrationTable};
pub use window::{closest_approach, window_arrival, ArrivalWindow, NO_APPROACH_LIMIT_NM, WINDOW_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    /// Seconds since epoch.
    pub t: f64,
    pub lat: f64,
    pub lon: f64,
    /// Feet MSL.
    pub alt: f64,
    /// Degrees true, `[0, 360)`.
    pub course: f64,
    /// Groundspeed in knots.
    pub gs: f64,
}

impl TrackPoint {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [self.t, self.lat, self.lon, self.alt, self.course, self.gs];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err("non-finite field".into());
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(format!("lat {} outside [-90, 90]", self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("lon {} outside [-180, 180]", self.lon));
        }
        if self.gs < 0.0 {
            return Err(format!("negative groundspeed {}", self.gs));
        }
        if !(0.0..360.0).contains(&self.course) {
            return Err(format!("course {} outside [0, 360)", self.course));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub track_id: String,
    #[serde(default)]
    pub callsign: Option<String>,
    #[serde(default)]
    pub mode_s: Option<String>,
    #[serde(default)]
    pub tail_number: Option<String>,
    #[serde(default, rename = "aircraft_type")]
    pub declared_type: Option<String>,
    #[serde(default)]
    pub arrival_airport: Option<String>,
    #[serde(default)]
    pub runway_id: Option<String>,
    #[serde(default)]
    pub scratchpad_runway: Option<bool>,
    pub points: Vec<TrackPoint>,
}

impl Track {
    /// Checks point invariants and strict time ordering.
    pub fn validate(&self) -> Result<(), String> {
        if self.track_id.is_empty() {
            return Err("empty track_id".into());
        }
        for (i, p) in self.points.iter().enumerate() {
            p.validate().map_err(|e| format!("point {i}: {e}"))?;
        }
        if let Some(i) = self.points.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(format!("point {}: time not strictly increasing", i + 1));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runway {
    pub runway_id: String,
    pub threshold_lat: f64,
    pub threshold_lon: f64,
    /// Feet MSL.
    pub threshold_elev: f64,
    /// Degrees true.
    pub centerline_course: f64,
    /// Feet.
    pub length: f64,
}

impl Runway {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.length > 0.0) {
            return Err(format!("runway {}: length must be > 0", self.runway_id));
        }
        if !(0.0..360.0).contains(&self.centerline_course) {
            return Err(format!("runway {}: centerline course outside [0, 360)", self.runway_id));
        }
        if !(-90.0..=90.0).contains(&self.threshold_lat) || !(-180.0..=180.0).contains(&self.threshold_lon) {
            return Err(format!("runway {}: threshold position out of range", self.runway_id));
        }
        Ok(())
    }

    pub fn frame(&self) -> LocalFrame {
        LocalFrame::new(self.threshold_lat, self.threshold_lon)
    }
}

/// Runway used for a track: its declared `runway_id` when known, otherwise
/// the runway whose threshold the track approaches most closely.
pub fn runway_for<'a>(track: &Track, runways: &'a [Runway]) -> Option<&'a Runway> {
    if let Some(id) = &track.runway_id {
        if let Some(r) = runways.iter().find(|r| &r.runway_id == id) {
            return Some(r);
        }
    }
    runways
        .iter()
        .filter_map(|r| closest_approach(track, r).map(|(_, d)| (r, d)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, _)| r)
}

#[derive(Debug, thiserror::Error)]
pub enum TrackDataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("track {track_id}: fewer than 100 points at or before closest approach ({available} available)")]
    FewerThan100Points { track_id: String, available: usize },
    #[error("track {track_id}: closest approach {distance_nm:.2} NM exceeds the terminal-area limit")]
    NoApproach { track_id: String, distance_nm: f64 },
    #[error("zero-variance feature: {0}")]
    ZeroVarianceFeature(String),
    #[error("feature window for {0} contains non-finite values")]
    NonFinite(String),
}
