use serde::{Deserialize, Serialize};

use super::geo::angle_diff_deg;
use super::{ArrivalWindow, Runway, TrackDataError, WINDOW_LEN};

/// Per-point features: east km, north km, height above threshold (kft),
/// groundspeed (kt/100), sin and cos of course relative to the centerline.
pub const FEATURE_COUNT: usize = 6;

/// Un-normalized features of one arrival window.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub track_id: String,
    pub rows: Vec<[f64; FEATURE_COUNT]>,
}

/// Normalized `WINDOW_LEN x FEATURE_COUNT` model input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    pub source_track_id: String,
    pub values: Vec<[f64; FEATURE_COUNT]>,
}

impl FeatureWindow {
    pub fn new(source_track_id: String, values: Vec<[f64; FEATURE_COUNT]>) -> Result<Self, TrackDataError> {
        if values.len() != WINDOW_LEN {
            return Err(TrackDataError::FewerThan100Points {
                track_id: source_track_id,
                available: values.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TrackDataError::NonFinite(source_track_id));
        }
        Ok(Self {
            source_track_id,
            values,
        })
    }
}

pub fn featurize(window: &ArrivalWindow, runway: &Runway) -> RawFeatures {
    let frame = runway.frame();
    let rows = window
        .points
        .iter()
        .map(|p| {
            let (east, north) = frame.to_local(p.lat, p.lon);
            let rel = angle_diff_deg(p.course, runway.centerline_course).to_radians();
            [
                east,
                north,
                (p.alt - runway.threshold_elev) / 1000.0,
                p.gs / 100.0,
                rel.sin(),
                rel.cos(),
            ]
        })
        .collect();
    RawFeatures {
        track_id: window.track_id.clone(),
        rows,
    }
}

/// Per-feature mean and population standard deviation of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
}

/// Fits pooled statistics over every row of every window. At least two
/// windows are required; a lone window gives no between-track spread.
pub fn fit_norm_stats(windows: &[RawFeatures]) -> Result<NormStats, TrackDataError> {
    if windows.len() < 2 {
        return Err(TrackDataError::ZeroVarianceFeature(format!(
            "need at least 2 windows to fit normalization, got {}",
            windows.len()
        )));
    }
    let n = windows.iter().map(|w| w.rows.len()).sum::<usize>() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    for row in windows.iter().flat_map(|w| &w.rows) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; FEATURE_COUNT];
    for row in windows.iter().flat_map(|w| &w.rows) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut std = [0.0; FEATURE_COUNT];
    for (f, (s, v)) in std.iter_mut().zip(var).enumerate() {
        *s = (v / n).sqrt();
        if !(*s > 1e-12) || !s.is_finite() {
            return Err(TrackDataError::ZeroVarianceFeature(format!("feature {f} has no variance")));
        }
    }
    Ok(NormStats { mean, std })
}

pub fn normalize(raw: &RawFeatures, stats: &NormStats) -> Result<FeatureWindow, TrackDataError> {
    let values = raw
        .rows
        .iter()
        .map(|row| {
            let mut z = [0.0; FEATURE_COUNT];
            for f in 0..FEATURE_COUNT {
                z[f] = (row[f] - stats.mean[f]) / stats.std[f];
            }
            z
        })
        .collect();
    FeatureWindow::new(raw.track_id.clone(), values)
}
