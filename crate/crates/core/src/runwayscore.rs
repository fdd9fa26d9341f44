//! Arrival-runway confidence score: how strongly a track's closest approach
//! looks like a landing on the runway. Higher means more runway-like.

use serde::{Deserialize, Serialize};

use crate::trackdata::{ArrivalWindow, LocalFrame, Runway, Track, FT_PER_KM, KM_PER_NM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunwayScoreInputs {
    /// Distance from the threshold at closest approach (NM).
    pub distance_nm: f64,
    pub runway_length_ft: f64,
    /// Absolute course difference to the centerline, folded to `[0, 180]`.
    pub course_diff_deg: f64,
    /// Distance from the extended centerline (ft).
    pub lateral_dev_ft: f64,
    pub scratchpad_reported: bool,
}

/// Component scales and weights, in the order distance, course, lateral,
/// length, scratchpad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunwayScoreConfig {
    pub distance_scale_nm: f64,
    pub course_scale_deg: f64,
    pub lateral_scale_ft: f64,
    pub length_scale_ft: f64,
    pub weights: [f64; 5],
}

impl Default for RunwayScoreConfig {
    fn default() -> Self {
        Self {
            distance_scale_nm: 1.0,
            course_scale_deg: 30.0,
            lateral_scale_ft: 500.0,
            length_scale_ft: 3000.0,
            weights: [0.3, 0.25, 0.25, 0.1, 0.1],
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RunwayScoreError {
    #[error("invalid runway score input: {0}")]
    InvalidInput(String),
    #[error("invalid runway score config: {0}")]
    InvalidConfig(String),
}

impl RunwayScoreConfig {
    pub fn validate(&self) -> Result<(), RunwayScoreError> {
        let scales = [
            self.distance_scale_nm,
            self.course_scale_deg,
            self.lateral_scale_ft,
            self.length_scale_ft,
        ];
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(RunwayScoreError::InvalidConfig("scales must be positive".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.weights.iter().sum::<f64>() <= 0.0 {
            return Err(RunwayScoreError::InvalidConfig(
                "weights must be non-negative with a positive sum".into(),
            ));
        }
        Ok(())
    }
}

impl RunwayScoreInputs {
    pub fn validate(&self) -> Result<(), RunwayScoreError> {
        let bad = |m: &str| Err(RunwayScoreError::InvalidInput(m.into()));
        if self.distance_nm.is_nan() || self.distance_nm < 0.0 {
            return bad("distance must be >= 0");
        }
        if !(0.0..=180.0).contains(&self.course_diff_deg) {
            return bad("course difference must be in [0, 180]");
        }
        if self.lateral_dev_ft.is_nan() || self.lateral_dev_ft < 0.0 {
            return bad("lateral deviation must be >= 0");
        }
        if !(self.runway_length_ft > 0.0) {
            return bad("runway length must be > 0");
        }
        Ok(())
    }

    /// Component scores in `[0, 1]`, same order as the config weights.
    pub fn components(&self, cfg: &RunwayScoreConfig) -> [f64; 5] {
        [
            (-self.distance_nm / cfg.distance_scale_nm).exp(),
            (1.0 - self.course_diff_deg / cfg.course_scale_deg).max(0.0),
            (1.0 - self.lateral_dev_ft / cfg.lateral_scale_ft).max(0.0),
            (self.runway_length_ft / cfg.length_scale_ft).min(1.0),
            if self.scratchpad_reported { 1.0 } else { 0.0 },
        ]
    }
}

/// Weighted mean of the five component scores.
pub fn runway_score(inputs: &RunwayScoreInputs, cfg: &RunwayScoreConfig) -> Result<f64, RunwayScoreError> {
    inputs.validate()?;
    cfg.validate()?;
    let comps = inputs.components(cfg);
    let num: f64 = comps.iter().zip(&cfg.weights).map(|(c, w)| c * w).sum();
    Ok((num / cfg.weights.iter().sum::<f64>()).clamp(0.0, 1.0))
}

/// Score inputs evaluated at the window's closest-approach point.
pub fn inputs_at_closest_approach(window: &ArrivalWindow, track: &Track, runway: &Runway) -> RunwayScoreInputs {
    let p = window.closest_point();
    let frame = LocalFrame::new(runway.threshold_lat, runway.threshold_lon);
    let (east, north) = frame.to_local(p.lat, p.lon);
    let theta = runway.centerline_course.to_radians();
    let cross_km = east * theta.cos() - north * theta.sin();
    let diff = (p.course - runway.centerline_course).rem_euclid(360.0);
    RunwayScoreInputs {
        distance_nm: east.hypot(north) / KM_PER_NM,
        runway_length_ft: runway.length,
        course_diff_deg: if diff > 180.0 { 360.0 - diff } else { diff },
        lateral_dev_ft: cross_km.abs() * FT_PER_KM,
        scratchpad_reported: track.scratchpad_runway.unwrap_or(false),
    }
}
