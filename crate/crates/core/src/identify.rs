//! Reconstruction-error threshold calibration and the two-gate helicopter
//! decision.
//!
//! A track is called a helicopter only when its reconstruction MAE is below
//! the calibrated cutoff *and* its arrival-runway score is below the runway
//! cutoff. Both gates use strict inequalities.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{Autoencoder, AutoencoderError};
use crate::runwayscore::{inputs_at_closest_approach, runway_score, RunwayScoreConfig, RunwayScoreError};
use crate::trackdata::{featurize, normalize, runway_for, window_arrival, Runway, Track, TrackDataError};

pub const MIN_CALIBRATION_VALUES: usize = 10;
pub const DEFAULT_PERCENTILE: f64 = 80.0;
pub const DEFAULT_RUNWAY_SCORE_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum IdentifyError {
    #[error("need at least {required} values, got {found}")]
    TooFewValues { found: usize, required: usize },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("track {track_id} is unclassifiable: {reason}")]
    Unclassifiable { track_id: String, reason: String },
    #[error(transparent)]
    Model(#[from] AutoencoderError),
    #[error(transparent)]
    Score(#[from] RunwayScoreError),
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}

/// MAE cutoff, the percentile that produced it, and the runway-score cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub mae_threshold: f64,
    pub percentile: f64,
    pub runway_score_threshold: f64,
}

impl Thresholds {
    pub fn new(mae_threshold: f64, percentile: f64, runway_score_threshold: f64) -> Result<Self, IdentifyError> {
        let t = Self {
            mae_threshold,
            percentile,
            runway_score_threshold,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), IdentifyError> {
        let bad = |m: String| Err(IdentifyError::InvalidThresholds(m));
        if !(self.mae_threshold.is_finite() && self.mae_threshold > 0.0) {
            return bad(format!("MAE threshold must be > 0, got {}", self.mae_threshold));
        }
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return bad(format!("percentile must be in (0, 100], got {}", self.percentile));
        }
        if !(0.0..=1.0).contains(&self.runway_score_threshold) {
            return bad(format!(
                "runway score threshold must be in [0, 1], got {}",
                self.runway_score_threshold
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), IdentifyError> {
        let text = serde_json::to_string_pretty(self).expect("thresholds serialize") + "\n";
        std::fs::write(path, text).map_err(|e| IdentifyError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, IdentifyError> {
        let err = |reason: String| IdentifyError::File {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let t: Self = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }
}

/// Percentile by linear interpolation between closest ranks: rank
/// `p / 100 * (n - 1)` into the sorted values.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, IdentifyError> {
    if values.is_empty() {
        return Err(IdentifyError::TooFewValues { found: 0, required: 1 });
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(IdentifyError::InvalidValue(format!("percentile {p} outside [0, 100]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(IdentifyError::InvalidValue("non-finite value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    if frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Derives the MAE cutoff from training reconstruction errors.
pub fn calibrate(training_maes: &[f64], pct: f64) -> Result<f64, IdentifyError> {
    if training_maes.len() < MIN_CALIBRATION_VALUES {
        return Err(IdentifyError::TooFewValues {
            found: training_maes.len(),
            required: MIN_CALIBRATION_VALUES,
        });
    }
    if let Some(v) = training_maes.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(IdentifyError::InvalidValue(format!("training MAE {v} is not a finite non-negative number")));
    }
    if !(pct > 0.0 && pct <= 100.0) {
        return Err(IdentifyError::InvalidValue(format!("percentile {pct} outside (0, 100]")));
    }
    percentile(training_maes, pct)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    MaeAtOrAboveThreshold,
    RunwayScoreAtOrAbove,
    Unclassifiable(String),
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::MaeAtOrAboveThreshold => f.write_str("mae_at_or_above_threshold"),
            Reason::RunwayScoreAtOrAbove => f.write_str("runway_score_at_or_above"),
            Reason::Unclassifiable(why) => write!(f, "unclassifiable:{why}"),
        }
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mae_at_or_above_threshold" => Ok(Reason::MaeAtOrAboveThreshold),
            "runway_score_at_or_above" => Ok(Reason::RunwayScoreAtOrAbove),
            other => other
                .strip_prefix("unclassifiable:")
                .map(|why| Reason::Unclassifiable(why.to_string()))
                .ok_or_else(|| format!("unknown reason {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub track_id: String,
    /// `None` only for unclassifiable tracks.
    pub mae: Option<f64>,
    pub runway_score: Option<f64>,
    pub pred_is_helicopter: bool,
    pub reasons: Vec<Reason>,
}

impl ClassificationResult {
    pub fn unclassifiable(track_id: &str, reason: impl Into<String>) -> Self {
        Self {
            track_id: track_id.to_string(),
            mae: None,
            runway_score: None,
            pred_is_helicopter: false,
            reasons: vec![Reason::Unclassifiable(reason.into())],
        }
    }

    pub fn is_classified(&self) -> bool {
        self.mae.is_some()
    }
}

/// Applies both gates. Both scores are always reported.
pub fn decide(track_id: &str, mae: f64, score: f64, th: &Thresholds) -> ClassificationResult {
    let mut reasons = Vec::new();
    if !(mae < th.mae_threshold) {
        reasons.push(Reason::MaeAtOrAboveThreshold);
    }
    if !(score < th.runway_score_threshold) {
        reasons.push(Reason::RunwayScoreAtOrAbove);
    }
    ClassificationResult {
        track_id: track_id.to_string(),
        mae: Some(mae),
        runway_score: Some(score),
        pred_is_helicopter: reasons.is_empty(),
        reasons,
    }
}

fn window_reason(e: &TrackDataError) -> String {
    match e {
        TrackDataError::FewerThan100Points { .. } => "fewer_than_100_points".into(),
        TrackDataError::NoApproach { .. } => "no_approach".into(),
        other => other.to_string(),
    }
}

fn window_and_mae(
    model: &Autoencoder,
    track: &Track,
    runway: &Runway,
) -> Result<(crate::trackdata::ArrivalWindow, f64), IdentifyError> {
    let unclassifiable = |e: TrackDataError| IdentifyError::Unclassifiable {
        track_id: track.track_id.clone(),
        reason: window_reason(&e),
    };
    let window = window_arrival(track, runway).map_err(unclassifiable)?;
    let features = normalize(&featurize(&window, runway), &model.norm_stats).map_err(unclassifiable)?;
    let mae = model.reconstruction_error(&features)? as f64;
    Ok((window, mae))
}

/// Reconstruction MAE of a track's arrival window under the model's own
/// normalization.
pub fn track_mae(model: &Autoencoder, track: &Track, runway: &Runway) -> Result<f64, IdentifyError> {
    window_and_mae(model, track, runway).map(|(_, m)| m)
}

pub fn classify(
    model: &Autoencoder,
    th: &Thresholds,
    track: &Track,
    runway: &Runway,
    score_cfg: &RunwayScoreConfig,
) -> Result<ClassificationResult, IdentifyError> {
    let (window, mae) = window_and_mae(model, track, runway)?;
    let score = runway_score(&inputs_at_closest_approach(&window, track, runway), score_cfg)?;
    Ok(decide(&track.track_id, mae, score, th))
}

/// Classifies every track in parallel; output order follows input order and
/// windowing failures become unclassifiable rows.
pub fn classify_all(
    model: &Autoencoder,
    th: &Thresholds,
    tracks: &[Track],
    runways: &[Runway],
    score_cfg: &RunwayScoreConfig,
) -> Result<Vec<ClassificationResult>, IdentifyError> {
    tracks
        .par_iter()
        .map(|t| {
            let Some(rw) = runway_for(t, runways) else {
                return Ok(ClassificationResult::unclassifiable(&t.track_id, "no_runway"));
            };
            match classify(model, th, t, rw, score_cfg) {
                Err(IdentifyError::Unclassifiable { track_id, reason }) => {
                    Ok(ClassificationResult::unclassifiable(&track_id, reason))
                }
                other => other,
            }
        })
        .collect()
}

pub const RESULTS_HEADER: [&str; 5] = ["track_id", "mae", "runway_score", "pred_is_helicopter", "reasons"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results<W: std::io::Write>(w: W, results: &[ClassificationResult]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULTS_HEADER)?;
    for r in results {
        let reasons: Vec<String> = r.reasons.iter().map(ToString::to_string).collect();
        wtr.write_record([
            r.track_id.clone(),
            fmt_opt(r.mae),
            fmt_opt(r.runway_score),
            r.pred_is_helicopter.to_string(),
            reasons.join(";"),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_results<R: std::io::Read>(r: R) -> Result<Vec<ClassificationResult>, String> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(format!("unexpected results header {header:?}"));
    }
    let opt = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("bad number {s:?}: {e}"))
        }
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let reasons = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4].split(';').map(str::parse).collect::<Result<_, _>>()?
        };
        out.push(ClassificationResult {
            track_id: rec[0].to_string(),
            mae: opt(&rec[1])?,
            runway_score: opt(&rec[2])?,
            pred_is_helicopter: rec[3].parse().map_err(|e| format!("bad boolean {:?}: {e}", &rec[3]))?,
            reasons,
        });
    }
    Ok(out)
}

/// Uniform-bin histogram of reconstruction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram_report(values: &[f64], bins: usize) -> Result<Histogram, IdentifyError> {
    if values.is_empty() {
        return Err(IdentifyError::TooFewValues { found: 0, required: 1 });
    }
    if bins == 0 {
        return Err(IdentifyError::InvalidValue("bin count must be >= 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(IdentifyError::InvalidValue("non-finite value".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let mut b = ((v - lo) / width).floor() as usize;
        b = b.min(bins - 1);
        // keep values on an edge in the upper bin, matching `edges`
        while b > 0 && v < edges[b] {
            b -= 1;
        }
        while b + 1 < bins && v >= edges[b + 1] {
            b += 1;
        }
        counts[b] += 1;
    }
    Ok(Histogram { edges, counts })
}

impl Histogram {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["bin_start", "bin_end", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            wtr.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
