use super::{Runway, Track, TrackDataError, TrackPoint, KM_PER_NM};

/// Rows per arrival window.
pub const WINDOW_LEN: usize = 100;
/// Tracks whose closest approach stays farther than this from the threshold
/// are not treated as arrivals.
pub const NO_APPROACH_LIMIT_NM: f64 = 10.0;

/// The last [`WINDOW_LEN`] points of a track up to and including its closest
/// approach to a runway threshold, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalWindow {
    pub track_id: String,
    pub points: Vec<TrackPoint>,
    /// Index of the closest-approach point in the source track.
    pub closest_index: usize,
    pub closest_distance_nm: f64,
}

impl ArrivalWindow {
    pub fn closest_point(&self) -> &TrackPoint {
        self.points.last().expect("window is never empty")
    }
}

/// Index and distance (NM) of the first point minimizing distance to the
/// runway threshold.
pub fn closest_approach(track: &Track, runway: &Runway) -> Option<(usize, f64)> {
    let frame = runway.frame();
    track
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (e, n) = frame.to_local(p.lat, p.lon);
            (i, e.hypot(n))
        })
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
        .map(|(i, d)| (i, d / KM_PER_NM))
}

pub fn window_arrival(track: &Track, runway: &Runway) -> Result<ArrivalWindow, TrackDataError> {
    let few = |available| TrackDataError::FewerThan100Points {
        track_id: track.track_id.clone(),
        available,
    };
    if track.points.len() < WINDOW_LEN {
        return Err(few(track.points.len()));
    }
    let (idx, dist) = closest_approach(track, runway).expect("non-empty track");
    if dist > NO_APPROACH_LIMIT_NM {
        return Err(TrackDataError::NoApproach {
            track_id: track.track_id.clone(),
            distance_nm: dist,
        });
    }
    if idx + 1 < WINDOW_LEN {
        return Err(few(idx + 1));
    }
    Ok(ArrivalWindow {
        track_id: track.track_id.clone(),
        points: track.points[idx + 1 - WINDOW_LEN..=idx].to_vec(),
        closest_index: idx,
        closest_distance_nm: dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trackdata::LocalFrame;

    fn runway() -> Runway {
        Runway {
            runway_id: "07R".into(),
            threshold_lat: 33.69,
            threshold_lon: -112.09,
            threshold_elev: 1476.0,
            centerline_course: 70.0,
            length: 8200.0,
        }
    }

    /// Points along the east axis at the given east offsets (km).
    fn track_from_offsets(offsets: &[f64]) -> Track {
        let f = LocalFrame::new(33.69, -112.09);
        Track {
            track_id: "w".into(),
            callsign: None,
            mode_s: None,
            tail_number: None,
            declared_type: None,
            arrival_airport: None,
            runway_id: None,
            scratchpad_runway: None,
            points: offsets
                .iter()
                .enumerate()
                .map(|(i, &e)| {
                    let (lat, lon) = f.to_geodetic(e, 0.3);
                    TrackPoint {
                        t: i as f64,
                        lat,
                        lon,
                        alt: 2000.0,
                        course: 90.0,
                        gs: 100.0,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn exactly_100_points_all_before_threshold() {
        let offs: Vec<f64> = (0..100).map(|i| -10.0 + 0.1 * i as f64).collect();
        let tr = track_from_offsets(&offs);
        let w = window_arrival(&tr, &runway()).unwrap();
        assert_eq!(w.points, tr.points);
        assert_eq!(w.closest_index, 99);
    }

    #[test]
    fn window_ends_at_closest_approach() {
        // approach to index 180, then depart
        let offs: Vec<f64> = (0..250).map(|i| 0.05 * (i as f64 - 180.0)).collect();
        let tr = track_from_offsets(&offs);
        // brute-force closest approach by scanning every index
        let f = runway().frame();
        let mut best = 0;
        for i in 0..tr.points.len() {
            let (e, n) = f.to_local(tr.points[i].lat, tr.points[i].lon);
            let (be, bn) = f.to_local(tr.points[best].lat, tr.points[best].lon);
            if e.hypot(n) < be.hypot(bn) {
                best = i;
            }
        }
        assert_eq!(best, 180);
        let w = window_arrival(&tr, &runway()).unwrap();
        assert_eq!(w.points.len(), WINDOW_LEN);
        assert_eq!(w.points, tr.points[81..=180].to_vec());
    }

    #[test]
    fn short_tracks_rejected() {
        let tr = track_from_offsets(&vec![1.0; 50].iter().enumerate().map(|(i, _)| i as f64 * 0.01).collect::<Vec<_>>());
        assert!(matches!(
            window_arrival(&tr, &runway()),
            Err(TrackDataError::FewerThan100Points { available: 50, .. })
        ));
        // closest approach too early
        let offs: Vec<f64> = (0..150).map(|i| 0.05 * (i as f64 - 40.0)).collect();
        assert!(matches!(
            window_arrival(&track_from_offsets(&offs), &runway()),
            Err(TrackDataError::FewerThan100Points { available: 41, .. })
        ));
    }

    #[test]
    fn far_track_has_no_approach() {
        let offs: Vec<f64> = (0..120).map(|i| 40.0 - 0.1 * i as f64).collect();
        assert!(matches!(
            window_arrival(&track_from_offsets(&offs), &runway()),
            Err(TrackDataError::NoApproach { .. })
        ));
    }
}
