use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{Runway, Track, TrackDataError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MalformedPolicy {
    /// Report the line and keep going.
    #[default]
    Skip,
    /// Fail on the first malformed line.
    Abort,
}

/// Result of reading a tracks file.
#[derive(Debug, Clone, Default)]
pub struct TrackLoad {
    pub tracks: Vec<Track>,
    /// `(1-based line number, reason)` for every rejected line.
    pub rejects: Vec<(usize, String)>,
}

fn io_err(path: &Path, source: std::io::Error) -> TrackDataError {
    TrackDataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a JSON-lines tracks file. Blank lines are ignored. Output order
/// follows input order.
pub fn load_tracks(path: &Path, policy: MalformedPolicy) -> Result<TrackLoad, TrackDataError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let parsed: Vec<(usize, Result<Track, String>)> = lines
        .par_iter()
        .map(|&(n, line)| {
            let r = serde_json::from_str::<Track>(line)
                .map_err(|e| format!("invalid JSON: {e}"))
                .and_then(|t| t.validate().map(|_| t));
            (n, r)
        })
        .collect();

    let mut out = TrackLoad::default();
    let mut seen = HashSet::new();
    for (line, r) in parsed {
        let r = r.and_then(|t| {
            if seen.insert(t.track_id.clone()) {
                Ok(t)
            } else {
                Err(format!("duplicate track_id {}", t.track_id))
            }
        });
        match r {
            Ok(t) => out.tracks.push(t),
            Err(reason) if policy == MalformedPolicy::Abort => {
                return Err(TrackDataError::Malformed {
                    path: path.display().to_string(),
                    line,
                    reason,
                })
            }
            Err(reason) => out.rejects.push((line, reason)),
        }
    }
    Ok(out)
}

pub fn write_tracks<W: Write>(mut w: W, tracks: &[Track]) -> std::io::Result<()> {
    for t in tracks {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_tracks(path: &Path, tracks: &[Track]) -> Result<(), TrackDataError> {
    let f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_tracks(std::io::BufWriter::new(f), tracks).map_err(|e| io_err(path, e))
}

pub fn load_runways(path: &Path) -> Result<Vec<Runway>, TrackDataError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| TrackDataError::Malformed {
        path: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Runway>().enumerate() {
        let line = i + 2;
        let rw = rec
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r))
            .map_err(|reason| TrackDataError::Malformed {
                path: path.display().to_string(),
                line,
                reason,
            })?;
        out.push(rw);
    }
    Ok(out)
}

pub fn save_runways(path: &Path, runways: &[Runway]) -> Result<(), TrackDataError> {
    let to_err = |e: csv::Error| TrackDataError::Malformed {
        path: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for r in runways {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
