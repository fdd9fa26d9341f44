use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TrackDataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AircraftClass {
    Rotorcraft,
    FixedWing,
    Other,
}

impl AircraftClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rotorcraft => "ROTORCRAFT",
            Self::FixedWing => "FIXED_WING",
            Self::Other => "OTHER",
        }
    }
}

impl FromStr for AircraftClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace([' ', '-'], "_").as_str() {
            // registry extracts also spell it ROTOCRAFT
            "ROTORCRAFT" | "ROTOCRAFT" | "HELICOPTER" => Ok(Self::Rotorcraft),
            "FIXED_WING" => Ok(Self::FixedWing),
            "OTHER" => Ok(Self::Other),
            other => Err(format!("unknown aircraft class {other:?}")),
        }
    }
}

impl std::fmt::Display for AircraftClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationRecord {
    pub n_number: String,
    pub mode_s_code: Option<String>,
    pub model: String,
    pub manufacturer: String,
    pub aircraft_class: AircraftClass,
    pub type_designator: Option<String>,
}

/// A row dropped because one of its keys was already taken.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateKey {
    pub line: usize,
    pub key: String,
    pub first_line: usize,
}

/// Registration rows indexed by tail number and by Mode-S code.
#[derive(Debug, Clone, Default)]
pub struct RegistrationTable {
    records: Vec<RegistrationRecord>,
    by_n_number: HashMap<String, usize>,
    by_mode_s: HashMap<String, usize>,
    pub duplicates: Vec<DuplicateKey>,
}

pub(crate) fn normalize_key(s: &str) -> String {
    s.trim().to_ascii_uppercase()
}

fn opt(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

impl RegistrationTable {
    /// Builds a table as if the records were rows 2, 3, ... of a CSV file.
    pub fn from_records(records: impl IntoIterator<Item = RegistrationRecord>) -> Self {
        let mut table = Self::default();
        let mut lines = Vec::new();
        for (i, rec) in records.into_iter().enumerate() {
            table.insert(rec, i + 2, &mut lines);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[RegistrationRecord] {
        &self.records
    }

    pub fn by_n_number(&self, n_number: &str) -> Option<&RegistrationRecord> {
        self.by_n_number.get(&normalize_key(n_number)).map(|&i| &self.records[i])
    }

    pub fn by_mode_s(&self, mode_s: &str) -> Option<&RegistrationRecord> {
        self.by_mode_s.get(&normalize_key(mode_s)).map(|&i| &self.records[i])
    }

    /// Adds a row unless either key is already present. `line` is used for
    /// duplicate reports only.
    pub fn insert(&mut self, rec: RegistrationRecord, line: usize, lines: &mut Vec<usize>) {
        let n_key = normalize_key(&rec.n_number);
        let m_key = rec.mode_s_code.as_deref().map(normalize_key);
        let clash = self
            .by_n_number
            .get(&n_key)
            .map(|&i| (n_key.clone(), i))
            .or_else(|| m_key.as_ref().and_then(|k| self.by_mode_s.get(k).map(|&i| (k.clone(), i))));
        if let Some((key, i)) = clash {
            self.duplicates.push(DuplicateKey {
                line,
                key,
                first_line: lines[i],
            });
            return;
        }
        let idx = self.records.len();
        self.by_n_number.insert(n_key, idx);
        if let Some(k) = m_key {
            self.by_mode_s.insert(k, idx);
        }
        self.records.push(rec);
        lines.push(line);
    }
}

fn parse_row(row: &csv::StringRecord) -> Result<RegistrationRecord, String> {
    if row.len() != 6 {
        return Err(format!("expected 6 fields, found {}", row.len()));
    }
    let n_number = normalize_key(&row[0]);
    if n_number.is_empty() {
        return Err("empty n_number".into());
    }
    let mode_s_code = opt(&row[1]).map(|m| normalize_key(&m));
    if let Some(m) = &mode_s_code {
        if m.len() > 6 || !m.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(format!("mode_s_code {m:?} is not a 24-bit hex address"));
        }
    }
    Ok(RegistrationRecord {
        n_number,
        mode_s_code,
        model: row[2].trim().to_string(),
        manufacturer: row[3].trim().to_string(),
        aircraft_class: row[4].parse()?,
        type_designator: opt(&row[5]),
    })
}

/// Loads the registration CSV. Rows whose tail number or Mode-S code was
/// already seen are skipped and listed in `duplicates`.
pub fn load_registration(path: &Path) -> Result<RegistrationTable, TrackDataError> {
    let malformed = |line, reason: String| TrackDataError::Malformed {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => TrackDataError::Io {
                path: path.display().to_string(),
                source,
            },
            other => malformed(0, format!("{other:?}")),
        })?;
    let mut table = RegistrationTable::default();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parsed = parse_row(&rec).map_err(|r| malformed(line, r))?;
        table.insert(parsed, line, &mut lines);
    }
    Ok(table)
}
