//! Checks classifier output against the registration snapshot: registration
//! join, confusion counts, overlap with the type-list baseline, and pseudo
//! type resolution.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::identify::{ClassificationResult, Reason};
use crate::trackdata::{AircraftClass, RegistrationRecord, RegistrationTable, Track};

pub const DEFAULT_PSEUDO_TYPES: [&str; 2] = ["HELO", "HELI"];

#[derive(Debug, thiserror::Error)]
pub enum ValidateError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

fn type_key(s: &str) -> String {
    s.trim().to_ascii_uppercase()
}

/// Helicopter type designators plus the non-specific pseudo labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HelicopterTypes {
    designators: BTreeSet<String>,
    pseudo: BTreeSet<String>,
}

impl HelicopterTypes {
    pub fn new<I, J, S, T>(designators: I, pseudo: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        Self {
            designators: designators.into_iter().map(|s| type_key(s.as_ref())).collect(),
            pseudo: pseudo.into_iter().map(|s| type_key(s.as_ref())).collect(),
        }
    }

    pub fn is_helicopter_type(&self, declared: &str) -> bool {
        let k = type_key(declared);
        self.designators.contains(&k) || self.pseudo.contains(&k)
    }

    pub fn is_pseudo(&self, declared: &str) -> bool {
        self.pseudo.contains(&type_key(declared))
    }
}

/// Reads a plain list file: one entry per line, blank lines and `#` comments
/// ignored.
pub fn load_type_list(path: &Path) -> Result<Vec<String>, ValidateError> {
    let text = std::fs::read_to_string(path).map_err(|source| ValidateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(type_key)
        .collect())
}

/// The existing identification rule: the declared type is a known
/// helicopter designator or a pseudo helicopter label.
pub fn rule_based_baseline(track: &Track, types: &HelicopterTypes) -> bool {
    track.declared_type.as_deref().is_some_and(|t| types.is_helicopter_type(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchKind {
    ByTail,
    ByModeS,
    Unmatched,
}

impl MatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ByTail => "BY_TAIL",
            Self::ByModeS => "BY_MODE_S",
            Self::Unmatched => "UNMATCHED",
        }
    }
}

impl fmt::Display for MatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BY_TAIL" => Ok(Self::ByTail),
            "BY_MODE_S" => Ok(Self::ByModeS),
            "UNMATCHED" => Ok(Self::Unmatched),
            other => Err(format!("unknown match kind {other:?}")),
        }
    }
}

/// A classification result annotated with what the registration table says
/// about the aircraft.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub result: ClassificationResult,
    pub declared_type: Option<String>,
    pub matched: MatchKind,
    pub n_number: Option<String>,
    pub mode_s_code: Option<String>,
    pub aircraft_class: Option<AircraftClass>,
    /// Present iff the record matched a registration row.
    pub is_helicopter_ac_reg: Option<bool>,
    pub model: Option<String>,
    pub manufacturer: Option<String>,
    pub type_designator: Option<String>,
    /// Tail and Mode-S point at registrations of different classes; the
    /// tail match is kept.
    pub class_conflict: bool,
}

impl ValidationRecord {
    fn unmatched(result: ClassificationResult, declared_type: Option<String>) -> Self {
        Self {
            result,
            declared_type,
            matched: MatchKind::Unmatched,
            n_number: None,
            mode_s_code: None,
            aircraft_class: None,
            is_helicopter_ac_reg: None,
            model: None,
            manufacturer: None,
            type_designator: None,
            class_conflict: false,
        }
    }
}

/// Joins each result to the registration table, tail number first and
/// Mode-S second. Prediction fields are carried through untouched.
pub fn join_registration(
    results: &[ClassificationResult],
    tracks: &[Track],
    table: &RegistrationTable,
) -> Vec<ValidationRecord> {
    let by_id: HashMap<&str, &Track> = tracks.iter().map(|t| (t.track_id.as_str(), t)).collect();
    results
        .iter()
        .map(|r| {
            let track = by_id.get(r.track_id.as_str());
            let declared = track.and_then(|t| t.declared_type.clone());
            let by_tail = track.and_then(|t| t.tail_number.as_deref()).and_then(|k| table.by_n_number(k));
            let by_mode_s = track.and_then(|t| t.mode_s.as_deref()).and_then(|k| table.by_mode_s(k));
            let (kind, reg): (MatchKind, &RegistrationRecord) = match (by_tail, by_mode_s) {
                (Some(t), _) => (MatchKind::ByTail, t),
                (None, Some(m)) => (MatchKind::ByModeS, m),
                (None, None) => return ValidationRecord::unmatched(r.clone(), declared),
            };
            let class_conflict = matches!((by_tail, by_mode_s), (Some(t), Some(m)) if t.aircraft_class != m.aircraft_class);
            if class_conflict {
                log::warn!("track {}: tail and mode-s registrations disagree on class", r.track_id);
            }
            ValidationRecord {
                result: r.clone(),
                declared_type: declared,
                matched: kind,
                n_number: Some(reg.n_number.clone()),
                mode_s_code: reg.mode_s_code.clone(),
                aircraft_class: Some(reg.aircraft_class),
                is_helicopter_ac_reg: Some(reg.aircraft_class == AircraftClass::Rotorcraft),
                model: Some(reg.model.clone()),
                manufacturer: Some(reg.manufacturer.clone()),
                type_designator: reg.type_designator.clone(),
                class_conflict,
            }
        })
        .collect()
}

/// Where the "is it really a helicopter" answer comes from.
#[derive(Debug, Clone, Copy)]
pub enum GroundTruth<'a> {
    /// The joined registration class; unmatched records have no truth.
    Registration,
    /// An external per-track table (e.g. the synthetic labels sidecar).
    Labels(&'a HashMap<String, bool>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// Classified records with no ground truth.
    pub no_truth: usize,
    /// Records that could not be classified at all.
    pub unclassified: usize,
}

impl ConfusionMetrics {
    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        let d = self.true_positives + self.false_positives;
        (d > 0).then(|| self.true_positives as f64 / d as f64)
    }

    /// `None` when the truth holds no positives.
    pub fn recall(&self) -> Option<f64> {
        let d = self.true_positives + self.false_negatives;
        (d > 0).then(|| self.true_positives as f64 / d as f64)
    }

    pub fn evaluated(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

pub fn confusion_metrics(records: &[ValidationRecord], truth: GroundTruth<'_>) -> ConfusionMetrics {
    let mut m = ConfusionMetrics::default();
    for rec in records {
        if !rec.result.is_classified() {
            m.unclassified += 1;
            continue;
        }
        let actual = match truth {
            GroundTruth::Registration => rec.is_helicopter_ac_reg,
            GroundTruth::Labels(labels) => labels.get(&rec.result.track_id).copied(),
        };
        match (rec.result.pred_is_helicopter, actual) {
            (_, None) => m.no_truth += 1,
            (true, Some(true)) => m.true_positives += 1,
            (true, Some(false)) => m.false_positives += 1,
            (false, Some(false)) => m.true_negatives += 1,
            (false, Some(true)) => m.false_negatives += 1,
        }
    }
    m
}

fn fmt_ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.6}"))
}

/// One row per ground-truth source.
pub fn write_metrics<W: std::io::Write>(w: W, rows: &[(&str, ConfusionMetrics)]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "truth", "tp", "fp", "tn", "fn", "no_truth", "unclassified", "precision", "recall",
    ])?;
    for (name, m) in rows {
        wtr.write_record([
            name.to_string(),
            m.true_positives.to_string(),
            m.false_positives.to_string(),
            m.true_negatives.to_string(),
            m.false_negatives.to_string(),
            m.no_truth.to_string(),
            m.unclassified.to_string(),
            fmt_ratio(m.precision()),
            fmt_ratio(m.recall()),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VennCounts {
    pub both: usize,
    pub autoencoder_only: usize,
    pub baseline_only: usize,
}

impl VennCounts {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["both", "autoencoder_only", "baseline_only"])?;
        wtr.write_record([
            self.both.to_string(),
            self.autoencoder_only.to_string(),
            self.baseline_only.to_string(),
        ])?;
        wtr.flush()?;
        Ok(())
    }

    pub fn text_block(&self) -> String {
        format!(
            "helicopters found by both methods:     {}\n\
             found by the autoencoder only:         {}\n\
             found by the type-list baseline only:  {}\n\
             autoencoder total: {}  baseline total: {}\n",
            self.both,
            self.autoencoder_only,
            self.baseline_only,
            self.both + self.autoencoder_only,
            self.both + self.baseline_only,
        )
    }
}

/// Overlap of two sets of track ids flagged as helicopters. Duplicates are
/// counted once.
pub fn venn_compare<A, B>(autoencoder: A, baseline: B) -> VennCounts
where
    A: IntoIterator,
    A::Item: AsRef<str>,
    B: IntoIterator,
    B::Item: AsRef<str>,
{
    let a: BTreeSet<String> = autoencoder.into_iter().map(|s| s.as_ref().to_string()).collect();
    let b: BTreeSet<String> = baseline.into_iter().map(|s| s.as_ref().to_string()).collect();
    let both = a.intersection(&b).count();
    VennCounts {
        both,
        autoencoder_only: a.len() - both,
        baseline_only: b.len() - both,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoTypeRow {
    pub track_id: String,
    /// Empty when the track declared no type.
    pub declared_type: String,
    pub model: String,
    pub manufacturer: String,
    pub type_designator: String,
}

/// Registration details for matched tracks that declared a pseudo type or
/// no type at all.
pub fn resolve_pseudo_types(records: &[ValidationRecord], types: &HelicopterTypes) -> Vec<PseudoTypeRow> {
    records
        .iter()
        .filter(|r| r.matched != MatchKind::Unmatched)
        .filter(|r| r.declared_type.as_deref().is_none_or(|d| d.trim().is_empty() || types.is_pseudo(d)))
        .filter_map(|r| {
            let model = r.model.as_deref().filter(|m| !m.is_empty())?;
            Some(PseudoTypeRow {
                track_id: r.result.track_id.clone(),
                declared_type: r.declared_type.clone().unwrap_or_default(),
                model: model.to_string(),
                manufacturer: r.manufacturer.clone().unwrap_or_default(),
                type_designator: r.type_designator.clone().unwrap_or_default(),
            })
        })
        .collect()
}

pub fn write_pseudo_types<W: std::io::Write>(w: W, rows: &[PseudoTypeRow]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["track_id", "declared_type", "model", "manufacturer", "type_designator"])?;
    for r in rows {
        wtr.write_record([&r.track_id, &r.declared_type, &r.model, &r.manufacturer, &r.type_designator])?;
    }
    wtr.flush()?;
    Ok(())
}

pub const VALIDATION_HEADER: [&str; 15] = [
    "track_id",
    "mae",
    "runway_score",
    "pred_is_helicopter",
    "reasons",
    "declared_type",
    "matched",
    "n_number",
    "mode_s_code",
    "aircraft_class",
    "is_helicopter_ac_reg",
    "model",
    "manufacturer",
    "type_designator",
    "class_conflict",
];

fn s_opt(v: &Option<String>) -> String {
    v.clone().unwrap_or_default()
}

pub fn write_validation<W: std::io::Write>(w: W, records: &[ValidationRecord]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(VALIDATION_HEADER)?;
    for v in records {
        let r = &v.result;
        let reasons: Vec<String> = r.reasons.iter().map(ToString::to_string).collect();
        wtr.write_record([
            r.track_id.clone(),
            r.mae.map(|x| x.to_string()).unwrap_or_default(),
            r.runway_score.map(|x| x.to_string()).unwrap_or_default(),
            r.pred_is_helicopter.to_string(),
            reasons.join(";"),
            s_opt(&v.declared_type),
            v.matched.to_string(),
            s_opt(&v.n_number),
            s_opt(&v.mode_s_code),
            v.aircraft_class.map(|c| c.to_string()).unwrap_or_default(),
            v.is_helicopter_ac_reg.map(|b| b.to_string()).unwrap_or_default(),
            s_opt(&v.model),
            s_opt(&v.manufacturer),
            s_opt(&v.type_designator),
            v.class_conflict.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_validation<R: std::io::Read>(r: R) -> Result<Vec<ValidationRecord>, ValidateError> {
    let fmt_err = |m: String| ValidateError::Format(m);
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| fmt_err(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != VALIDATION_HEADER {
        return Err(fmt_err(format!("unexpected validation header {header:?}")));
    }
    let opt_s = |s: &str| (!s.is_empty()).then(|| s.to_string());
    let opt_f = |s: &str| -> Result<Option<f64>, ValidateError> {
        opt_s(s)
            .map(|v| v.parse().map_err(|e| fmt_err(format!("bad number {v:?}: {e}"))))
            .transpose()
    };
    let boolean = |s: &str| -> Result<bool, ValidateError> { s.parse().map_err(|e| fmt_err(format!("bad boolean {s:?}: {e}"))) };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fmt_err(e.to_string()))?;
        let reasons: Vec<Reason> = if rec[4].is_empty() {
            Vec::new()
        } else {
            rec[4].split(';').map(str::parse).collect::<Result<_, _>>().map_err(fmt_err)?
        };
        out.push(ValidationRecord {
            result: ClassificationResult {
                track_id: rec[0].to_string(),
                mae: opt_f(&rec[1])?,
                runway_score: opt_f(&rec[2])?,
                pred_is_helicopter: boolean(&rec[3])?,
                reasons,
            },
            declared_type: opt_s(&rec[5]),
            matched: rec[6].parse().map_err(fmt_err)?,
            n_number: opt_s(&rec[7]),
            mode_s_code: opt_s(&rec[8]),
            aircraft_class: opt_s(&rec[9]).map(|c| c.parse()).transpose().map_err(fmt_err)?,
            is_helicopter_ac_reg: opt_s(&rec[10]).map(|b| boolean(&b)).transpose()?,
            model: opt_s(&rec[11]),
            manufacturer: opt_s(&rec[12]),
            type_designator: opt_s(&rec[13]),
            class_conflict: boolean(&rec[14])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::{decide, Thresholds};

    fn types() -> HelicopterTypes {
        HelicopterTypes::new(["EC30", "AS50", "R44"], DEFAULT_PSEUDO_TYPES)
    }

    fn track(id: &str, declared: Option<&str>, tail: Option<&str>, mode_s: Option<&str>) -> Track {
        Track {
            track_id: id.into(),
            callsign: None,
            mode_s: mode_s.map(Into::into),
            tail_number: tail.map(Into::into),
            declared_type: declared.map(Into::into),
            arrival_airport: None,
            runway_id: None,
            scratchpad_runway: None,
            points: Vec::new(),
        }
    }

    fn reg(n: &str, m: &str, model: &str, class: AircraftClass) -> RegistrationRecord {
        RegistrationRecord {
            n_number: n.into(),
            mode_s_code: Some(m.into()),
            model: model.into(),
            manufacturer: "EUROCOPTER".into(),
            aircraft_class: class,
            type_designator: Some("EC30".into()),
        }
    }

    fn result(id: &str, pred: bool) -> ClassificationResult {
        let th = Thresholds::new(0.0005, 80.0, 0.5).unwrap();
        decide(id, if pred { 0.0001 } else { 0.01 }, 0.21, &th)
    }

    fn ec130_table() -> RegistrationTable {
        RegistrationTable::from_records([
            reg("N208SH", "A1B153", "EC130 T2", "ROTOCRAFT".parse().unwrap()),
            reg("N100AB", "A00001", "172S", AircraftClass::FixedWing),
        ])
    }

    #[test]
    fn baseline_uses_type_list_and_pseudo_labels() {
        let t = types();
        assert!(rule_based_baseline(&track("a", Some("EC30"), None, None), &t));
        assert!(rule_based_baseline(&track("b", Some("HELO"), None, None), &t));
        assert!(rule_based_baseline(&track("c", Some(" heli "), None, None), &t));
        assert!(!rule_based_baseline(&track("d", None, None, None), &t));
        assert!(!rule_based_baseline(&track("e", Some("C172"), None, None), &t));
    }

    #[test]
    fn join_prefers_tail_then_mode_s() {
        let table = ec130_table();
        let tracks = vec![
            track("T1", Some("HELO"), Some("N208SH"), None),
            track("T2", None, None, Some("A1B153")),
            track("T3", None, None, None),
        ];
        let results = vec![result("T1", true), result("T2", true), result("T3", false)];
        let recs = join_registration(&results, &tracks, &table);
        assert_eq!(recs[0].matched, MatchKind::ByTail);
        assert_eq!(recs[0].aircraft_class, Some(AircraftClass::Rotorcraft));
        assert_eq!(recs[0].is_helicopter_ac_reg, Some(true));
        assert_eq!(recs[0].model.as_deref(), Some("EC130 T2"));
        assert_eq!(recs[1].matched, MatchKind::ByModeS);
        assert_eq!(recs[2].matched, MatchKind::Unmatched);
        assert_eq!(recs[2].is_helicopter_ac_reg, None);
        for (r, v) in results.iter().zip(&recs) {
            assert_eq!(r, &v.result);
        }
    }

    #[test]
    fn conflicting_keys_are_flagged_and_tail_wins() {
        let table = ec130_table();
        let tracks = vec![track("T1", None, Some("N208SH"), Some("A00001"))];
        let recs = join_registration(&[result("T1", true)], &tracks, &table);
        assert_eq!(recs[0].matched, MatchKind::ByTail);
        assert!(recs[0].class_conflict);
        assert_eq!(recs[0].is_helicopter_ac_reg, Some(true));
    }

    #[test]
    fn metrics_degenerate_cases() {
        let table = ec130_table();
        let tracks = vec![
            track("T1", None, Some("N208SH"), None),
            track("T2", None, Some("N100AB"), None),
            track("T3", None, None, None),
        ];
        let perfect = join_registration(
            &[result("T1", true), result("T2", false), result("T3", true)],
            &tracks,
            &table,
        );
        let m = confusion_metrics(&perfect, GroundTruth::Registration);
        assert_eq!((m.precision(), m.recall()), (Some(1.0), Some(1.0)));
        assert_eq!(m.no_truth, 1);

        let none = join_registration(&[result("T1", false), result("T2", false)], &tracks, &table);
        let m = confusion_metrics(&none, GroundTruth::Registration);
        assert_eq!(m.recall(), Some(0.0));
        assert_eq!(m.precision(), None);
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[("registration", m)]).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",N/A,0.000000"));
    }

    #[test]
    fn venn_identity_and_swap() {
        let a = ["x", "y", "z", "x"];
        assert_eq!(
            venn_compare(a, a),
            VennCounts {
                both: 3,
                autoencoder_only: 0,
                baseline_only: 0
            }
        );
        let b = ["y", "w"];
        let ab = venn_compare(a, b);
        let ba = venn_compare(b, a);
        assert_eq!((ab.both, ab.autoencoder_only, ab.baseline_only), (ba.both, ba.baseline_only, ba.autoencoder_only));
        assert!(ab.text_block().contains("autoencoder total: 3  baseline total: 2"));
    }

    #[test]
    fn pseudo_types_resolved_only_for_matched_generic_labels() {
        let table = ec130_table();
        let tracks = vec![
            track("T1", Some("HELO"), Some("N208SH"), None),
            track("T2", Some("EC30"), Some("N208SH"), None),
            track("T3", Some("HELI"), None, None),
            track("T4", None, None, Some("A1B153")),
        ];
        let results: Vec<_> = ["T1", "T2", "T3", "T4"].iter().map(|id| result(id, true)).collect();
        let rows = resolve_pseudo_types(&join_registration(&results, &tracks, &table), &types());
        let ids: Vec<&str> = rows.iter().map(|r| r.track_id.as_str()).collect();
        assert_eq!(ids, ["T1", "T4"]);
        assert_eq!(rows[0].model, "EC130 T2");
        assert_eq!(rows[0].declared_type, "HELO");
        assert_eq!(rows[1].declared_type, "");
    }

    #[test]
    fn validation_csv_round_trip() {
        let table = ec130_table();
        let tracks = vec![track("T1", Some("HELO"), Some("N208SH"), None), track("T2", None, None, None)];
        let mut results = vec![result("T1", true), result("T2", false)];
        results.push(ClassificationResult::unclassifiable("T9", "no_approach"));
        let recs = join_registration(&results, &tracks, &table);
        let mut buf = Vec::new();
        write_validation(&mut buf, &recs).unwrap();
        let back = read_validation(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        assert_eq!(
            confusion_metrics(&back, GroundTruth::Registration),
            confusion_metrics(&recs, GroundTruth::Registration)
        );
    }
}
