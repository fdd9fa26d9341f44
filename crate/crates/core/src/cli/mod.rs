//! `helitrack` command line: one subcommand per pipeline stage.
//!
//! Stages talk to each other only through files in the output directory, so
//! any stage can be rerun on its own (e.g. recalibrate with a different
//! percentile, then reclassify). Each stage builds all of its outputs in
//! memory and commits them at the end through temporary files renamed into
//! place; a failing stage leaves earlier outputs untouched.

pub mod config;

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand};

use crate::autoencoder::{build, load_model, write_model, TaggedWindow};
use crate::identify::{calibrate, classify_all, histogram_report, read_results, track_mae, write_results, Thresholds};
use crate::synthgen::{generate, read_labels, write_labels, write_registration, TrackClass, HELICOPTER_TYPES};
use crate::trackdata::{
    featurize, fit_norm_stats, load_registration, load_runways, load_tracks, normalize, runway_for, window_arrival,
    write_tracks, MalformedPolicy, Runway, Track,
};
use crate::validate::{
    confusion_metrics, join_registration, load_type_list, resolve_pseudo_types, rule_based_baseline, venn_compare,
    write_metrics, write_pseudo_types, write_validation, GroundTruth, HelicopterTypes,
};
pub use config::{files, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "helitrack", version, about = "Find helicopter arrivals in surveillance tracks")]
pub struct Cli {
    /// Pipeline configuration (TOML). Missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for synthesis, initialization and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Abort on the first malformed input line instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Directory for every stage's outputs.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labeled synthetic tracks plus runway, registration and type files.
    Synth {
        /// Helicopter tracks (default 100)
        #[arg(long)]
        heli: Option<usize>,
        /// General-aviation tracks (default 100)
        #[arg(long)]
        ga: Option<usize>,
        /// Commercial tracks (default 100)
        #[arg(long)]
        com: Option<usize>,
    },
    /// Train the autoencoder on helicopter arrival windows.
    Train,
    /// Derive the reconstruction-error threshold from the training windows.
    Calibrate {
        /// Percentile of training MAEs used as δ, in (0, 100] (default 80)
        #[arg(long)]
        percentile: Option<f64>,
        /// Runway-score cutoff Δ (default 0.5)
        #[arg(long)]
        runway_score_threshold: Option<f64>,
        /// Histogram bins (default 20)
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Classify every track not used for training.
    Classify,
    /// Join results with registration data and compare with the type-list rule.
    Validate,
    /// Summarize thresholds, training and validation outputs.
    Report,
}

/// Outputs staged in memory until the stage finishes.
#[derive(Default)]
struct Staged(Vec<(PathBuf, Vec<u8>)>);

impl Staged {
    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.0.push((path, bytes));
    }

    fn csv(&mut self, path: PathBuf, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf).with_context(|| format!("formatting {}", path.display()))?;
        self.add(path, buf);
        Ok(())
    }

    fn commit(self) -> Result<()> {
        let mut temps = Vec::with_capacity(self.0.len());
        for (path, bytes) in &self.0 {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
            let tmp = path.with_file_name(format!(".{name}.partial"));
            fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            temps.push((tmp, path));
        }
        for (tmp, path) in temps {
            fs::rename(&tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
        }
        Ok(())
    }
}

fn require(path: &Path, role: &str) -> Result<()> {
    ensure!(path.is_file(), "{role} file not found: {}", path.display());
    Ok(())
}

fn policy(cfg: &PipelineConfig) -> MalformedPolicy {
    if cfg.strict {
        MalformedPolicy::Abort
    } else {
        MalformedPolicy::Skip
    }
}

fn read_tracks(cfg: &PipelineConfig) -> Result<Vec<Track>> {
    let path = cfg.paths.tracks();
    let load = load_tracks(&path, policy(cfg)).with_context(|| format!("loading tracks {}", path.display()))?;
    for (line, reason) in &load.rejects {
        log::warn!("{}:{line}: skipped: {reason}", path.display());
    }
    log::info!("{} tracks from {}", load.tracks.len(), path.display());
    Ok(load.tracks)
}

fn read_runways(cfg: &PipelineConfig) -> Result<Vec<Runway>> {
    let path = cfg.paths.runways();
    load_runways(&path).with_context(|| format!("loading runways {}", path.display()))
}

fn read_label_map(path: &Path) -> Result<HashMap<String, TrackClass>> {
    let file = fs::File::open(path).with_context(|| format!("labels file not found: {}", path.display()))?;
    let labels = read_labels(file).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(labels.into_iter().collect())
}

fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn cmd_synth(cfg: &PipelineConfig, heli: Option<usize>, ga: Option<usize>, com: Option<usize>) -> Result<()> {
    let mut spec = cfg.synth.clone();
    spec.helicopters = heli.unwrap_or(spec.helicopters);
    spec.general_aviation = ga.unwrap_or(spec.general_aviation);
    spec.commercial = com.unwrap_or(spec.commercial);
    let scenario = generate(&spec)?;
    let p = &cfg.paths;
    let mut out = Staged::default();
    let mut tracks = Vec::new();
    write_tracks(&mut tracks, &scenario.tracks)?;
    out.add(p.out(files::TRACKS), tracks);
    out.csv(p.out(files::LABELS), |b| write_labels(b, &scenario.labels))?;
    out.csv(p.out(files::REGISTRATION), |b| write_registration(b, &scenario.registration))?;
    let mut runways = csv::Writer::from_writer(Vec::new());
    for r in &scenario.runways {
        runways.serialize(r)?;
    }
    out.add(p.out(files::RUNWAYS), runways.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?);
    let types: String = HELICOPTER_TYPES.iter().map(|t| format!("{t}\n")).collect();
    out.add(p.out(files::HELICOPTER_TYPES), format!("# helicopter type designators\n{types}").into_bytes());
    out.commit()?;
    log::info!("wrote {} tracks to {}", scenario.tracks.len(), p.out_dir.display());
    Ok(())
}

fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    let p = &cfg.paths;
    for (path, role) in [(p.tracks(), "tracks"), (p.runways(), "runways"), (p.labels(), "labels")] {
        require(&path, role)?;
    }
    let tracks = read_tracks(cfg)?;
    let runways = read_runways(cfg)?;
    let labels = read_label_map(&p.labels())?;

    let want = cfg.split.training_helicopters;
    let mut ids = Vec::new();
    let mut raws = Vec::new();
    for t in tracks.iter().filter(|t| labels.get(&t.track_id) == Some(&TrackClass::Helicopter)) {
        if raws.len() == want {
            break;
        }
        let Some(rw) = runway_for(t, &runways) else {
            log::warn!("track {}: no runway, not used for training", t.track_id);
            continue;
        };
        match window_arrival(t, rw) {
            Ok(w) => {
                raws.push(featurize(&w, rw));
                ids.push(t.track_id.clone());
            }
            Err(e) => log::warn!("track {}: {e}, not used for training", t.track_id),
        }
    }
    if raws.len() < want {
        log::warn!("only {} usable helicopter tracks, {want} requested", raws.len());
    }
    let stats = fit_norm_stats(&raws).context("fitting normalization statistics")?;
    let windows = raws
        .iter()
        .map(|r| Ok(TaggedWindow::helicopter(normalize(r, &stats)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut model = build(&cfg.autoencoder)?;
    model.norm_stats = stats;
    let report = crate::autoencoder::train(&mut model, &windows, &cfg.train)?;
    log::info!(
        "trained on {} windows ({} validation), best epoch {} of {}",
        report.train_size,
        report.val_size,
        report.best_epoch,
        report.history.len()
    );

    let mut out = Staged::default();
    out.add(p.out(files::MODEL), write_model(&model));
    out.csv(p.out(files::LOSS_HISTORY), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["epoch", "train_mae", "val_mae"])?;
        for e in &report.history {
            w.write_record([e.epoch.to_string(), e.train_mae.to_string(), e.val_mae.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary = serde_json::json!({
        "training_windows": windows.len(),
        "fit_windows": report.train_size,
        "validation_windows": report.val_size,
        "epochs_run": report.history.len(),
        "best_epoch": report.best_epoch,
        "stopped_early": report.stopped_early,
    });
    out.add(p.out(files::TRAIN_SUMMARY), (serde_json::to_string_pretty(&summary)? + "\n").into_bytes());
    out.add(p.out(files::TRAIN_IDS), ids.iter().map(|i| format!("{i}\n")).collect::<String>().into_bytes());
    out.commit()
}

fn cmd_calibrate(cfg: &PipelineConfig, pct: Option<f64>, big_delta: Option<f64>, bins: Option<usize>) -> Result<()> {
    let p = &cfg.paths;
    let ids_path = p.out(files::TRAIN_IDS);
    for (path, role) in [
        (p.model(), "model"),
        (p.tracks(), "tracks"),
        (p.runways(), "runways"),
        (ids_path.clone(), "training id"),
    ] {
        require(&path, role)?;
    }
    let model = load_model(&p.model()).with_context(|| format!("loading model {}", p.model().display()))?;
    let tracks = read_tracks(cfg)?;
    let runways = read_runways(cfg)?;
    let by_id: HashMap<&str, &Track> = tracks.iter().map(|t| (t.track_id.as_str(), t)).collect();
    let ids = read_id_list(&ids_path)?;
    let maes = ids
        .iter()
        .map(|id| {
            let t = by_id.get(id.as_str()).with_context(|| format!("training track {id} missing from tracks file"))?;
            let rw = runway_for(t, &runways).with_context(|| format!("training track {id} has no runway"))?;
            Ok(track_mae(&model, t, rw)?)
        })
        .collect::<Result<Vec<f64>>>()?;

    let pct = pct.unwrap_or(cfg.thresholds.percentile);
    let delta = calibrate(&maes, pct)?;
    let th = Thresholds::new(
        delta,
        pct,
        big_delta.unwrap_or(cfg.thresholds.runway_score_threshold),
    )?;
    let hist = histogram_report(&maes, bins.unwrap_or(cfg.thresholds.histogram_bins))?;
    log::info!("MAE threshold {delta} at percentile {pct}");

    let mut out = Staged::default();
    out.add(p.out(files::THRESHOLDS), (serde_json::to_string_pretty(&th)? + "\n").into_bytes());
    out.csv(p.out(files::HISTOGRAM), |b| hist.write_csv(b))?;
    out.csv(p.out(files::TRAINING_MAE), |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["track_id", "mae"])?;
        for (id, m) in ids.iter().zip(&maes) {
            w.write_record([id.clone(), m.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.commit()
}

fn cmd_classify(cfg: &PipelineConfig) -> Result<()> {
    let p = &cfg.paths;
    for (path, role) in [
        (p.model(), "model"),
        (p.thresholds(), "thresholds"),
        (p.tracks(), "tracks"),
        (p.runways(), "runways"),
    ] {
        require(&path, role)?;
    }
    let model = load_model(&p.model()).with_context(|| format!("loading model {}", p.model().display()))?;
    let th = Thresholds::load(&p.thresholds())?;
    let tracks = read_tracks(cfg)?;
    let runways = read_runways(cfg)?;
    let ids_path = p.out(files::TRAIN_IDS);
    let training: HashSet<String> = if ids_path.is_file() {
        read_id_list(&ids_path)?.into_iter().collect()
    } else {
        log::warn!("{} not found; classifying every track", ids_path.display());
        HashSet::new()
    };
    let held_out: Vec<Track> = tracks.into_iter().filter(|t| !training.contains(&t.track_id)).collect();
    cfg.runway_score.validate()?;
    let results = classify_all(&model, &th, &held_out, &runways, &cfg.runway_score)?;
    let positives = results.iter().filter(|r| r.pred_is_helicopter).count();
    let unclassified = results.iter().filter(|r| !r.is_classified()).count();
    log::info!(
        "{} tracks classified: {positives} helicopters, {unclassified} unclassifiable",
        results.len()
    );
    let mut out = Staged::default();
    out.csv(p.out(files::RESULTS), |b| write_results(b, &results))?;
    out.commit()
}

fn cmd_validate(cfg: &PipelineConfig) -> Result<()> {
    let p = &cfg.paths;
    for (path, role) in [
        (p.results(), "results"),
        (p.tracks(), "tracks"),
        (p.registration(), "registration"),
        (p.helicopter_types(), "helicopter type list"),
    ] {
        require(&path, role)?;
    }
    let results_file = fs::File::open(p.results())?;
    let results = read_results(results_file).map_err(|e| anyhow::anyhow!("{}: {e}", p.results().display()))?;
    let tracks = read_tracks(cfg)?;
    let table = load_registration(&p.registration())?;
    for d in &table.duplicates {
        log::warn!(
            "{}:{}: duplicate key {} (first on line {}), row skipped",
            p.registration().display(),
            d.line,
            d.key,
            d.first_line
        );
    }
    let types = HelicopterTypes::new(load_type_list(&p.helicopter_types())?, &cfg.validate.pseudo_types);

    let records = join_registration(&results, &tracks, &table);
    let mut metrics = vec![("registration", confusion_metrics(&records, GroundTruth::Registration))];
    let labels_path = p.labels();
    if labels_path.is_file() {
        let labels: HashMap<String, bool> = read_label_map(&labels_path)?
            .into_iter()
            .map(|(id, c)| (id, c == TrackClass::Helicopter))
            .collect();
        metrics.push(("labels", confusion_metrics(&records, GroundTruth::Labels(&labels))));
    }

    let by_id: HashMap<&str, &Track> = tracks.iter().map(|t| (t.track_id.as_str(), t)).collect();
    let auto_ids = results.iter().filter(|r| r.pred_is_helicopter).map(|r| r.track_id.as_str());
    let base_ids = results
        .iter()
        .filter(|r| by_id.get(r.track_id.as_str()).is_some_and(|t| rule_based_baseline(t, &types)))
        .map(|r| r.track_id.as_str());
    let venn = venn_compare(auto_ids, base_ids);
    let pseudo = resolve_pseudo_types(&records, &types);

    let mut out = Staged::default();
    out.csv(p.out(files::VALIDATION), |b| write_validation(b, &records))?;
    out.csv(p.out(files::METRICS), |b| write_metrics(b, &metrics))?;
    out.csv(p.out(files::VENN_CSV), |b| venn.write_csv(b))?;
    out.add(p.out(files::VENN_TXT), venn.text_block().into_bytes());
    out.csv(p.out(files::PSEUDO_TYPES), |b| write_pseudo_types(b, &pseudo))?;
    out.commit()
}

fn section(report: &mut String, title: &str, path: &Path) {
    let _ = writeln!(report, "== {title} ({}) ==", path.file_name().and_then(|n| n.to_str()).unwrap_or(""));
    match fs::read_to_string(path) {
        Ok(text) => report.push_str(&text),
        Err(_) => report.push_str("(not available)\n"),
    }
    report.push('\n');
}

fn cmd_report(cfg: &PipelineConfig) -> Result<()> {
    let p = &cfg.paths;
    if !p.out_dir.is_dir() {
        bail!("output directory not found: {}", p.out_dir.display());
    }
    let mut report = String::new();
    section(&mut report, "training", &p.out(files::TRAIN_SUMMARY));
    section(&mut report, "thresholds", &p.thresholds());
    section(&mut report, "training MAE histogram", &p.out(files::HISTOGRAM));
    section(&mut report, "confusion metrics", &p.out(files::METRICS));
    section(&mut report, "comparison with the type-list rule", &p.out(files::VENN_TXT));
    print!("{report}");
    let mut out = Staged::default();
    out.add(p.out(files::REPORT), report.into_bytes());
    out.commit()
}

/// Resolves the configuration (file, then flags) and runs one stage.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed.or(cfg.seed) {
        cfg.apply_seed(seed);
    }
    cfg.strict |= cli.strict;
    if let Some(dir) = cli.out_dir {
        cfg.paths.out_dir = dir;
    }
    match cli.command {
        Command::Synth { heli, ga, com } => cmd_synth(&cfg, heli, ga, com),
        Command::Train => cmd_train(&cfg),
        Command::Calibrate {
            percentile,
            runway_score_threshold,
            bins,
        } => cmd_calibrate(&cfg, percentile, runway_score_threshold, bins),
        Command::Classify => cmd_classify(&cfg),
        Command::Validate => cmd_validate(&cfg),
        Command::Report => cmd_report(&cfg),
    }
}
