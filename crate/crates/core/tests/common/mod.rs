//! Oracles and criterion checks shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use helitrack::autoencoder::{build, read_model, write_model, AutoencoderError, AutoencoderSpec};
use helitrack::cli::{run, Cli};
use helitrack::identify::{calibrate, decide, Thresholds};
use helitrack::neuralcore::{mae, Conv1DLayer, ConvTranspose1DLayer, DenseLayer, Padding, Tensor3};
use helitrack::trackdata::{FeatureWindow, Track, FEATURE_COUNT, WINDOW_LEN};
use helitrack::validate::{rule_based_baseline, venn_compare, HelicopterTypes, VennCounts, DEFAULT_PSEUDO_TYPES};

/// `Ok(detail)` on success, `Err(detail)` on failure.
pub type Outcome = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, b: usize, l: usize, c: usize) -> Tensor3 {
    Tensor3::from_vec([b, l, c], uniform_vec(rng, b * l * c, 1.0)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------- oracles

/// Direct convolution: explicitly zero-pad, then slide the kernel.
#[allow(clippy::needless_range_loop)]
pub fn naive_conv1d(layer: &Conv1DLayer, x: &Tensor3) -> Vec<f64> {
    let [bn, l, cin] = x.shape();
    let (k, s, cout) = (layer.kernel_size, layer.stride, layer.out_channels);
    let (left, total) = match layer.padding {
        Padding::Same => ((k - 1) / 2, k - 1),
        Padding::Valid => (0, 0),
    };
    let padded_len = l + total;
    let out_len = (padded_len - k) / s + 1;
    let mut out = Vec::with_capacity(bn * out_len * cout);
    for b in 0..bn {
        let mut xp = vec![vec![0.0; cin]; padded_len];
        for t in 0..l {
            for c in 0..cin {
                xp[t + left][c] = x.get(b, t, c);
            }
        }
        for o in 0..out_len {
            for co in 0..cout {
                let mut acc = layer.bias[co];
                for j in 0..k {
                    for ci in 0..cin {
                        acc += xp[o * s + j][ci] * layer.weights[(j * cin + ci) * cout + co];
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

/// Sum of `|x - y|` accumulated one element at a time, divided by the count.
pub fn loop_mae(x: &[f64], y: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..x.len() {
        let d = x[i] - y[i];
        total += if d < 0.0 { -d } else { d };
        n += 1;
    }
    total / n as f64
}

/// Empirical quantile function as a polyline through `(i / (n - 1), x_(i))`,
/// evaluated by scanning for the segment that contains `p / 100`.
pub fn polyline_percentile(values: &[f64], p: f64) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n == 1 {
        return xs[0];
    }
    let q = p / 100.0;
    for i in 0..n - 1 {
        let (q0, q1) = (i as f64 / (n - 1) as f64, (i + 1) as f64 / (n - 1) as f64);
        if q >= q0 && q <= q1 {
            let t = (q - q0) / (q1 - q0);
            return if t == 0.0 { xs[i] } else if t == 1.0 { xs[i + 1] } else { xs[i] + t * (xs[i + 1] - xs[i]) };
        }
    }
    unreachable!("p outside [0, 100]")
}

// ------------------------------------------------------- gradient checking

const FD_STEP: f64 = 1e-5;

/// Largest relative error between analytic and central-difference gradients
/// of `loss` at `params`. Entries where both are below `floor` are compared
/// absolutely against the floor instead.
pub fn fd_max_rel_error(params: &[f64], analytic: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> f64 {
    let floor = 1e-8;
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let up = loss(&p);
        p[i] = orig - FD_STEP;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = analytic[i].abs().max(numeric.abs()).max(floor);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

/// Gradient check of one layer type: loss = <r, f(x)> for a fixed random
/// `r`, so the output gradient is `r`. Returns the worst relative error over
/// the weights, the bias and the input.
pub fn check_conv(seed: u64, transpose: bool) -> f64 {
    let mut g = rng(seed);
    // 5 * 5 * 8 weights + 8 biases = 208 parameters
    let (k, s, cin, cout) = (5, 2, 5, 8);
    let padding = if seed.is_multiple_of(2) { Padding::Same } else { Padding::Valid };
    let x = rand_tensor(&mut g, 2, 12, cin);
    let w = uniform_vec(&mut g, k * cin * cout, 0.5);
    let bias = uniform_vec(&mut g, cout, 0.5);

    macro_rules! layer_check {
        ($ty:ident) => {{
            let mk = |w: &[f64], b: &[f64]| $ty::new(k, s, cin, cout, padding).unwrap().with_params(w.to_vec(), b.to_vec()).unwrap();
            let layer = mk(&w, &bias);
            let y = layer.forward(&x).unwrap();
            let r = rand_tensor(&mut g, y.batch(), y.length(), y.channels());
            let grads = layer.backward(&x, &r).unwrap();
            let ew = fd_max_rel_error(&w, &grads.grad_weights, |p| dot(mk(p, &bias).forward(&x).unwrap().data(), r.data()));
            let eb = fd_max_rel_error(&bias, &grads.grad_bias, |p| dot(mk(&w, p).forward(&x).unwrap().data(), r.data()));
            let ex = fd_max_rel_error(x.data(), grads.grad_input.data(), |p| {
                let xi = Tensor3::from_vec(x.shape(), p.to_vec()).unwrap();
                dot(layer.forward(&xi).unwrap().data(), r.data())
            });
            ew.max(eb).max(ex)
        }};
    }
    if transpose {
        layer_check!(ConvTranspose1DLayer)
    } else {
        layer_check!(Conv1DLayer)
    }
}

pub fn check_dense(seed: u64) -> f64 {
    let mut g = rng(seed);
    // 20 * 10 weights + 10 biases
    let (n_in, n_out) = (20, 10);
    let x = rand_tensor(&mut g, 3, 4, 5);
    let w = uniform_vec(&mut g, n_in * n_out, 0.5);
    let bias = uniform_vec(&mut g, n_out, 0.5);
    let mk = |w: &[f64], b: &[f64]| DenseLayer::new(n_in, n_out).unwrap().with_params(w.to_vec(), b.to_vec()).unwrap();
    let layer = mk(&w, &bias);
    let r = rand_tensor(&mut g, 3, 1, n_out);
    let grads = layer.backward(&x, &r).unwrap();
    let ew = fd_max_rel_error(&w, &grads.grad_weights, |p| dot(mk(p, &bias).forward(&x).unwrap().data(), r.data()));
    let eb = fd_max_rel_error(&bias, &grads.grad_bias, |p| dot(mk(&w, p).forward(&x).unwrap().data(), r.data()));
    let ex = fd_max_rel_error(x.data(), grads.grad_input.data(), |p| {
        let xi = Tensor3::from_vec(x.shape(), p.to_vec()).unwrap();
        dot(layer.forward(&xi).unwrap().data(), r.data())
    });
    ew.max(eb).max(ex)
}

// ---------------------------------------------------------------- pipeline

pub fn cli(args: &[&str]) -> anyhow::Result<()> {
    let argv = std::iter::once("helitrack").chain(args.iter().copied());
    run(Cli::try_parse_from(argv)?)
}

/// synth (100/100/100) -> train -> calibrate -> classify -> validate -> report.
pub fn run_pipeline(dir: &Path, seed: u64) -> anyhow::Result<()> {
    let d = dir.to_str().unwrap();
    let s = seed.to_string();
    cli(&["--seed", &s, "--out-dir", d, "synth", "--heli", "100", "--ga", "100", "--com", "100"])?;
    for stage in ["train", "calibrate", "classify", "validate", "report"] {
        cli(&["--seed", &s, "--out-dir", d, stage])?;
    }
    Ok(())
}

/// Precision and recall of `results.csv` against `labels.csv`, counted
/// directly from the two files.
pub struct LabelScore {
    pub evaluated: usize,
    pub helicopters: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl LabelScore {
    pub fn recall(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn precision(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fp) as f64
    }
}

pub fn score_against_labels(dir: &Path) -> LabelScore {
    let mut labels = HashMap::new();
    let mut rdr = csv::Reader::from_path(dir.join("labels.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        labels.insert(rec[0].to_string(), &rec[1] == "helicopter");
    }
    let mut s = LabelScore {
        evaluated: 0,
        helicopters: 0,
        tp: 0,
        fp: 0,
        fn_: 0,
    };
    let mut rdr = csv::Reader::from_path(dir.join("results.csv")).unwrap();
    let pred_col = rdr.headers().unwrap().iter().position(|h| h == "pred_is_helicopter").unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let truth = labels[&rec[0]];
        let pred = &rec[pred_col] == "true";
        s.evaluated += 1;
        s.helicopters += truth as usize;
        match (pred, truth) {
            (true, true) => s.tp += 1,
            (true, false) => s.fp += 1,
            (false, true) => s.fn_ += 1,
            _ => {}
        }
    }
    s
}

pub const COMPARED_OUTPUTS: [&str; 13] = [
    "tracks.jsonl",
    "labels.csv",
    "registration.csv",
    "model.rtae",
    "loss_history.csv",
    "train_ids.txt",
    "thresholds.json",
    "mae_histogram.csv",
    "results.csv",
    "validation.csv",
    "metrics.csv",
    "venn.csv",
    "report.txt",
];

pub fn differing_outputs(a: &Path, b: &Path) -> Vec<&'static str> {
    COMPARED_OUTPUTS
        .iter()
        .copied()
        .filter(|name| std::fs::read(a.join(name)).unwrap() != std::fs::read(b.join(name)).unwrap())
        .collect()
}

// ---------------------------------------------------------------- fixtures

pub fn fixture_window(seed: u64) -> FeatureWindow {
    let mut g = rng(seed);
    let values = (0..WINDOW_LEN)
        .map(|_| {
            let mut row = [0.0; FEATURE_COUNT];
            for v in row.iter_mut() {
                *v = g.gen_range(-2.0..2.0);
            }
            row
        })
        .collect();
    FeatureWindow::new(format!("fixture{seed}"), values).unwrap()
}

pub fn bare_track(id: &str, declared: Option<&str>) -> Track {
    Track {
        track_id: id.into(),
        callsign: None,
        mode_s: None,
        tail_number: None,
        declared_type: declared.map(Into::into),
        arrival_airport: None,
        runway_id: None,
        scratchpad_runway: None,
        points: Vec::new(),
    }
}

/// Builds tracks and autoencoder predictions with the requested overlap,
/// then counts it the way the validate stage does: baseline from declared
/// types, autoencoder from predictions. `neither` tracks match nothing.
pub fn replay_venn(shared: usize, auto_only: usize, base_only: usize, neither: usize) -> VennCounts {
    let types = HelicopterTypes::new(["EC30", "AS50"], DEFAULT_PSEUDO_TYPES);
    let th = Thresholds::new(0.0005, 80.0, 0.5).unwrap();
    let mut tracks = Vec::new();
    let mut results = Vec::new();
    let groups = [
        (shared, Some("EC30"), true),
        (auto_only, None, true),
        (base_only, Some("HELO"), false),
        (neither, Some("C172"), false),
    ];
    for (g, &(n, declared, pred)) in groups.iter().enumerate() {
        for i in 0..n {
            let id = format!("G{g}-{i:04}");
            tracks.push(bare_track(&id, declared));
            let mae = if pred { 0.0001 } else { 0.01 };
            results.push(decide(&id, mae, 0.2, &th));
        }
    }
    let auto: Vec<&str> = results.iter().filter(|r| r.pred_is_helicopter).map(|r| r.track_id.as_str()).collect();
    let base: Vec<&str> = tracks
        .iter()
        .filter(|t| rule_based_baseline(t, &types))
        .map(|t| t.track_id.as_str())
        .collect();
    venn_compare(auto, base)
}

// ---------------------------------------------------------------- criteria

pub fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let seeds = [11u64, 12, 13, 14, 15, 16];
    let mut worst = [0.0f64; 3];
    for &s in &seeds {
        worst[0] = worst[0].max(check_conv(s, false));
        worst[1] = worst[1].max(check_conv(s, true));
        worst[2] = worst[2].max(check_dense(s));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "{} seeds; max rel err conv {:.2e}, convT {:.2e}, dense {:.2e}; {elapsed:.2} s",
        seeds.len(),
        worst[0],
        worst[1],
        worst[2]
    );
    if worst.iter().all(|&e| e < 1e-6) && elapsed < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn criterion_conv_oracle() -> Outcome {
    let mut g = rng(2024);
    let mut worst_direct: f64 = 0.0;
    for case in 0..20 {
        let k = g.gen_range(1..=7);
        let s = g.gen_range(1..=3);
        let cin = g.gen_range(1..=4);
        let cout = g.gen_range(1..=5);
        let padding = if case % 2 == 0 { Padding::Same } else { Padding::Valid };
        let l = g.gen_range(k..=k + 15);
        let b = g.gen_range(1..=3);
        let layer = Conv1DLayer::new(k, s, cin, cout, padding)
            .unwrap()
            .with_params(uniform_vec(&mut g, k * cin * cout, 1.0), uniform_vec(&mut g, cout, 1.0))
            .unwrap();
        let x = rand_tensor(&mut g, b, l, cin);
        let got = layer.forward(&x).unwrap();
        let want = naive_conv1d(&layer, &x);
        if got.data().len() != want.len() {
            return Err(format!("case {case}: length {} vs oracle {}", got.data().len(), want.len()));
        }
        for (a, b) in got.data().iter().zip(&want) {
            worst_direct = worst_direct.max((a - b).abs());
        }
    }
    let mut worst_adjoint: f64 = 0.0;
    for case in 0..20 {
        let k = g.gen_range(1..=7);
        let s = g.gen_range(1..=3);
        let cin = g.gen_range(1..=4);
        let cout = g.gen_range(1..=5);
        let ly = g.gen_range(2..=10);
        let lx = ly * s;
        let w = uniform_vec(&mut g, k * cin * cout, 1.0);
        // transpose maps cout -> cin with the channel axes of the weights swapped
        let mut wt = vec![0.0; w.len()];
        for j in 0..k {
            for a in 0..cin {
                for c in 0..cout {
                    wt[(j * cout + c) * cin + a] = w[(j * cin + a) * cout + c];
                }
            }
        }
        let conv = Conv1DLayer::new(k, s, cin, cout, Padding::Same)
            .unwrap()
            .with_params(w, vec![0.0; cout])
            .unwrap();
        let convt = ConvTranspose1DLayer::new(k, s, cout, cin, Padding::Same)
            .unwrap()
            .with_params(wt, vec![0.0; cin])
            .unwrap();
        let x = rand_tensor(&mut g, 2, lx, cin);
        let y = rand_tensor(&mut g, 2, ly, cout);
        let lhs = dot(conv.forward(&x).unwrap().data(), y.data());
        let rhs = dot(x.data(), convt.forward(&y).unwrap().data());
        let _ = case;
        worst_adjoint = worst_adjoint.max((lhs - rhs).abs());
    }
    let detail = format!("20 direct cases max |diff| {worst_direct:.2e}; 20 adjoint cases max |diff| {worst_adjoint:.2e}");
    if worst_direct < 1e-12 && worst_adjoint < 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn criterion_mae() -> Outcome {
    let mut g = rng(99);
    for case in 0..50 {
        let (b, l, c) = (g.gen_range(1..4), g.gen_range(1..120), g.gen_range(1..7));
        let x = rand_tensor(&mut g, b, l, c);
        let y = rand_tensor(&mut g, b, l, c);
        let got = mae(&x, &y).unwrap();
        let want = loop_mae(x.data(), y.data());
        if got.to_bits() != want.to_bits() {
            return Err(format!("case {case}: {got:e} != oracle {want:e}"));
        }
        if mae(&x, &x).unwrap() != 0.0 {
            return Err(format!("case {case}: mae(x, x) != 0"));
        }
    }
    Ok("50 random pairs bit-equal to the loop oracle; mae(x, x) = 0".into())
}

pub fn criterion_percentile() -> Outcome {
    let mut g = rng(5);
    let values: Vec<f64> = (0..100).map(|_| g.gen_range(0.0..3.0)).collect();
    let mut worst: f64 = 0.0;
    for p in [1.0, 50.0, 80.0, 99.0, 100.0] {
        let got = calibrate(&values, p).map_err(|e| e.to_string())?;
        worst = worst.max((got - polyline_percentile(&values, p)).abs());
    }
    let seq: Vec<f64> = (1..=100).map(f64::from).collect();
    let p80 = calibrate(&seq, 80.0).map_err(|e| e.to_string())?;
    let detail = format!("max |diff| vs oracle {worst:.2e} over p in {{1,50,80,99,100}}; p80(1..100) = {p80}");
    if worst < 1e-12 && (p80 - 80.2).abs() < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn criterion_decision() -> Outcome {
    let (d, big_d) = (0.0005, 0.5);
    let th = Thresholds::new(d, 80.0, big_d).unwrap();
    let maes = [("<", d * 0.5), ("=", d), (">", d * 2.0)];
    let scores = [("<", 0.25), ("=", big_d), (">", 0.75)];
    for (mn, m) in maes {
        for (sn, s) in scores {
            let r = decide("cell", m, s, &th);
            let expect = mn == "<" && sn == "<";
            if r.pred_is_helicopter != expect {
                return Err(format!("cell (mae {mn} δ, score {sn} Δ) gave {}", r.pred_is_helicopter));
            }
            if r.mae != Some(m) || r.runway_score != Some(s) {
                return Err("sub-scores not reported".into());
            }
        }
    }
    // δ from the default percentile over a fixture of training errors
    let training: Vec<f64> = (1..=40).map(|i| i as f64 * 1.5e-5).collect();
    let delta = calibrate(&training, helitrack::identify::DEFAULT_PERCENTILE).map_err(|e| e.to_string())?;
    let ec130 = decide(
        "ec130",
        0.00017365,
        0.21,
        &Thresholds::new(delta, 80.0, 0.5).unwrap(),
    );
    if !ec130.pred_is_helicopter {
        return Err(format!("EC130 fixture rejected: {:?}", ec130.reasons));
    }
    Ok(format!("only the (<,<) cell is positive; mae 0.00017365 / score 0.21 with δ={delta:.6} -> true"))
}

pub fn criterion_benchmark(dir: &Path, elapsed_s: f64) -> Outcome {
    let s = score_against_labels(dir);
    let detail = format!(
        "{} held-out tracks ({} helicopters): tp {} fp {} fn {}; recall {:.3} precision {:.3}; {elapsed_s:.1} s",
        s.evaluated,
        s.helicopters,
        s.tp,
        s.fp,
        s.fn_,
        s.recall(),
        s.precision()
    );
    if s.evaluated == 220 && s.recall() >= 0.85 && s.precision() >= 0.85 && elapsed_s < 600.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn criterion_venn() -> Outcome {
    let a = replay_venn(67, 892, 3, 400);
    let b = replay_venn(17, 375, 0, 250);
    let detail = format!(
        "1G4 fixture -> ({}, {}, {}); DVT fixture -> ({}, {}, {})",
        a.both, a.autoencoder_only, a.baseline_only, b.both, b.autoencoder_only, b.baseline_only
    );
    let want_a = VennCounts {
        both: 67,
        autoencoder_only: 892,
        baseline_only: 3,
    };
    let want_b = VennCounts {
        both: 17,
        autoencoder_only: 375,
        baseline_only: 0,
    };
    if a == want_a && b == want_b {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn criterion_determinism(a: &Path, b: &Path) -> Outcome {
    let diff = differing_outputs(a, b);
    if diff.is_empty() {
        Ok(format!("{} output files byte-identical across two runs", COMPARED_OUTPUTS.len()))
    } else {
        Err(format!("outputs differ: {diff:?}"))
    }
}

pub fn criterion_model_round_trip(dir: &Path) -> Outcome {
    let mut model = build(&AutoencoderSpec {
        seed: 21,
        ..AutoencoderSpec::default()
    })
    .map_err(|e| e.to_string())?;
    model.norm_stats.mean = [0.5, -1.0, 2.0, 0.8, 0.1, 0.9];
    model.norm_stats.std = [3.0, 2.5, 1.2, 0.3, 0.7, 0.2];
    let path = dir.join("roundtrip.rtae");
    helitrack::autoencoder::save_model(&model, &path).map_err(|e| e.to_string())?;
    let loaded = helitrack::autoencoder::load_model(&path).map_err(|e| e.to_string())?;
    let w = fixture_window(8);
    let (m0, m1) = (model.reconstruction_error(&w).unwrap(), loaded.reconstruction_error(&w).unwrap());
    if m0.to_bits() != m1.to_bits() {
        return Err(format!("MAE changed across save/load: {m0:e} vs {m1:e}"));
    }
    let bytes = write_model(&model);
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 2] ^= 0x01;
    let mut v99 = bytes.clone();
    v99[4..8].copy_from_slice(&99u32.to_le_bytes());
    let checks = [
        matches!(read_model(&flipped), Err(AutoencoderError::ChecksumMismatch { .. })),
        matches!(read_model(&bytes[..bytes.len() - 7]), Err(AutoencoderError::ChecksumMismatch { .. })),
        matches!(read_model(&v99), Err(AutoencoderError::VersionMismatch { found: 99, .. })),
    ];
    if checks.iter().all(|&c| c) {
        Ok(format!("MAE {m0:e} identical after reload; bit flip, truncation and version 99 rejected"))
    } else {
        Err(format!("corruption checks (flip, truncate, version) = {checks:?}"))
    }
}
