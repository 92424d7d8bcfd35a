use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CliError, EvalArgs, FeaturizeArgs, GridArgs, IngestArgs, ModelArgs, ReportArgs, SynthArgs, TrainArgs};
use crate::evaluate::{
    assemble, cross_validate, fold_csv, grid_csv, summarize, train_model, CvResult, FeatureSet, GridResults, GridSpec,
    Metrics, DEFAULT_FOLDS,
};
use crate::features::{
    build_kdi, build_kds, window, CutoutSpec, KdfFile, KeyEncoding, Layout, Normalization, NormalizationKind,
    DEFAULT_LENGTH,
};
use crate::ingest::{pair_events, parse_events, synthesize, write_canonical, AdapterConfig, EventFormat, KeyEvent};
use crate::io::write_atomic;
use crate::models::{ModelConfig, ModelKind};
use crate::nn::{CellKind, Checkpoint, OptimizerKind, OptimizerSpec, Schedule, TrainConfig};
use crate::rng::derive_seed;

const DEFAULT_MIN_KEYSTROKES: usize = 20_000;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("--{flag} is required")))
}

fn parse_or<T: FromStr<Err = String>>(v: Option<&str>, default: T, flag: &str) -> Result<T, CliError> {
    match v {
        Some(s) => s.parse().map_err(|e| usage(format!("--{flag}: {e}"))),
        None => Ok(default),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn must_exist(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{} does not exist", path.display())))
    }
}

/// The directory an output file will be written into must already exist.
fn check_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(CliError::Io(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |w| w.write_all(text.as_bytes())).map_err(|e: std::io::Error| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    write_text(path, &text)
}

fn write_events(path: &Path, events: &[KeyEvent]) -> Result<(), CliError> {
    write_atomic(path, |w| write_canonical(w, events)).map_err(|e: std::io::Error| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UserFrom {
    Stem,
    Dir,
}

fn collect_files(root: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| io_err(root, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(root, e))?;
    entries.sort();
    for p in entries {
        if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')) {
            continue;
        }
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

#[derive(Debug, Default, Serialize)]
struct IngestReport {
    files: usize,
    events_parsed: usize,
    malformed_lines: usize,
    untracked_events: usize,
    dropped_downs: usize,
    orphan_ups: usize,
    keystrokes: usize,
    users: BTreeMap<String, usize>,
}

pub fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let format: EventFormat = parse_or(a.format.as_deref(), EventFormat::Canonical, "format")?;
    let input = required(a.input, "in")?;
    let out = required(a.out, "out")?;
    let user_from = match a.user_from.as_deref().unwrap_or("stem") {
        "stem" => UserFrom::Stem,
        "dir" => UserFrom::Dir,
        other => return Err(usage(format!("--user-from: expected stem or dir, got `{other}`"))),
    };
    let report_path = a.report.unwrap_or_else(|| {
        let mut s = out.clone().into_os_string();
        s.push(".report.json");
        PathBuf::from(s)
    });
    let adapter = match &a.adapter {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Some(
                serde_json::from_str::<AdapterConfig>(&text)
                    .map_err(|e| usage(format!("adapter {}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    must_exist(&input)?;
    check_parent(&out)?;
    check_parent(&report_path)?;

    let mut files = Vec::new();
    if input.is_dir() {
        collect_files(&input, &mut files)?;
    } else {
        files.push(input.clone());
    }
    let mut report = IngestReport { files: files.len(), ..Default::default() };
    let mut events = Vec::new();
    for f in &files {
        let user = match user_from {
            UserFrom::Stem => f.file_stem(),
            UserFrom::Dir => f.parent().and_then(|p| p.file_name()),
        }
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
        let file = std::fs::File::open(f).map_err(|e| io_err(f, e))?;
        let parsed = parse_events(file, format, adapter.as_ref(), &user).map_err(|e| match CliError::from(e) {
            CliError::Io(m) => io_err(f, m),
            CliError::Format(m) => CliError::Format(format!("{}: {m}", f.display())),
            other => other,
        })?;
        if parsed.malformed > 0 {
            let (line, _) = parsed.first_malformed.clone().unwrap_or_default();
            eprintln!("warning: {}: {} malformed lines (first at line {line})", f.display(), parsed.malformed);
        }
        report.malformed_lines += parsed.malformed;
        events.extend(parsed.events);
    }
    report.events_parsed = events.len();
    if events.is_empty() {
        eprintln!("warning: no events found in {}", input.display());
    }
    let pairing = pair_events(&events);
    report.untracked_events = pairing.untracked;
    report.dropped_downs = pairing.dropped_downs;
    report.orphan_ups = pairing.orphan_ups;
    let canonical: Vec<KeyEvent> = pairing.streams.iter().flat_map(|s| s.to_events()).collect();
    for s in &pairing.streams {
        report.keystrokes += s.keystrokes.len();
        report.users.insert(s.user_id.clone(), s.keystrokes.len());
    }
    write_events(&out, &canonical)?;
    write_json(&report_path, &report)?;
    println!(
        "ingested {} events from {} files: {} keystrokes for {} users, {} malformed lines, {} dropped downs",
        report.events_parsed,
        report.files,
        report.keystrokes,
        report.users.len(),
        report.malformed_lines,
        report.dropped_downs
    );
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let out = required(a.out, "out")?;
    let seed = a.seed.unwrap_or(0);
    let users = a.users.unwrap_or(4);
    let keystrokes = a.keystrokes.unwrap_or(DEFAULT_MIN_KEYSTROKES);
    check_parent(&out)?;
    let events = synthesize(seed, users, keystrokes)?;
    write_events(&out, &events)?;
    println!("wrote {} events for {users} users to {}", events.len(), out.display());
    Ok(())
}

fn parse_mode(s: Option<&str>) -> Result<Layout, CliError> {
    match s.unwrap_or("kdi").to_ascii_lowercase().as_str() {
        "kdi" => Ok(Layout::Kdi),
        "kds" => Ok(Layout::Kds),
        other => Err(usage(format!("--mode: expected kdi or kds, got `{other}`"))),
    }
}

pub fn featurize(a: FeaturizeArgs) -> Result<(), CliError> {
    let input = required(a.input, "in")?;
    let out = required(a.out, "out")?;
    let mode = parse_mode(a.mode.as_deref())?;
    let encoding: KeyEncoding = parse_or(a.encoding.as_deref(), KeyEncoding::OneHot, "encoding")?;
    let length = a.length.unwrap_or(DEFAULT_LENGTH);
    if length < 2 {
        return Err(usage(format!("--length must be at least 2, got {length}")));
    }
    let min_keystrokes = a.min_keystrokes.unwrap_or(DEFAULT_MIN_KEYSTROKES);
    let clip_ms = a.clip_ms.unwrap_or(Normalization::default().clip_ms);
    if !(clip_ms.is_finite() && clip_ms > 0.0) {
        return Err(usage(format!("--clip-ms must be positive, got {clip_ms}")));
    }
    let norm = Normalization { kind: NormalizationKind::ClipScale, clip_ms };
    must_exist(&input)?;
    check_parent(&out)?;

    let file = std::fs::File::open(&input).map_err(|e| io_err(&input, e))?;
    let parsed = parse_events(file, EventFormat::Canonical, None, "")?;
    let pairing = pair_events(&parsed.events);
    let mut subs = Vec::new();
    let mut counts = Vec::new();
    for stream in &pairing.streams {
        if stream.keystrokes.len() < min_keystrokes {
            eprintln!(
                "notice: excluding user {}: {} keystrokes, below --min-keystrokes {min_keystrokes}",
                stream.user_id,
                stream.keystrokes.len()
            );
            continue;
        }
        let w = window(stream, length)?;
        counts.push((stream.user_id.clone(), w.len()));
        subs.extend(w);
    }
    let kdf = match mode {
        Layout::Kdi => {
            let items: Vec<_> = subs.par_iter().map(|s| (s.user_id.clone(), build_kdi(s, &norm))).collect();
            KdfFile::from_kdis(&items, None, norm)
        }
        Layout::Kds => {
            let items: Vec<_> = subs.par_iter().map(|s| (s.user_id.clone(), build_kds(s, encoding, &norm))).collect();
            KdfFile::from_kds(&items, None, norm, encoding, length)?
        }
    };
    if subs.is_empty() {
        eprintln!("warning: no user met the keystroke threshold; writing an empty feature file");
    }
    kdf.save(&out).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => io_err(&out, m),
        other => other,
    })?;
    for (u, n) in &counts {
        println!("{u}\t{n} subsequences");
    }
    println!(
        "wrote {} {} samples of shape {:?} to {}",
        kdf.header.samples(),
        mode,
        &kdf.header.shape[1..],
        out.display()
    );
    Ok(())
}

/// Everything a training-style command needs, validated.
struct Job {
    data: FeatureSet,
    users: Vec<String>,
    model: ModelConfig,
    cutout: CutoutSpec,
    folds: usize,
    batch_size: usize,
    seed: u64,
    out: PathBuf,
}

fn model_config(a: &ModelArgs) -> Result<ModelConfig, CliError> {
    let flag_kind = match &a.model {
        Some(s) => Some(s.parse::<ModelKind>().map_err(|e| usage(format!("--model: {e}")))?),
        None => None,
    };
    let mut cfg = match &a.model_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            let cfg: ModelConfig =
                serde_json::from_str(&text).map_err(|e| usage(format!("model config {}: {e}", p.display())))?;
            if let Some(k) = flag_kind.filter(|k| *k != cfg.kind()) {
                return Err(usage(format!(
                    "--model {} disagrees with model config {} ({})",
                    k.name(),
                    p.display(),
                    cfg.kind().name()
                )));
            }
            cfg
        }
        None => ModelConfig::default_for(flag_kind.unwrap_or(ModelKind::Cnn)),
    };
    match &mut cfg {
        ModelConfig::Cnn(c) => {
            if a.rnn.is_some() {
                return Err(usage("--rnn applies to the cnn-rnn model only"));
            }
            if let Some(k) = a.kernel {
                c.kernel = k;
            }
            c.validate()?;
        }
        ModelConfig::CnnRnn(c) => {
            if let Some(r) = &a.rnn {
                c.rnn_kind = r.parse::<CellKind>().map_err(|e| usage(format!("--rnn: {e}")))?;
            }
            if let Some(k) = a.kernel {
                c.conv_kernel[0] = k;
            }
        }
    }
    Ok(cfg)
}

fn prepare(a: &ModelArgs) -> Result<Job, CliError> {
    let features = required(a.features.clone(), "features")?;
    let out = required(a.out.clone(), "out")?;
    let model = model_config(a)?;
    let enabled = match a.cutout.as_deref().unwrap_or("on") {
        "on" => true,
        "off" => false,
        other => return Err(usage(format!("--cutout: expected on or off, got `{other}`"))),
    };
    let seed = a.seed.unwrap_or(0);
    let d = CutoutSpec::default();
    let cutout = CutoutSpec {
        enabled,
        kdi_size: a.cutout_size.unwrap_or(d.kdi_size),
        kds_span: a.cutout_span.unwrap_or(d.kds_span),
        probability: a.cutout_prob.unwrap_or(d.probability),
        rng_seed: seed,
    };
    cutout.validate(None)?;
    let folds = a.folds.unwrap_or(DEFAULT_FOLDS);
    if folds < 2 {
        return Err(usage(format!("--folds must be at least 2, got {folds}")));
    }
    let batch_size = a.batch_size.unwrap_or(32);
    if batch_size == 0 {
        return Err(usage("--batch-size must be positive"));
    }
    must_exist(&features)?;
    let kdf = KdfFile::load(&features).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => io_err(&features, m),
        CliError::Format(m) => CliError::Format(format!("{}: {m}", features.display())),
        other => other,
    })?;
    let data = FeatureSet::from_kdf(&kdf);
    data.check_model(model.kind())
        .map_err(|e| CliError::Format(format!("{e}; featurize with --mode {}", wanted_mode(model.kind()))))?;
    if cutout.enabled {
        cutout.validate(Some(data.input_shape[1]))?;
    }
    let users = match &a.user {
        Some(us) => {
            for u in us {
                if !data.users.contains_key(u) {
                    return Err(usage(format!("user `{u}` is not in {}", features.display())));
                }
            }
            us.clone()
        }
        None => data.users.keys().cloned().collect(),
    };
    if users.is_empty() {
        return Err(usage(format!("{} holds no users", features.display())));
    }
    ensure_dir(&out)?;
    Ok(Job { data, users, model, cutout, folds, batch_size, seed, out })
}

fn wanted_mode(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Cnn => "kdi",
        ModelKind::CnnRnn => "kds",
    }
}

fn roc_csv(results: &[CvResult]) -> String {
    let mut s = String::from("user,fold,threshold,fpr,fnr\n");
    for r in results {
        for f in &r.folds {
            for p in &f.roc {
                let _ = writeln!(s, "{},{},{},{},{}", r.user_id, f.fold, p.threshold, p.fpr, p.fnr);
            }
        }
    }
    s
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let job = prepare(&a.common)?;
    let lr = a.lr.unwrap_or(job.model.default_learning_rate());
    let optimizer = OptimizerSpec {
        kind: parse_or(a.optimizer.as_deref(), OptimizerKind::Adam, "optimizer")?,
        learning_rate: lr,
        schedule: parse_or(a.schedule.as_deref(), Schedule::step(0.1), "schedule")?,
        ..OptimizerSpec::default()
    };
    optimizer.validate()?;
    let train = TrainConfig { epochs: a.epochs.unwrap_or(200), batch_size: job.batch_size, optimizer, seed: job.seed };
    if train.epochs == 0 {
        return Err(usage("--epochs must be positive"));
    }
    let counts = job.data.counts();
    let mut results = Vec::with_capacity(job.users.len());
    for user in &job.users {
        let set = assemble(user, &counts, job.seed)?;
        let cv = cross_validate(&job.data, &set, &job.model, &train, &job.cutout, job.folds, job.seed)?;
        let (net, report) = train_model(
            &job.data,
            &set.samples,
            &job.model,
            &train,
            &job.cutout,
            derive_seed(job.seed, 0x3000),
            derive_seed(job.seed, 0x3001),
        )
        .map_err(|e| CliError::Training(format!("user {user}, final model: {e}")))?;
        let metrics = serde_json::json!({
            "user_id": user,
            "mean_accuracy": cv.mean_accuracy,
            "mean_eer": cv.mean_eer,
            "final_loss": report.epoch_losses.last(),
        });
        let model_json = serde_json::to_value(&job.model).expect("model config serializes");
        let ckpt = Checkpoint::capture(&net, job.model.kind().name(), model_json, job.seed, train.epochs, metrics);
        let path = job.out.join(format!("{user}.ckpt.json"));
        ckpt.save(&path).map_err(|e| io_err(&path, e))?;
        println!("{user}\tmean accuracy {:.4}\tmean EER {:.4}", cv.mean_accuracy, cv.mean_eer);
        results.push(cv);
    }
    write_text(&job.out.join("folds.csv"), &fold_csv(&results))?;
    write_text(&job.out.join("roc.csv"), &roc_csv(&results))?;
    write_json(&job.out.join("metrics.json"), &results)?;
    let s = summarize(&results);
    println!("mean over {} users: accuracy {:.4}, EER {:.4}", s.users.len(), s.mean_accuracy, s.mean_eer);
    Ok(())
}

pub fn gridsearch(a: GridArgs) -> Result<(), CliError> {
    let name = a.grid.as_deref().unwrap_or("quick");
    let grid = GridSpec::preset(name).ok_or_else(|| usage(format!("--grid: expected paper or quick, got `{name}`")))?;
    let repeats = a.repeats.unwrap_or(1);
    if repeats == 0 {
        return Err(usage("--repeats must be positive"));
    }
    let job = prepare(&a.common)?;
    if job.folds != DEFAULT_FOLDS {
        return Err(usage(format!("grid search always uses {DEFAULT_FOLDS} folds")));
    }
    let base = TrainConfig { batch_size: job.batch_size, seed: job.seed, ..TrainConfig::default() };
    let counts = job.data.counts();
    let mut results: Vec<GridResults> = Vec::with_capacity(job.users.len());
    for user in &job.users {
        let set = assemble(user, &counts, job.seed)?;
        let g =
            crate::evaluate::grid_search(&job.data, &set, &job.model, &grid, &base, &job.cutout, repeats, job.seed)?;
        let best = g.best();
        println!(
            "{user}\t{} configurations\tbest: {} epochs, lr {}, {}, {} (EER {:.4})",
            g.rows.len(),
            best.cell.epochs,
            best.cell.learning_rate,
            best.cell.optimizer.name(),
            best.cell.schedule.label(),
            best.mean_eer
        );
        results.push(g);
    }
    write_text(&job.out.join("grid.csv"), &grid_csv(&results))?;
    write_json(&job.out.join("grid.json"), &results)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct EvalRecord {
    user: String,
    checkpoint: String,
    samples: usize,
    accuracy: f64,
    eer: f64,
    eer_threshold: f64,
    roc: Vec<crate::evaluate::RocPoint>,
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let features = required(a.features, "features")?;
    let out = required(a.out, "out")?;
    let checkpoints = required(a.checkpoint, "checkpoint")?;
    if checkpoints.is_empty() {
        return Err(usage("--checkpoint is required"));
    }
    let seed = a.seed.unwrap_or(0);
    must_exist(&features)?;
    for c in &checkpoints {
        must_exist(c)?;
    }
    let kdf = KdfFile::load(&features).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => io_err(&features, m),
        other => other,
    })?;
    let data = FeatureSet::from_kdf(&kdf);
    let mut loaded = Vec::with_capacity(checkpoints.len());
    for path in &checkpoints {
        let ckpt = Checkpoint::load(path).map_err(|e| match CliError::from(e) {
            CliError::Io(m) => io_err(path, m),
            CliError::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let kind: ModelKind =
            ckpt.model_kind.parse().map_err(|e: String| CliError::Format(format!("{}: {e}", path.display())))?;
        data.check_model(kind).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        if ckpt.input_shape != data.input_shape {
            return Err(CliError::Format(format!(
                "{} expects inputs {:?} but {} holds {:?}",
                path.display(),
                ckpt.input_shape,
                features.display(),
                data.input_shape
            )));
        }
        let user = ckpt
            .metrics
            .get("user_id")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| CliError::Format(format!("{} does not record the user it verifies", path.display())))?;
        if !data.users.contains_key(&user) {
            return Err(usage(format!("user `{user}` from {} is not in {}", path.display(), features.display())));
        }
        loaded.push((path.clone(), user, ckpt.network()?));
    }
    ensure_dir(&out)?;
    let counts = data.counts();
    let mut records = Vec::with_capacity(loaded.len());
    for (path, user, net) in &loaded {
        let set = assemble(user, &counts, seed)?;
        let scores = set
            .samples
            .par_iter()
            .map(|r| net.predict(data.get(r)).map(|p| p.data[0] as f64))
            .collect::<Result<Vec<_>, _>>()?;
        let m = Metrics::compute(&scores, &set.labels())?;
        println!("{user}\taccuracy {:.4}\tEER {:.4}", m.accuracy, m.eer);
        records.push(EvalRecord {
            user: user.clone(),
            checkpoint: path.display().to_string(),
            samples: scores.len(),
            accuracy: m.accuracy,
            eer: m.eer,
            eer_threshold: m.eer_threshold,
            roc: m.roc,
        });
    }
    let mut csv = String::from("user,samples,accuracy,eer,threshold\n");
    for r in &records {
        let _ = writeln!(csv, "{},{},{},{},{}", r.user, r.samples, r.accuracy, r.eer, r.eer_threshold);
    }
    write_text(&out.join("eval.csv"), &csv)?;
    write_json(&out.join("eval.json"), &records)?;
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<(), CliError> {
    let inputs = required(a.input, "in")?;
    if inputs.is_empty() {
        return Err(usage("--in is required"));
    }
    for p in &inputs {
        must_exist(p)?;
    }
    if let Some(p) = &a.out {
        check_parent(p)?;
    }
    if let Some(p) = &a.json {
        check_parent(p)?;
    }
    let mut results: Vec<CvResult> = Vec::new();
    for p in &inputs {
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        let mut r: Vec<CvResult> = serde_json::from_str(&text)
            .map_err(|e| CliError::Format(format!("{} is not a metrics file: {e}", p.display())))?;
        results.append(&mut r);
    }
    let s = summarize(&results);
    let mut csv = String::from("user,accuracy,eer\n");
    for u in &s.users {
        let _ = writeln!(csv, "{},{},{}", u.user, u.accuracy, u.eer);
    }
    let _ = writeln!(csv, "mean,{},{}", s.mean_accuracy, s.mean_eer);
    print!("{csv}");
    if let Some(p) = &a.out {
        write_text(p, &csv)?;
    }
    if let Some(p) = &a.json {
        write_json(p, &s)?;
    }
    Ok(())
}
