use std::fs;
use std::path::{Path, PathBuf};

use litcal_core::baselines::{fit_temperature, pik_train, PikConfig, PikProbe, Temperature, TemperatureFitConfig};
use litcal_core::calibrator::{score_predictions, Calibrator};
use litcal_core::claimeval::{evaluate_paragraphs, FixtureJudge};
use litcal_core::litcab::{train, train_with_holdout, BiasHead, TrainConfig};
use litcal_core::metrics::{read_predictions, write_predictions, CalibrationReport, Prediction};
use litcal_core::records::{default_sidecar_path, read_dataset, write_dataset, Dataset, Generation};
use litcal_core::toylm::{generate_fixture, ToyConfig};
use litcal_core::Error;
use log::{info, warn};

use crate::args::*;
use crate::config::Settings;
use crate::error::CliError;

pub const TRAIN_FILE: &str = "train.jsonl";
pub const EVAL_FILE: &str = "eval.jsonl";
pub const HEAD_FILE: &str = "head.lchd";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const TEMPERATURE_FILE: &str = "temperature.lcts";
pub const PROBE_FILE: &str = "probe.lcpk";
pub const SCORES_FILE: &str = "scores.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CLAIMS_FILE: &str = "claim_predictions.csv";
pub const RELIABILITY_FILE: &str = "reliability.csv";
pub const RELIABILITY_SVG: &str = "reliability.svg";

const DEFAULT_Q: [f64; 4] = [30.0, 50.0, 60.0, 100.0];
const DEFAULT_P: [f64; 6] = [0.0, 0.3, 0.5, 0.6, 0.8, 0.9];

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(command: Command, settings: &Settings) -> CliResult {
    match command {
        Command::Simulate(a) => simulate(a, settings),
        Command::TrainLitcab(a) => train_litcab(a, settings),
        Command::FitTemperature(a) => fit_temperature_cmd(a, settings),
        Command::TrainPik(a) => train_pik(a, settings),
        Command::Score(a) => score(a, settings),
        Command::Evaluate(a) => evaluate(a, settings),
        Command::Claims(a) => claims(a, settings),
        Command::Report(a) => report(a, settings),
    }
}

/// Fails with a missing-file error before any work if an input is absent.
fn require_inputs(paths: &[&Path]) -> CliResult {
    for p in paths {
        if !p.is_file() {
            return Err(Error::MissingFile { path: p.to_path_buf() }.into());
        }
    }
    Ok(())
}

fn out_dir(out: OutArgs, s: &Settings) -> CliResult<PathBuf> {
    let dir: PathBuf = s.pick(out.out, "out", PathBuf::from("."))?;
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

struct DatasetPaths {
    text: PathBuf,
    sidecar: PathBuf,
}

fn dataset_paths(d: DatasetArgs, s: &Settings) -> CliResult<DatasetPaths> {
    let text = s.path(d.dataset, "dataset")?;
    let sidecar = s.optional(d.sidecar, "sidecar")?.unwrap_or_else(|| default_sidecar_path(&text));
    Ok(DatasetPaths { text, sidecar })
}

fn load(paths: &DatasetPaths) -> CliResult<Dataset> {
    let ds = read_dataset(&paths.text, &paths.sidecar)?;
    info!(
        "loaded {} generations from {}",
        ds.generation_count(),
        paths.text.display()
    );
    Ok(ds)
}

enum CalibratorSource {
    None,
    LitCab(PathBuf),
    Temperature(PathBuf),
    Pik(PathBuf),
}

impl CalibratorSource {
    fn resolve(a: CalibratorArgs, s: &Settings) -> CliResult<Self> {
        let kind = s.pick(a.calibrator, "calibrator", CalibratorKind::None)?;
        Ok(match kind {
            CalibratorKind::None => CalibratorSource::None,
            CalibratorKind::Litcab => CalibratorSource::LitCab(s.path(a.head, "head")?),
            CalibratorKind::Temperature => CalibratorSource::Temperature(s.path(a.temperature, "temperature")?),
            CalibratorKind::Pik => CalibratorSource::Pik(s.path(a.probe, "probe")?),
        })
    }

    fn path(&self) -> Option<&Path> {
        match self {
            CalibratorSource::None => None,
            CalibratorSource::LitCab(p) | CalibratorSource::Temperature(p) | CalibratorSource::Pik(p) => Some(p),
        }
    }

    fn load(&self) -> CliResult<Calibrator> {
        Ok(match self {
            CalibratorSource::None => Calibrator::None,
            CalibratorSource::LitCab(p) => Calibrator::LitCab(BiasHead::load(p)?),
            CalibratorSource::Temperature(p) => Calibrator::Temperature(Temperature::load(p)?),
            CalibratorSource::Pik(p) => Calibrator::Pik(PikProbe::load(p)?),
        })
    }
}

fn selective(a: SelectiveArgs, s: &Settings) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let qs = s.pick(a.q, "q", DEFAULT_Q.to_vec())?;
    let ps = s.pick(a.p, "p", DEFAULT_P.to_vec())?;
    if let Some(q) = qs.iter().find(|q| !(**q > 0.0 && **q <= 100.0)) {
        return Err(CliError::usage(format!("--q values must lie in (0, 100], got {q}")));
    }
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::usage(format!("--p values must lie in [0, 1], got {p}")));
    }
    Ok((qs, ps))
}

fn simulate(a: SimulateArgs, s: &Settings) -> CliResult {
    let toy_path = s.optional(a.toy_config, "toy-config")?;
    if let Some(p) = &toy_path {
        require_inputs(&[p])?;
    }
    let mut cfg = match &toy_path {
        Some(p) => ToyConfig::from_toml(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => ToyConfig::default(),
    };
    cfg.seed = s.pick(a.seed, "seed", cfg.seed)?;
    cfg.n_questions = s.pick(a.n_questions, "n-questions", cfg.n_questions)?;
    cfg.miscalibration_strength = s.pick(a.strength, "strength", cfg.miscalibration_strength)?;
    let dir = out_dir(a.out, s)?;
    let fixture = generate_fixture(&cfg)?;
    for (name, groups) in [(TRAIN_FILE, fixture.train), (EVAL_FILE, fixture.eval)] {
        let text = dir.join(name);
        let n = groups.len();
        write_dataset(&Dataset::new(fixture.header.clone(), groups), &text, &default_sidecar_path(&text))?;
        info!("wrote {n} questions to {}", text.display());
    }
    Ok(())
}

fn train_litcab(a: TrainLitcabArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    require_inputs(&[&paths.text, &paths.sidecar])?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        batch_size: s.pick(a.batch_size, "batch-size", defaults.batch_size)?,
        learning_rate: s.pick(a.lr, "lr", defaults.learning_rate)?,
        max_epochs: s.pick(a.epochs, "epochs", defaults.max_epochs)?,
        patience: s.pick(a.patience, "patience", defaults.patience)?,
        seed: s.pick(a.seed, "seed", defaults.seed)?,
    };
    let val_fraction = s.pick(a.val_fraction, "val-fraction", litcal_core::litcab::DEFAULT_VAL_FRACTION)?;
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let (head, log) = if val_fraction == 0.0 {
        train(&ds.header, &ds.groups, &[], &cfg)?
    } else {
        train_with_holdout(&ds.header, &ds.groups, val_fraction, &cfg)?
    };
    info!(
        "trained {} epochs; best epoch {} (val loss {:.6} -> {:.6})",
        log.epochs.len(),
        log.best_epoch,
        log.initial_val_loss,
        log.epochs
            .iter()
            .rfind(|e| e.best)
            .map_or(log.initial_val_loss, |e| e.val_loss)
    );
    head.save(&dir.join(HEAD_FILE))?;
    log.write_csv(&dir.join(TRAIN_LOG_FILE))?;
    Ok(())
}

fn labeled_generations(ds: &Dataset) -> Vec<&Generation> {
    ds.labeled_view()
        .into_iter()
        .map(|(_, g)| g)
        .filter(|g| g.correctness.is_some())
        .collect()
}

fn fit_temperature_cmd(a: FitTemperatureArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    require_inputs(&[&paths.text, &paths.sidecar])?;
    let d = TemperatureFitConfig::default();
    let cfg = TemperatureFitConfig {
        learning_rate: s.pick(a.lr, "lr", d.learning_rate)?,
        max_iters: s.pick(a.max_iters, "max-iters", d.max_iters)?,
        batch_size: s.optional(a.batch_size, "batch-size")?,
        seed: s.pick(a.seed, "seed", d.seed)?,
    };
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let t = fit_temperature(&labeled_generations(&ds), &cfg)?;
    info!("fitted temperature {}", t.value());
    t.save(&dir.join(TEMPERATURE_FILE))?;
    Ok(())
}

fn train_pik(a: TrainPikArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    require_inputs(&[&paths.text, &paths.sidecar])?;
    let d = PikConfig::default();
    let cfg = PikConfig {
        learning_rate: s.pick(a.lr, "lr", d.learning_rate)?,
        max_iters: s.pick(a.max_iters, "max-iters", d.max_iters)?,
        batch_size: s.optional(a.batch_size, "batch-size")?,
        seed: s.pick(a.seed, "seed", d.seed)?,
    };
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let samples: Vec<(Vec<f32>, bool)> = labeled_generations(&ds)
        .into_iter()
        .map(|g| (g.steps[0].hidden.clone(), g.correctness.expect("labeled")))
        .collect();
    let probe = pik_train(&samples, &cfg)?;
    probe.save(&dir.join(PROBE_FILE))?;
    Ok(())
}

fn score(a: ScoreArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    let source = CalibratorSource::resolve(a.calibrator, s)?;
    let mut inputs = vec![paths.text.as_path(), paths.sidecar.as_path()];
    inputs.extend(source.path());
    require_inputs(&inputs)?;
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let calibrator = source.load()?;
    calibrator.check_header(&ds.header)?;

    let path = dir.join(SCORES_FILE);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::from(Error::InvalidArgument(e.to_string()));
    w.write_record(["id", "confidence", "log_confidence", "correct"]).map_err(csv_err)?;
    for (id, g) in ds.labeled_view() {
        let (value, log_value) = calibrator.confidence(g)?;
        let correct = match g.correctness {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        w.write_record([id.as_str(), &value.to_string(), &log_value.to_string(), correct])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn write_report(dir: &Path, name: &str, preds: &[Prediction], qs: &[f64], ps: &[f64]) -> CliResult<CalibrationReport> {
    let report = CalibrationReport::from_predictions(preds)?.with_selective(preds, qs, ps)?;
    report.write_csv(&dir.join(name))?;
    info!("ece {:.6} brier {:.6} over {} predictions", report.ece, report.brier, preds.len());
    Ok(report)
}

fn evaluate(a: EvaluateArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    let source = CalibratorSource::resolve(a.calibrator, s)?;
    let (qs, ps) = selective(a.selective, s)?;
    let mut inputs = vec![paths.text.as_path(), paths.sidecar.as_path()];
    inputs.extend(source.path());
    require_inputs(&inputs)?;
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let calibrator = source.load()?;
    calibrator.check_header(&ds.header)?;
    let preds = score_predictions(&calibrator, ds.labeled_view())?;
    if preds.is_empty() {
        return Err(Error::InvalidArgument("dataset has no labeled generations".into()).into());
    }
    write_predictions(&dir.join(PREDICTIONS_FILE), &preds)?;
    write_report(&dir, REPORT_FILE, &preds, &qs, &ps)?;
    Ok(())
}

fn claims(a: ClaimsArgs, s: &Settings) -> CliResult {
    let paths = dataset_paths(a.data, s)?;
    let source = CalibratorSource::resolve(a.calibrator, s)?;
    if matches!(source, CalibratorSource::Pik(_)) {
        return Err(CliError::usage("claims needs token-level probabilities; the pik calibrator has none"));
    }
    let fixtures = s.path(a.judge_fixtures, "judge-fixtures")?;
    let mut inputs = vec![paths.text.as_path(), paths.sidecar.as_path(), fixtures.as_path()];
    inputs.extend(source.path());
    require_inputs(&inputs)?;
    let dir = out_dir(a.out, s)?;
    let ds = load(&paths)?;
    let calibrator = source.load()?;
    calibrator.check_header(&ds.header)?;
    let judge = FixtureJudge::load(&fixtures)?;
    if ds.evals.is_empty() {
        return Err(Error::InvalidArgument("claims needs standalone (role eval) generations".into()).into());
    }
    let eval = evaluate_paragraphs(ds.evals.iter().map(|r| &r.generation), &judge, |g| calibrator.step_logprobs(g));
    write_predictions(&dir.join(CLAIMS_FILE), &eval.predictions)?;
    info!("{} claims scored", eval.predictions.len());
    let mut first_miss = None;
    for d in eval.diagnostics {
        warn!("generation {}: {}", d.generation, d.error);
        if first_miss.is_none() && matches!(d.error, Error::JudgeMiss { .. }) {
            first_miss = Some(d.error);
        }
    }
    match first_miss {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn report(a: ReportArgs, s: &Settings) -> CliResult {
    let input = s.path(a.predictions, "predictions")?;
    let (qs, ps) = selective(a.selective, s)?;
    let svg = a.svg || s.get::<bool>("svg")?.unwrap_or(false);
    require_inputs(&[&input])?;
    let dir = out_dir(a.out, s)?;
    let preds = read_predictions(&input)?;
    let report = write_report(&dir, RELIABILITY_FILE, &preds, &qs, &ps)?;
    if svg {
        let path = dir.join(RELIABILITY_SVG);
        fs::write(&path, report.to_svg()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
