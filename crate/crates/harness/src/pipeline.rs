//! End-to-end steps shared by the subcommands and the experiment matrix.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emovc::converter::{convert_utterance, ConversionResult, Direction};
use emovc::corpus::{CorpusManifest, Split};
use emovc::dsp::{analyze, AnalysisConfig, FeatureSet, Provenance, SynthesisConfig};
use emovc::model::FeatureCombo;
use emovc::trainer::{
    hash_kv, read_loss_log, LossRecord, ModelBundle, Precision, TrainOutputs, Trainer, TrainingConfig, TrainingData,
};
use evalkit::{evaluate_pair, ComparisonTable, EvalReport, Probe};
use ndgrad::{Checkpoint, Scalar};
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::error::{io_err, HarnessError, Result};
use crate::plot;

pub const MODEL_FILE: &str = "model.emvc";
pub const LOSS_FILE: &str = "loss.csv";
pub const SETTINGS_FILE: &str = "settings.txt";

/// A trained bundle at whichever precision it was saved with.
#[derive(Debug, Clone)]
pub enum AnyBundle {
    F32(ModelBundle<f32>),
    F64(ModelBundle<f64>),
}

macro_rules! each {
    ($self:expr, $b:ident => $e:expr) => {
        match $self {
            AnyBundle::F32($b) => $e,
            AnyBundle::F64($b) => $e,
        }
    };
}

impl AnyBundle {
    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path)
            .map_err(|e| HarnessError::Usage(format!("cannot load model {}: {e}", path.display())))?;
        let bits = ck
            .records
            .iter()
            .find_map(|r| r.name.strip_prefix("cfg.precision="))
            .and_then(|v| v.parse().ok())
            .unwrap_or(64);
        Ok(match Precision::from_bits(bits)? {
            Precision::F32 => AnyBundle::F32(ModelBundle::from_checkpoint(&ck)?),
            Precision::F64 => AnyBundle::F64(ModelBundle::from_checkpoint(&ck)?),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        each!(self, b => Ok(b.save(path)?))
    }

    pub fn config(&self) -> &TrainingConfig {
        each!(self, b => &b.config)
    }

    pub fn config_hash(&self) -> u64 {
        each!(self, b => b.config_hash())
    }

    pub fn emotions(&self) -> (&str, &str) {
        each!(self, b => (b.emotion_a.as_str(), b.emotion_b.as_str()))
    }

    pub fn step(&self) -> u64 {
        each!(self, b => b.step)
    }

    pub fn convert(&self, fs: &FeatureSet, direction: Direction, synth: &SynthesisConfig) -> Result<ConversionResult> {
        let combo = self.config().combo;
        each!(self, b => Ok(convert_utterance(b, fs, direction, combo, synth, false)?))
    }
}

/// Genuine training-split features of the source and target emotions.
pub fn training_data(manifest: &CorpusManifest, settings: &Settings) -> Result<TrainingData> {
    let cfg = analysis_config(manifest);
    let a = manifest.extract(&settings.source, Split::Train, &cfg)?;
    let b = manifest.extract(&settings.target, Split::Train, &cfg)?;
    Ok(TrainingData::new(&settings.source, &a, &settings.target, &b, settings.training.combo)?)
}

pub fn analysis_config(manifest: &CorpusManifest) -> AnalysisConfig {
    AnalysisConfig {
        sample_rate: manifest.sample_rate,
        ..AnalysisConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub bundle: AnyBundle,
    pub log: Vec<LossRecord>,
    pub model_path: PathBuf,
    pub loss_path: PathBuf,
}

fn run_trainer<T: Scalar>(mut trainer: Trainer<T>, out: &TrainOutputs) -> Result<ModelBundle<T>> {
    trainer.run(out)?;
    Ok(trainer.into_bundle())
}

/// Train (or resume) and write the model, loss log, loss chart and settings
/// under `out_dir`.
pub fn train_model(settings: &Settings, data: &TrainingData, out_dir: &Path, resume: Option<&Path>) -> Result<TrainArtifacts> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let loss_path = out_dir.join(LOSS_FILE);
    let checkpoint_dir = (settings.training.checkpoint_interval > 0).then(|| out_dir.join("checkpoints"));
    if let Some(dir) = &checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    if resume.is_none() && loss_path.exists() {
        std::fs::remove_file(&loss_path).map_err(io_err(&loss_path))?;
    }
    let outputs = TrainOutputs {
        checkpoint_dir,
        loss_log: Some(loss_path.clone()),
    };
    let bundle = match resume {
        Some(path) => match AnyBundle::load(path)? {
            AnyBundle::F32(b) => AnyBundle::F32(run_trainer(Trainer::resume(b, data)?, &outputs)?),
            AnyBundle::F64(b) => AnyBundle::F64(run_trainer(Trainer::resume(b, data)?, &outputs)?),
        },
        None => match settings.training.precision {
            Precision::F32 => AnyBundle::F32(run_trainer(Trainer::new(data, &settings.training)?, &outputs)?),
            Precision::F64 => AnyBundle::F64(run_trainer(Trainer::new(data, &settings.training)?, &outputs)?),
        },
    };
    let model_path = out_dir.join(MODEL_FILE);
    bundle.save(&model_path)?;
    let log = read_loss_log(&loss_path)?;
    write(&out_dir.join("loss.svg"), &plot::loss_chart(&log))?;
    let mut run = settings.clone();
    run.training = bundle.config().clone();
    write_settings(&out_dir.join(SETTINGS_FILE), &run)?;
    Ok(TrainArtifacts {
        bundle,
        log,
        model_path,
        loss_path,
    })
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_settings(path: &Path, settings: &Settings) -> Result<()> {
    write(path, &format!("# config hash {:016x}\n{}", settings.hash(), settings.to_text()))
}

/// Held-out utterances of `emotion` in the evaluation split, keyed by name
/// with the emotion prefix removed.
fn keyed(manifest: &CorpusManifest, emotion: &str, split: Split) -> Result<BTreeMap<String, FeatureSet>> {
    let sets = manifest.extract(emotion, split, &analysis_config(manifest))?;
    let prefix = format!("{emotion}_");
    Ok(sets
        .into_iter()
        .map(|fs| {
            let name = fs.provenance.as_ref().map(|p| p.name.clone()).unwrap_or_default();
            (name.strip_prefix(&prefix).unwrap_or(&name).to_string(), fs)
        })
        .collect())
}

/// Source and target utterances with matching keys.
#[derive(Debug, Clone)]
pub struct PairedSet {
    pub source: String,
    pub target: String,
    pub pairs: Vec<(String, FeatureSet, FeatureSet)>,
}

pub fn paired_set(manifest: &CorpusManifest, source: &str, target: &str, split: Split) -> Result<PairedSet> {
    let src = keyed(manifest, source, split)?;
    let mut tgt = keyed(manifest, target, split)?;
    let mut pairs = Vec::new();
    for (key, s) in src {
        match tgt.remove(&key) {
            Some(t) => pairs.push((key, s, t)),
            None => log::warn!("no {target} counterpart for {source} utterance {key}"),
        }
    }
    if pairs.is_empty() {
        return Err(HarnessError::Usage(format!(
            "no {source}/{target} utterance pairs in the {} split",
            split.name()
        )));
    }
    Ok(PairedSet {
        source: source.into(),
        target: target.into(),
        pairs,
    })
}

/// Probe trained on genuine training-split speech of the two emotions.
pub fn train_probe(manifest: &CorpusManifest, source: &str, target: &str, settings: &Settings) -> Result<Probe> {
    let cfg = analysis_config(manifest);
    let a = manifest.extract(source, Split::Train, &cfg)?;
    let b = manifest.extract(target, Split::Train, &cfg)?;
    Ok(Probe::train(source, &a, target, &b, &settings.probe)?)
}

/// Unconverted source speech scored against the targets.
pub fn baseline_report(set: &PairedSet, settings: &Settings, probe: &Probe) -> Result<EvalReport> {
    let opts = settings.eval_options();
    let metrics = set
        .pairs
        .iter()
        .map(|(k, s, t)| evaluate_pair(k, t, s, &opts))
        .collect::<evalkit::Result<Vec<_>>>()?;
    let mut r = EvalReport::new("Source", &set.source, &set.target, metrics)?;
    let sources: Vec<FeatureSet> = set.pairs.iter().map(|p| p.1.clone()).collect();
    r.probe_rate = Some(probe.rate(&sources, &set.target)?);
    r.run_hash = Some(settings.hash());
    Ok(r)
}

/// Pooled mean F0 over voiced frames.
pub fn mean_f0<'a>(sets: impl IntoIterator<Item = &'a FeatureSet>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for fs in sets {
        for (f, v) in fs.f0.iter().zip(&fs.voicing) {
            if *v && *f > 0.0 {
                sum += f;
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Shift {
    pub source_mean: f64,
    pub target_mean: f64,
    pub converted_mean: f64,
}

impl F0Shift {
    /// Fraction of the source-to-target gap covered by the conversion.
    pub fn fraction(&self) -> f64 {
        (self.converted_mean - self.source_mean) / (self.target_mean - self.source_mean)
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub f0: F0Shift,
    /// Re-analyzed converted speech, in pair order.
    pub converted: Vec<FeatureSet>,
}

/// Convert every source utterance, re-analyze the audio and score it.
pub fn evaluate_model(bundle: &AnyBundle, set: &PairedSet, settings: &Settings, probe: &Probe) -> Result<Evaluation> {
    let (a, b) = bundle.emotions();
    let direction = if (a, b) == (set.source.as_str(), set.target.as_str()) {
        Direction::AToB
    } else if (b, a) == (set.source.as_str(), set.target.as_str()) {
        Direction::BToA
    } else {
        return Err(HarnessError::Usage(format!(
            "model converts between {a} and {b}, not {} to {}",
            set.source, set.target
        )));
    };
    let acfg = AnalysisConfig::default();
    let synth = SynthesisConfig::from_analysis(&acfg, settings.synth_seed);
    let opts = settings.eval_options();
    let mut converted = Vec::with_capacity(set.pairs.len());
    let mut metrics = Vec::with_capacity(set.pairs.len());
    for (key, s, t) in &set.pairs {
        let result = bundle.convert(s, direction, &synth)?;
        let mut fs = analyze(&result.waveform, &acfg)?;
        fs.provenance = s.provenance.as_ref().map(|p| Provenance {
            name: format!("{}_converted", p.name),
            ..p.clone()
        });
        metrics.push(evaluate_pair(key, t, &fs, &opts)?);
        converted.push(fs);
    }
    let combo = bundle.config().combo;
    let mut report = EvalReport::new(combo.model_label(), &set.source, &set.target, metrics)?;
    report.combo = Some(combo.name().to_string());
    report.model_hash = Some(bundle.config_hash());
    let mut run = settings.clone();
    run.training = bundle.config().clone();
    report.run_hash = Some(run.hash());
    report.probe_rate = Some(probe.rate(&converted, &set.target)?);
    let undefined = || HarnessError::Incomplete("no voiced frames to measure F0".into());
    let f0 = F0Shift {
        source_mean: mean_f0(set.pairs.iter().map(|p| &p.1)).ok_or_else(undefined)?,
        target_mean: mean_f0(set.pairs.iter().map(|p| &p.2)).ok_or_else(undefined)?,
        converted_mean: mean_f0(&converted).ok_or_else(undefined)?,
    };
    Ok(Evaluation { report, f0, converted })
}

/// Write report JSON/CSV, a one-model table and the first F0 contour plot.
pub fn write_evaluation(out_dir: &Path, baseline: &EvalReport, eval: &Evaluation, set: &PairedSet) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    eval.report.save(&out_dir.join("report.json"))?;
    write(&out_dir.join("report.csv"), &eval.report.to_csv())?;
    baseline.save(&out_dir.join("baseline.json"))?;
    let table = ComparisonTable::from_reports(&[baseline.clone(), eval.report.clone()]);
    write(&out_dir.join("table.txt"), &table.to_text())?;
    write(&out_dir.join("table.csv"), &table.to_csv())?;
    write(&out_dir.join("f0_shift.json"), &serde_json::to_string_pretty(&eval.f0)?)?;
    if let (Some((key, s, t)), Some(c)) = (set.pairs.first(), eval.converted.first()) {
        let tracks = [("source", &s.f0[..]), ("converted", &c.f0[..]), ("target", &t.f0[..])];
        write(&out_dir.join(format!("f0_{key}.svg")), &plot::f0_chart(&format!("F0 contours, {key}"), s.frame_shift, &tracks))?;
        let series: Vec<plot::Series> = tracks
            .iter()
            .map(|(label, f0)| plot::Series {
                label: (*label).into(),
                points: f0.iter().enumerate().map(|(i, &f)| (i as f64 * s.frame_shift, f)).collect(),
            })
            .collect();
        write(&out_dir.join(format!("f0_{key}.csv")), &plot::series_csv(&series))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFailure {
    pub target: String,
    pub combo: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    pub table: ComparisonTable,
    pub failures: Vec<MatrixFailure>,
    pub f0_shift: BTreeMap<String, F0Shift>,
}

impl MatrixOutcome {
    pub fn to_text(&self) -> String {
        let mut s = self.table.to_text();
        for f in &self.failures {
            s.push_str(&format!("FAILED {} for target {}: {}\n", f.combo, f.target, f.error));
        }
        s
    }
}

/// Train and evaluate every feature combo for every target emotion. A failed
/// row is recorded and the rest continue.
pub fn run_matrix(settings: &Settings, manifest: &CorpusManifest, out_dir: &Path) -> Result<MatrixOutcome> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut f0_shift = BTreeMap::new();
    let mut model_reports = Vec::new();
    for target in &settings.targets {
        let fail_all = |failures: &mut Vec<MatrixFailure>, e: &HarnessError| {
            for combo in FeatureCombo::ALL {
                failures.push(MatrixFailure {
                    target: target.clone(),
                    combo: combo.name().into(),
                    error: e.to_string(),
                });
            }
        };
        let mut task = settings.clone();
        task.target = target.clone();
        let prepared = paired_set(manifest, &task.source, target, task.split).and_then(|set| {
            let probe = train_probe(manifest, &task.source, target, &task)?;
            let base = baseline_report(&set, &task, &probe)?;
            Ok((set, probe, base))
        });
        let (set, probe, base) = match prepared {
            Ok(v) => v,
            Err(e) => {
                log::error!("{} -> {target}: {e}", task.source);
                fail_all(&mut failures, &e);
                continue;
            }
        };
        reports.push(base);
        for combo in FeatureCombo::ALL {
            let mut run = task.clone();
            run.training.combo = combo;
            let dir = out_dir.join(target).join(combo.name().replace('+', "_"));
            let outcome = training_data(manifest, &run)
                .and_then(|data| train_model(&run, &data, &dir, None))
                .and_then(|art| evaluate_model(&art.bundle, &set, &run, &probe));
            match outcome {
                Ok(eval) => {
                    eval.report.save(&dir.join("report.json"))?;
                    f0_shift.insert(format!("{target}/{}", combo.name()), eval.f0);
                    model_reports.push(eval.report);
                }
                Err(e) => {
                    log::error!("{} -> {target} with {combo}: {e}", run.source);
                    failures.push(MatrixFailure {
                        target: target.clone(),
                        combo: combo.name().into(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    // Source rows first, then models in combo order.
    reports.sort_by_key(|r| r.model != "Source");
    reports.extend(model_reports);
    let outcome = MatrixOutcome {
        table: ComparisonTable::from_reports(&reports),
        failures,
        f0_shift,
    };
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write(&out_dir.join("table.txt"), &outcome.to_text())?;
    write(&out_dir.join("table.csv"), &outcome.table.to_csv())?;
    write(&out_dir.join("matrix.json"), &serde_json::to_string_pretty(&outcome)?)?;
    write_settings(&out_dir.join(SETTINGS_FILE), settings)?;
    Ok(outcome)
}

/// Analysis-settings hash stamped on extracted features.
pub fn analysis_hash(cfg: &AnalysisConfig) -> Result<u64> {
    Ok(hash_kv([("analysis", serde_json::to_string(cfg)?.as_str())]))
}
