//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use emovc::converter::Direction;
use emovc::corpus::{generate_synthetic_corpus, load_corpus, Split, SplitCounts, SynthSpec};
use emovc::dsp::{analyze, read_wav, write_wav, AnalysisConfig, SynthesisConfig};
use evalkit::{ComparisonTable, EvalReport};

use crate::config::Settings;
use crate::error::{io_err, HarnessError, Result};
use crate::pipeline::{self, AnyBundle};
use crate::plot;

#[derive(Debug, Parser)]
#[command(
    name = "emovc",
    version,
    about = "Emotional voice conversion with a CycleGAN over spectral and prosodic features",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the model-facing subcommands. Precedence: defaults,
/// then the config file, then `--set`, then named flags.
#[derive(Debug, Args)]
struct Common {
    /// File of `key=value` lines; unknown keys are rejected.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct TrainFlags {
    /// mcc | mcc+lf0 | mcc+lf0cwt | mcc+lf0cwt+lecwt
    #[arg(long)]
    combo: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Channel-width multiplier of the networks.
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// 32 or 64.
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    target: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the synthetic multi-emotion corpus.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Use 260/20/20 utterances per emotion instead of 52/4/4.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        train: Option<usize>,
        #[arg(long)]
        val: Option<usize>,
        #[arg(long)]
        eval: Option<usize>,
    },
    /// Analyze corpus WAVs into feature files.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// train | val | eval; all splits when omitted.
        #[arg(long)]
        split: Option<String>,
        /// Also write one CSV per utterance.
        #[arg(long)]
        csv: bool,
    },
    /// Train a conversion model on the training split.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a saved model.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[command(flatten)]
        flags: TrainFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Convert one WAV file.
    Convert {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// a2b converts the model's first emotion into its second.
        #[arg(long, default_value = "a2b")]
        direction: String,
        /// Write feature CSVs and an F0 plot here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a model on held-out utterances.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// train | val | eval
        #[arg(long)]
        split: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Combine evaluation reports, or run the full experiment matrix.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Report JSON files to tabulate.
        #[arg(long = "input", value_name = "REPORT")]
        inputs: Vec<PathBuf>,
        /// Train and evaluate every combo for every target emotion.
        #[arg(long)]
        matrix: bool,
        #[arg(long, required_if_eq("matrix", "true"))]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        flags: TrainFlags,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(common: &Common, named: &[(&str, &Option<String>)]) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        s.apply_file(path)?;
    }
    for kv in &common.set {
        s.apply_override(kv)?;
    }
    for (key, value) in named {
        if let Some(v) = value {
            s.set(key, v)?;
        }
    }
    s.validate()?;
    Ok(s)
}

fn train_settings(common: &Common, f: &TrainFlags) -> Result<Settings> {
    settings(
        common,
        &[
            ("combo", &f.combo),
            ("steps", &f.steps),
            ("rho", &f.rho),
            ("seed", &f.seed),
            ("precision", &f.precision),
            ("source", &f.source),
            ("target", &f.target),
        ],
    )
}

fn parse_split(s: &str) -> Result<Split> {
    Split::ALL
        .into_iter()
        .find(|x| x.name() == s)
        .ok_or_else(|| HarnessError::Usage(format!("unknown split '{s}'")))
}

fn corpus(root: &Path) -> Result<emovc::corpus::CorpusManifest> {
    let m = load_corpus(root)?;
    for err in &m.errors {
        log::warn!("skipped {err}");
    }
    Ok(m)
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .is_test(cfg!(test))
        .try_init();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::SynthCorpus {
            out,
            seed,
            full,
            train,
            val,
            eval,
        } => {
            let base = if full { SplitCounts::full() } else { SplitCounts::default() };
            let spec = SynthSpec {
                counts: SplitCounts {
                    train: train.unwrap_or(base.train),
                    val: val.unwrap_or(base.val),
                    eval: eval.unwrap_or(base.eval),
                },
                seed,
                ..SynthSpec::default()
            };
            spec.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
            let m = generate_synthetic_corpus(&spec, &out)?;
            log::info!("wrote {} utterances under {}", m.utterances.len(), out.display());
            Ok(())
        }
        Command::Extract { corpus: root, out, split, csv } => {
            let split = split.as_deref().map(parse_split).transpose()?;
            let m = corpus(&root)?;
            let cfg = pipeline::analysis_config(&m);
            let hash = pipeline::analysis_hash(&cfg)?;
            let mut files = Vec::new();
            for emotion in &m.emotions {
                for s in Split::ALL.into_iter().filter(|s| split.map_or(true, |x| x == *s)) {
                    let dir = out.join(emotion).join(s.name());
                    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                    for fs in m.extract(emotion, s, &cfg)? {
                        let name = fs.provenance.as_ref().map(|p| p.name.clone()).unwrap_or_default();
                        let path = dir.join(format!("{name}.emvf"));
                        fs.save(&path)?;
                        if csv {
                            fs.write_csv(&dir.join(format!("{name}.csv")))?;
                        }
                        files.push(path);
                    }
                }
            }
            let summary = serde_json::json!({
                "config_hash": format!("{hash:016x}"),
                "analysis": cfg,
                "files": files,
            });
            pipeline::write(&out.join("extract.json"), &serde_json::to_string_pretty(&summary)?)?;
            log::info!("extracted {} feature files (analysis hash {hash:016x})", files.len());
            Ok(())
        }
        Command::Train {
            corpus: root,
            out,
            resume,
            flags,
            common,
        } => {
            let s = train_settings(&common, &flags)?;
            let m = corpus(&root)?;
            let data = pipeline::training_data(&m, &s)?;
            let art = pipeline::train_model(&s, &data, &out, resume.as_deref())?;
            log::info!(
                "trained {} steps, model {} (config hash {:016x})",
                art.bundle.step(),
                art.model_path.display(),
                art.bundle.config_hash()
            );
            Ok(())
        }
        Command::Convert {
            model,
            input,
            output,
            direction,
            dump_dir,
            common,
        } => {
            let s = settings(&common, &[])?;
            let direction = match direction.as_str() {
                "a2b" => Direction::AToB,
                "b2a" => Direction::BToA,
                d => return Err(HarnessError::Usage(format!("direction must be a2b or b2a, got '{d}'"))),
            };
            let bundle = AnyBundle::load(&model)?;
            let wave = read_wav(&input)?;
            let acfg = AnalysisConfig {
                sample_rate: wave.sample_rate,
                ..AnalysisConfig::default()
            };
            let fs = analyze(&wave, &acfg)?;
            let result = bundle.convert(&fs, direction, &SynthesisConfig::from_analysis(&acfg, s.synth_seed))?;
            write_wav(&output, &result.waveform)?;
            if let Some(dir) = dump_dir {
                std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                fs.write_csv(&dir.join("source.csv"))?;
                result.features.write_csv(&dir.join("converted.csv"))?;
                let tracks = [("source", &fs.f0[..]), ("converted", &result.features.f0[..])];
                pipeline::write(&dir.join("f0.svg"), &plot::f0_chart("F0 contours", fs.frame_shift, &tracks))?;
                pipeline::write_settings(&dir.join(pipeline::SETTINGS_FILE), &s)?;
            }
            log::info!("wrote {} (model hash {:016x})", output.display(), result.model_hash);
            Ok(())
        }
        Command::Evaluate {
            model,
            corpus: root,
            out,
            split,
            common,
        } => {
            let split_flag = split.clone();
            let mut s = settings(&common, &[("split", &split_flag)])?;
            let bundle = AnyBundle::load(&model)?;
            let (a, b) = bundle.emotions();
            (s.source, s.target) = (a.to_string(), b.to_string());
            let m = corpus(&root)?;
            let set = pipeline::paired_set(&m, &s.source, &s.target, s.split)?;
            let probe = pipeline::train_probe(&m, &s.source, &s.target, &s)?;
            let baseline = pipeline::baseline_report(&set, &s, &probe)?;
            let eval = pipeline::evaluate_model(&bundle, &set, &s, &probe)?;
            pipeline::write_evaluation(&out, &baseline, &eval, &set)?;
            let table = ComparisonTable::from_reports(&[baseline, eval.report.clone()]);
            print!("{}", table.to_text());
            if table.has_undefined() {
                return Err(HarnessError::Incomplete("some log-F0 errors are undefined".into()));
            }
            Ok(())
        }
        Command::Report {
            out,
            inputs,
            matrix,
            corpus: root,
            flags,
            common,
        } => {
            if matrix {
                let s = train_settings(&common, &flags)?;
                let m = corpus(root.as_deref().expect("required with --matrix"))?;
                let outcome = pipeline::run_matrix(&s, &m, &out)?;
                print!("{}", outcome.to_text());
                if !outcome.failures.is_empty() {
                    return Err(HarnessError::Incomplete(format!("{} matrix rows failed", outcome.failures.len())));
                }
                if outcome.table.has_undefined() {
                    return Err(HarnessError::Incomplete("some log-F0 errors are undefined".into()));
                }
                return Ok(());
            }
            if inputs.is_empty() {
                return Err(HarnessError::Usage("report needs --input files or --matrix".into()));
            }
            let reports = inputs.iter().map(|p| EvalReport::load(p)).collect::<evalkit::Result<Vec<_>>>()?;
            let table = ComparisonTable::from_reports(&reports);
            std::fs::create_dir_all(&out).map_err(io_err(&out))?;
            pipeline::write(&out.join("table.txt"), &table.to_text())?;
            pipeline::write(&out.join("table.csv"), &table.to_csv())?;
            print!("{}", table.to_text());
            if table.has_undefined() {
                return Err(HarnessError::Incomplete("some log-F0 errors are undefined".into()));
            }
            Ok(())
        }
    }
}
