use std::path::Path;
use std::sync::OnceLock;

use emovc::corpus::*;
use emovc::dsp::{AnalysisConfig, FeatureSet};
use emovc::model::FeatureCombo;
use tempfile::TempDir;

struct Default {
    _dir: TempDir,
    manifest: CorpusManifest,
    train: Vec<(String, Vec<FeatureSet>)>,
}

fn default_corpus() -> &'static Default {
    static CORPUS: OnceLock<Default> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let manifest = generate_synthetic_corpus(&SynthSpec::default(), dir.path()).unwrap();
        let cfg = AnalysisConfig::default();
        let train = manifest
            .emotions
            .iter()
            .map(|e| (e.clone(), manifest.extract(e, Split::Train, &cfg).unwrap()))
            .collect();
        Default {
            _dir: dir,
            manifest,
            train,
        }
    })
}

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        counts: SplitCounts {
            train: 2,
            val: 1,
            eval: 1,
        },
        seed,
        ..SynthSpec::default()
    }
}

fn files(root: &Path, m: &CorpusManifest) -> Vec<Vec<u8>> {
    m.utterances
        .iter()
        .map(|u| std::fs::read(root.join(&u.path)).unwrap())
        .collect()
}

fn mean_f0(sets: &[FeatureSet]) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for fs in sets {
        for f in fs.f0.iter().filter(|f| **f > 0.0) {
            s += f;
            n += 1;
        }
    }
    s / n as f64
}

#[test]
fn regeneration_is_bit_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ma = generate_synthetic_corpus(&small_spec(7), a.path()).unwrap();
    let mb = generate_synthetic_corpus(&small_spec(7), b.path()).unwrap();
    assert_eq!(ma.utterances, mb.utterances);
    assert_eq!(files(a.path(), &ma), files(b.path(), &mb));
    let c = TempDir::new().unwrap();
    let mc = generate_synthetic_corpus(&small_spec(8), c.path()).unwrap();
    assert_ne!(files(a.path(), &ma), files(c.path(), &mc));
}

#[test]
fn split_counts_follow_the_spec() {
    let d = default_corpus();
    let counts = SplitCounts::default();
    assert_eq!(d.manifest.emotions, vec!["neutral", "sad", "angry"]);
    for e in &d.manifest.emotions {
        for s in Split::ALL {
            assert_eq!(d.manifest.count(e, s), counts.get(s), "{e}/{s}");
        }
    }
    d.manifest.validate().unwrap();
}

#[test]
fn sad_is_at_least_thirty_percent_lower_than_angry() {
    let d = default_corpus();
    let get = |name: &str| &d.train.iter().find(|(e, _)| e == name).unwrap().1;
    let (sad, angry) = (mean_f0(get("sad")), mean_f0(get("angry")));
    assert!(sad < 0.7 * angry, "sad {sad:.1} Hz, angry {angry:.1} Hz");
    let le = |sets: &[FeatureSet]| LgStats::from_features(sets).unwrap().le_mean;
    assert!(le(get("sad")) < le(get("neutral")) && le(get("neutral")) < le(get("angry")));
}

#[test]
fn mean_log_f0_separates_every_emotion_pair() {
    let d = default_corpus();
    for i in 0..d.train.len() {
        for j in i + 1..d.train.len() {
            let lo: Vec<f64> = d.train[i].1.iter().map(|f| f.mean_log_f0().unwrap()).collect();
            let hi: Vec<f64> = d.train[j].1.iter().map(|f| f.mean_log_f0().unwrap()).collect();
            let (lo, hi) = if lo.iter().sum::<f64>() < hi.iter().sum::<f64>() { (lo, hi) } else { (hi, lo) };
            let mut candidates: Vec<f64> = lo.iter().chain(&hi).copied().collect();
            candidates.sort_by(f64::total_cmp);
            let n = (lo.len() + hi.len()) as f64;
            let best = candidates
                .iter()
                .map(|&th| (lo.iter().filter(|v| **v <= th).count() + hi.iter().filter(|v| **v > th).count()) as f64 / n)
                .fold(0.0, f64::max);
            assert!(best >= 0.95, "{} vs {}: {best}", d.train[i].0, d.train[j].0);
        }
    }
}

#[test]
fn loading_discovers_the_generated_layout() {
    let dir = TempDir::new().unwrap();
    let generated = generate_synthetic_corpus(&small_spec(3), dir.path()).unwrap();
    let loaded = load_corpus(dir.path()).unwrap();
    let mut emotions = generated.emotions.clone();
    emotions.sort();
    assert_eq!(loaded.emotions, emotions);
    assert_eq!(loaded.utterances.len(), generated.utterances.len());
    assert_eq!(loaded.seed, Some(3));
    assert!(loaded.errors.is_empty());
    loaded.validate().unwrap();
}

#[test]
fn missing_split_directory_is_named() {
    let dir = TempDir::new().unwrap();
    generate_synthetic_corpus(&small_spec(3), dir.path()).unwrap();
    std::fs::remove_dir_all(dir.path().join("sad").join("val")).unwrap();
    let err = load_corpus(dir.path()).unwrap_err().to_string();
    assert!(err.contains("sad/val"), "{err}");
}

#[test]
fn empty_emotion_directory_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    for s in Split::ALL {
        std::fs::create_dir_all(dir.path().join("calm").join(s.name())).unwrap();
    }
    assert!(load_corpus(dir.path()).is_err());
}

#[test]
fn unreadable_files_are_listed() {
    let dir = TempDir::new().unwrap();
    generate_synthetic_corpus(&small_spec(3), dir.path()).unwrap();
    std::fs::write(dir.path().join("angry").join("train").join("broken.wav"), b"nope").unwrap();
    let m = load_corpus(dir.path()).unwrap();
    assert_eq!(m.errors.len(), 1);
    assert!(m.errors[0].contains("broken.wav"));
}

#[test]
fn manifest_json_round_trips() {
    let d = default_corpus();
    let mut m = d.manifest.clone();
    let pooled: Vec<FeatureSet> = d.train.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
    m.stats.insert("mcc".into(), compute_stats(&pooled, FeatureCombo::Mcc).unwrap());
    let back = CorpusManifest::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn statistics_ignore_other_splits() {
    let d = default_corpus();
    let cfg = AnalysisConfig::default();
    let train: Vec<FeatureSet> = d.train.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
    let base = compute_stats(&train, FeatureCombo::MccLf0).unwrap();
    let mut mixed = train.clone();
    mixed.extend(d.manifest.extract("angry", Split::Eval, &cfg).unwrap());
    let with_eval = compute_stats(&mixed, FeatureCombo::MccLf0).unwrap();
    assert_eq!(base, with_eval);
    assert!(training_only(&mixed).is_err());
}
