use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::split::Split;
use crate::converter::RowStats;
use crate::dsp::{analyze, read_wav, AnalysisConfig, FeatureSet, Provenance};
use crate::error::{io_err, EmovcError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub emotion: String,
    pub split: Split,
    pub name: String,
    /// Relative to the corpus root.
    pub path: PathBuf,
}

impl UtteranceEntry {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            emotion: self.emotion.clone(),
            split: self.split,
            name: self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub sample_rate: u32,
    pub emotions: Vec<String>,
    pub utterances: Vec<UtteranceEntry>,
    /// Files that were found but could not be read.
    pub errors: Vec<String>,
    pub seed: Option<u64>,
    /// Per-row training statistics keyed by feature combo name.
    pub stats: BTreeMap<String, RowStats>,
}

impl CorpusManifest {
    pub fn entries<'a>(&'a self, emotion: &'a str, split: Split) -> impl Iterator<Item = &'a UtteranceEntry> + 'a {
        self.utterances
            .iter()
            .filter(move |u| u.emotion == emotion && u.split == split)
    }

    pub fn count(&self, emotion: &str, split: Split) -> usize {
        self.entries(emotion, split).count()
    }

    pub fn path_of(&self, entry: &UtteranceEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Every emotion present in every split, no file listed twice.
    pub fn validate(&self) -> Result<()> {
        for e in &self.emotions {
            for s in Split::ALL {
                if self.count(e, s) == 0 {
                    return Err(EmovcError::Config(format!("emotion {e} has no {s} utterances")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for u in &self.utterances {
            if !seen.insert(&u.path) {
                return Err(EmovcError::Config(format!("{} listed twice", u.path.display())));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&s)
    }

    /// Analyse one emotion's utterances of one split, tagging provenance.
    pub fn extract(&self, emotion: &str, split: Split, cfg: &AnalysisConfig) -> Result<Vec<FeatureSet>> {
        self.entries(emotion, split)
            .map(|u| {
                let w = read_wav(&self.path_of(u))?;
                Ok(analyze(&w, cfg)?.with_provenance(u.provenance()))
            })
            .collect()
    }
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>> {
    let mut out = std::fs::read_dir(path)
        .map_err(io_err(path))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(path)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

/// Discover `root/<emotion>/<split>/<name>.wav`.
pub fn load_corpus(root: &Path) -> Result<CorpusManifest> {
    let mut emotions = Vec::new();
    let mut utterances = Vec::new();
    let mut errors = Vec::new();
    let mut sample_rate = None;
    for dir in sorted_dir(root)?.into_iter().filter(|p| p.is_dir()) {
        let emotion = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| EmovcError::Config(format!("unusable directory name {}", dir.display())))?
            .to_string();
        let mut found = 0;
        for split in Split::ALL {
            let sdir = dir.join(split.name());
            if !sdir.is_dir() {
                return Err(EmovcError::Config(format!(
                    "missing split directory {emotion}/{split} under {}",
                    root.display()
                )));
            }
            for file in sorted_dir(&sdir)? {
                if file.extension().and_then(|e| e.to_str()) != Some("wav") {
                    continue;
                }
                let spec = match hound::WavReader::open(&file) {
                    Ok(r) => r.spec(),
                    Err(e) => {
                        errors.push(format!("{}: {e}", file.display()));
                        continue;
                    }
                };
                match sample_rate {
                    None => sample_rate = Some(spec.sample_rate),
                    Some(sr) if sr != spec.sample_rate => {
                        errors.push(format!("{}: {} Hz, corpus is {sr} Hz", file.display(), spec.sample_rate));
                        continue;
                    }
                    _ => {}
                }
                let name = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let rel = file.strip_prefix(root).unwrap_or(&file).to_path_buf();
                utterances.push(UtteranceEntry {
                    emotion: emotion.clone(),
                    split,
                    name,
                    path: rel,
                });
                found += 1;
            }
        }
        if found == 0 {
            return Err(EmovcError::Config(format!("emotion directory {emotion} holds no WAV files")));
        }
        emotions.push(emotion);
    }
    if emotions.is_empty() {
        return Err(EmovcError::Config(format!("no emotion directories under {}", root.display())));
    }
    for e in &errors {
        log::warn!("unreadable corpus file {e}");
    }
    let seed = CorpusManifest::load(&root.join(MANIFEST_FILE)).ok().and_then(|m| m.seed);
    Ok(CorpusManifest {
        root: root.to_path_buf(),
        sample_rate: sample_rate.unwrap_or(16_000),
        emotions,
        utterances,
        errors,
        seed,
        stats: BTreeMap::new(),
    })
}
