//! Corpora: synthetic generation, directory loading, splits and statistics.

mod manifest;
mod split;
mod stats;
mod synthetic;

pub use manifest::{load_corpus, CorpusManifest, UtteranceEntry, MANIFEST_FILE};
pub use split::Split;
pub use stats::{compute_stats, training_only, LgStats};
pub use synthetic::{
    generate_synthetic_corpus, scripted_utterance, synthetic_utterance, EmotionPreset, SplitCounts, SynthSpec,
};
