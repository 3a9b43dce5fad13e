//! Scoring configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use noteval_core::analysis::SigmaMode;
use noteval_core::concepts::MistMode;
use noteval_core::greedy::WeightNormalization;
use noteval_core::likelihood::{Direction, LikelihoodNormalization};
use noteval_core::text::{Normalization, Window};
use serde::{Deserialize, Serialize};

use crate::ConfigError;

/// Fully resolved `score` configuration. Serialized into the run
/// manifest; `jobs` is excluded because it never affects results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub metrics: Vec<String>,
    pub tokenizer: Normalization,

    pub embeddings: Option<PathBuf>,
    pub contextual: Option<PathBuf>,
    pub kge: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub logprobs: Option<PathBuf>,
    pub lm_corpus: Option<PathBuf>,
    pub external: Vec<PathBuf>,

    pub alpha: f64,
    pub normalize: WeightNormalization,
    /// Slide windows for the plain BERTScore variants too.
    pub window: bool,
    pub max_len: usize,
    pub overlap: usize,
    pub mist_mode: MistMode,
    pub direction: Direction,
    pub bart_normalize: LikelihoodNormalization,
    pub lm_order: usize,
    pub lm_k: f64,

    pub ensembles: Vec<String>,
    pub sigma: SigmaMode,
    /// Column standing in for BERTScore in `mist-comb1`.
    pub bertscore_variant: String,

    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::new(),
            out: PathBuf::new(),
            metrics: Vec::new(),
            tokenizer: Normalization::LowerAlnum,
            embeddings: None,
            contextual: None,
            kge: None,
            lexicon: None,
            logprobs: None,
            lm_corpus: None,
            external: Vec::new(),
            alpha: 1.0,
            normalize: WeightNormalization::WeightSum,
            window: false,
            max_len: 512,
            overlap: 100,
            mist_mode: MistMode::Recall,
            direction: Direction::RefToSys,
            bart_normalize: LikelihoodNormalization::WeightSum,
            lm_order: 2,
            lm_k: 1.0,
            ensembles: Vec::new(),
            sigma: SigmaMode::Population,
            bertscore_variant: "bertscore-r".to_string(),
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            anyhow::Error::new(ConfigError(format!("config {}: {e}", path.display())))
        })
    }

    pub fn window(&self) -> anyhow::Result<Window> {
        Window::new(self.max_len, self.overlap)
            .map_err(|e| anyhow::Error::new(ConfigError(e.to_string())))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::output::sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}
