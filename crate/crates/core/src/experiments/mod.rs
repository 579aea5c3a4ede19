//! Reproducible experiment commands driven by a single JSON config.
//!
//! Every command is a pure function of its config: outputs land in
//! `<root>/<output>/`, CSVs carry a header row and a `#` provenance footer
//! (config hash, seeds, crate version) and contain no timestamps, so reruns
//! are byte-identical.

mod commands;
mod corpus;
mod output;

pub use commands::{
    frag_decompose, gen_source, heavy_hitting, span_cdf, tok_train, transfer_check, CompressionRow,
    DecompositionRow, HeavyHitRow, SlackRow, SourceRow, TransferRow,
};
pub use corpus::{default_corpus, load_text_corpus, CORPUS_ENV};
pub use output::{CsvReport, Provenance};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ngram::DEFAULT_LAPLACE;
use crate::transfer::DEFAULT_TRANSFER_ETA;

/// Environment variable naming the output root directory.
pub const OUTPUT_ENV: &str = "CTXSPAN_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "ctxspan-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenSource,
    FragDecompose,
    TokTrain,
    SpanCdf,
    TransferCheck,
    HeavyHitting,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenSource => "gen-source",
            Command::FragDecompose => "frag-decompose",
            Command::TokTrain => "tok-train",
            Command::SpanCdf => "span-cdf",
            Command::TransferCheck => "transfer-check",
            Command::HeavyHitting => "heavy-hitting",
        }
    }
}

/// Process exit code for an error: 2 for configuration and input problems,
/// 3 for capacity limits, 4 for violated modelling assumptions.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Capacity(_) => 3,
        Error::Assumption(_) | Error::Ergodicity(_) | Error::Positivity(_) => 4,
        _ => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fragmentation: Option<FragmentationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer: Option<TokenizerConfig>,
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<SpanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heavy_hitting: Option<HeavyHittingConfig>,
    /// Subdirectory of the output root; defaults to `experiment`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub alphabet_size: usize,
    pub order: usize,
    pub dirichlet_alpha: f64,
    pub length: usize,
    /// Fixed kernel instead of a seeded Dirichlet draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
    /// Fixed sequence instead of sampling one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence_file: Option<PathBuf>,
    /// Text file or directory used as a character-level source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 2,
            order: 1,
            dirichlet_alpha: 0.5,
            length: 100_000,
            kernel_file: None,
            sequence_file: None,
            corpus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FragmentationConfig {
    pub fragment_alphabet_size: usize,
    /// `(k, M)` pairs; each uses a source alphabet of `|X|^M` symbols.
    pub pairs: Vec<(usize, usize)>,
    pub laplace_alpha: f64,
    /// Source windows relative to `k`; `[0, 1]` means `w = k` and `w = k + 1`.
    pub window_offsets: Vec<usize>,
}

impl Default for FragmentationConfig {
    fn default() -> Self {
        Self {
            fragment_alphabet_size: 2,
            pairs: vec![(1, 2)],
            laplace_alpha: DEFAULT_LAPLACE,
            window_offsets: vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMethod {
    Bpe,
    Lzw,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenizerConfig {
    pub method: TokenizerMethod,
    /// Vocabulary sizes (BPE targets or LZW budgets).
    pub sizes: Vec<usize>,
    /// Training prefix length; the full sequence when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_length: Option<usize>,
    /// Extra vocabularies in the JSON vocabulary format.
    pub vocab_files: Vec<PathBuf>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            method: TokenizerMethod::Bpe,
            sizes: vec![],
            train_length: Some(500_000),
            vocab_files: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpanConfig {
    /// Slack curves run over `w_s = 1 ..= max_factor * w`.
    pub max_factor: usize,
    /// Upper bound on emitted points per curve; larger ranges are strided.
    pub max_points: usize,
    /// Alphabet size used for `log2|Y|`; the source alphabet when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self {
            max_factor: 16,
            max_points: 512,
            alphabet_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferConfig {
    pub eta: f64,
    /// Span thresholds for the typical predictor, as multiples of `w`.
    pub span_factors: Vec<usize>,
    /// Slack added to the exact bound when judging the worst-case span check.
    pub tolerance_bits: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_TRANSFER_ETA,
            span_factors: vec![1, 2, 3],
            tolerance_bits: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeavyHittingConfig {
    pub beta: f64,
    /// LZW budgets `d`.
    pub budgets: Vec<usize>,
    pub eta: f64,
}

impl Default for HeavyHittingConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            budgets: vec![256, 1024, 4096],
            eta: DEFAULT_TRANSFER_ETA,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::param(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::param(format!("bad config: {e}")))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(self.output.as_deref().unwrap_or(&self.experiment))
    }

    /// Checks everything a command needs before any computation starts.
    pub fn validate(&self, command: Command) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::param("experiment name is empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::param("at least one seed is required"));
        }
        let s = &self.source;
        if s.alphabet_size < 2 {
            return Err(Error::param("source.alphabet_size must be at least 2"));
        }
        if !(s.dirichlet_alpha > 0.0 && s.dirichlet_alpha.is_finite()) {
            return Err(Error::param("source.dirichlet_alpha must be positive"));
        }
        if s.length == 0 {
            return Err(Error::param("source.length must be at least 1"));
        }
        for p in [&s.kernel_file, &s.sequence_file, &s.corpus].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::param(format!("{} does not exist", p.display())));
            }
        }
        if self.windows.contains(&0) {
            return Err(Error::param("windows must be at least 1"));
        }
        let needs_kernel = matches!(
            command,
            Command::GenSource | Command::FragDecompose | Command::TransferCheck | Command::HeavyHitting
        );
        if needs_kernel && s.corpus.is_some() {
            return Err(Error::param(format!(
                "{} needs a Markov source, not a text corpus",
                command.name()
            )));
        }
        if let Some(t) = &self.tokenizer {
            for p in &t.vocab_files {
                if !p.exists() {
                    return Err(Error::param(format!("{} does not exist", p.display())));
                }
            }
            if t.train_length == Some(0) {
                return Err(Error::param("tokenizer.train_length must be positive"));
            }
        }
        match command {
            Command::GenSource => {}
            Command::FragDecompose => {
                let f = self
                    .fragmentation
                    .as_ref()
                    .ok_or_else(|| Error::param("frag-decompose needs a fragmentation section"))?;
                if f.fragment_alphabet_size < 2 {
                    return Err(Error::param("fragment_alphabet_size must be at least 2"));
                }
                if f.pairs.is_empty() || f.pairs.iter().any(|&(_, m)| m == 0) {
                    return Err(Error::param("fragmentation pairs need M >= 1"));
                }
                if f.window_offsets.is_empty() {
                    return Err(Error::param("fragmentation.window_offsets is empty"));
                }
                if f.laplace_alpha.is_nan() || f.laplace_alpha < 0.0 {
                    return Err(Error::param("laplace_alpha must be >= 0"));
                }
            }
            Command::TokTrain | Command::SpanCdf | Command::TransferCheck => {
                let t = self
                    .tokenizer
                    .as_ref()
                    .ok_or_else(|| Error::param(format!("{} needs a tokenizer section", command.name())))?;
                if t.method != TokenizerMethod::Identity && t.sizes.is_empty() && t.vocab_files.is_empty() {
                    return Err(Error::param("tokenizer.sizes is empty"));
                }
                if command != Command::TokTrain && self.windows.is_empty() {
                    return Err(Error::param("windows is empty"));
                }
                if let Some(tc) = &self.transfer {
                    if !(tc.eta > 0.0 && tc.eta < 1.0) {
                        return Err(Error::param("transfer.eta must lie in (0, 1)"));
                    }
                }
            }
            Command::HeavyHitting => {
                let h = self.heavy_hitting.clone().unwrap_or_default();
                if h.beta.is_nan() || h.beta <= 0.0 || h.budgets.iter().any(|&d| d < s.alphabet_size) {
                    return Err(Error::param("heavy_hitting needs beta > 0 and budgets >= |Y|"));
                }
                if self.windows.is_empty() {
                    return Err(Error::param("windows is empty"));
                }
            }
        }
        Ok(())
    }
}

/// Output root from `CTXSPAN_OUT`, else `./ctxspan-out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Validates the config and runs one command, returning the files written.
pub fn run(command: Command, config: &ExperimentConfig, root: &Path) -> Result<Vec<PathBuf>> {
    config.validate(command)?;
    let dir = config.output_dir(root);
    std::fs::create_dir_all(&dir)?;
    match command {
        Command::GenSource => gen_source(config, &dir),
        Command::FragDecompose => frag_decompose(config, &dir),
        Command::TokTrain => tok_train(config, &dir),
        Command::SpanCdf => span_cdf(config, &dir),
        Command::TransferCheck => transfer_check(config, &dir),
        Command::HeavyHitting => heavy_hitting(config, &dir),
    }
}
