use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxspan::experiments::{
    exit_code, output_root, run, Command, ExperimentConfig, SourceConfig, TokenizerConfig,
    TokenizerMethod,
};
use ctxspan::Error;

#[derive(Parser)]
#[command(name = "ctxspan", version, about = "Reproducible context-loss experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample Dirichlet kernels and source sequences.
    GenSource(Overrides),
    /// Exact and empirical fragmentation penalty per (k, M) pair.
    FragDecompose(Overrides),
    /// Train vocabularies and report compression ratios.
    TokTrain(Overrides),
    /// Span distributions and slack curves per tokenizer and window.
    SpanCdf(Overrides),
    /// Transfer optimal predictors across vocabularies and check the bounds.
    TransferCheck(Overrides),
    /// LZW heavy-hitting diagnostics and end-to-end loss bound.
    HeavyHitting(Overrides),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bpe,
    Lzw,
    Identity,
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed list; repeatable.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    alphabet_size: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    dirichlet_alpha: Option<f64>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    kernel_file: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Replaces the vocabulary sizes; repeatable.
    #[arg(long = "size")]
    sizes: Vec<usize>,
    /// Replaces the token windows; repeatable.
    #[arg(long = "window")]
    windows: Vec<usize>,
    /// Output subdirectory under the output root.
    #[arg(long)]
    output: Option<String>,
}

impl Overrides {
    fn config(&self, command: Command) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig {
                experiment: command.name().to_string(),
                seeds: vec![0],
                source: SourceConfig::default(),
                fragmentation: None,
                tokenizer: None,
                windows: vec![],
                span: None,
                transfer: None,
                heavy_hitting: None,
                output: None,
            },
        };
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(e) = &self.experiment {
            cfg.experiment = e.clone();
        }
        let s = &mut cfg.source;
        s.alphabet_size = self.alphabet_size.unwrap_or(s.alphabet_size);
        s.order = self.order.unwrap_or(s.order);
        s.dirichlet_alpha = self.dirichlet_alpha.unwrap_or(s.dirichlet_alpha);
        s.length = self.length.unwrap_or(s.length);
        if self.kernel_file.is_some() {
            s.kernel_file = self.kernel_file.clone();
        }
        if self.corpus.is_some() {
            s.corpus = self.corpus.clone();
        }
        if self.method.is_some() || !self.sizes.is_empty() {
            let t = cfg.tokenizer.get_or_insert_with(TokenizerConfig::default);
            if let Some(m) = self.method {
                t.method = match m {
                    Method::Bpe => TokenizerMethod::Bpe,
                    Method::Lzw => TokenizerMethod::Lzw,
                    Method::Identity => TokenizerMethod::Identity,
                };
            }
            if !self.sizes.is_empty() {
                t.sizes = self.sizes.clone();
            }
        }
        if !self.windows.is_empty() {
            cfg.windows = self.windows.clone();
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if command == Command::FragDecompose && cfg.fragmentation.is_none() {
            cfg.fragmentation = Some(Default::default());
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, overrides) = match &cli.command {
        Cmd::GenSource(o) => (Command::GenSource, o),
        Cmd::FragDecompose(o) => (Command::FragDecompose, o),
        Cmd::TokTrain(o) => (Command::TokTrain, o),
        Cmd::SpanCdf(o) => (Command::SpanCdf, o),
        Cmd::TransferCheck(o) => (Command::TransferCheck, o),
        Cmd::HeavyHitting(o) => (Command::HeavyHitting, o),
    };
    let result = overrides
        .config(command)
        .and_then(|cfg| run(command, &cfg, &output_root()));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ctxspan {}: {e}", command.name());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
