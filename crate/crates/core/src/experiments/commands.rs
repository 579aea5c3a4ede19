use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::output::JsonReport;
use super::{
    load_text_corpus, CsvReport, ExperimentConfig, Provenance, SpanConfig, TokenizerConfig,
    TokenizerMethod, TransferConfig,
};
use crate::error::{Error, Result};
use crate::fragmentation::{decompose, empirical_fragmented_loss, FragmentationMap};
use crate::io::{read_json, read_sequence, write_json, write_sequence};
use crate::markov::{Alphabet, Symbol, TransitionKernel};
use crate::ngram::ContextPredictor;
use crate::span::{
    compression_stats, compression_stats_for_alphabet, heavy_hitting_report, slack_curve,
    span_distribution, span_report, worst_case_span, SpanMode, SpanReport,
};
use crate::tokenizer::{train_bpe, train_lzw, PrefixVocabulary, VocabFile};
use crate::transfer::{make_typical, TransferEvaluation, TransferredPredictor};

struct Source {
    kernel: Option<TransitionKernel>,
    alphabet: Alphabet,
    seq: Vec<Symbol>,
}

fn kernel_for_seed(cfg: &ExperimentConfig, seed: u64) -> Result<TransitionKernel> {
    let s = &cfg.source;
    match &s.kernel_file {
        Some(p) => read_json(p),
        None => TransitionKernel::sample(s.alphabet_size, s.order, s.dirichlet_alpha, seed),
    }
}

fn source_for_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Source> {
    let s = &cfg.source;
    if let Some(corpus) = &s.corpus {
        let text = load_text_corpus(corpus)?;
        let alphabet = Alphabet::from_text(&text)?;
        let seq = alphabet.encode_chars(&text)?;
        return Ok(Source {
            kernel: None,
            alphabet,
            seq,
        });
    }
    if let Some(p) = &s.sequence_file {
        let (alphabet, seq) = read_sequence(p)?;
        let kernel = s.kernel_file.as_ref().map(|k| read_json(k)).transpose()?;
        return Ok(Source {
            kernel,
            alphabet,
            seq,
        });
    }
    let kernel = kernel_for_seed(cfg, seed)?;
    let seq = kernel.sample_sequence(s.length, seed)?;
    Ok(Source {
        alphabet: kernel.alphabet().clone(),
        kernel: Some(kernel),
        seq,
    })
}

fn require_kernel(src: &Source) -> Result<&TransitionKernel> {
    src.kernel
        .as_ref()
        .ok_or_else(|| Error::param("this command needs a kernel (source.kernel_file)"))
}

fn vocabularies(
    t: &TokenizerConfig,
    alphabet: &Alphabet,
    seq: &[Symbol],
) -> Result<Vec<(String, PrefixVocabulary)>> {
    let train = &seq[..t.train_length.unwrap_or(seq.len()).min(seq.len())];
    let mut out = Vec::new();
    match t.method {
        TokenizerMethod::Identity => out.push(("identity".to_string(), PrefixVocabulary::identity(alphabet))),
        TokenizerMethod::Bpe => {
            for &v in &t.sizes {
                out.push((format!("bpe{v}"), train_bpe(alphabet, train, v)?));
            }
        }
        TokenizerMethod::Lzw => {
            for &d in &t.sizes {
                out.push((format!("lzw{d}"), train_lzw(alphabet, train, d)?));
            }
        }
    }
    for p in &t.vocab_files {
        let file: VocabFile = read_json(p)?;
        let vocab = PrefixVocabulary::from_file(&file)?;
        if vocab.alphabet() != alphabet {
            return Err(Error::param(format!("{} uses a different alphabet", p.display())));
        }
        let name = p
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("vocab")
            .to_string();
        out.push((name, vocab));
    }
    Ok(out)
}

fn write_both<T: Serialize>(
    dir: &Path,
    stem: &str,
    rows: &[T],
    prov: &Provenance,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let csv = dir.join(format!("{stem}.csv"));
    CsvReport::write(&csv, rows, prov)?;
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &JsonReport { provenance: prov, rows })?;
    written.push(csv);
    written.push(json);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRow {
    pub seed: u64,
    pub alphabet_size: usize,
    pub order: usize,
    pub length: usize,
    pub entropy_rate: f64,
    pub min_transition_prob: f64,
    pub kernel_file: String,
    pub sequence_file: String,
}

pub fn gen_source(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = Provenance::of(cfg);
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let kernel = kernel_for_seed(cfg, seed)?;
        let seq = kernel.sample_sequence(cfg.source.length, seed)?;
        let kname = format!("kernel_seed{seed}.json");
        let sname = format!("source_seed{seed}.bin");
        write_json(&dir.join(&kname), &kernel)?;
        write_sequence(&dir.join(&sname), kernel.alphabet(), &seq)?;
        written.push(dir.join(&kname));
        written.push(dir.join(&sname));
        rows.push(SourceRow {
            seed,
            alphabet_size: kernel.alphabet_size(),
            order: kernel.order(),
            length: seq.len(),
            entropy_rate: kernel.entropy_rate()?,
            min_transition_prob: kernel.min_transition_prob(),
            kernel_file: kname,
            sequence_file: sname,
        });
    }
    let csv = dir.join("sources.csv");
    CsvReport::write(&csv, &rows, &prov)?;
    written.push(csv);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub w: usize,
    pub l_y: f64,
    pub l_frag: f64,
    pub context_deficit: f64,
    pub phase_ambiguity: f64,
    pub gap: f64,
    pub identity_residual: f64,
    pub empirical_l_y: f64,
    pub empirical_l_frag: f64,
    pub empirical_penalty: f64,
    /// `|empirical_penalty - gap|`.
    pub penalty_error: f64,
}

/// Exact decomposition and in-sample n-gram penalty for every `(k, M)` pair
/// and seed. Each pair uses `|Y| = |X|^M` with the default code.
pub fn frag_decompose(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let f = cfg.fragmentation.clone().unwrap_or_default();
    let prov = Provenance::of(cfg);
    let nx = f.fragment_alphabet_size;
    let mut rows = Vec::new();
    for &(k, m) in &f.pairs {
        let ny = crate::numeric::checked_pow(nx, m)
            .filter(|&n| n <= usize::from(Symbol::MAX))
            .ok_or_else(|| Error::Capacity(format!("{nx}^{m} source symbols")))?;
        let map = FragmentationMap::default_code(Alphabet::numeric(ny)?, Alphabet::numeric(nx)?, m)?;
        for &seed in &cfg.seeds {
            let kernel = TransitionKernel::sample(ny, k, cfg.source.dirichlet_alpha, seed)?;
            let seq = kernel.sample_sequence(cfg.source.length, seed)?;
            for &off in &f.window_offsets {
                let w = k + off;
                let r = decompose(&kernel, &map, w)?;
                let emp_y = ContextPredictor::fit(kernel.alphabet(), &seq, w, f.laplace_alpha)?
                    .log_loss(&seq)?
                    .bits_per_symbol;
                let emp_x = empirical_fragmented_loss(&map, &seq, w, f.laplace_alpha)?;
                rows.push(DecompositionRow {
                    k,
                    m,
                    seed,
                    w,
                    l_y: r.l_y,
                    l_frag: r.l_frag,
                    context_deficit: r.context_deficit,
                    phase_ambiguity: r.phase_ambiguity,
                    gap: r.gap,
                    identity_residual: r.identity_residual(),
                    empirical_l_y: emp_y,
                    empirical_l_frag: emp_x,
                    empirical_penalty: emp_x - emp_y,
                    penalty_error: (emp_x - emp_y - r.gap).abs(),
                });
            }
        }
    }
    let mut written = Vec::new();
    write_both(dir, "decomposition", &rows, &prov, &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionRow {
    pub seed: u64,
    pub tokenizer: String,
    pub vocab_size: usize,
    pub source_length: usize,
    pub tokens: usize,
    /// `|Y^n| / |Z^m|`, equal to the mean token length.
    pub ratio: f64,
    pub rate: f64,
}

pub fn tok_train(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let t = cfg.tokenizer.clone().unwrap_or_default();
    let prov = Provenance::of(cfg);
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let src = source_for_seed(cfg, seed)?;
        for (name, vocab) in vocabularies(&t, &src.alphabet, &src.seq)? {
            let tokens = vocab.greedy_parse(&src.seq)?;
            let stats = compression_stats(&vocab, &tokens)?;
            let path = dir.join(format!("vocab_seed{seed}_{name}.json"));
            write_json(&path, &vocab.to_file())?;
            written.push(path);
            rows.push(CompressionRow {
                seed,
                tokenizer: name,
                vocab_size: vocab.len(),
                source_length: src.seq.len(),
                tokens: tokens.len(),
                ratio: stats.alpha,
                rate: stats.rate,
            });
        }
    }
    write_both(dir, "compression", &rows, &prov, &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackRow {
    pub seed: u64,
    pub tokenizer: String,
    pub w: usize,
    pub w_s: usize,
    pub epsilon: f64,
    pub rate: f64,
    pub slack_bits: f64,
}

/// `1 ..= max_factor * w`, strided down to at most `max_points` values.
pub(crate) fn span_grid(w: usize, span: &SpanConfig) -> Vec<usize> {
    let top = span.max_factor.max(1) * w;
    let stride = top.div_ceil(span.max_points.max(1)).max(1);
    let mut grid: Vec<usize> = (1..=top).step_by(stride).collect();
    if grid.last() != Some(&top) {
        grid.push(top);
    }
    grid
}

pub fn span_cdf(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let t = cfg.tokenizer.clone().unwrap_or_default();
    let span = cfg.span.clone().unwrap_or_default();
    let prov = Provenance::of(cfg);
    let mut rows = Vec::new();
    let mut reports: Vec<(u64, String, SpanReport)> = Vec::new();
    for &seed in &cfg.seeds {
        let src = source_for_seed(cfg, seed)?;
        let log_alphabet = span.alphabet_size.unwrap_or(src.alphabet.len());
        for (name, vocab) in vocabularies(&t, &src.alphabet, &src.seq)? {
            let tokens = vocab.greedy_parse(&src.seq)?;
            let stats = compression_stats_for_alphabet(&vocab, &tokens, log_alphabet)?;
            for &w in &cfg.windows {
                let hist = span_distribution(&vocab, &tokens, w)?;
                let grid = span_grid(w, &span);
                for p in slack_curve(&hist, &stats, grid.iter().copied()) {
                    rows.push(SlackRow {
                        seed,
                        tokenizer: name.clone(),
                        w,
                        w_s: p.w_s,
                        epsilon: p.epsilon,
                        rate: stats.rate,
                        slack_bits: p.slack_bits,
                    });
                }
                let mut report = span_report(&vocab, &tokens, w, std::iter::empty())?;
                report.rate = stats.rate;
                reports.push((seed, name.clone(), report));
            }
        }
    }
    let mut written = Vec::new();
    let csv = dir.join("slack.csv");
    CsvReport::write(&csv, &rows, &prov)?;
    written.push(csv);
    let json = dir.join("spans.json");
    write_json(&json, &JsonReport { provenance: &prov, rows: &reports })?;
    written.push(json);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub seed: u64,
    pub tokenizer: String,
    pub w: usize,
    /// `worst_case` (transferred predictor at the worst-case span) or
    /// `typical` (span-gated predictor).
    pub check: String,
    pub w_s: usize,
    pub epsilon: f64,
    pub rate: f64,
    /// Exact optimal source loss at context `w_s`.
    pub exact_l_y: f64,
    pub bound: f64,
    pub holds: bool,
    pub n: usize,
    pub token_loss_bits: f64,
    pub source_loss_bits: f64,
    pub difference: f64,
    pub bound_2log_1_over_lambda: f64,
    pub token_per_symbol: f64,
    pub token_per_symbol_se: f64,
    pub source_per_symbol: f64,
    pub uniform_fallbacks: usize,
}

struct Check {
    kind: &'static str,
    w_s: usize,
    epsilon: f64,
    exact: f64,
    bound: f64,
    holds: bool,
}

fn transfer_row(seed: u64, tokenizer: &str, w: usize, rate: f64, c: Check, e: &TransferEvaluation) -> TransferRow {
    TransferRow {
        seed,
        tokenizer: tokenizer.to_string(),
        w,
        check: c.kind.to_string(),
        w_s: c.w_s,
        epsilon: c.epsilon,
        rate,
        exact_l_y: c.exact,
        bound: c.bound,
        holds: c.holds,
        n: e.source_symbols,
        token_loss_bits: e.token_loss_bits,
        source_loss_bits: e.source_loss_bits,
        difference: e.difference(),
        bound_2log_1_over_lambda: e.bound_2log_1_over_lambda,
        token_per_symbol: e.per_source_symbol,
        token_per_symbol_se: e.per_source_symbol_se,
        source_per_symbol: e.source_per_symbol,
        uniform_fallbacks: e.uniform_fallbacks,
    }
}

/// Transfers exact optimal source predictors across each vocabulary and
/// checks the worst-case-span and typical-span loss bounds.
pub fn transfer_check(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let t = cfg.tokenizer.clone().unwrap_or_default();
    let tc: TransferConfig = cfg.transfer.clone().unwrap_or_default();
    let prov = Provenance::of(cfg);
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let src = source_for_seed(cfg, seed)?;
        let kernel = require_kernel(&src)?;
        for (name, vocab) in vocabularies(&t, &src.alphabet, &src.seq)? {
            let tokens = vocab.greedy_parse(&src.seq)?;
            let stats = compression_stats(&vocab, &tokens)?;
            for &w in &cfg.windows {
                let ws = worst_case_span(&vocab, w, SpanMode::Empirical, Some(&tokens))?;
                let q = ContextPredictor::optimal(kernel, ws)?.smoothed(tc.eta)?;
                let e = TransferredPredictor::new(q, vocab.clone(), w)?.evaluate(&tokens)?;
                let exact = kernel.conditional_entropy(ws)?;
                let bound = exact + tc.tolerance_bits;
                let holds = e.per_source_symbol <= bound;
                let c = Check {
                    kind: "worst_case",
                    w_s: ws,
                    epsilon: 0.0,
                    exact,
                    bound,
                    holds,
                };
                rows.push(transfer_row(seed, &name, w, stats.rate, c, &e));

                let hist = span_distribution(&vocab, &tokens, w)?;
                for &f in &tc.span_factors {
                    let w_s = f * w;
                    let q = ContextPredictor::optimal(kernel, w_s)?.smoothed(tc.eta)?;
                    let p = make_typical(TransferredPredictor::new(q, vocab.clone(), w)?, w_s);
                    let e = p.evaluate(&tokens)?;
                    let eps = hist.cdf_below(w_s);
                    let exact = kernel.conditional_entropy(w_s)?;
                    let bound = exact + eps * stats.rate * stats.log2_alphabet;
                    let holds = e.per_source_symbol <= bound + 3.0 * e.per_source_symbol_se;
                    let c = Check {
                        kind: "typical",
                        w_s,
                        epsilon: eps,
                        exact,
                        bound,
                        holds,
                    };
                    rows.push(transfer_row(seed, &name, w, stats.rate, c, &e));
                }
            }
        }
    }
    let mut written = Vec::new();
    write_both(dir, "transfer", &rows, &prov, &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitRow {
    pub seed: u64,
    pub d: usize,
    pub vocab_size: usize,
    pub beta: f64,
    pub delta: f64,
    pub ell_d: f64,
    pub miss_prob: f64,
    pub miss_se: f64,
    pub short_token_prob: f64,
    pub inclusion_violations: usize,
    pub alpha: f64,
    pub alpha_lower_bound: f64,
    pub alpha_bound_holds: bool,
    pub rate_bits: f64,
    pub rate_bound_bits: f64,
    pub heavy_hitting_regime: bool,
    pub w: usize,
    pub w_d: usize,
    pub window_failure_prob: f64,
    pub window_bound: f64,
    pub window_holds: bool,
    pub token_loss: f64,
    pub token_loss_se: f64,
    pub exact_l_y_w_d: f64,
    pub loss_bound: f64,
    pub loss_holds: bool,
}

/// LZW vocabularies at each budget, with the heavy-hitting diagnostics and
/// the end-to-end loss bound at each window.
pub fn heavy_hitting(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let h = cfg.heavy_hitting.clone().unwrap_or_default();
    let train_len = cfg
        .tokenizer
        .as_ref()
        .and_then(|t| t.train_length);
    let prov = Provenance::of(cfg);
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let src = source_for_seed(cfg, seed)?;
        let kernel = require_kernel(&src)?;
        if kernel.min_transition_prob() <= 0.0 {
            return Err(Error::Assumption(format!(
                "seed {seed}: the kernel has a zero transition probability"
            )));
        }
        let train = &src.seq[..train_len.unwrap_or(src.seq.len()).min(src.seq.len())];
        for &d in &h.budgets {
            let vocab = train_lzw(&src.alphabet, train, d)?;
            let tokens = vocab.greedy_parse(&src.seq)?;
            let rep = heavy_hitting_report(kernel, &vocab, &tokens, h.beta, d, &cfg.windows)?;
            for wc in &rep.windows {
                let q = ContextPredictor::optimal(kernel, wc.w_d)?.smoothed(h.eta)?;
                let p = make_typical(TransferredPredictor::new(q, vocab.clone(), wc.w)?, wc.w_d);
                let e = p.evaluate(&tokens)?;
                let exact = kernel.conditional_entropy(wc.w_d)?;
                let bound = exact + rep.loss_slack_bits;
                rows.push(HeavyHitRow {
                    seed,
                    d,
                    vocab_size: vocab.len(),
                    beta: h.beta,
                    delta: rep.delta,
                    ell_d: rep.ell_d,
                    miss_prob: rep.miss_prob,
                    miss_se: rep.miss_se,
                    short_token_prob: rep.short_token_prob,
                    inclusion_violations: rep.inclusion_violations,
                    alpha: rep.alpha,
                    alpha_lower_bound: rep.alpha_lower_bound,
                    alpha_bound_holds: rep.alpha_bound_holds,
                    rate_bits: rep.rate_bits,
                    rate_bound_bits: rep.rate_bound_bits,
                    heavy_hitting_regime: rep.heavy_hitting_regime,
                    w: wc.w,
                    w_d: wc.w_d,
                    window_failure_prob: wc.failure_prob,
                    window_bound: wc.bound,
                    window_holds: wc.holds,
                    token_loss: e.per_source_symbol,
                    token_loss_se: e.per_source_symbol_se,
                    exact_l_y_w_d: exact,
                    loss_bound: bound,
                    loss_holds: e.per_source_symbol <= bound + 3.0 * e.per_source_symbol_se,
                });
            }
        }
    }
    let mut written = Vec::new();
    write_both(dir, "heavy_hitting", &rows, &prov, &mut written)?;
    Ok(written)
}
