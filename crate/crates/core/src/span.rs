//! Source-span statistics of token windows, typical-span slack, and
//! heavy-hitting diagnostics for tokenizers over Markov sources.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Symbol, TransitionKernel};
use crate::numeric::proportion_with_se;
use crate::tokenizer::{PrefixVocabulary, TokenId};

/// Total source length of a token window.
pub fn source_span(vocab: &PrefixVocabulary, window: &[TokenId]) -> usize {
    window.iter().map(|&t| vocab.token_len(t)).sum()
}

fn prefix_lengths(vocab: &PrefixVocabulary, tokens: &[TokenId]) -> Vec<usize> {
    let mut acc = Vec::with_capacity(tokens.len() + 1);
    acc.push(0);
    let mut s = 0;
    for &t in tokens {
        s += vocab.token_len(t);
        acc.push(s);
    }
    acc
}

/// Empirical distribution of `w`-token window spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanHistogram {
    pub w: usize,
    pub counts: BTreeMap<usize, u64>,
    pub windows: u64,
}

impl SpanHistogram {
    /// `Pr[S < w_s]`.
    pub fn cdf_below(&self, w_s: usize) -> f64 {
        if self.windows == 0 {
            return 0.0;
        }
        let below: u64 = self.counts.range(..w_s).map(|(_, c)| c).sum();
        below as f64 / self.windows as f64
    }

    pub fn probabilities(&self) -> BTreeMap<usize, f64> {
        self.counts
            .iter()
            .map(|(&s, &c)| (s, c as f64 / self.windows as f64))
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.counts.iter().map(|(&s, &c)| s as f64 * c as f64).sum();
        total / self.windows as f64
    }

    pub fn min_span(&self) -> Option<usize> {
        self.counts.keys().next().copied()
    }

    pub fn max_span(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }
}

/// Spans of every sliding `w`-window, skipping windows that start in the
/// first `w` tokens.
pub fn span_distribution(vocab: &PrefixVocabulary, tokens: &[TokenId], w: usize) -> Result<SpanHistogram> {
    if w == 0 {
        return Err(Error::param("window length must be at least 1"));
    }
    if tokens.len() < 2 * w {
        return Err(Error::Data(format!(
            "{} tokens leave no {w}-token window after the first {w}",
            tokens.len()
        )));
    }
    let acc = prefix_lengths(vocab, tokens);
    let mut counts = BTreeMap::new();
    for i in w..=tokens.len() - w {
        *counts.entry(acc[i + w] - acc[i]).or_insert(0u64) += 1;
    }
    let windows = (tokens.len() - 2 * w + 1) as u64;
    Ok(SpanHistogram { w, counts, windows })
}

/// Which windows `worst_case_span` minimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanMode {
    /// Windows observed in a greedy parse.
    Empirical,
    /// All `w`-tuples of entries, ignoring greedy validity; a lower bound.
    Exhaustive,
}

/// Smallest span of a `w`-token window. `tokens` is required in empirical
/// mode.
pub fn worst_case_span(
    vocab: &PrefixVocabulary,
    w: usize,
    mode: SpanMode,
    tokens: Option<&[TokenId]>,
) -> Result<usize> {
    match mode {
        SpanMode::Exhaustive => Ok(w * vocab.min_entry_len()),
        SpanMode::Empirical => {
            let tokens = tokens.ok_or_else(|| {
                Error::Precondition("empirical worst-case span needs a parsed stream".into())
            })?;
            if tokens.len() < w {
                return Err(Error::Data("stream is shorter than the window".into()));
            }
            let acc = prefix_lengths(vocab, tokens);
            Ok((0..=tokens.len() - w)
                .map(|i| acc[i + w] - acc[i])
                .min()
                .unwrap_or(0))
        }
    }
}

/// `epsilon(w, w_s)`: the fraction of windows spanning fewer than `w_s`.
pub fn typical_epsilon(vocab: &PrefixVocabulary, tokens: &[TokenId], w: usize, w_s: usize) -> Result<f64> {
    Ok(span_distribution(vocab, tokens, w)?.cdf_below(w_s))
}

/// Mean token length and uniform-code rate of a parsed stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionStats {
    /// Mean source symbols per emitted token.
    pub alpha: f64,
    /// `log2|Z| / (alpha log2|Y|)`.
    pub rate: f64,
    pub log2_alphabet: f64,
    pub vocab_size: usize,
}

pub fn compression_stats(vocab: &PrefixVocabulary, tokens: &[TokenId]) -> Result<CompressionStats> {
    compression_stats_for_alphabet(vocab, tokens, vocab.alphabet().len())
}

/// As [`compression_stats`] with an explicit source alphabet size.
pub fn compression_stats_for_alphabet(
    vocab: &PrefixVocabulary,
    tokens: &[TokenId],
    alphabet_size: usize,
) -> Result<CompressionStats> {
    if tokens.is_empty() {
        return Err(Error::Data("empty token stream".into()));
    }
    if alphabet_size < 2 {
        return Err(Error::param("alphabet size must be at least 2"));
    }
    let alpha = source_span(vocab, tokens) as f64 / tokens.len() as f64;
    let log2_alphabet = (alphabet_size as f64).log2();
    Ok(CompressionStats {
        alpha,
        rate: (vocab.len() as f64).log2() / (alpha * log2_alphabet),
        log2_alphabet,
        vocab_size: vocab.len(),
    })
}

/// One point of the slack curve `epsilon * R * log2|Y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackPoint {
    pub w_s: usize,
    pub epsilon: f64,
    pub slack_bits: f64,
}

pub fn slack_curve(
    hist: &SpanHistogram,
    stats: &CompressionStats,
    w_s_values: impl IntoIterator<Item = usize>,
) -> Vec<SlackPoint> {
    w_s_values
        .into_iter()
        .map(|w_s| {
            let epsilon = hist.cdf_below(w_s);
            SlackPoint {
                w_s,
                epsilon,
                slack_bits: epsilon * stats.rate * stats.log2_alphabet,
            }
        })
        .collect()
}

/// Span statistics of one window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub w: usize,
    pub span_histogram: BTreeMap<usize, f64>,
    pub worst_case_span: usize,
    pub alpha: f64,
    pub rate: f64,
    pub slack_curve: Vec<SlackPoint>,
}

pub fn span_report(
    vocab: &PrefixVocabulary,
    tokens: &[TokenId],
    w: usize,
    w_s_values: impl IntoIterator<Item = usize>,
) -> Result<SpanReport> {
    let hist = span_distribution(vocab, tokens, w)?;
    let stats = compression_stats(vocab, tokens)?;
    Ok(SpanReport {
        w,
        span_histogram: hist.probabilities(),
        worst_case_span: worst_case_span(vocab, w, SpanMode::Empirical, Some(tokens))?,
        alpha: stats.alpha,
        rate: stats.rate,
        slack_curve: slack_curve(&hist, &stats, w_s_values),
    })
}

/// `log2 max_c P(t | c)` by a max-product recursion over context states.
pub fn log2_p_max(kernel: &TransitionKernel, t: &[Symbol]) -> f64 {
    let mut state = initial_state(kernel);
    for &a in t {
        state = advance(kernel, &state, a);
    }
    state.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn p_max(kernel: &TransitionKernel, t: &[Symbol]) -> f64 {
    log2_p_max(kernel, t).exp2()
}

fn initial_state(kernel: &TransitionKernel) -> Vec<f64> {
    vec![0.0; kernel.num_contexts()]
}

fn advance(kernel: &TransitionKernel, state: &[f64], a: Symbol) -> Vec<f64> {
    let mut next = vec![f64::NEG_INFINITY; state.len()];
    for (c, &v) in state.iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        let p = kernel.prob(c, a);
        if p == 0.0 {
            continue;
        }
        let d = kernel.next_context(c, a);
        let cand = v + p.log2();
        if cand > next[d] {
            next[d] = cand;
        }
    }
    next
}

/// `log2 p_max` of every vocabulary entry, sharing work along trie paths.
pub fn log2_p_max_table(kernel: &TransitionKernel, vocab: &PrefixVocabulary) -> Vec<f64> {
    let mut out = Vec::with_capacity(vocab.len());
    let mut path: Vec<Vec<f64>> = Vec::new();
    let root = initial_state(kernel);
    for e in vocab.entries() {
        path.truncate(e.len() - 1);
        let parent = path.last().unwrap_or(&root);
        let state = advance(kernel, parent, *e.last().expect("entries are nonempty"));
        out.push(state.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        path.push(state);
    }
    out
}

/// Window-level bound check at one window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub w: usize,
    /// `floor(3/4 * w * ell_d)`.
    pub w_d: usize,
    /// `Pr[S < w_d]` over windows.
    pub failure_prob: f64,
    pub failure_se: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Heavy-hitting diagnostics for a vocabulary over a `delta`-positive source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitReport {
    pub beta: f64,
    pub d: usize,
    pub delta: f64,
    pub ell_d: f64,
    pub tokens: usize,
    /// `eta`: fraction of emitted tokens with `p_max > d^-beta`.
    pub miss_prob: f64,
    pub miss_se: f64,
    /// Fraction of emitted tokens shorter than `ell_d`.
    pub short_token_prob: f64,
    pub short_se: f64,
    /// Tokens that are short yet not misses; the inclusion says this is zero.
    pub inclusion_violations: usize,
    pub alpha: f64,
    pub alpha_se: f64,
    /// `(1 - eta) ell_d + eta`.
    pub alpha_lower_bound: f64,
    pub alpha_bound_holds: bool,
    /// `log2 d / ((1 - eta) ell_d + eta)`, an upper bound on `R log2|Y|`.
    pub rate_bound_bits: f64,
    pub rate_bits: f64,
    /// `4 eta log2 d / ((1 - eta) ell_d + eta)`.
    pub loss_slack_bits: f64,
    pub windows: Vec<WindowCheck>,
    /// `eta <= 1/4` and `ell_d > 1`.
    pub heavy_hitting_regime: bool,
}

/// Measures how often emitted tokens are improbable under every context and
/// checks the resulting length, span, and rate bounds. Standard errors use
/// `n / w` effective samples for overlapping windows.
pub fn heavy_hitting_report(
    kernel: &TransitionKernel,
    vocab: &PrefixVocabulary,
    tokens: &[TokenId],
    beta: f64,
    d: usize,
    windows: &[usize],
) -> Result<HeavyHitReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    if d < 2 {
        return Err(Error::param("d must be at least 2"));
    }
    if tokens.is_empty() {
        return Err(Error::Data("empty token stream".into()));
    }
    let delta = kernel.min_transition_prob();
    if delta <= 0.0 {
        return Err(Error::Assumption(
            "the source has a zero transition probability (delta = 0)".into(),
        ));
    }
    let log2_d = (d as f64).log2();
    let ell_d = beta * log2_d / (1.0 / delta).log2();
    let threshold = -beta * log2_d;
    let table = log2_p_max_table(kernel, vocab);

    let mut misses = 0u64;
    let mut shorts = 0u64;
    let mut violations = 0usize;
    let mut len_sum = 0f64;
    let mut len_sq = 0f64;
    for &t in tokens {
        let len = vocab.token_len(t);
        let miss = table[t as usize] > threshold;
        let short = (len as f64) < ell_d;
        misses += u64::from(miss);
        shorts += u64::from(short);
        if short && !miss {
            violations += 1;
        }
        len_sum += len as f64;
        len_sq += (len * len) as f64;
    }
    let n = tokens.len() as u64;
    let (eta, eta_se) = proportion_with_se(misses, n);
    let (short_p, short_se) = proportion_with_se(shorts, n);
    let alpha = len_sum / n as f64;
    let var = (len_sq / n as f64 - alpha * alpha).max(0.0);
    let alpha_se = (var / n as f64).sqrt();
    let alpha_lower_bound = (1.0 - eta) * ell_d + eta;
    let bound_se = (ell_d - 1.0).abs() * eta_se;
    let alpha_bound_holds = alpha + 3.0 * (alpha_se + bound_se) >= alpha_lower_bound;

    let mut checks = Vec::with_capacity(windows.len());
    for &w in windows {
        let hist = span_distribution(vocab, tokens, w)?;
        let w_d = (0.75 * w as f64 * ell_d).floor() as usize;
        let failure = hist.cdf_below(w_d);
        let eff = (hist.windows as f64 / w as f64).max(1.0);
        let failure_se = (failure * (1.0 - failure) / eff).sqrt();
        let bound = 4.0 * eta;
        checks.push(WindowCheck {
            w,
            w_d,
            failure_prob: failure,
            failure_se,
            bound,
            holds: failure <= bound + 3.0 * (failure_se + 4.0 * eta_se),
        });
    }

    Ok(HeavyHitReport {
        beta,
        d,
        delta,
        ell_d,
        tokens: tokens.len(),
        miss_prob: eta,
        miss_se: eta_se,
        short_token_prob: short_p,
        short_se,
        inclusion_violations: violations,
        alpha,
        alpha_se,
        alpha_lower_bound,
        alpha_bound_holds,
        rate_bound_bits: log2_d / alpha_lower_bound,
        rate_bits: (vocab.len() as f64).log2() / alpha,
        loss_slack_bits: 4.0 * eta * log2_d / alpha_lower_bound,
        windows: checks,
        heavy_hitting_regime: eta <= 0.25 && ell_d > 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::Alphabet;

    fn bits() -> Alphabet {
        Alphabet::numeric(2).unwrap()
    }

    fn fig4() -> PrefixVocabulary {
        PrefixVocabulary::build(&bits(), [bits().encode_chars("010").unwrap()], None).unwrap()
    }

    fn fig4_parse() -> Vec<TokenId> {
        fig4().greedy_parse(&bits().encode_chars("0101110100").unwrap()).unwrap()
    }

    fn two_state() -> TransitionKernel {
        TransitionKernel::new(bits(), 1, vec![0.7, 0.3, 0.4, 0.6]).unwrap()
    }

    #[test]
    fn spans_of_small_windows() {
        let v = fig4();
        let t = fig4_parse();
        assert_eq!(source_span(&v, &t[..2]), 4);
        assert_eq!(source_span(&v, &[]), 0);
        let ident = PrefixVocabulary::identity(&bits());
        assert_eq!(source_span(&ident, &[0, 1, 1]), 3);
    }

    #[test]
    fn worst_case_for_figure() {
        let v = fig4();
        let t = fig4_parse();
        assert_eq!(worst_case_span(&v, 2, SpanMode::Empirical, Some(&t)).unwrap(), 2);
        assert_eq!(worst_case_span(&v, 2, SpanMode::Exhaustive, None).unwrap(), 2);
        assert!(worst_case_span(&v, 2, SpanMode::Empirical, None).is_err());
    }

    #[test]
    fn identity_histogram_is_a_point_mass() {
        let ident = PrefixVocabulary::identity(&bits());
        let t: Vec<TokenId> = (0..50).map(|i| (i % 2) as TokenId).collect();
        let h = span_distribution(&ident, &t, 4).unwrap();
        assert_eq!(h.probabilities(), BTreeMap::from([(4, 1.0)]));
        assert_eq!(h.cdf_below(4), 0.0);
        assert_eq!(h.cdf_below(5), 1.0);
        let s = compression_stats(&ident, &t).unwrap();
        assert_eq!((s.alpha, s.rate), (1.0, 1.0));
    }

    #[test]
    fn short_stream_is_a_data_error() {
        assert!(matches!(span_distribution(&fig4(), &fig4_parse(), 4), Err(Error::Data(_))));
    }

    #[test]
    fn p_max_two_paths() {
        let k = two_state();
        assert!((p_max(&k, &[0, 1]) - 0.21).abs() < 1e-12);
        assert!((p_max(&k, &[1]) - 0.6).abs() < 1e-12);
        assert!(p_max(&k, &[0, 1, 1, 0]) >= 0.3f64.powi(4));
    }

    #[test]
    fn p_max_table_matches_direct() {
        let k = TransitionKernel::sample(2, 2, 0.5, 1).unwrap();
        let v = PrefixVocabulary::build(&bits(), [vec![0, 1, 1, 0, 1], vec![1, 1, 1]], None).unwrap();
        let table = log2_p_max_table(&k, &v);
        for (i, e) in v.entries().iter().enumerate() {
            assert!((table[i] - log2_p_max(&k, e)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_delta_is_an_assumption_error() {
        let k = TransitionKernel::new(bits(), 1, vec![1.0, 0.0, 0.5, 0.5]).unwrap();
        let v = PrefixVocabulary::identity(&bits());
        let r = heavy_hitting_report(&k, &v, &[0, 1], 1.0, 4, &[]);
        assert!(matches!(r, Err(Error::Assumption(_))));
    }

    #[test]
    fn identity_vocab_is_not_heavy_hitting() {
        let k = two_state();
        let v = PrefixVocabulary::identity(&bits());
        let seq = k.sample_sequence(2000, 1).unwrap();
        let t = v.greedy_parse(&seq).unwrap();
        let r = heavy_hitting_report(&k, &v, &t, 1.0, 2, &[4]).unwrap();
        assert_eq!(r.inclusion_violations, 0);
        assert!(!r.heavy_hitting_regime);
        assert_eq!(r.alpha, 1.0);
    }
}
