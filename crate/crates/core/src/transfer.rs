//! Token-level predictors built from a source-level predictor and a greedy
//! vocabulary, and their evaluation in bits per source symbol.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::Symbol;
use crate::ngram::ContextPredictor;
use crate::numeric::CompensatedSum;
use crate::tokenizer::{PrefixVocabulary, TokenId};

/// Smoothing applied before transferring exact predictors, which may contain
/// zeros.
pub const DEFAULT_TRANSFER_ETA: f64 = 1e-6;

const BATCHES: usize = 50;

/// `(1 - eta) q + eta / |Y|`.
pub fn smooth(q: &ContextPredictor, eta: f64) -> Result<ContextPredictor> {
    q.smoothed(eta)
}

/// Sequential extension: probability that `q` emits `u` after `history`.
pub fn seq_extend(q: &ContextPredictor, history: &[Symbol], u: &[Symbol]) -> Result<f64> {
    let m = q.context_length();
    if history.len() < m {
        return Err(Error::Precondition(format!(
            "history of {} symbols is shorter than the context length {m}",
            history.len()
        )));
    }
    let mut buf = history[history.len() - m..].to_vec();
    let mut p = 1.0;
    for &a in u {
        p *= q.prob(&buf[buf.len() - m..], a);
        buf.push(a);
    }
    Ok(p)
}

/// Token predictor with `w`-token contexts induced by a source predictor `q`.
#[derive(Debug, Clone)]
pub struct TransferredPredictor {
    q: ContextPredictor,
    vocab: PrefixVocabulary,
    w: usize,
    lambda_q: f64,
}

/// Losses of a token predictor on a stream, with the matching source loss of
/// the underlying `q` over the same source symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEvaluation {
    /// Tokens scored (all but the first `w` and the last).
    pub tokens: usize,
    /// Source symbols covered by the scored tokens.
    pub source_symbols: usize,
    pub token_loss_bits: f64,
    /// Loss of `q` itself on the covered source symbols.
    pub source_loss_bits: f64,
    /// `token_loss_bits / source_symbols`.
    pub per_source_symbol: f64,
    /// Batch-means standard error of `per_source_symbol`.
    pub per_source_symbol_se: f64,
    pub source_per_symbol: f64,
    /// Tokens scored with the uniform fallback.
    pub uniform_fallbacks: usize,
    pub zero_probability_events: usize,
    /// Smallest and largest stop probability seen at token ends.
    pub min_stop_prob: f64,
    pub max_stop_prob: f64,
    pub lambda_q: f64,
    /// `2 log2(1 / lambda_q)`.
    pub bound_2log_1_over_lambda: f64,
}

impl TransferEvaluation {
    /// Cumulative token loss minus cumulative source loss.
    pub fn difference(&self) -> f64 {
        self.token_loss_bits - self.source_loss_bits
    }
}

enum TokenScore {
    Bits(f64),
    Fallback,
    Zero,
}

impl TransferredPredictor {
    pub fn new(q: ContextPredictor, vocab: PrefixVocabulary, w: usize) -> Result<Self> {
        if w == 0 {
            return Err(Error::param("token window must be at least 1"));
        }
        if q.alphabet() != vocab.alphabet() {
            return Err(Error::param("predictor and vocabulary use different alphabets"));
        }
        let lambda_q = q.positivity_floor();
        if lambda_q <= 0.0 {
            return Err(Error::Positivity(
                "some conditional probability is zero; smooth the predictor first".into(),
            ));
        }
        Ok(Self {
            q,
            vocab,
            w,
            lambda_q,
        })
    }

    pub fn vocab(&self) -> &PrefixVocabulary {
        &self.vocab
    }

    pub fn source_predictor(&self) -> &ContextPredictor {
        &self.q
    }

    pub fn window(&self) -> usize {
        self.w
    }

    pub fn lambda_q(&self) -> f64 {
        self.lambda_q
    }

    /// Probability of `z` after `context` (at least `w` tokens; only the
    /// last `w` are read).
    pub fn prob(&self, context: &[TokenId], z: TokenId) -> Result<f64> {
        let (ys, offsets) = self.layout(context, z)?;
        Ok(match self.score(&ys, &offsets, offsets.len() - 2, None) {
            TokenScore::Bits(b) => (-b).exp2(),
            TokenScore::Fallback => 1.0 / self.vocab.len() as f64,
            TokenScore::Zero => 0.0,
        })
    }

    /// `prob` for every vocabulary entry, indexed by token id.
    pub fn distribution(&self, context: &[TokenId]) -> Result<Vec<f64>> {
        (0..self.vocab.len() as TokenId)
            .map(|z| self.prob(context, z))
            .collect()
    }

    fn layout(&self, context: &[TokenId], z: TokenId) -> Result<(Vec<Symbol>, Vec<usize>)> {
        if context.len() < self.w {
            return Err(Error::Precondition(format!(
                "token context has {} tokens, window is {}",
                context.len(),
                self.w
            )));
        }
        let mut ys = Vec::new();
        let mut offsets = vec![0];
        for &t in context[context.len() - self.w..].iter().chain(std::iter::once(&z)) {
            ys.extend_from_slice(self.vocab.entry(t)?);
            offsets.push(ys.len());
        }
        Ok((ys, offsets))
    }

    /// Scores token `i`, whose window is tokens `i - w .. i`. `gate` forces
    /// the uniform fallback when the window spans fewer symbols.
    fn score(&self, ys: &[Symbol], offsets: &[usize], i: usize, gate: Option<usize>) -> TokenScore {
        let m = self.q.context_length();
        let start = offsets[i];
        let end = offsets[i + 1];
        let span = start - offsets[i - self.w];
        if span < m || gate.is_some_and(|g| span < g) {
            return TokenScore::Fallback;
        }
        let prev = self.token_at(ys, offsets, i - 1);
        let first = ys[start];
        if self.vocab.extends(prev, first) {
            return TokenScore::Zero;
        }
        let den = self.stop_prob(prev, &ys[start - m..start]);
        if den <= 0.0 {
            return TokenScore::Fallback;
        }
        let z = self.token_at(ys, offsets, i);
        let mut bits = 0.0;
        for j in start..end {
            bits -= self.q.prob(&ys[j - m..j], ys[j]).log2();
        }
        let stop = self.stop_prob(z, &ys[end - m..end]);
        TokenScore::Bits(bits - stop.log2() + den.log2())
    }

    fn token_at(&self, ys: &[Symbol], offsets: &[usize], i: usize) -> TokenId {
        self.vocab
            .id_of(&ys[offsets[i]..offsets[i + 1]])
            .expect("stream was built from vocabulary entries")
    }

    /// `1 - sum_{a in Ext(z)} q(a | ctx)`, summed over the complement.
    fn stop_prob(&self, z: TokenId, ctx: &[Symbol]) -> f64 {
        let row = self.q.row(ctx);
        let mut s = CompensatedSum::new();
        for (a, &p) in row.iter().enumerate() {
            if !self.vocab.extends(z, a as Symbol) {
                s.add(p);
            }
        }
        s.value()
    }

    /// Scores every token after the first `w` of a stream except the last,
    /// whose end is set by truncation rather than by the parser.
    pub fn evaluate(&self, tokens: &[TokenId]) -> Result<TransferEvaluation> {
        self.evaluate_gated(tokens, None)
    }

    fn evaluate_gated(&self, tokens: &[TokenId], gate: Option<usize>) -> Result<TransferEvaluation> {
        if tokens.len() <= self.w + 1 {
            return Err(Error::Data(format!(
                "{} tokens leave nothing to score with window {}",
                tokens.len(),
                self.w
            )));
        }
        let ys = self.vocab.expand(tokens)?;
        let mut offsets = Vec::with_capacity(tokens.len() + 1);
        offsets.push(0);
        for &t in tokens {
            offsets.push(offsets.last().unwrap() + self.vocab.token_len(t));
        }
        let m = self.q.context_length();
        let uniform_bits = (self.vocab.len() as f64).log2();

        let mut per_token = Vec::with_capacity(tokens.len() - self.w);
        let mut fallbacks = 0;
        let mut zeros = 0;
        let mut min_stop = f64::INFINITY;
        let mut max_stop = f64::NEG_INFINITY;
        for i in self.w..tokens.len() - 1 {
            let bits = match self.score(&ys, &offsets, i, gate) {
                TokenScore::Bits(b) => {
                    let end = offsets[i + 1];
                    let stop = self.stop_prob(tokens[i], &ys[end - m..end]);
                    min_stop = min_stop.min(stop);
                    max_stop = max_stop.max(stop);
                    b
                }
                TokenScore::Fallback => {
                    fallbacks += 1;
                    uniform_bits
                }
                TokenScore::Zero => {
                    zeros += 1;
                    f64::INFINITY
                }
            };
            per_token.push((bits, self.vocab.token_len(tokens[i])));
        }

        let first = offsets[self.w].max(m);
        let last = offsets[tokens.len() - 1];
        let mut source = CompensatedSum::new();
        for j in first..last {
            source.add(-self.q.prob(&ys[j - m..j], ys[j]).log2());
        }

        let token_loss = if zeros > 0 {
            f64::INFINITY
        } else {
            per_token.iter().map(|&(b, _)| b).collect::<CompensatedSum>().value()
        };
        let symbols: usize = per_token.iter().map(|&(_, l)| l).sum();
        let per_symbol = token_loss / symbols as f64;
        let covered = last.saturating_sub(first);
        Ok(TransferEvaluation {
            tokens: per_token.len(),
            source_symbols: symbols,
            token_loss_bits: token_loss,
            source_loss_bits: source.value(),
            per_source_symbol: per_symbol,
            per_source_symbol_se: batch_means_se(&per_token),
            source_per_symbol: if covered > 0 {
                source.value() / covered as f64
            } else {
                f64::NAN
            },
            uniform_fallbacks: fallbacks,
            zero_probability_events: zeros,
            min_stop_prob: min_stop,
            max_stop_prob: max_stop,
            lambda_q: self.lambda_q,
            bound_2log_1_over_lambda: 2.0 * (1.0 / self.lambda_q).log2(),
        })
    }
}

/// Standard error of a ratio estimator from contiguous batches.
fn batch_means_se(per_token: &[(f64, usize)]) -> f64 {
    let b = BATCHES.min(per_token.len() / 2);
    if b < 2 {
        return f64::NAN;
    }
    let size = per_token.len() / b;
    let ratios: Vec<f64> = per_token
        .chunks(size)
        .take(b)
        .map(|c| {
            let bits: f64 = c.iter().map(|&(x, _)| x).sum();
            let len: usize = c.iter().map(|&(_, l)| l).sum();
            bits / len as f64
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / b as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

/// Transferred predictor that switches to uniform over the vocabulary on
/// windows spanning fewer than `w_s` source symbols.
#[derive(Debug, Clone)]
pub struct TypicalPredictor {
    inner: TransferredPredictor,
    w_s: usize,
}

impl TypicalPredictor {
    pub fn new(inner: TransferredPredictor, w_s: usize) -> Self {
        Self { inner, w_s }
    }

    pub fn span_threshold(&self) -> usize {
        self.w_s
    }

    pub fn inner(&self) -> &TransferredPredictor {
        &self.inner
    }

    pub fn prob(&self, context: &[TokenId], z: TokenId) -> Result<f64> {
        let (ys, offsets) = self.inner.layout(context, z)?;
        Ok(match self.inner.score(&ys, &offsets, offsets.len() - 2, Some(self.w_s)) {
            TokenScore::Bits(b) => (-b).exp2(),
            TokenScore::Fallback => 1.0 / self.inner.vocab.len() as f64,
            TokenScore::Zero => 0.0,
        })
    }

    pub fn evaluate(&self, tokens: &[TokenId]) -> Result<TransferEvaluation> {
        self.inner.evaluate_gated(tokens, Some(self.w_s))
    }
}

pub fn make_typical(transferred: TransferredPredictor, w_s: usize) -> TypicalPredictor {
    TypicalPredictor::new(transferred, w_s)
}

/// Token loss converted to bits per source symbol.
pub fn token_loss_per_source_symbol(eval: &TransferEvaluation) -> f64 {
    eval.per_source_symbol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{Alphabet, TransitionKernel};

    fn bits() -> Alphabet {
        Alphabet::numeric(2).unwrap()
    }

    fn two_state() -> TransitionKernel {
        TransitionKernel::new(bits(), 1, vec![0.7, 0.3, 0.4, 0.6]).unwrap()
    }

    fn fig4() -> PrefixVocabulary {
        PrefixVocabulary::build(&bits(), [vec![0, 1, 0]], None).unwrap()
    }

    #[test]
    fn seq_extend_examples() {
        let q = ContextPredictor::optimal(&two_state(), 1).unwrap();
        assert!((seq_extend(&q, &[0, 1], &[0, 1]).unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(seq_extend(&q, &[1], &[]).unwrap(), 1.0);
        assert_eq!(seq_extend(&q, &[1], &[0]).unwrap(), 0.4);
        assert!(matches!(seq_extend(&q, &[], &[0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_floor_is_rejected() {
        let k = TransitionKernel::new(bits(), 1, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        let q = ContextPredictor::optimal(&k, 1).unwrap();
        let r = TransferredPredictor::new(q, fig4(), 2);
        assert!(matches!(r, Err(Error::Positivity(_))));
    }

    #[test]
    fn identity_vocab_reproduces_source_loss() {
        let k = two_state();
        let q = ContextPredictor::optimal(&k, 1).unwrap();
        let v = PrefixVocabulary::identity(&bits());
        let seq = k.sample_sequence(5000, 2).unwrap();
        let t = v.greedy_parse(&seq).unwrap();
        let e = TransferredPredictor::new(q, v, 3).unwrap().evaluate(&t).unwrap();
        assert!(e.difference().abs() < 1e-9);
        assert_eq!(e.uniform_fallbacks, 0);
    }

    #[test]
    fn figure_vocab_distributions_normalize() {
        let q = smooth(&ContextPredictor::optimal(&two_state(), 1).unwrap(), 0.01).unwrap();
        let v = fig4();
        let p = TransferredPredictor::new(q, v.clone(), 2).unwrap();
        for a in 0..v.len() as TokenId {
            for b in 0..v.len() as TokenId {
                let dist = p.distribution(&[a, b]).unwrap();
                let total: f64 = dist.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "context {a},{b}: {total}");
                // tokens the greedy parser could not emit after b get nothing
                for (z, &pz) in dist.iter().enumerate() {
                    if v.extends(b, v.entry(z as TokenId).unwrap()[0]) {
                        assert_eq!(pz, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn telescoping_bounds_the_difference() {
        let k = two_state();
        let q = smooth(&ContextPredictor::optimal(&k, 1).unwrap(), 0.01).unwrap();
        let v = fig4();
        let seq = k.sample_sequence(20_000, 4).unwrap();
        let t = v.greedy_parse(&seq).unwrap();
        let e = TransferredPredictor::new(q, v, 2).unwrap().evaluate(&t).unwrap();
        assert!(e.difference().abs() <= e.bound_2log_1_over_lambda + 1e-9);
        assert!(e.min_stop_prob >= e.lambda_q - 1e-15);
        assert!(e.max_stop_prob <= 1.0 + 1e-12);
    }

    #[test]
    fn all_bad_windows_cost_log_vocab() {
        let k = two_state();
        let q = smooth(&ContextPredictor::optimal(&k, 1).unwrap(), 0.01).unwrap();
        let v = fig4();
        let seq = k.sample_sequence(2000, 5).unwrap();
        let t = v.greedy_parse(&seq).unwrap();
        let p = make_typical(TransferredPredictor::new(q, v.clone(), 2).unwrap(), usize::MAX);
        let e = p.evaluate(&t).unwrap();
        assert_eq!(e.uniform_fallbacks, e.tokens);
        assert!((e.token_loss_bits / e.tokens as f64 - (v.len() as f64).log2()).abs() < 1e-12);
        assert_eq!(p.prob(&[0, 0], 1).unwrap(), 0.25);
    }

    #[test]
    fn typical_with_no_bad_windows_matches_transferred() {
        let k = two_state();
        let q = smooth(&ContextPredictor::optimal(&k, 1).unwrap(), 0.01).unwrap();
        let v = fig4();
        let seq = k.sample_sequence(3000, 6).unwrap();
        let t = v.greedy_parse(&seq).unwrap();
        let inner = TransferredPredictor::new(q, v, 2).unwrap();
        let a = inner.evaluate(&t).unwrap();
        let b = make_typical(inner, 2).evaluate(&t).unwrap();
        assert_eq!(a, b);
    }
}
