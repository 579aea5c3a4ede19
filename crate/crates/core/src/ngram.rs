//! Finite-context predictors: Laplace-smoothed count models and exact
//! predictors derived from a kernel.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{encode_index, Alphabet, Symbol, TransitionKernel};
use crate::numeric::{checked_pow, CompensatedSum};

/// Laplace pseudo-count used when none is given.
pub const DEFAULT_LAPLACE: f64 = 0.5;

/// A conditional law `q(y | c)` over contexts of fixed length `w`.
#[derive(Debug, Clone)]
pub struct ContextPredictor {
    alphabet: Alphabet,
    w: usize,
    table: Table,
    /// Weight of the uniform component mixed into every row.
    mix: f64,
}

#[derive(Debug, Clone)]
enum Table {
    Counts {
        alpha: f64,
        rows: HashMap<u64, CountRow>,
    },
    /// Exact rows for every context, `|Y|^w * |Y|` entries.
    Dense(Vec<f64>),
    /// Kernel rows; only the last `k` context symbols are read.
    Lifted(TransitionKernel),
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CountRow {
    counts: Vec<u64>,
    total: u64,
}

/// Result of scoring a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossReport {
    /// Mean loss per predicted symbol, `inf` if any event had probability 0.
    pub bits_per_symbol: f64,
    pub total_bits: f64,
    pub predicted: usize,
    pub zero_probability_events: usize,
}

impl LossReport {
    pub fn is_infinite(&self) -> bool {
        self.zero_probability_events > 0
    }
}

impl ContextPredictor {
    /// Laplace-smoothed counts: `q(y|c) = (N(c,y) + alpha) / (N(c) + alpha |Y|)`.
    pub fn fit(alphabet: &Alphabet, sequence: &[Symbol], w: usize, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("laplace alpha must be >= 0, got {alpha}")));
        }
        let n = alphabet.len();
        let modulus = context_space(n, w)?;
        let mut rows: HashMap<u64, CountRow> = HashMap::new();
        let mut key = 0u64;
        for (i, &y) in sequence.iter().enumerate() {
            if usize::from(y) >= n {
                return Err(Error::Alphabet(format!("symbol index {y} out of range")));
            }
            if i >= w {
                let row = rows.entry(key).or_insert_with(|| CountRow {
                    counts: vec![0; n],
                    total: 0,
                });
                row.counts[usize::from(y)] += 1;
                row.total += 1;
            }
            key = roll(key, y, n, modulus);
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            w,
            table: Table::Counts { alpha, rows },
            mix: 0.0,
        })
    }

    /// Uniform law over the alphabet for every context.
    pub fn uniform(alphabet: &Alphabet, w: usize) -> Self {
        Self {
            alphabet: alphabet.clone(),
            w,
            table: Table::Uniform,
            mix: 0.0,
        }
    }

    /// Exact conditional law of the next symbol given `w` previous symbols
    /// under the stationary source.
    pub fn optimal(kernel: &TransitionKernel, w: usize) -> Result<Self> {
        Self::optimal_capped(kernel, w, crate::markov::DEFAULT_ENUMERATION_CAP)
    }

    pub fn optimal_capped(kernel: &TransitionKernel, w: usize, cap: usize) -> Result<Self> {
        let alphabet = kernel.alphabet().clone();
        if w >= kernel.order() {
            kernel.stationary_law()?;
            return Ok(Self {
                alphabet,
                w,
                table: Table::Lifted(kernel.clone()),
                mix: 0.0,
            });
        }
        let n = alphabet.len();
        let mut block = kernel.block_distribution(w + 1, cap)?;
        for row in block.chunks_mut(n) {
            let mass: f64 = row.iter().copied().collect::<CompensatedSum>().value();
            if mass > 0.0 {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.fill(1.0 / n as f64);
            }
        }
        Ok(Self {
            alphabet,
            w,
            table: Table::Dense(block),
            mix: 0.0,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn context_length(&self) -> usize {
        self.w
    }

    /// Laplace pseudo-count, for count-based predictors.
    pub fn laplace_alpha(&self) -> Option<f64> {
        match &self.table {
            Table::Counts { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// Total uniform mixing weight applied on top of the base table.
    pub fn smoothing(&self) -> f64 {
        self.mix
    }

    /// `(1 - eta) q + eta / |Y|`. Repeated smoothing composes.
    pub fn smoothed(&self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::param(format!("smoothing eta must lie in (0, 1), got {eta}")));
        }
        let mut out = self.clone();
        out.mix = 1.0 - (1.0 - self.mix) * (1.0 - eta);
        Ok(out)
    }

    /// `q(y | c)` where `context` holds at least `w` symbols (extra leading
    /// symbols are ignored).
    pub fn prob(&self, context: &[Symbol], y: Symbol) -> f64 {
        let n = self.alphabet.len();
        let base = self.base_prob(&context[context.len() - self.w..], y);
        (1.0 - self.mix) * base + self.mix / n as f64
    }

    /// The full row `q(. | c)`.
    pub fn row(&self, context: &[Symbol]) -> Vec<f64> {
        (0..self.alphabet.len())
            .map(|y| self.prob(context, y as Symbol))
            .collect()
    }

    fn base_prob(&self, ctx: &[Symbol], y: Symbol) -> f64 {
        let n = self.alphabet.len();
        match &self.table {
            Table::Uniform => 1.0 / n as f64,
            Table::Lifted(kernel) => {
                let c = kernel.context_index(ctx);
                kernel.prob(c, y)
            }
            Table::Dense(probs) => probs[encode_index(ctx, n) * n + usize::from(y)],
            Table::Counts { alpha, rows } => {
                let key = encode_key(ctx, n);
                count_prob(rows.get(&key), *alpha, n, y)
            }
        }
    }

    /// Smallest probability the predictor can assign to any symbol in any
    /// context (`lambda_q`). Zero means the predictor is not strictly positive.
    pub fn positivity_floor(&self) -> f64 {
        let n = self.alphabet.len();
        let uniform = 1.0 / n as f64;
        let base = match &self.table {
            Table::Uniform => uniform,
            Table::Lifted(kernel) => kernel.min_transition_prob(),
            Table::Dense(p) => p.iter().copied().fold(f64::INFINITY, f64::min),
            Table::Counts { alpha, rows } => {
                let mut floor = uniform;
                for row in rows.values() {
                    let min = row.counts.iter().copied().min().unwrap_or(0);
                    floor = floor.min(count_prob_raw(min, row.total, *alpha, n));
                }
                floor
            }
        };
        (1.0 - self.mix) * base + self.mix * uniform
    }

    /// `-(1/(n-w)) sum_{i>w} log2 q(y_i | y_{i-w}^{i-1})`.
    pub fn log_loss(&self, sequence: &[Symbol]) -> Result<LossReport> {
        if sequence.len() <= self.w {
            return Err(Error::Data(format!(
                "sequence of length {} is too short for context length {}",
                sequence.len(),
                self.w
            )));
        }
        let mut total = CompensatedSum::new();
        let mut zeros = 0usize;
        let predicted = sequence.len() - self.w;
        match &self.table {
            // rolling keys avoid re-encoding the context at every position
            Table::Counts { alpha, rows } => {
                let n = self.alphabet.len();
                let modulus = context_space(n, self.w)?;
                let mut key = 0u64;
                for (i, &y) in sequence.iter().enumerate() {
                    if i >= self.w {
                        let base = count_prob(rows.get(&key), *alpha, n, y);
                        let p = (1.0 - self.mix) * base + self.mix / n as f64;
                        accumulate(&mut total, &mut zeros, p);
                    }
                    key = roll(key, y, n, modulus);
                }
            }
            _ => {
                for i in self.w..sequence.len() {
                    let p = self.prob(&sequence[i - self.w..i], sequence[i]);
                    accumulate(&mut total, &mut zeros, p);
                }
            }
        }
        let total_bits = total.value();
        Ok(LossReport {
            bits_per_symbol: if zeros > 0 {
                f64::INFINITY
            } else {
                total_bits / predicted as f64
            },
            total_bits,
            predicted,
            zero_probability_events: zeros,
        })
    }

    /// Count-table serialization; exact predictors have no counts to store.
    pub fn to_file(&self) -> Result<PredictorFile> {
        let Table::Counts { alpha, rows } = &self.table else {
            return Err(Error::format("only count-based predictors can be serialized"));
        };
        let n = self.alphabet.len();
        let mut counts = BTreeMap::new();
        let mut ctx = vec![0 as Symbol; self.w];
        for (&key, row) in rows {
            decode_key(key, n, &mut ctx);
            let name = ctx.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
            counts.insert(name, row.counts.clone());
        }
        Ok(PredictorFile {
            alphabet: self.alphabet.labels().to_vec(),
            w: self.w,
            alpha: *alpha,
            smoothing: self.mix,
            counts,
        })
    }

    pub fn from_file(file: PredictorFile) -> Result<Self> {
        let alphabet = Alphabet::new(file.alphabet)?;
        let n = alphabet.len();
        context_space(n, file.w)?;
        if !(0.0..1.0).contains(&file.smoothing) {
            return Err(Error::format("smoothing must lie in [0, 1)"));
        }
        let mut rows = HashMap::new();
        for (name, counts) in file.counts {
            let ctx: Vec<Symbol> = if name.is_empty() {
                Vec::new()
            } else {
                name.split(',')
                    .map(|s| s.parse::<Symbol>().map_err(|e| Error::format(e.to_string())))
                    .collect::<Result<_>>()?
            };
            if ctx.len() != file.w || ctx.iter().any(|&s| usize::from(s) >= n) {
                return Err(Error::format(format!("bad context key {name:?}")));
            }
            if counts.len() != n {
                return Err(Error::format(format!("count row {name:?} has wrong width")));
            }
            let total = counts.iter().sum();
            rows.insert(encode_key(&ctx, n), CountRow { counts, total });
        }
        Ok(Self {
            alphabet,
            w: file.w,
            table: Table::Counts {
                alpha: file.alpha,
                rows,
            },
            mix: file.smoothing,
        })
    }
}

/// JSON form of a count-based predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorFile {
    pub alphabet: Vec<String>,
    pub w: usize,
    pub alpha: f64,
    #[serde(default)]
    pub smoothing: f64,
    /// Context (symbol indices joined by `,`) to per-symbol counts.
    pub counts: BTreeMap<String, Vec<u64>>,
}

fn accumulate(total: &mut CompensatedSum, zeros: &mut usize, p: f64) {
    if p > 0.0 {
        total.add(-p.log2());
    } else {
        *zeros += 1;
    }
}

fn count_prob(row: Option<&CountRow>, alpha: f64, n: usize, y: Symbol) -> f64 {
    match row {
        Some(r) => count_prob_raw(r.counts[usize::from(y)], r.total, alpha, n),
        None => 1.0 / n as f64,
    }
}

fn count_prob_raw(c: u64, total: u64, alpha: f64, n: usize) -> f64 {
    let denom = total as f64 + alpha * n as f64;
    if denom <= 0.0 {
        return 1.0 / n as f64;
    }
    (c as f64 + alpha) / denom
}

/// `|Y|^w` as a key modulus; errors if contexts cannot be keyed in 64 bits.
fn context_space(n: usize, w: usize) -> Result<u64> {
    checked_pow(n, w)
        .and_then(|m| u64::try_from(m).ok())
        .ok_or_else(|| {
            Error::Capacity(format!("{n}^{w} contexts do not fit a 64-bit context key"))
        })
}

fn roll(key: u64, y: Symbol, n: usize, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    ((u128::from(key) * n as u128 + u128::from(y)) % u128::from(modulus)) as u64
}

fn encode_key(ctx: &[Symbol], n: usize) -> u64 {
    ctx.iter()
        .fold(0u64, |acc, &s| acc * n as u64 + u64::from(s))
}

fn decode_key(mut key: u64, n: usize, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = (key % n as u64) as Symbol;
        key /= n as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::numeric(2).unwrap()
    }

    fn two_state() -> TransitionKernel {
        TransitionKernel::new(bin(), 1, vec![0.7, 0.3, 0.4, 0.6]).unwrap()
    }

    #[test]
    fn laplace_counts_by_hand() {
        // "0101": context 0 is followed by 1 twice
        let q = ContextPredictor::fit(&bin(), &[0, 1, 0, 1], 1, 0.5).unwrap();
        assert!((q.prob(&[0], 1) - 2.5 / 3.0).abs() < 1e-15);
        assert!((q.prob(&[0], 0) - 0.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_zero_gives_frequencies() {
        let q = ContextPredictor::fit(&bin(), &[0, 0, 1, 0, 1, 1], 1, 0.0).unwrap();
        // after 0: 0,1,1 ; after 1: 0,1
        assert!((q.prob(&[0], 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((q.prob(&[1], 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_sequence_is_uniform() {
        let q = ContextPredictor::fit(&bin(), &[], 3, 0.5).unwrap();
        assert_eq!(q.prob(&[0, 1, 1], 0), 0.5);
    }

    #[test]
    fn unseen_context_falls_back_to_uniform() {
        let a = Alphabet::numeric(3).unwrap();
        let q = ContextPredictor::fit(&a, &[0, 0, 0, 0], 1, 0.0).unwrap();
        assert!((q.prob(&[2], 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_loss_is_log_alphabet() {
        let a = Alphabet::numeric(5).unwrap();
        let q = ContextPredictor::uniform(&a, 2);
        let r = q.log_loss(&[0, 1, 2, 3, 4, 0, 1]).unwrap();
        assert!((r.bits_per_symbol - 5f64.log2()).abs() < 1e-12);
        assert_eq!(r.predicted, 5);
    }

    #[test]
    fn zero_probability_is_flagged() {
        let q = ContextPredictor::fit(&bin(), &[0, 0, 0, 0], 1, 0.0).unwrap();
        let r = q.log_loss(&[0, 0, 1]).unwrap();
        assert!(r.is_infinite());
        assert!(r.bits_per_symbol.is_infinite());
    }

    #[test]
    fn too_short_sequence_is_a_data_error() {
        let q = ContextPredictor::uniform(&bin(), 3);
        assert!(matches!(q.log_loss(&[0, 1, 0]), Err(Error::Data(_))));
    }

    #[test]
    fn optimal_lifted_rows_match_kernel() {
        let k = two_state();
        let q = ContextPredictor::optimal(&k, 3).unwrap();
        assert_eq!(q.prob(&[1, 1, 0], 1), 0.3);
        assert_eq!(q.prob(&[0, 0, 1], 0), 0.4);
    }

    #[test]
    fn optimal_w0_is_marginal() {
        let q = ContextPredictor::optimal(&two_state(), 0).unwrap();
        assert!((q.prob(&[], 0) - 4.0 / 7.0).abs() < 1e-11);
    }

    #[test]
    fn smoothing_arithmetic() {
        let k = TransitionKernel::new(bin(), 1, vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        let q = ContextPredictor::optimal(&k, 1).unwrap();
        let s = q.smoothed(0.01).unwrap();
        assert!((s.prob(&[0], 1) - 0.995).abs() < 1e-15);
        assert!((s.positivity_floor() - 0.005).abs() < 1e-15);
        let twice = s.smoothed(0.5).unwrap();
        assert!((twice.smoothing() - (1.0 - 0.99 * 0.5)).abs() < 1e-15);
        assert!(q.smoothed(0.0).is_err());
        assert!(q.smoothed(1.0).is_err());
    }

    #[test]
    fn laplace_floor_is_positive() {
        let seq: Vec<Symbol> = (0..200).map(|i| (i % 2) as Symbol).collect();
        let q = ContextPredictor::fit(&bin(), &seq, 2, 0.5).unwrap();
        let floor = q.positivity_floor();
        assert!(floor >= 0.5 / (seq.len() as f64 + 1.0));
        assert!(floor > 0.0);
    }

    #[test]
    fn file_round_trip() {
        let a = Alphabet::numeric(3).unwrap();
        let seq = [0, 2, 1, 1, 0, 2, 2, 1, 0];
        let q = ContextPredictor::fit(&a, &seq, 2, 0.5).unwrap();
        let f = q.to_file().unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back = ContextPredictor::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        for c0 in 0..3 {
            for c1 in 0..3 {
                for y in 0..3 {
                    assert_eq!(q.prob(&[c0, c1], y), back.prob(&[c0, c1], y));
                }
            }
        }
        assert!(ContextPredictor::optimal(&two_state(), 1).unwrap().to_file().is_err());
    }
}
