//! Stationary k-th order Markov sources over finite alphabets: construction,
//! sampling, and exact stationary-law and conditional-entropy computation.
//!
//! Contexts are indexed in base `|Y|` with the oldest symbol most significant,
//! so appending a symbol `y` to context `c` gives `(c * |Y| + y) mod |Y|^k`.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{checked_pow, compensated_sum, conditional_row_bits, CompensatedSum};
use crate::rng;

/// Index of a symbol in its [`Alphabet`].
pub type Symbol = u16;

/// Default cap on the number of table entries an exact enumeration may touch.
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000_000;

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_FLOOR_TOL: f64 = 1e-10;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
/// Context spaces up to this size are solved directly.
const DIRECT_SOLVE_MAX_CONTEXTS: usize = 512;

/// Ordered list of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::param("alphabet needs at least two symbols"));
        }
        if labels.len() > usize::from(Symbol::MAX) + 1 {
            return Err(Error::Capacity(format!(
                "alphabet of {} symbols exceeds the symbol type",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i as Symbol).is_some() {
                return Err(Error::param(format!("duplicate alphabet label {l:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// Alphabet labelled `"0"`, `"1"`, ..., `"n-1"`.
    pub fn numeric(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    /// Distinct characters of `text`, sorted by code point.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut chars: Vec<char> = text.chars().collect();
        chars.sort_unstable();
        chars.dedup();
        Self::new(chars.into_iter().map(String::from))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.labels[usize::from(s)]
    }

    pub fn symbol(&self, label: &str) -> Result<Symbol> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::Alphabet(label.to_string()))
    }

    /// True when every label is a single character, so strings over the
    /// alphabet can be written by plain concatenation.
    pub fn is_character_level(&self) -> bool {
        self.labels.iter().all(|l| l.chars().count() == 1)
    }

    /// Encodes a string of single-character labels.
    pub fn encode_chars(&self, text: &str) -> Result<Vec<Symbol>> {
        let mut buf = [0u8; 4];
        text.chars()
            .map(|c| self.symbol(c.encode_utf8(&mut buf)))
            .collect()
    }

    pub fn render(&self, symbols: &[Symbol]) -> String {
        if self.is_character_level() {
            symbols.iter().map(|&s| self.label(s)).collect()
        } else {
            symbols
                .iter()
                .map(|&s| self.label(s))
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
    /// JSON-friendly form of a string: plain text for character-level
    /// alphabets, a label list otherwise.
    pub fn to_label_string(&self, symbols: &[Symbol]) -> LabelString {
        if self.is_character_level() {
            LabelString::Text(self.render(symbols))
        } else {
            LabelString::Labels(symbols.iter().map(|&s| self.label(s).to_string()).collect())
        }
    }

    pub fn parse_label_string(&self, s: &LabelString) -> Result<Vec<Symbol>> {
        match s {
            LabelString::Text(t) => self.encode_chars(t),
            LabelString::Labels(ls) => ls.iter().map(|l| self.symbol(l)).collect(),
        }
    }
}

/// A string over an alphabet as written in JSON files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelString {
    Text(String),
    Labels(Vec<String>),
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.labels
    }
}

/// Conditional law `P(y | c)` for every context `c` in `Y^k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KernelFile", into = "KernelFile")]
pub struct TransitionKernel {
    alphabet: Alphabet,
    order: usize,
    probs: Vec<f64>,
    law: OnceLock<StationaryLaw>,
}

/// JSON shape of a kernel: `{alphabet, order, probs}` with `probs` row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub alphabet: Vec<String>,
    pub order: usize,
    pub probs: Vec<f64>,
}

impl TryFrom<KernelFile> for TransitionKernel {
    type Error = Error;
    fn try_from(f: KernelFile) -> Result<Self> {
        TransitionKernel::new(Alphabet::new(f.alphabet)?, f.order, f.probs)
    }
}

impl From<TransitionKernel> for KernelFile {
    fn from(k: TransitionKernel) -> Self {
        KernelFile {
            alphabet: k.alphabet.labels,
            order: k.order,
            probs: k.probs,
        }
    }
}

impl PartialEq for TransitionKernel {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.order == other.order && self.probs == other.probs
    }
}

/// Number of contexts of an order-`order` kernel, if its table fits under
/// the enumeration cap.
fn table_contexts(n: usize, order: usize) -> Result<usize> {
    checked_pow(n, order)
        .and_then(|c| c.checked_mul(n))
        .filter(|&entries| entries <= DEFAULT_ENUMERATION_CAP)
        .map(|entries| entries / n)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "a {n}-symbol order-{order} kernel exceeds {DEFAULT_ENUMERATION_CAP} table entries"
            ))
        })
}

impl TransitionKernel {
    pub fn new(alphabet: Alphabet, order: usize, probs: Vec<f64>) -> Result<Self> {
        let n = alphabet.len();
        let contexts = table_contexts(n, order)?;
        if probs.len() != contexts * n {
            return Err(Error::format(format!(
                "kernel table has {} entries, expected {}",
                probs.len(),
                contexts * n
            )));
        }
        for (c, row) in probs.chunks(n).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::format(format!("row {c} has a negative or non-finite entry")));
            }
            let s = compensated_sum(row.iter().copied());
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::format(format!("row {c} sums to {s}")));
            }
        }
        Ok(Self {
            alphabet,
            order,
            probs,
            law: OnceLock::new(),
        })
    }

    /// Builds a kernel from a closure `(context symbols, next symbol) -> prob`.
    pub fn from_fn(
        alphabet: Alphabet,
        order: usize,
        mut f: impl FnMut(&[Symbol], Symbol) -> f64,
    ) -> Result<Self> {
        let n = alphabet.len();
        let contexts = table_contexts(n, order)?;
        let mut probs = Vec::with_capacity(contexts * n);
        let mut ctx = vec![0 as Symbol; order];
        for c in 0..contexts {
            decode_index(c, n, &mut ctx);
            for y in 0..n {
                probs.push(f(&ctx, y as Symbol));
            }
        }
        Self::new(alphabet, order, probs)
    }

    /// i.i.d. uniform source written as an order-`order` kernel.
    pub fn uniform(alphabet_size: usize, order: usize) -> Result<Self> {
        let p = 1.0 / alphabet_size as f64;
        Self::from_fn(Alphabet::numeric(alphabet_size)?, order, |_, _| p)
    }

    /// Each context row drawn independently from a symmetric
    /// Dirichlet(`alpha`), via normalized Gamma(`alpha`, 1) variates on the
    /// `"kernel"` stream of `seed`.
    pub fn sample(alphabet_size: usize, order: usize, alpha: f64, seed: u64) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::param("alphabet_size must be at least 2"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("dirichlet alpha must be positive, got {alpha}")));
        }
        let alphabet = Alphabet::numeric(alphabet_size)?;
        let contexts = table_contexts(alphabet_size, order)?;
        let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let mut rng = rng::stream(seed, rng::KERNEL_STREAM);
        let mut probs = Vec::with_capacity(contexts * alphabet_size);
        let mut row = vec![0.0; alphabet_size];
        for _ in 0..contexts {
            // a row of all-underflowed variates is redrawn
            let total = loop {
                for x in row.iter_mut() {
                    *x = gamma.sample(&mut rng);
                }
                let t: f64 = row.iter().sum();
                if t > 0.0 && t.is_finite() {
                    break t;
                }
            };
            let mut normalized: Vec<f64> = row.iter().map(|x| x / total).collect();
            // push rounding residue into the largest entry so rows sum to 1
            let resid = 1.0 - compensated_sum(normalized.iter().copied());
            let imax = argmax(&normalized);
            normalized[imax] += resid;
            probs.extend_from_slice(&normalized);
        }
        Self::new(alphabet, order, probs)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_contexts(&self) -> usize {
        self.probs.len() / self.alphabet.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, context: usize) -> &[f64] {
        let n = self.alphabet.len();
        &self.probs[context * n..(context + 1) * n]
    }

    pub fn prob(&self, context: usize, y: Symbol) -> f64 {
        self.probs[context * self.alphabet.len() + usize::from(y)]
    }

    /// Context index reached from `context` after emitting `y`.
    pub fn next_context(&self, context: usize, y: Symbol) -> usize {
        if self.order == 0 {
            return 0;
        }
        (context * self.alphabet.len() + usize::from(y)) % self.num_contexts()
    }

    /// Index of the context formed by the last `k` symbols of `history`
    /// (which must hold at least `k` symbols).
    pub fn context_index(&self, history: &[Symbol]) -> usize {
        let k = self.order;
        encode_index(&history[history.len() - k..], self.alphabet.len())
    }

    /// Smallest transition probability `δ`.
    pub fn min_transition_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether every transition probability is strictly positive.
    pub fn is_delta_positive(&self) -> bool {
        self.min_transition_prob() > 0.0
    }

    /// Stationary law of the context chain, computed once and cached.
    pub fn stationary_law(&self) -> Result<&StationaryLaw> {
        if let Some(law) = self.law.get() {
            return Ok(law);
        }
        let law = compute_stationary_law(self)?;
        Ok(self.law.get_or_init(|| law))
    }

    /// Stationary probability of every string of length `len`, indexed in
    /// base `|Y|` with the oldest symbol most significant.
    pub fn block_distribution(&self, len: usize, cap: usize) -> Result<Vec<f64>> {
        let n = self.alphabet.len();
        let k = self.order;
        let span = len.max(k);
        let entries = checked_pow(n, span)
            .filter(|&e| e <= cap)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "exact enumeration of {n}^{span} strings exceeds cap {cap}"
                ))
            })?;
        let law = self.stationary_law()?;
        let mut joint = law.pi.clone();
        let mut width = k;
        while width < span {
            let mut next = vec![0.0; joint.len() * n];
            for (idx, &p) in joint.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let ctx = if k == 0 { 0 } else { idx % self.num_contexts() };
                let row = self.row(ctx);
                for (y, &py) in row.iter().enumerate() {
                    next[idx * n + y] = p * py;
                }
            }
            joint = next;
            width += 1;
        }
        debug_assert_eq!(joint.len(), entries);
        if span == len {
            return Ok(joint);
        }
        let out_len = checked_pow(n, len).expect("len <= span");
        let mut out = vec![CompensatedSum::new(); out_len];
        for (idx, &p) in joint.iter().enumerate() {
            out[idx % out_len].add(p);
        }
        Ok(out.into_iter().map(|s| s.value()).collect())
    }

    /// `H(Y_0 | Y_{-w}^{-1})` in bits, the optimal `w`-context log-loss.
    pub fn conditional_entropy(&self, w: usize) -> Result<f64> {
        self.conditional_entropy_capped(w, DEFAULT_ENUMERATION_CAP)
    }

    /// Contexts longer than the order add nothing, so `w > k` is computed
    /// at `w = k`.
    pub fn conditional_entropy_capped(&self, w: usize, cap: usize) -> Result<f64> {
        let w = w.min(self.order);
        let n = self.alphabet.len();
        let block = self.block_distribution(w + 1, cap)?;
        Ok(compensated_sum(block.chunks(n).map(conditional_row_bits)))
    }

    /// Entropy rate `H(Y_0 | Y_{-k}^{-1})`.
    pub fn entropy_rate(&self) -> Result<f64> {
        self.conditional_entropy(self.order)
    }

    /// `n` symbols following an initial context drawn from the stationary law,
    /// using the `"sequence"` stream of `seed`.
    pub fn sample_sequence(&self, n: usize, seed: u64) -> Result<Vec<Symbol>> {
        if n == 0 {
            return Err(Error::param("sequence length must be at least 1"));
        }
        let law = self.stationary_law()?;
        let mut rng = rng::stream(seed, rng::SEQUENCE_STREAM);
        let start = draw_index(&law.pi, rng.random::<f64>());
        Ok(self.run_chain(start, n, &mut rng))
    }

    /// Like [`sample_sequence`](Self::sample_sequence) but starting from a
    /// fixed context, which also works for reducible kernels.
    pub fn sample_sequence_from(
        &self,
        initial_context: &[Symbol],
        n: usize,
        seed: u64,
    ) -> Result<Vec<Symbol>> {
        if initial_context.len() != self.order {
            return Err(Error::param(format!(
                "initial context has length {}, kernel order is {}",
                initial_context.len(),
                self.order
            )));
        }
        if initial_context.iter().any(|&s| usize::from(s) >= self.alphabet_size()) {
            return Err(Error::Alphabet("initial context symbol out of range".into()));
        }
        let mut rng = rng::stream(seed, rng::SEQUENCE_STREAM);
        let start = encode_index(initial_context, self.alphabet_size());
        Ok(self.run_chain(start, n, &mut rng))
    }

    fn run_chain(&self, mut ctx: usize, n: usize, rng: &mut impl Rng) -> Vec<Symbol> {
        let a = self.alphabet_size();
        let mut cdf = Vec::with_capacity(self.probs.len());
        for row in self.probs.chunks(a) {
            let mut acc = 0.0;
            for &p in row {
                acc += p;
                cdf.push(acc);
            }
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let row = &cdf[ctx * a..(ctx + 1) * a];
            let mut y = row.iter().position(|&c| u < c).unwrap_or(a - 1);
            // never emit a zero-probability symbol through rounding at the tail
            while self.probs[ctx * a + y] == 0.0 && y > 0 {
                y -= 1;
            }
            out.push(y as Symbol);
            ctx = self.next_context(ctx, y as Symbol);
        }
        out
    }
}

/// Stationary distribution over the `|Y|^k` contexts.
#[derive(Debug, Clone)]
pub struct StationaryLaw {
    pub pi: Vec<f64>,
    /// Power-iteration steps taken; 0 when the law was solved directly.
    pub iterations: usize,
    /// Total-variation distance between `pi` and one kernel step of `pi`.
    pub residual: f64,
    alphabet_size: usize,
}

impl StationaryLaw {
    /// Stationary law of a single symbol (the most recent context position).
    pub fn symbol_marginal(&self, kernel: &TransitionKernel) -> Vec<f64> {
        let n = self.alphabet_size;
        if kernel.order() == 0 {
            return kernel.row(0).to_vec();
        }
        let mut out = vec![CompensatedSum::new(); n];
        for (c, &p) in self.pi.iter().enumerate() {
            out[c % n].add(p);
        }
        out.into_iter().map(|s| s.value()).collect()
    }

    /// One step of the context chain applied to `pi`.
    pub fn step(&self, kernel: &TransitionKernel) -> Vec<f64> {
        step(kernel, &self.pi)
    }
}

fn step(kernel: &TransitionKernel, pi: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; pi.len()];
    for (c, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (y, &py) in kernel.row(c).iter().enumerate() {
            next[kernel.next_context(c, y as Symbol)] += p * py;
        }
    }
    next
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs()))
}

fn check_irreducible(kernel: &TransitionKernel) -> Result<()> {
    let n = kernel.alphabet_size();
    let m = kernel.num_contexts();
    // forward reachability from context 0
    let mut seen = vec![false; m];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(c) = stack.pop() {
        for y in 0..n {
            if kernel.prob(c, y as Symbol) > 0.0 {
                let d = kernel.next_context(c, y as Symbol);
                if !seen[d] {
                    seen[d] = true;
                    stack.push(d);
                }
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::Ergodicity(format!("context {c} is unreachable from context 0")));
    }
    // reverse reachability: predecessors of d are a * |Y|^(k-1) + d / |Y|
    let high = m / n;
    seen.fill(false);
    seen[0] = true;
    stack.push(0);
    while let Some(d) = stack.pop() {
        let y = (d % n) as Symbol;
        for a in 0..n {
            let c = a * high + d / n;
            if kernel.prob(c, y) > 0.0 && !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::Ergodicity(format!("context 0 is unreachable from context {c}")));
    }
    Ok(())
}

fn compute_stationary_law(kernel: &TransitionKernel) -> Result<StationaryLaw> {
    let n = kernel.alphabet_size();
    if kernel.order() == 0 {
        return Ok(StationaryLaw {
            pi: vec![1.0],
            iterations: 0,
            residual: 0.0,
            alphabet_size: n,
        });
    }
    check_irreducible(kernel)?;
    let m = kernel.num_contexts();
    if m <= DIRECT_SOLVE_MAX_CONTEXTS {
        let pi = gth_solve(kernel);
        let residual = total_variation(&step(kernel, &pi), &pi);
        return Ok(StationaryLaw {
            pi,
            iterations: 0,
            residual,
            alphabet_size: n,
        });
    }
    let mut pi = vec![1.0 / m as f64; m];
    let mut best = f64::INFINITY;
    let mut since_best = 0usize;
    for it in 1..=STATIONARY_MAX_ITERS {
        let next = step(kernel, &pi);
        let residual = total_variation(&next, &pi);
        if residual < STATIONARY_TOL || (residual < STATIONARY_FLOOR_TOL && since_best > 200) {
            return Ok(StationaryLaw {
                pi,
                iterations: it,
                residual,
                alphabet_size: n,
            });
        }
        if residual < best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
        }
        // lazy update converges for periodic chains as well
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
        let total = compensated_sum(pi.iter().copied());
        pi.iter_mut().for_each(|p| *p /= total);
    }
    Err(Error::Ergodicity(format!(
        "power iteration did not converge in {STATIONARY_MAX_ITERS} steps (best residual {best:e})"
    )))
}

/// Grassmann-Taksar-Heyman state reduction. Subtraction-free, so it stays
/// accurate for nearly reducible chains where power iteration crawls.
fn gth_solve(kernel: &TransitionKernel) -> Vec<f64> {
    let m = kernel.num_contexts();
    let mut a = vec![0.0; m * m];
    for c in 0..m {
        for (y, &p) in kernel.row(c).iter().enumerate() {
            a[c * m + kernel.next_context(c, y as Symbol)] += p;
        }
    }
    for l in (1..m).rev() {
        let s: f64 = a[l * m..l * m + l].iter().sum();
        for i in 0..l {
            let f = a[i * m + l] / s;
            if f == 0.0 {
                continue;
            }
            for j in 0..l {
                a[i * m + j] += f * a[l * m + j];
            }
        }
    }
    let mut pi = vec![0.0; m];
    pi[0] = 1.0;
    for j in 1..m {
        let s: f64 = a[j * m..j * m + j].iter().sum();
        pi[j] = (0..j).map(|i| pi[i] * a[i * m + j]).sum::<f64>() / s;
    }
    let total = compensated_sum(pi.iter().copied());
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}

/// Base-`n` index of `symbols`, oldest (first) symbol most significant.
pub fn encode_index(symbols: &[Symbol], n: usize) -> usize {
    symbols.iter().fold(0usize, |acc, &s| acc * n + usize::from(s))
}

/// Inverse of [`encode_index`], filling `out` (its length fixes the width).
pub fn decode_index(mut idx: usize, n: usize, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % n) as Symbol;
        idx /= n;
    }
}

fn draw_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc && w > 0.0 {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
