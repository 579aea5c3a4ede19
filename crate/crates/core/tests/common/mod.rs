//! Brute-force reference implementations used to check the library. They
//! read only the raw transition table of a kernel and share no code with
//! the crate's own enumeration paths.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ctxspan::{Symbol, TransitionKernel};

pub type Str = Vec<Symbol>;

fn ctx_index(ctx: &[Symbol], n: usize) -> usize {
    ctx.iter().fold(0, |acc, &s| acc * n + s as usize)
}

/// `P(a | ctx)` read straight from the probability table.
pub fn trans(kernel: &TransitionKernel, ctx: &[Symbol], a: Symbol) -> f64 {
    let n = kernel.alphabet_size();
    kernel.probs()[ctx_index(ctx, n) * n + a as usize]
}

/// Every string of length `len` over `n` symbols, in lexicographic order.
pub fn all_strings(n: usize, len: usize) -> Vec<Str> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..n as Symbol).map(move |a| {
                    let mut t = s.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

/// Stationary law over order-`k` contexts by Gaussian elimination on
/// `pi (Q - I) = 0`, `sum pi = 1`.
pub fn stationary(kernel: &TransitionKernel) -> BTreeMap<Str, f64> {
    let n = kernel.alphabet_size();
    let k = kernel.order();
    let states = all_strings(n, k);
    let m = states.len();
    let pos: BTreeMap<Str, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    // rows of the transposed system: a[j][i] = Q[i][j] - [i == j]
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for (i, s) in states.iter().enumerate() {
        a[i][i] -= 1.0;
        for y in 0..n as Symbol {
            let mut next: Str = s.iter().copied().chain(std::iter::once(y)).collect();
            next.remove(0);
            let j = if k == 0 { 0 } else { pos[&next] };
            a[j][i] += trans(kernel, s, y);
        }
    }
    for v in a[m - 1].iter_mut() {
        *v = 1.0;
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    states.into_iter().enumerate().map(|(i, s)| (s, a[i][m])).collect()
}

/// Stationary probability of observing `s` as a block.
pub fn string_prob(kernel: &TransitionKernel, pi: &BTreeMap<Str, f64>, s: &[Symbol]) -> f64 {
    let k = kernel.order();
    if s.len() < k {
        return pi
            .iter()
            .filter(|(c, _)| c[k - s.len()..] == *s)
            .map(|(_, p)| p)
            .sum();
    }
    let mut p = pi[&s[..k].to_vec()];
    for j in k..s.len() {
        p *= trans(kernel, &s[j - k..j], s[j]);
    }
    p
}

/// All blocks of length `len` with positive stationary probability.
pub fn block_law(kernel: &TransitionKernel, len: usize) -> BTreeMap<Str, f64> {
    let pi = stationary(kernel);
    all_strings(kernel.alphabet_size(), len)
        .into_iter()
        .map(|s| {
            let p = string_prob(kernel, &pi, &s);
            (s, p)
        })
        .filter(|&(_, p)| p > 0.0)
        .collect()
}

/// `H(X | C)` in bits from a joint table keyed by `(context, target)`.
pub fn cond_entropy(joint: &BTreeMap<(Str, Symbol), f64>) -> f64 {
    let mut marg: BTreeMap<&Str, f64> = BTreeMap::new();
    for ((c, _), p) in joint {
        *marg.entry(c).or_default() += p;
    }
    joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((c, _), &p)| p * (marg[c] / p).log2())
        .sum()
}

/// `H(Y_0 | Y_{-w}^{-1})` by enumerating all `(w+1)`-blocks.
pub fn entropy(kernel: &TransitionKernel, w: usize) -> f64 {
    let mut joint = BTreeMap::new();
    for (s, p) in block_law(kernel, w + 1) {
        joint.insert((s[..w].to_vec(), s[w]), p);
    }
    cond_entropy(&joint)
}

/// Optimal `w`-context predictor row for a given context.
pub fn optimal_row(kernel: &TransitionKernel, ctx: &[Symbol]) -> Vec<f64> {
    let pi = stationary(kernel);
    let n = kernel.alphabet_size();
    let joint: Vec<f64> = (0..n as Symbol)
        .map(|a| {
            let s: Str = ctx.iter().copied().chain(std::iter::once(a)).collect();
            string_prob(kernel, &pi, &s)
        })
        .collect();
    let total: f64 = joint.iter().sum();
    joint.iter().map(|p| p / total).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct FragOracle {
    pub l_y: f64,
    pub l_frag: f64,
    pub deficit: f64,
    pub ambiguity: f64,
}

/// Fragmented-loss decomposition by enumerating `(w+1)`-blocks of source
/// symbols, fragmenting each, and tabulating every phase separately.
pub fn fragmentation(kernel: &TransitionKernel, code: &[Str], w: usize) -> FragOracle {
    let m = code[0].len();
    let mut pooled: BTreeMap<(Str, Symbol), f64> = BTreeMap::new();
    let mut short_sum = 0.0;
    let mut full_sum = 0.0;
    let blocks = block_law(kernel, w + 1);
    for theta in 0..m {
        let mut short: BTreeMap<(Str, Symbol), f64> = BTreeMap::new();
        let mut full: BTreeMap<(Str, Symbol), f64> = BTreeMap::new();
        for (s, &p) in &blocks {
            let x: Str = s.iter().flat_map(|&y| code[y as usize].iter().copied()).collect();
            let t = m * w + theta;
            *short.entry((x[theta..t].to_vec(), x[t])).or_default() += p;
            *full.entry((x[..t].to_vec(), x[t])).or_default() += p;
            *pooled.entry((x[theta..t].to_vec(), x[t])).or_default() += p / m as f64;
        }
        short_sum += cond_entropy(&short);
        full_sum += cond_entropy(&full);
    }
    let l_frag = m as f64 * cond_entropy(&pooled);
    FragOracle {
        l_y: entropy(kernel, w),
        l_frag,
        deficit: short_sum - full_sum,
        ambiguity: l_frag - short_sum,
    }
}

/// `max_c P(t | c)` over every order-`k` context.
pub fn p_max(kernel: &TransitionKernel, t: &[Symbol]) -> f64 {
    let k = kernel.order();
    all_strings(kernel.alphabet_size(), k)
        .into_iter()
        .map(|mut c| {
            let mut p = 1.0;
            for &a in t {
                p *= trans(kernel, &c[c.len() - k..], a);
                c.push(a);
            }
            p
        })
        .fold(0.0, f64::max)
}

/// Greedy longest-match parse against a plain set of strings.
pub fn greedy(vocab: &std::collections::BTreeSet<Str>, y: &[Symbol]) -> Vec<Str> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < y.len() {
        let len = (1..=y.len() - i)
            .rev()
            .find(|&l| vocab.contains(&y[i..i + l]))
            .expect("single symbols are in the vocabulary");
        out.push(y[i..i + len].to_vec());
        i += len;
    }
    out
}
