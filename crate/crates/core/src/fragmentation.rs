//! Fixed-length fragmentation of a source into a finer alphabet and the exact
//! split of the resulting loss penalty into context deficit and phase
//! ambiguity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{
    decode_index, Alphabet, LabelString, Symbol, TransitionKernel, DEFAULT_ENUMERATION_CAP,
};
use crate::ngram::ContextPredictor;
use crate::numeric::{checked_pow, compensated_sum, conditional_row_bits};

/// Injective code `phi: Y -> X^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentationMap {
    source: Alphabet,
    fragment: Alphabet,
    m: usize,
    code: Vec<Vec<Symbol>>,
    inverse: HashMap<Vec<Symbol>, Symbol>,
}

impl FragmentationMap {
    /// Validates `codewords` (one per source symbol, in alphabet order).
    pub fn new(
        source: Alphabet,
        fragment: Alphabet,
        m: usize,
        codewords: Vec<Vec<Symbol>>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("block length M must be at least 1"));
        }
        if codewords.len() != source.len() {
            return Err(Error::format(format!(
                "{} codewords for {} source symbols",
                codewords.len(),
                source.len()
            )));
        }
        let mut inverse = HashMap::with_capacity(codewords.len());
        for (y, cw) in codewords.iter().enumerate() {
            if cw.len() != m {
                return Err(Error::format(format!(
                    "codeword for {:?} has length {}, expected {m}",
                    source.label(y as Symbol),
                    cw.len()
                )));
            }
            if cw.iter().any(|&x| usize::from(x) >= fragment.len()) {
                return Err(Error::Alphabet("codeword symbol outside the fragment alphabet".into()));
            }
            if let Some(prev) = inverse.insert(cw.clone(), y as Symbol) {
                return Err(Error::Injectivity(format!(
                    "{:?} and {:?} share codeword {}",
                    source.label(prev),
                    source.label(y as Symbol),
                    fragment.render(cw)
                )));
            }
        }
        Ok(Self {
            source,
            fragment,
            m,
            code: codewords,
            inverse,
        })
    }

    /// Codewords given as label strings over the fragment alphabet.
    pub fn from_labels(
        source: Alphabet,
        fragment: Alphabet,
        m: usize,
        codewords: &[Vec<String>],
    ) -> Result<Self> {
        let code = codewords
            .iter()
            .map(|cw| cw.iter().map(|l| fragment.symbol(l)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, fragment, m, code)
    }

    /// Source symbol `i` is written as `i` in `M` base-`|X|` digits.
    pub fn default_code(source: Alphabet, fragment: Alphabet, m: usize) -> Result<Self> {
        let capacity = checked_pow(fragment.len(), m).unwrap_or(usize::MAX);
        if source.len() > capacity {
            return Err(Error::param(format!(
                "{} source symbols do not fit in {}^{m} codewords",
                source.len(),
                fragment.len()
            )));
        }
        let code = (0..source.len())
            .map(|i| {
                let mut cw = vec![0; m];
                decode_index(i, fragment.len(), &mut cw);
                cw
            })
            .collect();
        Self::new(source, fragment, m, code)
    }

    pub fn source_alphabet(&self) -> &Alphabet {
        &self.source
    }

    pub fn fragment_alphabet(&self) -> &Alphabet {
        &self.fragment
    }

    pub fn block_length(&self) -> usize {
        self.m
    }

    pub fn codeword(&self, y: Symbol) -> &[Symbol] {
        &self.code[usize::from(y)]
    }

    pub fn fragment(&self, ys: &[Symbol]) -> Result<Vec<Symbol>> {
        let mut out = Vec::with_capacity(ys.len() * self.m);
        for &y in ys {
            let cw = self
                .code
                .get(usize::from(y))
                .ok_or_else(|| Error::Alphabet(format!("source symbol index {y}")))?;
            out.extend_from_slice(cw);
        }
        Ok(out)
    }

    pub fn defragment(&self, xs: &[Symbol]) -> Result<Vec<Symbol>> {
        if !xs.len().is_multiple_of(self.m) {
            return Err(Error::format(format!(
                "fragment stream length {} is not a multiple of {}",
                xs.len(),
                self.m
            )));
        }
        xs.chunks(self.m)
            .map(|cw| {
                self.inverse.get(cw).copied().ok_or_else(|| {
                    Error::format(format!("{} is not a codeword", self.fragment.render(cw)))
                })
            })
            .collect()
    }

    pub fn to_file(&self) -> MapFile {
        let code = (0..self.source.len())
            .map(|y| {
                let word = self.fragment.to_label_string(&self.code[y]);
                (self.source.label(y as Symbol).to_string(), word)
            })
            .collect();
        MapFile {
            source_alphabet: self.source.labels().to_vec(),
            fragment_alphabet: self.fragment.labels().to_vec(),
            m: self.m,
            code,
        }
    }

    pub fn from_file(file: MapFile) -> Result<Self> {
        let source = Alphabet::new(file.source_alphabet)?;
        let fragment = Alphabet::new(file.fragment_alphabet)?;
        let mut code = vec![None; source.len()];
        for (label, word) in file.code {
            let y = source.symbol(&label)?;
            code[usize::from(y)] = Some(fragment.parse_label_string(&word)?);
        }
        let code = code
            .into_iter()
            .enumerate()
            .map(|(y, cw)| {
                cw.ok_or_else(|| {
                    Error::format(format!("no codeword for {:?}", source.label(y as Symbol)))
                })
            })
            .collect::<Result<_>>()?;
        Self::new(source, fragment, file.m, code)
    }
}

/// JSON form `{source_alphabet, fragment_alphabet, M, code: {label: codeword}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub source_alphabet: Vec<String>,
    pub fragment_alphabet: Vec<String>,
    #[serde(rename = "M")]
    pub m: usize,
    pub code: BTreeMap<String, LabelString>,
}

/// Exact loss comparison at source window `w` (fragment window `M w`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub w: usize,
    /// Optimal source loss `H(Y_0 | Y_{-w}^{-1})`, bits per source symbol.
    pub l_y: f64,
    /// Optimal phase-pooled fragment loss times `M`, bits per source symbol.
    pub l_frag: f64,
    pub context_deficit: f64,
    pub phase_ambiguity: f64,
    /// `l_frag - l_y`.
    pub gap: f64,
}

impl DecompositionReport {
    /// `gap - (deficit + ambiguity)`; zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.gap - (self.context_deficit + self.phase_ambiguity)
    }
}

/// Conditional tables built from the stationary joint of `w + 1` source
/// symbols, projected onto fragments.
struct PhaseTables {
    /// `H(X_theta | X_{theta-Mw}^{theta-1})` for each phase.
    short: Vec<f64>,
    /// `H(X_theta | X_{1-Mw}^{theta-1})` for each phase.
    full: Vec<f64>,
    /// `H(X_Theta | X_{Theta-Mw}^{Theta-1})` with `Theta` uniform.
    pooled: f64,
}

fn phase_tables(
    kernel: &TransitionKernel,
    map: &FragmentationMap,
    w: usize,
    cap: usize,
) -> Result<PhaseTables> {
    if kernel.alphabet().len() != map.source.len() {
        return Err(Error::param("kernel and map disagree on the source alphabet"));
    }
    let ny = map.source.len();
    let nx = map.fragment.len() as u64;
    let m = map.m;
    let span = m * (w + 1);
    let fits = checked_pow(map.fragment.len(), span)
        .is_some_and(|v| u64::try_from(v).is_ok());
    if !fits {
        return Err(Error::Capacity(format!(
            "fragment strings of length {span} do not fit a 64-bit key"
        )));
    }
    let joint = kernel.block_distribution(w + 1, cap)?;

    let nxu = map.fragment.len();
    let mut short: Vec<BTreeMap<u64, Vec<f64>>> = vec![BTreeMap::new(); m];
    let mut full: Vec<BTreeMap<u64, Vec<f64>>> = vec![BTreeMap::new(); m];
    let mut pooled: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut tuple = vec![0 as Symbol; w + 1];
    let mut frags = vec![0 as Symbol; span];
    let weight = 1.0 / m as f64;
    for (idx, &p) in joint.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode_index(idx, ny, &mut tuple);
        for (j, &y) in tuple.iter().enumerate() {
            frags[j * m..(j + 1) * m].copy_from_slice(map.codeword(y));
        }
        for theta in 0..m {
            let target = usize::from(frags[m * w + theta]);
            let short_key = key(&frags[theta..m * w + theta], nx);
            let full_key = key(&frags[..m * w + theta], nx);
            short[theta].entry(short_key).or_insert_with(|| vec![0.0; nxu])[target] += p;
            full[theta].entry(full_key).or_insert_with(|| vec![0.0; nxu])[target] += p;
            pooled.entry(short_key).or_insert_with(|| vec![0.0; nxu])[target] += weight * p;
        }
    }
    let entropy = |t: &BTreeMap<u64, Vec<f64>>| compensated_sum(t.values().map(|r| conditional_row_bits(r)));
    Ok(PhaseTables {
        short: short.iter().map(entropy).collect(),
        full: full.iter().map(entropy).collect(),
        pooled: entropy(&pooled),
    })
}

/// Strings of different length never share a table, so a plain base-`|X|`
/// value is an unambiguous key.
fn key(xs: &[Symbol], nx: u64) -> u64 {
    xs.iter().fold(0u64, |acc, &x| acc * nx + u64::from(x))
}

/// `M * H(X_Theta | X_{Theta-Mw}^{Theta-1})`, the optimal fragmented loss per
/// source symbol with `Theta` uniform over phases.
pub fn exact_fragmented_loss(kernel: &TransitionKernel, map: &FragmentationMap, w: usize) -> Result<f64> {
    let t = phase_tables(kernel, map, w, DEFAULT_ENUMERATION_CAP)?;
    Ok(map.m as f64 * t.pooled)
}

/// `M * I(Theta; X_Theta | context)`.
pub fn phase_ambiguity(kernel: &TransitionKernel, map: &FragmentationMap, w: usize) -> Result<f64> {
    let t = phase_tables(kernel, map, w, DEFAULT_ENUMERATION_CAP)?;
    Ok(map.m as f64 * t.pooled - compensated_sum(t.short.iter().copied()))
}

/// Loss from source history that the `Mw`-fragment window cuts off.
pub fn context_deficit(kernel: &TransitionKernel, map: &FragmentationMap, w: usize) -> Result<f64> {
    let t = phase_tables(kernel, map, w, DEFAULT_ENUMERATION_CAP)?;
    Ok(compensated_sum(t.short.iter().zip(&t.full).map(|(s, f)| s - f)))
}

pub fn decompose(kernel: &TransitionKernel, map: &FragmentationMap, w: usize) -> Result<DecompositionReport> {
    decompose_capped(kernel, map, w, DEFAULT_ENUMERATION_CAP)
}

pub fn decompose_capped(
    kernel: &TransitionKernel,
    map: &FragmentationMap,
    w: usize,
    cap: usize,
) -> Result<DecompositionReport> {
    let t = phase_tables(kernel, map, w, cap)?;
    let l_y = kernel.conditional_entropy_capped(w, cap)?;
    let l_frag = map.m as f64 * t.pooled;
    let sum_short = compensated_sum(t.short.iter().copied());
    Ok(DecompositionReport {
        w,
        l_y,
        l_frag,
        context_deficit: compensated_sum(t.short.iter().zip(&t.full).map(|(s, f)| s - f)),
        phase_ambiguity: l_frag - sum_short,
        gap: l_frag - l_y,
    })
}

/// In-sample loss of a Laplace `Mw`-context n-gram on the fragmented stream,
/// scaled to bits per source symbol.
pub fn empirical_fragmented_loss(
    map: &FragmentationMap,
    ys: &[Symbol],
    w: usize,
    laplace_alpha: f64,
) -> Result<f64> {
    let xs = map.fragment(ys)?;
    let q = ContextPredictor::fit(&map.fragment, &xs, map.m * w, laplace_alpha)?;
    Ok(map.m as f64 * q.log_loss(&xs)?.bits_per_symbol)
}
