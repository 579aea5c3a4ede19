//! Prefix-closed vocabularies, greedy longest-match parsing, and vocabulary
//! learners.

mod bpe;
mod lzw;

pub use bpe::{learn_merges, train_bpe, Merge};
pub use lzw::train_lzw;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Alphabet, LabelString, Symbol};

/// Index of an entry in the lexicographically sorted vocabulary.
pub type TokenId = u32;

const NO_CHILD: u32 = u32::MAX;

/// A prefix-closed set of source strings containing every single symbol,
/// stored as a trie whose nodes are exactly the entries.
#[derive(Debug, Clone)]
pub struct PrefixVocabulary {
    alphabet: Alphabet,
    /// Entries in sorted order; position is the token id.
    entries: Vec<Vec<Symbol>>,
    /// `children[id * |Y| + a]` is the id of `entry(id) . a`. Root children
    /// live in `roots`.
    children: Vec<u32>,
    roots: Vec<u32>,
    budget: Option<usize>,
}

impl PartialEq for PrefixVocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.entries == other.entries
    }
}

impl PrefixVocabulary {
    /// The given strings plus all their prefixes and all single symbols.
    pub fn build<I>(alphabet: &Alphabet, strings: I, budget: Option<usize>) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[Symbol]>,
    {
        let n = alphabet.len();
        let mut set: BTreeSet<Vec<Symbol>> = (0..n).map(|a| vec![a as Symbol]).collect();
        for s in strings {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(Error::format("vocabulary entries must be nonempty"));
            }
            if s.iter().any(|&a| usize::from(a) >= n) {
                return Err(Error::Alphabet("vocabulary entry uses an unknown symbol".into()));
            }
            for len in 2..=s.len() {
                if !set.contains(&s[..len]) {
                    set.insert(s[..len].to_vec());
                }
            }
        }
        if let Some(d) = budget {
            if set.len() > d {
                return Err(Error::Capacity(format!(
                    "closed vocabulary has {} entries, budget is {d}",
                    set.len()
                )));
            }
        }
        Ok(Self::from_sorted(alphabet, set.into_iter().collect(), budget))
    }

    /// Single-symbol vocabulary, under which parsing is the identity.
    pub fn identity(alphabet: &Alphabet) -> Self {
        let entries = (0..alphabet.len()).map(|a| vec![a as Symbol]).collect();
        Self::from_sorted(alphabet, entries, None)
    }

    fn from_sorted(alphabet: &Alphabet, entries: Vec<Vec<Symbol>>, budget: Option<usize>) -> Self {
        let n = alphabet.len();
        let mut children = vec![NO_CHILD; entries.len() * n];
        let mut roots = vec![NO_CHILD; n];
        // a parent sorts before its children, so a stack of the current path suffices
        let mut path: Vec<u32> = Vec::new();
        for (id, e) in entries.iter().enumerate() {
            path.truncate(e.len() - 1);
            let last = usize::from(*e.last().expect("entries are nonempty"));
            match path.last() {
                None => roots[last] = id as u32,
                Some(&parent) => children[parent as usize * n + last] = id as u32,
            }
            path.push(id as u32);
        }
        Self {
            alphabet: alphabet.clone(),
            entries,
            children,
            roots,
            budget,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn budget(&self) -> Option<usize> {
        self.budget
    }

    pub fn entries(&self) -> &[Vec<Symbol>] {
        &self.entries
    }

    pub fn entry(&self, id: TokenId) -> Result<&[Symbol]> {
        self.entries
            .get(id as usize)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::format(format!("unknown token id {id}")))
    }

    pub fn token_len(&self, id: TokenId) -> usize {
        self.entries[id as usize].len()
    }

    pub fn id_of(&self, s: &[Symbol]) -> Option<TokenId> {
        let (&first, rest) = s.split_first()?;
        let mut node = *self.roots.get(usize::from(first))?;
        for &a in rest {
            node = self.child(node, a)?;
        }
        Some(node)
    }

    fn child(&self, id: u32, a: Symbol) -> Option<u32> {
        let n = self.alphabet.len();
        if usize::from(a) >= n {
            return None;
        }
        let c = self.children[id as usize * n + usize::from(a)];
        (c != NO_CHILD).then_some(c)
    }

    /// Symbols `a` such that `entry(id) . a` is also an entry.
    pub fn ext_set(&self, id: TokenId) -> Result<Vec<Symbol>> {
        self.entry(id)?;
        Ok((0..self.alphabet.len() as Symbol)
            .filter(|&a| self.child(id, a).is_some())
            .collect())
    }

    /// Fast membership test for `a` in `ext_set(id)`.
    pub fn extends(&self, id: TokenId, a: Symbol) -> bool {
        self.child(id, a).is_some()
    }

    pub fn min_entry_len(&self) -> usize {
        1
    }

    pub fn max_entry_len(&self) -> usize {
        self.entries.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Left-to-right longest-match segmentation.
    pub fn greedy_parse(&self, ys: &[Symbol]) -> Result<Vec<TokenId>> {
        let n = self.alphabet.len();
        if let Some(&bad) = ys.iter().find(|&&a| usize::from(a) >= n) {
            return Err(Error::Alphabet(format!("symbol index {bad} out of range")));
        }
        let mut out = Vec::with_capacity(ys.len() / 2 + 1);
        let mut i = 0;
        while i < ys.len() {
            let mut node = self.roots[usize::from(ys[i])];
            i += 1;
            while let Some(c) = ys.get(i).and_then(|&a| self.child(node, a)) {
                node = c;
                i += 1;
            }
            out.push(node);
        }
        Ok(out)
    }

    /// Concatenation of the entries named by `tokens`.
    pub fn expand(&self, tokens: &[TokenId]) -> Result<Vec<Symbol>> {
        let mut out = Vec::with_capacity(tokens.len() * 2);
        for &t in tokens {
            out.extend_from_slice(self.entry(t)?);
        }
        Ok(out)
    }

    /// Checks that every proper prefix of every entry is itself an entry and
    /// that the trie links agree with the entry list.
    pub fn audit(&self) -> bool {
        let singles = (0..self.alphabet.len()).all(|a| self.roots[a] != NO_CHILD);
        let sorted = self.entries.windows(2).all(|p| p[0] < p[1]);
        let linked = self.entries.iter().enumerate().all(|(id, e)| {
            (1..=e.len()).all(|l| self.id_of(&e[..l]).is_some()) && self.id_of(e) == Some(id as u32)
        });
        singles && sorted && linked
    }

    pub fn to_file(&self) -> VocabFile {
        VocabFile {
            alphabet: self.alphabet.labels().to_vec(),
            entries: self
                .entries
                .iter()
                .map(|e| self.alphabet.to_label_string(e))
                .collect(),
        }
    }

    /// Accepts any entry set; missing prefixes and single symbols are added.
    pub fn from_file(file: &VocabFile) -> Result<Self> {
        let alphabet = Alphabet::new(file.alphabet.clone())?;
        let strings = file
            .entries
            .iter()
            .map(|e| alphabet.parse_label_string(e))
            .collect::<Result<Vec<_>>>()?;
        Self::build(&alphabet, strings, None)
    }
}

/// JSON form `{alphabet, entries}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabFile {
    pub alphabet: Vec<String>,
    pub entries: Vec<LabelString>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn bits() -> Alphabet {
        Alphabet::numeric(2).unwrap()
    }

    pub(crate) fn s(text: &str) -> Vec<Symbol> {
        bits().encode_chars(text).unwrap()
    }

    pub(crate) fn fig4() -> PrefixVocabulary {
        PrefixVocabulary::build(&bits(), [s("010")], None).unwrap()
    }

    fn rendered(v: &PrefixVocabulary, toks: &[TokenId]) -> Vec<String> {
        toks.iter()
            .map(|&t| v.alphabet().render(v.entry(t).unwrap()))
            .collect()
    }

    #[test]
    fn closure_of_010() {
        let v = fig4();
        let e: Vec<String> = v.entries().iter().map(|e| bits().render(e)).collect();
        assert_eq!(e, ["0", "01", "010", "1"]);
        assert!(v.audit());
    }

    #[test]
    fn closure_of_0110() {
        let v = PrefixVocabulary::build(&bits(), [s("0110")], None).unwrap();
        let e: BTreeSet<String> = v.entries().iter().map(|e| bits().render(e)).collect();
        let want: BTreeSet<String> = ["0", "1", "01", "011", "0110"].iter().map(|x| x.to_string()).collect();
        assert_eq!(e, want);
    }

    #[test]
    fn empty_strings_give_alphabet() {
        let v = PrefixVocabulary::build(&bits(), Vec::<Vec<Symbol>>::new(), None).unwrap();
        assert_eq!(v, PrefixVocabulary::identity(&bits()));
        assert!(PrefixVocabulary::build(&bits(), [Vec::<Symbol>::new()], None).is_err());
    }

    #[test]
    fn figure_parse() {
        let v = fig4();
        let toks = v.greedy_parse(&s("0101110100")).unwrap();
        assert_eq!(rendered(&v, &toks), ["010", "1", "1", "1", "010", "0"]);
        assert_eq!(v.expand(&toks).unwrap(), s("0101110100"));
    }

    #[test]
    fn parse_010010() {
        let v = fig4();
        let toks = v.greedy_parse(&s("010010")).unwrap();
        assert_eq!(rendered(&v, &toks), ["010", "010"]);
        assert_eq!(v.expand(&toks).unwrap(), s("010010"));
    }

    #[test]
    fn identity_parse_is_symbols() {
        let v = PrefixVocabulary::identity(&bits());
        let y = s("0110");
        let toks = v.greedy_parse(&y).unwrap();
        assert_eq!(toks, [0, 1, 1, 0]);
        assert_eq!(v.expand(&toks).unwrap(), y);
    }

    #[test]
    fn ext_sets_of_figure_vocab() {
        let v = fig4();
        let id = |t: &str| v.id_of(&s(t)).unwrap();
        assert_eq!(v.ext_set(id("0")).unwrap(), vec![1]);
        assert_eq!(v.ext_set(id("01")).unwrap(), vec![0]);
        assert!(v.ext_set(id("010")).unwrap().is_empty());
        assert!(v.ext_set(id("1")).unwrap().is_empty());
        assert!(v.ext_set(99).is_err());
        let ident = PrefixVocabulary::identity(&bits());
        assert!(ident.ext_set(0).unwrap().is_empty());
    }

    #[test]
    fn expand_rejects_unknown_ids() {
        assert!(matches!(fig4().expand(&[0, 7]), Err(Error::Format(_))));
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            PrefixVocabulary::build(&bits(), [s("0101")], Some(4)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn vocab_file_round_trip() {
        let v = fig4();
        let json = serde_json::to_string(&v.to_file()).unwrap();
        assert!(json.contains("\"010\""));
        let back = PrefixVocabulary::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, v);
        let arrays = r#"{"alphabet":["ab","cd"],"entries":[["ab","cd"]]}"#;
        let v2 = PrefixVocabulary::from_file(&serde_json::from_str(arrays).unwrap()).unwrap();
        assert_eq!(v2.len(), 3);
    }
}
