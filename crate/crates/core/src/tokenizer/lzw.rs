use std::collections::HashSet;

use super::PrefixVocabulary;
use crate::error::{Error, Result};
use crate::markov::{Alphabet, Symbol};

/// LZW dictionary grown over `sequence` until it holds `budget` strings.
pub fn train_lzw(alphabet: &Alphabet, sequence: &[Symbol], budget: usize) -> Result<PrefixVocabulary> {
    let n = alphabet.len();
    if budget < n {
        return Err(Error::param(format!("budget {budget} is smaller than the alphabet ({n})")));
    }
    if sequence.iter().any(|&a| usize::from(a) >= n) {
        return Err(Error::Alphabet("sequence symbol outside the alphabet".into()));
    }
    let mut dict: HashSet<Vec<Symbol>> = (0..n).map(|a| vec![a as Symbol]).collect();
    let mut added: Vec<Vec<Symbol>> = Vec::new();
    let mut current: Vec<Symbol> = Vec::new();
    for &a in sequence {
        if dict.len() >= budget {
            break;
        }
        current.push(a);
        if !dict.contains(&current) {
            dict.insert(current.clone());
            added.push(current.clone());
            current.clear();
            current.push(a);
        }
    }
    PrefixVocabulary::build(alphabet, added, Some(budget))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{bits, s};
    use super::*;

    #[test]
    fn hand_trace() {
        let v = train_lzw(&bits(), &s("0101110100"), 8).unwrap();
        let mut got: Vec<String> = v.entries().iter().map(|e| bits().render(e)).collect();
        got.sort();
        let mut want = vec!["0", "1", "01", "10", "011", "11", "101", "100"];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn budget_of_alphabet_is_identity() {
        let v = train_lzw(&bits(), &s("0101110100"), 2).unwrap();
        assert_eq!(v, PrefixVocabulary::identity(&bits()));
    }

    #[test]
    fn stays_within_budget() {
        let v = train_lzw(&bits(), &s(&"0110100".repeat(40)), 20).unwrap();
        assert_eq!(v.len(), 20);
        assert!(v.audit());
    }
}
