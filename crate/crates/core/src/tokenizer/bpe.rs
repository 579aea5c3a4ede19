use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use super::PrefixVocabulary;
use crate::error::{Error, Result};
use crate::markov::{Alphabet, Symbol};

/// One learned merge of two adjacent working tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merge {
    pub left: Vec<Symbol>,
    pub right: Vec<Symbol>,
}

impl Merge {
    pub fn merged(&self) -> Vec<Symbol> {
        let mut m = self.left.clone();
        m.extend_from_slice(&self.right);
        m
    }
}

/// BPE vocabulary whose prefix closure has exactly `target_size` entries, or
/// fewer if the corpus runs out of mergeable pairs.
pub fn train_bpe(alphabet: &Alphabet, corpus: &[Symbol], target_size: usize) -> Result<PrefixVocabulary> {
    let merges = learn_merges(alphabet, corpus, target_size)?;
    PrefixVocabulary::build(alphabet, merges.iter().map(Merge::merged), Some(target_size))
}

/// Learns merges in order. Each round merges the most frequent adjacent pair
/// (overlapping occurrences counted, ties to the lexicographically smallest
/// `(left, right)`), applied left to right. The budget counts the prefix
/// closure; a pair whose closure would overshoot it is never merged.
pub fn learn_merges(alphabet: &Alphabet, corpus: &[Symbol], target_size: usize) -> Result<Vec<Merge>> {
    let n = alphabet.len();
    if target_size < n {
        return Err(Error::param(format!(
            "target size {target_size} is smaller than the alphabet ({n})"
        )));
    }
    if corpus.len() < 2 {
        return Err(Error::Data("BPE needs a corpus of at least two symbols".into()));
    }
    if corpus.iter().any(|&a| usize::from(a) >= n) {
        return Err(Error::Alphabet("corpus symbol outside the alphabet".into()));
    }
    Trainer::new(n, corpus).run(target_size)
}

type Pair = (u32, u32);
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Rc<[Symbol]>,
    right: Rc<[Symbol]>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    strings: Vec<Rc<[Symbol]>>,
    ids: HashMap<Rc<[Symbol]>, u32>,
    closed: HashSet<Vec<Symbol>>,
    tok: Vec<u32>,
    prev: Vec<u32>,
    next: Vec<u32>,
    counts: HashMap<Pair, u64>,
    positions: HashMap<Pair, Vec<u32>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn new(n: usize, corpus: &[Symbol]) -> Self {
        let strings: Vec<Rc<[Symbol]>> = (0..n).map(|a| Rc::from(vec![a as Symbol])).collect();
        let ids = strings
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let closed = (0..n).map(|a| vec![a as Symbol]).collect();
        let len = corpus.len();
        let tok: Vec<u32> = corpus.iter().map(|&a| u32::from(a)).collect();
        let prev = (0..len).map(|i| if i == 0 { NONE } else { i as u32 - 1 }).collect();
        let next = (0..len)
            .map(|i| if i + 1 == len { NONE } else { i as u32 + 1 })
            .collect();
        let mut t = Self {
            strings,
            ids,
            closed,
            tok,
            prev,
            next,
            counts: HashMap::new(),
            positions: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for i in 0..len - 1 {
            let pair = (t.tok[i], t.tok[i + 1]);
            *t.counts.entry(pair).or_insert(0) += 1;
            t.positions.entry(pair).or_default().push(i as u32);
        }
        let pairs: Vec<Pair> = t.counts.keys().copied().collect();
        for p in pairs {
            t.push(p);
        }
        t
    }

    fn push(&mut self, pair: Pair) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(Candidate {
                count,
                left: self.strings[pair.0 as usize].clone(),
                right: self.strings[pair.1 as usize].clone(),
                pair,
            });
        }
    }

    fn run(mut self, target: usize) -> Result<Vec<Merge>> {
        let mut merges = Vec::new();
        let mut banned: HashSet<Pair> = HashSet::new();
        while self.closed.len() < target {
            let Some(cand) = self.heap.pop() else { break };
            let current = self.counts.get(&cand.pair).copied().unwrap_or(0);
            if current != cand.count || banned.contains(&cand.pair) {
                continue;
            }
            let mut merged = cand.left.to_vec();
            merged.extend_from_slice(&cand.right);
            let new_prefixes: Vec<Vec<Symbol>> = (cand.left.len() + 1..=merged.len())
                .map(|l| merged[..l].to_vec())
                .filter(|p| !self.closed.contains(p))
                .collect();
            if self.closed.len() + new_prefixes.len() > target {
                banned.insert(cand.pair);
                continue;
            }
            self.closed.extend(new_prefixes);
            let c = self.intern(merged);
            self.apply(cand.pair, c);
            merges.push(Merge {
                left: cand.left.to_vec(),
                right: cand.right.to_vec(),
            });
        }
        Ok(merges)
    }

    fn intern(&mut self, s: Vec<Symbol>) -> u32 {
        let s: Rc<[Symbol]> = Rc::from(s);
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.strings.len() as u32;
        self.strings.push(s.clone());
        self.ids.insert(s, id);
        id
    }

    fn apply(&mut self, (a, b): Pair, c: u32) {
        let mut pos = self.positions.remove(&(a, b)).unwrap_or_default();
        pos.sort_unstable();
        pos.dedup();
        let mut touched: HashSet<Pair> = HashSet::new();
        for p in pos {
            let p = p as usize;
            if self.tok[p] != a {
                continue;
            }
            let q = self.next[p];
            if q == NONE || self.tok[q as usize] != b {
                continue;
            }
            let q = q as usize;
            self.decrement((a, b));
            let before = self.prev[p];
            if before != NONE {
                let t = self.tok[before as usize];
                self.decrement((t, a));
                self.increment((t, c), before);
                touched.insert((t, a));
                touched.insert((t, c));
            }
            let after = self.next[q];
            if after != NONE {
                let t = self.tok[after as usize];
                self.decrement((b, t));
                self.increment((c, t), p as u32);
                touched.insert((b, t));
                touched.insert((c, t));
            }
            self.tok[p] = c;
            self.tok[q] = NONE;
            self.next[p] = after;
            if after != NONE {
                self.prev[after as usize] = p as u32;
            }
        }
        touched.remove(&(a, b));
        let mut touched: Vec<Pair> = touched.into_iter().collect();
        touched.sort_unstable();
        for pair in touched {
            self.push(pair);
        }
    }

    fn decrement(&mut self, pair: Pair) {
        if let Some(c) = self.counts.get_mut(&pair) {
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&pair);
            }
        }
    }

    fn increment(&mut self, pair: Pair, at: u32) {
        *self.counts.entry(pair).or_insert(0) += 1;
        self.positions.entry(pair).or_default().push(at);
    }
}
