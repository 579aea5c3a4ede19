mod common;

use std::collections::BTreeSet;

use ctxspan::tokenizer::{learn_merges, train_bpe, train_lzw, PrefixVocabulary, VocabFile};
use ctxspan::{Alphabet, Symbol};
use proptest::prelude::*;

fn bits() -> Alphabet {
    Alphabet::numeric(2).unwrap()
}

fn s(text: &str) -> Vec<Symbol> {
    bits().encode_chars(text).unwrap()
}

fn render(v: &PrefixVocabulary, tokens: &[u32]) -> Vec<String> {
    tokens
        .iter()
        .map(|&t| v.alphabet().render(v.entry(t).unwrap()))
        .collect()
}

fn entry_set(v: &PrefixVocabulary) -> BTreeSet<Vec<Symbol>> {
    v.entries().iter().cloned().collect()
}

/// Random alphabet size, seed strings over it, and a sequence to parse.
fn vocab_and_sequence() -> impl Strategy<Value = (PrefixVocabulary, Vec<Symbol>)> {
    (2usize..=4).prop_flat_map(|n| {
        let sym = 0..n as Symbol;
        (
            prop::collection::vec(prop::collection::vec(sym.clone(), 1..7), 0..12),
            prop::collection::vec(sym, 0..200),
        )
            .prop_map(move |(strings, y)| {
                let a = Alphabet::numeric(n).unwrap();
                (PrefixVocabulary::build(&a, strings, None).unwrap(), y)
            })
    })
}

#[test]
fn figure_vocabulary_examples() {
    let v = PrefixVocabulary::build(&bits(), [s("010")], None).unwrap();
    let t = v.greedy_parse(&s("0101110100")).unwrap();
    assert_eq!(render(&v, &t), ["010", "1", "1", "1", "010", "0"]);
    let t = v.greedy_parse(&s("010010")).unwrap();
    assert_eq!(render(&v, &t), ["010", "010"]);

    let ext = |text: &str| v.ext_set(v.id_of(&s(text)).unwrap()).unwrap();
    assert_eq!(ext("0"), vec![1]);
    assert_eq!(ext("01"), vec![0]);
    assert!(ext("010").is_empty());
    assert!(ext("1").is_empty());
}

#[test]
fn prefix_closure_by_hand() {
    let v = PrefixVocabulary::build(&bits(), [s("0110")], None).unwrap();
    let got: BTreeSet<String> = v.entries().iter().map(|e| bits().render(e)).collect();
    let want: BTreeSet<String> = ["0", "1", "01", "011", "0110"].iter().map(|x| x.to_string()).collect();
    assert_eq!(got, want);
}

#[test]
fn bpe_merges_most_frequent_pair_first() {
    let corpus = s(&"01".repeat(50));
    let merges = learn_merges(&bits(), &corpus, 3).unwrap();
    assert_eq!((merges[0].left.clone(), merges[0].right.clone()), (vec![0], vec![1]));
}

#[test]
fn lzw_hand_trace() {
    let v = train_lzw(&bits(), &s("0101110100"), 8).unwrap();
    let got: BTreeSet<String> = v.entries().iter().map(|e| bits().render(e)).collect();
    for want in ["0", "1", "01", "10", "011", "11", "101"] {
        assert!(got.contains(want), "{want} missing from {got:?}");
    }
    assert!(v.len() <= 8);
}

#[test]
fn round_trip_on_ten_thousand_pairs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(11);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=5usize);
        let a = Alphabet::numeric(n).unwrap();
        let strings: Vec<Vec<Symbol>> = (0..rng.random_range(0..10))
            .map(|_| (0..rng.random_range(1..6)).map(|_| rng.random_range(0..n as Symbol)).collect())
            .collect();
        let v = PrefixVocabulary::build(&a, strings, None).unwrap();
        let y: Vec<Symbol> = (0..rng.random_range(0..64)).map(|_| rng.random_range(0..n as Symbol)).collect();
        assert_eq!(v.expand(&v.greedy_parse(&y).unwrap()).unwrap(), y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_round_trips_and_is_idempotent((v, y) in vocab_and_sequence()) {
        let t = v.greedy_parse(&y).unwrap();
        let x = v.expand(&t).unwrap();
        prop_assert_eq!(&x, &y);
        prop_assert_eq!(v.greedy_parse(&x).unwrap(), t);
    }

    #[test]
    fn parse_is_longest_match((v, y) in vocab_and_sequence()) {
        let t = v.greedy_parse(&y).unwrap();
        let pieces: Vec<Vec<Symbol>> = t.iter().map(|&id| v.entry(id).unwrap().to_vec()).collect();
        prop_assert_eq!(pieces, common::greedy(&entry_set(&v), &y));
        // no token could have been extended by the next symbol
        for w in t.windows(2) {
            let next = v.entry(w[1]).unwrap()[0];
            prop_assert!(!v.extends(w[0], next));
        }
    }

    #[test]
    fn vocabularies_are_prefix_closed((v, _) in vocab_and_sequence()) {
        prop_assert!(v.audit());
        let set = entry_set(&v);
        for e in &set {
            for l in 1..e.len() {
                prop_assert!(set.contains(&e[..l]));
            }
        }
        for id in 0..v.len() as u32 {
            let e = v.entry(id).unwrap();
            for a in 0..v.alphabet().len() as Symbol {
                let mut longer = e.to_vec();
                longer.push(a);
                prop_assert_eq!(v.extends(id, a), set.contains(&longer));
            }
        }
    }

    #[test]
    fn trained_vocabularies_are_prefix_closed(
        y in prop::collection::vec(0u16..3, 10..400),
        target in 3usize..24,
    ) {
        let a = Alphabet::numeric(3).unwrap();
        for v in [train_bpe(&a, &y, target).unwrap(), train_lzw(&a, &y, target).unwrap()] {
            prop_assert!(v.audit());
            prop_assert!(v.len() <= target);
            let set = entry_set(&v);
            for e in &set {
                prop_assert!(e.len() == 1 || set.contains(&e[..e.len() - 1]));
            }
            prop_assert_eq!(v.expand(&v.greedy_parse(&y).unwrap()).unwrap(), y.clone());
        }
    }

    #[test]
    fn vocab_file_round_trips((v, y) in vocab_and_sequence()) {
        let json = serde_json::to_string(&v.to_file()).unwrap();
        let file: VocabFile = serde_json::from_str(&json).unwrap();
        let back = PrefixVocabulary::from_file(&file).unwrap();
        prop_assert_eq!(back.entries(), v.entries());
        prop_assert_eq!(back.greedy_parse(&y).unwrap(), v.greedy_parse(&y).unwrap());
    }
}
