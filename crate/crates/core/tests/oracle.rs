//! Library results against the brute-force enumerators in `common`, and the
//! frozen golden values in `fixtures/golden.json`.

mod common;

use std::path::PathBuf;

use ctxspan::fragmentation::{decompose, FragmentationMap};
use ctxspan::ngram::ContextPredictor;
use ctxspan::span::{log2_p_max, log2_p_max_table};
use ctxspan::tokenizer::train_lzw;
use ctxspan::{Alphabet, Symbol, TransitionKernel};
use proptest::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Golden {
    name: String,
    alphabet: Vec<String>,
    order: usize,
    dirichlet_alpha: f64,
    seed: u64,
    probs: Vec<f64>,
    m: usize,
    w: usize,
    quantity: String,
    value: Vec<f64>,
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden.json")
}

fn letters() -> Alphabet {
    Alphabet::new(["a", "b", "c", "d"]).unwrap()
}

fn two_bit_code() -> Vec<Vec<Symbol>> {
    vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
}

fn seeded(order: usize, seed: u64) -> TransitionKernel {
    let drawn = TransitionKernel::sample(4, order, 0.5, seed).unwrap();
    TransitionKernel::new(letters(), order, drawn.probs().to_vec()).unwrap()
}

/// The golden cases, evaluated with the oracle only.
fn oracle_cases() -> Vec<Golden> {
    let code = two_bit_code();
    let mut out = Vec::new();
    let mut case = |name: &str, kernel: &TransitionKernel, seed: u64, m, w, quantity: &str, value: Vec<f64>| {
        out.push(Golden {
            name: name.into(),
            alphabet: kernel.alphabet().labels().to_vec(),
            order: kernel.order(),
            dirichlet_alpha: 0.5,
            seed,
            probs: kernel.probs().to_vec(),
            m,
            w,
            quantity: quantity.into(),
            value,
        })
    };
    let k1 = seeded(1, 0);
    let f = common::fragmentation(&k1, &code, 2);
    case("letters_k1_w2_fragmented_loss", &k1, 0, 2, 2, "l_frag", vec![f.l_frag]);
    let f = common::fragmentation(&k1, &code, 1);
    case("letters_k1_w1_phase_ambiguity", &k1, 0, 2, 1, "phase_ambiguity", vec![f.ambiguity]);
    let k2 = seeded(2, 0);
    let f = common::fragmentation(&k2, &code, 1);
    case("letters_k2_w1_context_deficit", &k2, 0, 2, 1, "context_deficit", vec![f.deficit]);
    let rows: Vec<f64> = (0..4).flat_map(|c| common::optimal_row(&k2, &[c])).collect();
    case("letters_k2_w1_optimal_rows", &k2, 0, 1, 1, "optimal_rows", rows);
    out
}

fn load_fixture() -> Vec<Golden> {
    let text = std::fs::read_to_string(fixture_path()).expect("golden fixture present");
    serde_json::from_str(&text).unwrap()
}

#[test]
#[ignore = "rewrites the golden fixture from the oracle"]
fn regenerate_golden_fixture() {
    let text = serde_json::to_string_pretty(&oracle_cases()).unwrap();
    std::fs::write(fixture_path(), text + "\n").unwrap();
}

#[test]
fn oracle_reproduces_frozen_golden_values() {
    let frozen = load_fixture();
    let fresh = oracle_cases();
    assert_eq!(frozen.len(), fresh.len());
    for (a, b) in frozen.iter().zip(&fresh) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.probs, b.probs, "{}: seeded kernel draw changed", a.name);
        for (x, y) in a.value.iter().zip(&b.value) {
            assert!((x - y).abs() < 1e-12, "{}: {x} vs {y}", a.name);
        }
    }
}

#[test]
fn library_matches_golden_values() {
    for g in load_fixture() {
        let kernel = TransitionKernel::new(Alphabet::new(g.alphabet.clone()).unwrap(), g.order, g.probs.clone()).unwrap();
        let map = FragmentationMap::new(letters(), Alphabet::numeric(2).unwrap(), 2, two_bit_code()).unwrap();
        let got: Vec<f64> = match g.quantity.as_str() {
            "l_frag" => vec![decompose(&kernel, &map, g.w).unwrap().l_frag],
            "phase_ambiguity" => vec![decompose(&kernel, &map, g.w).unwrap().phase_ambiguity],
            "context_deficit" => vec![decompose(&kernel, &map, g.w).unwrap().context_deficit],
            "optimal_rows" => {
                let q = ContextPredictor::optimal(&kernel, g.w).unwrap();
                (0..4).flat_map(|c| q.row(&[c])).collect()
            }
            other => panic!("unknown quantity {other}"),
        };
        assert_eq!(got.len(), g.value.len());
        for (x, y) in got.iter().zip(&g.value) {
            assert!((x - y).abs() < 1e-9, "{}: {x} vs {y}", g.name);
        }
        if g.quantity != "optimal_rows" && g.quantity != "l_frag" {
            assert!(g.value[0] > 1e-6, "{} should be strictly positive", g.name);
        }
    }
}

#[test]
fn letters_code_is_the_default_code() {
    let map = FragmentationMap::default_code(letters(), Alphabet::numeric(2).unwrap(), 2).unwrap();
    for (y, cw) in two_bit_code().iter().enumerate() {
        assert_eq!(map.codeword(y as Symbol), &cw[..]);
    }
}

fn kernel_strategy() -> impl Strategy<Value = TransitionKernel> {
    (2usize..=4, 0usize..=2, any::<u64>(), prop_oneof![Just(0.3), Just(1.0), Just(3.0)])
        .prop_map(|(n, k, seed, a)| TransitionKernel::sample(n, k, a, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn stationary_law_matches_elimination(kernel in kernel_strategy()) {
        let law = kernel.stationary_law().unwrap();
        let exact = common::stationary(&kernel);
        let n = kernel.alphabet_size();
        for (ctx, p) in &exact {
            let idx = ctx.iter().fold(0, |a, &s| a * n + s as usize);
            prop_assert!((law.pi[idx] - p).abs() < 1e-9, "{} vs {}", law.pi[idx], p);
        }
    }

    #[test]
    fn conditional_entropy_matches_enumeration(kernel in kernel_strategy(), w in 0usize..=3) {
        let got = kernel.conditional_entropy(w).unwrap();
        prop_assert!((got - common::entropy(&kernel, w)).abs() < 1e-9);
    }

    #[test]
    fn decomposition_matches_oracle(
        n_x in 2usize..=3,
        m in 1usize..=3,
        k in 0usize..=2,
        w in 0usize..=2,
        seed in any::<u64>(),
    ) {
        let n_y = n_x.pow(m as u32).min(4);
        let kernel = TransitionKernel::sample(n_y, k, 0.5, seed).unwrap();
        let map = FragmentationMap::default_code(
            Alphabet::numeric(n_y).unwrap(),
            Alphabet::numeric(n_x).unwrap(),
            m,
        ).unwrap();
        let code: Vec<Vec<Symbol>> = (0..n_y as Symbol).map(|y| map.codeword(y).to_vec()).collect();
        let r = decompose(&kernel, &map, w).unwrap();
        let o = common::fragmentation(&kernel, &code, w);
        prop_assert!((r.l_y - o.l_y).abs() < 1e-9);
        prop_assert!((r.l_frag - o.l_frag).abs() < 1e-9);
        prop_assert!((r.context_deficit - o.deficit).abs() < 1e-9);
        prop_assert!((r.phase_ambiguity - o.ambiguity).abs() < 1e-9);
    }

    #[test]
    fn p_max_matches_brute_force(kernel in kernel_strategy(), t in prop::collection::vec(0u16..4, 0..7)) {
        let n = kernel.alphabet_size() as u16;
        let t: Vec<Symbol> = t.into_iter().map(|s| s % n).collect();
        let brute = common::p_max(&kernel, &t);
        let got = log2_p_max(&kernel, &t).exp2();
        prop_assert!((got - brute).abs() < 1e-12 * brute.max(1.0), "{got} vs {brute}");
    }

    #[test]
    fn optimal_rows_match_oracle(kernel in kernel_strategy(), w in 0usize..=3) {
        let q = ContextPredictor::optimal(&kernel, w).unwrap();
        let n = kernel.alphabet_size();
        for ctx in common::all_strings(n, w) {
            let prob = common::block_law(&kernel, w).get(&ctx).copied().unwrap_or(0.0);
            if prob <= 0.0 {
                continue;
            }
            let want = common::optimal_row(&kernel, &ctx);
            for (a, b) in q.row(&ctx).iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn p_max_table_matches_brute_force_on_lzw_vocab() {
    let kernel = TransitionKernel::sample(2, 2, 1.0, 5).unwrap();
    let seq = kernel.sample_sequence(20_000, 5).unwrap();
    let vocab = train_lzw(kernel.alphabet(), &seq, 200).unwrap();
    let table = log2_p_max_table(&kernel, &vocab);
    for (id, e) in vocab.entries().iter().enumerate() {
        let brute = common::p_max(&kernel, e).log2();
        assert!((table[id] - brute).abs() < 1e-9, "{:?}: {} vs {brute}", e, table[id]);
    }
}
