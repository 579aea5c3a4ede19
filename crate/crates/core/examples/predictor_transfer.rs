//! Transfers an exact optimal source predictor to token space and compares
//! its loss with the source loss, with and without a span gate.
//!
//! Run with `cargo run --release --example predictor_transfer`.

use ctxspan::ngram::ContextPredictor;
use ctxspan::span::{compression_stats, span_distribution, worst_case_span, SpanMode};
use ctxspan::tokenizer::train_lzw;
use ctxspan::transfer::{make_typical, TransferredPredictor, DEFAULT_TRANSFER_ETA};
use ctxspan::TransitionKernel;

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(2, 3, 0.5, 0)?;
    let seq = kernel.sample_sequence(300_000, 0)?;
    let vocab = train_lzw(kernel.alphabet(), &seq[..100_000], 64)?;
    let tokens = vocab.greedy_parse(&seq)?;
    let w = 2;

    let ws = worst_case_span(&vocab, w, SpanMode::Empirical, Some(&tokens))?;
    let q = ContextPredictor::optimal(&kernel, ws)?.smoothed(DEFAULT_TRANSFER_ETA)?;
    let e = TransferredPredictor::new(q, vocab.clone(), w)?.evaluate(&tokens)?;
    println!("w={w} tokens, worst-case span {ws}");
    println!(
        "transferred: {:.5} bits/symbol, source {:.5}, entropy rate {:.5}",
        e.per_source_symbol,
        e.source_per_symbol,
        kernel.entropy_rate()?
    );
    println!(
        "cumulative difference {:.2} bits (telescoping bound {:.2})",
        e.difference(),
        e.bound_2log_1_over_lambda
    );

    let stats = compression_stats(&vocab, &tokens)?;
    let hist = span_distribution(&vocab, &tokens, w)?;
    for w_s in [4, 6, 8] {
        let q = ContextPredictor::optimal(&kernel, w_s)?.smoothed(DEFAULT_TRANSFER_ETA)?;
        let t = make_typical(TransferredPredictor::new(q, vocab.clone(), w)?, w_s);
        let e = t.evaluate(&tokens)?;
        let eps = hist.cdf_below(w_s);
        let bound = kernel.conditional_entropy(w_s)? + eps * stats.rate * stats.log2_alphabet;
        println!(
            "gate w_s={w_s}: eps {eps:.4}, loss {:.5} +- {:.5}, bound {bound:.5}",
            e.per_source_symbol, e.per_source_symbol_se
        );
    }
    Ok(())
}
