//! Builds LZW dictionaries of increasing budget on a binary Markov sample
//! and reports token lengths and the resulting compression.
//!
//! Run with `cargo run --release --example lzw_dictionary`.

use ctxspan::span::compression_stats;
use ctxspan::tokenizer::train_lzw;
use ctxspan::TransitionKernel;

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(2, 2, 2.0, 0)?;
    let seq = kernel.sample_sequence(400_000, 0)?;
    let train = &seq[..200_000];
    println!("entropy rate {:.4} bits/symbol", kernel.entropy_rate()?);
    println!("{:>6} {:>6} {:>8} {:>8}", "d", "max", "alpha", "rate");
    for d in [2, 16, 256, 4096] {
        let vocab = train_lzw(kernel.alphabet(), train, d)?;
        let tokens = vocab.greedy_parse(&seq)?;
        let stats = compression_stats(&vocab, &tokens)?;
        println!("{d:>6} {:>6} {:>8.3} {:>8.4}", vocab.max_entry_len(), stats.alpha, stats.rate);
    }
    Ok(())
}
