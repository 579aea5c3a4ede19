//! Trains greedy BPE vocabularies of several sizes on the head of a binary
//! order-12 Markov sample and reports the compression ratio on the full
//! sequence.
//!
//! Run with `cargo run --release --example bpe_compression [n]`.

use ctxspan::tokenizer::train_bpe;
use ctxspan::TransitionKernel;

fn main() -> ctxspan::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2_500_000);
    let kernel = TransitionKernel::sample(2, 12, 0.4, 0)?;
    let seq = kernel.sample_sequence(n, 0)?;
    let train = &seq[..seq.len().min(500_000)];
    println!("entropy rate {:.4} bits/symbol", kernel.entropy_rate()?);
    println!("{:>4} {:>8} {:>8}", "V", "|Z|", "ratio");
    for v in [2, 4, 6, 8, 10, 15, 20] {
        let vocab = train_bpe(kernel.alphabet(), train, v)?;
        let tokens = vocab.greedy_parse(&seq)?;
        println!("{v:>4} {:>8} {:>8.3}", vocab.len(), seq.len() as f64 / tokens.len() as f64);
    }
    Ok(())
}
