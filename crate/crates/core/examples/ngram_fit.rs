//! Fits a Laplace n-gram, smooths it, and round-trips it through the JSON
//! predictor format.
//!
//! Run with `cargo run --release --example ngram_fit`.

use ctxspan::ngram::ContextPredictor;
use ctxspan::{Alphabet, TransitionKernel};

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(2, 3, 0.5, 1)?;
    let seq = kernel.sample_sequence(50_000, 1)?;
    let q = ContextPredictor::fit(kernel.alphabet(), &seq, 3, 0.5)?;
    let ctx = Alphabet::numeric(2)?.encode_chars("101")?;
    println!("q(. | 101) = {:?}", q.row(&ctx));

    let smoothed = q.smoothed(0.01)?;
    println!("positivity floor after smoothing: {:.4}", smoothed.positivity_floor());

    let test = kernel.sample_sequence(50_000, 2)?;
    let loss = smoothed.log_loss(&test)?;
    println!(
        "held-out loss {:.5} bits/symbol over {} predictions (exact optimum {:.5})",
        loss.bits_per_symbol,
        loss.predicted,
        kernel.conditional_entropy(3)?
    );

    let json = serde_json::to_string(&q.to_file()?)?;
    let back = ContextPredictor::from_file(serde_json::from_str(&json)?)?;
    assert_eq!(back.row(&ctx), q.row(&ctx));
    println!("predictor file: {} bytes", json.len());
    Ok(())
}
