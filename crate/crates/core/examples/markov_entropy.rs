//! Samples a Dirichlet Markov kernel, solves for its stationary law and
//! prints the exact optimal loss at each context length next to a
//! Laplace-smoothed n-gram fitted on a sample.
//!
//! Run with `cargo run --release --example markov_entropy`.

use ctxspan::ngram::{ContextPredictor, DEFAULT_LAPLACE};
use ctxspan::TransitionKernel;

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(3, 2, 0.5, 7)?;
    let law = kernel.stationary_law()?;
    println!(
        "|Y|=3 k=2: stationary law converged in {} iterations (residual {:.1e})",
        law.iterations, law.residual
    );
    println!("symbol marginal {:?}", law.symbol_marginal(&kernel));

    let seq = kernel.sample_sequence(200_000, 7)?;
    let (train, test) = seq.split_at(100_000);
    println!("{:>2} {:>10} {:>10}", "w", "exact", "n-gram");
    for w in 0..=4 {
        let fitted = ContextPredictor::fit(kernel.alphabet(), train, w, DEFAULT_LAPLACE)?;
        let loss = fitted.log_loss(test)?;
        println!("{w:>2} {:>10.5} {:>10.5}", kernel.conditional_entropy(w)?, loss.bits_per_symbol);
    }
    println!("entropy rate {:.5}", kernel.entropy_rate()?);
    Ok(())
}
