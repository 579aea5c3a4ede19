//! Heavy-hitting diagnostics for LZW vocabularies on a source whose
//! transition probabilities are all positive.
//!
//! Run with `cargo run --release --example heavy_hitting`.

use ctxspan::span::heavy_hitting_report;
use ctxspan::tokenizer::train_lzw;
use ctxspan::TransitionKernel;

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(2, 2, 2.0, 1)?;
    let seq = kernel.sample_sequence(500_000, 1)?;
    println!("delta = {:.4}", kernel.min_transition_prob());
    for d in [256, 1024, 4096] {
        let vocab = train_lzw(kernel.alphabet(), &seq[..200_000], d)?;
        let tokens = vocab.greedy_parse(&seq)?;
        let r = heavy_hitting_report(&kernel, &vocab, &tokens, 0.5, d, &[4, 16])?;
        println!(
            "d={d}: ell_d {:.3}, miss {:.5}, short {:.5}, inclusion violations {}",
            r.ell_d, r.miss_prob, r.short_token_prob, r.inclusion_violations
        );
        println!(
            "  alpha {:.3} >= {:.3}: {}; rate {:.3} <= {:.3}; loss slack {:.4} bits",
            r.alpha, r.alpha_lower_bound, r.alpha_bound_holds, r.rate_bits, r.rate_bound_bits, r.loss_slack_bits
        );
        for c in &r.windows {
            println!(
                "  w={} w_d={}: P[S < w_d] = {:.5} <= {:.5}: {}",
                c.w, c.w_d, c.failure_prob, c.bound, c.holds
            );
        }
    }
    Ok(())
}
