//! Span distribution and slack curve of a BPE vocabulary at one token
//! window. Uses the text corpus named by `CTXSPAN_CORPUS` (or CMake's help
//! pages when installed), else a synthetic binary source.
//!
//! Run with `cargo run --release --example span_slack [w]`.

use ctxspan::experiments::{default_corpus, load_text_corpus};
use ctxspan::span::{compression_stats, slack_curve, span_distribution, worst_case_span, SpanMode};
use ctxspan::tokenizer::train_bpe;
use ctxspan::{Alphabet, TransitionKernel};

fn main() -> ctxspan::Result<()> {
    let w: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let (alphabet, seq, v) = match default_corpus().filter(|p| p.exists()) {
        Some(path) => {
            println!("corpus {}", path.display());
            let text = load_text_corpus(&path)?;
            let alphabet = Alphabet::from_text(&text)?;
            let seq = alphabet.encode_chars(&text)?;
            (alphabet, seq, 4096)
        }
        None => {
            println!("no corpus found, using a binary order-12 source");
            let kernel = TransitionKernel::sample(2, 12, 0.4, 0)?;
            (kernel.alphabet().clone(), kernel.sample_sequence(1_000_000, 0)?, 20)
        }
    };
    let vocab = train_bpe(&alphabet, &seq[..seq.len().min(1_000_000)], v)?;
    let tokens = vocab.greedy_parse(&seq)?;
    let stats = compression_stats(&vocab, &tokens)?;
    let hist = span_distribution(&vocab, &tokens, w)?;
    println!(
        "|Y|={} |Z|={} alpha={:.3} R={:.3}; w={w}: span mean {:.1}, min {:?}, worst case {}",
        alphabet.len(),
        vocab.len(),
        stats.alpha,
        stats.rate,
        hist.mean(),
        hist.min_span(),
        worst_case_span(&vocab, w, SpanMode::Empirical, Some(&tokens))?
    );
    println!("{:>6} {:>8} {:>8}", "w_s", "eps", "slack");
    for p in slack_curve(&hist, &stats, (1..=16).map(|f| f * w)) {
        println!("{:>6} {:>8.4} {:>8.4}", p.w_s, p.epsilon, p.slack_bits);
    }
    Ok(())
}
