//! Greedy longest-match parsing against a small prefix-closed vocabulary,
//! and a BPE vocabulary trained on text.
//!
//! Run with `cargo run --release --example greedy_parse`.

use ctxspan::tokenizer::{train_bpe, PrefixVocabulary};
use ctxspan::Alphabet;

fn main() -> ctxspan::Result<()> {
    let bits = Alphabet::numeric(2)?;
    let vocab = PrefixVocabulary::build(&bits, [bits.encode_chars("010")?], None)?;
    let labels: Vec<String> = (0..vocab.len() as u32)
        .map(|t| vocab.entry(t).map(|e| bits.render(e)))
        .collect::<ctxspan::Result<_>>()?;
    println!("vocabulary {labels:?}");

    let y = bits.encode_chars("0101110100")?;
    let tokens = vocab.greedy_parse(&y)?;
    let pieces: Vec<&str> = tokens.iter().map(|&t| labels[t as usize].as_str()).collect();
    println!("0101110100 -> {pieces:?}");
    assert_eq!(vocab.expand(&tokens)?, y);

    let text = "the cat sat on the mat; the rat sat on the cat. ".repeat(20);
    let alphabet = Alphabet::from_text(&text)?;
    let seq = alphabet.encode_chars(&text)?;
    let bpe = train_bpe(&alphabet, &seq, 40)?;
    let tokens = bpe.greedy_parse(&seq)?;
    let first: Vec<String> = tokens[..12]
        .iter()
        .map(|&t| bpe.entry(t).map(|e| alphabet.render(e)))
        .collect::<ctxspan::Result<_>>()?;
    println!("BPE |Z|={} ratio {:.2}: {first:?}", bpe.len(), seq.len() as f64 / tokens.len() as f64);
    Ok(())
}
