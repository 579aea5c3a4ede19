//! Splits each symbol of a 4-ary order-1 source into two bits and shows how
//! the extra loss of a bit-level predictor divides into a context deficit and
//! a phase ambiguity term.
//!
//! Run with `cargo run --release --example fragmentation_gap`.

use ctxspan::fragmentation::{decompose, empirical_fragmented_loss, FragmentationMap};
use ctxspan::ngram::{ContextPredictor, DEFAULT_LAPLACE};
use ctxspan::{Alphabet, TransitionKernel};

fn main() -> ctxspan::Result<()> {
    let kernel = TransitionKernel::sample(4, 1, 0.5, 0)?;
    let map = FragmentationMap::default_code(Alphabet::numeric(4)?, Alphabet::numeric(2)?, 2)?;
    for y in 0..4 {
        println!("{y} -> {}", map.fragment_alphabet().render(map.codeword(y)));
    }

    println!("{:>2} {:>9} {:>9} {:>9} {:>9} {:>9}", "w", "L_Y", "L_frag", "deficit", "ambiguity", "gap");
    for w in 0..=3 {
        let r = decompose(&kernel, &map, w)?;
        println!(
            "{w:>2} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            r.l_y, r.l_frag, r.context_deficit, r.phase_ambiguity, r.gap
        );
    }

    let seq = kernel.sample_sequence(500_000, 0)?;
    let w = 1;
    let source = ContextPredictor::fit(kernel.alphabet(), &seq, w, DEFAULT_LAPLACE)?.log_loss(&seq)?;
    let frag = empirical_fragmented_loss(&map, &seq, w, DEFAULT_LAPLACE)?;
    println!(
        "n-gram at w={w}: penalty {:.5} bits/source symbol (exact {:.5})",
        frag - source.bits_per_symbol,
        decompose(&kernel, &map, w)?.gap
    );
    Ok(())
}
