//! Exact and empirical finite-context prediction loss on stationary Markov
//! sources, and how it changes under fixed-length fragmentation and greedy
//! tokenization.

pub mod error;
pub mod experiments;
pub mod fragmentation;
pub mod io;
pub mod markov;
pub mod ngram;
pub mod numeric;
pub mod rng;
pub mod span;
pub mod tokenizer;
pub mod transfer;

pub use error::{Error, Result};
pub use markov::{Alphabet, StationaryLaw, Symbol, TransitionKernel};
