//! Runs one experiment command from a JSON config, the same way the
//! `ctxspan` binary does, and prints the files written.
//!
//! Run with `cargo run --release --example run_experiment -- <command> <config.json>`,
//! e.g. `frag-decompose configs/frag_decompose.json`.

use std::path::PathBuf;

use ctxspan::experiments::{output_root, run, Command, ExperimentConfig};

fn main() -> ctxspan::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "frag-decompose".into());
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/frag_decompose.json".into()));
    let command = [
        Command::GenSource,
        Command::FragDecompose,
        Command::TokTrain,
        Command::SpanCdf,
        Command::TransferCheck,
        Command::HeavyHitting,
    ]
    .into_iter()
    .find(|c| c.name() == name)
    .ok_or_else(|| ctxspan::Error::Parameter(format!("unknown command {name}")))?;
    let config = ExperimentConfig::from_file(&path)?;
    for f in run(command, &config, &output_root())? {
        println!("{}", f.display());
    }
    Ok(())
}
