//! On-disk formats for sequences, token streams, and JSON artifacts.
//!
//! A symbol sequence is stored as raw little-endian indices (one byte per
//! symbol when the alphabet has at most 256 symbols, two otherwise) next to a
//! JSON sidecar `<path>.json` holding `{alphabet, length, bytes_per_symbol}`.
//! A token stream is stored as LEB128 varint ids with a sidecar
//! `{vocab_size, length}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Alphabet, Symbol};
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSidecar {
    pub alphabet: Vec<String>,
    pub length: usize,
    pub bytes_per_symbol: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSidecar {
    pub vocab_size: usize,
    pub length: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_sequence(path: &Path, alphabet: &Alphabet, seq: &[Symbol]) -> Result<()> {
    let width = if alphabet.len() <= 256 { 1 } else { 2 };
    let mut bytes = Vec::with_capacity(seq.len() * width);
    for &s in seq {
        if usize::from(s) >= alphabet.len() {
            return Err(Error::Alphabet(format!("symbol index {s} out of range")));
        }
        if width == 1 {
            bytes.push(s as u8);
        } else {
            bytes.extend_from_slice(&s.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    write_json(
        &sidecar_path(path),
        &SequenceSidecar {
            alphabet: alphabet.labels().to_vec(),
            length: seq.len(),
            bytes_per_symbol: width,
        },
    )
}

pub fn read_sequence(path: &Path) -> Result<(Alphabet, Vec<Symbol>)> {
    let meta: SequenceSidecar = read_json(&sidecar_path(path))?;
    let alphabet = Alphabet::new(meta.alphabet)?;
    let bytes = fs::read(path)?;
    if bytes.len() != meta.length * meta.bytes_per_symbol {
        return Err(Error::format(format!(
            "sequence file has {} bytes, sidecar promises {} symbols of {} bytes",
            bytes.len(),
            meta.length,
            meta.bytes_per_symbol
        )));
    }
    let seq: Vec<Symbol> = match meta.bytes_per_symbol {
        1 => bytes.iter().map(|&b| Symbol::from(b)).collect(),
        2 => bytes
            .chunks_exact(2)
            .map(|c| Symbol::from_le_bytes([c[0], c[1]]))
            .collect(),
        w => return Err(Error::format(format!("unsupported symbol width {w}"))),
    };
    if seq.iter().any(|&s| usize::from(s) >= alphabet.len()) {
        return Err(Error::Alphabet("sequence symbol outside the sidecar alphabet".into()));
    }
    Ok((alphabet, seq))
}

pub fn encode_varints(ids: &[TokenId]) -> Vec<u8> {
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let mut v = id;
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                out.push(byte);
                break;
            }
            out.push(byte | 0x80);
        }
    }
    out
}

pub fn decode_varints(bytes: &[u8]) -> Result<Vec<TokenId>> {
    let mut out = Vec::new();
    let mut v: u64 = 0;
    let mut shift = 0;
    for &b in bytes {
        v |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            out.push(TokenId::try_from(v).map_err(|_| Error::format("token id overflows"))?);
            v = 0;
            shift = 0;
        } else {
            shift += 7;
            if shift > 28 {
                return Err(Error::format("varint longer than five bytes"));
            }
        }
    }
    if shift != 0 {
        return Err(Error::format("truncated varint"));
    }
    Ok(out)
}

pub fn write_tokens(path: &Path, vocab_size: usize, tokens: &[TokenId]) -> Result<()> {
    fs::write(path, encode_varints(tokens))?;
    write_json(
        &sidecar_path(path),
        &TokenSidecar {
            vocab_size,
            length: tokens.len(),
        },
    )
}

pub fn read_tokens(path: &Path) -> Result<(TokenSidecar, Vec<TokenId>)> {
    let meta: TokenSidecar = read_json(&sidecar_path(path))?;
    let tokens = decode_varints(&fs::read(path)?)?;
    if tokens.len() != meta.length {
        return Err(Error::format("token count disagrees with sidecar"));
    }
    if tokens.iter().any(|&t| t as usize >= meta.vocab_size) {
        return Err(Error::format("token id outside the vocabulary"));
    }
    Ok((meta, tokens))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_round_trip_both_widths() {
        let dir = tempfile::tempdir().unwrap();
        let small = Alphabet::numeric(3).unwrap();
        let p = dir.path().join("seq.bin");
        write_sequence(&p, &small, &[0, 2, 1, 1]).unwrap();
        assert_eq!(fs::read(&p).unwrap().len(), 4);
        assert_eq!(read_sequence(&p).unwrap(), (small, vec![0, 2, 1, 1]));

        let big = Alphabet::numeric(300).unwrap();
        write_sequence(&p, &big, &[299, 0, 256]).unwrap();
        assert_eq!(fs::read(&p).unwrap().len(), 6);
        assert_eq!(read_sequence(&p).unwrap().1, vec![299, 0, 256]);
    }

    #[test]
    fn varints_round_trip() {
        let ids = [0, 1, 127, 128, 300, 16_383, 16_384, u32::MAX];
        let bytes = encode_varints(&ids);
        assert_eq!(&bytes[..4], &[0, 1, 127, 0x80]);
        assert_eq!(decode_varints(&bytes).unwrap(), ids);
        assert!(decode_varints(&[0x80]).is_err());
    }

    #[test]
    fn truncated_sequence_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seq.bin");
        write_sequence(&p, &Alphabet::numeric(2).unwrap(), &[0, 1, 1]).unwrap();
        fs::write(&p, [0u8, 1]).unwrap();
        assert!(matches!(read_sequence(&p), Err(Error::Format(_))));
    }
}
