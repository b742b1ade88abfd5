//! Binary model checkpoints.
//!
//! Layout (little endian): magic `ADMC`, version u32, flags u32 (bit 0
//! = pair mode), dim u32, hidden u32, vocab_len u32, then the f64
//! parameter blocks `emb`, `w1`, `b1`, `w2`, `b2` in order, then the
//! vocabulary as length-prefixed UTF-8 strings. The decoder validates
//! sizes before allocating, requires finite parameters, and never
//! panics on arbitrary bytes.

use std::path::Path;

use thiserror::Error;

use super::model::TinyClassifier;
use super::vocab::Vocab;

const MAGIC: &[u8; 4] = b"ADMC";
const VERSION: u32 = 1;
const FLAG_PAIR: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint decode: {0}")]
    Decode(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn encode(model: &TinyClassifier) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if model.pair { FLAG_PAIR } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(model.dim as u32).to_le_bytes());
    out.extend_from_slice(&(model.hidden as u32).to_le_bytes());
    out.extend_from_slice(&(model.vocab.len() as u32).to_le_bytes());
    for block in [&model.emb, &model.w1, &model.b1, &model.w2, &model.b2] {
        for &x in block.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    for token in model.vocab.tokens() {
        out.extend_from_slice(&(token.len() as u32).to_le_bytes());
        out.extend_from_slice(token.as_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() - self.pos < n {
            return Err(CheckpointError::Decode(format!(
                "truncated: need {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64_block(&mut self, n: usize, name: &str) -> Result<Vec<f64>, CheckpointError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            CheckpointError::Decode(format!("{name}: size overflow"))
        })?)?;
        let mut out = Vec::with_capacity(n);
        for chunk in bytes.chunks_exact(8) {
            let x = f64::from_le_bytes(chunk.try_into().unwrap());
            if !x.is_finite() {
                return Err(CheckpointError::Decode(format!("{name}: non-finite parameter")));
            }
            out.push(x);
        }
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> Result<TinyClassifier, CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::Decode("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Decode(format!("unsupported version {version}")));
    }
    let flags = r.u32()?;
    if flags & !FLAG_PAIR != 0 {
        return Err(CheckpointError::Decode(format!("unknown flags {flags:#x}")));
    }
    let pair = flags & FLAG_PAIR != 0;
    let dim = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let vocab_len = r.u32()? as usize;
    if dim == 0 || vocab_len < 2 {
        return Err(CheckpointError::Decode(
            "dim must be positive and vocabulary at least 2 entries".into(),
        ));
    }

    let overflow = || CheckpointError::Decode("parameter size overflow".into());
    let feat = if pair { dim.checked_mul(3).ok_or_else(overflow)? } else { dim };
    let sizes: [usize; 5] = [
        vocab_len.checked_mul(dim).ok_or_else(overflow)?,
        if hidden > 0 { feat.checked_mul(hidden).ok_or_else(overflow)? } else { 0 },
        hidden,
        if hidden > 0 { hidden.checked_mul(2) } else { feat.checked_mul(2) }
            .ok_or_else(overflow)?,
        2,
    ];
    let mut total: usize = 0;
    for s in sizes {
        total = total.checked_add(s).ok_or_else(overflow)?;
    }
    let need = total.checked_mul(8).ok_or_else(overflow)?;
    if need > r.remaining() {
        return Err(CheckpointError::Decode(format!(
            "declared parameters need {need} bytes, only {} remain",
            r.remaining()
        )));
    }

    let emb = r.f64_block(sizes[0], "emb")?;
    let w1 = r.f64_block(sizes[1], "w1")?;
    let b1 = r.f64_block(sizes[2], "b1")?;
    let w2 = r.f64_block(sizes[3], "w2")?;
    let b2 = r.f64_block(sizes[4], "b2")?;

    let mut tokens = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let len = r.u32()? as usize;
        let bytes = r.take(len)?;
        let s = std::str::from_utf8(bytes)
            .map_err(|_| CheckpointError::Decode("vocabulary token not utf-8".into()))?;
        tokens.push(s.to_string());
    }
    if r.remaining() != 0 {
        return Err(CheckpointError::Decode(format!("{} trailing bytes", r.remaining())));
    }
    let vocab = Vocab::from_tokens(tokens).map_err(CheckpointError::Decode)?;
    Ok(TinyClassifier { vocab, dim, hidden, pair, emb, w1, b1, w2, b2 })
}

pub fn write_checkpoint(path: &Path, model: &TinyClassifier) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(model))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<TinyClassifier, CheckpointError> {
    let bytes = std::fs::read(path)?;
    decode(&bytes)
}
