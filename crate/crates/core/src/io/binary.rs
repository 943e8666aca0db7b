//! Little-endian primitives shared by the binary formats.

use std::io::{Read, Write};

use crate::error::FormatError;

pub(crate) fn read_exact_or_truncated<R: Read>(
    r: &mut R,
    buf: &mut [u8],
    context: &str,
) -> Result<(), FormatError> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(FormatError::Truncated {
                    context: context.to_string(),
                    needed: (buf.len() - filled) as u64,
                })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Reads `count` 4-byte little-endian words. Memory grows with the bytes
/// actually present, so a header claiming a huge payload cannot force a huge
/// allocation.
fn read_words<R: Read>(r: &mut R, count: u64, context: &str) -> Result<Vec<[u8; 4]>, FormatError> {
    let bytes = count
        .checked_mul(4)
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{context}: {count} words")))?;
    let mut buf = Vec::new();
    r.by_ref().take(bytes).read_to_end(&mut buf)?;
    if (buf.len() as u64) < bytes {
        return Err(FormatError::Truncated {
            context: context.to_string(),
            needed: bytes - buf.len() as u64,
        });
    }
    Ok(buf
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect())
}

pub(crate) fn read_f32s<R: Read>(
    r: &mut R,
    count: u64,
    context: &str,
) -> Result<Vec<f32>, FormatError> {
    Ok(read_words(r, count, context)?
        .into_iter()
        .map(f32::from_le_bytes)
        .collect())
}

pub(crate) fn read_u32s<R: Read>(
    r: &mut R,
    count: u64,
    context: &str,
) -> Result<Vec<u32>, FormatError> {
    Ok(read_words(r, count, context)?
        .into_iter()
        .map(u32::from_le_bytes)
        .collect())
}

pub(crate) fn read_u32<R: Read>(r: &mut R, context: &str) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b, context)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn narrow(v: usize, what: &str) -> Result<u32, FormatError> {
    u32::try_from(v)
        .map_err(|_| FormatError::DimensionOverflow(format!("{what} = {v} exceeds u32")))
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn expect_eof<R: Read>(r: &mut R) -> Result<(), FormatError> {
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.is_empty() {
        Ok(())
    } else {
        Err(FormatError::TrailingData(rest.len() as u64))
    }
}

/// Fixed-size header cursor.
pub(crate) struct HeaderReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn magic(&mut self) -> [u8; 4] {
        let m = [
            self.buf[self.pos],
            self.buf[self.pos + 1],
            self.buf[self.pos + 2],
            self.buf[self.pos + 3],
        ];
        self.pos += 4;
        m
    }

    pub(crate) fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.magic())
    }

    pub(crate) fn u8(&mut self) -> u8 {
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }
}

pub(crate) fn checked_product(dims: &[u64], what: &str) -> Result<u64, FormatError> {
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| FormatError::DimensionOverflow(format!("{what}: {dims:?}")))
}
