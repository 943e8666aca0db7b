//! The `AVTC` compressed stream format.
//!
//! ```text
//! header (24 bytes): magic "AVTC", u32 version, u32 d, u32 d_a,
//!                    u32 entry count, u32 reserved (0)
//! entry: u8 tag, 3 zero bytes, then
//!   tag 1 (visual): u32 first chunk, u32 chunk count, u32 n,
//!                   n u32 token indices, n*d f32 rows
//!   tag 2 (audio):  u32 chunk, u32 L, L*d_a f32 rows
//! ```
//!
//! Little-endian throughout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::binary::{
    expect_eof, narrow, read_exact_or_truncated, read_f32s, read_u32, read_u32s, write_f32s,
    HeaderReader,
};
use crate::error::{FormatError, Result};
use crate::tensor::Matrix;
use crate::types::{AudioChunk, CompressedStream, Entry, VisualBlock};

pub const COMPRESSED_MAGIC: [u8; 4] = *b"AVTC";
pub const COMPRESSED_VERSION: u32 = 1;
pub const COMPRESSED_HEADER_LEN: usize = 24;

const TAG_VISUAL: u8 = 1;
const TAG_AUDIO: u8 = 2;

/// Visual and audio widths of a compressed stream. Zero when the stream has no
/// entry of that kind.
fn widths(stream: &CompressedStream) -> (usize, usize) {
    let d = stream.visual_blocks().next().map_or(0, |b| b.rows.cols());
    let da = stream.audio_entries().next().map_or(0, |(_, a)| a.dim());
    (d, da)
}

pub fn write_compressed<W: Write>(stream: &CompressedStream, w: &mut W) -> Result<()> {
    let (d, da) = widths(stream);
    let mut header = Vec::with_capacity(COMPRESSED_HEADER_LEN);
    header.extend_from_slice(&COMPRESSED_MAGIC);
    for v in [
        COMPRESSED_VERSION,
        narrow(d, "d")?,
        narrow(da, "d_a")?,
        narrow(stream.entries.len(), "entry count")?,
        0,
    ] {
        header.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&header)?;

    for (i, entry) in stream.entries.iter().enumerate() {
        match entry {
            Entry::Visual(b) => {
                if b.rows.cols() != d || b.rows.rows() != b.indices.len() {
                    return Err(
                        FormatError::Malformed(format!("entry {i}: visual block shape")).into(),
                    );
                }
                let mut head = vec![TAG_VISUAL, 0, 0, 0];
                for v in [b.chunks.start, b.chunks.len(), b.indices.len()] {
                    head.extend_from_slice(&narrow(v, "visual block field")?.to_le_bytes());
                }
                for &idx in &b.indices {
                    head.extend_from_slice(&narrow(idx, "token index")?.to_le_bytes());
                }
                w.write_all(&head)?;
                write_f32s(w, b.rows.as_slice())?;
            }
            Entry::Audio { chunk, audio } => {
                if audio.dim() != da {
                    return Err(FormatError::Malformed(format!("entry {i}: audio width")).into());
                }
                let mut head = vec![TAG_AUDIO, 0, 0, 0];
                head.extend_from_slice(&narrow(*chunk, "chunk index")?.to_le_bytes());
                head.extend_from_slice(&narrow(audio.tokens(), "L")?.to_le_bytes());
                w.write_all(&head)?;
                write_f32s(w, audio.embeddings().as_slice())?;
            }
        }
    }
    Ok(())
}

pub fn read_compressed<R: Read>(r: &mut R) -> Result<CompressedStream> {
    let mut buf = [0u8; COMPRESSED_HEADER_LEN];
    read_exact_or_truncated(r, &mut buf[..4], "compressed magic")?;
    let magic = HeaderReader::new(&buf).magic();
    if magic != COMPRESSED_MAGIC {
        return Err(FormatError::BadMagic {
            expected: COMPRESSED_MAGIC,
            found: magic,
        }
        .into());
    }
    read_exact_or_truncated(r, &mut buf[4..], "compressed header")?;
    let mut h = HeaderReader::new(&buf[4..]);
    let version = h.u32();
    if version != COMPRESSED_VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "AVTC",
            found: version,
            supported: COMPRESSED_VERSION,
        }
        .into());
    }
    let (d, da, count, reserved) = (h.u32() as usize, h.u32() as usize, h.u32(), h.u32());
    if reserved != 0 {
        return Err(FormatError::Malformed(format!("reserved header word {reserved:#x}")).into());
    }

    let mut entries = Vec::new();
    for i in 0..count {
        let ctx = |what: &str| format!("entry {i} {what}");
        let mut tag = [0u8; 4];
        read_exact_or_truncated(r, &mut tag, &ctx("tag"))?;
        if tag[1..] != [0, 0, 0] {
            return Err(FormatError::Malformed(ctx("padding is not zero")).into());
        }
        match tag[0] {
            TAG_VISUAL => {
                let first = read_u32(r, &ctx("first chunk"))? as usize;
                let span = read_u32(r, &ctx("chunk count"))? as usize;
                let n = read_u32(r, &ctx("index count"))?;
                if span == 0 {
                    return Err(FormatError::Malformed(ctx("has an empty chunk range")).into());
                }
                let end = first
                    .checked_add(span)
                    .ok_or_else(|| FormatError::DimensionOverflow(ctx("chunk range")))?;
                let indices: Vec<usize> = read_u32s(r, n as u64, &ctx("indices"))?
                    .into_iter()
                    .map(|v| v as usize)
                    .collect();
                if indices.windows(2).any(|p| p[0] >= p[1]) {
                    return Err(
                        FormatError::Malformed(ctx("indices not strictly increasing")).into(),
                    );
                }
                let rows = read_f32s(r, n as u64 * d as u64, &ctx("rows"))?;
                let rows = Matrix::from_vec(n as usize, d, rows)
                    .map_err(|e| FormatError::Malformed(e.to_string()))?;
                entries.push(Entry::Visual(VisualBlock {
                    chunks: first..end,
                    indices,
                    rows,
                }));
            }
            TAG_AUDIO => {
                let chunk = read_u32(r, &ctx("chunk"))? as usize;
                let l = read_u32(r, &ctx("token count"))? as usize;
                let rows = read_f32s(r, l as u64 * da as u64, &ctx("audio rows"))?;
                let audio = Matrix::from_vec(l, da, rows)
                    .and_then(AudioChunk::new)
                    .map_err(|e| FormatError::Malformed(format!("entry {i}: {e}")))?;
                entries.push(Entry::Audio { chunk, audio });
            }
            other => {
                return Err(FormatError::Malformed(ctx(&format!("unknown tag {other}"))).into())
            }
        }
    }
    expect_eof(r)?;
    Ok(CompressedStream { entries })
}

pub fn write_compressed_file(stream: &CompressedStream, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_compressed(stream, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_compressed_file(path: impl AsRef<Path>) -> Result<CompressedStream> {
    read_compressed(&mut BufReader::new(File::open(path)?))
}
