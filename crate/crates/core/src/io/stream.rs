//! The `AVTS` interleaved stream format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "AVTS"
//!      4     4  version (u32, currently 1)
//!      8     4  T  chunk count
//!     12     4  F  frames per chunk
//!     16     4  H  grid rows
//!     20     4  W  grid cols
//!     24     4  d  visual embedding width
//!     28     4  L  audio tokens per chunk
//!     32     4  d_a audio embedding width
//!     36     4  flags (bit 0: visual rows ordered (frame, row, col); required)
//!     40        per chunk: M*d visual f32, then L*d_a audio f32
//! ```
//!
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::binary::{
    checked_product, expect_eof, read_exact_or_truncated, read_f32s, write_f32s, HeaderReader,
};
use crate::error::{Error, FormatError, Result};
use crate::tensor::Matrix;
use crate::types::{AudioChunk, Chunk, InterleavedStream, VisualChunk};

pub const STREAM_MAGIC: [u8; 4] = *b"AVTS";
pub const STREAM_VERSION: u32 = 1;
pub const STREAM_HEADER_LEN: usize = 40;
pub const FLAG_ROW_MAJOR_FHW: u32 = 1;

/// Payload size cap (1 TiB); larger headers are treated as corrupt.
const MAX_PAYLOAD_BYTES: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StreamFileHeader {
    pub version: u32,
    pub chunks: u32,
    pub frames: u32,
    pub height: u32,
    pub width: u32,
    pub dim: u32,
    pub audio_tokens: u32,
    pub audio_dim: u32,
    pub flags: u32,
}

impl StreamFileHeader {
    pub fn of(stream: &InterleavedStream) -> Result<Self> {
        let s = stream.shape();
        let narrow = |v: usize, what: &str| {
            u32::try_from(v)
                .map_err(|_| FormatError::DimensionOverflow(format!("{what} = {v} exceeds u32")))
        };
        Ok(Self {
            version: STREAM_VERSION,
            chunks: narrow(stream.len(), "T")?,
            frames: narrow(s.frames, "F")?,
            height: narrow(s.height, "H")?,
            width: narrow(s.width, "W")?,
            dim: narrow(s.dim, "d")?,
            audio_tokens: narrow(s.audio_tokens, "L")?,
            audio_dim: narrow(s.audio_dim, "d_a")?,
            flags: FLAG_ROW_MAJOR_FHW,
        })
    }

    pub fn visual_tokens(&self) -> u64 {
        self.frames as u64 * self.height as u64 * self.width as u64
    }

    /// `(visual floats, audio floats)` per chunk, checked for overflow.
    fn chunk_floats(&self) -> Result<(u64, u64), FormatError> {
        let v = checked_product(
            &[
                self.frames as u64,
                self.height as u64,
                self.width as u64,
                self.dim as u64,
            ],
            "visual chunk F*H*W*d",
        )?;
        let a = checked_product(
            &[self.audio_tokens as u64, self.audio_dim as u64],
            "audio chunk L*d_a",
        )?;
        Ok((v, a))
    }

    /// Total payload bytes after the header.
    pub fn payload_bytes(&self) -> Result<u64, FormatError> {
        let (v, a) = self.chunk_floats()?;
        let per_chunk = v
            .checked_add(a)
            .and_then(|f| f.checked_mul(4))
            .ok_or_else(|| FormatError::DimensionOverflow("chunk byte size".into()))?;
        let total = per_chunk
            .checked_mul(self.chunks as u64)
            .ok_or_else(|| FormatError::DimensionOverflow("stream byte size".into()))?;
        if total > MAX_PAYLOAD_BYTES {
            return Err(FormatError::DimensionOverflow(format!(
                "payload of {total} bytes exceeds the {MAX_PAYLOAD_BYTES}-byte limit"
            )));
        }
        Ok(total)
    }

    pub fn file_bytes(&self) -> Result<u64, FormatError> {
        Ok(STREAM_HEADER_LEN as u64 + self.payload_bytes()?)
    }

    fn encode(&self) -> [u8; STREAM_HEADER_LEN] {
        let mut out = [0u8; STREAM_HEADER_LEN];
        out[..4].copy_from_slice(&STREAM_MAGIC);
        let fields = [
            self.version,
            self.chunks,
            self.frames,
            self.height,
            self.width,
            self.dim,
            self.audio_tokens,
            self.audio_dim,
            self.flags,
        ];
        for (i, f) in fields.iter().enumerate() {
            out[4 + 4 * i..8 + 4 * i].copy_from_slice(&f.to_le_bytes());
        }
        out
    }
}

/// Reads and checks the header: magic, then version, then flags and dims.
pub fn read_stream_header<R: Read>(r: &mut R) -> Result<StreamFileHeader> {
    let mut buf = [0u8; STREAM_HEADER_LEN];
    // magic first so a wrong file type is reported as such even when short
    read_exact_or_truncated(r, &mut buf[..4], "stream magic")?;
    let mut h = HeaderReader::new(&buf);
    let magic = h.magic();
    if magic != STREAM_MAGIC {
        return Err(FormatError::BadMagic {
            expected: STREAM_MAGIC,
            found: magic,
        }
        .into());
    }
    read_exact_or_truncated(r, &mut buf[4..], "stream header")?;
    let mut h = HeaderReader::new(&buf[4..]);
    let version = h.u32();
    if version != STREAM_VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "AVTS",
            found: version,
            supported: STREAM_VERSION,
        }
        .into());
    }
    let header = StreamFileHeader {
        version,
        chunks: h.u32(),
        frames: h.u32(),
        height: h.u32(),
        width: h.u32(),
        dim: h.u32(),
        audio_tokens: h.u32(),
        audio_dim: h.u32(),
        flags: h.u32(),
    };
    if header.flags != FLAG_ROW_MAJOR_FHW {
        return Err(FormatError::UnsupportedFlags(header.flags).into());
    }
    let dims = [
        ("T", header.chunks),
        ("F", header.frames),
        ("H", header.height),
        ("W", header.width),
        ("d", header.dim),
        ("L", header.audio_tokens),
        ("d_a", header.audio_dim),
    ];
    if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
        return Err(FormatError::Malformed(format!("header dimension {name} is zero")).into());
    }
    header.payload_bytes()?;
    Ok(header)
}

pub fn read_stream<R: Read>(r: &mut R) -> Result<InterleavedStream> {
    let header = read_stream_header(r)?;
    let (vf, af) = header.chunk_floats()?;
    let (f, h, w) = (
        header.frames as usize,
        header.height as usize,
        header.width as usize,
    );
    let m = f * h * w;
    let mut chunks = Vec::with_capacity((header.chunks as usize).min(1 << 16));
    for t in 0..header.chunks as usize {
        let visual = read_f32s(r, vf, &format!("chunk {t} visual rows"))?;
        let audio = read_f32s(r, af, &format!("chunk {t} audio rows"))?;
        let chunk_err = |e: Error| Error::InvalidChunk {
            index: t,
            message: e.to_string(),
        };
        let visual = VisualChunk::new(f, h, w, Matrix::from_vec(m, header.dim as usize, visual)?)
            .map_err(chunk_err)?;
        let audio = AudioChunk::new(Matrix::from_vec(
            header.audio_tokens as usize,
            header.audio_dim as usize,
            audio,
        )?)
        .map_err(chunk_err)?;
        chunks.push(Chunk { visual, audio });
    }
    expect_eof(r)?;
    InterleavedStream::new(chunks)
}

pub fn write_stream<W: Write>(stream: &InterleavedStream, w: &mut W) -> Result<()> {
    let header = StreamFileHeader::of(stream)?;
    header.payload_bytes()?;
    w.write_all(&header.encode())?;
    for chunk in stream.chunks() {
        write_f32s(w, chunk.visual.embeddings().as_slice())?;
        write_f32s(w, chunk.audio.embeddings().as_slice())?;
    }
    Ok(())
}

pub fn read_stream_file(path: impl AsRef<Path>) -> Result<InterleavedStream> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let header = read_stream_header(&mut r)?;
    let expected = header.file_bytes()?;
    if len < expected {
        return Err(FormatError::Truncated {
            context: "stream payload".into(),
            needed: expected - len,
        }
        .into());
    }
    let mut whole = std::io::Cursor::new(header.encode()).chain(r);
    read_stream(&mut whole)
}

pub fn read_stream_header_file(path: impl AsRef<Path>) -> Result<StreamFileHeader> {
    read_stream_header(&mut BufReader::new(File::open(path)?))
}

pub fn write_stream_file(stream: &InterleavedStream, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_stream(stream, &mut w)?;
    w.flush()?;
    Ok(())
}
