//! The `A2VW` predictor weight format.
//!
//! A 32-byte header (magic `A2VW`, u32 version, u32 `Q, d_h, d_a, d,
//! layers`, one architecture byte, three zero bytes) followed by every
//! tensor of [`PredictorWeights::tensors`] in order, as little-endian `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::binary::{expect_eof, read_exact_or_truncated, read_f32s, write_f32s, HeaderReader};
use crate::error::{FormatError, Result};
use crate::predictor::{tensor_layout, PredictorDims, PredictorWeights};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"A2VW";
pub const WEIGHTS_VERSION: u32 = 1;
pub const WEIGHTS_HEADER_LEN: usize = 32;

/// Single-head cross-attention layers (query pre-norm, residual, post-norm)
/// and a `linear -> relu -> linear` head.
pub const ARCH_PRENORM_XATTN_RELU_HEAD: u8 = 1;

/// Rejects sizes whose tensors cannot be addressed.
const MAX_PARAMETERS: u128 = 1 << 36;

pub fn read_weights<R: Read>(r: &mut R) -> Result<PredictorWeights> {
    let mut buf = [0u8; WEIGHTS_HEADER_LEN];
    read_exact_or_truncated(r, &mut buf[..4], "weights magic")?;
    let magic = HeaderReader::new(&buf).magic();
    if magic != WEIGHTS_MAGIC {
        return Err(FormatError::BadMagic {
            expected: WEIGHTS_MAGIC,
            found: magic,
        }
        .into());
    }
    read_exact_or_truncated(r, &mut buf[4..], "weights header")?;
    let mut h = HeaderReader::new(&buf[4..]);
    let version = h.u32();
    if version != WEIGHTS_VERSION {
        return Err(FormatError::UnsupportedVersion {
            format: "A2VW",
            found: version,
            supported: WEIGHTS_VERSION,
        }
        .into());
    }
    let raw = [h.u32(), h.u32(), h.u32(), h.u32(), h.u32()];
    let arch = h.u8();
    if arch != ARCH_PRENORM_XATTN_RELU_HEAD {
        return Err(FormatError::UnsupportedArchitecture(arch).into());
    }
    if raw.contains(&0) {
        return Err(FormatError::Malformed(format!("zero dimension in {raw:?}")).into());
    }
    let [q, hd, a, d, l] = raw.map(u128::from);
    let total = q * hd + l * (2 * hd * hd + 2 * a * hd + 4 * hd) + hd * hd + hd + hd * d + d;
    if total > MAX_PARAMETERS {
        return Err(FormatError::DimensionOverflow(format!("{total} parameters")).into());
    }

    let [q, hd, a, d, l] = raw.map(|v| v as usize);
    let dims = PredictorDims {
        queries: q,
        hidden: hd,
        audio_dim: a,
        visual_dim: d,
        layers: l,
    };
    // read before allocating so a corrupt header cannot demand memory the file does not back
    let mut payload = Vec::new();
    for (name, len) in tensor_layout(dims) {
        payload.push(read_f32s(r, len as u64, &format!("tensor {name}"))?);
    }
    expect_eof(r)?;
    let mut weights = PredictorWeights::zeros(dims)?;
    for (tensor, values) in weights.tensors_mut().into_iter().zip(payload) {
        tensor.copy_from_slice(&values);
    }
    weights.validate()?;
    Ok(weights)
}

pub fn write_weights<W: Write>(weights: &PredictorWeights, w: &mut W) -> Result<()> {
    weights.validate()?;
    let d = weights.dims;
    let mut header = [0u8; WEIGHTS_HEADER_LEN];
    header[..4].copy_from_slice(&WEIGHTS_MAGIC);
    header[4..8].copy_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    for (i, v) in [d.queries, d.hidden, d.audio_dim, d.visual_dim, d.layers]
        .into_iter()
        .enumerate()
    {
        let v = u32::try_from(v)
            .map_err(|_| FormatError::DimensionOverflow(format!("dimension {v}")))?;
        header[8 + 4 * i..12 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    header[28] = ARCH_PRENORM_XATTN_RELU_HEAD;
    w.write_all(&header)?;
    for (_, t) in weights.tensors() {
        write_f32s(w, t)?;
    }
    Ok(())
}

pub fn read_weights_file(path: impl AsRef<Path>) -> Result<PredictorWeights> {
    read_weights(&mut BufReader::new(File::open(path)?))
}

pub fn write_weights_file(weights: &PredictorWeights, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_weights(weights, &mut w)?;
    w.flush()?;
    Ok(())
}
