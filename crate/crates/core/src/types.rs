//! Domain types shared by all pipeline stages.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Chunk scheduling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Depth-score segmentation with segment-level selection and merging.
    #[default]
    Offline,
    /// Causal predecessor filter followed by per-chunk selection.
    Online,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Mode::Offline),
            "online" => Ok(Mode::Online),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected offline|online)"
            ))),
        }
    }
}

/// Pipeline hyperparameters.
///
/// The JSON form uses exactly these field names; missing fields take their
/// defaults and unknown fields are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Fraction of tokens kept by the semantic branch (lowest audio similarity).
    pub rho_sem: f64,
    /// Fraction of grid positions targeted by the spatial branch.
    pub rho_spa: f64,
    /// Adjacent-chunk visual similarity above which chunks merge.
    pub tau_merge: f64,
    /// Depth score above which a chunk opens a new segment.
    pub depth_threshold: f64,
    /// Predecessor similarity above which the online filter drops a chunk.
    pub online_threshold: f64,
    pub mode: Mode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            rho_sem: 0.5,
            rho_spa: 0.1,
            tau_merge: 0.98,
            depth_threshold: 0.5,
            online_threshold: 0.99,
            mode: Mode::Offline,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_sem", self.rho_sem), ("rho_spa", self.rho_spa)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} not in [0, 1]")));
            }
        }
        for (name, v) in [
            ("tau_merge", self.tau_merge),
            ("depth_threshold", self.depth_threshold),
            ("online_threshold", self.online_threshold),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} = {v} is not finite")));
            }
        }
        Ok(())
    }
}

/// One chunk's visual tokens: `F` frames of an `H x W` grid, rows ordered
/// row-major over `(frame, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualChunk {
    frames: usize,
    height: usize,
    width: usize,
    embeddings: Matrix,
}

impl VisualChunk {
    pub fn new(frames: usize, height: usize, width: usize, embeddings: Matrix) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "visual grid {frames}x{height}x{width} has an empty axis"
            )));
        }
        let m = frames * height * width;
        if embeddings.rows() != m {
            return Err(Error::DimensionMismatch {
                what: "visual token count (F*H*W)".into(),
                expected: m,
                actual: embeddings.rows(),
            });
        }
        if embeddings.cols() == 0 {
            return Err(Error::InvalidConfig("visual embedding dim is 0".into()));
        }
        if !embeddings.is_finite() {
            return Err(Error::InvalidConfig("non-finite visual embedding".into()));
        }
        Ok(Self {
            frames,
            height,
            width,
            embeddings,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of visual tokens `M = F * H * W`.
    pub fn tokens(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    #[inline]
    pub fn token(&self, index: usize) -> &[f32] {
        self.embeddings.row(index)
    }

    /// Absolute token index of grid position `(row, col)` in `frame`.
    #[inline]
    pub fn token_index(&self, frame: usize, row: usize, col: usize) -> usize {
        (frame * self.height + row) * self.width + col
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk {
    embeddings: Matrix,
}

impl AudioChunk {
    pub fn new(embeddings: Matrix) -> Result<Self> {
        if embeddings.rows() == 0 {
            return Err(Error::InvalidConfig("audio chunk has no tokens".into()));
        }
        if embeddings.cols() == 0 {
            return Err(Error::InvalidConfig("audio embedding dim is 0".into()));
        }
        if !embeddings.is_finite() {
            return Err(Error::InvalidConfig("non-finite audio embedding".into()));
        }
        Ok(Self { embeddings })
    }

    pub fn tokens(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub visual: VisualChunk,
    pub audio: AudioChunk,
}

/// Shape shared by every chunk of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamShape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub audio_tokens: usize,
    pub audio_dim: usize,
}

impl StreamShape {
    pub fn visual_tokens(&self) -> usize {
        self.frames * self.height * self.width
    }

    fn of(chunk: &Chunk) -> Self {
        Self {
            frames: chunk.visual.frames(),
            height: chunk.visual.height(),
            width: chunk.visual.width(),
            dim: chunk.visual.dim(),
            audio_tokens: chunk.audio.tokens(),
            audio_dim: chunk.audio.dim(),
        }
    }
}

/// Ordered `(visual, audio)` chunk pairs with a uniform shape.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedStream {
    chunks: Vec<Chunk>,
    shape: StreamShape,
}

impl InterleavedStream {
    pub fn new(chunks: Vec<Chunk>) -> Result<Self> {
        let first = chunks.first().ok_or(Error::EmptyStream)?;
        let shape = StreamShape::of(first);
        for (index, chunk) in chunks.iter().enumerate().skip(1) {
            let s = StreamShape::of(chunk);
            if s != shape {
                return Err(Error::InvalidChunk {
                    index,
                    message: format!("shape {s:?} differs from chunk 0 shape {shape:?}"),
                });
            }
        }
        Ok(Self { chunks, shape })
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn shape(&self) -> StreamShape {
        self.shape
    }

    pub fn into_chunks(self) -> Vec<Chunk> {
        self.chunks
    }
}

/// Retained token indices of one chunk (or a shared segment mask).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionMask {
    pub semantic: Vec<usize>,
    pub spatial: Vec<usize>,
    pub union: Vec<usize>,
}

impl SelectionMask {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.union.len()
    }

    pub fn is_empty(&self) -> bool {
        self.union.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.union.binary_search(&index).is_ok()
    }
}

/// Retained visual rows of one chunk, or the average over a merge group.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualBlock {
    /// Originating chunk indices (a single chunk unless merged).
    pub chunks: Range<usize>,
    /// Token indices kept, sorted; row `i` of `rows` is token `indices[i]`.
    pub indices: Vec<usize>,
    pub rows: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Visual(VisualBlock),
    Audio { chunk: usize, audio: AudioChunk },
}

/// Pruned and merged interleaved output. Audio entries keep their original
/// order and content; each visual block sits immediately before the audio of
/// its first originating chunk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompressedStream {
    pub entries: Vec<Entry>,
}

impl CompressedStream {
    pub fn visual_blocks(&self) -> impl Iterator<Item = &VisualBlock> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Visual(b) => Some(b),
            Entry::Audio { .. } => None,
        })
    }

    pub fn audio_entries(&self) -> impl Iterator<Item = (usize, &AudioChunk)> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Audio { chunk, audio } => Some((*chunk, audio)),
            Entry::Visual(_) => None,
        })
    }

    pub fn retained_video_tokens(&self) -> usize {
        self.visual_blocks().map(|b| b.rows.rows()).sum()
    }

    pub fn bit_eq(&self, other: &CompressedStream) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|pair| match pair {
                    (Entry::Visual(a), Entry::Visual(b)) => {
                        a.chunks == b.chunks && a.indices == b.indices && a.rows.bit_eq(&b.rows)
                    }
                    (
                        Entry::Audio {
                            chunk: ca,
                            audio: a,
                        },
                        Entry::Audio {
                            chunk: cb,
                            audio: b,
                        },
                    ) => ca == cb && a.embeddings().bit_eq(b.embeddings()),
                    _ => false,
                })
    }
}

/// Compression accounting for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub original_video_tokens: usize,
    pub retained_video_tokens: usize,
    pub original_audio_tokens: usize,
    /// `1 - retained / original` over video tokens.
    pub video_compression: f64,
    /// Same ratio with audio tokens (always fully retained) in both terms.
    pub total_compression: f64,
    /// Number of temporal segments `K_s`; 0 in online mode.
    pub segments: usize,
    /// Chunks kept by the online filter; every chunk in offline mode.
    pub survivors: usize,
    /// Number of merge groups emitted as visual blocks.
    pub merge_groups: usize,
    /// Number of chunks folded into a preceding chunk's group.
    pub merges: usize,
    /// Zero-norm vectors encountered while scoring.
    pub warnings: usize,
}
