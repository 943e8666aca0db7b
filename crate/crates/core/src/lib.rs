//! Audio-guided compression of interleaved audio-visual token streams.
//!
//! Visual tokens whose content is predictable from the accompanying audio are
//! pruned, a grid-wise spatial branch keeps localized detail, and temporally
//! redundant chunks are merged inside depth-score segments. Audio tokens pass
//! through untouched.
//!
//! ```no_run
//! use avtc::{compress, io, PipelineConfig};
//! # fn main() -> avtc::Result<()> {
//! let stream = io::read_stream_file("clip.avts")?;
//! let weights = io::read_weights_file("a2v.a2vw")?;
//! let result = compress(&stream, &weights, &PipelineConfig::default())?;
//! println!("video compression {:.1}%", 100.0 * result.stats.video_compression);
//! # Ok(()) }
//! ```

pub mod error;
pub mod evalkit;
pub mod io;
pub mod pipeline;
pub mod predictor;
pub mod selection;
pub mod temporal;
pub mod tensor;
pub mod types;
pub mod vecops;

pub use error::{Error, FormatError, Result};
pub use pipeline::{compress, compress_with, compression_ratio, CompressOptions, PipelineResult};
pub use tensor::Matrix;
pub use types::{
    AudioChunk, Chunk, CompressedStream, Entry, InterleavedStream, Mode, PipelineConfig,
    SelectionMask, Stats, StreamShape, VisualBlock, VisualChunk,
};
