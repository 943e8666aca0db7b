//! Audio-to-visual semantic predictor: learnable queries cross-attending to a
//! chunk's audio tokens, followed by a two-layer head into the visual space.

mod forward;
mod loss;
mod weights;

pub use forward::{a2v_forward, a2v_forward_traced, predict_semantics, ForwardTrace};
pub use loss::{contrastive_loss, cos_loss, total_loss, LossConfig, PooledBatch};
pub use weights::{
    expected_lengths, init_weights, tensor_layout, tensor_names, HeadWeights, LayerWeights,
    PredictorDims, PredictorWeights,
};

use crate::error::{Error, Result};
use crate::types::AudioChunk;
use crate::vecops::mean_pool;

/// Anything that maps a chunk's audio tokens to a pooled visual-semantic vector.
pub trait SemanticPredictor: Sync {
    fn predict(&self, audio: &AudioChunk) -> Result<Vec<f32>>;

    /// Rejects streams whose audio or visual width the predictor cannot serve.
    fn check_dims(&self, audio_dim: usize, visual_dim: usize) -> Result<()>;
}

impl SemanticPredictor for PredictorWeights {
    fn predict(&self, audio: &AudioChunk) -> Result<Vec<f32>> {
        predict_semantics(audio, self)
    }

    fn check_dims(&self, audio_dim: usize, visual_dim: usize) -> Result<()> {
        self.validate()?;
        if audio_dim != self.dims.audio_dim {
            return Err(Error::DimensionMismatch {
                what: "stream audio dim vs predictor audio_dim".into(),
                expected: self.dims.audio_dim,
                actual: audio_dim,
            });
        }
        if visual_dim != self.dims.visual_dim {
            return Err(Error::DimensionMismatch {
                what: "stream visual dim vs predictor visual_dim".into(),
                expected: self.dims.visual_dim,
                actual: visual_dim,
            });
        }
        Ok(())
    }
}

/// Idealized predictor that returns the mean audio token. Only meaningful
/// when audio and visual tokens share an embedding space, as in synthetic
/// fixtures; it isolates selection logic from predictor quality.
#[derive(Debug, Clone, Copy, Default)]
pub struct AudioMeanPredictor;

impl SemanticPredictor for AudioMeanPredictor {
    fn predict(&self, audio: &AudioChunk) -> Result<Vec<f32>> {
        mean_pool(audio.embeddings())
    }

    fn check_dims(&self, audio_dim: usize, visual_dim: usize) -> Result<()> {
        if audio_dim != visual_dim {
            return Err(Error::DimensionMismatch {
                what: "audio-mean predictor needs audio dim == visual dim".into(),
                expected: visual_dim,
                actual: audio_dim,
            });
        }
        Ok(())
    }
}
