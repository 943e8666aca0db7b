//! Training objectives of the predictor, evaluated on pooled embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::cosine64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda_cos: f64,
    pub temperature: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_cos: 5.0,
            temperature: 0.07,
        }
    }
}

/// `B x T x d` pooled embeddings: one vector per (video, chunk).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledBatch {
    batch: usize,
    chunks: usize,
    dim: usize,
    data: Vec<f32>,
}

impl PooledBatch {
    pub fn new(batch: usize, chunks: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        let expected = batch * chunks * dim;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                what: format!("pooled batch {batch}x{chunks}x{dim}"),
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            batch,
            chunks,
            dim,
            data,
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, b: usize, t: usize) -> &[f32] {
        let start = (b * self.chunks + t) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn negated(&self) -> Self {
        Self {
            data: self.data.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

fn check_pair(preds: &PooledBatch, targets: &PooledBatch) -> Result<()> {
    let shape = |p: &PooledBatch| (p.batch, p.chunks, p.dim);
    if shape(preds) != shape(targets) {
        return Err(Error::DimensionMismatch {
            what: format!(
                "targets shape {:?} vs preds shape {:?}",
                shape(targets),
                shape(preds)
            ),
            expected: preds.data.len(),
            actual: targets.data.len(),
        });
    }
    if preds.batch * preds.chunks == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(())
}

/// Mean of `1 - cos(pred, target)` over every (video, chunk).
pub fn cos_loss(preds: &PooledBatch, targets: &PooledBatch) -> Result<f64> {
    check_pair(preds, targets)?;
    let mut sum = 0.0;
    for b in 0..preds.batch {
        for t in 0..preds.chunks {
            sum += 1.0 - cosine64(preds.get(b, t), targets.get(b, t)).0;
        }
    }
    Ok(sum / (preds.batch * preds.chunks) as f64)
}

/// InfoNCE where the negatives of `(b, t)` are all chunks of every other
/// video in the batch; other chunks of video `b` are excluded.
pub fn contrastive_loss(
    preds: &PooledBatch,
    targets: &PooledBatch,
    cfg: &LossConfig,
) -> Result<f64> {
    if cfg.temperature.is_nan() || cfg.temperature <= 0.0 {
        return Err(Error::NonPositiveTemperature(cfg.temperature));
    }
    check_pair(preds, targets)?;
    let tau = cfg.temperature;
    let mut sum = 0.0;
    let mut shifted = Vec::with_capacity((preds.batch - 1) * preds.chunks);
    for b in 0..preds.batch {
        for t in 0..preds.chunks {
            let p = preds.get(b, t);
            let pos = cosine64(p, targets.get(b, t)).0;
            shifted.clear();
            for nb in (0..targets.batch).filter(|&nb| nb != b) {
                for nt in 0..targets.chunks {
                    shifted.push((cosine64(p, targets.get(nb, nt)).0 - pos) / tau);
                }
            }
            sum += softplus_lse(&shifted);
        }
    }
    Ok(sum / (preds.batch * preds.chunks) as f64)
}

/// `log(1 + sum(exp(z)))`, which is `-log softmax` of the positive when `z`
/// holds negative logits minus the positive logit. Zero for empty `z`.
fn softplus_lse(z: &[f64]) -> f64 {
    if z.is_empty() {
        return 0.0;
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    if lse > 0.0 {
        lse + (-lse).exp().ln_1p()
    } else {
        lse.exp().ln_1p()
    }
}

/// `lambda_cos * cos_loss + contrastive_loss`.
pub fn total_loss(preds: &PooledBatch, targets: &PooledBatch, cfg: &LossConfig) -> Result<f64> {
    let ctr = contrastive_loss(preds, targets, cfg)?;
    Ok(cfg.lambda_cos * cos_loss(preds, targets)? + ctr)
}
