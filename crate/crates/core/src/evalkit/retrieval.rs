//! Cross-modal retrieval metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::vecops::cosine64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub queries: usize,
    pub recall_at_1: f64,
    pub recall_at_5: f64,
    /// Mean of the two middle ranks when the query count is even.
    pub median_rank: f64,
    /// 1-based rank of the true candidate for each query.
    pub ranks: Vec<usize>,
}

/// Rank of candidate `truth` for one query under descending cosine; ties go
/// to the smaller candidate index.
fn rank_of(query: &[f32], candidates: &Matrix, truth: usize) -> usize {
    let target = cosine64(query, candidates.row(truth)).0;
    1 + candidates
        .iter_rows()
        .enumerate()
        .filter(|&(j, row)| {
            let s = cosine64(query, row).0;
            s > target || (s == target && j < truth)
        })
        .count()
}

pub fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Row `i` of `audio` is the query whose true candidate is row `i` of `video`.
pub fn retrieval_eval(audio: &Matrix, video: &Matrix) -> Result<RetrievalReport> {
    if audio.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    if audio.rows() != video.rows() {
        return Err(Error::DimensionMismatch {
            what: "retrieval pair count".into(),
            expected: audio.rows(),
            actual: video.rows(),
        });
    }
    if audio.cols() != video.cols() {
        return Err(Error::DimensionMismatch {
            what: "retrieval embedding width".into(),
            expected: audio.cols(),
            actual: video.cols(),
        });
    }
    let n = audio.rows();
    let ranks: Vec<usize> = (0..n).map(|i| rank_of(audio.row(i), video, i)).collect();
    let recall = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    Ok(RetrievalReport {
        queries: n,
        recall_at_1: recall(1),
        recall_at_5: recall(5),
        median_rank: median(&sorted),
        ranks,
    })
}
