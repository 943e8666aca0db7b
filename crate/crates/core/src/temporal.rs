//! Depth-score segmentation, segment-level shared selection, greedy
//! intra-segment merging, and the causal online filter.
//!
//! Similarities between consecutive chunks are indexed by the later chunk:
//! `s_t = sim(chunk t, chunk t-1)` for `t in 1..T`. Depth scores and
//! boundaries are indexed by chunk, so a boundary at `t` opens a segment
//! starting at chunk `t`.
//!
//! Thresholds are compared in `f32`, the precision of the similarities.

use std::ops::Range;

use crate::error::Result;
use crate::selection::{select_semantic_by, select_spatial, union_selection, SemanticRule};
use crate::tensor::Matrix;
use crate::types::{Chunk, InterleavedStream, SelectionMask};
use crate::vecops::{cosine_sim_flagged, mean_pool};

/// Adjacent-chunk cosine similarities of the mean-pooled visual and audio tokens.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjacentSimilarities {
    /// `visual[t - 1] = s^v_t`, length `T - 1`.
    pub visual: Vec<f32>,
    /// `audio[t - 1] = s^a_t`, length `T - 1`.
    pub audio: Vec<f32>,
    /// Chunk means that hit the zero-norm rule.
    pub degenerate: usize,
}

impl AdjacentSimilarities {
    /// `s^v_t` for `t in 1..T`.
    pub fn visual_at(&self, t: usize) -> f32 {
        self.visual[t - 1]
    }

    pub fn audio_at(&self, t: usize) -> f32 {
        self.audio[t - 1]
    }
}

/// A merge group: consecutive chunks of one segment averaged into one block.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeGroup {
    pub chunks: Range<usize>,
    /// `|mask| x d` averaged rows at the shared mask indices.
    pub rows: Matrix,
}

/// Temporal plan of an offline run.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub segments: Vec<Range<usize>>,
    pub shared_masks: Vec<SelectionMask>,
    pub merge_groups: Vec<Vec<Range<usize>>>,
}

impl SegmentPlan {
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn group_count(&self) -> usize {
        self.merge_groups.iter().map(Vec::len).sum()
    }
}

/// Per-chunk mean visual token and mean audio token.
pub(crate) type ChunkMeans = (Vec<Vec<f32>>, Vec<Vec<f32>>);

pub(crate) fn chunk_means(chunks: &[Chunk]) -> Result<ChunkMeans> {
    let mut visual = Vec::with_capacity(chunks.len());
    let mut audio = Vec::with_capacity(chunks.len());
    for c in chunks {
        visual.push(mean_pool(c.visual.embeddings())?);
        audio.push(mean_pool(c.audio.embeddings())?);
    }
    Ok((visual, audio))
}

pub fn adjacent_similarities(stream: &InterleavedStream) -> AdjacentSimilarities {
    let (visual, audio) = chunk_means(stream.chunks()).expect("validated chunks are non-empty");
    similarities_from_means(&visual, &audio)
}

pub(crate) fn similarities_from_means(
    visual: &[Vec<f32>],
    audio: &[Vec<f32>],
) -> AdjacentSimilarities {
    let mut degenerate = 0;
    let mut pairwise = |means: &[Vec<f32>]| -> Vec<f32> {
        means
            .windows(2)
            .map(|w| {
                let (c, flagged) = cosine_sim_flagged(&w[1], &w[0]);
                degenerate += flagged as usize;
                c
            })
            .collect()
    };
    let v = pairwise(visual);
    let a = pairwise(audio);
    AdjacentSimilarities {
        visual: v,
        audio: a,
        degenerate,
    }
}

/// Per-chunk depth scores (length `T`) from the `T - 1` adjacent similarities.
///
/// `d_t = max_{i<t} s_i + max_{i>t} s_i - 2 s_t`, over `1 <= i <= T-1`, for
/// every `t` where both maxima exist; all other positions are 0.
pub fn depth_scores(sims: &[f32], t: usize) -> Vec<f32> {
    assert_eq!(sims.len() + 1, t.max(1), "expected T-1 similarities");
    let mut out = vec![0f32; t];
    if t < 4 {
        return out;
    }
    let s = |i: usize| sims[i - 1] as f64;
    // suffix[i] = max_{j >= i} s_j
    let mut suffix = vec![f64::NEG_INFINITY; t + 1];
    for i in (1..t).rev() {
        suffix[i] = suffix[i + 1].max(s(i));
    }
    let mut prefix = s(1);
    for (pos, slot) in out.iter_mut().enumerate().take(t - 1).skip(2) {
        *slot = (prefix + suffix[pos + 1] - 2.0 * s(pos)) as f32;
        prefix = prefix.max(s(pos));
    }
    out
}

/// Chunk indices whose visual or audio depth score exceeds `threshold`.
pub fn boundaries(visual_depth: &[f32], audio_depth: &[f32], threshold: f64) -> Vec<usize> {
    assert_eq!(
        visual_depth.len(),
        audio_depth.len(),
        "depth vectors differ in length"
    );
    visual_depth
        .iter()
        .zip(audio_depth)
        .enumerate()
        .filter(|(_, (&v, &a))| v > threshold as f32 || a > threshold as f32)
        .map(|(i, _)| i)
        .collect()
}

/// Maximal boundary-free runs covering `0..t`; each boundary opens a segment.
pub fn make_segments(boundary_set: &[usize], t: usize) -> Vec<Range<usize>> {
    let mut cuts: Vec<usize> = boundary_set
        .iter()
        .copied()
        .filter(|&b| b > 0 && b < t)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for c in cuts {
        out.push(start..c);
        start = c;
    }
    if t > 0 {
        out.push(start..t);
    }
    out
}

/// Consecutive windows of `window` chunks; an ablation baseline.
pub fn fixed_window_segments(t: usize, window: usize) -> Vec<Range<usize>> {
    let window = window.max(1);
    (0..t)
        .step_by(window)
        .map(|s| s..(s + window).min(t))
        .collect()
}

/// Shared mask of a segment: semantic selection on the mean of its chunks'
/// scores, spatial selection of its first chunk, then their union.
pub fn segment_selection(
    chunks: &[Chunk],
    scores: &[&[f32]],
    rho_sem: f64,
    rho_spa: f64,
    rule: SemanticRule,
    salt: u64,
) -> Result<SelectionMask> {
    let first = &chunks[0].visual;
    let m = first.tokens();
    let mut mean = vec![0f64; m];
    for s in scores {
        for (a, &v) in mean.iter_mut().zip(s.iter()) {
            *a += v as f64;
        }
    }
    let inv = 1.0 / scores.len() as f64;
    let mean: Vec<f32> = mean.into_iter().map(|a| (a * inv) as f32).collect();
    let sem = select_semantic_by(&mean, rho_sem, rule, salt);
    let spa = select_spatial(first, rho_spa);
    union_selection(&sem, &spa, m)
}

/// Merge-group ranges (relative to `chunks`) from a greedy pass: a group
/// grows while each consecutive pair has similarity strictly above `tau`.
/// `pair_sims[i]` is the similarity of `chunks[i + 1]` with `chunks[i]`.
pub fn merge_runs(pair_sims: &[f32], n: usize, tau: f64) -> Vec<Range<usize>> {
    assert_eq!(
        pair_sims.len() + 1,
        n.max(1),
        "expected n-1 pair similarities"
    );
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut start = 0;
    for (i, &s) in pair_sims.iter().enumerate() {
        if s <= tau as f32 {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    out.push(start..n);
    out
}

/// Greedy merge of a segment's chunks under a shared mask. Each group's
/// block is the per-index mean of its chunks' retained rows.
pub fn greedy_merge(
    chunks: &[Chunk],
    pair_sims: &[f32],
    tau: f64,
    mask: &SelectionMask,
) -> Vec<MergeGroup> {
    merge_runs(pair_sims, chunks.len(), tau)
        .into_iter()
        .map(|run| {
            let rows = average_rows(&chunks[run.clone()], &mask.union);
            MergeGroup { chunks: run, rows }
        })
        .collect()
}

/// Per-index mean over `chunks` of the rows listed in `indices`.
pub fn average_rows(chunks: &[Chunk], indices: &[usize]) -> Matrix {
    let d = chunks[0].visual.dim();
    let mut acc = vec![0f64; indices.len() * d];
    for c in chunks {
        for (k, &j) in indices.iter().enumerate() {
            for (a, &v) in acc[k * d..(k + 1) * d].iter_mut().zip(c.visual.token(j)) {
                *a += v as f64;
            }
        }
    }
    let inv = 1.0 / chunks.len() as f64;
    let data = acc.into_iter().map(|a| (a * inv) as f32).collect();
    Matrix::from_vec(indices.len(), d, data).expect("average shape")
}

/// Causal filter: each arriving chunk is compared with its surviving
/// predecessor, and the predecessor is dropped when their visual-mean
/// similarity exceeds `threshold`. Returns surviving chunk indices.
pub fn online_filter(stream: &InterleavedStream, threshold: f64) -> Vec<usize> {
    let (visual, _) = chunk_means(stream.chunks()).expect("validated chunks are non-empty");
    online_filter_means(&visual, threshold)
}

pub(crate) fn online_filter_means(visual_means: &[Vec<f32>], threshold: f64) -> Vec<usize> {
    let mut survivors: Vec<usize> = Vec::with_capacity(visual_means.len());
    for (t, mean) in visual_means.iter().enumerate() {
        if let Some(&prev) = survivors.last() {
            if cosine_sim_flagged(mean, &visual_means[prev]).0 > threshold as f32 {
                survivors.pop();
            }
        }
        survivors.push(t);
    }
    survivors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AudioChunk, VisualChunk};

    fn chunk(rows: &[[f32; 2]], audio: [f32; 2]) -> Chunk {
        Chunk {
            visual: VisualChunk::new(1, 1, rows.len(), Matrix::from_rows(rows).unwrap()).unwrap(),
            audio: AudioChunk::new(Matrix::from_rows(&[audio]).unwrap()).unwrap(),
        }
    }

    #[test]
    fn identical_chunks_have_unit_similarity() {
        let c = chunk(&[[1.0, 2.0], [3.0, -1.0]], [0.5, 0.5]);
        let s = InterleavedStream::new(vec![c.clone(), c.clone(), c]).unwrap();
        let sims = adjacent_similarities(&s);
        assert_eq!(sims.visual.len(), 2);
        assert!(sims
            .visual
            .iter()
            .chain(&sims.audio)
            .all(|&v| (v - 1.0).abs() < 1e-6));

        let single = InterleavedStream::new(vec![chunk(&[[1.0, 0.0]], [1.0, 0.0])]).unwrap();
        let sims = adjacent_similarities(&single);
        assert!(sims.visual.is_empty() && sims.audio.is_empty());
    }

    #[test]
    fn hand_set_means() {
        // visual means (1,0), (1,1), (0,1)
        let s = InterleavedStream::new(vec![
            chunk(&[[2.0, 0.0], [0.0, 0.0]], [1.0, 0.0]),
            chunk(&[[1.0, 1.0], [1.0, 1.0]], [0.0, 1.0]),
            chunk(&[[0.0, 3.0], [0.0, 1.0]], [0.0, -1.0]),
        ])
        .unwrap();
        let sims = adjacent_similarities(&s);
        let r = std::f32::consts::FRAC_1_SQRT_2;
        assert!((sims.visual_at(1) - r).abs() < 1e-6);
        assert!((sims.visual_at(2) - r).abs() < 1e-6);
        assert_eq!(sims.audio_at(1), 0.0);
        assert!((sims.audio_at(2) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn depth_examples() {
        assert!(depth_scores(&[0.7; 9], 10).iter().all(|&d| d == 0.0));
        let d = depth_scores(&[0.9, 0.2, 0.9], 4);
        assert_eq!(d.len(), 4);
        assert!((d[2] - 1.4).abs() < 1e-6);
        assert_eq!((d[0], d[1], d[3]), (0.0, 0.0, 0.0));
        assert!(depth_scores(&[], 1).iter().all(|&d| d == 0.0));
        assert!(depth_scores(&[0.1, 0.9], 3).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn boundary_examples() {
        assert!(boundaries(&[0.0; 6], &[0.0; 6], 0.5).is_empty());
        let dv = depth_scores(&[0.9, 0.2, 0.9], 4);
        assert_eq!(boundaries(&dv, &[0.0; 4], 0.5), vec![2]);
        let mut dv = vec![0.0; 6];
        let mut da = vec![0.0; 6];
        dv[2] = 0.8;
        da[4] = 0.51;
        assert_eq!(boundaries(&dv, &da, 0.5), vec![2, 4]);
        // the threshold is strict
        assert!(boundaries(&[0.5], &[0.5], 0.5).is_empty());
    }

    #[test]
    fn segment_examples() {
        assert_eq!(make_segments(&[], 5), vec![0..5]);
        assert_eq!(make_segments(&[3], 6), vec![0..3, 3..6]);
        let all: Vec<usize> = (1..5).collect();
        assert_eq!(
            make_segments(&all, 5),
            (0..5).map(|i| i..i + 1).collect::<Vec<_>>()
        );
        assert_eq!(fixed_window_segments(7, 3), vec![0..3, 3..6, 6..7]);
    }

    #[test]
    fn segment_selection_examples() {
        let a = chunk(&[[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0]);
        let b = chunk(&[[1.0, 0.5], [0.2, 1.0]], [1.0, 0.0]);
        let chunks = vec![a, b];
        let s0 = [0.9f32, 0.1];
        let s1 = [0.1f32, 0.9];
        let mask =
            segment_selection(&chunks, &[&s0, &s1], 0.5, 0.0, SemanticRule::Bottom, 0).unwrap();
        assert_eq!(mask.union, vec![0]);

        let single =
            segment_selection(&chunks[..1], &[&s0], 0.5, 0.0, SemanticRule::Bottom, 0).unwrap();
        assert_eq!(single.semantic, crate::selection::select_semantic(&s0, 0.5));
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_runs(&[0.99, 0.995], 3, 0.98), vec![0..3]);
        assert_eq!(merge_runs(&[0.5, 0.1], 3, 0.98), vec![0..1, 1..2, 2..3]);
        assert_eq!(merge_runs(&[0.99, 0.98, 0.99], 4, 0.98), vec![0..2, 2..4]);
        assert_eq!(merge_runs(&[], 1, 0.98), vec![0..1]);
        assert_eq!(merge_runs(&[-1.0, 1.0], 3, 1.5), vec![0..1, 1..2, 2..3]);
        assert_eq!(merge_runs(&[-1.0, 1.0], 3, -1.5), vec![0..3]);
    }

    #[test]
    fn merge_identical_pair_keeps_rows() {
        let c = chunk(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [1.0, 0.0]);
        let chunks = vec![c.clone(), c.clone()];
        let mask = union_selection(&[0, 2], &[], 3).unwrap();
        let groups = greedy_merge(&chunks, &[1.0], 0.98, &mask);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].rows.as_slice(), &[1.0, 2.0, 5.0, 6.0]);
    }

    #[test]
    fn online_examples() {
        let c = chunk(&[[1.0, 2.0]], [1.0, 0.0]);
        let s = InterleavedStream::new(vec![c.clone(); 5]).unwrap();
        assert_eq!(online_filter(&s, 0.99), vec![4]);

        let a = chunk(&[[1.0, 0.0]], [1.0, 0.0]);
        let b = chunk(&[[0.0, 1.0]], [1.0, 0.0]);
        let s = InterleavedStream::new(vec![a.clone(), b.clone(), a, b]).unwrap();
        assert_eq!(online_filter(&s, 0.99), vec![0, 1, 2, 3]);

        let s = InterleavedStream::new(vec![c]).unwrap();
        assert_eq!(online_filter(&s, 0.99), vec![0]);
    }
}
