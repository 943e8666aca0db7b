//! Per-chunk token retention: audio-guided semantic pruning, grid-wise
//! spatial detail preservation, and their union.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::types::{SelectionMask, VisualChunk};
use crate::vecops::cosine_sim_flagged;

/// Cosine similarity of each visual token to the audio-predicted semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticScores {
    pub values: Vec<f32>,
    /// Tokens (or the pooled vector) that hit the zero-norm rule.
    pub degenerate: usize,
}

impl SemanticScores {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Local variation of each grid position of a frame-averaged chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialVariationMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl SpatialVariationMap {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// How the semantic branch ranks tokens. Only `Bottom` is the method proper;
/// the others exist for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule")]
pub enum SemanticRule {
    /// Keep the lowest-similarity tokens.
    #[default]
    Bottom,
    /// Keep the highest-similarity tokens.
    Top,
    /// Keep a uniformly random subset of the same size.
    Random { seed: u64 },
}

pub fn semantic_scores(chunk: &VisualChunk, pooled: &[f32]) -> Result<SemanticScores> {
    if pooled.len() != chunk.dim() {
        return Err(Error::DimensionMismatch {
            what: "pooled semantics vs visual dim".into(),
            expected: chunk.dim(),
            actual: pooled.len(),
        });
    }
    let mut degenerate = 0;
    let values = chunk
        .embeddings()
        .iter_rows()
        .map(|row| {
            let (c, flagged) = cosine_sim_flagged(row, pooled);
            degenerate += flagged as usize;
            c
        })
        .collect();
    Ok(SemanticScores { values, degenerate })
}

/// `floor(rho * n)`, clamped to `n`.
#[inline]
pub fn budget(rho: f64, n: usize) -> usize {
    ((rho * n as f64).floor() as usize).min(n)
}

/// The `floor(rho_sem * M)` lowest-scoring token indices, sorted. Ties go to
/// the smaller index.
pub fn select_semantic(scores: &[f32], rho_sem: f64) -> Vec<usize> {
    select_k(scores, budget(rho_sem, scores.len()), |a, b| {
        scores[a].total_cmp(&scores[b]).then(a.cmp(&b))
    })
}

/// Semantic selection under an arbitrary ranking rule. `salt` decorrelates
/// the random rule across chunks.
pub fn select_semantic_by(
    scores: &[f32],
    rho_sem: f64,
    rule: SemanticRule,
    salt: u64,
) -> Vec<usize> {
    let k = budget(rho_sem, scores.len());
    match rule {
        SemanticRule::Bottom => select_semantic(scores, rho_sem),
        SemanticRule::Top => select_k(scores, k, |a, b| {
            scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
        }),
        SemanticRule::Random { seed } => {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut picked = sample(&mut rng, scores.len(), k).into_vec();
            picked.sort_unstable();
            picked
        }
    }
}

fn select_k<F>(scores: &[f32], k: usize, cmp: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> Ordering,
{
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| cmp(a, b));
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Per-position mean over the chunk's frames, as an `(H*W) x d` matrix.
pub fn frame_average(chunk: &VisualChunk) -> Matrix {
    let (f, hw, d) = (chunk.frames(), chunk.height() * chunk.width(), chunk.dim());
    let mut acc = vec![0f64; hw * d];
    for frame in 0..f {
        for p in 0..hw {
            let row = chunk.token(frame * hw + p);
            for (a, &v) in acc[p * d..(p + 1) * d].iter_mut().zip(row) {
                *a += v as f64;
            }
        }
    }
    let inv = 1.0 / f as f64;
    let data = acc.into_iter().map(|a| (a * inv) as f32).collect();
    Matrix::from_vec(hw, d, data).expect("frame average shape")
}

/// Sum of L2 distances from each grid position to its existing 4-neighbors.
pub fn spatial_variation(map: &Matrix, height: usize, width: usize) -> SpatialVariationMap {
    assert_eq!(map.rows(), height * width, "map rows must equal H*W");
    let dist = |p: usize, q: usize| -> f64 {
        map.row(p)
            .iter()
            .zip(map.row(q))
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut values = vec![0f64; height * width];
    for r in 0..height {
        for c in 0..width {
            let p = r * width + c;
            let mut s = 0.0;
            if r > 0 {
                s += dist(p, p - width);
            }
            if r + 1 < height {
                s += dist(p, p + width);
            }
            if c > 0 {
                s += dist(p, p - 1);
            }
            if c + 1 < width {
                s += dist(p, p + 1);
            }
            values[p] = s;
        }
    }
    SpatialVariationMap {
        height,
        width,
        values,
    }
}

/// Cell tiling used by the spatial branch: `(row_stride, col_stride)`, or
/// `None` when the branch is disabled.
pub fn spatial_strides(rho_spa: f64, height: usize, width: usize) -> Option<(usize, usize)> {
    if rho_spa <= 0.0 {
        return None;
    }
    let target = budget(rho_spa, height * width).max(1);
    let g = (target as f64).sqrt().floor().max(1.0) as usize;
    Some(((height / g).max(1), (width / g).max(1)))
}

/// Grid positions `(row, col)` chosen by the spatial branch, one per cell,
/// in row-major cell order.
pub fn spatial_positions(chunk: &VisualChunk, rho_spa: f64) -> Vec<(usize, usize)> {
    let (h, w) = (chunk.height(), chunk.width());
    let Some((dh, dw)) = spatial_strides(rho_spa, h, w) else {
        return Vec::new();
    };
    let variation = spatial_variation(&frame_average(chunk), h, w);
    let mut out = Vec::new();
    for r0 in (0..h).step_by(dh) {
        for c0 in (0..w).step_by(dw) {
            let mut best = (r0, c0);
            for r in r0..(r0 + dh).min(h) {
                for c in c0..(c0 + dw).min(w) {
                    // strict > keeps the first (smallest row-major) maximum
                    if variation.at(r, c) > variation.at(best.0, best.1) {
                        best = (r, c);
                    }
                }
            }
            out.push(best);
        }
    }
    out
}

/// Spatial selection replicated across all frames, as sorted absolute indices.
pub fn select_spatial(chunk: &VisualChunk, rho_spa: f64) -> Vec<usize> {
    let positions = spatial_positions(chunk, rho_spa);
    let mut out: Vec<usize> = (0..chunk.frames())
        .flat_map(|f| positions.iter().map(move |&(r, c)| (f, r, c)))
        .map(|(f, r, c)| chunk.token_index(f, r, c))
        .collect();
    out.sort_unstable();
    out
}

/// Sorted, duplicate-free union of two index sets over `m` tokens.
pub fn union_selection(semantic: &[usize], spatial: &[usize], m: usize) -> Result<SelectionMask> {
    if let Some(&index) = semantic.iter().chain(spatial).find(|&&i| i >= m) {
        return Err(Error::IndexOutOfRange { index, len: m });
    }
    let mut sem = semantic.to_vec();
    sem.sort_unstable();
    sem.dedup();
    let mut spa = spatial.to_vec();
    spa.sort_unstable();
    spa.dedup();

    let mut union = Vec::with_capacity(sem.len() + spa.len());
    let (mut i, mut j) = (0, 0);
    while i < sem.len() || j < spa.len() {
        let next = match (sem.get(i), spa.get(j)) {
            (Some(&a), Some(&b)) if a == b => {
                i += 1;
                j += 1;
                a
            }
            (Some(&a), Some(&b)) if a < b => {
                i += 1;
                a
            }
            (Some(_), Some(&b)) => {
                j += 1;
                b
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (None, Some(&b)) => {
                j += 1;
                b
            }
            (None, None) => unreachable!(),
        };
        union.push(next);
    }
    Ok(SelectionMask {
        semantic: sem,
        spatial: spa,
        union,
    })
}

/// Semantic plus spatial selection of a single chunk from its scores.
pub fn select_chunk(
    chunk: &VisualChunk,
    scores: &[f32],
    rho_sem: f64,
    rho_spa: f64,
    rule: SemanticRule,
    salt: u64,
) -> Result<SelectionMask> {
    let sem = select_semantic_by(scores, rho_sem, rule, salt);
    let spa = select_spatial(chunk, rho_spa);
    union_selection(&sem, &spa, chunk.tokens())
}
