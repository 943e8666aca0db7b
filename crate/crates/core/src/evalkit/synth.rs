//! Synthetic interleaved streams with planted ground truth.
//!
//! Each chunk has a base direction `a_t`. Audio tokens scatter around it and
//! their mean direction `m_t` anchors the visual tokens of the chunk:
//!
//! - aligned tokens are `m_t` plus a perpendicular offset of norm at most 0.45
//!   (cosine with `m_t` at least 0.91); at zero noise they equal `m_t`,
//! - other tokens have cosine drawn uniformly from [0.2, 0.6] with `m_t`,
//! - markers are unit vectors orthogonal to `m_t`.
//!
//! Whether a grid position is aligned is drawn once per stream. At a scene
//! change `a_t` jumps to a direction orthogonal to `a_{t-1}`; a static chunk
//! keeps `a_{t-1}`; any other chunk rotates it by `atan(drift)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::types::{AudioChunk, Chunk, InterleavedStream, VisualChunk};

/// Cap on the perpendicular offset of aligned tokens.
const MAX_ALIGNED_OFFSET: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub chunks: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Shared visual and audio width.
    pub dim: usize,
    pub audio_tokens: usize,
    /// Probability that a non-marker grid position is audio-aligned.
    pub aligned_fraction: f64,
    /// Token indices (within a chunk) planted as markers in every chunk.
    pub marker_positions: Vec<usize>,
    /// Chunks whose base direction is rotated by 90 degrees.
    pub scene_changes: Vec<usize>,
    pub noise_scale: f64,
    /// Tangent of the per-chunk rotation of the base direction.
    pub drift: f64,
    /// Fraction of eligible chunks (not 0, not a scene change) that repeat
    /// the previous base direction.
    pub static_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            chunks: 8,
            frames: 1,
            height: 4,
            width: 4,
            dim: 16,
            audio_tokens: 4,
            aligned_fraction: 0.5,
            marker_positions: Vec::new(),
            scene_changes: Vec::new(),
            noise_scale: 0.05,
            drift: 0.0,
            static_fraction: 0.0,
        }
    }
}

impl SynthSpec {
    /// The desk-scale benchmark stream: 32 chunks of two 14x14 frames, two
    /// scene cuts, steady drift and a quarter of chunks static.
    pub fn default_benchmark(seed: u64) -> Self {
        Self {
            seed,
            chunks: 32,
            frames: 2,
            height: 14,
            width: 14,
            dim: 64,
            audio_tokens: 25,
            aligned_fraction: 0.6,
            marker_positions: vec![3, 50, 101, 150, 222, 260, 300, 371],
            scene_changes: vec![11, 23],
            noise_scale: 0.05,
            drift: 0.35,
            static_fraction: 0.25,
        }
    }

    pub fn visual_tokens(&self) -> usize {
        self.frames * self.height * self.width
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        for (name, v) in [
            ("chunks", self.chunks),
            ("frames", self.frames),
            ("height", self.height),
            ("width", self.width),
            ("audio_tokens", self.audio_tokens),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.dim < 2 {
            return bad(format!("dim must be at least 2, got {}", self.dim));
        }
        let m = self
            .frames
            .checked_mul(self.height)
            .and_then(|v| v.checked_mul(self.width))
            .ok_or_else(|| Error::InfeasibleSpec("visual token count overflows".into()))?;
        if self.marker_positions.len() > m {
            return bad(format!(
                "{} markers exceed {m} tokens",
                self.marker_positions.len()
            ));
        }
        let mut seen = vec![false; m];
        for &p in &self.marker_positions {
            if p >= m {
                return bad(format!("marker position {p} out of range for {m} tokens"));
            }
            if std::mem::replace(&mut seen[p], true) {
                return bad(format!("duplicate marker position {p}"));
            }
        }
        if let Some(&c) = self
            .scene_changes
            .iter()
            .find(|&&c| c == 0 || c >= self.chunks)
        {
            return bad(format!("scene change {c} not in 1..{}", self.chunks));
        }
        for (name, v) in [
            ("aligned_fraction", self.aligned_fraction),
            ("static_fraction", self.static_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} not in [0, 1]"));
            }
        }
        for (name, v) in [("noise_scale", self.noise_scale), ("drift", self.drift)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `(chunk, token)` of every planted marker.
    pub markers: Vec<(usize, usize)>,
    pub scene_changes: Vec<usize>,
    pub static_chunks: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Aligned,
    Other,
    Marker,
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// Removes the component along unit vector `u`.
fn reject(v: &mut [f64], u: &[f64]) {
    let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let g = gaussian(rng, d);
        let n = norm(&g);
        if n > 1e-6 {
            return scaled(&g, 1.0 / n);
        }
    }
}

/// Random unit vector orthogonal to unit vector `u`. Needs `d >= 2`.
fn random_orthogonal(rng: &mut ChaCha8Rng, u: &[f64]) -> Vec<f64> {
    loop {
        let mut g = gaussian(rng, u.len());
        reject(&mut g, u);
        // second pass removes the residue left by cancellation
        reject(&mut g, u);
        let n = norm(&g);
        if n > 1e-6 {
            return scaled(&g, 1.0 / n);
        }
    }
}

fn to_f32(v: &[f64]) -> impl Iterator<Item = f32> + '_ {
    v.iter().map(|&x| x as f32)
}

/// Generates a stream and its ground truth. Identical specs give
/// bit-identical output.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<(InterleavedStream, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d, l, m) = (spec.dim, spec.audio_tokens, spec.visual_tokens());

    let mut kinds: Vec<Kind> = (0..m)
        .map(|_| {
            if rng.gen_bool(spec.aligned_fraction) {
                Kind::Aligned
            } else {
                Kind::Other
            }
        })
        .collect();
    for &p in &spec.marker_positions {
        kinds[p] = Kind::Marker;
    }

    let mut scene_changes = spec.scene_changes.clone();
    scene_changes.sort_unstable();
    scene_changes.dedup();
    let eligible: Vec<usize> = (1..spec.chunks)
        .filter(|t| scene_changes.binary_search(t).is_err())
        .collect();
    let count = (spec.static_fraction * eligible.len() as f64).round() as usize;
    let mut static_chunks: Vec<usize> =
        eligible.choose_multiple(&mut rng, count).copied().collect();
    static_chunks.sort_unstable();

    let mut base = random_unit(&mut rng, d);
    let mut chunks = Vec::with_capacity(spec.chunks);
    for t in 0..spec.chunks {
        if t > 0 {
            if scene_changes.binary_search(&t).is_ok() {
                base = random_orthogonal(&mut rng, &base);
            } else if static_chunks.binary_search(&t).is_err() && spec.drift > 0.0 {
                let r = random_orthogonal(&mut rng, &base);
                let mut next: Vec<f64> = base
                    .iter()
                    .zip(&r)
                    .map(|(b, r)| b + spec.drift * r)
                    .collect();
                let n = norm(&next);
                next.iter_mut().for_each(|x| *x /= n);
                base = next;
            }
        }

        let noise = spec.noise_scale / (d as f64).sqrt();
        let mut audio = Vec::with_capacity(l * d);
        for _ in 0..l {
            let g = gaussian(&mut rng, d);
            audio.extend(base.iter().zip(&g).map(|(b, g)| (b + noise * g) as f32));
        }
        // anchor on the mean of the stored audio so markers stay orthogonal
        // to exactly what an audio-mean predictor sees
        let mut anchor = vec![0.0f64; d];
        for row in audio.chunks_exact(d) {
            anchor
                .iter_mut()
                .zip(row)
                .for_each(|(a, &x)| *a += x as f64);
        }
        let n = norm(&anchor);
        let anchor = if n > 0.0 {
            scaled(&anchor, 1.0 / n)
        } else {
            base.clone()
        };

        let mut visual = Vec::with_capacity(m * d);
        for &kind in &kinds {
            let token = match kind {
                Kind::Aligned => {
                    let mut off = scaled(&gaussian(&mut rng, d), noise);
                    reject(&mut off, &anchor);
                    let n = norm(&off);
                    if n > MAX_ALIGNED_OFFSET {
                        off.iter_mut().for_each(|x| *x *= MAX_ALIGNED_OFFSET / n);
                    }
                    anchor.iter().zip(&off).map(|(a, o)| a + o).collect()
                }
                Kind::Other => {
                    let c: f64 = rng.gen_range(0.2..=0.6);
                    let u = random_orthogonal(&mut rng, &anchor);
                    let s = (1.0 - c * c).sqrt();
                    anchor.iter().zip(&u).map(|(a, u)| c * a + s * u).collect()
                }
                Kind::Marker => random_orthogonal(&mut rng, &anchor),
            };
            visual.extend(to_f32(&token));
        }

        chunks.push(Chunk {
            visual: VisualChunk::new(
                spec.frames,
                spec.height,
                spec.width,
                Matrix::from_vec(m, d, visual)?,
            )?,
            audio: AudioChunk::new(Matrix::from_vec(l, d, audio)?)?,
        });
    }

    let mut positions = spec.marker_positions.clone();
    positions.sort_unstable();
    let markers = (0..spec.chunks)
        .flat_map(|t| positions.iter().map(move |&p| (t, p)))
        .collect();
    let truth = GroundTruth {
        markers,
        scene_changes,
        static_chunks,
    };
    Ok((InterleavedStream::new(chunks)?, truth))
}
