//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance suite. Everything here is written with
//! plain loops in f64 and avoids calling the library's numeric code.
#![allow(dead_code, clippy::too_many_arguments, clippy::needless_range_loop)]

use avtc::predictor::PredictorWeights;
use avtc::{AudioChunk, Chunk, InterleavedStream, Matrix, VisualChunk};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-1.0f32..1.0))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn chunk_from(frames: usize, h: usize, w: usize, visual: Matrix, audio: Matrix) -> Chunk {
    Chunk {
        visual: VisualChunk::new(frames, h, w, visual).unwrap(),
        audio: AudioChunk::new(audio).unwrap(),
    }
}

pub fn random_chunk(
    rng: &mut ChaCha8Rng,
    frames: usize,
    h: usize,
    w: usize,
    d: usize,
    l: usize,
    da: usize,
) -> Chunk {
    let v = random_matrix(rng, frames * h * w, d);
    let a = random_matrix(rng, l, da);
    chunk_from(frames, h, w, v, a)
}

pub fn random_stream(
    rng: &mut ChaCha8Rng,
    t: usize,
    frames: usize,
    h: usize,
    w: usize,
    d: usize,
    l: usize,
    da: usize,
) -> InterleavedStream {
    let chunks = (0..t)
        .map(|_| random_chunk(rng, frames, h, w, d, l, da))
        .collect();
    InterleavedStream::new(chunks).unwrap()
}

pub fn identical_stream(chunk: &Chunk, t: usize) -> InterleavedStream {
    InterleavedStream::new(vec![chunk.clone(); t]).unwrap()
}

/// Stream whose chunk means sit at chosen angles: chunk `t` is a random
/// chunk plus a large offset along a direction that follows `dirs[t]`.
pub fn stream_with_offsets(
    rng: &mut ChaCha8Rng,
    dirs: &[Vec<f32>],
    frames: usize,
    h: usize,
    w: usize,
    l: usize,
) -> InterleavedStream {
    let d = dirs[0].len();
    let chunks = dirs
        .iter()
        .map(|dir| {
            let mut v = random_matrix(rng, frames * h * w, d);
            for r in 0..v.rows() {
                for (x, &o) in v.row_mut(r).iter_mut().zip(dir) {
                    *x = 0.05 * *x + o;
                }
            }
            chunk_from(frames, h, w, v, random_matrix(rng, l, d))
        })
        .collect();
    InterleavedStream::new(chunks).unwrap()
}

// ---- numeric references ----

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

pub fn to64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

pub fn rows64(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| to64(m.row(r))).collect()
}

/// `x (n x k) * w (k x m)` with `w` read element by element.
fn matmul(x: &[Vec<f64>], w: &Matrix) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            (0..w.cols())
                .map(|c| {
                    let mut s = 0.0;
                    for k in 0..w.rows() {
                        s += row[k] * w.get(k, c) as f64;
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn layer_norm(x: &[Vec<f64>], gain: &[f32], bias: &[f32]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            let n = row.len() as f64;
            let mut mean = 0.0;
            for v in row {
                mean += v;
            }
            mean /= n;
            let mut var = 0.0;
            for v in row {
                var += (v - mean) * (v - mean);
            }
            var /= n;
            let sd = (var + 1e-5).sqrt();
            (0..row.len())
                .map(|i| (row[i] - mean) / sd * gain[i] as f64 + bias[i] as f64)
                .collect()
        })
        .collect()
}

pub struct RefForward {
    pub output: Vec<Vec<f64>>,
    pub attention: Vec<Vec<Vec<f64>>>,
}

/// Scalar-loop predictor forward: per layer, query pre-norm, single-head
/// scaled dot-product attention over audio, output projection, residual,
/// post-norm; then `relu(x W1 + b1) W2 + b2`.
pub fn reference_forward(audio: &Matrix, w: &PredictorWeights) -> RefForward {
    let a = rows64(audio);
    let h = w.dims.hidden;
    let mut x = rows64(&w.queries);
    let mut attention = Vec::new();
    for layer in &w.layers {
        let qn = layer_norm(&x, &layer.pre_gain, &layer.pre_bias);
        let q = matmul(&qn, &layer.w_q);
        let k = matmul(&a, &layer.w_k);
        let v = matmul(&a, &layer.w_v);
        let mut att = Vec::new();
        let mut attended = Vec::new();
        for qi in &q {
            let logits: Vec<f64> = k
                .iter()
                .map(|kj| {
                    let mut s = 0.0;
                    for c in 0..h {
                        s += qi[c] * kj[c];
                    }
                    s / (h as f64).sqrt()
                })
                .collect();
            let mx = logits.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
            let z: f64 = e.iter().sum();
            let p: Vec<f64> = e.iter().map(|v| v / z).collect();
            let mut out = vec![0.0; h];
            for (j, vj) in v.iter().enumerate() {
                for c in 0..h {
                    out[c] += p[j] * vj[c];
                }
            }
            att.push(p);
            attended.push(out);
        }
        let proj = matmul(&attended, &layer.w_o);
        for (xr, pr) in x.iter_mut().zip(&proj) {
            for c in 0..h {
                xr[c] += pr[c];
            }
        }
        x = layer_norm(&x, &layer.post_gain, &layer.post_bias);
        attention.push(att);
    }
    let mut hid = matmul(&x, &w.head.w1);
    for row in hid.iter_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (*v + w.head.b1[c] as f64).max(0.0);
        }
    }
    let mut out = matmul(&hid, &w.head.w2);
    for row in out.iter_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += w.head.b2[c] as f64;
        }
    }
    RefForward {
        output: out,
        attention,
    }
}

/// `batch[b][t]` vectors.
pub type Batch = Vec<Vec<Vec<f64>>>;

pub fn ref_cos_loss(p: &Batch, q: &Batch) -> f64 {
    let mut sum = 0.0;
    let mut n = 0.0;
    for b in 0..p.len() {
        for t in 0..p[b].len() {
            sum += 1.0 - cosine(&p[b][t], &q[b][t]);
            n += 1.0;
        }
    }
    sum / n
}

/// Direct evaluation of the InfoNCE form with other-video negatives.
pub fn ref_contrastive(p: &Batch, q: &Batch, tau: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0.0;
    for b in 0..p.len() {
        for t in 0..p[b].len() {
            let pos = (cosine(&p[b][t], &q[b][t]) / tau).exp();
            let mut denom = pos;
            for b2 in 0..p.len() {
                if b2 == b {
                    continue;
                }
                for t2 in 0..p[b2].len() {
                    denom += (cosine(&p[b][t], &q[b2][t2]) / tau).exp();
                }
            }
            sum += -(pos / denom).ln();
            n += 1.0;
        }
    }
    sum / n
}

pub fn flatten(batch: &Batch) -> Vec<f32> {
    batch
        .iter()
        .flatten()
        .flatten()
        .map(|&v| v as f32)
        .collect()
}

pub fn random_batch(rng: &mut ChaCha8Rng, b: usize, t: usize, d: usize) -> Batch {
    (0..b)
        .map(|_| {
            (0..t)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0f32..1.0) as f64).collect())
                .collect()
        })
        .collect()
}

/// O(T^2) depth scores: for chunk `t`, the max over every earlier and every
/// later similarity, when both sides are non-empty.
pub fn brute_depth(sims: &[f32], t: usize) -> Vec<f64> {
    // s_i for i in 1..t is sims[i-1]
    let mut out = vec![0.0; t];
    for pos in 1..t {
        let mut left = None::<f64>;
        for i in 1..pos {
            let v = sims[i - 1] as f64;
            left = Some(left.map_or(v, |l: f64| l.max(v)));
        }
        let mut right = None::<f64>;
        for i in pos + 1..t {
            let v = sims[i - 1] as f64;
            right = Some(right.map_or(v, |r: f64| r.max(v)));
        }
        if let (Some(l), Some(r)) = (left, right) {
            out[pos] = l + r - 2.0 * sims[pos - 1] as f64;
        }
    }
    out
}

/// Bottom-k by a full sort on `(score, index)`.
pub fn sorted_bottom_k(scores: &[f32], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    let mut out = idx[..k].to_vec();
    out.sort_unstable();
    out
}

pub fn floor_budget(rho: f64, n: usize) -> usize {
    (rho * n as f64).floor() as usize
}

/// FNV-1a over the little-endian bytes of every value.
pub fn fnv1a(values: impl IntoIterator<Item = f32>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Cosine of every visual token with `pooled`, in f64.
pub fn ref_scores(chunk: &VisualChunk, pooled: &[f64]) -> Vec<f64> {
    (0..chunk.tokens())
        .map(|i| cosine(&to64(chunk.token(i)), pooled))
        .collect()
}

/// Mean of the audio rows, in f64.
pub fn ref_audio_mean(chunk: &Chunk) -> Vec<f64> {
    let rows = rows64(chunk.audio.embeddings());
    let mut out = vec![0.0; rows[0].len()];
    for r in &rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out.iter().map(|v| v / rows.len() as f64).collect()
}

/// Spatial branch written from its description: average the frames, measure
/// each grid position's summed distance to its 4-neighbors, tile the grid into
/// cells of `floor(H/g) x floor(W/g)` with `g = floor(sqrt(max(1, floor(rho*H*W))))`,
/// take the first maximum of each cell, replicate over frames.
pub fn ref_spatial(chunk: &VisualChunk, rho: f64) -> Vec<usize> {
    if rho <= 0.0 {
        return Vec::new();
    }
    let (f, h, w) = (chunk.frames(), chunk.height(), chunk.width());
    let avg: Vec<Vec<f64>> = (0..h * w)
        .map(|p| {
            let mut acc = vec![0.0; chunk.dim()];
            for fr in 0..f {
                for (a, &v) in acc.iter_mut().zip(chunk.token(fr * h * w + p)) {
                    *a += v as f64;
                }
            }
            acc.iter().map(|a| a / f as f64).collect()
        })
        .collect();
    let dist = |p: usize, q: usize| -> f64 {
        avg[p]
            .iter()
            .zip(&avg[q])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let var = |r: usize, c: usize| -> f64 {
        let p = r * w + c;
        let mut s = 0.0;
        if r > 0 {
            s += dist(p, p - w);
        }
        if r + 1 < h {
            s += dist(p, p + w);
        }
        if c > 0 {
            s += dist(p, p - 1);
        }
        if c + 1 < w {
            s += dist(p, p + 1);
        }
        s
    };
    let target = (floor_budget(rho, h * w)).max(1);
    let mut g = 1;
    while (g + 1) * (g + 1) <= target {
        g += 1;
    }
    let (dh, dw) = ((h / g).max(1), (w / g).max(1));
    let mut positions = Vec::new();
    let mut r0 = 0;
    while r0 < h {
        let mut c0 = 0;
        while c0 < w {
            let mut best = (r0, c0, var(r0, c0));
            for r in r0..(r0 + dh).min(h) {
                for c in c0..(c0 + dw).min(w) {
                    let v = var(r, c);
                    if v > best.2 {
                        best = (r, c, v);
                    }
                }
            }
            positions.push((best.0, best.1));
            c0 += dw;
        }
        r0 += dh;
    }
    let mut out: Vec<usize> = (0..f)
        .flat_map(|fr| positions.iter().map(move |&(r, c)| fr * h * w + r * w + c))
        .collect();
    out.sort_unstable();
    out
}

pub fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Whole-chunk mask with the idealized predictor: bottom-k by cosine to the
/// audio mean, unioned with the spatial branch.
pub fn ref_chunk_mask(chunk: &Chunk, rho_sem: f64, rho_spa: f64) -> Vec<usize> {
    let scores: Vec<f32> = ref_scores(&chunk.visual, &ref_audio_mean(chunk))
        .iter()
        .map(|&v| v as f32)
        .collect();
    let sem = sorted_bottom_k(&scores, floor_budget(rho_sem, scores.len()));
    sorted_union(&sem, &ref_spatial(&chunk.visual, rho_spa))
}

/// Stream with every dimension drawn at random from small ranges.
pub fn random_shaped_stream(rng: &mut ChaCha8Rng) -> InterleavedStream {
    let t = rng.gen_range(1..5);
    let (f, h, w) = (
        rng.gen_range(1..3),
        rng.gen_range(1..5),
        rng.gen_range(1..5),
    );
    let (d, l, da) = (
        rng.gen_range(1..6),
        rng.gen_range(1..4),
        rng.gen_range(1..6),
    );
    random_stream(rng, t, f, h, w, d, l, da)
}
