use crate::error::{Error, Result};
use crate::predictor::PredictorWeights;
use crate::tensor::Matrix;
use crate::types::AudioChunk;
use crate::vecops::mean_pool;

const NORM_EPS: f64 = 1e-5;

/// Forward output with the per-layer attention maps (`queries x audio_tokens`).
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub output: Matrix,
    pub attention: Vec<Matrix>,
}

/// Predicts `Q` visual-semantic embeddings from one chunk's audio tokens.
pub fn a2v_forward(audio: &AudioChunk, weights: &PredictorWeights) -> Result<Matrix> {
    a2v_forward_traced(audio, weights).map(|t| t.output)
}

pub fn a2v_forward_traced(audio: &AudioChunk, weights: &PredictorWeights) -> Result<ForwardTrace> {
    weights.validate()?;
    if audio.dim() != weights.dims.audio_dim {
        return Err(Error::DimensionMismatch {
            what: "audio tokens vs predictor w_k/w_v input".into(),
            expected: weights.dims.audio_dim,
            actual: audio.dim(),
        });
    }
    let a = audio.embeddings();
    let scale = 1.0 / (weights.dims.hidden as f64).sqrt();

    let mut x = weights.queries.clone();
    let mut attention = Vec::with_capacity(weights.layers.len());
    for layer in &weights.layers {
        let qn = layer_norm(&x, &layer.pre_gain, &layer.pre_bias);
        let q = qn.matmul(&layer.w_q)?;
        let k = a.matmul(&layer.w_k)?;
        let v = a.matmul(&layer.w_v)?;

        let mut attn = Matrix::zeros(q.rows(), k.rows());
        for i in 0..q.rows() {
            let qi = q.row(i);
            let logits: Vec<f64> = k
                .iter_rows()
                .map(|kj| {
                    let s: f64 = qi.iter().zip(kj).map(|(&a, &b)| a as f64 * b as f64).sum();
                    s * scale
                })
                .collect();
            softmax_into(&logits, attn.row_mut(i));
        }

        let attended = attn.matmul(&v)?;
        let projected = attended.matmul(&layer.w_o)?;
        for (xv, pv) in x.as_mut_slice().iter_mut().zip(projected.as_slice()) {
            *xv += *pv;
        }
        x = layer_norm(&x, &layer.post_gain, &layer.post_bias);
        attention.push(attn);
    }

    let head = &weights.head;
    let mut hidden = x.matmul(&head.w1)?;
    add_bias(&mut hidden, &head.b1);
    hidden
        .as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = v.max(0.0));
    let mut output = hidden.matmul(&head.w2)?;
    add_bias(&mut output, &head.b2);

    Ok(ForwardTrace { output, attention })
}

/// Mean of the `Q` predicted rows: the chunk-level audio-predicted visual semantics.
pub fn predict_semantics(audio: &AudioChunk, weights: &PredictorWeights) -> Result<Vec<f32>> {
    mean_pool(&a2v_forward(audio, weights)?)
}

fn add_bias(m: &mut Matrix, bias: &[f32]) {
    for r in 0..m.rows() {
        for (v, b) in m.row_mut(r).iter_mut().zip(bias) {
            *v += *b;
        }
    }
}

fn layer_norm(x: &Matrix, gain: &[f32], bias: &[f32]) -> Matrix {
    let mut out = x.clone();
    let n = x.cols() as f64;
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + NORM_EPS).sqrt();
        for (((o, &v), &g), &b) in out.row_mut(r).iter_mut().zip(row).zip(gain).zip(bias) {
            *o = ((v as f64 - mean) * inv * g as f64 + b as f64) as f32;
        }
    }
    out
}

/// Max-subtracted softmax.
fn softmax_into(logits: &[f64], out: &mut [f32]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    for (o, e) in out.iter_mut().zip(exps) {
        *o = (e / sum) as f32;
    }
}
