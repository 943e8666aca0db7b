use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Architecture sizes of the audio-to-visual predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorDims {
    /// Learnable query count `Q`.
    pub queries: usize,
    /// Hidden width of queries and attention projections.
    pub hidden: usize,
    /// Audio token width.
    pub audio_dim: usize,
    /// Visual embedding width produced by the head.
    pub visual_dim: usize,
    /// Number of cross-attention layers.
    pub layers: usize,
}

impl PredictorDims {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("queries", self.queries),
            ("hidden", self.hidden),
            ("audio_dim", self.audio_dim),
            ("visual_dim", self.visual_dim),
            ("layers", self.layers),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::InvalidWeights(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

impl Default for PredictorDims {
    fn default() -> Self {
        Self {
            queries: 128,
            hidden: 256,
            audio_dim: 1280,
            visual_dim: 3584,
            layers: 2,
        }
    }
}

/// One cross-attention layer: pre-norm on the queries, single-head attention
/// over the audio tokens, residual add, post-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub pre_gain: Vec<f32>,
    pub pre_bias: Vec<f32>,
    /// `hidden x hidden`
    pub w_q: Matrix,
    /// `audio_dim x hidden`
    pub w_k: Matrix,
    /// `audio_dim x hidden`
    pub w_v: Matrix,
    /// `hidden x hidden`
    pub w_o: Matrix,
    pub post_gain: Vec<f32>,
    pub post_bias: Vec<f32>,
}

/// `linear -> relu -> linear`, mapping `hidden` to `visual_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    /// `hidden x hidden`
    pub w1: Matrix,
    pub b1: Vec<f32>,
    /// `hidden x visual_dim`
    pub w2: Matrix,
    pub b2: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorWeights {
    pub dims: PredictorDims,
    /// `queries x hidden`
    pub queries: Matrix,
    pub layers: Vec<LayerWeights>,
    pub head: HeadWeights,
}

impl PredictorWeights {
    /// All-zero weights with unit norm gains.
    pub fn zeros(dims: PredictorDims) -> Result<Self> {
        dims.validate()?;
        let h = dims.hidden;
        let layer = LayerWeights {
            pre_gain: vec![1.0; h],
            pre_bias: vec![0.0; h],
            w_q: Matrix::zeros(h, h),
            w_k: Matrix::zeros(dims.audio_dim, h),
            w_v: Matrix::zeros(dims.audio_dim, h),
            w_o: Matrix::zeros(h, h),
            post_gain: vec![1.0; h],
            post_bias: vec![0.0; h],
        };
        Ok(Self {
            dims,
            queries: Matrix::zeros(dims.queries, h),
            layers: vec![layer; dims.layers],
            head: HeadWeights {
                w1: Matrix::zeros(h, h),
                b1: vec![0.0; h],
                w2: Matrix::zeros(h, dims.visual_dim),
                b2: vec![0.0; dims.visual_dim],
            },
        })
    }

    /// Checks every tensor against `dims`.
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.layers.len() != self.dims.layers {
            return Err(Error::InvalidWeights(format!(
                "expected {} layers, found {}",
                self.dims.layers,
                self.layers.len()
            )));
        }
        let expected = expected_lengths(&self.dims);
        let tensors = self.tensors();
        if tensors.len() != expected.len() {
            return Err(Error::InvalidWeights(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, got), want) in tensors.into_iter().zip(expected) {
            if got.len() != want {
                return Err(Error::InvalidWeights(format!(
                    "tensor {name}: expected {want} values, found {}",
                    got.len()
                )));
            }
            if got.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidWeights(format!(
                    "tensor {name} is not finite"
                )));
            }
        }
        let (h, a) = (self.dims.hidden, self.dims.audio_dim);
        let mut shapes = vec![
            ("queries".to_string(), &self.queries, self.dims.queries, h),
            ("head.w1".to_string(), &self.head.w1, h, h),
            (
                "head.w2".to_string(),
                &self.head.w2,
                h,
                self.dims.visual_dim,
            ),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            shapes.push((format!("layers.{i}.w_q"), &l.w_q, h, h));
            shapes.push((format!("layers.{i}.w_k"), &l.w_k, a, h));
            shapes.push((format!("layers.{i}.w_v"), &l.w_v, a, h));
            shapes.push((format!("layers.{i}.w_o"), &l.w_o, h, h));
        }
        for (name, m, r, c) in shapes {
            if m.rows() != r || m.cols() != c {
                return Err(Error::InvalidWeights(format!(
                    "tensor {name}: expected {r}x{c}, found {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }

    /// Tensors in serialization order, named as in [`tensor_names`].
    pub fn tensors(&self) -> Vec<(String, &[f32])> {
        let mut slices: Vec<&[f32]> = vec![self.queries.as_slice()];
        for l in &self.layers {
            slices.extend([
                l.pre_gain.as_slice(),
                &l.pre_bias,
                l.w_q.as_slice(),
                l.w_k.as_slice(),
                l.w_v.as_slice(),
                l.w_o.as_slice(),
                &l.post_gain,
                &l.post_bias,
            ]);
        }
        slices.extend([
            self.head.w1.as_slice(),
            &self.head.b1,
            self.head.w2.as_slice(),
            &self.head.b2,
        ]);
        tensor_names(self.layers.len())
            .into_iter()
            .zip(slices)
            .collect()
    }

    /// Mutable tensors in serialization order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out: Vec<&mut [f32]> = vec![self.queries.as_mut_slice()];
        for l in &mut self.layers {
            out.push(&mut l.pre_gain);
            out.push(&mut l.pre_bias);
            out.push(l.w_q.as_mut_slice());
            out.push(l.w_k.as_mut_slice());
            out.push(l.w_v.as_mut_slice());
            out.push(l.w_o.as_mut_slice());
            out.push(&mut l.post_gain);
            out.push(&mut l.post_bias);
        }
        out.push(self.head.w1.as_mut_slice());
        out.push(&mut self.head.b1);
        out.push(self.head.w2.as_mut_slice());
        out.push(&mut self.head.b2);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// `(name, element count)` of every tensor in serialization order, produced
/// lazily so huge layer counts cost nothing until consumed.
pub fn tensor_layout(dims: PredictorDims) -> impl Iterator<Item = (String, usize)> {
    const LAYER: [&str; 8] = [
        "pre_gain",
        "pre_bias",
        "w_q",
        "w_k",
        "w_v",
        "w_o",
        "post_gain",
        "post_bias",
    ];
    let (h, a, d) = (dims.hidden, dims.audio_dim, dims.visual_dim);
    let layer_lens = [h, h, h * h, a * h, a * h, h * h, h, h];
    let head = [
        ("head.w1", h * h),
        ("head.b1", h),
        ("head.w2", h * d),
        ("head.b2", d),
    ];
    std::iter::once(("queries".to_string(), dims.queries * h))
        .chain((0..dims.layers).flat_map(move |i| {
            LAYER
                .iter()
                .zip(layer_lens)
                .map(move |(t, n)| (format!("layers.{i}.{t}"), n))
        }))
        .chain(head.into_iter().map(|(n, len)| (n.to_string(), len)))
}

/// Names of every tensor, in serialization order.
pub fn tensor_names(layers: usize) -> Vec<String> {
    let dims = PredictorDims {
        queries: 0,
        hidden: 0,
        audio_dim: 0,
        visual_dim: 0,
        layers,
    };
    tensor_layout(dims).map(|(n, _)| n).collect()
}

/// Element counts of every tensor, in serialization order.
pub fn expected_lengths(dims: &PredictorDims) -> Vec<usize> {
    tensor_layout(*dims).map(|(_, n)| n).collect()
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let bound = (6.0 / (rows + cols) as f32).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches data length")
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, center: f32, spread: f32) -> Vec<f32> {
    (0..n)
        .map(|_| center + rng.gen_range(-spread..=spread))
        .collect()
}

/// Reproducible pseudo-random weights: Xavier-uniform matrices, norm gains
/// near 1, small biases. Same seed and dims give bit-identical weights.
pub fn init_weights(seed: u64, dims: PredictorDims) -> Result<PredictorWeights> {
    dims.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = dims.hidden;
    let queries = uniform_matrix(&mut rng, dims.queries, h);
    let layers = (0..dims.layers)
        .map(|_| LayerWeights {
            pre_gain: uniform_vec(&mut rng, h, 1.0, 0.1),
            pre_bias: uniform_vec(&mut rng, h, 0.0, 0.1),
            w_q: uniform_matrix(&mut rng, h, h),
            w_k: uniform_matrix(&mut rng, dims.audio_dim, h),
            w_v: uniform_matrix(&mut rng, dims.audio_dim, h),
            w_o: uniform_matrix(&mut rng, h, h),
            post_gain: uniform_vec(&mut rng, h, 1.0, 0.1),
            post_bias: uniform_vec(&mut rng, h, 0.0, 0.1),
        })
        .collect();
    let head = HeadWeights {
        w1: uniform_matrix(&mut rng, h, h),
        b1: uniform_vec(&mut rng, h, 0.0, 0.1),
        w2: uniform_matrix(&mut rng, h, dims.visual_dim),
        b2: uniform_vec(&mut rng, dims.visual_dim, 0.0, 0.1),
    };
    Ok(PredictorWeights {
        dims,
        queries,
        layers,
        head,
    })
}
