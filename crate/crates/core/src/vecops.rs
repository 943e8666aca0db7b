//! Elementary vector math shared by every stage.
//!
//! Embeddings are stored as `f32`; dot products and norms accumulate in `f64`.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[inline]
pub fn dot64(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot product of unequal lengths");
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

#[inline]
pub fn norm64(a: &[f32]) -> f64 {
    a.iter()
        .map(|&x| (x as f64) * (x as f64))
        .sum::<f64>()
        .sqrt()
}

/// Cosine similarity together with a flag set when either input has zero norm.
///
/// A zero-norm input yields `0.0` rather than NaN.
#[inline]
pub fn cosine64(a: &[f32], b: &[f32]) -> (f64, bool) {
    let na = norm64(a);
    let nb = norm64(b);
    if na == 0.0 || nb == 0.0 {
        return (0.0, true);
    }
    let c = dot64(a, b) / (na * nb);
    (c.clamp(-1.0, 1.0), false)
}

/// Cosine similarity in `[-1, 1]`; `0.0` when either vector has zero norm.
///
/// Panics if the lengths differ.
#[inline]
pub fn cosine_sim(a: &[f32], b: &[f32]) -> f32 {
    cosine64(a, b).0 as f32
}

/// Like [`cosine_sim`] but also reports whether the degenerate zero-norm rule fired.
#[inline]
pub fn cosine_sim_flagged(a: &[f32], b: &[f32]) -> (f32, bool) {
    let (c, degenerate) = cosine64(a, b);
    (c as f32, degenerate)
}

/// Arithmetic mean over the rows of a matrix.
pub fn mean_pool(rows: &Matrix) -> Result<Vec<f32>> {
    mean_of_rows(rows.iter_rows(), rows.cols())
}

/// Arithmetic mean of an arbitrary set of equal-length rows.
pub fn mean_of_rows<'a, I>(rows: I, dim: usize) -> Result<Vec<f32>>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let mut acc = vec![0f64; dim];
    let mut n = 0usize;
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "pooled row".into(),
                expected: dim,
                actual: row.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(row) {
            *a += x as f64;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyPool);
    }
    let inv = 1.0 / n as f64;
    Ok(acc.into_iter().map(|a| (a * inv) as f32).collect())
}
