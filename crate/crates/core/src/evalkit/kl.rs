use crate::error::{Error, Result};

/// Tolerance on the total mass of each distribution.
pub const MASS_TOLERANCE: f64 = 1e-6;

fn check(name: &str, v: &[f64]) -> Result<()> {
    if let Some((i, x)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
    {
        return Err(Error::InvalidDistribution(format!("{name}[{i}] = {x}")));
    }
    let mass: f64 = v.iter().sum();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("{name} sums to {mass}")));
    }
    Ok(())
}

/// `sum p_i ln(p_i / q_i)` in nats, with `0 ln(0 / q) = 0`. Rounding that
/// would push the sum below zero is clamped.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "distribution length".into(),
            expected: p.len(),
            actual: q.len(),
        });
    }
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    check("p", p)?;
    check("q", q)?;
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::SupportViolation { index: i, p: pi });
        }
        kl += pi * (pi / qi).ln();
    }
    Ok(kl.max(0.0))
}
