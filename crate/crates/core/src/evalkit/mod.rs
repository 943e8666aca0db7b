//! Evaluation helpers: synthetic fixtures, retrieval metrics, distribution
//! divergence and marker accounting.

mod kl;
mod markers;
mod retrieval;
mod synth;

pub use kl::{kl_divergence, MASS_TOLERANCE};
pub use markers::marker_retention;
pub use retrieval::{median, retrieval_eval, RetrievalReport};
pub use synth::{gen_synthetic, GroundTruth, SynthSpec};
