use crate::pipeline::PipelineResult;

/// Fraction of `(chunk, token)` markers kept by the mask applied to their
/// chunk. Merged chunks report their group's shared mask. With no markers
/// there is nothing to lose and the result is 1.
pub fn marker_retention(result: &PipelineResult, markers: &[(usize, usize)]) -> f64 {
    if markers.is_empty() {
        return 1.0;
    }
    let kept = markers
        .iter()
        .filter(|&&(chunk, token)| {
            result
                .per_chunk_masks
                .get(chunk)
                .is_some_and(|m| m.contains(token))
        })
        .count();
    kept as f64 / markers.len() as f64
}
