//! End-to-end compression: predictor, per-chunk scoring, temporal plan,
//! shared selection, merging, and re-interleaving with the untouched audio.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::SemanticPredictor;
use crate::selection::{select_chunk, semantic_scores, SemanticRule, SemanticScores};
use crate::temporal::{
    average_rows, boundaries, chunk_means, depth_scores, fixed_window_segments, make_segments,
    merge_runs, online_filter_means, segment_selection, similarities_from_means,
    AdjacentSimilarities, SegmentPlan,
};
use crate::types::{
    CompressedStream, Entry, InterleavedStream, Mode, PipelineConfig, SelectionMask, Stats,
    VisualBlock,
};

/// Comparison baselines. The default value runs the method as designed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ablation {
    pub semantic_rule: SemanticRule,
    /// Replace depth-score segmentation with fixed windows of this many chunks.
    pub fixed_window: Option<usize>,
    /// Keep only the first chunk of each merge group instead of averaging.
    pub keep_first_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompressOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub ablation: Ablation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemporalPlan {
    Offline(SegmentPlan),
    Online { survivors: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub compressed: CompressedStream,
    pub stats: Stats,
    /// Mask applied to each input chunk; empty for chunks the online filter dropped.
    pub per_chunk_masks: Vec<SelectionMask>,
    pub plan: TemporalPlan,
    pub similarities: AdjacentSimilarities,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRatio {
    pub video: f64,
    pub total: f64,
}

/// Fraction of tokens removed, over video only and over video plus audio.
pub fn compression_ratio(stats: &Stats) -> Result<CompressionRatio> {
    if stats.original_video_tokens == 0 {
        return Err(Error::ZeroOriginals("video"));
    }
    let original = (stats.original_video_tokens + stats.original_audio_tokens) as f64;
    let kept = (stats.retained_video_tokens + stats.original_audio_tokens) as f64;
    Ok(CompressionRatio {
        video: 1.0 - stats.retained_video_tokens as f64 / stats.original_video_tokens as f64,
        total: 1.0 - kept / original,
    })
}

pub fn compress<P: SemanticPredictor + ?Sized>(
    stream: &InterleavedStream,
    predictor: &P,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    compress_with(stream, predictor, cfg, &CompressOptions::default())
}

pub fn compress_with<P: SemanticPredictor + ?Sized>(
    stream: &InterleavedStream,
    predictor: &P,
    cfg: &PipelineConfig,
    opts: &CompressOptions,
) -> Result<PipelineResult> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let shape = stream.shape();
    predictor.check_dims(shape.audio_dim, shape.dim)?;
    let run = || match cfg.mode {
        Mode::Offline => compress_offline(stream, predictor, cfg, &opts.ablation),
        Mode::Online => compress_online(stream, predictor, cfg, &opts.ablation),
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn score_chunk<P: SemanticPredictor + ?Sized>(
    stream: &InterleavedStream,
    predictor: &P,
    t: usize,
) -> Result<SemanticScores> {
    let chunk = &stream.chunks()[t];
    let pooled = predictor.predict(&chunk.audio)?;
    semantic_scores(&chunk.visual, &pooled)
}

fn compress_offline<P: SemanticPredictor + ?Sized>(
    stream: &InterleavedStream,
    predictor: &P,
    cfg: &PipelineConfig,
    ablation: &Ablation,
) -> Result<PipelineResult> {
    let chunks = stream.chunks();
    let t = chunks.len();

    let scores: Vec<SemanticScores> = (0..t)
        .into_par_iter()
        .map(|i| score_chunk(stream, predictor, i))
        .collect::<Result<_>>()?;

    let (visual_means, audio_means) = chunk_means(chunks)?;
    let sims = similarities_from_means(&visual_means, &audio_means);

    let segments = match ablation.fixed_window {
        Some(w) => fixed_window_segments(t, w),
        None => {
            let dv = depth_scores(&sims.visual, t);
            let da = depth_scores(&sims.audio, t);
            make_segments(&boundaries(&dv, &da, cfg.depth_threshold), t)
        }
    };

    struct SegmentOut {
        mask: SelectionMask,
        groups: Vec<Range<usize>>,
        blocks: Vec<VisualBlock>,
    }

    let per_segment: Vec<SegmentOut> = segments
        .par_iter()
        .map(|seg| -> Result<SegmentOut> {
            let seg_chunks = &chunks[seg.clone()];
            let seg_scores: Vec<&[f32]> = scores[seg.clone()]
                .iter()
                .map(|s| s.values.as_slice())
                .collect();
            let mask = segment_selection(
                seg_chunks,
                &seg_scores,
                cfg.rho_sem,
                cfg.rho_spa,
                ablation.semantic_rule,
                seg.start as u64,
            )?;
            let pair_sims = &sims.visual[seg.start..seg.end - 1];
            let groups: Vec<Range<usize>> = merge_runs(pair_sims, seg.len(), cfg.tau_merge)
                .into_iter()
                .map(|r| seg.start + r.start..seg.start + r.end)
                .collect();
            let blocks = groups
                .iter()
                .map(|g| {
                    let rows = if ablation.keep_first_only {
                        chunks[g.start].visual.embeddings().select_rows(&mask.union)
                    } else {
                        average_rows(&chunks[g.clone()], &mask.union)
                    };
                    VisualBlock {
                        chunks: g.clone(),
                        indices: mask.union.clone(),
                        rows,
                    }
                })
                .collect();
            Ok(SegmentOut {
                mask,
                groups,
                blocks,
            })
        })
        .collect::<Result<_>>()?;

    let mut per_chunk_masks = Vec::with_capacity(t);
    for (seg, out) in segments.iter().zip(&per_segment) {
        per_chunk_masks.extend(std::iter::repeat_n(out.mask.clone(), seg.len()));
    }

    let mut blocks_by_start: Vec<Option<VisualBlock>> = vec![None; t];
    for out in &per_segment {
        for b in &out.blocks {
            blocks_by_start[b.chunks.start] = Some(b.clone());
        }
    }
    let compressed = interleave(stream, blocks_by_start);

    let merge_groups: usize = per_segment.iter().map(|o| o.groups.len()).sum();
    let warnings = scores.iter().map(|s| s.degenerate).sum::<usize>() + sims.degenerate;
    let stats = build_stats(
        stream,
        &compressed,
        segments.len(),
        t,
        merge_groups,
        t - merge_groups,
        warnings,
    );

    let plan = SegmentPlan {
        segments,
        shared_masks: per_segment.iter().map(|o| o.mask.clone()).collect(),
        merge_groups: per_segment.into_iter().map(|o| o.groups).collect(),
    };
    Ok(PipelineResult {
        compressed,
        stats,
        per_chunk_masks,
        plan: TemporalPlan::Offline(plan),
        similarities: sims,
    })
}

fn compress_online<P: SemanticPredictor + ?Sized>(
    stream: &InterleavedStream,
    predictor: &P,
    cfg: &PipelineConfig,
    ablation: &Ablation,
) -> Result<PipelineResult> {
    let chunks = stream.chunks();
    let t = chunks.len();
    let (visual_means, audio_means) = chunk_means(chunks)?;
    let sims = similarities_from_means(&visual_means, &audio_means);
    let survivors = online_filter_means(&visual_means, cfg.online_threshold);

    let selected: Vec<(SelectionMask, usize)> = survivors
        .par_iter()
        .map(|&i| -> Result<(SelectionMask, usize)> {
            let scores = score_chunk(stream, predictor, i)?;
            let mask = select_chunk(
                &chunks[i].visual,
                &scores.values,
                cfg.rho_sem,
                cfg.rho_spa,
                ablation.semantic_rule,
                i as u64,
            )?;
            Ok((mask, scores.degenerate))
        })
        .collect::<Result<_>>()?;

    let mut per_chunk_masks = vec![SelectionMask::empty(); t];
    let mut blocks_by_start: Vec<Option<VisualBlock>> = vec![None; t];
    let mut warnings = sims.degenerate;
    for (&i, (mask, degenerate)) in survivors.iter().zip(selected) {
        warnings += degenerate;
        blocks_by_start[i] = Some(VisualBlock {
            chunks: i..i + 1,
            indices: mask.union.clone(),
            rows: chunks[i].visual.embeddings().select_rows(&mask.union),
        });
        per_chunk_masks[i] = mask;
    }
    let compressed = interleave(stream, blocks_by_start);
    let stats = build_stats(
        stream,
        &compressed,
        0,
        survivors.len(),
        survivors.len(),
        0,
        warnings,
    );
    Ok(PipelineResult {
        compressed,
        stats,
        per_chunk_masks,
        plan: TemporalPlan::Online { survivors },
        similarities: sims,
    })
}

/// Places each visual block just before the audio of its first chunk.
fn interleave(
    stream: &InterleavedStream,
    blocks_by_start: Vec<Option<VisualBlock>>,
) -> CompressedStream {
    let mut entries = Vec::with_capacity(stream.len() * 2);
    for ((t, chunk), block) in stream.chunks().iter().enumerate().zip(blocks_by_start) {
        if let Some(b) = block {
            entries.push(Entry::Visual(b));
        }
        entries.push(Entry::Audio {
            chunk: t,
            audio: chunk.audio.clone(),
        });
    }
    CompressedStream { entries }
}

fn build_stats(
    stream: &InterleavedStream,
    compressed: &CompressedStream,
    segments: usize,
    survivors: usize,
    merge_groups: usize,
    merges: usize,
    warnings: usize,
) -> Stats {
    let shape = stream.shape();
    let original_video_tokens = stream.len() * shape.visual_tokens();
    let original_audio_tokens = stream.len() * shape.audio_tokens;
    let retained_video_tokens = compressed.retained_video_tokens();
    let mut stats = Stats {
        original_video_tokens,
        retained_video_tokens,
        original_audio_tokens,
        video_compression: 0.0,
        total_compression: 0.0,
        segments,
        survivors,
        merge_groups,
        merges,
        warnings,
    };
    let ratio = compression_ratio(&stats).expect("streams have visual tokens");
    stats.video_compression = ratio.video;
    stats.total_compression = ratio.total;
    stats
}
