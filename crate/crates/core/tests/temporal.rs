mod common;

use avtc::selection::{select_chunk, semantic_scores, SemanticRule};
use avtc::temporal::{
    adjacent_similarities, average_rows, boundaries, depth_scores, greedy_merge, make_segments,
    merge_runs, online_filter,
};
use avtc::vecops::mean_pool;
use common::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn depth_matches_brute_force() {
    let mut r = rng(6);
    for _ in 0..200 {
        let t = r.gen_range(1..=200);
        let sims: Vec<f32> = (0..t - 1).map(|_| r.gen_range(-1.0f32..=1.0)).collect();
        let got = depth_scores(&sims, t);
        let want = brute_depth(&sims, t);
        assert_eq!(got.len(), t);
        for (g, w) in got.iter().zip(&want) {
            assert!((*g as f64 - w).abs() <= 1e-6);
        }
        assert_eq!(got[0], 0.0);
        assert_eq!(got[t - 1], 0.0);
    }
}

#[test]
fn depth_hand_example_and_boundary() {
    // T=4 with sims s1..s3 = (0.9, 0.2, 0.9): the valley sits at chunk 2.
    let d = depth_scores(&[0.9, 0.2, 0.9], 4);
    assert_eq!(d[0], 0.0);
    assert_eq!(d[1], 0.0);
    assert!((d[2] - 1.4).abs() < 1e-6);
    assert_eq!(d[3], 0.0);
    assert_eq!(boundaries(&d, &[0.0; 4], 0.5), vec![2]);
}

#[test]
fn increasing_sims_give_small_interior_scores() {
    // For non-decreasing sims, d_t = max_{i<t} s_i + max_{i>t} s_i - 2 s_t
    // = s_{t-1} + s_{T-1} - 2 s_t <= s_{T-1} - s_t: a valley never forms on
    // the left, only the gap to the final value remains.
    let mut r = rng(8);
    for _ in 0..100 {
        let t = r.gen_range(4..50);
        let mut sims: Vec<f32> = (0..t - 1).map(|_| r.gen_range(-1.0f32..=1.0)).collect();
        sims.sort_by(f32::total_cmp);
        let d = depth_scores(&sims, t);
        for pos in 2..t - 1 {
            assert!(d[pos] <= sims[t - 2] - sims[pos - 1] + 1e-6);
        }
    }
}

#[test]
fn segmentation_exhaustive() {
    for t in 1..=8usize {
        for subset in 0u32..(1 << (t - 1)) {
            let bset: Vec<usize> = (1..t).filter(|b| subset & (1 << (b - 1)) != 0).collect();
            let segs = make_segments(&bset, t);
            assert_eq!(segs.first().unwrap().start, 0);
            assert_eq!(segs.last().unwrap().end, t);
            for w in segs.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert!(segs.iter().all(|s| !s.is_empty()));
            let starts: Vec<usize> = segs.iter().skip(1).map(|s| s.start).collect();
            assert_eq!(starts, bset);
        }
    }
}

#[test]
fn segmentation_examples() {
    assert_eq!(make_segments(&[], 5), vec![0..5]);
    assert_eq!(make_segments(&[3], 6), vec![0..3, 3..6]);
    assert_eq!(make_segments(&[1, 2, 3], 4), vec![0..1, 1..2, 2..3, 3..4]);
}

#[test]
fn merge_threshold_extremes() {
    let sims = [0.3f32, 0.99, -0.5, 1.0];
    assert_eq!(merge_runs(&sims, 5, 1.5).len(), 5);
    assert_eq!(merge_runs(&sims, 5, -1.5), vec![0..5]);
    assert_eq!(merge_runs(&sims, 5, 0.98), vec![0..1, 1..3, 3..5]);
}

#[test]
fn merged_block_is_rowwise_mean() {
    let mut r = rng(4);
    for _ in 0..20 {
        let k = r.gen_range(1..6);
        let s = random_stream(&mut r, k, 2, 3, 3, 5, 2, 4);
        let idx: Vec<usize> = (0..18).filter(|_| r.gen_bool(0.5)).collect();
        let block = average_rows(s.chunks(), &idx);
        for (row, &j) in idx.iter().enumerate() {
            for c in 0..5 {
                let mean: f64 = s
                    .chunks()
                    .iter()
                    .map(|ch| ch.visual.token(j)[c] as f64)
                    .sum::<f64>()
                    / k as f64;
                assert!((block.get(row, c) as f64 - mean).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn identical_chunks_merge_into_one_group() {
    let mut r = rng(10);
    let c = random_chunk(&mut r, 1, 4, 4, 6, 3, 6);
    let s = identical_stream(&c, 3);
    let sims = adjacent_similarities(&s);
    assert!(sims.visual.iter().all(|&v| v > 0.98));
    let pooled = mean_pool(c.audio.embeddings()).unwrap();
    let scores = semantic_scores(&c.visual, &pooled).unwrap();
    let mask = select_chunk(&c.visual, &scores.values, 0.5, 0.1, SemanticRule::Bottom, 0).unwrap();
    let groups = greedy_merge(s.chunks(), &sims.visual, 0.98, &mask);
    assert_eq!(groups.len(), 1);
    assert!(groups[0]
        .rows
        .bit_eq(&c.visual.embeddings().select_rows(&mask.union)));
}

#[test]
fn online_examples() {
    let mut r = rng(12);
    let c = random_chunk(&mut r, 1, 2, 2, 4, 2, 4);
    assert_eq!(online_filter(&identical_stream(&c, 5), 0.99), vec![4]);
    assert_eq!(online_filter(&identical_stream(&c, 1), 0.99), vec![0]);

    let e = |i: usize| {
        let mut v = vec![0.0f32; 4];
        v[i] = 1.0;
        v
    };
    let dirs: Vec<Vec<f32>> = (0..6).map(|t| e(t % 2)).collect();
    let alt = stream_with_offsets(&mut r, &dirs, 1, 2, 2, 2);
    assert_eq!(online_filter(&alt, 0.99), (0..6).collect::<Vec<_>>());
}

proptest! {
    #[test]
    fn online_survivor_formula(seed in any::<u64>(), t in 1usize..30, thr in 0.5f64..1.0) {
        let mut r = rng(seed);
        // mix repeats and fresh chunks so both branches occur
        let mut chunks = vec![random_chunk(&mut r, 1, 2, 2, 3, 2, 3)];
        for _ in 1..t {
            if r.gen_bool(0.5) {
                chunks.push(chunks.last().unwrap().clone());
            } else {
                chunks.push(random_chunk(&mut r, 1, 2, 2, 3, 2, 3));
            }
        }
        let s = avtc::InterleavedStream::new(chunks).unwrap();
        let sims = adjacent_similarities(&s);
        let above = sims.visual.iter().filter(|&&v| v > thr as f32).count();
        prop_assert_eq!(online_filter(&s, thr).len(), t - above);
    }

    #[test]
    fn depth_oracle_prop(sims in prop::collection::vec(-1.0f32..=1.0, 0..120)) {
        let t = sims.len() + 1;
        let got = depth_scores(&sims, t);
        let want = brute_depth(&sims, t);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((*g as f64 - w).abs() <= 1e-6);
        }
    }
}
