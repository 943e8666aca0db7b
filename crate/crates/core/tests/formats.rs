mod common;

use std::io::Cursor;

use avtc::io::{
    read_compressed, read_stream, read_stream_header, read_weights, write_compressed, write_stream,
    write_weights, STREAM_HEADER_LEN,
};
use avtc::predictor::{init_weights, AudioMeanPredictor, PredictorDims};
use avtc::{compress, PipelineConfig};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn stream_bytes(s: &avtc::InterleavedStream) -> Vec<u8> {
    let mut buf = Vec::new();
    write_stream(s, &mut buf).unwrap();
    buf
}

#[test]
fn stream_round_trips() {
    let mut r = rng(50);
    for _ in 0..200 {
        let s = random_shaped_stream(&mut r);
        let buf = stream_bytes(&s);
        let shape = s.shape();
        let payload = s.len()
            * (shape.visual_tokens() * shape.dim + shape.audio_tokens * shape.audio_dim)
            * 4;
        assert_eq!(buf.len(), STREAM_HEADER_LEN + payload);
        let back = read_stream(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(back, s);
        let h = read_stream_header(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(h.chunks as usize, s.len());
    }
}

#[test]
fn weights_round_trip() {
    let mut r = rng(51);
    for seed in 0..50 {
        let dims = PredictorDims {
            queries: r.gen_range(1..5),
            hidden: r.gen_range(1..9),
            audio_dim: r.gen_range(1..7),
            visual_dim: r.gen_range(1..7),
            layers: r.gen_range(1..4),
        };
        let w = init_weights(seed, dims).unwrap();
        let mut buf = Vec::new();
        write_weights(&w, &mut buf).unwrap();
        let back = read_weights(&mut Cursor::new(&buf)).unwrap();
        let mut again = Vec::new();
        write_weights(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back.dims, dims);
    }
}

#[test]
fn compressed_round_trip_from_pipeline() {
    let mut r = rng(52);
    for _ in 0..20 {
        let t = r.gen_range(1..8);
        let s = random_stream(&mut r, t, 1, 4, 4, 4, 2, 4);
        let res = compress(&s, &AudioMeanPredictor, &PipelineConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_compressed(&res.compressed, &mut buf).unwrap();
        let back = read_compressed(&mut Cursor::new(&buf)).unwrap();
        assert!(back.bit_eq(&res.compressed));
    }
}

#[test]
fn truncation_is_an_error_at_every_length() {
    let mut r = rng(53);
    let s = random_stream(&mut r, 2, 1, 2, 2, 3, 2, 3);
    let buf = stream_bytes(&s);
    for n in 0..buf.len() {
        assert!(read_stream(&mut Cursor::new(&buf[..n])).is_err(), "len {n}");
    }
    let mut extra = buf.clone();
    extra.push(0);
    assert!(read_stream(&mut Cursor::new(&extra)).is_err());

    let w = init_weights(
        1,
        PredictorDims {
            queries: 2,
            hidden: 3,
            audio_dim: 2,
            visual_dim: 2,
            layers: 1,
        },
    )
    .unwrap();
    let mut wb = Vec::new();
    write_weights(&w, &mut wb).unwrap();
    for n in 0..wb.len() {
        assert!(read_weights(&mut Cursor::new(&wb[..n])).is_err(), "len {n}");
    }
}

fn corrupt(r: &mut rand_chacha::ChaCha8Rng, buf: &[u8]) -> Vec<u8> {
    let mut out = buf.to_vec();
    for _ in 0..r.gen_range(1..4) {
        let i = r.gen_range(0..out.len());
        out[i] = r.gen();
    }
    if r.gen_bool(0.3) {
        out.truncate(r.gen_range(0..out.len()));
    }
    out
}

#[test]
fn random_corruption_never_panics() {
    let mut r = rng(54);
    let s = random_stream(&mut r, 3, 1, 3, 3, 4, 2, 4);
    let sb = stream_bytes(&s);
    let w = init_weights(
        2,
        PredictorDims {
            queries: 2,
            hidden: 4,
            audio_dim: 4,
            visual_dim: 4,
            layers: 2,
        },
    )
    .unwrap();
    let mut wb = Vec::new();
    write_weights(&w, &mut wb).unwrap();
    let res = compress(&s, &AudioMeanPredictor, &PipelineConfig::default()).unwrap();
    let mut cb = Vec::new();
    write_compressed(&res.compressed, &mut cb).unwrap();

    for _ in 0..1000 {
        let _ = read_stream(&mut Cursor::new(corrupt(&mut r, &sb)));
        let _ = read_weights(&mut Cursor::new(corrupt(&mut r, &wb)));
        let _ = read_compressed(&mut Cursor::new(corrupt(&mut r, &cb)));
    }
}

proptest! {
    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = read_stream(&mut Cursor::new(&bytes));
        let _ = read_weights(&mut Cursor::new(&bytes));
        let _ = read_compressed(&mut Cursor::new(&bytes));
    }

    #[test]
    fn header_fuzz_with_valid_magic(tail in prop::collection::vec(any::<u8>(), 0..120)) {
        for magic in [b"AVTS", b"A2VW", b"AVTC"] {
            let mut bytes = magic.to_vec();
            bytes.extend_from_slice(&[1, 0, 0, 0]);
            bytes.extend_from_slice(&tail);
            let _ = read_stream(&mut Cursor::new(&bytes));
            let _ = read_weights(&mut Cursor::new(&bytes));
            let _ = read_compressed(&mut Cursor::new(&bytes));
        }
    }
}
