//! C ABI for the avtc compressor.
//!
//! Objects cross the boundary as opaque handles created by `avtc_*_new`,
//! `avtc_*_read` or `avtc_compress` and released with the matching
//! `avtc_*_free`. Every fallible call returns an [`AvtcStatus`]; on failure
//! [`avtc_last_error`] describes the most recent error on the calling thread.
//! Handles may be shared across threads for reading; no call mutates one.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use avtc::evalkit::{gen_synthetic, kl_divergence, retrieval_eval, SynthSpec};
use avtc::pipeline::PipelineResult;
use avtc::predictor::{
    init_weights, AudioMeanPredictor, PredictorDims, PredictorWeights, SemanticPredictor,
};
use avtc::{
    io, AudioChunk, Chunk, CompressOptions, Error, FormatError, InterleavedStream, Matrix, Mode,
    PipelineConfig, VisualChunk,
};

pub const AVTC_MODE_OFFLINE: u32 = 0;
pub const AVTC_MODE_ONLINE: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    InvalidConfig = 6,
    InvalidWeights = 7,
    Panic = 8,
}

/// Opaque interleaved input stream.
pub struct AvtcStream(InterleavedStream);

/// Opaque predictor weights.
pub struct AvtcWeights(PredictorWeights);

/// Opaque pipeline output.
pub struct AvtcResult(PipelineResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvtcConfig {
    pub rho_sem: f64,
    pub rho_spa: f64,
    pub tau_merge: f64,
    pub depth_threshold: f64,
    pub online_threshold: f64,
    /// `AVTC_MODE_OFFLINE` or `AVTC_MODE_ONLINE`.
    pub mode: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvtcStats {
    pub original_video_tokens: u64,
    pub retained_video_tokens: u64,
    pub original_audio_tokens: u64,
    pub video_compression: f64,
    pub total_compression: f64,
    pub segments: u64,
    pub survivors: u64,
    pub merge_groups: u64,
    pub merges: u64,
    pub warnings: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AvtcRetrieval {
    pub recall_at_1: f64,
    pub recall_at_5: f64,
    pub median_rank: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AvtcStatus {
    match e {
        Error::Format(FormatError::Io(_)) => AvtcStatus::Io,
        Error::Format(_) => AvtcStatus::Format,
        Error::DimensionMismatch { .. } => AvtcStatus::DimensionMismatch,
        Error::InvalidConfig(_) => AvtcStatus::InvalidConfig,
        Error::InvalidWeights(_) => AvtcStatus::InvalidWeights,
        _ => AvtcStatus::InvalidArgument,
    }
}

struct Fail(AvtcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AvtcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for [`avtc_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AvtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AvtcStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            AvtcStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            AvtcStatus::InvalidArgument,
            "path is not valid UTF-8".into(),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn floats<'a>(p: *const f32, n: usize, what: &str) -> Result<&'a [f32], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn product(dims: &[usize]) -> Result<usize, Fail> {
    dims.iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| {
            Fail(
                AvtcStatus::InvalidArgument,
                format!("size overflow for {dims:?}"),
            )
        })
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn avtc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the default configuration.
///
/// # Safety
/// `out` must be null or point to writable memory for one `AvtcConfig`.
#[no_mangle]
pub unsafe extern "C" fn avtc_config_default(out: *mut AvtcConfig) -> AvtcStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = PipelineConfig::default();
        *out = AvtcConfig {
            rho_sem: d.rho_sem,
            rho_spa: d.rho_spa,
            tau_merge: d.tau_merge,
            depth_threshold: d.depth_threshold,
            online_threshold: d.online_threshold,
            mode: AVTC_MODE_OFFLINE,
        };
        Ok(())
    })
}

fn to_config(c: &AvtcConfig) -> Result<PipelineConfig, Fail> {
    let mode = match c.mode {
        AVTC_MODE_OFFLINE => Mode::Offline,
        AVTC_MODE_ONLINE => Mode::Online,
        m => return Err(Fail(AvtcStatus::InvalidConfig, format!("unknown mode {m}"))),
    };
    let cfg = PipelineConfig {
        rho_sem: c.rho_sem,
        rho_spa: c.rho_spa,
        tau_merge: c.tau_merge,
        depth_threshold: c.depth_threshold,
        online_threshold: c.online_threshold,
        mode,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads an AVTS file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_read(
    path: *const c_char,
    out: *mut *mut AvtcStream,
) -> AvtcStatus {
    guard(|| {
        let s = io::read_stream_file(path_arg(path)?)?;
        put(out, AvtcStream(s))
    })
}

/// Builds a stream from contiguous buffers: `visual` holds `chunks*F*H*W*d`
/// floats (chunk-major, then frame, row, col), `audio` holds `chunks*L*d_a`.
///
/// # Safety
/// Buffers must hold at least the stated number of floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_new(
    chunks: usize,
    frames: usize,
    height: usize,
    width: usize,
    dim: usize,
    audio_tokens: usize,
    audio_dim: usize,
    visual: *const f32,
    audio: *const f32,
    out: *mut *mut AvtcStream,
) -> AvtcStatus {
    guard(|| {
        let m = product(&[frames, height, width])?;
        let v_len = product(&[m, dim])?;
        let a_len = product(&[audio_tokens, audio_dim])?;
        let visual = floats(visual, product(&[chunks, v_len])?, "visual")?;
        let audio = floats(audio, product(&[chunks, a_len])?, "audio")?;
        let mut list = Vec::with_capacity(chunks);
        for t in 0..chunks {
            let v = Matrix::from_vec(m, dim, visual[t * v_len..(t + 1) * v_len].to_vec())?;
            let a = Matrix::from_vec(
                audio_tokens,
                audio_dim,
                audio[t * a_len..(t + 1) * a_len].to_vec(),
            )?;
            list.push(Chunk {
                visual: VisualChunk::new(frames, height, width, v).map_err(|e| {
                    Error::InvalidChunk {
                        index: t,
                        message: e.to_string(),
                    }
                })?,
                audio: AudioChunk::new(a).map_err(|e| Error::InvalidChunk {
                    index: t,
                    message: e.to_string(),
                })?,
            });
        }
        put(out, AvtcStream(InterleavedStream::new(list)?))
    })
}

/// Generates the built-in synthetic benchmark stream for `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_synthetic_benchmark(
    seed: u64,
    out: *mut *mut AvtcStream,
) -> AvtcStatus {
    guard(|| {
        let (s, _) = gen_synthetic(&SynthSpec::default_benchmark(seed))?;
        put(out, AvtcStream(s))
    })
}

/// Number of chunks, or 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_chunks(stream: *const AvtcStream) -> usize {
    stream.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `stream` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_write(
    stream: *const AvtcStream,
    path: *const c_char,
) -> AvtcStatus {
    guard(|| {
        let s = deref(stream, "stream")?;
        Ok(io::write_stream_file(&s.0, path_arg(path)?)?)
    })
}

/// # Safety
/// `stream` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn avtc_stream_free(stream: *mut AvtcStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Reads an A2VW weights file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_weights_read(
    path: *const c_char,
    out: *mut *mut AvtcWeights,
) -> AvtcStatus {
    guard(|| {
        let w = io::read_weights_file(path_arg(path)?)?;
        put(out, AvtcWeights(w))
    })
}

/// Seeded weights; identical arguments give identical weights.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_weights_init(
    seed: u64,
    queries: usize,
    hidden: usize,
    audio_dim: usize,
    visual_dim: usize,
    layers: usize,
    out: *mut *mut AvtcWeights,
) -> AvtcStatus {
    guard(|| {
        let dims = PredictorDims {
            queries,
            hidden,
            audio_dim,
            visual_dim,
            layers,
        };
        put(out, AvtcWeights(init_weights(seed, dims)?))
    })
}

/// # Safety
/// `weights` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn avtc_weights_write(
    weights: *const AvtcWeights,
    path: *const c_char,
) -> AvtcStatus {
    guard(|| {
        let w = deref(weights, "weights")?;
        Ok(io::write_weights_file(&w.0, path_arg(path)?)?)
    })
}

/// # Safety
/// `weights` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn avtc_weights_free(weights: *mut AvtcWeights) {
    if !weights.is_null() {
        drop(Box::from_raw(weights));
    }
}

/// Compresses `stream`. A null `weights` selects the audio-mean predictor,
/// which needs equal audio and visual widths. A null `config` means defaults;
/// `threads` of 0 uses every core.
///
/// # Safety
/// Non-null pointers must be live handles or valid structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_compress(
    stream: *const AvtcStream,
    weights: *const AvtcWeights,
    config: *const AvtcConfig,
    threads: usize,
    out: *mut *mut AvtcResult,
) -> AvtcStatus {
    guard(|| {
        let s = deref(stream, "stream")?;
        let cfg = match config.as_ref() {
            Some(c) => to_config(c)?,
            None => PipelineConfig::default(),
        };
        let predictor: &dyn SemanticPredictor = match weights.as_ref() {
            Some(w) => &w.0,
            None => &AudioMeanPredictor,
        };
        let opts = CompressOptions {
            threads: (threads > 0).then_some(threads),
            ..Default::default()
        };
        let result = avtc::compress_with(&s.0, predictor, &cfg, &opts)?;
        put(out, AvtcResult(result))
    })
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_result_stats(
    result: *const AvtcResult,
    out: *mut AvtcStats,
) -> AvtcStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = &r.0.stats;
        *out = AvtcStats {
            original_video_tokens: s.original_video_tokens as u64,
            retained_video_tokens: s.retained_video_tokens as u64,
            original_audio_tokens: s.original_audio_tokens as u64,
            video_compression: s.video_compression,
            total_compression: s.total_compression,
            segments: s.segments as u64,
            survivors: s.survivors as u64,
            merge_groups: s.merge_groups as u64,
            merges: s.merges as u64,
            warnings: s.warnings as u64,
        };
        Ok(())
    })
}

/// Writes the compressed stream as an AVTC file.
///
/// # Safety
/// `result` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn avtc_result_write(
    result: *const AvtcResult,
    path: *const c_char,
) -> AvtcStatus {
    guard(|| {
        let r = deref(result, "result")?;
        Ok(io::write_compressed_file(&r.0.compressed, path_arg(path)?)?)
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn avtc_result_free(result: *mut AvtcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Retrieval metrics for `n` query rows in `audio` against `n` candidate rows
/// in `video`, both row-major `n x dim`.
///
/// # Safety
/// Each buffer must hold `n*dim` floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_retrieval_eval(
    audio: *const f32,
    video: *const f32,
    n: usize,
    dim: usize,
    out: *mut AvtcRetrieval,
) -> AvtcStatus {
    guard(|| {
        let len = product(&[n, dim])?;
        let a = Matrix::from_vec(n, dim, floats(audio, len, "audio")?.to_vec())?;
        let v = Matrix::from_vec(n, dim, floats(video, len, "video")?.to_vec())?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = retrieval_eval(&a, &v)?;
        *out = AvtcRetrieval {
            recall_at_1: r.recall_at_1,
            recall_at_5: r.recall_at_5,
            median_rank: r.median_rank,
        };
        Ok(())
    })
}

/// KL divergence in nats between two length-`n` distributions.
///
/// # Safety
/// `p` and `q` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avtc_kl_divergence(
    p: *const f64,
    q: *const f64,
    n: usize,
    out: *mut f64,
) -> AvtcStatus {
    guard(|| {
        if p.is_null() || q.is_null() {
            return Err(null("distribution"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = kl_divergence(
            std::slice::from_raw_parts(p, n),
            std::slice::from_raw_parts(q, n),
        )?;
        Ok(())
    })
}
