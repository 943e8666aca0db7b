use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use avtc::evalkit::{gen_synthetic, retrieval_eval, SynthSpec};
use avtc::io::{self, ConfigOverrides};
use avtc::pipeline::{Ablation, TemporalPlan};
use avtc::predictor::{init_weights, AudioMeanPredictor, PredictorDims, SemanticPredictor};
use avtc::selection::SemanticRule;
use avtc::vecops::norm64;
use avtc::{compress_with, CompressOptions, Mode};

/// Audio-guided visual token compression.
#[derive(Parser)]
#[command(name = "avtc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress an AVTS stream.
    Compress(CompressArgs),
    /// Generate a synthetic AVTS stream with ground truth.
    GenSynth(GenSynthArgs),
    /// Recall@1/5 and median rank for paired embeddings.
    EvalRetrieval(EvalRetrievalArgs),
    /// Write seeded predictor weights.
    InitWeights(InitWeightsArgs),
    /// Print an AVTS header and per-chunk norms.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Bottom,
    Top,
    Random,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("predictor").required(true).args(["weights", "idealized"]))]
struct CompressArgs {
    #[arg(long)]
    input: PathBuf,
    /// A2VW predictor weights.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Use the mean audio token as the predicted semantics (audio and visual
    /// widths must match).
    #[arg(long)]
    idealized: bool,
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the compressed stream (AVTC).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write stats JSON here instead of stdout.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long)]
    rho_sem: Option<f64>,
    #[arg(long)]
    rho_spa: Option<f64>,
    #[arg(long)]
    tau_merge: Option<f64>,
    #[arg(long)]
    depth_threshold: Option<f64>,
    #[arg(long)]
    online_threshold: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Semantic selection rule (ablation).
    #[arg(long, value_enum, default_value = "bottom")]
    rule: RuleArg,
    /// Seed for `--rule random`.
    #[arg(long, default_value_t = 0)]
    rule_seed: u64,
    /// Fixed-size segments instead of depth-score boundaries (ablation).
    #[arg(long)]
    fixed_window: Option<usize>,
    /// Keep the first chunk of each merge group instead of averaging (ablation).
    #[arg(long)]
    keep_first_only: bool,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["spec", "benchmark"]))]
struct GenSynthArgs {
    /// JSON synthetic spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Use the built-in benchmark spec with this seed.
    #[arg(long)]
    benchmark: Option<u64>,
    #[arg(long)]
    output: PathBuf,
    /// Write ground truth JSON.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct EvalRetrievalArgs {
    /// JSON array of query rows.
    #[arg(long)]
    audio: PathBuf,
    /// JSON array of candidate rows; row i matches query i.
    #[arg(long)]
    video: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct InitWeightsArgs {
    #[arg(long)]
    seed: u64,
    /// Q,d_h,d_a,d,layers
    #[arg(long, value_parser = parse_dims, default_value = "128,256,1280,3584,2")]
    dims: PredictorDims,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: avtc::Error| e.to_string())
}

fn parse_dims(s: &str) -> Result<PredictorDims, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [queries, hidden, audio_dim, visual_dim, layers] = v[..] else {
        return Err(format!(
            "expected 5 comma-separated values, got {}",
            v.len()
        ));
    };
    let dims = PredictorDims {
        queries,
        hidden,
        audio_dim,
        visual_dim,
        layers,
    };
    dims.validate().map_err(|e| e.to_string())?;
    Ok(dims)
}

/// Writes to stdout; a reader that goes away early is not an error.
fn print_out(text: &str) -> anyhow::Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(value: &Value, path: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => print_out(&text),
    }
}

fn run_compress(a: CompressArgs) -> anyhow::Result<()> {
    let overrides = ConfigOverrides {
        rho_sem: a.rho_sem,
        rho_spa: a.rho_spa,
        tau_merge: a.tau_merge,
        depth_threshold: a.depth_threshold,
        online_threshold: a.online_threshold,
        mode: a.mode,
    };
    let cfg = io::resolve_config(a.config.as_deref(), &overrides)?;
    let stream =
        io::read_stream_file(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let weights;
    let predictor: &dyn SemanticPredictor = match &a.weights {
        Some(p) => {
            weights =
                io::read_weights_file(p).with_context(|| format!("reading {}", p.display()))?;
            &weights
        }
        None => &AudioMeanPredictor,
    };
    if a.fixed_window == Some(0) {
        bail!("--fixed-window must be positive");
    }
    let opts = CompressOptions {
        threads: a.threads,
        ablation: Ablation {
            semantic_rule: match a.rule {
                RuleArg::Bottom => SemanticRule::Bottom,
                RuleArg::Top => SemanticRule::Top,
                RuleArg::Random => SemanticRule::Random { seed: a.rule_seed },
            },
            fixed_window: a.fixed_window,
            keep_first_only: a.keep_first_only,
        },
    };
    let result = compress_with(&stream, predictor, &cfg, &opts)?;
    if let Some(out) = &a.output {
        io::write_compressed_file(&result.compressed, out)
            .with_context(|| format!("writing {}", out.display()))?;
    }

    let s = &result.stats;
    let mut report = serde_json::to_value(s)?;
    let obj = report
        .as_object_mut()
        .expect("stats serialize to an object");
    obj.insert(
        "video_compression_pct".into(),
        json!(100.0 * s.video_compression),
    );
    obj.insert(
        "total_compression_pct".into(),
        json!(100.0 * s.total_compression),
    );
    obj.insert("k_s".into(), json!(s.segments));
    obj.insert("config".into(), serde_json::to_value(cfg)?);
    match &result.plan {
        TemporalPlan::Offline(plan) => {
            let segs: Vec<Value> = plan
                .segments
                .iter()
                .zip(&plan.shared_masks)
                .zip(&plan.merge_groups)
                .map(|((seg, mask), groups)| {
                    json!({
                        "chunks": [seg.start, seg.end],
                        "mask_size": mask.len(),
                        "merge_groups": groups.iter().map(|g| [g.start, g.end]).collect::<Vec<_>>(),
                    })
                })
                .collect();
            obj.insert("segment_plan".into(), Value::Array(segs));
        }
        TemporalPlan::Online { survivors } => {
            obj.insert("survivor_chunks".into(), json!(survivors));
        }
    }
    emit(&report, a.stats.as_deref())
}

fn run_gen_synth(a: GenSynthArgs) -> anyhow::Result<()> {
    let spec = match (&a.spec, a.benchmark) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SynthSpec>(&text)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(seed)) => SynthSpec::default_benchmark(seed),
        (None, None) => unreachable!("clap requires one source"),
    };
    let (stream, truth) = gen_synthetic(&spec)?;
    io::write_stream_file(&stream, &a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;
    if let Some(p) = &a.truth {
        emit(&serde_json::to_value(&truth)?, Some(p))?;
    }
    Ok(())
}

fn run_eval_retrieval(a: EvalRetrievalArgs) -> anyhow::Result<()> {
    let audio =
        io::read_matrix_json(&a.audio).with_context(|| format!("reading {}", a.audio.display()))?;
    let video =
        io::read_matrix_json(&a.video).with_context(|| format!("reading {}", a.video.display()))?;
    let report = retrieval_eval(&audio, &video)?;
    emit(&serde_json::to_value(&report)?, a.report.as_deref())
}

fn run_init_weights(a: InitWeightsArgs) -> anyhow::Result<()> {
    let w = init_weights(a.seed, a.dims)?;
    io::write_weights_file(&w, &a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

fn run_inspect(a: InspectArgs) -> anyhow::Result<()> {
    let header = io::read_stream_header_file(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let stream =
        io::read_stream_file(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut out = String::new();
    writeln!(
        out,
        "AVTS v{} T={} F={} H={} W={} d={} L={} d_a={} flags={:#x}",
        header.version,
        header.chunks,
        header.frames,
        header.height,
        header.width,
        header.dim,
        header.audio_tokens,
        header.audio_dim,
        header.flags
    )?;
    writeln!(out, "visual tokens per chunk: {}", header.visual_tokens())?;
    writeln!(out, "file bytes: {}", header.file_bytes()?)?;
    writeln!(
        out,
        "chunk  mean_visual_norm  mean_audio_norm  zero_norm_tokens"
    )?;
    let mut zero = 0usize;
    for (t, c) in stream.chunks().iter().enumerate() {
        let norms = |m: &avtc::Matrix| m.iter_rows().map(norm64).collect::<Vec<_>>();
        let (v, au) = (norms(c.visual.embeddings()), norms(c.audio.embeddings()));
        let z = v.iter().chain(&au).filter(|&&n| n == 0.0).count();
        zero += z;
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        writeln!(out, "{t:5}  {:16.6}  {:15.6}  {z:16}", mean(&v), mean(&au))?;
    }
    writeln!(out, "warnings: {zero}")?;
    print_out(&out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compress(a) => run_compress(a),
        Command::GenSynth(a) => run_gen_synth(a),
        Command::EvalRetrieval(a) => run_eval_retrieval(a),
        Command::InitWeights(a) => run_init_weights(a),
        Command::Inspect(a) => run_inspect(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
