//! Command-line front end: `extract`, `match`, `synth`, `bench` and `roc`.
//!
//! Exit status is 0 on success or match, 2 on a clean no-match and 1 on any
//! error. Settings come from flags, then an optional `--config` file, then
//! built-in defaults; the resolved values are logged to stderr.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    compute_roc, run_bench, AnalysisError, BenchConfig, BenchCorpus, BenchOptions, Labeled, Query,
};
use crate::correlate::{
    blockwise_match, correlate_aligned, correlate_search, BlockGrid, CorrelateError, MatchOptions,
    Template, DEFAULT_EXCLUSION, DEFAULT_THRESHOLD,
};
use crate::denoise::{extract_residual, DenoiseError, DenoiseParams};
use crate::fingerprint::{
    extract_with, read_fingerprint_file, write_fingerprint_file, ExtractOptions, ExtractionMode,
    FingerprintError, FingerprintEstimate,
};
use crate::media_io::{
    encode_netpbm, open_path, Colorspace, FrameStream, LumaPlane, MediaError, Y4mWriter,
};
use crate::synthcam::{
    corpus_frame, derive_seed, gen_model, render_scene, SceneSpec, Scenes, SynthCameraModel,
    SynthError,
};

pub use config::{ConfigFile, RunConfig};

/// Environment variable read when `--jobs` is not given.
pub const JOBS_ENV: &str = "PRNU_SDA_JOBS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<CliError>,
    },
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn in_file<E: Into<CliError>>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::File {
        path: path.to_path_buf(),
        source: Box::new(e.into()),
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Match,
    NoMatch,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success | Outcome::Match => 0,
            Outcome::NoMatch => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "prnu-sda",
    version,
    about = "PRNU camera fingerprints with frame averaging"
)]
pub struct Cli {
    /// key=value settings file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,
    /// Log per-stage details
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a fingerprint from frames
    Extract(ExtractArgs),
    /// Match a query frame against a fingerprint
    Match(MatchArgs),
    /// Generate a synthetic corpus with its true fingerprint
    Synth(SynthArgs),
    /// Time and score extraction modes on a corpus
    Bench(BenchArgs),
    /// ROC curve from labelled score files
    Roc(RocArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Conventional,
    Sda,
    Stride,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Assumed noise variance of the wavelet filter [default: 9]
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Wavelet decomposition levels [default: 4]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Also apply the frequency-domain Wiener filter to residuals
    #[arg(long)]
    pub dft_wiener: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// A .y4m file, a netpbm directory, or one or more netpbm files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Fingerprint file to write
    #[arg(short, long)]
    pub out: PathBuf,
    /// [default: sda when --depth is given, else conventional]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Frames averaged per denoise (sda)
    #[arg(long)]
    pub depth: Option<usize>,
    /// Keep every k-th frame (stride)
    #[arg(long)]
    pub stride: Option<usize>,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    pub fingerprint: PathBuf,
    pub query: PathBuf,
    /// Score disjoint blocks and print one CSV row per block
    #[arg(long)]
    pub blockwise: bool,
    /// [default: 500]
    #[arg(long)]
    pub block_size: Option<usize>,
    /// PCE must exceed this to match [default: 60]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Allow a query smaller than the fingerprint and locate it
    #[arg(long)]
    pub search_shift: bool,
    /// Correlate against K instead of K times the query
    #[arg(long)]
    pub raw_template: bool,
    /// Index of the query frame within the media [default: 0]
    #[arg(long)]
    pub frame: Option<usize>,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    Flat,
    Textured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Y4m,
    Pgm,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(short, long)]
    pub out: PathBuf,
    /// [default: 256]
    #[arg(long)]
    pub width: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    pub height: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub frames: Option<usize>,
    /// PRNU standard deviation [default: 0.02]
    #[arg(long)]
    pub sigma_k: Option<f32>,
    /// Sensor noise standard deviation [default: 3]
    #[arg(long)]
    pub sigma1: Option<f32>,
    /// [default: flat]
    #[arg(long, value_enum)]
    pub scene: Option<SceneArg>,
    /// Flat scene level [default: 128]
    #[arg(long)]
    pub luminance: Option<f32>,
    /// Texture blur standard deviation in pixels [default: 8]
    #[arg(long)]
    pub cutoff: Option<f32>,
    /// Texture standard deviation [default: 60]
    #[arg(long)]
    pub contrast: Option<f32>,
    /// Render a new scene every frame instead of one fixed scene
    #[arg(long)]
    pub scene_per_frame: bool,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: y4m]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Held-out frames from the same camera, written to queries.y4m [default: 0]
    #[arg(long)]
    pub queries: Option<usize>,
    /// Frames from a different camera, written to impostors.y4m [default: 0]
    #[arg(long)]
    pub impostors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    /// Comma-separated SDA depths, 1 = conventional [default: 1,10,50]
    #[arg(long)]
    pub depths: Option<String>,
    /// Comma-separated strides benchmarked after the depths
    #[arg(long)]
    pub strides: Option<String>,
    /// Timing repetitions; the median is reported [default: 1]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Frames from the fingerprinted camera
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Frames from other cameras
    #[arg(long)]
    pub impostors: Option<PathBuf>,
    /// Score blocks of this size instead of whole frames
    #[arg(long)]
    pub block_size: Option<usize>,
    /// [default: 60]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write per-trial scores (pce,label) for every row to this directory
    #[arg(long)]
    pub scores_dir: Option<PathBuf>,
    #[command(flatten)]
    pub denoise: DenoiseArgs,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    /// Directory of CSV files with `pce` and `label` columns
    pub dir: PathBuf,
}

/// Parses arguments and runs; errors are reported on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.verbose { "debug" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let default_jobs = ExtractOptions::default().jobs;
    let jobs = file.resolve(cli.jobs, "jobs", default_jobs)?;
    if jobs == 0 {
        return Err(CliError::Usage("jobs must be at least 1".into()));
    }
    let ctx = Context { file, jobs };
    match cli.command {
        Command::Extract(a) => ctx.extract(a, out),
        Command::Match(a) => ctx.matching(a, out),
        Command::Synth(a) => ctx.synth(a),
        Command::Bench(a) => ctx.bench(a, out),
        Command::Roc(a) => ctx.roc(a, out),
    }
}

struct Context {
    file: ConfigFile,
    jobs: usize,
}

fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad list entry {t:?}")))
        })
        .collect()
}

fn open_inputs(inputs: &[PathBuf]) -> Result<FrameStream, CliError> {
    match inputs {
        [single] => Ok(open_path(single)?),
        many => Ok(FrameStream::from_netpbm_paths(many.to_vec())?),
    }
}

fn read_frames(path: &Path) -> Result<Vec<LumaPlane>, CliError> {
    open_path(path)?
        .luma()
        .map(|r| r.map(|(_, p)| p).map_err(CliError::from))
        .collect()
}

impl Context {
    fn flag(&self, set: bool, key: &str) -> Result<bool, CliError> {
        self.file.resolve(set.then_some(true), key, false)
    }

    fn denoise(&self, a: &DenoiseArgs, rc: &mut RunConfig) -> Result<DenoiseParams, CliError> {
        let d = DenoiseParams::default();
        let params = DenoiseParams {
            sigma0_sq: self.file.resolve(a.sigma0_sq, "sigma0-sq", d.sigma0_sq)?,
            wavelet_levels: self.file.resolve(a.levels, "levels", d.wavelet_levels)?,
            dft_wiener: self.flag(a.dft_wiener, "dft-wiener")?,
            ..d
        };
        params.validate()?;
        rc.set("sigma0-sq", params.sigma0_sq);
        rc.set("levels", params.wavelet_levels);
        rc.set("dft-wiener", params.dft_wiener);
        Ok(params)
    }

    fn start(&self, command: &str) -> RunConfig {
        let mut rc = RunConfig::new(command);
        rc.set("jobs", self.jobs);
        rc
    }

    fn extract(&self, a: ExtractArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
        let mut rc = self.start("extract");
        let depth = a.depth.or(self.file.get("depth")?);
        let stride = a.stride.or(self.file.get("stride")?);
        let mode_name: Option<String> = match a.mode {
            Some(m) => Some(format!("{m:?}").to_lowercase()),
            None => self.file.get("mode")?,
        };
        let mode = match (mode_name.as_deref(), depth, stride) {
            (Some("conventional"), _, _) | (None, None, None) => ExtractionMode::Conventional,
            (Some("sda") | None, Some(d), _) => ExtractionMode::Sda(d),
            (Some("stride") | None, _, Some(k)) => ExtractionMode::Stride(k),
            (Some("sda"), None, _) => {
                return Err(CliError::Usage("--mode sda needs --depth".into()))
            }
            (Some("stride"), _, None) => {
                return Err(CliError::Usage("--mode stride needs --stride".into()))
            }
            (Some(other), _, _) => return Err(CliError::Usage(format!("unknown mode {other:?}"))),
        };
        rc.set("mode", mode.canonical());
        rc.set("out", a.out.display());
        let params = self.denoise(&a.denoise, &mut rc)?;
        log::info!("resolved config:\n{rc}");

        let stream = open_inputs(&a.inputs)?;
        let opts = ExtractOptions {
            params,
            ..ExtractOptions::default().jobs(self.jobs)
        };
        let report = extract_with(stream, mode, &opts)?;
        write_fingerprint_file(&report.estimate, &a.out).map_err(in_file(&a.out))?;
        log::info!(
            "read {} frames, skipped {}, dropped {}",
            report.frames_read,
            report.frames_skipped,
            report.frames_dropped
        );
        writeln!(
            out,
            "frames={} denoise_ops={} elapsed={:.4}s",
            report.estimate.frames_consumed,
            report.estimate.denoise_ops,
            report.elapsed.as_secs_f64()
        )?;
        Ok(Outcome::Success)
    }

    fn matching(&self, a: MatchArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
        let mut rc = self.start("match");
        let blockwise = self.flag(a.blockwise, "blockwise")?;
        let block = self
            .file
            .resolve(a.block_size, "block-size", BlockGrid::DEFAULT_BLOCK)?;
        let threshold = self
            .file
            .resolve(a.threshold, "threshold", DEFAULT_THRESHOLD)?;
        let search = self.flag(a.search_shift, "search-shift")?;
        let raw = self.flag(a.raw_template, "raw-template")?;
        let index = self.file.resolve(a.frame, "frame", 0usize)?;
        rc.set("blockwise", blockwise);
        rc.set("block-size", block);
        rc.set("threshold", threshold);
        rc.set("search-shift", search);
        rc.set("raw-template", raw);
        rc.set("frame", index);
        let params = self.denoise(&a.denoise, &mut rc)?;
        log::info!("resolved config:\n{rc}");

        let fp = read_fingerprint_file(&a.fingerprint).map_err(in_file(&a.fingerprint))?;
        let query = open_path(&a.query)?
            .luma()
            .nth(index)
            .ok_or_else(|| CliError::Usage(format!("{}: no frame {index}", a.query.display())))??
            .1;
        let residual = extract_residual(&query, &params)?;
        let opts = MatchOptions {
            threshold,
            exclusion: DEFAULT_EXCLUSION,
            template: if raw {
                Template::Raw
            } else {
                Template::Weighted
            },
        };

        let same_size = query.dimensions() == fp.dimensions();
        if !same_size && !search {
            return Err(CliError::Usage(format!(
                "query is {:?} but fingerprint is {:?}; pass --search-shift to locate a crop",
                query.dimensions(),
                fp.dimensions()
            )));
        }
        let matched = if blockwise {
            if !same_size {
                return Err(CliError::Usage("--blockwise needs equal sizes".into()));
            }
            let grid = BlockGrid::new(fp.dimensions().0, fp.dimensions().1, block)?;
            let report = blockwise_match(&residual, &fp, &query, &grid, &opts)?;
            report.write_csv(&mut *out)?;
            log::info!(
                "{} of {} blocks matched",
                report.positive_tiles(),
                report.tiles.len()
            );
            report.frame_decision()
        } else {
            let r = if same_size {
                correlate_aligned(&residual, &fp, &query, &opts)?
            } else {
                correlate_search(&residual, &fp, &query, &opts)?
            };
            writeln!(
                out,
                "pce={:.4} ncc={:.4} dx={} dy={} decision={}",
                r.pce,
                r.ncc_peak,
                r.peak_shift.0,
                r.peak_shift.1,
                if r.decision { "match" } else { "no-match" }
            )?;
            r.decision
        };
        Ok(if matched {
            Outcome::Match
        } else {
            Outcome::NoMatch
        })
    }

    fn synth(&self, a: SynthArgs) -> Result<Outcome, CliError> {
        let mut rc = self.start("synth");
        let f = &self.file;
        let width = f.resolve(a.width, "width", 256usize)?;
        let height = f.resolve(a.height, "height", 256usize)?;
        let frames = f.resolve(a.frames, "frames", 100usize)?;
        let sigma_k = f.resolve(a.sigma_k, "sigma-k", 0.02f32)?;
        let sigma1 = f.resolve(a.sigma1, "sigma1", 3.0f32)?;
        let scene: String = f.resolve(
            a.scene.map(|s| format!("{s:?}").to_lowercase()),
            "scene",
            "flat".into(),
        )?;
        let luminance = f.resolve(a.luminance, "luminance", 128.0f32)?;
        let cutoff = f.resolve(a.cutoff, "cutoff", 8.0f32)?;
        let contrast = f.resolve(a.contrast, "contrast", 60.0f32)?;
        let per_frame = self.flag(a.scene_per_frame, "scene-per-frame")?;
        let seed = f.resolve(a.seed, "seed", 0u64)?;
        let format: String = f.resolve(
            a.format.map(|s| format!("{s:?}").to_lowercase()),
            "format",
            "y4m".into(),
        )?;
        let queries = f.resolve(a.queries, "queries", 0usize)?;
        let impostors = f.resolve(a.impostors, "impostors", 0usize)?;
        for (k, v) in [
            ("out", a.out.display().to_string()),
            ("width", width.to_string()),
            ("height", height.to_string()),
            ("frames", frames.to_string()),
            ("sigma-k", sigma_k.to_string()),
            ("sigma1", sigma1.to_string()),
            ("scene", scene.clone()),
            ("luminance", luminance.to_string()),
            ("cutoff", cutoff.to_string()),
            ("contrast", contrast.to_string()),
            ("scene-per-frame", per_frame.to_string()),
            ("seed", seed.to_string()),
            ("format", format.clone()),
            ("queries", queries.to_string()),
            ("impostors", impostors.to_string()),
        ] {
            rc.set(k, v);
        }
        log::info!("resolved config:\n{rc}");

        if frames == 0 {
            return Err(CliError::Usage("--frames must be at least 1".into()));
        }
        let spec = match scene.as_str() {
            "flat" => SceneSpec::Flat { luminance },
            "textured" => SceneSpec::Textured { cutoff, contrast },
            other => return Err(CliError::Usage(format!("unknown scene {other:?}"))),
        };
        let scene_seed = derive_seed(seed, u64::MAX);
        let scenes = if per_frame {
            Scenes::PerFrame {
                spec,
                seed: scene_seed,
            }
        } else {
            Scenes::fixed(render_scene(spec, width, height, scene_seed)?)
        };
        let model = gen_model(width, height, sigma_k, sigma1, seed)?;
        std::fs::create_dir_all(&a.out).map_err(in_file(&a.out))?;

        match format.as_str() {
            "y4m" => write_y4m(
                &a.out.join("corpus.y4m"),
                width,
                height,
                render(&model, &scenes, 0..frames as u64),
            )?,
            "pgm" => {
                let dir = a.out.join("frames");
                std::fs::create_dir_all(&dir).map_err(in_file(&dir))?;
                for (i, frame) in render(&model, &scenes, 0..frames as u64).enumerate() {
                    let path = dir.join(format!("frame_{i:05}.pgm"));
                    let bytes = encode_netpbm(&frame?.into());
                    std::fs::write(&path, bytes).map_err(in_file(&path))?;
                }
            }
            other => return Err(CliError::Usage(format!("unknown format {other:?}"))),
        }

        // Held-out material always uses fresh scenes so it never repeats a
        // training frame's content.
        let fresh = Scenes::PerFrame {
            spec,
            seed: derive_seed(scene_seed, 1),
        };
        let first = frames as u64;
        if queries > 0 {
            let range = first..first + queries as u64;
            write_y4m(
                &a.out.join("queries.y4m"),
                width,
                height,
                render(&model, &fresh, range),
            )?;
        }
        if impostors > 0 {
            let other = gen_model(
                width,
                height,
                sigma_k,
                sigma1,
                derive_seed(seed, u64::MAX - 1),
            )?;
            let range = first..first + impostors as u64;
            write_y4m(
                &a.out.join("impostors.y4m"),
                width,
                height,
                render(&other, &fresh, range),
            )?;
        }

        let truth = FingerprintEstimate {
            khat: model.k_field,
            frames_consumed: 0,
            denoise_ops: 0,
            mode: ExtractionMode::Conventional,
        };
        let path = a.out.join("truth.fp");
        write_fingerprint_file(&truth, &path).map_err(in_file(&path))?;
        Ok(Outcome::Success)
    }

    fn bench(&self, a: BenchArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
        let mut rc = self.start("bench");
        let depths = parse_list(
            &self
                .file
                .resolve(a.depths, "depths", "1,10,50".to_string())?,
        )?;
        let strides = parse_list(&self.file.resolve(a.strides, "strides", String::new())?)?;
        let reps = self.file.resolve(a.reps, "reps", 1usize)?;
        let block: Option<usize> = a.block_size.or(self.file.get("block-size")?);
        let threshold = self
            .file
            .resolve(a.threshold, "threshold", DEFAULT_THRESHOLD)?;
        let queries: Option<PathBuf> = a.queries.or(self.file.get("queries")?);
        let impostors: Option<PathBuf> = a.impostors.or(self.file.get("impostors")?);
        let scores_dir: Option<PathBuf> = a.scores_dir.or(self.file.get("scores-dir")?);
        rc.set("corpus", a.corpus.display());
        rc.set("depths", format!("{depths:?}"));
        rc.set("strides", format!("{strides:?}"));
        rc.set("reps", reps);
        rc.set("block-size", block.map_or("none".into(), |b| b.to_string()));
        rc.set("threshold", threshold);
        let params = self.denoise(&a.denoise, &mut rc)?;
        log::info!("resolved config:\n{rc}");

        if depths.is_empty() && strides.is_empty() {
            return Err(CliError::Usage("no depths or strides to benchmark".into()));
        }
        let mut labelled = Vec::new();
        for (path, positive) in [(&queries, true), (&impostors, false)] {
            if let Some(p) = path {
                labelled.extend(
                    read_frames(p)?
                        .into_iter()
                        .map(|frame| Query { frame, positive }),
                );
            }
        }
        let corpus = BenchCorpus::new(read_frames(&a.corpus)?, labelled)?;
        let mut configs = BenchConfig::sda_sweep(&depths);
        configs.extend(
            strides
                .iter()
                .map(|&k| BenchConfig::new(ExtractionMode::Stride(k))),
        );
        let opts = BenchOptions {
            params,
            jobs: self.jobs,
            repetitions: reps,
            matching: MatchOptions {
                threshold,
                ..MatchOptions::default()
            },
            block,
        };
        let report = run_bench(&configs, &corpus, &opts)?;
        for row in &report.rows {
            let times: Vec<_> = row
                .rep_times
                .iter()
                .map(|t| format!("{:.4}", t.as_secs_f64()))
                .collect();
            log::debug!("{}: rep times {}", row.mode, times.join(" "));
        }
        if let Some(dir) = scores_dir {
            std::fs::create_dir_all(&dir).map_err(in_file(&dir))?;
            for row in &report.rows {
                let name = format!("{}_{}.csv", row.mode.tag_name(), row.mode.depth_field());
                let path = dir.join(name);
                write_scores(&path, &row.scores).map_err(in_file(&path))?;
            }
        }
        report.write_csv(out)?;
        Ok(Outcome::Success)
    }

    fn roc(&self, a: RocArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
        let mut rc = self.start("roc");
        rc.set("dir", a.dir.display());
        log::info!("resolved config:\n{rc}");
        let mut files: Vec<PathBuf> = std::fs::read_dir(&a.dir)
            .map_err(in_file(&a.dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Usage(format!(
                "{}: no .csv files",
                a.dir.display()
            )));
        }
        let mut scores = Vec::new();
        for path in &files {
            scores.extend(read_scores(path).map_err(in_file(path))?);
        }
        let curve = compute_roc(&scores)?;
        log::info!(
            "{} scores from {} files, auc={:.4}",
            scores.len(),
            files.len(),
            curve.auc()
        );
        curve.write_csv(out)?;
        Ok(Outcome::Success)
    }
}

impl ExtractionMode {
    fn tag_name(self) -> &'static str {
        match self.canonical() {
            ExtractionMode::Conventional => "conventional",
            ExtractionMode::Sda(_) => "sda",
            ExtractionMode::Stride(_) => "stride",
        }
    }
}

fn render<'a>(
    model: &'a SynthCameraModel,
    scenes: &'a Scenes,
    range: Range<u64>,
) -> impl Iterator<Item = Result<LumaPlane, SynthError>> + 'a {
    range.map(move |i| corpus_frame(model, scenes, i))
}

fn write_y4m<I>(path: &Path, width: usize, height: usize, frames: I) -> Result<(), CliError>
where
    I: Iterator<Item = Result<LumaPlane, SynthError>>,
{
    let file = std::fs::File::create(path).map_err(in_file(path))?;
    let mut writer = Y4mWriter::new(
        std::io::BufWriter::new(file),
        width,
        height,
        Colorspace::C420,
    )?;
    for frame in frames {
        writer.write_luma(&frame?)?;
    }
    writer.finish()?.flush()?;
    Ok(())
}

fn write_scores(path: &Path, scores: &[Labeled<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["pce", "label"])?;
    for s in scores {
        w.write_record([format!("{:.4}", s.value), (s.positive as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "positive" | "match" => Some(true),
        "0" | "-1" | "false" | "negative" | "mismatch" => Some(false),
        _ => None,
    }
}

/// Reads a CSV with `pce` and `label` columns (label 1/0, true/false or
/// positive/negative).
pub fn read_scores(path: &Path) -> Result<Vec<Labeled<f64>>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| CliError::Usage(format!("missing {name:?} column")))
    };
    let (pce, label) = (col("pce")?, col("label")?);
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| CliError::Usage(format!("record {}: bad {what}", n + 1));
        let value: f64 = rec
            .get(pce)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad("pce"))?;
        let positive = rec
            .get(label)
            .and_then(parse_label)
            .ok_or_else(|| bad("label"))?;
        out.push(Labeled::new(value, positive));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from([
            "prnu-sda", "extract", "a.y4m", "-o", "x.fp", "--depth", "30",
        ])
        .unwrap();
        match cli.command {
            Command::Extract(a) => {
                assert_eq!(a.depth, Some(30));
                assert_eq!(a.mode, None);
            }
            _ => panic!("wrong command"),
        }
        let cli = Cli::try_parse_from([
            "prnu-sda",
            "--jobs",
            "3",
            "match",
            "k.fp",
            "q.pgm",
            "--blockwise",
        ])
        .unwrap();
        assert_eq!(cli.jobs, Some(3));
        assert!(Cli::try_parse_from(["prnu-sda", "frobnicate"]).is_err());
    }

    #[test]
    fn lists_and_labels() {
        assert_eq!(parse_list("1, 10,50").unwrap(), [1, 10, 50]);
        assert!(parse_list("1,x").is_err());
        assert_eq!(parse_label("Positive"), Some(true));
        assert_eq!(parse_label("0"), Some(false));
        assert_eq!(parse_label("maybe"), None);
    }

    #[test]
    fn outcome_codes() {
        assert_eq!(Outcome::Success.code(), 0);
        assert_eq!(Outcome::Match.code(), 0);
        assert_eq!(Outcome::NoMatch.code(), 2);
    }
}
