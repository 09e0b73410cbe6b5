use std::io::Write;
use std::time::{Duration, Instant};

use super::{compute_fpr, compute_tpr, AnalysisError, Labeled};
use crate::correlate::{blockwise_match, correlate_aligned, BlockGrid, MatchOptions};
use crate::denoise::{extract_residual, DenoiseParams, NoiseResidual};
use crate::fingerprint::{extract_with, ExtractOptions, ExtractionMode, FingerprintEstimate};
use crate::media_io::{FrameStream, LumaPlane};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub mode: ExtractionMode,
}

impl BenchConfig {
    pub fn new(mode: ExtractionMode) -> Self {
        Self {
            mode: mode.canonical(),
        }
    }

    /// One configuration per depth; depth 1 is the conventional pipeline.
    pub fn sda_sweep(depths: &[usize]) -> Vec<Self> {
        depths
            .iter()
            .map(|&d| Self::new(ExtractionMode::Sda(d)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub frame: LumaPlane,
    /// Whether the frame comes from the fingerprinted camera.
    pub positive: bool,
}

/// Training frames held in memory, so timings measure processing rather
/// than decoding, plus labelled query frames.
#[derive(Debug, Clone)]
pub struct BenchCorpus {
    width: usize,
    height: usize,
    frames: Vec<LumaPlane>,
    queries: Vec<Query>,
}

impl BenchCorpus {
    pub fn new(frames: Vec<LumaPlane>, queries: Vec<Query>) -> Result<Self, AnalysisError> {
        let first = frames
            .first()
            .ok_or_else(|| AnalysisError::BadParameter("bench corpus has no frames".into()))?;
        let (width, height) = first.dimensions();
        let all = frames
            .iter()
            .map(|f| f.dimensions())
            .chain(queries.iter().map(|q| q.frame.dimensions()));
        for d in all {
            if d != (width, height) {
                return Err(AnalysisError::BadParameter(format!(
                    "bench frame {d:?} differs from {:?}",
                    (width, height)
                )));
            }
        }
        Ok(Self {
            width,
            height,
            frames,
            queries,
        })
    }

    pub fn from_stream(stream: FrameStream, queries: Vec<Query>) -> Result<Self, AnalysisError> {
        let frames = stream
            .luma()
            .map(|r| r.map(|(_, p)| p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(frames, queries)
    }

    pub fn frames(&self) -> &[LumaPlane] {
        &self.frames
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    fn stream(&self) -> FrameStream {
        FrameStream::from_planes(self.width, self.height, self.frames.clone())
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub params: DenoiseParams,
    pub jobs: usize,
    pub repetitions: usize,
    pub matching: MatchOptions,
    /// Score per block of this size instead of whole frames. Each block then
    /// counts as one trial.
    pub block: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            params: DenoiseParams::default(),
            jobs: ExtractOptions::default().jobs,
            repetitions: 1,
            matching: MatchOptions::default(),
            block: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub mode: ExtractionMode,
    pub frames: u64,
    pub denoise_ops: u64,
    /// Median over repetitions.
    pub time: Duration,
    pub rep_times: Vec<Duration>,
    pub mean_pce: Option<f64>,
    /// Mean over positive trials of this row's PCE divided by the
    /// conventional PCE for the same trial.
    pub pce_ratio: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub speedup: f64,
    pub scores: Vec<Labeled<f64>>,
    pub fingerprint: FingerprintEstimate,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record([
            "mode",
            "depth",
            "frames",
            "denoise_ops",
            "time_s",
            "mean_pce",
            "pce_ratio",
            "tpr",
            "fpr",
            "speedup",
        ])?;
        for r in &self.rows {
            let name = match r.mode {
                ExtractionMode::Conventional => "conventional",
                ExtractionMode::Sda(_) => "sda",
                ExtractionMode::Stride(_) => "stride",
            };
            out.write_record([
                name.to_string(),
                r.mode.depth_field().to_string(),
                r.frames.to_string(),
                r.denoise_ops.to_string(),
                format!("{:.4}", r.time.as_secs_f64()),
                opt(r.mean_pce),
                opt(r.pce_ratio),
                opt(r.tpr),
                opt(r.fpr),
                format!("{:.4}", r.speedup),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn median(times: &mut [Duration]) -> Duration {
    times.sort();
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    }
}

struct Measured {
    fingerprint: FingerprintEstimate,
    rep_times: Vec<Duration>,
    time: Duration,
    trials: Vec<(Labeled<f64>, bool)>,
}

fn measure(
    mode: ExtractionMode,
    corpus: &BenchCorpus,
    residuals: &[NoiseResidual],
    opts: &BenchOptions,
    extract: &ExtractOptions,
) -> Result<Measured, AnalysisError> {
    let mut rep_times = Vec::with_capacity(opts.repetitions);
    let mut fingerprint = None;
    for rep in 0..opts.repetitions {
        let stream = corpus.stream();
        let started = Instant::now();
        let report = extract_with(stream, mode, extract)?;
        let elapsed = started.elapsed();
        log::debug!("{mode} rep {rep}: {:.4}s", elapsed.as_secs_f64());
        rep_times.push(elapsed);
        fingerprint = Some(report.estimate);
    }
    let fingerprint = fingerprint.expect("at least one repetition");
    let time = median(&mut rep_times.clone());

    let grid = opts
        .block
        .map(|b| BlockGrid::new(corpus.width, corpus.height, b))
        .transpose()?;
    let mut trials = Vec::new();
    for (q, w) in corpus.queries.iter().zip(residuals) {
        match &grid {
            Some(grid) => {
                let report = blockwise_match(w, &fingerprint, &q.frame, grid, &opts.matching)?;
                trials.extend(
                    report
                        .tiles
                        .iter()
                        .map(|(_, r)| (Labeled::new(r.pce, q.positive), r.decision)),
                );
            }
            None => {
                let r = correlate_aligned(w, &fingerprint, &q.frame, &opts.matching)?;
                trials.push((Labeled::new(r.pce, q.positive), r.decision));
            }
        }
    }
    Ok(Measured {
        fingerprint,
        rep_times,
        time,
        trials,
    })
}

/// Times each configuration, scores every query against the resulting
/// fingerprint and reports speed and accuracy relative to the conventional
/// pipeline. Rows follow the order of `configs`; a conventional baseline is
/// measured separately when none is listed.
pub fn run_bench(
    configs: &[BenchConfig],
    corpus: &BenchCorpus,
    opts: &BenchOptions,
) -> Result<BenchReport, AnalysisError> {
    if opts.repetitions == 0 {
        return Err(AnalysisError::BadParameter(
            "repetitions must be at least 1".into(),
        ));
    }
    let extract = ExtractOptions {
        params: opts.params.clone(),
        ..ExtractOptions::default().jobs(opts.jobs)
    };
    let residuals = corpus
        .queries
        .iter()
        .map(|q| extract_residual(&q.frame, &opts.params))
        .collect::<Result<Vec<_>, _>>()?;

    let mut measured = Vec::with_capacity(configs.len());
    for c in configs {
        measured.push(measure(
            c.mode.canonical(),
            corpus,
            &residuals,
            opts,
            &extract,
        )?);
    }
    let listed = configs
        .iter()
        .position(|c| c.mode.canonical() == ExtractionMode::Conventional);
    let hidden;
    let baseline = match listed {
        Some(i) => &measured[i],
        None => {
            hidden = measure(
                ExtractionMode::Conventional,
                corpus,
                &residuals,
                opts,
                &extract,
            )?;
            &hidden
        }
    };

    let rows = configs
        .iter()
        .zip(&measured)
        .map(|(c, m)| {
            let decisions: Vec<_> = m
                .trials
                .iter()
                .map(|(l, d)| Labeled::new(*d, l.positive))
                .collect();
            let positives: Vec<_> = m
                .trials
                .iter()
                .filter(|(l, _)| l.positive)
                .map(|(l, _)| l.value)
                .collect();
            let mean_pce = (!positives.is_empty())
                .then(|| positives.iter().sum::<f64>() / positives.len() as f64);
            let ratios: Vec<f64> = m
                .trials
                .iter()
                .zip(&baseline.trials)
                .filter(|((l, _), (b, _))| l.positive && b.value != 0.0)
                .map(|((l, _), (b, _))| l.value / b.value)
                .collect();
            let pce_ratio =
                (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
            BenchRow {
                mode: c.mode.canonical(),
                frames: m.fingerprint.frames_consumed,
                denoise_ops: m.fingerprint.denoise_ops,
                time: m.time,
                rep_times: m.rep_times.clone(),
                mean_pce,
                pce_ratio,
                tpr: compute_tpr(&decisions).ok(),
                fpr: compute_fpr(&decisions),
                speedup: baseline.time.as_secs_f64() / m.time.as_secs_f64().max(1e-9),
                scores: m.trials.iter().map(|(l, _)| *l).collect(),
                fingerprint: m.fingerprint.clone(),
            }
        })
        .collect();
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthcam::{corpus_frame, gen_model, SceneSpec, Scenes};

    #[test]
    fn small_bench() {
        let model = gen_model(64, 64, 0.02, 3.0, 1).unwrap();
        let other = gen_model(64, 64, 0.02, 3.0, 2).unwrap();
        let scenes = Scenes::PerFrame {
            spec: SceneSpec::Flat { luminance: 128.0 },
            seed: 0,
        };
        let frames = (0..12)
            .map(|i| corpus_frame(&model, &scenes, i).unwrap())
            .collect();
        let queries = vec![
            Query {
                frame: corpus_frame(&model, &scenes, 100).unwrap(),
                positive: true,
            },
            Query {
                frame: corpus_frame(&other, &scenes, 100).unwrap(),
                positive: false,
            },
        ];
        let corpus = BenchCorpus::new(frames, queries).unwrap();
        let opts = BenchOptions {
            jobs: 1,
            repetitions: 3,
            ..Default::default()
        };
        let report = run_bench(&BenchConfig::sda_sweep(&[4, 1, 12]), &corpus, &opts).unwrap();
        let ops: Vec<_> = report.rows.iter().map(|r| r.denoise_ops).collect();
        assert_eq!(ops, [3, 12, 1]);
        assert_eq!(report.rows[1].speedup, 1.0);
        assert_eq!(report.rows[1].pce_ratio, Some(1.0));
        assert_eq!(report.rows[0].rep_times.len(), 3);
        assert_eq!(report.rows[1].tpr, Some(1.0));
        assert_eq!(report.rows[1].fpr, Some(0.0));

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "mode,depth,frames,denoise_ops,time_s,mean_pce,pce_ratio,tpr,fpr,speedup"
        );
        assert!(lines[1].starts_with("sda,4,12,3,"));
        assert!(lines[2].starts_with("conventional,1,12,12,"));
        assert!(lines[2].ends_with(",1.0000,0.0000,1.0000"));

        let no_baseline = run_bench(&BenchConfig::sda_sweep(&[6]), &corpus, &opts).unwrap();
        assert_eq!(no_baseline.rows.len(), 1);
        assert!(no_baseline.rows[0].speedup > 0.0);
    }
}
