use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{
    ExtractionMode, FingerprintError, FingerprintEstimate, MleAccumulator, SdaAccumulator,
};
use crate::denoise::{extract_residual, DenoiseParams, NoiseResidual};
use crate::media_io::{FrameStream, LumaPlane};

/// Execution settings for [`extract_with`].
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub params: DenoiseParams,
    /// Worker threads used for denoising; 1 runs everything on the caller.
    pub jobs: usize,
    /// Averaged frames collected before a parallel denoise round. Does not
    /// affect the result.
    pub batch: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self {
            params: DenoiseParams::default(),
            jobs,
            batch: 2 * jobs,
        }
    }
}

impl ExtractOptions {
    pub fn with_params(params: DenoiseParams) -> Self {
        Self {
            params,
            ..Default::default()
        }
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self.batch = 2 * self.jobs;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionReport {
    pub estimate: FingerprintEstimate,
    /// Frames pulled from the stream.
    pub frames_read: u64,
    /// Frames not selected by the stride filter.
    pub frames_skipped: u64,
    /// Selected frames left over after the last complete group.
    pub frames_dropped: u64,
    pub elapsed: Duration,
}

/// Builds a fingerprint from a stream with default execution settings.
pub fn extract_fingerprint(
    stream: FrameStream,
    mode: ExtractionMode,
    params: &DenoiseParams,
) -> Result<FingerprintEstimate, FingerprintError> {
    extract_with(stream, mode, &ExtractOptions::with_params(params.clone())).map(|r| r.estimate)
}

struct Denoiser<'a> {
    params: &'a DenoiseParams,
    pool: Option<rayon::ThreadPool>,
    ops: AtomicU64,
}

impl Denoiser<'_> {
    fn run(&self, frames: &[LumaPlane]) -> Result<Vec<NoiseResidual>, FingerprintError> {
        let one = |f: &LumaPlane| {
            self.ops.fetch_add(1, Ordering::Relaxed);
            extract_residual(f, self.params).map_err(FingerprintError::from)
        };
        match &self.pool {
            Some(pool) => pool.install(|| frames.par_iter().map(one).collect()),
            None => frames.iter().map(one).collect(),
        }
    }
}

/// Streams frames through averaging, denoising and MLE accumulation.
///
/// Groups are denoised concurrently but always folded into the accumulator in
/// ascending group order, so the result does not depend on `jobs`.
pub fn extract_with(
    stream: FrameStream,
    mode: ExtractionMode,
    opts: &ExtractOptions,
) -> Result<ExtractionReport, FingerprintError> {
    let started = Instant::now();
    let mode = mode.validate()?;
    opts.params.validate()?;
    let depth = mode.averaging_depth();
    let stride = mode.stride() as u64;
    let (w, h) = stream.dimensions();

    let pool = if opts.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.jobs)
                .build()
                .map_err(|e| FingerprintError::BadParameter(e.to_string()))?,
        )
    } else {
        None
    };
    let denoiser = Denoiser {
        params: &opts.params,
        pool,
        ops: AtomicU64::new(0),
    };

    let mut mle = MleAccumulator::new(w, h, mode);
    let mut group = SdaAccumulator::new(w, h, depth);
    let mut batch: Vec<LumaPlane> = Vec::with_capacity(opts.batch.max(1));
    let (mut frames_read, mut frames_skipped) = (0u64, 0u64);

    let flush =
        |batch: &mut Vec<LumaPlane>, mle: &mut MleAccumulator| -> Result<(), FingerprintError> {
            let residuals = denoiser.run(batch)?;
            for (mut residual, frame) in residuals.into_iter().zip(batch.iter()) {
                residual.source_frames = depth;
                mle.accumulate(&residual, frame)?;
            }
            batch.clear();
            Ok(())
        };

    for item in stream.luma() {
        let (index, plane) = item?;
        frames_read += 1;
        if index % stride != 0 {
            frames_skipped += 1;
            continue;
        }
        group.push(&plane)?;
        if group.is_full() {
            batch.push(group.take().expect("full group"));
            if batch.len() >= opts.batch.max(1) {
                flush(&mut batch, &mut mle)?;
            }
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut mle)?;
    }

    if frames_read == 0 {
        return Err(FingerprintError::EmptyStream);
    }
    if mle.residuals_consumed() == 0 {
        return Err(FingerprintError::DepthExceedsFrames {
            depth,
            frames: (frames_read - frames_skipped) as usize,
        });
    }
    let estimate = mle.finalize()?;
    debug_assert_eq!(estimate.denoise_ops, denoiser.ops.load(Ordering::Relaxed));
    Ok(ExtractionReport {
        estimate,
        frames_read,
        frames_skipped,
        frames_dropped: group.count() as u64,
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noisy_frames(n: usize, seed: u64) -> Vec<LumaPlane> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(120.0f32, 4.0).unwrap();
        (0..n)
            .map(|_| LumaPlane::from_fn(32, 32, |_, _| normal.sample(&mut rng)))
            .collect()
    }

    fn run(frames: Vec<LumaPlane>, mode: ExtractionMode, jobs: usize) -> ExtractionReport {
        let stream = FrameStream::from_planes(32, 32, frames);
        extract_with(stream, mode, &ExtractOptions::default().jobs(jobs)).unwrap()
    }

    #[test]
    fn depth_one_matches_conventional_bitwise() {
        let frames = noisy_frames(7, 1);
        let a = run(frames.clone(), ExtractionMode::Conventional, 1);
        let b = run(frames, ExtractionMode::Sda(1), 1);
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn counts_and_drops() {
        let r = run(noisy_frames(10, 2), ExtractionMode::Sda(3), 1);
        assert_eq!(r.estimate.denoise_ops, 3);
        assert_eq!(r.estimate.frames_consumed, 9);
        assert_eq!(r.frames_dropped, 1);
        assert_eq!(r.estimate.mode, ExtractionMode::Sda(3));

        let r = run(noisy_frames(10, 2), ExtractionMode::Stride(4), 1);
        assert_eq!(r.estimate.denoise_ops, 3);
        assert_eq!(r.frames_skipped, 7);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let frames = noisy_frames(9, 3);
        let a = run(frames.clone(), ExtractionMode::Sda(2), 1);
        let b = run(frames.clone(), ExtractionMode::Sda(2), 3);
        let c = extract_with(
            FrameStream::from_planes(32, 32, frames),
            ExtractionMode::Sda(2),
            &ExtractOptions {
                batch: 1,
                ..ExtractOptions::default().jobs(2)
            },
        )
        .unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.estimate, c.estimate);
    }

    #[test]
    fn precondition_errors() {
        let err = extract_with(
            FrameStream::from_planes(32, 32, noisy_frames(4, 4)),
            ExtractionMode::Sda(5),
            &ExtractOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            FingerprintError::DepthExceedsFrames {
                depth: 5,
                frames: 4
            }
        ));
        let err = extract_with(
            FrameStream::from_planes(32, 32, Vec::new()),
            ExtractionMode::Conventional,
            &ExtractOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, FingerprintError::EmptyStream));
    }
}
