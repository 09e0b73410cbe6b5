//! Fingerprint estimation from frame collections.
//!
//! Three extraction modes share one pipeline:
//!
//! * **conventional** denoises every frame,
//! * **SDA(d)** averages each run of `d` consecutive frames into one
//!   spatial-domain-averaged frame and denoises only that,
//! * **stride(k)** keeps every `k`-th frame (an I-frame stand-in) and
//!   proceeds conventionally.
//!
//! Residuals are combined by the maximum-likelihood estimate
//! `K = sum(W_i * I_i) / sum(I_i^2)`, with the (averaged) frame itself as
//! `I_i`.

mod pipeline;
mod store;

use std::ops::Range;

use crate::denoise::{zero_mean_in_place, DenoiseError, NoiseResidual};
use crate::media_io::{LumaPlane, MediaError};

pub use pipeline::{extract_fingerprint, extract_with, ExtractOptions, ExtractionReport};
pub use store::{
    load_fingerprint, read_fingerprint_file, save_fingerprint, write_fingerprint_file,
};

/// Floor applied to `sum(I^2)` so dark or dead pixels stay finite.
pub const MLE_EPSILON: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum FingerprintError {
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error("depth {depth} exceeds the {frames} available frames")]
    DepthExceedsFrames { depth: usize, frames: usize },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("no contributions were accumulated")]
    EmptyAccumulator,
    #[error("input stream contains no frames")]
    EmptyStream,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("not a fingerprint file (bad magic)")]
    BadMagic,
    #[error("unsupported fingerprint file version {0}")]
    VersionMismatch(u16),
    #[error("fingerprint file is truncated")]
    TruncatedFile,
    #[error("plane checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt fingerprint file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a fingerprint's residuals were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractionMode {
    Conventional,
    /// Average groups of `d` frames before denoising.
    Sda(usize),
    /// Keep frames whose index is a multiple of `k`.
    Stride(usize),
}

impl ExtractionMode {
    /// Depth-1 averaging and stride 1 are the conventional pipeline.
    pub fn canonical(self) -> Self {
        match self {
            Self::Sda(1) | Self::Stride(1) => Self::Conventional,
            m => m,
        }
    }

    /// Frames averaged per denoise operation.
    pub fn averaging_depth(self) -> usize {
        match self.canonical() {
            Self::Sda(d) => d,
            _ => 1,
        }
    }

    pub fn stride(self) -> usize {
        match self.canonical() {
            Self::Stride(k) => k,
            _ => 1,
        }
    }

    /// The value stored in a fingerprint's `depth` field: the SDA depth, the
    /// stride for stride mode, 1 for conventional.
    pub fn depth_field(self) -> usize {
        match self.canonical() {
            Self::Conventional => 1,
            Self::Sda(d) => d,
            Self::Stride(k) => k,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self.canonical() {
            Self::Conventional => 0,
            Self::Sda(_) => 1,
            Self::Stride(_) => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8, depth: usize) -> Option<Self> {
        match (tag, depth) {
            (0, 1) => Some(Self::Conventional),
            (1, d) if d > 1 => Some(Self::Sda(d)),
            (2, k) if k > 1 => Some(Self::Stride(k)),
            _ => None,
        }
    }

    pub(crate) fn validate(self) -> Result<Self, FingerprintError> {
        match self {
            Self::Sda(0) | Self::Stride(0) => Err(FingerprintError::BadParameter(format!(
                "{self} needs a positive depth"
            ))),
            m => Ok(m.canonical()),
        }
    }
}

impl std::fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Conventional => "conventional".to_string(),
            Self::Sda(d) => format!("sda({d})"),
            Self::Stride(k) => format!("stride({k})"),
        };
        f.pad(&s)
    }
}

/// Contiguous, disjoint, equally sized frame groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPlan {
    pub groups: Vec<Range<usize>>,
    /// Trailing frames (`m mod d`) left out so every group has `d` frames.
    pub dropped: usize,
}

pub fn plan_groups(frame_count: usize, depth: usize) -> Result<GroupPlan, FingerprintError> {
    if frame_count == 0 || depth == 0 {
        return Err(FingerprintError::BadParameter(format!(
            "frame count and depth must be positive (m={frame_count}, d={depth})"
        )));
    }
    if depth > frame_count {
        return Err(FingerprintError::DepthExceedsFrames {
            depth,
            frames: frame_count,
        });
    }
    let groups = (0..frame_count / depth)
        .map(|g| g * depth..(g + 1) * depth)
        .collect();
    Ok(GroupPlan {
        groups,
        dropped: frame_count % depth,
    })
}

/// Running sum of up to `target_depth` frames.
#[derive(Debug, Clone)]
pub struct SdaAccumulator {
    width: usize,
    height: usize,
    running_sum: Vec<f64>,
    count: usize,
    target_depth: usize,
}

impl SdaAccumulator {
    pub fn new(width: usize, height: usize, target_depth: usize) -> Self {
        Self {
            width,
            height,
            running_sum: vec![0.0; width * height],
            count: 0,
            target_depth: target_depth.max(1),
        }
    }

    pub fn push(&mut self, frame: &LumaPlane) -> Result<(), FingerprintError> {
        if frame.dimensions() != (self.width, self.height) {
            return Err(FingerprintError::DimensionMismatch {
                expected: (self.width, self.height),
                found: frame.dimensions(),
            });
        }
        if self.is_full() {
            return Err(FingerprintError::BadParameter(format!(
                "group already holds {} frames",
                self.target_depth
            )));
        }
        for (s, &v) in self.running_sum.iter_mut().zip(frame.data()) {
            *s += v as f64;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_full(&self) -> bool {
        self.count == self.target_depth
    }

    /// Emits the mean of the absorbed frames and resets the accumulator.
    pub fn take(&mut self) -> Option<LumaPlane> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let data = self.running_sum.iter().map(|&s| (s / n) as f32).collect();
        self.running_sum.fill(0.0);
        self.count = 0;
        Some(LumaPlane::from_vec_unchecked(self.width, self.height, data))
    }
}

/// Element-wise arithmetic mean of equally sized frames.
pub fn sda_average(frames: &[LumaPlane]) -> Result<LumaPlane, FingerprintError> {
    let first = frames.first().ok_or(FingerprintError::EmptyAccumulator)?;
    let (w, h) = first.dimensions();
    let mut acc = SdaAccumulator::new(w, h, frames.len());
    for f in frames {
        acc.push(f)?;
    }
    Ok(acc.take().expect("at least one frame"))
}

/// Numerator and denominator planes of the MLE fingerprint.
#[derive(Debug, Clone)]
pub struct MleAccumulator {
    width: usize,
    height: usize,
    sum_wi: Vec<f64>,
    sum_i2: Vec<f64>,
    frames_consumed: u64,
    residuals_consumed: u64,
    mode: ExtractionMode,
}

impl MleAccumulator {
    pub fn new(width: usize, height: usize, mode: ExtractionMode) -> Self {
        Self {
            width,
            height,
            sum_wi: vec![0.0; width * height],
            sum_i2: vec![0.0; width * height],
            frames_consumed: 0,
            residuals_consumed: 0,
            mode: mode.canonical(),
        }
    }

    /// Adds `W * I` and `I^2`. `source` is the frame the residual was
    /// extracted from; the residual's `source_frames` advances the frame count.
    pub fn accumulate(
        &mut self,
        residual: &NoiseResidual,
        source: &LumaPlane,
    ) -> Result<(), FingerprintError> {
        let dims = (self.width, self.height);
        for found in [residual.dimensions(), source.dimensions()] {
            if found != dims {
                return Err(FingerprintError::DimensionMismatch {
                    expected: dims,
                    found,
                });
            }
        }
        let w = residual.plane().data();
        let img = source.data();
        for (((swi, si2), &wv), &iv) in self
            .sum_wi
            .iter_mut()
            .zip(self.sum_i2.iter_mut())
            .zip(w)
            .zip(img)
        {
            let i = iv as f64;
            *swi += wv as f64 * i;
            *si2 += i * i;
        }
        self.frames_consumed += residual.source_frames as u64;
        self.residuals_consumed += 1;
        Ok(())
    }

    pub fn sum_wi(&self) -> &[f64] {
        &self.sum_wi
    }

    pub fn sum_i2(&self) -> &[f64] {
        &self.sum_i2
    }

    pub fn frames_consumed(&self) -> u64 {
        self.frames_consumed
    }

    pub fn residuals_consumed(&self) -> u64 {
        self.residuals_consumed
    }

    /// `sum(W I) / max(sum(I^2), eps)` before zero-mean cleanup.
    pub fn raw_estimate(&self) -> Result<LumaPlane, FingerprintError> {
        if self.residuals_consumed == 0 {
            return Err(FingerprintError::EmptyAccumulator);
        }
        let data = self
            .sum_wi
            .iter()
            .zip(&self.sum_i2)
            .map(|(&n, &d)| (n / d.max(MLE_EPSILON)) as f32)
            .collect();
        Ok(LumaPlane::from_vec_unchecked(self.width, self.height, data))
    }

    pub fn finalize(&self) -> Result<FingerprintEstimate, FingerprintError> {
        let mut khat = self.raw_estimate()?;
        zero_mean_in_place(&mut khat);
        Ok(FingerprintEstimate {
            khat,
            frames_consumed: self.frames_consumed,
            denoise_ops: self.residuals_consumed,
            mode: self.mode,
        })
    }
}

/// A camera fingerprint `K` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintEstimate {
    pub khat: LumaPlane,
    /// Source frames that contributed (dropped remainder frames excluded).
    pub frames_consumed: u64,
    /// Number of denoising operations performed.
    pub denoise_ops: u64,
    pub mode: ExtractionMode,
}

impl FingerprintEstimate {
    pub fn dimensions(&self) -> (usize, usize) {
        self.khat.dimensions()
    }

    pub fn depth(&self) -> usize {
        self.mode.depth_field()
    }
}
