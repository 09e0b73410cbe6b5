//! Matching residuals against fingerprints: FFT-based normalised
//! cross-correlation, peak-to-correlation-energy scoring and block-wise
//! evaluation.

mod blocks;

use rustfft::num_complex::Complex64;

use crate::denoise::NoiseResidual;
use crate::fft::Fft2d;
use crate::fingerprint::FingerprintEstimate;
use crate::media_io::LumaPlane;

pub use blocks::{blockwise_match, BlockGrid, MatchReport, Tile};

/// Default decision threshold on PCE.
pub const DEFAULT_THRESHOLD: f64 = 60.0;
/// Default half-width of the square excluded around the peak (11 x 11).
pub const DEFAULT_EXCLUSION: usize = 5;
/// Upper bound on |PCE|; reached when the background has no energy.
pub const PCE_CAP: f64 = 1e12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorrelateError {
    #[error("input plane has zero variance")]
    ConstantInput,
    #[error("dimension mismatch: {a:?} vs {b:?}")]
    DimensionMismatch {
        a: (usize, usize),
        b: (usize, usize),
    },
    #[error("correlation surface is degenerate")]
    DegenerateSurface,
    #[error("frame {frame:?} is smaller than a {block}x{block} block")]
    FrameSmallerThanBlock { frame: (usize, usize), block: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Circular normalised cross-correlation over all shifts.
///
/// `at(dx, dy)` is the correlation of `a` with `b` displaced by `(dx, dy)`,
/// so a copy of `a` circularly shifted by `(dx, dy)` peaks there.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSurface {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl CorrelationSurface {
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, dx: usize, dy: usize) -> f64 {
        self.values[dy * self.width + dx]
    }

    /// Maps a raw surface offset to a signed shift in `(-n/2, n/2]`.
    pub fn signed_shift(&self, dx: usize, dy: usize) -> (i64, i64) {
        let wrap = |v: usize, n: usize| {
            if v > n / 2 {
                v as i64 - n as i64
            } else {
                v as i64
            }
        };
        (wrap(dx, self.width), wrap(dy, self.height))
    }

    /// Position of the largest |value|; ties resolve to the first in
    /// row-major order.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }
}

/// Mean-removed copy of the plane and its L2 norm.
pub(crate) fn centered(plane: &LumaPlane) -> (Vec<f64>, f64) {
    let mean = plane.mean();
    let v: Vec<f64> = plane.data().iter().map(|&x| x as f64 - mean).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (v, norm)
}

pub fn ncc_surface(a: &LumaPlane, b: &LumaPlane) -> Result<CorrelationSurface, CorrelateError> {
    if a.dimensions() != b.dimensions() {
        return Err(CorrelateError::DimensionMismatch {
            a: a.dimensions(),
            b: b.dimensions(),
        });
    }
    let (av, an) = centered(a);
    let (bv, bn) = centered(b);
    if an == 0.0 || bn == 0.0 || !an.is_finite() || !bn.is_finite() {
        return Err(CorrelateError::ConstantInput);
    }
    let (w, h) = a.dimensions();
    Ok(correlate_centered(&av, &bv, w, h, an * bn))
}

/// Cross-correlates two real, already centred planes with one complex FFT
/// (`a` in the real part, `b` in the imaginary part) and divides by `scale`.
pub(crate) fn correlate_centered(
    a: &[f64],
    b: &[f64],
    w: usize,
    h: usize,
    scale: f64,
) -> CorrelationSurface {
    let fft = Fft2d::new(w, h);
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    fft.forward(&mut z);
    let n = w * h;
    let mut product = vec![Complex64::default(); n];
    for ky in 0..h {
        let my = (h - ky) % h;
        for kx in 0..w {
            let mx = (w - kx) % w;
            let zk = z[ky * w + kx];
            let zm = z[my * w + mx].conj();
            let fa = (zk + zm) * 0.5;
            let fb = (zk - zm) * Complex64::new(0.0, -0.5);
            product[ky * w + kx] = fa.conj() * fb;
        }
    }
    fft.inverse(&mut product);
    let norm = scale * n as f64;
    let values = product.iter().map(|c| c.re / norm).collect();
    CorrelationSurface::from_values(w, h, values)
}

/// PCE evaluated at a fixed peak location.
pub fn pce_at(
    surface: &CorrelationSurface,
    peak: (usize, usize),
    exclusion: usize,
) -> Result<f64, CorrelateError> {
    let (w, h) = (surface.width, surface.height);
    let values = &surface.values;
    if values.iter().all(|&v| v == values[0]) {
        return Err(CorrelateError::DegenerateSurface);
    }
    let near = |d: usize, p: usize, n: usize| {
        let dist = d.abs_diff(p);
        dist.min(n - dist) <= exclusion
    };
    let (mut energy, mut count) = (0.0, 0usize);
    for y in 0..h {
        let near_y = near(y, peak.1, h);
        for x in 0..w {
            if near_y && near(x, peak.0, w) {
                continue;
            }
            let v = values[y * w + x];
            energy += v * v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(CorrelateError::DegenerateSurface);
    }
    let p = surface.at(peak.0, peak.1);
    let background = energy / count as f64;
    let pce = if background > 0.0 {
        (p * p / background).min(PCE_CAP)
    } else {
        PCE_CAP
    };
    Ok(pce.copysign(p))
}

/// Peak-to-correlation energy at the largest-magnitude peak. Returns the
/// signed PCE and the signed peak shift.
pub fn pce(
    surface: &CorrelationSurface,
    exclusion: usize,
) -> Result<(f64, (i64, i64)), CorrelateError> {
    let peak = surface.argmax_abs();
    let value = pce_at(surface, peak, exclusion)?;
    Ok((value, surface.signed_shift(peak.0, peak.1)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub pce: f64,
    pub peak_shift: (i64, i64),
    pub ncc_peak: f64,
    pub decision: bool,
}

impl CorrelationResult {
    /// Decision rule: strictly above the threshold.
    pub fn decide(pce: f64, threshold: f64) -> bool {
        pce > threshold
    }
}

/// What the residual is correlated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Template {
    /// `K * I`, the expected sensor signal in the query's residual.
    #[default]
    Weighted,
    /// `K` alone.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub threshold: f64,
    pub exclusion: usize,
    pub template: Template,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            exclusion: DEFAULT_EXCLUSION,
            template: Template::Weighted,
        }
    }
}

pub(crate) fn template(fp: &LumaPlane, query: &LumaPlane, kind: Template) -> LumaPlane {
    match kind {
        Template::Raw => fp.clone(),
        Template::Weighted => {
            let data = fp
                .data()
                .iter()
                .zip(query.data())
                .map(|(&k, &i)| k * i)
                .collect();
            LumaPlane::from_vec_unchecked(fp.width(), fp.height(), data)
        }
    }
}

fn check_same(dims: &[(usize, usize)]) -> Result<(), CorrelateError> {
    for d in &dims[1..] {
        if *d != dims[0] {
            return Err(CorrelateError::DimensionMismatch { a: dims[0], b: *d });
        }
    }
    Ok(())
}

/// Whole-frame match of a query residual against a fingerprint of the same
/// size, searching all circular shifts for the peak.
pub fn correlate_aligned(
    residual: &NoiseResidual,
    fp: &FingerprintEstimate,
    query: &LumaPlane,
    opts: &MatchOptions,
) -> Result<CorrelationResult, CorrelateError> {
    check_same(&[residual.dimensions(), fp.dimensions(), query.dimensions()])?;
    let tmpl = template(&fp.khat, query, opts.template);
    let surface = ncc_surface(residual.plane(), &tmpl)?;
    let (score, shift) = pce(&surface, opts.exclusion)?;
    let peak = surface.argmax_abs();
    Ok(CorrelationResult {
        pce: score,
        peak_shift: shift,
        ncc_peak: surface.at(peak.0, peak.1),
        decision: CorrelationResult::decide(score, opts.threshold),
    })
}

/// Locates a query that is a crop of the fingerprint's frame. The weighted
/// residual `W * I` is zero-padded to the fingerprint size and correlated
/// against `K`; the reported shift is the query's offset inside the frame.
pub fn correlate_search(
    residual: &NoiseResidual,
    fp: &FingerprintEstimate,
    query: &LumaPlane,
    opts: &MatchOptions,
) -> Result<CorrelationResult, CorrelateError> {
    check_same(&[residual.dimensions(), query.dimensions()])?;
    let (qw, qh) = query.dimensions();
    let (w, h) = fp.dimensions();
    if qw > w || qh > h {
        return Err(CorrelateError::DimensionMismatch {
            a: (w, h),
            b: (qw, qh),
        });
    }
    let weighted = match opts.template {
        Template::Weighted => template(residual.plane(), query, Template::Weighted),
        Template::Raw => residual.plane().clone(),
    };
    let (wv, wn) = centered(&weighted);
    let (kv, kn) = centered(&fp.khat);
    if wn == 0.0 || kn == 0.0 {
        return Err(CorrelateError::ConstantInput);
    }
    let mut padded = vec![0.0; w * h];
    for y in 0..qh {
        padded[y * w..y * w + qw].copy_from_slice(&wv[y * qw..(y + 1) * qw]);
    }
    let surface = correlate_centered(&padded, &kv, w, h, wn * kn);
    let peak = surface.argmax_abs();
    let score = pce_at(&surface, peak, opts.exclusion)?;
    Ok(CorrelationResult {
        pce: score,
        peak_shift: (peak.0 as i64, peak.1 as i64),
        ncc_peak: surface.at(peak.0, peak.1),
        decision: CorrelationResult::decide(score, opts.threshold),
    })
}
