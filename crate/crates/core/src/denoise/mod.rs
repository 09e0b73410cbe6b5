//! Wavelet-domain local Wiener denoising and noise-residual extraction.
//!
//! The denoiser `F` decomposes a plane with an orthogonal wavelet transform,
//! shrinks every detail coefficient by a locally estimated Wiener gain and
//! reconstructs. The residual `W = I - F(I)` is the per-frame observation of
//! the sensor pattern that fingerprinting accumulates.

mod wavelet;

use rustfft::num_complex::Complex64;

use crate::fft::{to_complex, Fft2d};
use crate::media_io::LumaPlane;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DenoiseError {
    #[error(
        "plane {width}x{height} is smaller than the {min}x{min} required by the wavelet depth"
    )]
    PlaneTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid denoise parameters: {0}")]
    BadParams(String),
}

/// Parameters of the denoising filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseParams {
    /// Base noise variance on the `[0, 255]` scale.
    pub sigma0_sq: f64,
    pub wavelet_levels: usize,
    /// Odd local-variance window sizes; the minimum estimate over all of them
    /// is used.
    pub window_sizes: Vec<usize>,
    /// Apply a DFT-domain Wiener filter to each extracted residual.
    pub dft_wiener: bool,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            sigma0_sq: 9.0,
            wavelet_levels: 4,
            window_sizes: vec![3, 5, 7, 9],
            dft_wiener: false,
        }
    }
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<(), DenoiseError> {
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return Err(DenoiseError::BadParams(format!(
                "sigma0_sq must be positive, got {}",
                self.sigma0_sq
            )));
        }
        if !(1..=16).contains(&self.wavelet_levels) {
            return Err(DenoiseError::BadParams(format!(
                "wavelet_levels must be in 1..=16, got {}",
                self.wavelet_levels
            )));
        }
        if self.window_sizes.is_empty() || self.window_sizes.iter().any(|&w| w < 3 || w % 2 == 0) {
            return Err(DenoiseError::BadParams(format!(
                "window sizes must be odd and >= 3, got {:?}",
                self.window_sizes
            )));
        }
        Ok(())
    }

    fn min_side(&self) -> usize {
        1 << self.wavelet_levels
    }
}

/// Noise residual of one (possibly averaged) frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseResidual {
    plane: LumaPlane,
    /// Frames averaged into the input: 1 for conventional extraction, `d`
    /// for an SDA-frame of depth `d`.
    pub source_frames: usize,
}

impl NoiseResidual {
    pub fn new(plane: LumaPlane, source_frames: usize) -> Self {
        Self {
            plane,
            source_frames,
        }
    }

    pub fn plane(&self) -> &LumaPlane {
        &self.plane
    }

    pub fn into_plane(self) -> LumaPlane {
        self.plane
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.plane.dimensions()
    }
}

/// Half-sample symmetric reflection of an arbitrary index into `0..n`.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Shrinks `coeffs` (a `w x h` band) by the local Wiener gain
/// `v / (v + noise_var)`, where `v` is the smallest non-negative local
/// variance estimate over the given windows.
pub(crate) fn local_wiener(
    coeffs: &mut [f64],
    w: usize,
    h: usize,
    noise_var: f64,
    windows: &[usize],
) {
    let r = windows.iter().max().copied().unwrap_or(3) / 2;
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    // Summed-area table of squared coefficients over the mirror-padded band.
    let mut sat = vec![0.0f64; (pw + 1) * (ph + 1)];
    for py in 0..ph {
        let sy = reflect(py as isize - r as isize, h);
        let mut row_sum = 0.0;
        for px in 0..pw {
            let sx = reflect(px as isize - r as isize, w);
            let c = coeffs[sy * w + sx];
            row_sum += c * c;
            sat[(py + 1) * (pw + 1) + px + 1] = sat[py * (pw + 1) + px + 1] + row_sum;
        }
    }
    let box_sum = |x0: usize, y0: usize, x1: usize, y1: usize| {
        sat[y1 * (pw + 1) + x1] - sat[y0 * (pw + 1) + x1] - sat[y1 * (pw + 1) + x0]
            + sat[y0 * (pw + 1) + x0]
    };
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (x + r, y + r);
            let mut est = f64::INFINITY;
            for &win in windows {
                let k = win / 2;
                let s = box_sum(cx - k, cy - k, cx + k + 1, cy + k + 1);
                let v = (s / (win * win) as f64 - noise_var).max(0.0);
                est = est.min(v);
            }
            coeffs[y * w + x] *= est / (est + noise_var);
        }
    }
}

/// Applies the denoising filter and returns `F(I)`.
pub fn wavelet_denoise(
    plane: &LumaPlane,
    params: &DenoiseParams,
) -> Result<LumaPlane, DenoiseError> {
    Ok(denoise_f64(plane, params)?.0)
}

/// Returns the denoised plane along with the f64 reconstruction (cropped),
/// so the residual can be formed before rounding to f32.
fn denoise_f64(
    plane: &LumaPlane,
    params: &DenoiseParams,
) -> Result<(LumaPlane, Vec<f64>), DenoiseError> {
    params.validate()?;
    let (w, h) = plane.dimensions();
    let block = params.min_side();
    if w < block || h < block {
        return Err(DenoiseError::PlaneTooSmall {
            width: w,
            height: h,
            min: block,
        });
    }
    let (pw, ph) = (w.div_ceil(block) * block, h.div_ceil(block) * block);
    let (ox, oy) = ((pw - w) / 2, (ph - h) / 2);
    let src = plane.data();
    let mut buf = vec![0.0f64; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - oy as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - ox as isize, w);
            buf[py * pw + px] = src[sy * w + sx] as f64;
        }
    }

    let levels = params.wavelet_levels;
    wavelet::forward(&mut buf, pw, ph, levels);
    let mut band = Vec::new();
    for level in 1..=levels {
        for (bx, by, bw, bh) in wavelet::detail_bands(pw, ph, level) {
            band.clear();
            for y in by..by + bh {
                band.extend_from_slice(&buf[y * pw + bx..y * pw + bx + bw]);
            }
            local_wiener(&mut band, bw, bh, params.sigma0_sq, &params.window_sizes);
            for (row, y) in (by..by + bh).enumerate() {
                buf[y * pw + bx..y * pw + bx + bw].copy_from_slice(&band[row * bw..(row + 1) * bw]);
            }
        }
    }
    wavelet::inverse(&mut buf, pw, ph, levels);

    let mut cropped = Vec::with_capacity(w * h);
    for y in 0..h {
        cropped.extend_from_slice(&buf[(y + oy) * pw + ox..(y + oy) * pw + ox + w]);
    }
    let denoised = LumaPlane::from_vec_unchecked(w, h, cropped.iter().map(|&v| v as f32).collect());
    Ok((denoised, cropped))
}

/// `W = I - F(I)`. The caller sets `source_frames` when the input is an
/// averaged frame.
pub fn extract_residual(
    plane: &LumaPlane,
    params: &DenoiseParams,
) -> Result<NoiseResidual, DenoiseError> {
    let (w, h) = plane.dimensions();
    let (_, smooth) = denoise_f64(plane, params)?;
    let data = plane
        .data()
        .iter()
        .zip(&smooth)
        .map(|(&i, &f)| (i as f64 - f) as f32)
        .collect();
    let residual = NoiseResidual::new(LumaPlane::from_vec_unchecked(w, h, data), 1);
    if params.dft_wiener {
        Ok(wiener_dft(
            &postprocess_residual(&residual),
            &params.window_sizes,
        ))
    } else {
        Ok(residual)
    }
}

/// Removes row means, then column means, each in a single pass.
pub(crate) fn zero_mean_in_place(plane: &mut LumaPlane) {
    let (w, h) = plane.dimensions();
    let data = plane.data_mut();
    for row in data.chunks_exact_mut(w) {
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / w as f64;
        for v in row {
            *v = (*v as f64 - mean) as f32;
        }
    }
    for x in 0..w {
        let mean = (0..h).map(|y| data[y * w + x] as f64).sum::<f64>() / h as f64;
        for y in 0..h {
            let v = &mut data[y * w + x];
            *v = (*v as f64 - mean) as f32;
        }
    }
}

pub fn postprocess_residual(residual: &NoiseResidual) -> NoiseResidual {
    let mut out = residual.clone();
    zero_mean_in_place(&mut out.plane);
    out
}

/// Attenuates periodic artefacts by Wiener-filtering the residual's Fourier
/// magnitudes against a flat spectrum at the residual's own variance.
pub fn wiener_dft(residual: &NoiseResidual, windows: &[usize]) -> NoiseResidual {
    let (w, h) = residual.dimensions();
    let n = (w * h) as f64;
    let var = residual.plane().variance();
    let fft = Fft2d::new(w, h);
    let mut spectrum = to_complex(residual.plane().data().iter().map(|&v| v as f64));
    fft.forward(&mut spectrum);
    let magnitudes: Vec<f64> = spectrum.iter().map(|c| c.norm() / n.sqrt()).collect();
    let mut filtered = magnitudes.clone();
    if var > 0.0 {
        local_wiener(&mut filtered, w, h, var, windows);
    }
    for ((c, &m), &m1) in spectrum.iter_mut().zip(&magnitudes).zip(&filtered) {
        *c = if m == 0.0 {
            Complex64::default()
        } else {
            *c * (m1 / m)
        };
    }
    fft.inverse(&mut spectrum);
    let data = spectrum.iter().map(|c| (c.re / n) as f32).collect();
    NoiseResidual::new(
        LumaPlane::from_vec_unchecked(w, h, data),
        residual.source_frames,
    )
}
