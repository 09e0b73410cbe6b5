//! Periodised orthogonal 2-D wavelet transform (8-tap Daubechies filters).
//!
//! Coefficients are kept in the usual pyramid layout: after `n` levels the
//! top-left `w >> n` by `h >> n` corner holds the approximation band and each
//! level's three detail bands surround it.

/// Daubechies 8-tap (four vanishing moments) analysis low-pass filter.
const LOWPASS: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

const fn highpass() -> [f64; 8] {
    let mut g = [0.0; 8];
    let mut k = 0;
    while k < 8 {
        let v = LOWPASS[7 - k];
        g[k] = if k % 2 == 0 { v } else { -v };
        k += 1;
    }
    g
}

const HIGHPASS: [f64; 8] = highpass();

fn analyze(src: &[f64], dst: &mut [f64]) {
    let n = src.len();
    let half = n / 2;
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..8 {
            let x = src[(2 * i + k) % n];
            a += LOWPASS[k] * x;
            d += HIGHPASS[k] * x;
        }
        dst[i] = a;
        dst[half + i] = d;
    }
}

fn synthesize(src: &[f64], dst: &mut [f64]) {
    let n = src.len();
    let half = n / 2;
    dst.fill(0.0);
    for i in 0..half {
        let (a, d) = (src[i], src[half + i]);
        for k in 0..8 {
            dst[(2 * i + k) % n] += LOWPASS[k] * a + HIGHPASS[k] * d;
        }
    }
}

/// In-place single-level transform of the `w x h` top-left region of a
/// buffer whose rows are `stride` long. Both `w` and `h` must be even.
fn level_forward(buf: &mut [f64], stride: usize, w: usize, h: usize) {
    let mut line = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    for y in 0..h {
        let row = &mut buf[y * stride..y * stride + w];
        line[..w].copy_from_slice(row);
        analyze(&line[..w], &mut out[..w]);
        row.copy_from_slice(&out[..w]);
    }
    for x in 0..w {
        for y in 0..h {
            line[y] = buf[y * stride + x];
        }
        analyze(&line[..h], &mut out[..h]);
        for y in 0..h {
            buf[y * stride + x] = out[y];
        }
    }
}

fn level_inverse(buf: &mut [f64], stride: usize, w: usize, h: usize) {
    let mut line = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    for x in 0..w {
        for y in 0..h {
            line[y] = buf[y * stride + x];
        }
        synthesize(&line[..h], &mut out[..h]);
        for y in 0..h {
            buf[y * stride + x] = out[y];
        }
    }
    for y in 0..h {
        let row = &mut buf[y * stride..y * stride + w];
        line[..w].copy_from_slice(row);
        synthesize(&line[..w], &mut out[..w]);
        row.copy_from_slice(&out[..w]);
    }
}

/// Multi-level forward transform. `width` and `height` must be divisible by
/// `2^levels`.
pub(crate) fn forward(buf: &mut [f64], width: usize, height: usize, levels: usize) {
    for level in 0..levels {
        level_forward(buf, width, width >> level, height >> level);
    }
}

pub(crate) fn inverse(buf: &mut [f64], width: usize, height: usize, levels: usize) {
    for level in (0..levels).rev() {
        level_inverse(buf, width, width >> level, height >> level);
    }
}

/// A rectangular coefficient band `(x, y, w, h)` inside the pyramid.
pub(crate) type Band = (usize, usize, usize, usize);

/// The three detail bands of `level` (1 = finest).
pub(crate) fn detail_bands(width: usize, height: usize, level: usize) -> [Band; 3] {
    let (w, h) = (width >> (level - 1), height >> (level - 1));
    let (hw, hh) = (w / 2, h / 2);
    [(hw, 0, hw, hh), (0, hh, hw, hh), (hw, hh, hw, hh)]
}
