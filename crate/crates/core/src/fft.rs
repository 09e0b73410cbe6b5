use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Row/column 2-D FFT over a row-major complex buffer.
pub(crate) struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub(crate) fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Unnormalised inverse; callers divide by `width * height`.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(buf.len(), w * h);
        rows.process(buf);
        let mut column = vec![Complex64::default(); h];
        for x in 0..w {
            for (y, c) in column.iter_mut().enumerate() {
                *c = buf[y * w + x];
            }
            cols.process(&mut column);
            for (y, c) in column.iter().enumerate() {
                buf[y * w + x] = *c;
            }
        }
    }
}

pub(crate) fn to_complex(values: impl IntoIterator<Item = f64>) -> Vec<Complex64> {
    values.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}
