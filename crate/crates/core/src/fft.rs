//! Unitary 2D FFT on row-major complex buffers.
//!
//! Frequencies use the natural (unshifted) FFT layout: index `i` holds
//! frequency `i` for `i < n/2` and `i - n` otherwise.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    norm: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
            norm: 1.0 / ((rows * cols) as f64).sqrt(),
        }
    }

    pub fn square(n: usize) -> Self {
        Self::new(n, n)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.rows * self.cols, "buffer does not match plan");
        row.process(data);
        let mut t = transpose(data, self.rows, self.cols);
        col.process(&mut t);
        let back = transpose(&t, self.cols, self.rows);
        for (d, v) in data.iter_mut().zip(back) {
            *d = v * self.norm;
        }
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Signed frequency index of FFT bin `i` on an `n`-point axis.
#[inline]
pub fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT bin holding signed frequency `f` on an `n`-point axis.
#[inline]
pub fn freq_bin(f: i64, n: usize) -> usize {
    f.rem_euclid(n as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_energy() {
        let fft = Fft2::new(8, 12);
        let orig: Vec<Complex64> = (0..96)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        let e0: f64 = orig.iter().map(|c| c.norm_sqr()).sum();
        let e1: f64 = data.iter().map(|c| c.norm_sqr()).sum();
        assert!((e0 - e1).abs() / e0 < 1e-12);
        fft.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_of_constant() {
        let fft = Fft2::square(4);
        let mut data = vec![Complex64::new(2.0, 0.0); 16];
        fft.forward(&mut data);
        assert!((data[0].re - 8.0).abs() < 1e-12);
        assert!(data[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn frequency_layout() {
        assert_eq!(signed_freq(3, 8), 3);
        assert_eq!(signed_freq(4, 8), -4);
        assert_eq!(signed_freq(7, 8), -1);
        assert_eq!(freq_bin(-1, 8), 7);
        assert_eq!(freq_bin(-4, 8), 4);
    }
}
