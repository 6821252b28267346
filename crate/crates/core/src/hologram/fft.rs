use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unitary 2-D DFT on a row-major `height × width` grid.
pub struct Fft2 {
    height: usize,
    width: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            rows_fwd: planner.plan_fft_forward(width),
            rows_inv: planner.plan_fft_inverse(width),
            cols_fwd: planner.plan_fft_forward(height),
            cols_inv: planner.plan_fft_inverse(height),
            scale: 1.0 / ((height * width) as f64).sqrt(),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.rows_fwd, &self.cols_fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.rows_inv, &self.cols_inv);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w);
        rows.process(data);
        let mut column = vec![Complex64::default(); h];
        for j in 0..w {
            for i in 0..h {
                column[i] = data[i * w + j];
            }
            cols.process(&mut column);
            for i in 0..h {
                data[i * w + j] = column[i] * self.scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trip_and_parseval() {
        let (h, w) = (12, 20);
        let fft = Fft2::new(h, w);
        let original: Vec<Complex64> = (0..h * w)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut data = original.clone();
        fft.forward(&mut data);
        let p_in: f64 = original.iter().map(|z| z.norm_sqr()).sum();
        let p_out: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(p_in, p_out, max_relative = 1e-12);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_maps_to_single_bin() {
        let (h, w) = (8, 16);
        let fft = Fft2::new(h, w);
        let (ky, kx) = (3, 5);
        let mut data: Vec<Complex64> = (0..h * w)
            .map(|k| {
                let (i, j) = ((k / w) as f64, (k % w) as f64);
                let arg = 2.0 * std::f64::consts::PI * (ky as f64 * i / h as f64 + kx as f64 * j / w as f64);
                Complex64::from_polar(1.0, arg)
            })
            .collect();
        fft.forward(&mut data);
        let peak = data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, ky * w + kx);
        assert_relative_eq!(data[peak].norm(), ((h * w) as f64).sqrt(), max_relative = 1e-12);
    }
}
