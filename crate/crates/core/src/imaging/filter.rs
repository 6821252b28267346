use serde::{Deserialize, Serialize};

use super::{invalid, ImageFrame, ImagingError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub sigma_sharp: f64,
    pub sigma_wide1: f64,
    pub sigma_wide2: f64,
    /// Camera bias subtracted from the raw frame before filtering.
    pub bias: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            sigma_sharp: 2.4,
            sigma_wide1: 16.8,
            sigma_wide2: 91.9,
            bias: 0.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        if !(0.0 < self.sigma_sharp && self.sigma_sharp < self.sigma_wide1 && self.sigma_wide1 < self.sigma_wide2)
        {
            return Err(invalid(
                "filter widths",
                format!(
                    "need 0 < sharp < wide1 < wide2, got ({}, {}, {})",
                    self.sigma_sharp, self.sigma_wide1, self.sigma_wide2
                ),
            ));
        }
        if !self.bias.is_finite() {
            return Err(invalid("bias", "must be finite"));
        }
        Ok(())
    }
}

/// Index into `0..n` of position `i` under half-sample symmetric reflection
/// (… c b a | a b c … | … c b a), periodic with period 2n.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// 1-D Gaussian on a line of `n` samples, folded by the reflection so that
/// each output is a sparse weighted sum over the line.
struct FoldedKernel {
    taps: Vec<Vec<(usize, f64)>>,
}

impl FoldedKernel {
    fn new(n: usize, sigma: f64) -> Self {
        let radius = (4.0 * sigma).ceil() as isize;
        let mut g: Vec<f64> = (-radius..=radius)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = g.iter().sum();
        g.iter_mut().for_each(|x| *x /= sum);
        let mut acc = vec![0.0; n];
        let taps = (0..n)
            .map(|i| {
                acc.iter_mut().for_each(|x| *x = 0.0);
                for (k, &w) in (-radius..=radius).zip(&g) {
                    acc[reflect(i as isize + k, n)] += w;
                }
                acc.iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(j, &w)| (j, w))
                    .collect()
            })
            .collect();
        Self { taps }
    }

    /// Written as x_i + Σ w (x_j − x_i) so a constant line is reproduced exactly.
    fn apply(&self, line: &[f64], out: &mut [f64]) {
        for (o, (taps, &xi)) in out.iter_mut().zip(self.taps.iter().zip(line)) {
            *o = xi + taps.iter().map(|&(j, w)| w * (line[j] - xi)).sum::<f64>();
        }
    }
}

/// Separable Gaussian blur with reflect boundaries, kernel truncated at 4σ
/// and normalized to unit sum.
pub fn gaussian_blur(pixels: &[f64], height: usize, width: usize, sigma: f64) -> Vec<f64> {
    let row_kernel = FoldedKernel::new(width, sigma);
    let col_kernel = FoldedKernel::new(height, sigma);
    let mut tmp = vec![0.0; height * width];
    for (src, dst) in pixels.chunks_exact(width).zip(tmp.chunks_exact_mut(width)) {
        row_kernel.apply(src, dst);
    }
    let mut out = vec![0.0; height * width];
    let mut column = vec![0.0; height];
    let mut result = vec![0.0; height];
    for j in 0..width {
        for i in 0..height {
            column[i] = tmp[i * width + j];
        }
        col_kernel.apply(&column, &mut result);
        for i in 0..height {
            out[i * width + j] = result[i];
        }
    }
    out
}

/// Three-level background removal:
/// I₁ = max(I∗G(σ_sharp) − I∗G(σ_wide1), 0), I = max(I₁ − I∗G(σ_wide2), 0).
pub fn filter_frame(raw: &ImageFrame, params: &FilterParams) -> Result<ImageFrame, ImagingError> {
    params.validate()?;
    let (h, w) = (raw.height, raw.width);
    let input: Vec<f64> = raw.pixels.iter().map(|p| p - params.bias).collect();
    let sharp = gaussian_blur(&input, h, w, params.sigma_sharp);
    let wide1 = gaussian_blur(&input, h, w, params.sigma_wide1);
    let wide2 = gaussian_blur(&input, h, w, params.sigma_wide2);
    let pixels = sharp
        .iter()
        .zip(&wide1)
        .zip(&wide2)
        .map(|((s, w1), w2)| ((s - w1).max(0.0) - w2).max(0.0))
        .collect();
    Ok(ImageFrame {
        height: h,
        width: w,
        pixels,
        exposure: raw.exposure,
    })
}
