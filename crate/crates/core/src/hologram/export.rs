use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Cursor;

use super::HologramError;

/// 16-bit grayscale PNG with level = phase/2π × 65535.
pub fn encode_phase_png(phase: &[f64], height: usize, width: usize) -> Result<Vec<u8>, HologramError> {
    if phase.len() != height * width {
        return Err(HologramError::ShapeMismatch(format!(
            "{} phases for a {height}×{width} mask",
            phase.len()
        )));
    }
    let levels: Vec<u16> = phase
        .iter()
        .map(|p| (p / TAU * 65535.0).round().clamp(0.0, 65535.0) as u16)
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, levels).expect("length checked above");
    let mut bytes = Vec::new();
    DynamicImage::ImageLuma16(img)
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| HologramError::Decode(e.to_string()))?;
    Ok(bytes)
}

/// Phases and dimensions recovered from a PNG written by [`encode_phase_png`].
pub fn decode_phase_png(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize), HologramError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| HologramError::Decode(e.to_string()))?
        .into_luma16();
    let (w, h) = img.dimensions();
    let phase = img.into_raw().iter().map(|&l| l as f64 / 65535.0 * TAU).collect();
    Ok((phase, h as usize, w as usize))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub height: usize,
    pub width: usize,
    pub dtype: String,
    pub order: String,
    pub units: String,
    pub range: String,
    pub free_field_constraint: String,
}

impl RawSidecar {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            dtype: "f32le".into(),
            order: "row-major".into(),
            units: "rad".into(),
            range: "[0, 2pi)".into(),
            free_field_constraint: "non-spot focal-plane pixels keep their computed field".into(),
        }
    }
}

/// Little-endian f32 phases, row-major.
pub fn encode_raw(phase: &[f64]) -> Vec<u8> {
    phase.iter().flat_map(|&p| (p as f32).to_le_bytes()).collect()
}

pub fn decode_raw(bytes: &[u8], sidecar: &RawSidecar) -> Result<Vec<f64>, HologramError> {
    if sidecar.dtype != "f32le" {
        return Err(HologramError::Decode(format!("unsupported dtype {}", sidecar.dtype)));
    }
    if bytes.len() != 4 * sidecar.height * sidecar.width {
        return Err(HologramError::Decode(format!(
            "{} bytes for a {}×{} f32 mask",
            bytes.len(),
            sidecar.height,
            sidecar.width
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_raw_agree_within_quantization() {
        let (h, w) = (9, 13);
        let phase: Vec<f64> = (0..h * w).map(|k| (k as f64 * 0.731).rem_euclid(TAU)).collect();
        let (png, ph, pw) = decode_phase_png(&encode_phase_png(&phase, h, w).unwrap()).unwrap();
        assert_eq!((ph, pw), (h, w));
        let raw = decode_raw(&encode_raw(&phase), &RawSidecar::new(h, w)).unwrap();
        let step = TAU / 65535.0;
        for ((a, b), c) in png.iter().zip(&raw).zip(&phase) {
            assert!((a - c).abs() <= 0.5 * step + 1e-12);
            assert!((b - c).abs() < 1e-6);
        }
    }

    #[test]
    fn raw_length_checked() {
        assert!(decode_raw(&[0u8; 7], &RawSidecar::new(1, 2)).is_err());
        assert!(encode_phase_png(&[0.0; 3], 2, 2).is_err());
    }
}
