use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use std::io::Cursor;

use super::{ImageFrame, ImagingError};

/// 16-bit grayscale TIFF; counts are rounded and clamped to 0..=65535.
pub fn encode_tiff(frame: &ImageFrame) -> Result<Vec<u8>, ImagingError> {
    let data: Vec<u16> = frame.pixels.iter().map(|p| p.round().clamp(0.0, 65535.0) as u16).collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(frame.width as u32, frame.height as u32, data)
        .ok_or_else(|| ImagingError::Decode("pixel count does not match dimensions".into()))?;
    let mut bytes = Vec::new();
    DynamicImage::ImageLuma16(img)
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Tiff)
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    Ok(bytes)
}

pub fn decode_tiff(bytes: &[u8]) -> Result<ImageFrame, ImagingError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Tiff)
        .map_err(|e| ImagingError::Decode(e.to_string()))?
        .into_luma16();
    let (w, h) = img.dimensions();
    Ok(ImageFrame {
        height: h as usize,
        width: w as usize,
        pixels: img.into_raw().into_iter().map(f64::from).collect(),
        exposure: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub exposure: f64,
    pub dtype: String,
    pub order: String,
}

/// Stack of frames as little-endian f32, frame-major then row-major.
pub fn encode_raw_frame(frames: &[ImageFrame]) -> Result<(Vec<u8>, FrameSidecar), ImagingError> {
    let first = frames.first().ok_or_else(|| ImagingError::Decode("no frames to write".into()))?;
    if frames.iter().any(|f| (f.height, f.width) != (first.height, first.width)) {
        return Err(ImagingError::Decode("frames differ in size".into()));
    }
    let bytes = frames
        .iter()
        .flat_map(|f| f.pixels.iter().flat_map(|&p| (p as f32).to_le_bytes()))
        .collect();
    Ok((
        bytes,
        FrameSidecar {
            height: first.height,
            width: first.width,
            frames: frames.len(),
            exposure: first.exposure,
            dtype: "f32le".into(),
            order: "frame-major, row-major".into(),
        },
    ))
}

pub fn decode_raw_frame(bytes: &[u8], sidecar: &FrameSidecar) -> Result<Vec<ImageFrame>, ImagingError> {
    let per = sidecar.height * sidecar.width;
    if sidecar.dtype != "f32le" || bytes.len() != 4 * per * sidecar.frames {
        return Err(ImagingError::Decode(format!(
            "{} bytes do not hold {} {}×{} f32 frames",
            bytes.len(),
            sidecar.frames,
            sidecar.height,
            sidecar.width
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(values
        .chunks_exact(per.max(1))
        .map(|px| ImageFrame {
            height: sidecar.height,
            width: sidecar.width,
            pixels: px.to_vec(),
            exposure: sidecar.exposure,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> ImageFrame {
        ImageFrame {
            height: 5,
            width: 7,
            pixels: (0..35).map(|k| k as f64 * 13.0).collect(),
            exposure: 0.2,
        }
    }

    #[test]
    fn tiff_round_trip() {
        let f = frame();
        let back = decode_tiff(&encode_tiff(&f).unwrap()).unwrap();
        assert_eq!(back.pixels, f.pixels);
        assert_eq!((back.height, back.width), (5, 7));
    }

    #[test]
    fn raw_round_trip() {
        let frames = vec![frame(), frame()];
        let (bytes, side) = encode_raw_frame(&frames).unwrap();
        let back = decode_raw_frame(&bytes, &side).unwrap();
        assert_eq!(back, frames);
        assert!(decode_raw_frame(&bytes[1..], &side).is_err());
    }
}
