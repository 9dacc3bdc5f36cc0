//! On-disk formats: PNG (8/16-bit), 32-bit float TIFF, capture stacks with
//! a JSON manifest, and metrics as JSON or CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::FrameFormat;
use crate::fpm::{make_pupil, CaptureStack, IlluminationPlan, LedGeometry, Pupil};
use crate::harness::MetricsReport;
use crate::image::{ColorImage, ColorSpace, Image2D};
use crate::{Error, Result};

/// PNG sample depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn quantize<T: TryFrom<u32>>(v: f64, max: u32) -> T {
    let q = (v.clamp(0.0, 1.0) * max as f64).round() as u32;
    T::try_from(q).ok().expect("quantized value fits the sample type")
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other),
    }
}

/// Writes an RGB image, clamping samples to `[0, 1]`.
pub fn write_png_rgb(path: &Path, img: &ColorImage, depth: BitDepth) -> Result<()> {
    create_parent(path)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let flat = img.pixels().iter().flatten().copied();
    let result = match depth {
        BitDepth::Eight => {
            let buf: ImageBuffer<Rgb<u8>, _> =
                ImageBuffer::from_raw(w, h, flat.map(|v| quantize::<u8>(v, 255)).collect::<Vec<u8>>())
                    .expect("buffer matches dimensions");
            buf.save(path)
        }
        BitDepth::Sixteen => {
            let buf: ImageBuffer<Rgb<u16>, _> =
                ImageBuffer::from_raw(w, h, flat.map(|v| quantize::<u16>(v, 65535)).collect::<Vec<u16>>())
                    .expect("buffer matches dimensions");
            buf.save(path)
        }
    };
    result.map_err(|e| image_error(path, e))
}

/// Writes a single-channel image, clamping samples to `[0, 1]`.
pub fn write_png_gray(path: &Path, img: &Image2D, depth: BitDepth) -> Result<()> {
    create_parent(path)?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let data = img.data().iter().copied();
    let result = match depth {
        BitDepth::Eight => {
            let buf: ImageBuffer<Luma<u8>, _> =
                ImageBuffer::from_raw(w, h, data.map(|v| quantize::<u8>(v, 255)).collect::<Vec<u8>>())
                    .expect("buffer matches dimensions");
            buf.save(path)
        }
        BitDepth::Sixteen => {
            let buf: ImageBuffer<Luma<u16>, _> =
                ImageBuffer::from_raw(w, h, data.map(|v| quantize::<u16>(v, 65535)).collect::<Vec<u16>>())
                    .expect("buffer matches dimensions");
            buf.save(path)
        }
    };
    result.map_err(|e| image_error(path, e))
}

fn open_image(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| image_error(path, e))
}

fn is_sixteen_bit(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    )
}

/// Reads a PNG as sRGB in `[0, 1]`; gray inputs are replicated.
pub fn read_png_rgb(path: &Path) -> Result<ColorImage> {
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = if is_sixteen_bit(&img) {
        img.to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect()
    } else {
        img.to_rgb8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
    };
    let pixels = data.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
    ColorImage::new(w, h, ColorSpace::Srgb, pixels)
}

/// Reads a PNG as a single channel in `[0, 1]` (color inputs are averaged
/// by the decoder's luma conversion).
pub fn read_png_gray(path: &Path) -> Result<Image2D> {
    let img = open_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if is_sixteen_bit(&img) {
        img.to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect()
    } else {
        img.to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect()
    };
    Image2D::new(w, h, data)
}

/// Writes a 32-bit float grayscale TIFF.
pub fn write_tiff_f32(path: &Path, img: &Image2D) -> Result<()> {
    create_parent(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let data: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    tiff::encoder::TiffEncoder::new(BufWriter::new(file))
        .and_then(|mut enc| {
            enc.write_image::<tiff::encoder::colortype::Gray32Float>(img.width() as u32, img.height() as u32, &data)
        })
        .map_err(|e| tiff_error(path, e))
}

fn tiff_error(path: &Path, e: tiff::TiffError) -> Error {
    match e {
        tiff::TiffError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other),
    }
}

/// Reads a single-channel float TIFF.
pub fn read_tiff_f32(path: &Path) -> Result<Image2D> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = tiff::decoder::Decoder::new(BufReader::new(file)).map_err(|e| tiff_error(path, e))?;
    let (w, h) = dec.dimensions().map_err(|e| tiff_error(path, e))?;
    let data = match dec.read_image().map_err(|e| tiff_error(path, e))? {
        tiff::decoder::DecodingResult::F32(v) => v.into_iter().map(f64::from).collect(),
        tiff::decoder::DecodingResult::F64(v) => v,
        _ => return Err(Error::format(path, "expected a floating-point grayscale TIFF")),
    };
    Image2D::new(w as usize, h as usize, data).map_err(|e| Error::format(path, e))
}

/// Reads a single-channel image from `.tif`/`.tiff` (float) or `.png`.
pub fn read_gray(path: &Path) -> Result<Image2D> {
    match extension(path).as_deref() {
        Some("tif" | "tiff") => read_tiff_f32(path),
        Some("png") => read_png_gray(path),
        _ => Err(Error::format(
            path,
            "unsupported image extension (expected .tiff or .png)",
        )),
    }
}

/// Writes a single-channel image as float TIFF or 16-bit PNG by extension.
pub fn write_gray(path: &Path, img: &Image2D) -> Result<()> {
    match extension(path).as_deref() {
        Some("tif" | "tiff") => write_tiff_f32(path, img),
        Some("png") => write_png_gray(path, img, BitDepth::Sixteen),
        _ => Err(Error::format(
            path,
            "unsupported image extension (expected .tiff or .png)",
        )),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Description of a capture stack directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackManifest {
    /// Channel label (`r`, `g` or `b`).
    pub channel: String,
    pub geometry: LedGeometry,
    pub na: f64,
    pub all_pass: bool,
    pub lr_size: usize,
    pub upsample: usize,
    pub lr_pixel_um: f64,
    /// Spectrum sampling of the high-resolution grid, rad/um.
    pub dk: f64,
    /// Physical intensity = stored frame value x scale.
    pub scale: f64,
    pub format: FrameFormat,
    pub phantom_seed: Option<u64>,
    pub noise_sigma: f64,
    pub noise_seed: Option<u64>,
    pub plan: IlluminationPlan,
    /// Frame file names, in plan order.
    pub frames: Vec<String>,
}

impl StackManifest {
    pub fn pupil(&self) -> Result<Pupil> {
        if self.all_pass {
            Ok(Pupil::all_pass(self.lr_size, self.dk))
        } else {
            make_pupil(self.na, self.plan.wavelength_um, self.lr_size, self.dk)
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes frames and `manifest.json` into `dir`. The manifest's `frames`
/// and `scale` are filled in here.
pub fn save_stack(dir: &Path, stack: &CaptureStack, manifest: &StackManifest) -> Result<StackManifest> {
    if stack.len() != manifest.plan.len() {
        return Err(Error::InvalidInput(format!(
            "{} frames for {} plan entries",
            stack.len(),
            manifest.plan.len()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = match manifest.format {
        FrameFormat::Tiff => "tiff",
        FrameFormat::Png16 => "png",
    };
    let mut out = manifest.clone();
    out.scale = stack.scale;
    out.frames = (0..stack.len()).map(|i| format!("frame_{i:03}.{ext}")).collect();
    for (name, frame) in out.frames.iter().zip(&stack.frames) {
        let path = dir.join(name);
        match manifest.format {
            FrameFormat::Tiff => write_tiff_f32(&path, frame)?,
            FrameFormat::Png16 => write_png_gray(&path, frame, BitDepth::Sixteen)?,
        }
    }
    write_json(&dir.join(MANIFEST_FILE), &out)?;
    Ok(out)
}

pub fn load_stack(dir: &Path) -> Result<(CaptureStack, StackManifest)> {
    let manifest: StackManifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.frames.len() != manifest.plan.len() {
        return Err(Error::format(
            dir.join(MANIFEST_FILE),
            format!(
                "{} frames for {} plan entries",
                manifest.frames.len(),
                manifest.plan.len()
            ),
        ));
    }
    let frames = manifest
        .frames
        .iter()
        .map(|name| read_gray(&dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        CaptureStack {
            frames,
            scale: manifest.scale,
        },
        manifest,
    ))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn write_metrics_csv(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in reports {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e)
    }
}

/// Output file layout of a comparison run.
pub fn sample_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("sample_{seed:04}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        let img = ColorImage::new(2, 1, ColorSpace::Srgb, vec![[0.0, 0.25, 1.0], [0.123456, 0.5, 0.999]]).unwrap();
        write_png_rgb(&path, &img, BitDepth::Sixteen).unwrap();
        let back = read_png_rgb(&path).unwrap();
        for (a, b) in img.pixels().iter().flatten().zip(back.pixels().iter().flatten()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
    }

    #[test]
    fn tiff_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tiff");
        let img = Image2D::from_fn(5, 3, |x, y| (x as f64 - 2.0) * 0.37 + y as f64 * 1e-3);
        write_tiff_f32(&path, &img).unwrap();
        let back = read_tiff_f32(&path).unwrap();
        assert_eq!(back.dims(), (5, 3));
        for (a, b) in img.data().iter().zip(back.data()) {
            assert_eq!(*a as f32 as f64, *b);
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_tiff_f32(Path::new("/nonexistent/x.tiff")).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Io);
    }
}
