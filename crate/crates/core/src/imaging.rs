//! Grayscale BUS image loading and the cleaning/standardization steps:
//! invalid-scan rejection, dual-view splitting, crop/resize preprocessing,
//! and per-image min-max normalization.
//!
//! Images are accepted post-conversion as 8-bit grayscale PNG or PGM; the
//! pipeline never touches DICOM.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupt_raster: {0}")]
    CorruptRaster(String),
    #[error("unsupported format: {0} (need 8-bit grayscale PNG or PGM)")]
    UnsupportedFormat(String),
    #[error("bad dimensions {width}x{height} for {len} pixels")]
    BadDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
}

/// A single 8-bit grayscale image with row-major pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    pub image_id: String,
    pub patient_id: String,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        image_id: impl Into<String>,
        patient_id: impl Into<String>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImageError::BadDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
            image_id: image_id.into(),
            patient_id: patient_id.into(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Mean intensity of column `x`.
    fn column_mean(&self, x: usize) -> f64 {
        let mut sum = 0u64;
        for y in 0..self.height {
            sum += self.pixels[y * self.width + x] as u64;
        }
        sum as f64 / self.height as f64
    }

    /// Verbatim copy of columns [x0, x1).
    fn column_slice(&self, x0: usize, x1: usize, image_id: String) -> GrayImage {
        let mut pixels = Vec::with_capacity((x1 - x0) * self.height);
        for y in 0..self.height {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        GrayImage {
            width: x1 - x0,
            height: self.height,
            pixels,
            image_id,
            patient_id: self.patient_id.clone(),
        }
    }
}

/// Image/patient ids from a file stem: the part before `__` is the patient.
fn ids_from_stem(path: &Path) -> (String, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let patient = stem.split("__").next().filter(|p| *p != stem.as_str());
    (stem.clone(), patient.unwrap_or("").to_string())
}

/// Load an 8-bit grayscale PNG or PGM, preserving pixel values bit-exactly.
/// Multi-channel and non-8-bit inputs are rejected.
pub fn load_image(path: &Path) -> Result<GrayImage, ImageError> {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let (image_id, patient_id) = ids_from_stem(path);
    match ext.as_str() {
        "png" => load_png(path, image_id, patient_id),
        "pgm" => load_pgm(path, image_id, patient_id),
        other => Err(ImageError::UnsupportedFormat(format!(
            "extension {other:?} on {}",
            path.display()
        ))),
    }
}

fn load_png(path: &Path, image_id: String, patient_id: String) -> Result<GrayImage, ImageError> {
    let file = File::open(path).map_err(|source| ImageError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let decoder = png::Decoder::new(file);
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImageError::CorruptRaster(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ImageError::CorruptRaster(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(ImageError::UnsupportedFormat(format!(
            "color type {:?}",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedFormat(format!(
            "bit depth {:?}",
            info.bit_depth
        )));
    }
    buf.truncate(info.buffer_size());
    GrayImage::new(info.width as usize, info.height as usize, buf, image_id, patient_id)
}

fn load_pgm(path: &Path, image_id: String, patient_id: String) -> Result<GrayImage, ImageError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let corrupt = |msg: &str| ImageError::CorruptRaster(format!("{msg} in {}", path.display()));

    /// Next whitespace-delimited token, skipping `#` comments.
    fn next_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
        let mut i = *pos;
        loop {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            break;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        *pos = i;
        (start < i).then_some((start, i))
    }
    let mut pos = 0usize;
    let read_token = |pos: &mut usize| -> Result<String, ImageError> {
        let (start, end) = next_token(&bytes, pos)
            .ok_or_else(|| ImageError::CorruptRaster(format!("truncated header in {}", path.display())))?;
        Ok(String::from_utf8_lossy(&bytes[start..end]).into_owned())
    };

    let magic = read_token(&mut pos)?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        _ => return Err(ImageError::UnsupportedFormat(format!("magic {magic:?}"))),
    };
    let width: usize = read_token(&mut pos)?.parse().map_err(|_| corrupt("bad width"))?;
    let height: usize = read_token(&mut pos)?.parse().map_err(|_| corrupt("bad height"))?;
    let maxval: usize = read_token(&mut pos)?.parse().map_err(|_| corrupt("bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::UnsupportedFormat(format!("maxval {maxval}")));
    }

    let pixels = if binary {
        let start = pos + 1; // single whitespace after maxval
        let end = start + width * height;
        if end > bytes.len() {
            return Err(corrupt("truncated raster"));
        }
        bytes[start..end].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v: usize = read_token(&mut pos)?.parse().map_err(|_| corrupt("bad sample"))?;
            if v > maxval {
                return Err(corrupt("sample exceeds maxval"));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    GrayImage::new(width, height, pixels, image_id, patient_id)
}

/// Write an image as an 8-bit grayscale PNG.
pub fn save_png(img: &GrayImage, path: &Path) -> Result<(), ImageError> {
    let file = File::create(path).map_err(|source| ImageError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| ImageError::CorruptRaster(e.to_string()))?;
    writer
        .write_image_data(&img.pixels)
        .map_err(|e| ImageError::CorruptRaster(e.to_string()))?;
    Ok(())
}

/// Detection thresholds for invalid scans and dual-view separators. The
/// values are calibrated on synthetic images only and deliberately exposed
/// as configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleaningConfig {
    /// Pixels at or below this intensity count as blank.
    pub blank_intensity: u8,
    /// Fraction of blank pixels beyond which a scan is invalid.
    pub blank_fraction: f64,
    /// Minimum width and height of a usable scan.
    pub min_side: usize,
    /// A separator column's mean intensity must not exceed this.
    pub separator_max_mean: f64,
    /// Columns flanking the separator band must average at least this.
    pub flank_min_mean: f64,
    /// Fraction of central columns scanned for a separator.
    pub central_fraction: f64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            blank_intensity: 5,
            blank_fraction: 0.98,
            min_side: 64,
            separator_max_mean: 5.0,
            flank_min_mean: 20.0,
            central_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleaningStatus {
    Valid,
    Invalid,
    DualView,
}

impl std::fmt::Display for CleaningStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CleaningStatus::Valid => "valid",
            CleaningStatus::Invalid => "invalid",
            CleaningStatus::DualView => "dual_view",
        })
    }
}

/// Outcome of a cleaning step. A dual-view verdict carries exactly two
/// sub-images whose pixel data are verbatim column slices of the parent.
#[derive(Debug, Clone)]
pub struct CleaningVerdict {
    pub status: CleaningStatus,
    pub reason: String,
    pub sub_images: Vec<GrayImage>,
}

/// Invalid-scan rules, checked in order: near-blank, too-small, zero
/// variance. The first failing rule names the reason. Pixels are never
/// modified.
pub fn detect_invalid(img: &GrayImage, cfg: &CleaningConfig) -> CleaningVerdict {
    let total = img.pixels.len();
    let blank = img
        .pixels
        .iter()
        .filter(|&&p| p <= cfg.blank_intensity)
        .count();
    if blank as f64 / total as f64 > cfg.blank_fraction {
        return CleaningVerdict {
            status: CleaningStatus::Invalid,
            reason: "near_blank".into(),
            sub_images: vec![],
        };
    }
    if img.width < cfg.min_side || img.height < cfg.min_side {
        return CleaningVerdict {
            status: CleaningStatus::Invalid,
            reason: "too_small".into(),
            sub_images: vec![],
        };
    }
    let first = img.pixels[0];
    if img.pixels.iter().all(|&p| p == first) {
        return CleaningVerdict {
            status: CleaningStatus::Invalid,
            reason: "zero_variance".into(),
            sub_images: vec![],
        };
    }
    CleaningVerdict {
        status: CleaningStatus::Valid,
        reason: String::new(),
        sub_images: vec![],
    }
}

/// Scan the central window of columns for a dark separator band flanked by
/// bright columns; when found, return the two halves exclusive of the band
/// (ids suffixed `-L` / `-R`), otherwise the original image unchanged.
pub fn split_dual_view(img: GrayImage, cfg: &CleaningConfig) -> CleaningVerdict {
    let w = img.width;
    let means: Vec<f64> = (0..w).map(|x| img.column_mean(x)).collect();
    let lo = (w as f64 * (0.5 - cfg.central_fraction / 2.0)).floor() as usize;
    let hi = ((w as f64 * (0.5 + cfg.central_fraction / 2.0)).ceil() as usize).min(w);

    let mut c = lo;
    while c < hi {
        if means[c] > cfg.separator_max_mean {
            c += 1;
            continue;
        }
        // expand the band; it may extend beyond the central window
        let mut c0 = c;
        while c0 > 0 && means[c0 - 1] <= cfg.separator_max_mean {
            c0 -= 1;
        }
        let mut c1 = c;
        while c1 + 1 < w && means[c1 + 1] <= cfg.separator_max_mean {
            c1 += 1;
        }
        let flanked = c0 > 0
            && c1 + 1 < w
            && means[c0 - 1] >= cfg.flank_min_mean
            && means[c1 + 1] >= cfg.flank_min_mean;
        if flanked {
            let left = img.column_slice(0, c0, format!("{}-L", img.image_id));
            let right = img.column_slice(c1 + 1, w, format!("{}-R", img.image_id));
            return CleaningVerdict {
                status: CleaningStatus::DualView,
                reason: format!("separator_cols_{c0}_{c1}"),
                sub_images: vec![left, right],
            };
        }
        c = c1 + 1;
    }
    CleaningVerdict {
        status: CleaningStatus::Valid,
        reason: String::new(),
        sub_images: vec![img],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropMode {
    CenterCrop,
    RandomCrop,
}

/// Real-valued image on [0, 1] produced by preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Standardize geometry and intensity for model input: resize the smaller
/// edge to `side` with bilinear interpolation (aspect preserved), take a
/// `side`x`side` crop (center, or seeded uniform-random for training), then
/// min-max normalize to [0, 1]. A constant crop maps to all zeros.
pub fn preprocess(img: &GrayImage, side: usize, mode: CropMode, seed: u64) -> NormalizedImage {
    assert!(side >= 1, "crop side must be at least 1");
    let (w, h) = (img.width, img.height);

    let (new_w, new_h) = if w <= h {
        (side, ((h as f64 * side as f64 / w as f64).round() as usize).max(side))
    } else {
        (((w as f64 * side as f64 / h as f64).round() as usize).max(side), side)
    };
    let resized = if (new_w, new_h) == (w, h) {
        img.pixels.iter().map(|&p| p as f64).collect()
    } else {
        bilinear_resize(&img.pixels, w, h, new_w, new_h)
    };

    let (x0, y0) = match mode {
        CropMode::CenterCrop => ((new_w - side) / 2, (new_h - side) / 2),
        CropMode::RandomCrop => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (rng.gen_range(0..=new_w - side), rng.gen_range(0..=new_h - side))
        }
    };

    let mut values = Vec::with_capacity(side * side);
    for y in y0..y0 + side {
        values.extend_from_slice(&resized[y * new_w + x0..y * new_w + x0 + side]);
    }

    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        for v in values.iter_mut() {
            *v = (*v - min) / (max - min);
        }
    } else {
        values.iter_mut().for_each(|v| *v = 0.0);
    }
    NormalizedImage {
        width: side,
        height: side,
        values,
    }
}

/// Bilinear interpolation with half-pixel centers; exact identity when the
/// size is unchanged.
fn bilinear_resize(src: &[u8], w: usize, h: usize, new_w: usize, new_h: usize) -> Vec<f64> {
    let x_ratio = w as f64 / new_w as f64;
    let y_ratio = h as f64 / new_h as f64;
    let mut out = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let sy = ((y as f64 + 0.5) * y_ratio - 0.5).max(0.0);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let wy = sy - y0 as f64;
        for x in 0..new_w {
            let sx = ((x as f64 + 0.5) * x_ratio - 0.5).max(0.0);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let wx = sx - x0 as f64;
            let top = src[y0 * w + x0] as f64 * (1.0 - wx) + src[y0 * w + x1] as f64 * wx;
            let bottom = src[y1 * w + x0] as f64 * (1.0 - wx) + src[y1 * w + x1] as f64 * wx;
            out.push(top * (1.0 - wy) + bottom * wy);
        }
    }
    out
}

/// Optional training-time jitter: seeded brightness shift and contrast
/// scaling about mid-gray. Off by default in every pipeline configuration.
pub fn jitter_brightness_contrast(
    img: &GrayImage,
    max_brightness: f64,
    max_contrast: f64,
    seed: u64,
) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let brightness = rng.gen_range(-max_brightness..=max_brightness);
    let contrast = 1.0 + rng.gen_range(-max_contrast..=max_contrast);
    let pixels = img
        .pixels
        .iter()
        .map(|&p| (contrast * (p as f64 - 128.0) + 128.0 + brightness).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
        image_id: img.image_id.clone(),
        patient_id: img.patient_id.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn flat(width: usize, height: usize, value: u8) -> GrayImage {
        GrayImage::new(width, height, vec![value; width * height], "img", "p").unwrap()
    }

    #[test]
    fn dimensions_validated() {
        assert!(GrayImage::new(0, 4, vec![], "i", "p").is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3], "i", "p").is_err());
    }

    #[test]
    fn pgm_roundtrip_binary_and_ascii() {
        let dir = tempfile::tempdir().unwrap();
        let p5 = dir.path().join("a__1.pgm");
        let mut f = File::create(&p5).unwrap();
        f.write_all(b"P5\n# comment\n4 4\n255\n").unwrap();
        f.write_all(&[128u8; 16]).unwrap();
        drop(f);
        let img = load_image(&p5).unwrap();
        assert_eq!((img.width(), img.height()), (4, 4));
        assert!(img.pixels().iter().all(|&p| p == 128));
        assert_eq!(img.image_id, "a__1");
        assert_eq!(img.patient_id, "a");

        let p2 = dir.path().join("b.pgm");
        std::fs::write(&p2, "P2\n1 1\n255\n255\n").unwrap();
        let img = load_image(&p2).unwrap();
        assert_eq!(img.pixels(), &[255]);
    }

    #[test]
    fn truncated_pgm_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P5\n8 8\n255\nshort").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(err.to_string().contains("corrupt_raster"), "{err}");
    }

    #[test]
    fn truncated_png_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("ok.png");
        save_png(&flat(16, 16, 77), &good).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        let bad = dir.path().join("bad.png");
        std::fs::write(&bad, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_image(&bad).unwrap_err();
        assert!(matches!(err, ImageError::CorruptRaster(_)), "{err}");
    }

    #[test]
    fn png_roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..64 * 32).map(|i| (i * 7 % 256) as u8).collect();
        let img = GrayImage::new(64, 32, pixels.clone(), "x__0", "x").unwrap();
        let path = dir.path().join("x__0.png");
        save_png(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.pixels(), &pixels[..]);
    }

    #[test]
    fn rgb_png_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let file = File::create(&path).unwrap();
        let mut enc = png::Encoder::new(BufWriter::new(file), 2, 2);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header().unwrap().write_image_data(&[0u8; 12]).unwrap();
        assert!(matches!(
            load_image(&path),
            Err(ImageError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn invalid_rules_in_order() {
        let cfg = CleaningConfig::default();
        let v = detect_invalid(&flat(256, 256, 0), &cfg);
        assert_eq!(v.status, CleaningStatus::Invalid);
        assert_eq!(v.reason, "near_blank");

        let v = detect_invalid(&flat(256, 256, 200), &cfg);
        assert_eq!(v.reason, "zero_variance");

        let mut px = vec![200u8; 32 * 500];
        px[0] = 10; // non-constant so the size rule is the one that fires
        let small = GrayImage::new(32, 500, px, "i", "p").unwrap();
        let v = detect_invalid(&small, &cfg);
        assert_eq!(v.reason, "too_small");

        let mut px = vec![100u8; 128 * 128];
        px[0] = 50;
        let ok = GrayImage::new(128, 128, px, "i", "p").unwrap();
        assert_eq!(detect_invalid(&ok, &cfg).status, CleaningStatus::Valid);
    }

    fn panels_with_band(panel_w: usize, band_w: usize, h: usize, value: u8) -> GrayImage {
        let w = 2 * panel_w + band_w;
        let mut pixels = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                if x < panel_w || x >= panel_w + band_w {
                    pixels[y * w + x] = value;
                }
            }
        }
        GrayImage::new(w, h, pixels, "dual__0", "dual").unwrap()
    }

    #[test]
    fn dual_view_split_and_conservation() {
        let cfg = CleaningConfig::default();
        let img = panels_with_band(100, 10, 100, 180);
        let parent = img.clone();
        let v = split_dual_view(img, &cfg);
        assert_eq!(v.status, CleaningStatus::DualView);
        assert_eq!(v.sub_images.len(), 2);
        let (l, r) = (&v.sub_images[0], &v.sub_images[1]);
        assert_eq!(l.width() + r.width(), 200);
        assert!(l.width() + r.width() <= parent.width());
        assert_eq!(l.image_id, "dual__0-L");
        assert_eq!(r.image_id, "dual__0-R");
        // verbatim column slices of the parent
        for y in 0..parent.height() {
            for x in 0..l.width() {
                assert_eq!(l.get(x, y), parent.get(x, y));
            }
            for x in 0..r.width() {
                assert_eq!(r.get(x, y), parent.get(parent.width() - r.width() + x, y));
            }
        }
    }

    #[test]
    fn uniform_image_not_split() {
        let cfg = CleaningConfig::default();
        let img = flat(200, 100, 128);
        let v = split_dual_view(img, &cfg);
        assert_eq!(v.status, CleaningStatus::Valid);
        assert_eq!(v.sub_images.len(), 1);
        assert_eq!(v.sub_images[0].width(), 200);
    }

    #[test]
    fn separator_outside_central_window_ignored() {
        let cfg = CleaningConfig::default();
        // dark band at columns 10..20 of a 400-wide bright image
        let (w, h) = (400usize, 80usize);
        let mut pixels = vec![150u8; w * h];
        for y in 0..h {
            for x in 10..20 {
                pixels[y * w + x] = 0;
            }
        }
        let img = GrayImage::new(w, h, pixels, "i", "p").unwrap();
        let v = split_dual_view(img, &cfg);
        assert_eq!(v.status, CleaningStatus::Valid);
    }

    #[test]
    fn preprocess_same_size_normalizes_only() {
        let pixels: Vec<u8> = (0..224 * 224).map(|i| (i % 251) as u8).collect();
        let img = GrayImage::new(224, 224, pixels.clone(), "i", "p").unwrap();
        let out = preprocess(&img, 224, CropMode::CenterCrop, 0);
        assert_eq!((out.width, out.height), (224, 224));
        let min = *pixels.iter().min().unwrap() as f64;
        let max = *pixels.iter().max().unwrap() as f64;
        for (v, &p) in out.values.iter().zip(&pixels) {
            assert!((v - (p as f64 - min) / (max - min)).abs() < 1e-12);
        }
    }

    #[test]
    fn preprocess_constant_maps_to_zero() {
        let img = flat(224, 224, 57);
        let out = preprocess(&img, 224, CropMode::CenterCrop, 0);
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn preprocess_resize_geometry() {
        // 448x300 with side 224: smaller edge 300 -> 224, width rounds to 335
        assert_eq!((448f64 * 224.0 / 300.0).round() as usize, 335);
        let img = flat(448, 300, 9);
        let out = preprocess(&img, 224, CropMode::CenterCrop, 0);
        assert_eq!((out.width, out.height), (224, 224));

        // upscale path: smaller edge 100 -> 224
        let img = flat(150, 100, 9);
        let out = preprocess(&img, 224, CropMode::CenterCrop, 0);
        assert_eq!((out.width, out.height), (224, 224));
    }

    #[test]
    fn preprocess_range_and_extremes() {
        let mut px = vec![40u8; 300 * 280];
        px[300 * 140 + 150] = 250; // bright spot near center survives the crop
        let img = GrayImage::new(300, 280, px, "i", "p").unwrap();
        let out = preprocess(&img, 224, CropMode::CenterCrop, 0);
        let min = out.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = out.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn preprocess_idempotent_within_quantization() {
        let pixels: Vec<u8> = (0..224 * 224).map(|i| ((i / 224 + i % 224) % 256) as u8).collect();
        let img = GrayImage::new(224, 224, pixels, "i", "p").unwrap();
        let first = preprocess(&img, 224, CropMode::CenterCrop, 0);
        let quantized: Vec<u8> = first.values.iter().map(|v| (v * 255.0).round() as u8).collect();
        let requant = GrayImage::new(224, 224, quantized, "i", "p").unwrap();
        let second = preprocess(&requant, 224, CropMode::CenterCrop, 0);
        for (a, b) in first.values.iter().zip(&second.values) {
            assert!((a - b).abs() <= 1.0 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn random_crop_is_seeded() {
        // non-square so the resized image leaves horizontal crop freedom
        let pixels: Vec<u8> = (0..600 * 300).map(|i| (i % 256) as u8).collect();
        let img = GrayImage::new(600, 300, pixels, "i", "p").unwrap();
        let a = preprocess(&img, 128, CropMode::RandomCrop, 7);
        let b = preprocess(&img, 128, CropMode::RandomCrop, 7);
        assert_eq!(a, b);
        let some_seed_differs = (0..20u64)
            .any(|s| preprocess(&img, 128, CropMode::RandomCrop, s) != a);
        assert!(some_seed_differs);
    }

    #[test]
    fn bilinear_identity_at_same_size() {
        let src: Vec<u8> = (0..12).collect();
        let out = bilinear_resize(&src, 4, 3, 4, 3);
        for (o, s) in out.iter().zip(&src) {
            assert_eq!(*o, *s as f64);
        }
    }

    #[test]
    fn bilinear_hand_computed_midpoint() {
        // 2x1 [0, 100] -> 4x1: centers at src x = -0.25, 0.25, 0.75, 1.25
        let out = bilinear_resize(&[0, 100], 2, 1, 4, 1);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 25.0).abs() < 1e-12);
        assert!((out[2] - 75.0).abs() < 1e-12);
        assert_eq!(out[3], 100.0);
    }

    #[test]
    fn jitter_is_seeded_and_bounded() {
        let img = flat(64, 64, 100);
        let a = jitter_brightness_contrast(&img, 20.0, 0.2, 3);
        let b = jitter_brightness_contrast(&img, 20.0, 0.2, 3);
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|&p| (60..=140).contains(&p)));
    }
}
