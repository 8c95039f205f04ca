//! Pixel-level preprocessing for hand radiographs.
//!
//! The stages run in this order inside the feature pipeline: nearest-neighbour
//! resize to the working resolution, channel-average grayscale, multiplicative
//! contrast stretch, iterative mean-split threshold and binarization.

use std::path::Path;

use image::{GrayImage as LumaBuffer, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};

/// Working resolution every radiograph is resampled to before feature extraction.
pub const WORKING_WIDTH: u32 = 150;
pub const WORKING_HEIGHT: u32 = 200;

/// Upper limit on mean-split refinements in [`iterate_threshold`].
pub const MAX_THRESHOLD_ITERATIONS: usize = 64;
/// Convergence tolerance, in gray levels, between consecutive threshold estimates.
pub const THRESHOLD_TOLERANCE: f64 = 0.5;

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

/// Foreground mask: 1 marks foreground, 0 background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

fn check_len(width: u32, height: u32, len: usize) -> Result<()> {
    let expected = width as usize * height as usize;
    if expected != len {
        return Err(Error::BufferSize {
            expected,
            actual: len,
        });
    }
    Ok(())
}

impl ColorImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_len(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![rgb; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Decodes a PNG or BMP file; any other pixel layout is converted to 8-bit RGB.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(Self::from(decoded.to_rgb8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buffer: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width, self.height, raw).expect("buffer length checked");
        buffer
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }
}

impl From<image::RgbImage> for ColorImage {
    fn from(buffer: image::RgbImage) -> Self {
        let (width, height) = buffer.dimensions();
        let pixels = buffer.pixels().map(|p| p.0).collect();
        Self {
            width,
            height,
            pixels,
        }
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_len(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        save_luma(path.as_ref(), self.width, self.height, self.pixels.clone())
    }
}

impl BinaryImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_len(width, height, pixels.len())?;
        if let Some(&bad) = pixels.iter().find(|&&p| p > 1) {
            return Err(Error::NotBinary(bad));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Mask with every pixel set to foreground.
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![1; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Saves foreground as white (255) and background as black.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw = self.pixels.iter().map(|&p| p * 255).collect();
        save_luma(path.as_ref(), self.width, self.height, raw)
    }
}

fn save_luma(path: &Path, width: u32, height: u32, raw: Vec<u8>) -> Result<()> {
    let buffer: LumaBuffer =
        ImageBuffer::<Luma<u8>, _>::from_raw(width, height, raw).expect("buffer length checked");
    buffer
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// How the contrast factor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastMode {
    /// Use the configured factor as is.
    Fixed,
    /// Stretch so the brightest pixel lands on 255.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastSetting {
    pub factor: f64,
    pub mode: ContrastMode,
}

impl ContrastSetting {
    pub fn fixed(factor: f64) -> Self {
        Self {
            factor,
            mode: ContrastMode::Fixed,
        }
    }

    pub fn auto() -> Self {
        Self {
            factor: 1.0,
            mode: ContrastMode::Auto,
        }
    }
}

impl Default for ContrastSetting {
    fn default() -> Self {
        Self::fixed(1.2)
    }
}

/// Round half up for non-negative values.
#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Nearest-neighbour resample: output pixel (x, y) copies source
/// `(x * w / target_w, y * h / target_h)` using integer division.
pub fn resize(img: &ColorImage, target_w: u32, target_h: u32) -> Result<ColorImage> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    if target_w == 0 || target_h == 0 {
        return Err(Error::InvalidTarget);
    }
    if target_w == img.width && target_h == img.height {
        return Ok(img.clone());
    }
    let src_cols: Vec<u32> = (0..target_w)
        .map(|x| (u64::from(x) * u64::from(img.width) / u64::from(target_w)) as u32)
        .collect();
    let mut pixels = Vec::with_capacity(target_w as usize * target_h as usize);
    for y in 0..target_h {
        let sy = (u64::from(y) * u64::from(img.height) / u64::from(target_h)) as u32;
        pixels.extend(src_cols.iter().map(|&sx| img.get(sx, sy)));
    }
    Ok(ColorImage {
        width: target_w,
        height: target_h,
        pixels,
    })
}

/// Multiplies every intensity by the contrast factor, rounding half up and
/// clamping to the 8-bit range.
pub fn contrast_stretch(img: &GrayImage, setting: ContrastSetting) -> Result<GrayImage> {
    // 256-entry lookup; every pixel with the same value maps identically.
    let lut: Vec<u8> = match setting.mode {
        ContrastMode::Fixed => {
            if !(setting.factor > 0.0 && setting.factor.is_finite()) {
                return Err(Error::NonPositiveContrast);
            }
            (0..=255u16)
                .map(|x| round_half_up(f64::from(x) * setting.factor).clamp(0.0, 255.0) as u8)
                .collect()
        }
        ContrastMode::Auto => match img.pixels.iter().copied().max() {
            None | Some(0) => return Ok(img.clone()),
            // round(x * 255 / max) in exact integer arithmetic
            Some(max) => {
                let max = u32::from(max);
                (0..=255u32)
                    .map(|x| ((2 * x * 255 + max) / (2 * max)).min(255) as u8)
                    .collect()
            }
        },
    };
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| lut[p as usize]).collect(),
    })
}

/// Channel average `(R + G + B) / 3`, rounded half up.
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let sum = u16::from(r) + u16::from(g) + u16::from(b);
            // sum / 3 never has a fractional part of exactly one half.
            ((sum + 1) / 3) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Outcome of the iterative mean-split threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFit {
    pub value: f64,
    /// Number of mean-split refinements evaluated.
    pub iterations: usize,
    pub converged: bool,
}

/// Mean of pixels at or below `t` and mean of pixels above it, computed from a
/// 256-bin count table. An empty side takes `t` itself.
pub fn split_means(counts: &[u64; 256], t: f64) -> (f64, f64) {
    let (mut n_lo, mut s_lo, mut n_hi, mut s_hi) = (0u64, 0u64, 0u64, 0u64);
    for (v, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        if (v as f64) <= t {
            n_lo += c;
            s_lo += c * v as u64;
        } else {
            n_hi += c;
            s_hi += c * v as u64;
        }
    }
    let mean = |s: u64, n: u64| if n == 0 { t } else { s as f64 / n as f64 };
    (mean(s_lo, n_lo), mean(s_hi, n_hi))
}

pub(crate) fn intensity_counts(img: &GrayImage) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for &p in &img.pixels {
        counts[p as usize] += 1;
    }
    counts
}

/// Iterative mean-split global threshold.
///
/// Starts at the image mean and repeatedly replaces T with the midpoint of the
/// two class means until successive estimates differ by less than half a gray
/// level. The returned value is the estimate whose refinement satisfied the
/// tolerance.
pub fn iterate_threshold(img: &GrayImage) -> Result<ThresholdFit> {
    if img.is_empty() {
        return Err(Error::EmptyImage);
    }
    let counts = intensity_counts(img);
    let n = img.pixels.len() as f64;
    let sum: u64 = counts.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let mut t = sum as f64 / n;

    let first = counts.iter().position(|&c| c > 0).unwrap_or(0);
    let last = counts.iter().rposition(|&c| c > 0).unwrap_or(0);
    if first == last {
        return Ok(ThresholdFit {
            value: first as f64,
            iterations: 0,
            converged: true,
        });
    }

    for iteration in 1..=MAX_THRESHOLD_ITERATIONS {
        let (lo, hi) = split_means(&counts, t);
        let next = 0.5 * (lo + hi);
        if (next - t).abs() < THRESHOLD_TOLERANCE {
            return Ok(ThresholdFit {
                value: t,
                iterations: iteration,
                converged: true,
            });
        }
        t = next;
    }
    Ok(ThresholdFit {
        value: t,
        iterations: MAX_THRESHOLD_ITERATIONS,
        converged: false,
    })
}

pub fn compute_threshold(img: &GrayImage) -> Result<f64> {
    iterate_threshold(img).map(|fit| fit.value)
}

/// Pixels strictly above `t` become foreground; ties go to background.
pub fn binarize(img: &GrayImage, t: f64) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        pixels: img
            .pixels
            .iter()
            .map(|&p| u8::from(f64::from(p) > t))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(pixels: Vec<u8>) -> GrayImage {
        let n = pixels.len() as u32;
        GrayImage::new(n, 1, pixels).unwrap()
    }

    #[test]
    fn constructors_check_buffer_length() {
        assert!(matches!(
            GrayImage::new(2, 2, vec![0; 3]),
            Err(Error::BufferSize {
                expected: 4,
                actual: 3
            })
        ));
        assert!(matches!(
            BinaryImage::new(1, 2, vec![0, 2]),
            Err(Error::NotBinary(2))
        ));
    }

    #[test]
    fn resize_identity_and_nearest() {
        let img =
            ColorImage::new(2, 2, vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]]).unwrap();
        assert_eq!(resize(&img, 2, 2).unwrap(), img);
        let one = resize(&img, 1, 1).unwrap();
        assert_eq!(one.pixels(), &[[1, 2, 3]]);

        let single = ColorImage::filled(1, 1, [10, 20, 30]);
        let up = resize(&single, 3, 3).unwrap();
        assert_eq!(up.pixels().len(), 9);
        assert!(up.pixels().iter().all(|&p| p == [10, 20, 30]));
    }

    #[test]
    fn resize_working_resolution_is_identity() {
        let pixels = (0..150 * 200)
            .map(|i| [(i % 256) as u8, (i / 7 % 256) as u8, 3])
            .collect();
        let img = ColorImage::new(150, 200, pixels).unwrap();
        assert_eq!(resize(&img, WORKING_WIDTH, WORKING_HEIGHT).unwrap(), img);
    }

    #[test]
    fn resize_rejects_empty_and_zero_target() {
        let empty = ColorImage::new(0, 0, vec![]).unwrap();
        let err = resize(&empty, 3, 3).unwrap_err();
        assert_eq!(err.to_string(), "empty input image");
        let img = ColorImage::filled(2, 2, [0, 0, 0]);
        assert!(matches!(resize(&img, 0, 1), Err(Error::InvalidTarget)));
    }

    #[test]
    fn contrast_examples() {
        let out = |factor: f64, p: u8| {
            contrast_stretch(&gray(vec![p]), ContrastSetting::fixed(factor))
                .unwrap()
                .pixels()[0]
        };
        assert_eq!(out(1.0, 77), 77);
        assert_eq!(out(1.5, 50), 75);
        assert_eq!(out(2.0, 200), 255);
        // 0.5 * 5 = 2.5 rounds up
        assert_eq!(out(0.5, 5), 3);
    }

    #[test]
    fn contrast_rejects_nonpositive_factor() {
        for f in [0.0, -1.0, f64::NAN] {
            let err = contrast_stretch(&gray(vec![1]), ContrastSetting::fixed(f)).unwrap_err();
            assert_eq!(err.to_string(), "contrast factor must be positive");
        }
    }

    #[test]
    fn contrast_auto_stretches_to_full_range() {
        let out = contrast_stretch(&gray(vec![0, 50, 100]), ContrastSetting::auto()).unwrap();
        assert_eq!(out.pixels(), &[0, 128, 255]);
        let black = gray(vec![0, 0]);
        assert_eq!(
            contrast_stretch(&black, ContrastSetting::auto()).unwrap(),
            black
        );
    }

    #[test]
    fn grayscale_examples() {
        let img = ColorImage::new(3, 1, vec![[100, 100, 100], [30, 60, 90], [0, 0, 0]]).unwrap();
        assert_eq!(to_grayscale(&img).pixels(), &[100, 60, 0]);
        // 1/3 rounds down, 2/3 rounds up
        let img = ColorImage::new(2, 1, vec![[1, 0, 0], [1, 1, 0]]).unwrap();
        assert_eq!(to_grayscale(&img).pixels(), &[0, 1]);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(compute_threshold(&gray(vec![100; 9])).unwrap(), 100.0);
        assert_eq!(
            compute_threshold(&gray(vec![0, 0, 255, 255])).unwrap(),
            127.5
        );
        assert_eq!(
            compute_threshold(&gray(vec![0, 200, 0, 200, 0, 200])).unwrap(),
            100.0
        );
        let err = compute_threshold(&GrayImage::new(0, 0, vec![]).unwrap()).unwrap_err();
        assert_eq!(err.to_string(), "empty input image");
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(binarize(&gray(vec![0, 255]), 127.5).pixels(), &[0, 1]);
        assert_eq!(binarize(&gray(vec![42; 4]), 42.0).pixels(), &[0; 4]);
        assert_eq!(binarize(&gray(vec![0, 128, 255]), 255.0).pixels(), &[0; 3]);
    }

    proptest! {
        #[test]
        fn unit_contrast_is_identity(pixels in proptest::collection::vec(any::<u8>(), 1..200)) {
            let img = gray(pixels);
            prop_assert_eq!(contrast_stretch(&img, ContrastSetting::fixed(1.0)).unwrap(), img);
        }

        #[test]
        fn threshold_is_a_fixed_point(pixels in proptest::collection::vec(any::<u8>(), 1..400)) {
            let img = gray(pixels);
            let fit = iterate_threshold(&img).unwrap();
            prop_assert!(fit.converged);
            prop_assert!(fit.iterations <= MAX_THRESHOLD_ITERATIONS);
            let (lo, hi) = split_means(&intensity_counts(&img), fit.value);
            prop_assert!((fit.value - 0.5 * (lo + hi)).abs() < THRESHOLD_TOLERANCE);
        }

        #[test]
        fn binarize_partitions(pixels in proptest::collection::vec(any::<u8>(), 1..200), t in 0.0f64..=255.0) {
            let img = gray(pixels);
            let mask = binarize(&img, t);
            let ones = mask.foreground_count();
            let zeros = mask.pixels().iter().filter(|&&p| p == 0).count();
            prop_assert_eq!(ones + zeros, img.pixels().len());
            for (&p, &m) in img.pixels().iter().zip(mask.pixels()) {
                prop_assert_eq!(m == 1, f64::from(p) > t);
            }
        }
    }
}
