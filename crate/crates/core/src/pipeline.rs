use crate::error::Result;
use crate::features::{extract_features, validate_bins, FeatureVector, DEFAULT_BINS};
use crate::imaging::{
    binarize, compute_threshold, contrast_stretch, resize, to_grayscale, BinaryImage, ColorImage,
    ContrastSetting, GrayImage, WORKING_HEIGHT, WORKING_WIDTH,
};

/// Knobs for turning one radiograph into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineSettings {
    pub width: u32,
    pub height: u32,
    pub contrast: ContrastSetting,
    pub bins: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            width: WORKING_WIDTH,
            height: WORKING_HEIGHT,
            contrast: ContrastSetting::default(),
            bins: DEFAULT_BINS,
        }
    }
}

/// Every intermediate raster of one pipeline pass.
#[derive(Debug, Clone)]
pub struct Processed {
    /// Contrast-stretched grayscale image at working resolution.
    pub gray: GrayImage,
    pub threshold: f64,
    pub mask: BinaryImage,
    pub features: FeatureVector,
}

/// resize -> grayscale -> contrast stretch -> threshold -> masked histogram features.
pub fn process(
    img: &ColorImage,
    settings: &PipelineSettings,
    source_id: &str,
) -> Result<Processed> {
    validate_bins(settings.bins)?;
    let resized = resize(img, settings.width, settings.height)?;
    let gray = contrast_stretch(&to_grayscale(&resized), settings.contrast)?;
    let threshold = compute_threshold(&gray)?;
    let mask = binarize(&gray, threshold);
    let features = extract_features(&gray, &mask, settings.bins, source_id)?;
    Ok(Processed {
        gray,
        threshold,
        mask,
        features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bright_square_on_dark_background() {
        let mut pixels = vec![[10u8, 10, 10]; 20 * 20];
        for y in 5..15 {
            for x in 5..15 {
                pixels[y * 20 + x] = [200, 200, 200];
            }
        }
        let img = ColorImage::new(20, 20, pixels).unwrap();
        let settings = PipelineSettings {
            width: 20,
            height: 20,
            contrast: ContrastSetting::fixed(1.0),
            bins: 32,
        };
        let out = process(&img, &settings, "sq").unwrap();
        assert_eq!(out.mask.foreground_count(), 100);
        assert_eq!(out.features.len(), 34);
        assert_eq!(out.features.values[200 * 32 / 256], 1.0);
        assert_eq!(out.features.values[33], 0.25);
        assert_eq!(out.features.source_id, "sq");
    }
}
