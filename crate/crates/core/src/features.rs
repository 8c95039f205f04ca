//! Histogram feature vectors and per-dimension min-max scaling.

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage};

/// Default number of histogram bins (8 gray levels per bin).
pub const DEFAULT_BINS: usize = 32;

/// Gray-level distribution over the masked-in pixels of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Probability per bin, `counts[i] / total`.
    pub bins: Vec<f64>,
    /// Raw pixel count per bin.
    pub counts: Vec<u64>,
    /// Number of contributing pixels.
    pub total: u64,
}

/// One sample: `bins` histogram probabilities followed by the mean foreground
/// intensity and the foreground area fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub source_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, source_id: impl Into<String>) -> Self {
        Self {
            values,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn validate_bins(bins: usize) -> Result<()> {
    if bins == 0 || bins > 256 || 256 % bins != 0 {
        return Err(Error::InvalidBins(bins));
    }
    Ok(())
}

fn check_mask(gray: &GrayImage, mask: &BinaryImage) -> Result<()> {
    if gray.width() != mask.width() || gray.height() != mask.height() {
        return Err(Error::MaskMismatch);
    }
    Ok(())
}

/// Histogram of the pixels where `mask` is 1. Intensity `v` falls in bin
/// `v * bins / 256`.
pub fn histogram(gray: &GrayImage, mask: &BinaryImage, bins: usize) -> Result<Histogram> {
    check_mask(gray, mask)?;
    validate_bins(bins)?;
    let mut counts = vec![0u64; bins];
    for (&p, _) in gray
        .pixels()
        .iter()
        .zip(mask.pixels())
        .filter(|(_, &m)| m == 1)
    {
        counts[p as usize * bins / 256] += 1;
    }
    let total: u64 = counts.iter().sum();
    let bins = if total == 0 {
        vec![0.0; counts.len()]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    Ok(Histogram {
        bins,
        counts,
        total,
    })
}

pub fn extract_features(
    gray: &GrayImage,
    mask: &BinaryImage,
    bins: usize,
    source_id: impl Into<String>,
) -> Result<FeatureVector> {
    let hist = histogram(gray, mask, bins)?;
    let (intensity, area) = if hist.total == 0 {
        (0.0, 0.0)
    } else {
        let sum: u64 = gray
            .pixels()
            .iter()
            .zip(mask.pixels())
            .filter(|(_, &m)| m == 1)
            .map(|(&p, _)| u64::from(p))
            .sum();
        let mean = sum as f64 / hist.total as f64;
        let area = hist.total as f64 / gray.pixels().len() as f64;
        (mean / 255.0, area)
    };
    let mut values = hist.bins;
    values.push(intensity);
    values.push(area);
    Ok(FeatureVector::new(values, source_id))
}

/// Fitted state of a min-max scaler onto `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
}

impl NormalizationParams {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>, upper: f64, lower: f64) -> Result<Self> {
        if mins.len() != maxs.len() {
            return Err(Error::DimensionMismatch {
                expected: mins.len(),
                actual: maxs.len(),
            });
        }
        if lower.partial_cmp(&upper) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidBounds);
        }
        // NaN on either side is rejected too
        if mins
            .iter()
            .zip(&maxs)
            .any(|(lo, hi)| lo.partial_cmp(hi).is_none_or(|o| o.is_gt()))
        {
            return Err(Error::InvalidConfig("min exceeds max".into()));
        }
        Ok(Self {
            mins,
            maxs,
            upper,
            lower,
        })
    }

    pub fn dims(&self) -> usize {
        self.mins.len()
    }

    fn check(&self, v: &FeatureVector) -> Result<()> {
        if v.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Maps a normalized vector back to the original scale. Constant
    /// dimensions return their fitted value.
    pub fn invert(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.check(v)?;
        let span = self.upper - self.lower;
        let values = v
            .values
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&y, (&lo, &hi))| {
                if hi == lo {
                    lo
                } else {
                    (y - self.lower) / span * (hi - lo) + lo
                }
            })
            .collect();
        Ok(FeatureVector::new(values, v.source_id.clone()))
    }
}

/// Records per-dimension minimum and maximum over `samples`.
pub fn minmax_fit(
    samples: &[FeatureVector],
    upper: f64,
    lower: f64,
) -> Result<NormalizationParams> {
    let first = samples.first().ok_or(Error::NoSamples)?;
    if lower.partial_cmp(&upper) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidBounds);
    }
    let dims = first.len();
    let mut mins = first.values.clone();
    let mut maxs = first.values.clone();
    for s in &samples[1..] {
        if s.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: s.len(),
            });
        }
        for (i, &v) in s.values.iter().enumerate() {
            mins[i] = mins[i].min(v);
            maxs[i] = maxs[i].max(v);
        }
    }
    Ok(NormalizationParams {
        mins,
        maxs,
        upper,
        lower,
    })
}

/// `(D - min) / (max - min) * (U - L) + L`, clamped to `[L, U]`.
///
/// The fitted extremes map to exactly `L` and `U`; constant dimensions map to
/// the midpoint `(U + L) / 2`.
pub fn minmax_apply(v: &FeatureVector, p: &NormalizationParams) -> Result<FeatureVector> {
    p.check(v)?;
    let span = p.upper - p.lower;
    let mid = 0.5 * (p.upper + p.lower);
    let values = v
        .values
        .iter()
        .zip(p.mins.iter().zip(&p.maxs))
        .map(|(&d, (&lo, &hi))| {
            if hi == lo {
                mid
            } else if d <= lo {
                p.lower
            } else if d >= hi {
                p.upper
            } else {
                ((d - lo) / (hi - lo) * span + p.lower).clamp(p.lower, p.upper)
            }
        })
        .collect();
    Ok(FeatureVector::new(values, v.source_id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec(), "t")
    }

    #[test]
    fn histogram_examples() {
        let g = GrayImage::new(4, 1, vec![0, 0, 255, 255]).unwrap();
        let h = histogram(&g, &BinaryImage::full(4, 1), 256).unwrap();
        assert_eq!(h.bins[0], 0.5);
        assert_eq!(h.bins[255], 0.5);
        assert_eq!(h.bins.iter().filter(|&&b| b != 0.0).count(), 2);
        assert_eq!(h.total, 4);

        let g = GrayImage::new(3, 1, vec![7, 100, 200]).unwrap();
        let m = BinaryImage::new(3, 1, vec![1, 0, 0]).unwrap();
        let h = histogram(&g, &m, 256).unwrap();
        assert_eq!(h.bins[7], 1.0);
        assert_eq!(h.total, 1);

        let h = histogram(&g, &BinaryImage::new(3, 1, vec![0; 3]).unwrap(), 32).unwrap();
        assert_eq!(h.total, 0);
        assert!(h.bins.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn histogram_errors() {
        let g = GrayImage::new(2, 1, vec![0, 0]).unwrap();
        let err = histogram(&g, &BinaryImage::full(1, 2), 32).unwrap_err();
        assert_eq!(err.to_string(), "mask/image dimension mismatch");
        for bins in [0, 3, 512] {
            assert!(matches!(
                histogram(&g, &BinaryImage::full(2, 1), bins),
                Err(Error::InvalidBins(_))
            ));
        }
    }

    #[test]
    fn feature_examples() {
        let g = GrayImage::new(2, 2, vec![255; 4]).unwrap();
        let f = extract_features(&g, &BinaryImage::full(2, 2), 32, "a").unwrap();
        assert_eq!(f.len(), 34);
        assert_eq!(f.values[31], 1.0);
        assert!(f.values[..31].iter().all(|&v| v == 0.0));
        assert_eq!(f.values[32], 1.0);
        assert_eq!(f.values[33], 1.0);

        let empty = BinaryImage::new(2, 2, vec![0; 4]).unwrap();
        let f = extract_features(&g, &empty, 32, "b").unwrap();
        assert_eq!(f.values, vec![0.0; 34]);

        let g = GrayImage::new(2, 2, vec![0, 0, 90, 90]).unwrap();
        let half = BinaryImage::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        let f = extract_features(&g, &half, 32, "c").unwrap();
        assert_eq!(f.values[0], 1.0);
        assert_eq!(f.values[32], 0.0);
        assert_eq!(f.values[33], 0.5);
    }

    #[test]
    fn fit_examples() {
        let p = minmax_fit(&[fv(&[2.0]), fv(&[4.0]), fv(&[6.0])], 1.0, 0.0).unwrap();
        assert_eq!((p.mins[0], p.maxs[0]), (2.0, 6.0));
        let p = minmax_fit(&[fv(&[3.0, 1.0])], 1.0, 0.0).unwrap();
        assert_eq!(p.mins, p.maxs);
        let p = minmax_fit(&[fv(&[3.0]), fv(&[3.0])], 1.0, 0.0).unwrap();
        assert_eq!(p.mins, vec![3.0]);
        assert_eq!(p.maxs, vec![3.0]);
    }

    #[test]
    fn fit_errors() {
        assert_eq!(
            minmax_fit(&[], 1.0, 0.0).unwrap_err().to_string(),
            "no samples"
        );
        assert_eq!(
            minmax_fit(&[fv(&[1.0])], 0.0, 0.0).unwrap_err().to_string(),
            "invalid bounds"
        );
        assert!(matches!(
            minmax_fit(&[fv(&[1.0]), fv(&[1.0, 2.0])], 1.0, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let p = minmax_fit(&[fv(&[2.0]), fv(&[4.0]), fv(&[6.0])], 1.0, 0.0).unwrap();
        assert_eq!(minmax_apply(&fv(&[4.0]), &p).unwrap().values, vec![0.5]);
        assert_eq!(minmax_apply(&fv(&[2.0]), &p).unwrap().values, vec![0.0]);
        assert_eq!(minmax_apply(&fv(&[6.0]), &p).unwrap().values, vec![1.0]);
        // out of range clamps
        assert_eq!(minmax_apply(&fv(&[9.0]), &p).unwrap().values, vec![1.0]);
        assert_eq!(minmax_apply(&fv(&[-9.0]), &p).unwrap().values, vec![0.0]);

        let c = minmax_fit(&[fv(&[3.0]), fv(&[3.0])], 1.0, 0.0).unwrap();
        assert_eq!(minmax_apply(&fv(&[3.0]), &c).unwrap().values, vec![0.5]);

        let shifted = minmax_fit(&[fv(&[2.0]), fv(&[6.0])], 5.0, -1.0).unwrap();
        assert_eq!(
            minmax_apply(&fv(&[4.0]), &shifted).unwrap().values,
            vec![2.0]
        );

        let err = minmax_apply(&fv(&[1.0, 2.0]), &p).unwrap_err();
        assert!(err.to_string().starts_with("dimension mismatch"));
    }

    proptest! {
        #[test]
        fn histogram_sums_to_one_and_ignores_order(
            mut pixels in proptest::collection::vec(any::<u8>(), 1..300),
            rot in 0usize..300,
        ) {
            let n = pixels.len() as u32;
            let g = GrayImage::new(n, 1, pixels.clone()).unwrap();
            let h = histogram(&g, &BinaryImage::full(n, 1), 32).unwrap();
            prop_assert!((h.bins.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let len = pixels.len();
            pixels.rotate_left(rot % len);
            pixels.reverse();
            let g2 = GrayImage::new(n, 1, pixels).unwrap();
            prop_assert_eq!(histogram(&g2, &BinaryImage::full(n, 1), 32).unwrap(), h);
        }

        #[test]
        fn apply_then_invert_recovers_inputs(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..10),
            lower in -5.0f64..0.0,
            width in 0.5f64..10.0,
        ) {
            let samples: Vec<_> = rows.iter().map(|r| fv(r)).collect();
            let p = minmax_fit(&samples, lower + width, lower).unwrap();
            for s in &samples {
                let y = minmax_apply(s, &p).unwrap();
                prop_assert!(y.values.iter().all(|&v| v >= p.lower && v <= p.upper));
                let back = p.invert(&y).unwrap();
                for (a, b) in back.values.iter().zip(&s.values) {
                    prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
        }
    }
}
