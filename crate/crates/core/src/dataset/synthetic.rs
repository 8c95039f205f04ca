//! Seeded stand-in for hand radiographs.
//!
//! Each image shows four fingers of three phalanges plus a metacarpal, drawn
//! as bright elliptical segments on a dark noisy background. Sick images erode
//! the segment boundaries, darken the bone and narrow the joint gaps.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::{ColorImage, WORKING_HEIGHT, WORKING_WIDTH};
use crate::som::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub count_normal: usize,
    pub count_sick: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            count_normal: 12,
            count_sick: 30,
            width: WORKING_WIDTH,
            height: WORKING_HEIGHT,
            seed: 7,
        }
    }
}

struct Segment {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    peak: f64,
    /// Boundary erosion depth as a fraction of the radius.
    erosion: f64,
    lobes: f64,
    phase: f64,
}

impl Segment {
    fn intensity(&self, x: f64, y: f64) -> Option<f64> {
        let u = (x - self.cx) / self.rx;
        let v = (y - self.cy) / self.ry;
        let rho2 = u * u + v * v;
        if rho2 >= 1.0 {
            return None;
        }
        let edge = if self.erosion > 0.0 {
            let bump = 0.5 + 0.5 * (self.lobes * v.atan2(u) + self.phase).sin();
            1.0 - self.erosion * bump
        } else {
            1.0
        };
        if rho2 >= edge * edge {
            return None;
        }
        Some(self.peak * (1.0 - 0.35 * rho2))
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.rx,
            self.cx + self.rx,
            self.cy - self.ry,
            self.cy + self.ry,
        )
    }
}

fn layout(rng: &mut ChaCha8Rng, label: Label, width: f64, height: f64) -> Vec<Segment> {
    let sick = label == Label::Sick;
    let severity = if sick { rng.gen_range(0.85..1.0) } else { 0.0 };
    let peak = if sick {
        rng.gen_range(130.0..140.0)
    } else {
        rng.gen_range(212.0..225.0)
    };
    // Joint space between consecutive bones, in units of image height.
    let gap = if sick {
        0.035 - 0.025 * severity
    } else {
        rng.gen_range(0.035..0.045)
    };
    let bone_lengths = [0.12, 0.15, 0.19, 0.26];
    let mut segments = Vec::new();
    for finger in 0..4 {
        let cx = width * (0.2 + 0.2 * finger as f64) + rng.gen_range(-2.0..2.0);
        let half_width = width * rng.gen_range(0.055..0.065);
        let mut top = height * rng.gen_range(0.04..0.08);
        for &len in &bone_lengths {
            let ry = 0.5 * len * height * rng.gen_range(0.95..1.05);
            segments.push(Segment {
                cx,
                cy: top + ry,
                rx: half_width * if sick { 1.0 - 0.25 * severity } else { 1.0 },
                ry,
                peak: peak + rng.gen_range(-6.0..6.0),
                erosion: if sick { 0.25 * severity } else { 0.0 },
                lobes: rng.gen_range(5.0..9.0_f64).round(),
                phase: rng.gen_range(0.0..2.0 * PI),
            });
            top += 2.0 * ry + gap * height;
        }
    }
    segments
}

fn render(rng: &mut ChaCha8Rng, label: Label, width: u32, height: u32) -> ColorImage {
    let (w, h) = (f64::from(width), f64::from(height));
    let segments = layout(rng, label, w, h);
    let background = rng.gen_range(20.0..35.0);
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        let fy = f64::from(y) + 0.5;
        let shade = background + 10.0 * fy / h;
        for x in 0..width {
            let fx = f64::from(x) + 0.5;
            let bone = segments
                .iter()
                .filter(|s| {
                    let (x0, x1, y0, y1) = s.bounds();
                    fx >= x0 && fx <= x1 && fy >= y0 && fy <= y1
                })
                .filter_map(|s| s.intensity(fx, fy))
                .fold(0.0f64, f64::max);
            let base = shade.max(bone) + rng.gen_range(-6.0..6.0);
            let mut px = [0u8; 3];
            for c in &mut px {
                *c = (base + rng.gen_range(-2.0..2.0)).round().clamp(0.0, 255.0) as u8;
            }
            pixels.push(px);
        }
    }
    ColorImage::new(width, height, pixels).expect("pixel count matches dimensions")
}

/// Generates `count_normal` Normal images followed by `count_sick` Sick ones.
/// Image `i` draws from ChaCha8 stream `i` of the spec seed, so the corpus is
/// a pure function of the spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Vec<(ColorImage, Label)> {
    let labels = std::iter::repeat_n(Label::Normal, spec.count_normal)
        .chain(std::iter::repeat_n(Label::Sick, spec.count_sick));
    labels
        .enumerate()
        .map(|(i, label)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            (render(&mut rng, label, spec.width, spec.height), label)
        })
        .collect()
}
