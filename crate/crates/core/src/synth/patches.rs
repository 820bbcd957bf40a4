use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FaceModel, Palette, BOX_A, LID_B};
use crate::classify::EyeState;
use crate::raster::GrayImage;

/// Randomized eye-crop dataset, cropped the way the runtime pipeline crops
/// tracked eyes (width of the eye box, height two thirds of it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchSpec {
    pub per_class: usize,
    pub seed: u64,
    /// Upper bound of the per-patch noise σ (drawn uniformly from [1, max]).
    pub max_noise: f64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            per_class: 1000,
            seed: 0,
            max_noise: 24.0,
        }
    }
}

/// One random eye crop in the given state.
pub fn eye_patch(state: EyeState, rng: &mut ChaCha8Rng, max_noise: f64) -> GrayImage {
    let size = rng.gen_range(60.0..140.0);
    let pal = Palette {
        skin: rng.gen_range(145.0..195.0),
        sclera: rng.gen_range(195.0..235.0),
        iris: rng.gen_range(20.0..70.0),
        lid: rng.gen_range(25.0..80.0),
        ..Palette::default()
    };
    let face = FaceModel {
        x: 0.0,
        y: 0.0,
        size,
        eyes: [Some(state), None],
        gaze: rng.gen_range(-0.04..0.04),
        lid: LID_B * rng.gen_range(0.7..1.6),
    };
    let c = face.eye_center(0);
    let w = (2.0 * BOX_A * size * rng.gen_range(0.85..1.15)).round().max(8.0);
    let h = (w * 2.0 / 3.0).round().max(8.0);
    // a tracked lid bar slides sideways more than an iris does
    let x0 = c.x + rng.gen_range(-0.06..0.06) * size - w / 2.0;
    let y0 = c.y + rng.gen_range(-0.03..0.03) * size - h / 2.0;
    let sigma = rng.gen_range(1.0..max_noise.max(1.0 + 1e-9));
    let noise = Normal::new(0.0, sigma).expect("positive sigma");
    let gain = rng.gen_range(0.7..1.2);
    let offset = rng.gen_range(-25.0..25.0);
    GrayImage::from_fn(w as usize, h as usize, |x, y| {
        let v = face.shade(&pal, x0 + x as f64 + 0.5, y0 + y as f64 + 0.5);
        (gain * v + offset + noise.sample(rng)).round().clamp(0.0, 255.0) as u8
    })
}

/// `per_class` open crops followed by `per_class` closed crops.
pub fn eye_patches(spec: &PatchSpec) -> (Vec<GrayImage>, Vec<GrayImage>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let open = (0..spec.per_class)
        .map(|_| eye_patch(EyeState::Open, &mut rng, spec.max_noise))
        .collect();
    let closed = (0..spec.per_class)
        .map(|_| eye_patch(EyeState::Closed, &mut rng, spec.max_noise))
        .collect();
    (open, closed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspect_and_determinism() {
        let spec = PatchSpec {
            per_class: 5,
            seed: 4,
            max_noise: 6.0,
        };
        let (open, closed) = eye_patches(&spec);
        assert_eq!((open.len(), closed.len()), (5, 5));
        for p in open.iter().chain(&closed) {
            let ratio = p.height() as f64 / p.width() as f64;
            assert!((ratio - 2.0 / 3.0).abs() < 0.05);
        }
        assert_eq!(eye_patches(&spec), (open, closed));
    }
}
