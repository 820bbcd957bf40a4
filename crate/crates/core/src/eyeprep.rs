//! Illumination normalization of eye patches ahead of feature extraction:
//! gamma correction, difference-of-Gaussians band-pass and two-stage contrast
//! equalization, on a canonical 48×32 patch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{FloatImage, GrayImage};

pub const PATCH_W: usize = 48;
pub const PATCH_H: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub gamma: f64,
    pub sigma_inner: f64,
    pub sigma_outer: f64,
    pub a: f64,
    pub tau: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            gamma: 0.2,
            sigma_inner: 1.0,
            sigma_outer: 2.0,
            a: 0.1,
            tau: 10.0,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(self.sigma_inner > 0.0 && self.sigma_inner < self.sigma_outer) {
            return Err(Error::Config("need 0 < sigma_inner < sigma_outer".into()));
        }
        if !(self.a > 0.0 && self.tau > 0.0) {
            return Err(Error::Config("a and tau must be positive".into()));
        }
        Ok(())
    }
}

/// Normalized 48×32 eye patch.
#[derive(Debug, Clone, PartialEq)]
pub struct EyePatch {
    pixels: FloatImage,
}

impl EyePatch {
    pub fn new(pixels: FloatImage) -> Result<Self> {
        if pixels.width() != PATCH_W || pixels.height() != PATCH_H {
            return Err(Error::Dimension(format!(
                "eye patch must be {PATCH_W}x{PATCH_H}, got {}x{}",
                pixels.width(),
                pixels.height()
            )));
        }
        Ok(EyePatch { pixels })
    }

    pub fn pixels(&self) -> &FloatImage {
        &self.pixels
    }
}

pub fn gamma_correct(img: &FloatImage, gamma: f64) -> Result<FloatImage> {
    if let Some(v) = img.data().iter().find(|v| **v < 0.0) {
        return Err(Error::Domain(format!("gamma correction of negative value {v}")));
    }
    Ok(img.map(|v| v.powf(gamma)))
}

/// Normalized 1-D Gaussian truncated at radius ⌈3σ⌉.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable convolution with replicate-edge padding.
pub fn gaussian_blur(img: &FloatImage, sigma: f64) -> FloatImage {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (img.width(), img.height());
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let horiz = FloatImage::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * img.get(clamp(x as i64 + i as i64 - r, w), y))
            .sum()
    });
    FloatImage::from_fn(w, h, |x, y| {
        k.iter()
            .enumerate()
            .map(|(i, kv)| kv * horiz.get(x, clamp(y as i64 + i as i64 - r, h)))
            .sum()
    })
}

pub fn dog_filter(img: &FloatImage, sigma_inner: f64, sigma_outer: f64) -> Result<FloatImage> {
    if !(sigma_inner > 0.0 && sigma_inner < sigma_outer) {
        return Err(Error::Domain(format!(
            "DoG needs 0 < sigma_inner < sigma_outer, got {sigma_inner}, {sigma_outer}"
        )));
    }
    let inner = gaussian_blur(img, sigma_inner);
    let outer = gaussian_blur(img, sigma_outer);
    FloatImage::new(
        img.width(),
        img.height(),
        inner.data().iter().zip(outer.data()).map(|(a, b)| a - b).collect(),
    )
}

fn power_mean(values: impl Iterator<Item = f64>, a: f64, n: usize) -> f64 {
    (values.map(|v| v.powf(a)).sum::<f64>() / n as f64).powf(1.0 / a)
}

/// Two-stage robust rescale followed by tanh compression into (−τ, τ).
pub fn contrast_equalize(img: &FloatImage, a: f64, tau: f64) -> FloatImage {
    let n = img.data().len();
    let s1 = power_mean(img.data().iter().map(|v| v.abs()), a, n);
    if !(s1 > 0.0) {
        return img.clone();
    }
    let stage1 = img.map(|v| v / s1);
    let s2 = power_mean(stage1.data().iter().map(|v| v.abs().min(tau)), a, n);
    if !(s2 > 0.0) {
        return img.clone();
    }
    stage1.map(|v| tau * (v / s2 / tau).tanh())
}

/// Stage (1) of [`contrast_equalize`] alone.
pub fn power_mean_normalize(img: &FloatImage, a: f64) -> FloatImage {
    let s1 = power_mean(img.data().iter().map(|v| v.abs()), a, img.data().len());
    if s1 > 0.0 {
        img.map(|v| v / s1)
    } else {
        img.clone()
    }
}

pub fn preprocess(raw_eye: &GrayImage, cfg: &PrepConfig) -> Result<EyePatch> {
    preprocess_intensity(&raw_eye.to_float(), cfg)
}

/// As [`preprocess`] for real-valued intensities on the 0–255 scale.
pub fn preprocess_intensity(raw_eye: &FloatImage, cfg: &PrepConfig) -> Result<EyePatch> {
    if raw_eye.width() < 8 || raw_eye.height() < 8 {
        return Err(Error::Dimension(format!(
            "eye region {}x{} smaller than 8x8",
            raw_eye.width(),
            raw_eye.height()
        )));
    }
    let unit = raw_eye
        .resize_bilinear(PATCH_W, PATCH_H)
        .map(|v| (v / 255.0).clamp(0.0, 1.0));
    let g = gamma_correct(&unit, cfg.gamma)?;
    let d = dog_filter(&g, cfg.sigma_inner, cfg.sigma_outer)?;
    EyePatch::new(contrast_equalize(&d, cfg.a, cfg.tau))
}
