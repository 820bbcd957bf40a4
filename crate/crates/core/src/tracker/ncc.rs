//! Zero-mean normalized cross-correlation over a search region.

use crate::error::{Error, Result};
use crate::raster::{FloatImage, GrayImage, Point, Rect};

/// Read access to a single-channel raster as reals.
pub trait Plane {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn value(&self, x: usize, y: usize) -> f64;
}

impl Plane for GrayImage {
    fn width(&self) -> usize {
        GrayImage::width(self)
    }
    fn height(&self) -> usize {
        GrayImage::height(self)
    }
    #[inline]
    fn value(&self, x: usize, y: usize) -> f64 {
        self.get(x, y) as f64
    }
}

impl Plane for FloatImage {
    fn width(&self) -> usize {
        FloatImage::width(self)
    }
    fn height(&self) -> usize {
        FloatImage::height(self)
    }
    #[inline]
    fn value(&self, x: usize, y: usize) -> f64 {
        self.get(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    /// Top-left corner of the best placement, image coordinates.
    pub x: usize,
    pub y: usize,
    /// Placement center: top-left plus half the template size (floored).
    pub center: Point,
    /// Correlation coefficient in [-1, 1].
    pub score: f64,
}

/// Best placement of `tpl` inside `roi`. Ties resolve to the smallest y, then
/// the smallest x. Windows with zero variance score 0.
pub fn ncc_match<I: Plane, T: Plane>(img: &I, roi: Rect, tpl: &T) -> Result<MatchResult> {
    roi.check(img.width(), img.height())?;
    let (tw, th) = (tpl.width(), tpl.height());
    if roi.w < tw || roi.h < th {
        return Err(Error::Dimension(format!(
            "search region {roi} smaller than {tw}x{th} template"
        )));
    }
    let n = (tw * th) as f64;
    let mut t: Vec<f64> = Vec::with_capacity(tw * th);
    for y in 0..th {
        for x in 0..tw {
            t.push(tpl.value(x, y));
        }
    }
    let t_mean = t.iter().sum::<f64>() / n;
    t.iter_mut().for_each(|v| *v -= t_mean);
    let t_energy: f64 = t.iter().map(|v| v * v).sum();
    if !(t_energy > 0.0) {
        return Err(Error::DegenerateTemplate);
    }

    // copy the search region once; correlate against contiguous rows
    let mut region = Vec::with_capacity(roi.area());
    for y in roi.y..roi.bottom() {
        for x in roi.x..roi.right() {
            region.push(img.value(x, y));
        }
    }
    let (rw, rh) = (roi.w, roi.h);
    let win = WindowStats::new(&region, rw, rh, tw, th);

    let mut best = MatchResult {
        x: roi.x,
        y: roi.y,
        center: Point::default(),
        score: f64::NEG_INFINITY,
    };
    for oy in 0..=rh - th {
        for ox in 0..=rw - tw {
            let mut cross = 0.0;
            for ty in 0..th {
                let row = &region[(oy + ty) * rw + ox..(oy + ty) * rw + ox + tw];
                let trow = &t[ty * tw..(ty + 1) * tw];
                cross += row.iter().zip(trow).map(|(a, b)| a * b).sum::<f64>();
            }
            let (s, sq) = win.at(ox, oy);
            let energy = sq - s * s / n;
            let score = if energy > 1e-12 * sq.max(1.0) {
                (cross / (t_energy * energy).sqrt()).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            if score > best.score {
                best.x = roi.x + ox;
                best.y = roi.y + oy;
                best.score = score;
            }
        }
    }
    best.center = Point::new((best.x + tw / 2) as f64, (best.y + th / 2) as f64);
    Ok(best)
}

/// Box sums of values and squared values for every template placement.
struct WindowStats {
    cols: usize,
    sums: Vec<(f64, f64)>,
}

impl WindowStats {
    fn new(region: &[f64], rw: usize, rh: usize, tw: usize, th: usize) -> Self {
        let stride = rw + 1;
        let mut s = vec![0.0; stride * (rh + 1)];
        let mut q = vec![0.0; stride * (rh + 1)];
        for y in 0..rh {
            let (mut rs, mut rq) = (0.0, 0.0);
            for x in 0..rw {
                let v = region[y * rw + x];
                rs += v;
                rq += v * v;
                s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + rs;
                q[(y + 1) * stride + x + 1] = q[y * stride + x + 1] + rq;
            }
        }
        let cols = rw - tw + 1;
        let mut sums = Vec::with_capacity(cols * (rh - th + 1));
        for oy in 0..=rh - th {
            for ox in 0..cols {
                let box_sum = |t: &[f64]| {
                    t[(oy + th) * stride + ox + tw] - t[oy * stride + ox + tw] - t[(oy + th) * stride + ox]
                        + t[oy * stride + ox]
                };
                sums.push((box_sum(&s), box_sum(&q)));
            }
        }
        WindowStats { cols, sums }
    }

    fn at(&self, ox: usize, oy: usize) -> (f64, f64) {
        self.sums[oy * self.cols + ox]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> GrayImage {
        GrayImage::from_fn(40, 30, |x, y| {
            let v = (x as f64 * 0.7).sin() * 60.0 + (y as f64 * 0.45).cos() * 50.0 + ((x * y) % 17) as f64 * 3.0;
            (v + 128.0).clamp(0.0, 255.0) as u8
        })
    }

    #[test]
    fn self_match_scores_one() {
        let img = scene();
        let src = Rect::new(13, 9, 9, 7);
        let tpl = img.crop(src).unwrap();
        let m = ncc_match(&img, Rect::new(5, 3, 25, 20), &tpl).unwrap();
        assert_eq!((m.x, m.y), (13, 9));
        assert!((m.score - 1.0).abs() < 1e-6);
        assert_eq!(m.center, Point::new(17.0, 12.0));
    }

    #[test]
    fn affine_intensity_change_keeps_match() {
        let img = scene().to_float();
        let tpl = FloatImage::from_fn(8, 6, |x, y| img.get(20 + x, 11 + y));
        let roi = Rect::new(2, 2, 36, 26);
        let a = ncc_match(&img, roi, &tpl).unwrap();
        let mapped = img.map(|v| 0.5 * v + 40.0);
        let b = ncc_match(&mapped, roi, &tpl).unwrap();
        assert_eq!((a.x, a.y), (b.x, b.y));
        assert!((a.score - b.score).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let img = scene();
        let tpl = GrayImage::filled(5, 5, 9);
        assert!(matches!(
            ncc_match(&img, Rect::new(0, 0, 10, 10), &tpl),
            Err(Error::DegenerateTemplate)
        ));
        let tpl = img.crop(Rect::new(0, 0, 6, 6)).unwrap();
        assert!(matches!(
            ncc_match(&img, Rect::new(0, 0, 5, 10), &tpl),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn flat_windows_score_zero() {
        let img = GrayImage::filled(20, 20, 77);
        let tpl = GrayImage::from_fn(4, 4, |x, _| (x * 40) as u8);
        let m = ncc_match(&img, img.bounds(), &tpl).unwrap();
        assert_eq!(m.score, 0.0);
        assert_eq!((m.x, m.y), (0, 0));
    }
}
