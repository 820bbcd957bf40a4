use serde::{Deserialize, Serialize};

use super::{Cascade, ScaledCascade};
use crate::error::{Error, Result};
use crate::raster::{GrayImage, IntegralImage, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub rect: Rect,
    pub neighbors: usize,
    /// Final-stage sum, maximized over the grouped raw hits.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectParams {
    pub scale_factor: f64,
    /// Smallest window width scanned; `None` means the base window.
    pub min_size: Option<usize>,
    pub max_size: Option<usize>,
    /// Window stride at the base scale; grows proportionally with scale.
    pub step: usize,
    pub min_neighbors: usize,
    pub group_eps: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            scale_factor: 1.1,
            min_size: None,
            max_size: None,
            step: 1,
            min_neighbors: 3,
            group_eps: 0.2,
        }
    }
}

pub fn detect_multiscale(c: &Cascade, img: &GrayImage, params: &DetectParams) -> Result<Vec<Detection>> {
    let ii = IntegralImage::new(img);
    detect_multiscale_in(c, &ii, img.bounds(), params)
}

/// Scans only windows lying entirely inside `roi`.
pub fn detect_multiscale_in(
    c: &Cascade,
    ii: &IntegralImage,
    roi: Rect,
    params: &DetectParams,
) -> Result<Vec<Detection>> {
    roi.check(ii.width(), ii.height())?;
    if !(params.scale_factor > 1.0) {
        return Err(Error::Config(format!("scale_factor {} must exceed 1", params.scale_factor)));
    }
    let min_w = params.min_size.unwrap_or(c.base_w).max(c.base_w);
    let mut hits = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let ww = (c.base_w as f64 * scale).round() as usize;
        let wh = (c.base_h as f64 * scale).round() as usize;
        if ww > roi.w || wh > roi.h || params.max_size.is_some_and(|m| ww > m) {
            break;
        }
        if ww >= min_w {
            let sc = ScaledCascade::new(c, ww as f64 / c.base_w as f64, ww, wh);
            let stride = ((params.step.max(1) as f64) * scale).round().max(1.0) as usize;
            let mut y = roi.y;
            while y + wh <= roi.bottom() {
                let mut x = roi.x;
                while x + ww <= roi.right() {
                    let v = sc.eval(ii, x, y);
                    if v.accepted {
                        hits.push((Rect::new(x, y, ww, wh), v.score));
                    }
                    x += stride;
                }
                y += stride;
            }
        }
        scale *= params.scale_factor;
    }
    Ok(group_scored(&hits, params.min_neighbors, params.group_eps))
}

fn similar(a: &Rect, b: &Rect, eps: f64) -> bool {
    let delta = eps * (a.w + b.w + a.h + b.h) as f64 / 4.0;
    let d = |p: usize, q: usize| (p as f64 - q as f64).abs() <= delta;
    d(a.x, b.x) && d(a.y, b.y) && d(a.right(), b.right()) && d(a.bottom(), b.bottom())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Per cluster: count, Σleft, Σtop, Σright, Σbottom, max score.
type ClusterSums = (usize, f64, f64, f64, f64, f64);

pub fn group_detections(raw: &[Rect], min_neighbors: usize, eps: f64) -> Vec<Detection> {
    let scored: Vec<(Rect, f64)> = raw.iter().map(|&r| (r, 0.0)).collect();
    group_scored(&scored, min_neighbors, eps)
}

/// Partitions hits into similarity clusters (transitive closure), drops
/// clusters smaller than `min_neighbors` and averages each survivor's edges.
/// Output is sorted by x, then y, then width.
pub fn group_scored(raw: &[(Rect, f64)], min_neighbors: usize, eps: f64) -> Vec<Detection> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if similar(&raw[i].0, &raw[j].0, eps) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut acc: Vec<Option<ClusterSums>> = vec![None; n];
    for (i, &(r, s)) in raw.iter().enumerate() {
        let root = find(&mut parent, i);
        let e = acc[root].get_or_insert((0, 0.0, 0.0, 0.0, 0.0, f64::NEG_INFINITY));
        e.0 += 1;
        e.1 += r.x as f64;
        e.2 += r.y as f64;
        e.3 += r.right() as f64;
        e.4 += r.bottom() as f64;
        e.5 = e.5.max(s);
    }
    let mut out: Vec<Detection> = acc
        .into_iter()
        .flatten()
        .filter(|e| e.0 >= min_neighbors.max(1))
        .map(|(k, l, t, r, b, s)| {
            let k = k as f64;
            let (l, t, r, b) = ((l / k).round(), (t / k).round(), (r / k).round(), (b / k).round());
            Detection {
                rect: Rect::new(l as usize, t as usize, (r - l) as usize, (b - t) as usize),
                neighbors: k as usize,
                score: s,
            }
        })
        .collect();
    out.sort_by_key(|d| (d.rect.x, d.rect.y, d.rect.w));
    out
}

/// Eye search regions as fractions of the face rect. The image-right region
/// mirrors the image-left one about the face midline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyeRoiConfig {
    pub x_outer: f64,
    pub x_inner: f64,
    pub y_top: f64,
    pub y_bottom: f64,
}

impl Default for EyeRoiConfig {
    fn default() -> Self {
        EyeRoiConfig {
            x_outer: 0.10,
            x_inner: 0.50,
            y_top: 0.18,
            y_bottom: 0.55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeRois {
    /// Region on the image-left side of the face.
    pub left: Rect,
    pub right: Rect,
}

pub fn eye_rois(face: Rect, width: usize, height: usize, cfg: &EyeRoiConfig) -> Result<EyeRois> {
    if face.w < 20 || face.h < 20 {
        return Err(Error::Domain(format!("face {face} smaller than 20x20")));
    }
    let fx = |f: f64| face.x + (f * face.w as f64).round() as usize;
    let fy = |f: f64| face.y + (f * face.h as f64).round() as usize;
    let (y0, y1) = (fy(cfg.y_top), fy(cfg.y_bottom));
    let span = |x0: usize, x1: usize| -> Result<Rect> {
        Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
            .clip(width, height)
            .ok_or_else(|| Error::Domain(format!("eye region of face {face} lies outside the image")))
    };
    Ok(EyeRois {
        left: span(fx(cfg.x_outer), fx(cfg.x_inner))?,
        right: span(fx(1.0 - cfg.x_inner), fx(1.0 - cfg.x_outer))?,
    })
}
