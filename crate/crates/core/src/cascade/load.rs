//! Reader for the cascade-classifier XML model layout (`stageType` BOOST,
//! `featureType` HAAR or LBP, trailing feature table).

use std::str::FromStr;

use super::xml::{self, Element};
use super::{
    Cascade, CascadeKind, Feature, HaarFeature, LbpFeature, Split, Stage, TreeNode,
    WeakClassifier, WeightedRect,
};
use crate::error::{Error, Result};
use crate::raster::Rect;

fn load_err(path: &str, message: impl Into<String>) -> Error {
    Error::CascadeLoad {
        path: path.to_string(),
        message: message.into(),
    }
}

fn child<'a>(e: &'a Element, name: &str, path: &str) -> Result<&'a Element> {
    e.child(name)
        .ok_or_else(|| load_err(path, format!("missing <{name}>")))
}

fn scalar<T: FromStr>(e: &Element, name: &str, path: &str) -> Result<T> {
    let c = child(e, name, path)?;
    let t = c.text();
    t.parse()
        .map_err(|_| load_err(&format!("{path}/{name}"), format!("cannot parse {t:?}")))
}

fn numbers(e: &Element, path: &str) -> Result<Vec<f64>> {
    e.text()
        .split_ascii_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| load_err(path, format!("bad number {tok:?}")))
        })
        .collect()
}

fn as_int(v: f64, path: &str) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(load_err(path, format!("expected integer, got {v}")));
    }
    Ok(v as i64)
}

fn as_rect(vals: &[f64], path: &str) -> Result<Rect> {
    let mut out = [0usize; 4];
    for (o, &v) in out.iter_mut().zip(vals) {
        let i = as_int(v, path)?;
        if i < 0 {
            return Err(load_err(path, "negative rect coordinate"));
        }
        *o = i as usize;
    }
    if out[2] == 0 || out[3] == 0 {
        return Err(load_err(path, "empty rect"));
    }
    Ok(Rect::new(out[0], out[1], out[2], out[3]))
}

pub fn load_cascade(text: &str) -> Result<Cascade> {
    let root = xml::parse(text).map_err(|e| load_err(&format!("byte {}", e.offset), e.message))?;
    let (cascade, path) = if root.name == "cascade" {
        (&root, "cascade".to_string())
    } else if let Some(c) = root.child("cascade") {
        (c, format!("{}/cascade", root.name))
    } else {
        let legacy = root
            .elements()
            .any(|e| e.attr("type_id") == Some("opencv-haar-classifier"));
        let msg = if legacy {
            "legacy haar-classifier layout is not supported"
        } else {
            "missing <cascade>"
        };
        return Err(load_err(&root.name, msg));
    };
    let path = path.as_str();

    let stage_type = child(cascade, "stageType", path)?.text();
    if stage_type != "BOOST" {
        return Err(load_err(
            &format!("{path}/stageType"),
            format!("unsupported stage type {stage_type:?}"),
        ));
    }
    let kind = match child(cascade, "featureType", path)?.text().as_str() {
        "HAAR" => CascadeKind::Haar,
        "LBP" => CascadeKind::Lbp,
        other => {
            return Err(load_err(
                &format!("{path}/featureType"),
                format!("unknown feature type {other:?}"),
            ))
        }
    };
    let base_w: usize = scalar(cascade, "width", path)?;
    let base_h: usize = scalar(cascade, "height", path)?;
    if base_w == 0 || base_h == 0 {
        return Err(load_err(path, "zero base window"));
    }

    let features = load_features(cascade, kind, base_w, base_h, path)?;

    let stages_el = child(cascade, "stages", path)?;
    let mut stages = Vec::new();
    for (si, st) in stages_el.elements().enumerate() {
        let sp = format!("{path}/stages/_[{si}]");
        let threshold: f64 = scalar(st, "stageThreshold", &sp)?;
        let weak_el = child(st, "weakClassifiers", &sp)?;
        let mut weak = Vec::new();
        for (wi, wc) in weak_el.elements().enumerate() {
            let wp = format!("{sp}/weakClassifiers/_[{wi}]");
            weak.push(load_weak(wc, kind, &features, &wp)?);
        }
        if weak.is_empty() {
            return Err(load_err(&sp, "stage has no weak classifiers"));
        }
        if let Some(mw) = st.child("maxWeakCount") {
            let declared: usize = mw
                .text()
                .parse()
                .map_err(|_| load_err(&format!("{sp}/maxWeakCount"), "not an integer"))?;
            if declared != weak.len() {
                return Err(load_err(
                    &format!("{sp}/maxWeakCount"),
                    format!("declares {declared} weak classifiers, found {}", weak.len()),
                ));
            }
        }
        stages.push(Stage { weak, threshold });
    }
    if stages.is_empty() {
        return Err(load_err(&format!("{path}/stages"), "no stages"));
    }
    if let Some(sn) = cascade.child("stageNum") {
        let declared: usize = sn
            .text()
            .parse()
            .map_err(|_| load_err(&format!("{path}/stageNum"), "not an integer"))?;
        if declared != stages.len() {
            return Err(load_err(
                &format!("{path}/stageNum"),
                format!("declares {declared} stages, found {}", stages.len()),
            ));
        }
    }
    Ok(Cascade {
        base_w,
        base_h,
        kind,
        stages,
    })
}

fn load_features(
    cascade: &Element,
    kind: CascadeKind,
    base_w: usize,
    base_h: usize,
    path: &str,
) -> Result<Vec<Feature>> {
    let feats = child(cascade, "features", path)?;
    let mut out = Vec::new();
    for (fi, f) in feats.elements().enumerate() {
        let fp = format!("{path}/features/_[{fi}]");
        let feature = match kind {
            CascadeKind::Haar => {
                if let Some(t) = f.child("tilted") {
                    if t.text() != "0" {
                        return Err(load_err(&format!("{fp}/tilted"), "tilted features are not supported"));
                    }
                }
                let rects_el = child(f, "rects", &fp)?;
                let mut rects = Vec::new();
                for (ri, r) in rects_el.elements().enumerate() {
                    let rp = format!("{fp}/rects/_[{ri}]");
                    let vals = numbers(r, &rp)?;
                    if vals.len() != 5 {
                        return Err(load_err(&rp, format!("expected x y w h weight, got {} values", vals.len())));
                    }
                    let rect = as_rect(&vals[..4], &rp)?;
                    if !rect.fits(base_w, base_h) {
                        return Err(load_err(&rp, format!("rect {rect} outside {base_w}x{base_h} window")));
                    }
                    rects.push(WeightedRect { rect, weight: vals[4] });
                }
                if !(2..=3).contains(&rects.len()) {
                    return Err(load_err(&fp, format!("haar feature needs 2 or 3 rects, has {}", rects.len())));
                }
                Feature::Haar(HaarFeature { rects })
            }
            CascadeKind::Lbp => {
                if f.child("rects").is_some() || f.child("tilted").is_some() {
                    return Err(load_err(&fp, "haar-style feature in an LBP cascade"));
                }
                let rp = format!("{fp}/rect");
                let vals = numbers(child(f, "rect", &fp)?, &rp)?;
                if vals.len() != 4 {
                    return Err(load_err(&rp, format!("expected x y w h, got {} values", vals.len())));
                }
                let block = as_rect(&vals, &rp)?;
                if block.x + 3 * block.w > base_w || block.y + 3 * block.h > base_h {
                    return Err(load_err(&rp, format!("3x3 grid of {block} exceeds {base_w}x{base_h} window")));
                }
                Feature::Lbp(LbpFeature { block })
            }
        };
        out.push(feature);
    }
    Ok(out)
}

fn load_weak(wc: &Element, kind: CascadeKind, features: &[Feature], path: &str) -> Result<WeakClassifier> {
    let np = format!("{path}/internalNodes");
    let raw = numbers(child(wc, "internalNodes", path)?, &np)?;
    let leaves = numbers(child(wc, "leafValues", path)?, &format!("{path}/leafValues"))?;
    let per_node = match kind {
        CascadeKind::Haar => 4,
        CascadeKind::Lbp => 11,
    };
    if raw.is_empty() || raw.len() % per_node != 0 {
        return Err(load_err(
            &np,
            format!("{} values is not a multiple of {per_node}", raw.len()),
        ));
    }
    let n_nodes = raw.len() / per_node;
    let mut nodes = Vec::with_capacity(n_nodes);
    for chunk in raw.chunks_exact(per_node) {
        let left = as_int(chunk[0], &np)? as i32;
        let right = as_int(chunk[1], &np)? as i32;
        for c in [left, right] {
            let bad = if c > 0 {
                c as usize >= n_nodes
            } else {
                (-c) as usize >= leaves.len()
            };
            if bad {
                return Err(load_err(&np, format!("child index {c} out of range")));
            }
        }
        let fi = as_int(chunk[2], &np)?;
        let feature = usize::try_from(fi)
            .ok()
            .and_then(|i| features.get(i))
            .ok_or_else(|| load_err(&np, format!("dangling feature index {fi} ({} features)", features.len())))?
            .clone();
        let split = match kind {
            CascadeKind::Haar => Split::Threshold(chunk[3]),
            CascadeKind::Lbp => {
                let mut mask = [0u32; 8];
                for (m, &v) in mask.iter_mut().zip(&chunk[3..]) {
                    // subset words are written as signed 32-bit integers
                    *m = as_int(v, &np)? as i32 as u32;
                }
                Split::Subset(mask)
            }
        };
        nodes.push(TreeNode {
            feature,
            split,
            left,
            right,
        });
    }
    Ok(WeakClassifier { nodes, leaves })
}
