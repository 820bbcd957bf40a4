//! Eye-image datasets on disk: one directory of PNM files per class, turned
//! into labeled feature vectors exactly as the runtime path does.

use std::path::{Path, PathBuf};

use crate::classify::{EyeState, LabeledSample};
use crate::error::{Error, Result};
use crate::eyeprep::{preprocess, PrepConfig};
use crate::features::{FeatureKind, FeatureVector};
use crate::raster::{read_pnm_file, GrayImage};

fn is_pnm(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

/// PNM files directly inside `dir`, sorted by file name.
pub fn pnm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && is_pnm(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn load_dir(dir: &Path) -> Result<Vec<GrayImage>> {
    pnm_files(dir)?.iter().map(read_pnm_file).collect()
}

pub fn featurize(img: &GrayImage, kind: FeatureKind, prep: &PrepConfig) -> Result<FeatureVector> {
    Ok(kind.extract(&preprocess(img, prep)?))
}

/// Open samples first, then closed; errors if either class is empty.
pub fn labeled(
    open: &[GrayImage],
    closed: &[GrayImage],
    kind: FeatureKind,
    prep: &PrepConfig,
) -> Result<Vec<LabeledSample>> {
    if open.is_empty() || closed.is_empty() {
        return Err(Error::Training(format!(
            "both classes need images (open {}, closed {})",
            open.len(),
            closed.len()
        )));
    }
    let tag = |imgs: &[GrayImage], label: EyeState| -> Result<Vec<LabeledSample>> {
        imgs.iter()
            .map(|img| {
                Ok(LabeledSample {
                    features: featurize(img, kind, prep)?,
                    label,
                })
            })
            .collect()
    };
    let mut out = tag(open, EyeState::Open)?;
    out.extend(tag(closed, EyeState::Closed)?);
    Ok(out)
}

pub fn load_labeled(open_dir: &Path, closed_dir: &Path, kind: FeatureKind, prep: &PrepConfig) -> Result<Vec<LabeledSample>> {
    let open = load_dir(open_dir)?;
    let closed = load_dir(closed_dir)?;
    if open.is_empty() {
        return Err(Error::Training(format!("no PNM images in {}", open_dir.display())));
    }
    if closed.is_empty() {
        return Err(Error::Training(format!("no PNM images in {}", closed_dir.display())));
    }
    labeled(&open, &closed, kind, prep)
}
