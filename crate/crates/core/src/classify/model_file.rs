use std::path::Path;

use super::SvmModel;
use crate::error::{Error, Result};
use crate::features::FeatureKind;

const MAGIC: &str = "LSVM 1";

/// Renders the text model format. Floats use 17 significant digits, which
/// round-trips every f64 exactly.
pub fn write_model(m: &SvmModel) -> String {
    let mut out = format!("{MAGIC}\nkind {}\ndim {}\nbias {:.16e}\nweights", m.kind, m.dim(), m.bias());
    for w in m.weights() {
        out.push_str(&format!(" {w:.16e}"));
    }
    out.push('\n');
    out.push_str(&format!("# trained_on={}\n", m.trained_on));
    for (k, v) in &m.metadata {
        if k != "trained_on" {
            out.push_str(&format!("# {k}={v}\n"));
        }
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelLoad(format!("line {line}: {msg}"))
}

fn field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::ModelLoad(format!("truncated file: missing `{key}` line")))?;
    match line.split_once(' ') {
        Some((k, rest)) if k == key => Ok((no, rest.trim())),
        _ if line == key => Ok((no, "")),
        _ => Err(bad(no, format!("expected `{key} ...`, found {line:?}"))),
    }
}

pub fn parse_model(text: &str) -> Result<SvmModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((no, other)) => return Err(bad(no, format!("bad magic {other:?}, expected {MAGIC:?}"))),
        None => return Err(Error::ModelLoad("empty file".into())),
    }
    let (no, kind) = field(&mut lines, "kind")?;
    let kind: FeatureKind = kind.parse().map_err(|e| bad(no, e))?;
    let (no, dim) = field(&mut lines, "dim")?;
    let dim: usize = dim.parse().map_err(|_| bad(no, format!("bad dim {dim:?}")))?;
    if dim != kind.dim() {
        return Err(bad(no, format!("dim {dim} does not match {kind} ({})", kind.dim())));
    }
    let (no, bias) = field(&mut lines, "bias")?;
    let bias: f64 = bias.parse().map_err(|_| bad(no, format!("bad bias {bias:?}")))?;
    let (no, ws) = field(&mut lines, "weights")?;
    let weights = ws
        .split_ascii_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(no, format!("bad weight {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if weights.len() != dim {
        return Err(bad(no, format!("dim {dim} declared but {} weights present", weights.len())));
    }
    if !text.ends_with('\n') && !text.lines().last().is_some_and(|l| l.starts_with('#')) {
        return Err(Error::ModelLoad("truncated file: missing final newline".into()));
    }
    let mut model = SvmModel::new(kind, weights, bias).map_err(|e| bad(no, e))?;
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let meta = line
            .strip_prefix('#')
            .ok_or_else(|| bad(no, format!("unexpected content {line:?}")))?
            .trim();
        let Some((k, v)) = meta.split_once('=') else {
            continue;
        };
        if k == "trained_on" {
            model.trained_on = v.parse().map_err(|_| bad(no, format!("bad trained_on {v:?}")))?;
        } else {
            model.metadata.push((k.to_string(), v.to_string()));
        }
    }
    Ok(model)
}

pub fn save_model(m: &SvmModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_model(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}
