use std::fmt::Write as _;

use super::{Cascade, CascadeKind, Feature, Split};

/// Serializes a cascade in the same XML layout `load_cascade` reads. Every
/// tree node gets its own entry in the feature table.
pub fn write_cascade(c: &Cascade) -> String {
    let mut s = String::new();
    let kind = match c.kind {
        CascadeKind::Haar => "HAAR",
        CascadeKind::Lbp => "LBP",
    };
    let max_weak = c.stages.iter().map(|st| st.weak.len()).max().unwrap_or(0);
    let _ = writeln!(s, "<?xml version=\"1.0\"?>\n<opencv_storage>");
    let _ = writeln!(s, "<cascade type_id=\"opencv-cascade-classifier\">");
    let _ = writeln!(s, "  <stageType>BOOST</stageType>\n  <featureType>{kind}</featureType>");
    let _ = writeln!(s, "  <height>{}</height>\n  <width>{}</width>", c.base_h, c.base_w);
    let _ = writeln!(s, "  <stageParams><maxWeakCount>{max_weak}</maxWeakCount></stageParams>");
    let cat = if c.kind == CascadeKind::Lbp { 256 } else { 0 };
    let _ = writeln!(s, "  <featureParams><maxCatCount>{cat}</maxCatCount></featureParams>");
    let _ = writeln!(s, "  <stageNum>{}</stageNum>\n  <stages>", c.stages.len());

    let mut features: Vec<&Feature> = Vec::new();
    for st in &c.stages {
        let _ = writeln!(s, "    <_>\n      <maxWeakCount>{}</maxWeakCount>", st.weak.len());
        let _ = writeln!(s, "      <stageThreshold>{:e}</stageThreshold>", st.threshold);
        let _ = writeln!(s, "      <weakClassifiers>");
        for wc in &st.weak {
            let mut nodes = String::new();
            for n in &wc.nodes {
                let _ = write!(nodes, " {} {} {}", n.left, n.right, features.len());
                features.push(&n.feature);
                match n.split {
                    Split::Threshold(t) => {
                        let _ = write!(nodes, " {t:e}");
                    }
                    Split::Subset(mask) => {
                        for m in mask {
                            let _ = write!(nodes, " {}", m as i32);
                        }
                    }
                }
            }
            let leaves: Vec<String> = wc.leaves.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(
                s,
                "        <_>\n          <internalNodes>{}</internalNodes>\n          <leafValues>{}</leafValues></_>",
                nodes.trim_start(),
                leaves.join(" ")
            );
        }
        let _ = writeln!(s, "      </weakClassifiers></_>");
    }
    let _ = writeln!(s, "  </stages>\n  <features>");
    for f in features {
        match f {
            Feature::Haar(h) => {
                let _ = writeln!(s, "    <_>\n      <rects>");
                for r in &h.rects {
                    let _ = writeln!(
                        s,
                        "        <_>{} {} {} {} {:e}</_>",
                        r.rect.x, r.rect.y, r.rect.w, r.rect.h, r.weight
                    );
                }
                let _ = writeln!(s, "      </rects>\n      <tilted>0</tilted></_>");
            }
            Feature::Lbp(l) => {
                let b = l.block;
                let _ = writeln!(s, "    <_>\n      <rect>{} {} {} {}</rect></_>", b.x, b.y, b.w, b.h);
            }
        }
    }
    let _ = writeln!(s, "  </features>\n</cascade>\n</opencv_storage>");
    s
}
