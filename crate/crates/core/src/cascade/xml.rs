//! Reader for the stump-based `<cascade>` XML schema.

use std::path::Path;

use roxmltree::{Document, Node};

use super::{
    CascadeModel, FeatureTable, HaarFeature, MbLbpFeature, Split, Stage, WeakClassifier,
    WeightedRect,
};
use crate::error::{Error, Result};

fn parse_err(path: &str, detail: impl Into<String>) -> Error {
    Error::CascadeParse {
        path: path.to_string(),
        detail: detail.into(),
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str, path: &str) -> Result<Node<'a, 'i>> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or_else(|| parse_err(&format!("{path}/{name}"), "missing element"))
}

fn items<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.is_element())
}

fn text<'a>(node: Node<'a, '_>) -> &'a str {
    node.text().unwrap_or("").trim()
}

fn child_text<'a>(node: Node<'a, '_>, name: &str, path: &str) -> Result<&'a str> {
    child(node, name, path).map(text)
}

fn number<T: std::str::FromStr>(s: &str, path: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(path, format!("cannot parse number {s:?}")))
}

fn numbers<T: std::str::FromStr>(s: &str, path: &str) -> Result<Vec<T>> {
    s.split_whitespace().map(|t| number(t, path)).collect()
}

/// Reads a cascade from an XML file.
pub fn load_cascade(path: impl AsRef<Path>) -> Result<CascadeModel> {
    let path = path.as_ref();
    let source = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cascade_xml(&source)
}

/// Parses a new-style cascade (`<cascade>` root, BOOST stages of depth-1
/// stumps, `HAAR` or `LBP` features).
pub fn parse_cascade_xml(source: &str) -> Result<CascadeModel> {
    let doc = Document::parse(source).map_err(|e| parse_err("<document>", e.to_string()))?;
    let cascade = doc
        .descendants()
        .find(|n| n.has_tag_name("cascade"))
        .ok_or_else(|| parse_err("cascade", "missing <cascade> element"))?;
    let root = "cascade";

    let stage_type = child_text(cascade, "stageType", root)?;
    if stage_type != "BOOST" {
        return Err(parse_err(
            &format!("{root}/stageType"),
            format!("unsupported stage type {stage_type:?}"),
        ));
    }
    let feature_type = child_text(cascade, "featureType", root)?;
    let is_lbp = match feature_type {
        "HAAR" => false,
        "LBP" => true,
        other => {
            return Err(parse_err(
                &format!("{root}/featureType"),
                format!("unsupported feature type {other:?}"),
            ))
        }
    };
    if !is_lbp {
        if let Ok(mode) = child(cascade, "featureParams", root)
            .and_then(|fp| child_text(fp, "mode", &format!("{root}/featureParams")))
        {
            if mode != "BASIC" && mode != "CORE" {
                return Err(parse_err(
                    &format!("{root}/featureParams/mode"),
                    format!("unsupported haar mode {mode:?} (tilted features)"),
                ));
            }
        }
    }
    let window_h: u32 = number(
        child_text(cascade, "height", root)?,
        &format!("{root}/height"),
    )?;
    let window_w: u32 = number(child_text(cascade, "width", root)?, &format!("{root}/width"))?;

    let stages_node = child(cascade, "stages", root)?;
    let mut stages = Vec::new();
    for (si, stage_node) in items(stages_node).enumerate() {
        let spath = format!("{root}/stages/_[{si}]");
        let threshold: f64 = number(
            child_text(stage_node, "stageThreshold", &spath)?,
            &format!("{spath}/stageThreshold"),
        )?;
        let weak_node = child(stage_node, "weakClassifiers", &spath)?;
        let mut weak_classifiers = Vec::new();
        for (wi, w) in items(weak_node).enumerate() {
            let wpath = format!("{spath}/weakClassifiers/_[{wi}]");
            weak_classifiers.push(parse_weak(w, &wpath, is_lbp)?);
        }
        if weak_classifiers.is_empty() {
            return Err(parse_err(
                &format!("{spath}/weakClassifiers"),
                "stage has no weak classifiers",
            ));
        }
        stages.push(Stage {
            threshold,
            weak_classifiers,
        });
    }

    let features_node = child(cascade, "features", root)?;
    let features = if is_lbp {
        let mut out = Vec::new();
        for (fi, f) in items(features_node).enumerate() {
            let fpath = format!("{root}/features/_[{fi}]/rect");
            let v: Vec<u32> = numbers(child_text(f, "rect", &format!("{root}/features/_[{fi}]"))?, &fpath)?;
            if v.len() != 4 {
                return Err(parse_err(&fpath, "expected 4 integers"));
            }
            out.push(MbLbpFeature {
                x: v[0],
                y: v[1],
                w: v[2],
                h: v[3],
            });
        }
        FeatureTable::MbLbp(out)
    } else {
        let mut out = Vec::new();
        for (fi, f) in items(features_node).enumerate() {
            let fpath = format!("{root}/features/_[{fi}]");
            if let Some(tilted) = f.children().find(|c| c.has_tag_name("tilted")) {
                if text(tilted) != "0" {
                    return Err(parse_err(
                        &format!("{fpath}/tilted"),
                        "tilted haar features are not supported",
                    ));
                }
            }
            let rects_node = child(f, "rects", &fpath)?;
            let mut rects = Vec::new();
            for (ri, r) in items(rects_node).enumerate() {
                let rpath = format!("{fpath}/rects/_[{ri}]");
                let v: Vec<f64> = numbers(text(r), &rpath)?;
                if v.len() != 5 {
                    return Err(parse_err(&rpath, "expected x y w h weight"));
                }
                if v[..4].iter().any(|c| *c < 0.0 || c.fract() != 0.0) {
                    return Err(parse_err(&rpath, "rectangle coordinates must be non-negative integers"));
                }
                rects.push(WeightedRect {
                    x: v[0] as u32,
                    y: v[1] as u32,
                    w: v[2] as u32,
                    h: v[3] as u32,
                    weight: v[4],
                });
            }
            out.push(HaarFeature { rects });
        }
        FeatureTable::Haar(out)
    };

    let model = CascadeModel {
        window_w,
        window_h,
        stages,
        features,
    };
    model.validate().map_err(|d| parse_err(root, d))?;
    Ok(model)
}

fn parse_weak(node: Node, path: &str, is_lbp: bool) -> Result<WeakClassifier> {
    let npath = format!("{path}/internalNodes");
    let lpath = format!("{path}/leafValues");
    let nodes: Vec<&str> = child_text(node, "internalNodes", path)?
        .split_whitespace()
        .collect();
    let leaves: Vec<f64> = numbers(child_text(node, "leafValues", path)?, &lpath)?;
    let expected = if is_lbp { 11 } else { 4 };
    if nodes.len() != expected {
        return Err(parse_err(
            &npath,
            format!(
                "expected {expected} values for a single stump, found {} (tree depth > 1?)",
                nodes.len()
            ),
        ));
    }
    if leaves.len() != 2 {
        return Err(parse_err(
            &lpath,
            format!("expected 2 leaf values, found {} (tree depth > 1?)", leaves.len()),
        ));
    }
    let left: i64 = number(nodes[0], &npath)?;
    let right: i64 = number(nodes[1], &npath)?;
    if left > 0 || right > 0 {
        return Err(parse_err(&npath, "tree depth > 1 is not supported"));
    }
    let feature: usize = number(nodes[2], &npath)?;
    let split = if is_lbp {
        let mut mask = [0u32; 8];
        for (m, s) in mask.iter_mut().zip(&nodes[3..]) {
            *m = number::<i64>(s, &npath)? as i32 as u32;
        }
        Split::Subset(mask)
    } else {
        Split::Threshold(number(nodes[3], &npath)?)
    };
    Ok(WeakClassifier {
        feature,
        split,
        left: leaves[0],
        right: leaves[1],
    })
}
