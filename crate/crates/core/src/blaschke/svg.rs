//! SVG drawing and JSON serialization of a built model tower.

use std::fmt::Write;

use num_complex::Complex64;
use serde_json::{json, Value};

use super::build::ModelTowerState;

/// Polylines in the JSON dump keep at most this many points.
pub const MAX_JSON_POINTS: usize = 256;

fn stride(len: usize) -> usize {
    len.div_ceil(MAX_JSON_POINTS).max(1)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Versioned dump of the parameters and region table. Polylines are
/// decimated by `stride`.
pub fn region_json(s: &ModelTowerState) -> Value {
    let levels: Vec<Value> = s
        .levels
        .iter()
        .map(|l| {
            json!({
                "m": l.m,
                "a": l.a,
                "r": l.r,
                "eps": l.eps,
                "critical_point": l.critical_point,
                "critical_value": l.critical_value,
                "clearance_circle": finite(l.clearance_circle),
                "clearance_images": finite(l.clearance_images),
            })
        })
        .collect();
    let components: Vec<Value> = s
        .components
        .iter()
        .zip(&s.recipes)
        .enumerate()
        .map(|(i, (c, recipe))| {
            let st = stride(c.samples.len());
            let pts: Vec<[f64; 2]> = c.samples.iter().step_by(st).map(|z| [z.re, z.im]).collect();
            json!({
                "id": i,
                "recipe": recipe,
                "samples": c.samples.len(),
                "stride": st,
                "interior": [c.interior.re, c.interior.im],
                "polyline": pts,
            })
        })
        .collect();
    let table: Vec<Value> = s
        .table
        .iter()
        .map(|(&(k, n), ids)| json!({ "k": k, "n": n, "components": ids }))
        .collect();
    json!({
        "schema": "hypdyn/1",
        "kind": "blaschke_model",
        "built": s.built(),
        "samples": s.samples,
        "policy": s.policy,
        "max_residual": s.max_residual,
        "stopped": s.stopped,
        "levels": levels,
        "regions": table,
        "components": components,
        "log": s.log,
    })
}

fn path(out: &mut String, pts: &[Complex64], offset: f64, scale: f64) {
    out.push_str("<path d=\"");
    for (i, z) in pts.iter().step_by(stride(pts.len())).enumerate() {
        let (x, y) = ((z.re + offset) * scale, -z.im * scale);
        let _ = write!(out, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
    }
    out.push_str("Z\"/>\n");
}

/// One panel per level: the unit circle, `∂D(0, r_n)`, the truncated holes of
/// `U_n` and the critical point, with level `n` translated by `4n`.
pub fn model_svg(s: &ModelTowerState) -> String {
    let scale = 100.0;
    let h = s.built();
    let panels = s.levels.len() + 1;
    let width = (4.0 * (panels as f64 - 1.0) + 2.4) * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.1} {:.1} {width:.1} {:.1}\">",
        -1.2 * scale,
        -1.2 * scale,
        2.4 * scale
    );
    for n in 0..panels {
        let offset = 4.0 * n as f64;
        let cx = offset * scale;
        let _ = writeln!(out, "<g id=\"level-{n}\">");
        let _ = writeln!(out, "<circle cx=\"{cx:.3}\" cy=\"0\" r=\"{scale:.3}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.8\"/>");
        if let Some(l) = s.levels.get(n) {
            let _ = writeln!(
                out,
                "<circle cx=\"{cx:.3}\" cy=\"0\" r=\"{:.3}\" fill=\"none\" stroke=\"#3070b0\" stroke-dasharray=\"3,3\" stroke-width=\"0.6\"/>",
                l.r * scale
            );
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"0\" r=\"1.5\" fill=\"#c03030\"/>",
                (l.critical_point + offset) * scale
            );
        }
        out.push_str("<g fill=\"#d8d8d8\" stroke=\"#404040\" stroke-width=\"0.3\">\n");
        for i in s.hole_ids(n, h) {
            path(&mut out, &s.components[i].samples, offset, scale);
        }
        out.push_str("</g>\n</g>\n");
    }
    out.push_str("</svg>\n");
    out
}
