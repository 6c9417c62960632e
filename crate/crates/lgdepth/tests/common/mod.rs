//! Reference oracles and fixtures shared by the integration tests. The
//! oracles are written as plain loops over raw buffers and do not call into
//! the metric or relation code they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub fn toy_manifest() -> PathBuf {
    toy_dir().join("manifest.json")
}

pub fn lgdepth(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgdepth"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .env_remove("LGDEPTH_OUT_DIR")
        .output()
        .expect("binary runs")
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

/// Naive metrics: `[δ1, δ2, δ3, rmse, abs_rel, log10]`, or `None` when no
/// pixel is valid. Ground truth counts when finite and in `(0, max]`; the
/// prediction counts when finite and positive, and is clamped to
/// `[min, max]`.
pub fn oracle_metrics(pred: &[f64], gt: &[f64], min: f64, max: f64) -> Option<[f64; 6]> {
    let mut n = 0.0;
    let mut sums = [0.0f64; 6];
    for (&p, &g) in pred.iter().zip(gt) {
        if !(g.is_finite() && g > 0.0 && g <= max && p.is_finite() && p > 0.0) {
            continue;
        }
        let p = if p < min {
            min
        } else if p > max {
            max
        } else {
            p
        };
        let ratio = if p / g > g / p { p / g } else { g / p };
        if ratio < 1.25 {
            sums[0] += 1.0;
        }
        if ratio < 1.25f64.powi(2) {
            sums[1] += 1.0;
        }
        if ratio < 1.25f64.powi(3) {
            sums[2] += 1.0;
        }
        sums[3] += (p - g).powi(2);
        sums[4] += (p - g).abs() / g;
        sums[5] += (p.log10() - g.log10()).abs();
        n += 1.0;
    }
    if n == 0.0 {
        return None;
    }
    let mut out = sums.map(|s| s / n);
    out[3] = out[3].sqrt();
    Some(out)
}

/// Unweighted mean over images of [`oracle_metrics`], skipping degenerate ones.
pub fn oracle_mean(images: &[(Vec<f64>, Vec<f64>)], min: f64, max: f64) -> [f64; 6] {
    let rows: Vec<[f64; 6]> = images
        .iter()
        .filter_map(|(p, g)| oracle_metrics(p, g, min, max))
        .collect();
    let mut out = [0.0; 6];
    for r in &rows {
        for k in 0..6 {
            out[k] += r[k];
        }
    }
    out.map(|s| s / rows.len() as f64)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300) || a == b
}

/// A relation as `(subject, object, direction)`.
pub type Triple = (u16, u16, &'static str);

struct Obj {
    id: u16,
    x: f64,
    y: f64,
    r: f64,
    mean: f64,
    std: f64,
    max: f64,
}

/// Evaluates the relation inequalities for every ordered pair of instances.
/// `depth` is raw ground truth: pixels outside `(0, max_depth]` carry no
/// depth. Instances with no valid depth pixel take part in nothing.
pub fn oracle_relations(
    width: usize,
    ids: &[u16],
    depth: &[f64],
    class_of: &BTreeMap<u16, String>,
    lambda: f64,
    max_depth: f64,
    unique_only: bool,
) -> BTreeSet<Triple> {
    let present: BTreeSet<u16> = ids
        .iter()
        .copied()
        .filter(|&i| i != 0 && class_of.contains_key(&i))
        .collect();
    let mut per_class: BTreeMap<&str, usize> = BTreeMap::new();
    for id in &present {
        *per_class.entry(class_of[id].as_str()).or_default() += 1;
    }
    let mut objs = Vec::new();
    for &id in &present {
        if unique_only && per_class[class_of[&id].as_str()] != 1 {
            continue;
        }
        let pix: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] == id).collect();
        let n = pix.len() as f64;
        let x = pix.iter().map(|&i| (i / width) as f64).sum::<f64>() / n;
        let y = pix.iter().map(|&i| (i % width) as f64).sum::<f64>() / n;
        let mut r: f64 = 0.0;
        for &i in &pix {
            let d = (((i / width) as f64 - x).powi(2) + ((i % width) as f64 - y).powi(2)).sqrt();
            if d > r {
                r = d;
            }
        }
        let ds: Vec<f64> = pix
            .iter()
            .map(|&i| depth[i])
            .filter(|d| d.is_finite() && *d > 0.0 && *d <= max_depth)
            .collect();
        if ds.is_empty() {
            continue;
        }
        let m = ds.len() as f64;
        let mean = ds.iter().sum::<f64>() / m;
        let std = (ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / m).sqrt();
        let max = ds.iter().cloned().fold(f64::MIN, f64::max);
        objs.push(Obj {
            id,
            x,
            y,
            r,
            mean,
            std,
            max,
        });
    }
    let mut out = BTreeSet::new();
    for a in &objs {
        for b in &objs {
            if a.id == b.id {
                continue;
            }
            if (a.y - b.y).abs() > lambda * (a.r + b.r) {
                out.insert((a.id, b.id, if a.y < b.y { "left" } else { "right" }));
            }
            if (a.x - b.x).abs() > lambda * (a.r + b.r) {
                out.insert((a.id, b.id, if a.x < b.x { "above" } else { "below" }));
            }
            if (a.mean - b.mean).abs() > (a.max - a.mean) + (b.max - b.mean) {
                let front = a.mean + a.std < b.mean + b.std;
                out.insert((a.id, b.id, if front { "front" } else { "behind" }));
            }
        }
    }
    out
}

pub fn axis_of(direction: &str) -> &'static str {
    match direction {
        "left" | "right" => "horizontal",
        "above" | "below" => "vertical",
        _ => "depth",
    }
}
