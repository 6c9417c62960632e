//! Regenerates the toy dataset under `fixtures/toy`: five 8x8 samples with
//! depth, segmentation, RGB and captions, plus two sets of predictions.
//!
//! cargo run -p lgdepth --example make_toy [-- <out_dir>]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lgdepth::dataset::{write_depth, write_sample, SamplePaths};
use lgdepth::formats::DepthEncoding;
use lgdepth::manifest::{Manifest, ManifestEntry};
use lgdepth_core::grid::{DepthGrid, RgbImage, Sample, SegmentationMap};

const W: usize = 8;
const H: usize = 8;

/// (instance id, class, rows, cols, depth in metres)
type Object = (
    u16,
    &'static str,
    std::ops::Range<usize>,
    std::ops::Range<usize>,
    f64,
);

struct Toy {
    id: &'static str,
    scene: &'static str,
    objects: Vec<Object>,
    caption: &'static str,
    /// (row, col, depth) overrides for invalid or out-of-range pixels.
    holes: Vec<(usize, usize, f64)>,
}

fn toys() -> Vec<Toy> {
    vec![
        Toy {
            id: "t01",
            scene: "bedroom",
            objects: vec![
                (1, "picture", 0..2, 0..2, 4.0),
                (2, "lamp", 0..2, 6..8, 1.5),
                (3, "bed", 5..8, 2..6, 2.5),
            ],
            caption: "A bed below a picture, with a lamp.",
            holes: vec![],
        },
        Toy {
            id: "t02",
            scene: "kitchen",
            objects: vec![
                (1, "refrigerator", 0..6, 0..3, 3.0),
                (2, "knife", 7..8, 5..7, 1.0),
                (3, "cup", 0..2, 6..8, 2.0),
                (4, "cup", 3..5, 6..8, 2.2),
            ],
            caption: "Two cups and a knife near the fridge.",
            holes: vec![],
        },
        Toy {
            id: "t03",
            scene: "office",
            objects: vec![
                (1, "desk", 5..8, 0..5, 2.0),
                (2, "chair", 5..8, 6..8, 2.6),
                (3, "plant", 0..2, 5..7, 3.0),
                (4, "picture", 0..2, 0..2, 3.5),
            ],
            caption: "A desk with a chair in an office.",
            holes: vec![],
        },
        Toy {
            id: "t04",
            scene: "living_room",
            objects: vec![(1, "sofa", 4..8, 0..8, 3.0), (2, "tv", 0..3, 2..6, 4.5)],
            caption: "A sofa facing a tv.",
            holes: vec![],
        },
        Toy {
            id: "t05",
            scene: "bathroom",
            objects: vec![(1, "toilet", 4..8, 0..3, 2.0), (2, "sink", 0..2, 5..8, 2.8)],
            caption: "A small bathroom.",
            holes: vec![(0, 0, 0.0), (7, 7, 12.0)],
        },
    ]
}

fn build(toy: &Toy) -> Sample {
    let mut depth: Vec<f64> = (0..W * H)
        .map(|i| 2.0 + 0.1 * (i / W) as f64 + 0.05 * (i % W) as f64)
        .collect();
    let mut ids = vec![0u16; W * H];
    let mut class_of = BTreeMap::new();
    for (id, class, rows, cols, d) in &toy.objects {
        class_of.insert(*id, class.to_string());
        for r in rows.clone() {
            for c in cols.clone() {
                ids[r * W + c] = *id;
                depth[r * W + c] = d + 0.01 * (r - rows.start) as f64;
            }
        }
    }
    for &(r, c, d) in &toy.holes {
        depth[r * W + c] = d;
    }
    let rgb: Vec<u8> = (0..W * H)
        .flat_map(|i| {
            let (r, c) = (i / W, i % W);
            [
                40 + 30 * ids[i] as u8,
                100 + 10 * r as u8,
                50 + 20 * c as u8,
            ]
        })
        .collect();
    let gt = DepthGrid::ground_truth(W, H, depth, 10.0).expect("toy depth");
    let seg = SegmentationMap::new(W, H, ids, class_of).expect("toy segmentation");
    Sample::new(toy.id, toy.scene, gt, seg)
        .and_then(|s| s.with_rgb(RgbImage::new(W, H, rgb)?))
        .expect("toy sample")
        .with_captions(vec![toy.caption.to_string()])
}

/// Prediction A overshoots by 5% plus a ripple, and by 60% on every seventh
/// pixel; B undershoots by 25% on even rows.
fn predictions(gt: &DepthGrid) -> (Vec<f64>, Vec<f64>) {
    let v = gt.values();
    let a = v
        .iter()
        .enumerate()
        .map(|(i, &g)| match (g > 0.0, i % 7) {
            (false, _) => 2.0,
            (true, 0) => g * 1.6,
            (true, _) => g * 1.05 + 0.02 * (i % 3) as f64,
        })
        .collect();
    let b = v
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let g = if g > 0.0 { g } else { 2.0 };
            if (i / W).is_multiple_of(2) {
                g * 0.75
            } else {
                g + 0.05
            }
        })
        .collect();
    (a, b)
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy"));
    let mut manifest = Manifest::new("toy", &out);
    for toy in toys() {
        let sample = build(&toy);
        let rel = |dir: &str, ext: &str| PathBuf::from(format!("{dir}/{}.{ext}", toy.id));
        let paths = SamplePaths {
            depth: out.join(rel("depth", "png")),
            segmentation: out.join(rel("seg", "png")),
            rgb: Some(out.join(rel("rgb", "png"))),
        };
        write_sample(&sample, DepthEncoding::Png16, &paths).expect("write sample");
        let (a, b) = predictions(&sample.depth);
        for (dir, values) in [("pred_a", a), ("pred_b", b)] {
            let grid = DepthGrid::from_raw(W, H, values).expect("prediction grid");
            write_depth(&out.join(rel(dir, "dgrd")), &grid, DepthEncoding::Raw)
                .expect("write prediction");
        }
        manifest.entries.push(ManifestEntry {
            id: toy.id.to_string(),
            scene: toy.scene.to_string(),
            depth: rel("depth", "png"),
            segmentation: rel("seg", "png"),
            rgb: Some(rel("rgb", "png")),
            captions: sample.captions.clone(),
        });
    }
    manifest
        .save(&out.join("manifest.json"))
        .expect("write manifest");
    println!(
        "wrote {} samples to {}",
        manifest.entries.len(),
        out.display()
    );
}
