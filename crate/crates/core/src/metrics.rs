//! Standard monocular depth metrics.
//!
//! Over the pixels valid in both maps (and inside the optional crop):
//!
//! * `rmse = sqrt(mean((p - g)^2))`
//! * `abs_rel = mean(|p - g| / g)`
//! * `log10 = mean(|log10 p - log10 g|)`
//! * `δi = fraction with max(p/g, g/p) < base^i`, strict, base 1.25 by default.
//!
//! Predictions are clamped to `[min_depth, max_depth]`; ground truth outside
//! `(0, max_depth]` is ignored.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::DepthGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Crop {
    Rect {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
    },
    Center {
        height: usize,
        width: usize,
    },
}

impl Crop {
    /// (top, left, height, width) clipped to a `width` x `height` grid.
    pub fn resolve(&self, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let (top, left, h, w) = match *self {
            Crop::Rect {
                top,
                left,
                height,
                width,
            } => (top, left, height, width),
            Crop::Center {
                height: ch,
                width: cw,
            } => {
                let ch = ch.min(height);
                let cw = cw.min(width);
                ((height - ch) / 2, (width - cw) / 2, ch, cw)
            }
        };
        let top = top.min(height);
        let left = left.min(width);
        (top, left, h.min(height - top), w.min(width - left))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Aggregation {
    /// Unweighted mean of per-image values.
    #[default]
    PerImageMean,
    /// Every valid pixel of every image weighted equally.
    PixelPooled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalConfig {
    pub max_depth: f64,
    pub min_depth: f64,
    pub delta_base: f64,
    pub crop: Option<Crop>,
    pub aggregation: Aggregation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            max_depth: 10.0,
            min_depth: 1e-3,
            delta_base: 1.25,
            crop: None,
            aggregation: Aggregation::PerImageMean,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let range_ok = self.min_depth > 0.0 && self.min_depth < self.max_depth;
        if !range_ok
            || !self.max_depth.is_finite()
            || self.delta_base.is_nan()
            || self.delta_base <= 1.0
        {
            return Err(MetricsError::InvalidConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    DimensionMismatch {
        pred: (usize, usize),
        gt: (usize, usize),
    },
    /// No pixel is valid in both maps.
    Degenerate,
    InvalidConfig,
    Empty,
    DuplicateImage(String),
    /// The two runs cover different images and intersection was not allowed.
    IdMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DimensionMismatch { pred, gt } => write!(
                f,
                "prediction is {}x{} but ground truth is {}x{}",
                pred.0, pred.1, gt.0, gt.1
            ),
            MetricsError::Degenerate => write!(f, "no jointly valid pixels"),
            MetricsError::InvalidConfig => write!(
                f,
                "invalid evaluation config: need 0 < min_depth < max_depth and delta_base > 1"
            ),
            MetricsError::Empty => write!(f, "no non-degenerate images to aggregate"),
            MetricsError::DuplicateImage(id) => write!(f, "image {id} reported twice"),
            MetricsError::IdMismatch { only_a, only_b } => write!(
                f,
                "runs cover different images ({} only in A, {} only in B); pass the intersection flag to compare the overlap",
                only_a.len(),
                only_b.len()
            ),
        }
    }
}

impl core::error::Error for MetricsError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    Delta1,
    Delta2,
    Delta3,
    Rmse,
    AbsRel,
    Log10,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Delta1,
        Metric::Delta2,
        Metric::Delta3,
        Metric::Rmse,
        Metric::AbsRel,
        Metric::Log10,
    ];

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Delta1 | Metric::Delta2 | Metric::Delta3)
    }

    /// Column header with the improvement arrow.
    pub fn header(self) -> &'static str {
        match self {
            Metric::Delta1 => "δ1↑",
            Metric::Delta2 => "δ2↑",
            Metric::Delta3 => "δ3↑",
            Metric::Rmse => "RMSE↓",
            Metric::AbsRel => "Abs.REL↓",
            Metric::Log10 => "Log10↓",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Delta1 => "delta1",
            Metric::Delta2 => "delta2",
            Metric::Delta3 => "delta3",
            Metric::Rmse => "rmse",
            Metric::AbsRel => "abs_rel",
            Metric::Log10 => "log10",
        }
    }
}

/// The six metric values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricValues {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub rmse: f64,
    pub abs_rel: f64,
    pub log10: f64,
}

impl MetricValues {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Delta1 => self.delta1,
            Metric::Delta2 => self.delta2,
            Metric::Delta3 => self.delta3,
            Metric::Rmse => self.rmse,
            Metric::AbsRel => self.abs_rel,
            Metric::Log10 => self.log10,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Metric) -> f64) -> Self {
        Self {
            delta1: f(Metric::Delta1),
            delta2: f(Metric::Delta2),
            delta3: f(Metric::Delta3),
            rmse: f(Metric::Rmse),
            abs_rel: f(Metric::AbsRel),
            log10: f(Metric::Log10),
        }
    }
}

/// Per-image result.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelMetrics {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub values: MetricValues,
    pub valid_pixels: usize,
}

pub fn pixel_metrics(
    pred: &DepthGrid,
    gt: &DepthGrid,
    cfg: &EvalConfig,
) -> Result<PixelMetrics, MetricsError> {
    cfg.validate()?;
    if pred.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch {
            pred: pred.dims(),
            gt: gt.dims(),
        });
    }
    let (width, height) = gt.dims();
    let (top, left, ch, cw) = match cfg.crop {
        Some(c) => c.resolve(width, height),
        None => (0, 0, height, width),
    };
    let thresholds = [
        cfg.delta_base,
        cfg.delta_base * cfg.delta_base,
        cfg.delta_base * cfg.delta_base * cfg.delta_base,
    ];

    let (pv, pm) = (pred.values(), pred.validity());
    let (gv, gm) = (gt.values(), gt.validity());
    let mut n = 0usize;
    let mut sq = 0.0;
    let mut rel = 0.0;
    let mut log = 0.0;
    let mut inliers = [0usize; 3];
    for row in top..top + ch {
        let base = row * width;
        for i in base + left..base + left + cw {
            let g = gv[i];
            if !(gm[i] && pm[i] && g > 0.0 && g <= cfg.max_depth) {
                continue;
            }
            let p = pv[i].clamp(cfg.min_depth, cfg.max_depth);
            let diff = p - g;
            sq += diff * diff;
            rel += libm::fabs(diff) / g;
            log += libm::fabs(libm::log10(p) - libm::log10(g));
            let ratio = f64::max(p / g, g / p);
            for (count, t) in inliers.iter_mut().zip(thresholds) {
                if ratio < t {
                    *count += 1;
                }
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricsError::Degenerate);
    }
    let nf = n as f64;
    Ok(PixelMetrics {
        values: MetricValues {
            delta1: inliers[0] as f64 / nf,
            delta2: inliers[1] as f64 / nf,
            delta3: inliers[2] as f64 / nf,
            rmse: libm::sqrt(sq / nf),
            abs_rel: rel / nf,
            log10: log / nf,
        },
        valid_pixels: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub per_image: BTreeMap<String, PixelMetrics>,
    pub aggregate: MetricValues,
    pub n_images: usize,
    /// Images dropped for having no jointly valid pixels.
    pub degenerate: Vec<String>,
    pub aggregation: Aggregation,
}

fn combine(per_image: &BTreeMap<String, PixelMetrics>, aggregation: Aggregation) -> MetricValues {
    match aggregation {
        Aggregation::PerImageMean => {
            let n = per_image.len() as f64;
            MetricValues::from_fn(|m| per_image.values().map(|p| p.values.get(m)).sum::<f64>() / n)
        }
        Aggregation::PixelPooled => {
            let total: usize = per_image.values().map(|p| p.valid_pixels).sum();
            let total = total as f64;
            let weighted = |f: &dyn Fn(&PixelMetrics) -> f64| {
                per_image
                    .values()
                    .map(|p| p.valid_pixels as f64 * f(p))
                    .sum::<f64>()
                    / total
            };
            MetricValues::from_fn(|m| match m {
                Metric::Rmse => libm::sqrt(weighted(&|p| p.values.rmse * p.values.rmse)),
                other => weighted(&|p| p.values.get(other)),
            })
        }
    }
}

/// Aggregates per-image results. Summation runs in ascending image-id order
/// so the result does not depend on input order.
pub fn aggregate(
    per_image: impl IntoIterator<Item = (String, PixelMetrics)>,
    degenerate: Vec<String>,
    aggregation: Aggregation,
) -> Result<MetricReport, MetricsError> {
    let mut map = BTreeMap::new();
    for (id, m) in per_image {
        if map.contains_key(&id) {
            return Err(MetricsError::DuplicateImage(id));
        }
        map.insert(id, m);
    }
    if map.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut degenerate = degenerate;
    degenerate.sort();
    degenerate.dedup();
    Ok(MetricReport {
        aggregate: combine(&map, aggregation),
        n_images: map.len(),
        per_image: map,
        degenerate,
        aggregation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricDelta {
    pub metric: Metric,
    pub a: f64,
    pub b: f64,
    /// `b - a`.
    pub delta: f64,
    /// `100 (b - a) / a`; absent when `a == 0`.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeltaTable {
    pub n_images: usize,
    pub rows: Vec<MetricDelta>,
}

pub fn delta_rows(a: &MetricValues, b: &MetricValues) -> Vec<MetricDelta> {
    Metric::ALL
        .iter()
        .map(|&metric| {
            let (va, vb) = (a.get(metric), b.get(metric));
            MetricDelta {
                metric,
                a: va,
                b: vb,
                delta: vb - va,
                percent: (va != 0.0).then(|| 100.0 * (vb - va) / va),
            }
        })
        .collect()
}

/// Deltas `b - a` over the aggregate metrics. Both runs must cover the same
/// images unless `intersect` is set, in which case both are re-aggregated
/// over the shared images.
pub fn compare(
    a: &MetricReport,
    b: &MetricReport,
    intersect: bool,
) -> Result<DeltaTable, MetricsError> {
    let ids_a: BTreeSet<&String> = a.per_image.keys().collect();
    let ids_b: BTreeSet<&String> = b.per_image.keys().collect();
    if ids_a == ids_b {
        return Ok(DeltaTable {
            n_images: a.n_images,
            rows: delta_rows(&a.aggregate, &b.aggregate),
        });
    }
    if !intersect {
        return Err(MetricsError::IdMismatch {
            only_a: ids_a.difference(&ids_b).map(|s| (*s).clone()).collect(),
            only_b: ids_b.difference(&ids_a).map(|s| (*s).clone()).collect(),
        });
    }
    let shared: BTreeSet<&String> = ids_a.intersection(&ids_b).copied().collect();
    if shared.is_empty() {
        return Err(MetricsError::Empty);
    }
    let restrict = |r: &MetricReport| -> BTreeMap<String, PixelMetrics> {
        r.per_image
            .iter()
            .filter(|(k, _)| shared.contains(k))
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    };
    Ok(DeltaTable {
        n_images: shared.len(),
        rows: delta_rows(
            &combine(&restrict(a), a.aggregation),
            &combine(&restrict(b), b.aggregation),
        ),
    })
}
