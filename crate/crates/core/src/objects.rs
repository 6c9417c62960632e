//! Per-object geometry and depth statistics.
//!
//! `centroid_row` (X) and `centroid_col` (Y) are the mean row and column of
//! the instance mask. `max_radius` (R) is the largest Euclidean distance from
//! the centroid to any mask pixel. Depth mean / population std / max are
//! taken over mask pixels whose depth is valid; geometry uses the full mask.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{DepthGrid, Sample, SegmentationMap};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectInstance {
    pub instance_id: u16,
    pub class_name: String,
    /// X: mean row index.
    pub centroid_row: f64,
    /// Y: mean column index.
    pub centroid_col: f64,
    pub max_radius: f64,
    pub depth_mean: f64,
    pub depth_std: f64,
    pub depth_max: f64,
    pub pixel_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatsError {
    NotFound(u16),
    /// The instance has pixels but none with valid depth.
    Degenerate(u16),
    DimensionMismatch,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::NotFound(id) => write!(f, "instance {id} not present in segmentation"),
            StatsError::Degenerate(id) => {
                write!(f, "instance {id} has no pixel with valid depth")
            }
            StatsError::DimensionMismatch => {
                write!(f, "depth and segmentation grids differ in size")
            }
        }
    }
}

impl core::error::Error for StatsError {}

pub fn compute_object_stats(
    depth: &DepthGrid,
    seg: &SegmentationMap,
    instance_id: u16,
) -> Result<ObjectInstance, StatsError> {
    if depth.dims() != seg.dims() {
        return Err(StatsError::DimensionMismatch);
    }
    let class_name = match seg.class_name(instance_id) {
        Some(name) if instance_id != 0 => String::from(name),
        _ => return Err(StatsError::NotFound(instance_id)),
    };
    let width = seg.width();
    let pixels: Vec<usize> = seg.mask_indices(instance_id).collect();
    if pixels.is_empty() {
        return Err(StatsError::NotFound(instance_id));
    }

    let n = pixels.len() as f64;
    let (sum_r, sum_c) = pixels.iter().fold((0.0, 0.0), |(r, c), &i| {
        (r + (i / width) as f64, c + (i % width) as f64)
    });
    let centroid_row = sum_r / n;
    let centroid_col = sum_c / n;
    let max_radius = pixels
        .iter()
        .map(|&i| {
            let dr = (i / width) as f64 - centroid_row;
            let dc = (i % width) as f64 - centroid_col;
            libm::sqrt(dr * dr + dc * dc)
        })
        .fold(0.0, f64::max);

    let values = depth.values();
    let validity = depth.validity();
    let samples: Vec<f64> = pixels
        .iter()
        .filter(|&&i| validity[i])
        .map(|&i| values[i])
        .collect();
    if samples.is_empty() {
        return Err(StatsError::Degenerate(instance_id));
    }
    let m = samples.len() as f64;
    let depth_mean = samples.iter().sum::<f64>() / m;
    let depth_std = libm::sqrt(
        samples
            .iter()
            .map(|v| (v - depth_mean) * (v - depth_mean))
            .sum::<f64>()
            / m,
    );
    let depth_max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(ObjectInstance {
        instance_id,
        class_name,
        centroid_row,
        centroid_col,
        max_radius,
        depth_mean,
        depth_std,
        depth_max,
        pixel_count: pixels.len(),
    })
}

/// Class name → number of instances present in the grid.
pub fn class_counts(seg: &SegmentationMap) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for id in seg.present_instances() {
        if let Some(name) = seg.class_name(id) {
            *counts.entry(name).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics for every present instance, ascending by id. Degenerate
/// instances are skipped with a warning.
pub fn all_objects(sample: &Sample) -> Vec<ObjectInstance> {
    collect(sample, |_| true)
}

/// Statistics for instances whose class occurs exactly once in the sample.
///
/// Uniqueness is decided before degenerate objects are dropped, so two
/// same-class instances disqualify each other even if one has no depth.
pub fn unique_objects(sample: &Sample) -> Vec<ObjectInstance> {
    let counts = class_counts(&sample.segmentation);
    collect(sample, |name| counts.get(name) == Some(&1))
}

pub fn eligible_objects(sample: &Sample, unique_only: bool) -> Vec<ObjectInstance> {
    if unique_only {
        unique_objects(sample)
    } else {
        all_objects(sample)
    }
}

fn collect(sample: &Sample, keep: impl Fn(&str) -> bool) -> Vec<ObjectInstance> {
    let seg = &sample.segmentation;
    seg.present_instances()
        .into_iter()
        .filter(|id| seg.class_name(*id).is_some_and(&keep))
        .filter_map(|id| match compute_object_stats(&sample.depth, seg, id) {
            Ok(obj) => Some(obj),
            Err(e) => {
                log::warn!("{}: skipping object: {e}", sample.image_id);
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn seg(width: usize, height: usize, ids: Vec<u16>, classes: &[(u16, &str)]) -> SegmentationMap {
        let class_of = classes.iter().map(|(i, c)| (*i, c.to_string())).collect();
        SegmentationMap::new(width, height, ids, class_of).unwrap()
    }

    #[test]
    fn singleton_mask() {
        // 3 rows x 6 cols so that (row 2, col 5) exists.
        let mut ids = vec![0u16; 18];
        ids[2 * 6 + 5] = 1;
        let mut values = vec![0.0; 18];
        values[2 * 6 + 5] = 1.5;
        let depth = DepthGrid::from_raw(6, 3, values).unwrap();
        let o = compute_object_stats(&depth, &seg(6, 3, ids, &[(1, "cup")]), 1).unwrap();
        assert_eq!(
            (o.centroid_row, o.centroid_col, o.max_radius),
            (2.0, 5.0, 0.0)
        );
        assert_eq!((o.depth_mean, o.depth_max, o.depth_std), (1.5, 1.5, 0.0));
        assert_eq!(o.pixel_count, 1);
    }

    #[test]
    fn two_pixel_mask() {
        let depth = DepthGrid::from_raw(3, 1, vec![1.0, 0.0, 3.0]).unwrap();
        let o = compute_object_stats(&depth, &seg(3, 1, vec![1, 0, 1], &[(1, "box")]), 1).unwrap();
        assert_eq!(
            (o.centroid_row, o.centroid_col, o.max_radius),
            (0.0, 1.0, 1.0)
        );
        assert_eq!((o.depth_mean, o.depth_std, o.depth_max), (2.0, 1.0, 3.0));
    }

    #[test]
    fn invalid_pixel_excluded_from_depth_only() {
        let depth = DepthGrid::from_raw(2, 1, vec![2.5, 0.0]).unwrap();
        let o = compute_object_stats(&depth, &seg(2, 1, vec![1, 1], &[(1, "box")]), 1).unwrap();
        // Oracle: explicit filtering of the valid subset {2.5}.
        let valid: Vec<f64> = [2.5f64, 0.0].into_iter().filter(|v| *v > 0.0).collect();
        assert_eq!(o.depth_mean, valid[0]);
        assert_eq!(o.depth_std, 0.0);
        assert_eq!(o.pixel_count, 2);
        assert_eq!(o.centroid_col, 0.5);
    }

    #[test]
    fn absent_and_degenerate() {
        let depth = DepthGrid::from_raw(2, 1, vec![0.0, 0.0]).unwrap();
        let s = seg(2, 1, vec![1, 0], &[(1, "box"), (2, "cup")]);
        assert_eq!(
            compute_object_stats(&depth, &s, 2),
            Err(StatsError::NotFound(2))
        );
        assert_eq!(
            compute_object_stats(&depth, &s, 7),
            Err(StatsError::NotFound(7))
        );
        assert_eq!(
            compute_object_stats(&depth, &s, 1),
            Err(StatsError::Degenerate(1))
        );
    }

    fn sample(ids: Vec<u16>, values: Vec<f64>, classes: &[(u16, &str)]) -> Sample {
        let w = ids.len();
        Sample::new(
            "s",
            "bedroom",
            DepthGrid::from_raw(w, 1, values).unwrap(),
            seg(w, 1, ids, classes),
        )
        .unwrap()
    }

    #[test]
    fn uniqueness_filter() {
        let s = sample(
            vec![1, 2, 3],
            vec![1.0, 2.0, 3.0],
            &[(1, "bed"), (2, "lamp"), (3, "lamp")],
        );
        let u = unique_objects(&s);
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].class_name, "bed");
        assert_eq!(all_objects(&s).len(), 3);
    }

    #[test]
    fn all_distinct_all_returned() {
        let s = sample(vec![3, 1, 2], vec![1.0; 3], &[(1, "a"), (2, "b"), (3, "c")]);
        let ids: Vec<u16> = unique_objects(&s).iter().map(|o| o.instance_id).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn degenerate_twin_still_counts() {
        let s = sample(
            vec![1, 2, 3],
            vec![1.0, 0.0, 2.0],
            &[(1, "lamp"), (2, "lamp"), (3, "bed")],
        );
        let u: Vec<u16> = unique_objects(&s).iter().map(|o| o.instance_id).collect();
        assert_eq!(u, vec![3]);
        let all: Vec<u16> = all_objects(&s).iter().map(|o| o.instance_id).collect();
        assert_eq!(all, vec![1, 3]);
    }

    fn masked(w: usize, h: usize, cells: &[(usize, usize, f64)]) -> (DepthGrid, SegmentationMap) {
        let mut ids = vec![0u16; w * h];
        let mut values = vec![0.0; w * h];
        for &(r, c, d) in cells {
            ids[r * w + c] = 1;
            values[r * w + c] = d;
        }
        (
            DepthGrid::from_raw(w, h, values).unwrap(),
            seg(w, h, ids, &[(1, "obj")]),
        )
    }

    fn cells() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        proptest::collection::vec((0usize..8, 0usize..8, 0.1f64..9.0), 1..20)
    }

    proptest! {
        #[test]
        fn translation_equivariance(cells in cells(), dr in 0usize..8, dc in 0usize..8) {
            let (d0, s0) = masked(16, 16, &cells);
            let shifted: Vec<_> = cells.iter().map(|&(r, c, d)| (r + dr, c + dc, d)).collect();
            let (d1, s1) = masked(16, 16, &shifted);
            let a = compute_object_stats(&d0, &s0, 1).unwrap();
            let b = compute_object_stats(&d1, &s1, 1).unwrap();
            prop_assert!((b.centroid_row - a.centroid_row - dr as f64).abs() < 1e-9);
            prop_assert!((b.centroid_col - a.centroid_col - dc as f64).abs() < 1e-9);
            prop_assert!((b.max_radius - a.max_radius).abs() < 1e-9);
            prop_assert_eq!(a.depth_mean, b.depth_mean);
            prop_assert_eq!(a.depth_std, b.depth_std);
            prop_assert_eq!(a.depth_max, b.depth_max);
        }

        #[test]
        fn radius_bounded_by_bbox_diagonal(cells in cells()) {
            let (d, s) = masked(8, 8, &cells);
            let o = compute_object_stats(&d, &s, 1).unwrap();
            let rows = s.mask_indices(1).map(|i| i / 8);
            let cols: Vec<usize> = s.mask_indices(1).map(|i| i % 8).collect();
            let rows: Vec<usize> = rows.collect();
            let h = (rows.iter().max().unwrap() - rows.iter().min().unwrap()) as f64;
            let w = (cols.iter().max().unwrap() - cols.iter().min().unwrap()) as f64;
            prop_assert!(o.max_radius <= libm::sqrt(h * h + w * w) + 1e-12);
            prop_assert!(o.depth_mean <= o.depth_max);
            prop_assert!(o.depth_std >= 0.0);
            prop_assert!(o.centroid_row >= 0.0 && o.centroid_row <= 7.0);
        }

        #[test]
        fn variance_matches_moment_identity(cells in cells()) {
            let (d, s) = masked(8, 8, &cells);
            let o = compute_object_stats(&d, &s, 1).unwrap();
            let vals: Vec<f64> = s.mask_indices(1).map(|i| d.values()[i]).collect();
            let n = vals.len() as f64;
            let mean_sq = vals.iter().map(|v| v * v).sum::<f64>() / n;
            let var = mean_sq - o.depth_mean * o.depth_mean;
            let scale = mean_sq.max(1.0);
            prop_assert!((o.depth_std * o.depth_std - var).abs() <= 1e-9 * scale);
        }
    }
}
