//! In-memory raster types: depth grids, instance segmentation, RGB images and
//! the [`Sample`] bundle tying them to an image id and scene label.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    /// Buffer length does not match `width * height * channels`.
    BufferLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    /// A nonzero id occurs in the grid but has no class entry.
    UnknownInstance(u16),
    /// Id 0 is reserved for unlabelled pixels.
    ZeroInstanceClass,
    InvalidDepthRange {
        min_depth: f64,
        max_depth: f64,
    },
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::BufferLength {
                what,
                expected,
                actual,
            } => write!(f, "{what}: expected {expected} values, got {actual}"),
            GridError::DimensionMismatch {
                what,
                expected,
                actual,
            } => write!(
                f,
                "{what}: expected {}x{} (w x h), got {}x{}",
                expected.0, expected.1, actual.0, actual.1
            ),
            GridError::UnknownInstance(id) => {
                write!(
                    f,
                    "segmentation references instance id {id} with no class entry"
                )
            }
            GridError::ZeroInstanceClass => {
                write!(f, "instance id 0 is reserved for unlabelled pixels")
            }
            GridError::InvalidDepthRange {
                min_depth,
                max_depth,
            } => write!(
                f,
                "invalid depth range: need 0 < min_depth ({min_depth}) < max_depth ({max_depth})"
            ),
        }
    }
}

impl core::error::Error for GridError {}

/// Row-major depth map in meters with a per-pixel validity mask.
///
/// Raw values are kept as read so that re-encoding is lossless; validity is
/// tracked separately and is what every statistic and metric consults.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthGrid {
    /// Build from raw values; a pixel is valid when finite and strictly positive
    /// (0 and NaN are the on-disk "no measurement" sentinels).
    pub fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GridError> {
        check_len("depth", width * height, values.len())?;
        let valid = values.iter().map(|v| v.is_finite() && *v > 0.0).collect();
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn with_validity(
        width: usize,
        height: usize,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, GridError> {
        check_len("depth", width * height, values.len())?;
        check_len("depth validity", width * height, valid.len())?;
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Ground-truth policy: valid iff `0 < value <= max_depth`.
    pub fn ground_truth(
        width: usize,
        height: usize,
        values: Vec<f64>,
        max_depth: f64,
    ) -> Result<Self, GridError> {
        let mut grid = Self::from_raw(width, height, values)?;
        grid.invalidate_beyond(max_depth);
        Ok(grid)
    }

    /// Marks every pixel deeper than `max_depth` invalid.
    pub fn invalidate_beyond(&mut self, max_depth: f64) {
        for (v, ok) in self.values.iter().zip(self.valid.iter_mut()) {
            if v.is_nan() || *v > max_depth {
                *ok = false;
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.valid[i].then(|| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Nearest-neighbour resample to `width` x `height`.
    pub fn resize_nearest(&self, width: usize, height: usize) -> DepthGrid {
        let mut values = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for r in 0..height {
            let sr = (r * self.height / height.max(1)).min(self.height.saturating_sub(1));
            for c in 0..width {
                let sc = (c * self.width / width.max(1)).min(self.width.saturating_sub(1));
                let i = sr * self.width + sc;
                values.push(self.values[i]);
                valid.push(self.valid[i]);
            }
        }
        DepthGrid {
            width,
            height,
            values,
            valid,
        }
    }
}

/// Instance-id raster plus the id → class table. Id 0 is "unlabelled".
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationMap {
    width: usize,
    height: usize,
    ids: Vec<u16>,
    class_of: BTreeMap<u16, String>,
}

impl SegmentationMap {
    pub fn new(
        width: usize,
        height: usize,
        ids: Vec<u16>,
        class_of: BTreeMap<u16, String>,
    ) -> Result<Self, GridError> {
        check_len("segmentation", width * height, ids.len())?;
        if class_of.contains_key(&0) {
            return Err(GridError::ZeroInstanceClass);
        }
        if let Some(missing) = ids
            .iter()
            .copied()
            .find(|id| *id != 0 && !class_of.contains_key(id))
        {
            return Err(GridError::UnknownInstance(missing));
        }
        Ok(Self {
            width,
            height,
            ids,
            class_of,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn ids(&self) -> &[u16] {
        &self.ids
    }

    pub fn class_of(&self) -> &BTreeMap<u16, String> {
        &self.class_of
    }

    pub fn class_name(&self, id: u16) -> Option<&str> {
        self.class_of.get(&id).map(String::as_str)
    }

    /// Nonzero ids that own at least one pixel, ascending.
    pub fn present_instances(&self) -> Vec<u16> {
        let mut seen: Vec<u16> = self.ids.iter().copied().filter(|id| *id != 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    /// Row-major indices of the pixels labelled `id`.
    pub fn mask_indices(&self, id: u16) -> impl Iterator<Item = usize> + '_ {
        self.ids
            .iter()
            .enumerate()
            .filter(move |(_, v)| **v == id)
            .map(|(i, _)| i)
    }
}

/// Interleaved 8-bit RGB, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, GridError> {
        check_len("rgb", width * height * 3, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> [u8; 3] {
        let p = &self.data[index * 3..index * 3 + 3];
        [p[0], p[1], p[2]]
    }

    pub fn set_pixel(&mut self, index: usize, rgb: [u8; 3]) {
        self.data[index * 3..index * 3 + 3].copy_from_slice(&rgb);
    }
}

/// One dataset item.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image_id: String,
    pub scene_label: String,
    pub rgb: Option<RgbImage>,
    pub depth: DepthGrid,
    pub segmentation: SegmentationMap,
    pub captions: Vec<String>,
}

impl Sample {
    /// Bundles the rasters, rejecting any size disagreement.
    pub fn new(
        image_id: impl Into<String>,
        scene_label: impl Into<String>,
        depth: DepthGrid,
        segmentation: SegmentationMap,
    ) -> Result<Self, GridError> {
        if depth.dims() != segmentation.dims() {
            return Err(GridError::DimensionMismatch {
                what: "segmentation vs depth",
                expected: depth.dims(),
                actual: segmentation.dims(),
            });
        }
        Ok(Self {
            image_id: image_id.into(),
            scene_label: scene_label.into(),
            rgb: None,
            depth,
            segmentation,
            captions: Vec::new(),
        })
    }

    pub fn with_rgb(mut self, rgb: RgbImage) -> Result<Self, GridError> {
        if rgb.dims() != self.depth.dims() {
            return Err(GridError::DimensionMismatch {
                what: "rgb vs depth",
                expected: self.depth.dims(),
                actual: rgb.dims(),
            });
        }
        self.rgb = Some(rgb);
        Ok(self)
    }

    pub fn with_captions(mut self, captions: Vec<String>) -> Self {
        self.captions = captions;
        self
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), GridError> {
    if expected != actual {
        return Err(GridError::BufferLength {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
