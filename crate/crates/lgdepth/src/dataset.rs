//! Loading and writing samples, and relation-complete subset selection.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use lgdepth_core::grid::{DepthGrid, RgbImage, Sample, SegmentationMap};
use lgdepth_core::relations::{extract_all, is_relation_complete, RelationConfig};

use crate::error::{Error, Result};
use crate::formats::{self, DepthEncoding, FormatError, RawDepth, SegmentationSidecar};
use crate::manifest::{scene_key, Manifest, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub max_depth: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { max_depth: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub sample: Sample,
    pub depth_encoding: DepthEncoding,
}

/// The segmentation sidecar sits next to the PNG with a `.json` extension.
pub fn sidecar_path(segmentation: &Path) -> PathBuf {
    segmentation.with_extension("json")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> Error + '_ {
    move |source| Error::Format {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_depth_file(path: &Path) -> Result<RawDepth> {
    formats::decode_depth(&read(path)?).map_err(format_err(path))
}

/// A predicted depth map. Validity is "finite and positive"; clamping to the
/// evaluation range happens at scoring time.
pub fn load_prediction(path: &Path) -> Result<DepthGrid> {
    let raw = read_depth_file(path)?;
    Ok(DepthGrid::from_raw(raw.width, raw.height, raw.values)?)
}

pub fn read_segmentation(path: &Path, scene: Option<&str>) -> Result<SegmentationMap> {
    let (width, height, ids) = formats::decode_gray16(&read(path)?).map_err(format_err(path))?;
    let side = sidecar_path(path);
    let sidecar: SegmentationSidecar =
        serde_json::from_slice(&read(&side)?).map_err(|source| Error::Json {
            path: side.clone(),
            source,
        })?;
    if let Some(scene) = scene {
        if scene_key(scene) != scene_key(&sidecar.scene) {
            return Err(Error::Validation(format!(
                "{}: sidecar scene {:?} disagrees with manifest scene {scene:?}",
                side.display(),
                sidecar.scene
            )));
        }
    }
    let class_of = sidecar
        .class_map()
        .map_err(|m| Error::Validation(format!("{}: {m}", side.display())))?;
    SegmentationMap::new(width, height, ids, class_of)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn load_sample(
    manifest: &Manifest,
    entry: &ManifestEntry,
    opts: &LoadOptions,
) -> Result<LoadedSample> {
    let depth_path = manifest.resolve(&entry.depth);
    let raw = read_depth_file(&depth_path)?;
    let depth = DepthGrid::ground_truth(raw.width, raw.height, raw.values, opts.max_depth)?;
    let seg = read_segmentation(&manifest.resolve(&entry.segmentation), Some(&entry.scene))?;
    let mut sample = Sample::new(&entry.id, &entry.scene, depth, seg)
        .map_err(|e| Error::Validation(format!("{}: {e}", entry.id)))?;
    if let Some(rgb_path) = &entry.rgb {
        let path = manifest.resolve(rgb_path);
        let (w, h, data) = formats::decode_rgb8(&read(&path)?).map_err(format_err(&path))?;
        sample = sample
            .with_rgb(RgbImage::new(w, h, data)?)
            .map_err(|e| Error::Validation(format!("{}: {e}", entry.id)))?;
    }
    Ok(LoadedSample {
        sample: sample.with_captions(entry.captions.clone()),
        depth_encoding: raw.encoding,
    })
}

/// Loads every entry concurrently; output keeps manifest order.
pub fn load_all(manifest: &Manifest, opts: &LoadOptions) -> Result<Vec<LoadedSample>> {
    manifest
        .entries
        .par_iter()
        .map(|e| load_sample(manifest, e, opts))
        .collect()
}

/// Where [`write_sample`] puts each raster. The sidecar goes next to the
/// segmentation PNG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePaths {
    pub depth: PathBuf,
    pub segmentation: PathBuf,
    pub rgb: Option<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sidecar_json(sample: &Sample) -> Vec<u8> {
    let sidecar =
        SegmentationSidecar::from_class_map(&sample.scene_label, sample.segmentation.class_of());
    let mut bytes = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_sample(sample: &Sample, encoding: DepthEncoding, paths: &SamplePaths) -> Result<()> {
    let (w, h) = sample.depth.dims();
    let depth = formats::encode_depth(w, h, sample.depth.values(), encoding)
        .map_err(format_err(&paths.depth))?;
    write(&paths.depth, &depth)?;
    let seg = formats::encode_gray16(w, h, sample.segmentation.ids())
        .map_err(format_err(&paths.segmentation))?;
    write(&paths.segmentation, &seg)?;
    write(&sidecar_path(&paths.segmentation), &sidecar_json(sample))?;
    if let (Some(rgb), Some(path)) = (&sample.rgb, &paths.rgb) {
        write_rgb(path, rgb)?;
    }
    Ok(())
}

pub fn write_rgb(path: &Path, rgb: &RgbImage) -> Result<()> {
    let bytes =
        formats::encode_rgb8(rgb.width(), rgb.height(), rgb.data()).map_err(format_err(path))?;
    write(path, &bytes)
}

pub fn write_depth(path: &Path, grid: &DepthGrid, encoding: DepthEncoding) -> Result<()> {
    let (w, h) = grid.dims();
    let bytes = formats::encode_depth(w, h, grid.values(), encoding).map_err(format_err(path))?;
    write(path, &bytes)
}

/// Keeps the samples that have at least one depth, one vertical and one
/// horizontal relation.
pub fn select_relation_complete_subset(
    manifest: &Manifest,
    cfg: &RelationConfig,
    unique_only: bool,
    opts: &LoadOptions,
) -> Result<Manifest> {
    let keep: Vec<bool> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let loaded = load_sample(manifest, e, opts)?;
            Ok(is_relation_complete(&extract_all(
                &loaded.sample,
                cfg,
                unique_only,
            )))
        })
        .collect::<Result<_>>()?;
    let entries = manifest
        .entries
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| e.clone())
        .collect();
    Ok(manifest.with_entries(entries, Some("relation_complete".into())))
}
