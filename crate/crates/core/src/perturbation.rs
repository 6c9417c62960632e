//! Object masking: blank one unique-class instance in the RGB input and
//! describe its position relative to another object in words.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{RgbImage, Sample};
use crate::objects::class_counts;
use crate::relations::{Axis, SpatialRelation};
use crate::sentences::{
    canonical_text, RelationMention, SentenceKind, SentenceRecord, TemplateSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillPolicy {
    /// Black.
    #[default]
    Zero,
    /// Per-channel mean of the whole unmasked image, rounded half up.
    MeanRgb,
    Constant([u8; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compensation {
    #[default]
    DepthAxisPreferred,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskSpec {
    pub target_instance: u16,
    pub fill: FillPolicy,
    pub compensation: Compensation,
}

/// Inclusive pixel bounds of the masked region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    pub min_row: usize,
    pub min_col: usize,
    pub max_row: usize,
    pub max_col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskReceipt {
    pub image_id: String,
    pub target_id: u16,
    pub target_class: String,
    pub pixels_masked: usize,
    pub bbox: BoundingBox,
    pub fill: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskError {
    TargetNotFound(u16),
    /// The target's class occurs more than once in the sample.
    NotUnique {
        target: u16,
        class: String,
        count: usize,
    },
    MissingRgb(String),
    /// No relation has the target as subject.
    NoRelation(u16),
    UnknownClass(u16),
}

impl fmt::Display for MaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskError::TargetNotFound(id) => write!(f, "mask target {id} not present"),
            MaskError::NotUnique {
                target,
                class,
                count,
            } => write!(
                f,
                "mask target {target} has class {class:?} shared by {count} instances; only unique objects may be masked"
            ),
            MaskError::MissingRgb(id) => write!(f, "sample {id} has no RGB image to mask"),
            MaskError::NoRelation(id) => {
                write!(f, "no relation with instance {id} as subject")
            }
            MaskError::UnknownClass(id) => write!(f, "no class name for instance {id}"),
        }
    }
}

impl core::error::Error for MaskError {}

/// Returns the masked copy of the sample's RGB image. Only pixels of the
/// target instance are written.
pub fn mask_object(sample: &Sample, spec: &MaskSpec) -> Result<(RgbImage, MaskReceipt), MaskError> {
    let seg = &sample.segmentation;
    let target = spec.target_instance;
    let class = seg
        .class_name(target)
        .filter(|_| target != 0)
        .ok_or(MaskError::TargetNotFound(target))?;
    let count = class_counts(seg).get(class).copied().unwrap_or(0);
    if count == 0 {
        return Err(MaskError::TargetNotFound(target));
    }
    if count > 1 {
        return Err(MaskError::NotUnique {
            target,
            class: class.to_string(),
            count,
        });
    }
    let rgb = sample
        .rgb
        .as_ref()
        .ok_or_else(|| MaskError::MissingRgb(sample.image_id.clone()))?;

    let fill = match spec.fill {
        FillPolicy::Zero => [0, 0, 0],
        FillPolicy::Constant(c) => c,
        FillPolicy::MeanRgb => mean_rgb(rgb),
    };

    let width = seg.width();
    let mut out = rgb.clone();
    let mut bbox = BoundingBox {
        min_row: usize::MAX,
        min_col: usize::MAX,
        max_row: 0,
        max_col: 0,
    };
    let mut pixels = 0;
    for i in seg.mask_indices(target) {
        out.set_pixel(i, fill);
        let (r, c) = (i / width, i % width);
        bbox.min_row = bbox.min_row.min(r);
        bbox.min_col = bbox.min_col.min(c);
        bbox.max_row = bbox.max_row.max(r);
        bbox.max_col = bbox.max_col.max(c);
        pixels += 1;
    }

    Ok((
        out,
        MaskReceipt {
            image_id: sample.image_id.clone(),
            target_id: target,
            target_class: class.to_string(),
            pixels_masked: pixels,
            bbox,
            fill,
        },
    ))
}

/// Integer per-channel mean, rounded half up.
pub fn mean_rgb(rgb: &RgbImage) -> [u8; 3] {
    let n = (rgb.width() * rgb.height()) as u64;
    if n == 0 {
        return [0; 3];
    }
    let mut sums = [0u64; 3];
    for px in rgb.data().chunks_exact(3) {
        for (s, v) in sums.iter_mut().zip(px) {
            *s += *v as u64;
        }
    }
    sums.map(|s| ((2 * s + n) / (2 * n)) as u8)
}

fn axis_priority(axis: Axis) -> u8 {
    match axis {
        Axis::Depth => 0,
        Axis::Horizontal => 1,
        Axis::Vertical => 2,
    }
}

/// Picks the relation that best pins down the target: depth first, then
/// horizontal, then vertical; ties broken by the lowest partner id.
pub fn compensation_relation(
    target: u16,
    relations: &[SpatialRelation],
) -> Option<SpatialRelation> {
    relations
        .iter()
        .filter(|r| r.subject == target)
        .min_by_key(|r| (axis_priority(r.axis()), r.object))
        .copied()
}

pub fn compensation_sentence(
    image_id: &str,
    target: u16,
    relations: &[SpatialRelation],
    class_names: &BTreeMap<u16, String>,
    templates: &TemplateSet,
) -> Result<SentenceRecord, MaskError> {
    let rel = compensation_relation(target, relations).ok_or(MaskError::NoRelation(target))?;
    let lookup = |id| {
        class_names
            .get(&id)
            .cloned()
            .ok_or(MaskError::UnknownClass(id))
    };
    let mention = RelationMention {
        relation: rel,
        subject_class: lookup(rel.subject)?,
        object_class: lookup(rel.object)?,
    };
    let text = canonical_text(&rel, class_names, templates)
        .map_err(|_| MaskError::UnknownClass(rel.object))?;
    Ok(SentenceRecord {
        image_id: image_id.to_string(),
        text,
        kind: SentenceKind::Spatial,
        relation: Some(mention),
        template_id: Some(0),
    })
}

/// Unique instances that have at least one relation as subject, ascending:
/// the candidates for a masking run.
pub fn maskable_targets(sample: &Sample, relations: &[SpatialRelation]) -> Vec<u16> {
    let counts = class_counts(&sample.segmentation);
    sample
        .segmentation
        .present_instances()
        .into_iter()
        .filter(|id| {
            sample
                .segmentation
                .class_name(*id)
                .is_some_and(|c| counts.get(c) == Some(&1))
        })
        .filter(|id| relations.iter().any(|r| r.subject == *id))
        .collect()
}
