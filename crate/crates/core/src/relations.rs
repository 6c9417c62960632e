//! Pairwise spatial relations between object instances.
//!
//! For an ordered pair (A, B) and overlap factor λ:
//!
//! * horizontal iff `|Y_a - Y_b| > λ (R_a + R_b)`; A is left of B iff `Y_a < Y_b`.
//! * vertical iff `|X_a - X_b| > λ (R_a + R_b)`; A is above B iff `X_a < X_b`.
//! * depth iff `|μ_a - μ_b| > (M_a - μ_a) + (M_b - μ_b)`; A is in front of B
//!   iff `μ_a + σ_a < μ_b + σ_b`, otherwise behind (ties land on "behind").
//!
//! All comparisons are strict.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::Sample;
use crate::objects::{eligible_objects, ObjectInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Axis {
    Horizontal,
    Vertical,
    Depth,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Horizontal, Axis::Vertical, Axis::Depth];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Horizontal => "horizontal",
            Axis::Vertical => "vertical",
            Axis::Depth => "depth",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Left,
    Right,
    Above,
    Below,
    Front,
    Behind,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::Left,
        Direction::Right,
        Direction::Above,
        Direction::Below,
        Direction::Front,
        Direction::Behind,
    ];

    pub fn axis(self) -> Axis {
        match self {
            Direction::Left | Direction::Right => Axis::Horizontal,
            Direction::Above | Direction::Below => Axis::Vertical,
            Direction::Front | Direction::Behind => Axis::Depth,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Above => Direction::Below,
            Direction::Below => Direction::Above,
            Direction::Front => Direction::Behind,
            Direction::Behind => Direction::Front,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Above => "above",
            Direction::Below => "below",
            Direction::Front => "front",
            Direction::Behind => "behind",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `direction(subject, object)`, e.g. `left(A, B)` reads "A is to the left of B".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpatialRelation {
    pub subject: u16,
    pub object: u16,
    pub direction: Direction,
}

impl SpatialRelation {
    /// Returns `None` when subject and object coincide.
    pub fn new(subject: u16, object: u16, direction: Direction) -> Option<Self> {
        (subject != object).then_some(Self {
            subject,
            object,
            direction,
        })
    }

    pub fn axis(&self) -> Axis {
        self.direction.axis()
    }

    /// Same pair, opposite direction.
    pub fn flip_direction(&self) -> Self {
        Self {
            direction: self.direction.opposite(),
            ..*self
        }
    }

    /// Subject and object exchanged, direction kept.
    pub fn swap_objects(&self) -> Self {
        Self {
            subject: self.object,
            object: self.subject,
            direction: self.direction,
        }
    }

    /// The relation the rule emits for the reversed pair.
    pub fn converse(&self) -> Self {
        self.swap_objects().flip_direction()
    }

    /// Sort key: (subject, object, axis).
    pub fn sort_key(&self) -> (u16, u16, Axis) {
        (self.subject, self.object, self.axis())
    }
}

impl Ord for SpatialRelation {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then(self.direction.cmp(&other.direction))
    }
}

impl PartialOrd for SpatialRelation {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Overlap factor λ ≥ 0 for the horizontal and vertical tests.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelationConfig {
    lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvalidLambda(pub f64);

impl fmt::Display for InvalidLambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ must be a finite non-negative number, got {}", self.0)
    }
}

impl core::error::Error for InvalidLambda {}

impl RelationConfig {
    pub fn new(lambda: f64) -> Result<Self, InvalidLambda> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(Self { lambda })
        } else {
            Err(InvalidLambda(lambda))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for RelationConfig {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

/// Relations with `a` as subject and `b` as object, at most one per axis,
/// in horizontal, vertical, depth order.
pub fn extract_pair(
    a: &ObjectInstance,
    b: &ObjectInstance,
    cfg: &RelationConfig,
) -> Vec<SpatialRelation> {
    let mut out = Vec::with_capacity(3);
    if a.instance_id == b.instance_id {
        return out;
    }
    let rel = |direction| SpatialRelation {
        subject: a.instance_id,
        object: b.instance_id,
        direction,
    };
    let gap = cfg.lambda * (a.max_radius + b.max_radius);

    if libm::fabs(a.centroid_col - b.centroid_col) > gap {
        out.push(rel(if a.centroid_col < b.centroid_col {
            Direction::Left
        } else {
            Direction::Right
        }));
    }
    if libm::fabs(a.centroid_row - b.centroid_row) > gap {
        out.push(rel(if a.centroid_row < b.centroid_row {
            Direction::Above
        } else {
            Direction::Below
        }));
    }
    let spread = (a.depth_max - a.depth_mean) + (b.depth_max - b.depth_mean);
    if libm::fabs(a.depth_mean - b.depth_mean) > spread {
        out.push(rel(
            if a.depth_mean + a.depth_std < b.depth_mean + b.depth_std {
                Direction::Front
            } else {
                Direction::Behind
            },
        ));
    }
    out
}

/// Relations over every ordered pair of `objects`, sorted by
/// (subject, object, axis).
pub fn extract_among(objects: &[ObjectInstance], cfg: &RelationConfig) -> Vec<SpatialRelation> {
    let mut out: Vec<SpatialRelation> = objects
        .iter()
        .flat_map(|a| objects.iter().map(move |b| (a, b)))
        .filter(|(a, b)| a.instance_id != b.instance_id)
        .flat_map(|(a, b)| extract_pair(a, b, cfg))
        .collect();
    out.sort();
    out
}

/// Relations for a whole sample. With `unique_only`, only instances whose
/// class occurs once take part. Degenerate objects never do.
pub fn extract_all(
    sample: &Sample,
    cfg: &RelationConfig,
    unique_only: bool,
) -> Vec<SpatialRelation> {
    extract_among(&eligible_objects(sample, unique_only), cfg)
}

/// True when at least one relation exists on each axis.
pub fn is_relation_complete(relations: &[SpatialRelation]) -> bool {
    Axis::ALL
        .iter()
        .all(|axis| relations.iter().any(|r| r.axis() == *axis))
}

/// Relation counts indexed as horizontal, vertical, depth.
pub fn axis_counts(relations: &[SpatialRelation]) -> [usize; 3] {
    let mut counts = [0; 3];
    for r in relations {
        counts[r.axis() as usize] += 1;
    }
    counts
}
