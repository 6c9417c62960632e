//! lgdepth-core: object-centric spatial relations, sentence corpora, masking
//! perturbations and depth metrics over in-memory RGB-D samples.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no I/O. Decoding
//! files, manifests and the command line live in the `lgdepth` crate.
//!
//! Pipeline, per sample:
//!
//! 1. [`objects`]: centroid, maximum radius and depth statistics for every
//!    labelled instance.
//! 2. [`relations`]: horizontal / vertical / depth relations per ordered
//!    object pair, gated by the overlap factor λ.
//! 3. [`sentences`]: scene, activity, caption and spatial sentences, the two
//!    corpus composition modes and adversarial switches.
//! 4. [`perturbation`]: blank one unique object in the RGB input and phrase
//!    a compensating relation sentence.
//! 5. [`metrics`]: δ1..δ3, RMSE, Abs.REL and Log10 per image, aggregates and
//!    run-to-run deltas.
//!
//! Image coordinates follow the row/column convention throughout: `X` is the
//! row index (grows downward) and `Y` the column index (grows rightward).
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod grid;
pub mod metrics;
pub mod objects;
pub mod perturbation;
pub mod relations;
pub mod sentences;

pub use grid::{DepthGrid, GridError, RgbImage, Sample, SegmentationMap};
pub use metrics::{EvalConfig, MetricReport, MetricsError, PixelMetrics};
pub use objects::{ObjectInstance, StatsError};
pub use relations::{Axis, Direction, RelationConfig, SpatialRelation};
pub use sentences::{CorpusSpec, SentenceKind, SentenceRecord, TemplateSet};
