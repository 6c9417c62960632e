//! Sentence generation: scene-level templates, activity paraphrases,
//! relation sentences, corpus composition and adversarial switches.
//!
//! Templates use `[CLASS]` for scene/activity text and `[SUBJECT]` /
//! `[OBJECT]` for relation phrasings. Object class names are rendered in
//! lowercase with an "a"/"an" article picked from the first letter.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Sample;
use crate::relations::{Axis, Direction, SpatialRelation};

pub const CLASS_SLOT: &str = "[CLASS]";
pub const SUBJECT_SLOT: &str = "[SUBJECT]";
pub const OBJECT_SLOT: &str = "[OBJECT]";

/// Scene template for activity descriptions.
pub const ACTIVITY_TEMPLATE: &str = "a picture of a [CLASS]";

/// Separator used when a scene template is concatenated with extra sentences.
pub const CONCAT_SEPARATOR: &str = ", ";

/// NYUv2 scene name → activity description.
pub const ACTIVITY_MAP: [(&str, &str); 27] = [
    (
        "printer room",
        "room to access and operate printing equipment",
    ),
    (
        "bathroom",
        "room to attend to personal hygiene and grooming",
    ),
    (
        "living room",
        "place to relax, socialize, and entertain guests in a house",
    ),
    (
        "study",
        "room to focus on reading, learning, and researching",
    ),
    ("conference room", "room to hold meetings and discussions"),
    (
        "study room",
        "room to concentrate on academic or professional tasks",
    ),
    ("kitchen", "room to prepare and cook meals"),
    (
        "home office",
        "place to work on professional tasks from home",
    ),
    ("bedroom", "room to sleep and rest in a home"),
    ("dinette", "place to have informal meals"),
    (
        "playroom",
        "place to engage in recreational activities and games for kids",
    ),
    ("indoor balcony", "place to enjoy views and relax indoors"),
    (
        "laundry room",
        "room to clean and maintain clothing and fabrics",
    ),
    (
        "basement",
        "place for storage, recreation, or utilities usually below ground level",
    ),
    (
        "exercise room",
        "room to workout and engage in physical activities",
    ),
    (
        "foyer",
        "area of the house to welcome guests and as an entryway",
    ),
    (
        "home storage",
        "storage area in a house to store items and belongings",
    ),
    (
        "cafe",
        "place to enjoy beverages and light meals in a social setting",
    ),
    (
        "furniture store",
        "place to browse and purchase furniture items",
    ),
    (
        "office kitchen",
        "place to prepare refreshments and snacks in an office",
    ),
    (
        "student lounge",
        "place to relax and interact in a university or school setting for students",
    ),
    (
        "dining room",
        "room to have formal meals with family or guests",
    ),
    ("reception room", "room to welcome and accommodate visitors"),
    (
        "computer lab",
        "lab to use computers for learning or work purposes",
    ),
    (
        "classroom",
        "room to attend educational lectures and lessons",
    ),
    (
        "office",
        "place to carry out professional tasks and responsibilities",
    ),
    (
        "bookstore",
        "place to browse and purchase books and literary materials",
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceError {
    UnmappedScene {
        scene: String,
        known: Vec<String>,
    },
    UnknownClass(u16),
    MissingCaptions(String),
    BadTemplate {
        template: String,
        reason: &'static str,
    },
    MissingPhrasing(Direction),
    EmptyComponents,
    PerTemplateWithoutScene,
}

impl fmt::Display for SentenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentenceError::UnmappedScene { scene, known } => write!(
                f,
                "no activity description for scene {scene:?}; known scenes: {}",
                known.join(", ")
            ),
            SentenceError::UnknownClass(id) => write!(f, "no class name for instance {id}"),
            SentenceError::MissingCaptions(id) => {
                write!(f, "captions requested but sample {id} has none")
            }
            SentenceError::BadTemplate { template, reason } => {
                write!(f, "template {template:?}: {reason}")
            }
            SentenceError::MissingPhrasing(d) => write!(f, "no phrasing for direction {d}"),
            SentenceError::EmptyComponents => write!(f, "corpus spec has no components"),
            SentenceError::PerTemplateWithoutScene => {
                write!(f, "per-template mode needs the scene component")
            }
        }
    }
}

impl core::error::Error for SentenceError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SentenceKind {
    Scene,
    Activity,
    Caption,
    Spatial,
}

impl SentenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SentenceKind::Scene => "scene",
            SentenceKind::Activity => "activity",
            SentenceKind::Caption => "caption",
            SentenceKind::Spatial => "spatial",
        }
    }
}

/// A relation together with the class names it was rendered with.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelationMention {
    pub relation: SpatialRelation,
    pub subject_class: String,
    pub object_class: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SentenceRecord {
    pub image_id: String,
    pub text: String,
    pub kind: SentenceKind,
    /// Present iff `kind == Spatial`.
    pub relation: Option<RelationMention>,
    pub template_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    scene_templates: Vec<String>,
    spatial: BTreeMap<Direction, Vec<String>>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::with_scene_templates(alloc::vec![String::from("a photo of a [CLASS]")])
            .expect("built-in templates are well formed")
    }
}

impl TemplateSet {
    /// Default relation phrasings; the first entry per direction is canonical.
    pub fn default_spatial() -> BTreeMap<Direction, Vec<String>> {
        let phrasings: [(Direction, &[&str]); 6] = [
            (
                Direction::Front,
                &["is in front of", "is closer than", "is nearer than"],
            ),
            (
                Direction::Behind,
                &["is behind", "is farther away than", "is more distant than"],
            ),
            (Direction::Above, &["is above"]),
            (Direction::Below, &["is below"]),
            (Direction::Right, &["is to the right of"]),
            (Direction::Left, &["is to the left of"]),
        ];
        phrasings
            .into_iter()
            .map(|(d, ps)| {
                let ts = ps
                    .iter()
                    .map(|p| format!("{SUBJECT_SLOT} {p} {OBJECT_SLOT}"))
                    .collect();
                (d, ts)
            })
            .collect()
    }

    pub fn with_scene_templates(scene_templates: Vec<String>) -> Result<Self, SentenceError> {
        Self::new(scene_templates, Self::default_spatial())
    }

    pub fn new(
        scene_templates: Vec<String>,
        spatial: BTreeMap<Direction, Vec<String>>,
    ) -> Result<Self, SentenceError> {
        for t in &scene_templates {
            expect_once(t, CLASS_SLOT)?;
        }
        for d in Direction::ALL {
            let ts = spatial.get(&d).filter(|ts| !ts.is_empty());
            let ts = ts.ok_or(SentenceError::MissingPhrasing(d))?;
            for t in ts {
                expect_once(t, SUBJECT_SLOT)?;
                expect_once(t, OBJECT_SLOT)?;
            }
        }
        Ok(Self {
            scene_templates,
            spatial,
        })
    }

    pub fn scene_templates(&self) -> &[String] {
        &self.scene_templates
    }

    pub fn phrasings(&self, direction: Direction) -> &[String] {
        self.spatial
            .get(&direction)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

fn expect_once(template: &str, slot: &str) -> Result<(), SentenceError> {
    let n = template.matches(slot).count();
    if n == 1 {
        return Ok(());
    }
    Err(SentenceError::BadTemplate {
        template: template.to_string(),
        reason: if n == 0 {
            "placeholder missing"
        } else {
            "placeholder repeated"
        },
    })
}

/// Scene labels are stored with underscores in some exports ("living_room").
pub fn display_scene(label: &str) -> String {
    label.replace('_', " ")
}

/// Lowercased class name with its indefinite article: "an apple", "a tv".
pub fn with_article(class_name: &str) -> String {
    let name = class_name.replace('_', " ").to_lowercase();
    let article = match name.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    };
    format!("{article} {name}")
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// One record per scene template, `[CLASS]` replaced by the scene label.
pub fn scene_sentences(
    image_id: &str,
    scene_label: &str,
    templates: &TemplateSet,
) -> Vec<SentenceRecord> {
    let scene = display_scene(scene_label);
    templates
        .scene_templates()
        .iter()
        .enumerate()
        .map(|(i, t)| SentenceRecord {
            image_id: image_id.to_string(),
            text: t.replacen(CLASS_SLOT, &scene, 1),
            kind: SentenceKind::Scene,
            relation: None,
            template_id: Some(i),
        })
        .collect()
}

pub fn activity_description(scene_label: &str) -> Option<&'static str> {
    let wanted = display_scene(scene_label).to_lowercase();
    ACTIVITY_MAP
        .iter()
        .find(|(scene, _)| *scene == wanted.trim())
        .map(|(_, activity)| *activity)
}

pub fn activity_sentence(
    image_id: &str,
    scene_label: &str,
) -> Result<SentenceRecord, SentenceError> {
    let activity =
        activity_description(scene_label).ok_or_else(|| SentenceError::UnmappedScene {
            scene: scene_label.to_string(),
            known: ACTIVITY_MAP.iter().map(|(s, _)| s.to_string()).collect(),
        })?;
    Ok(SentenceRecord {
        image_id: image_id.to_string(),
        text: ACTIVITY_TEMPLATE.replacen(CLASS_SLOT, activity, 1),
        kind: SentenceKind::Activity,
        relation: None,
        template_id: None,
    })
}

/// Which relation phrasing(s) to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Phrasing {
    #[default]
    Canonical,
    All,
    /// One phrasing chosen by the seed, stable per (image, relation).
    SeededRandom,
}

fn mention(
    rel: &SpatialRelation,
    class_names: &BTreeMap<u16, String>,
) -> Result<RelationMention, SentenceError> {
    let lookup = |id| {
        class_names
            .get(&id)
            .cloned()
            .ok_or(SentenceError::UnknownClass(id))
    };
    Ok(RelationMention {
        relation: *rel,
        subject_class: lookup(rel.subject)?,
        object_class: lookup(rel.object)?,
    })
}

fn render(template: &str, m: &RelationMention) -> String {
    let text = template
        .replacen(SUBJECT_SLOT, &with_article(&m.subject_class), 1)
        .replacen(OBJECT_SLOT, &with_article(&m.object_class), 1);
    capitalize(&text)
}

/// Canonical sentence for a relation, e.g. "A knife is in front of a refrigerator".
pub fn canonical_text(
    rel: &SpatialRelation,
    class_names: &BTreeMap<u16, String>,
    templates: &TemplateSet,
) -> Result<String, SentenceError> {
    let m = mention(rel, class_names)?;
    let template = templates
        .phrasings(rel.direction)
        .first()
        .ok_or(SentenceError::MissingPhrasing(rel.direction))?;
    Ok(render(template, &m))
}

pub fn relation_sentence(
    image_id: &str,
    rel: &SpatialRelation,
    class_names: &BTreeMap<u16, String>,
    templates: &TemplateSet,
    phrasing: Phrasing,
    seed: u64,
) -> Result<Vec<SentenceRecord>, SentenceError> {
    let m = mention(rel, class_names)?;
    let options = templates.phrasings(rel.direction);
    if options.is_empty() {
        return Err(SentenceError::MissingPhrasing(rel.direction));
    }
    let chosen: Vec<usize> = match phrasing {
        Phrasing::Canonical => alloc::vec![0],
        Phrasing::All => (0..options.len()).collect(),
        Phrasing::SeededRandom => {
            let key = stream_key(image_id)
                ^ ((rel.subject as u64) << 32)
                ^ ((rel.object as u64) << 16)
                ^ rel.direction as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(key);
            alloc::vec![rng.gen_range(0..options.len())]
        }
    };
    Ok(chosen
        .into_iter()
        .map(|i| SentenceRecord {
            image_id: image_id.to_string(),
            text: render(&options[i], &m),
            kind: SentenceKind::Spatial,
            relation: Some(m.clone()),
            template_id: Some(i),
        })
        .collect())
}

/// FNV-1a over the image id, used to give each sample its own RNG stream.
fn stream_key(image_id: &str) -> u64 {
    image_id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Component {
    Scene,
    Caption,
    DepthRelations,
    HorizontalRelations,
    VerticalRelations,
    Activity,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Scene,
        Component::Caption,
        Component::DepthRelations,
        Component::HorizontalRelations,
        Component::VerticalRelations,
        Component::Activity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Scene => "scene",
            Component::Caption => "caption",
            Component::DepthRelations => "depth_relations",
            Component::HorizontalRelations => "horizontal_relations",
            Component::VerticalRelations => "vertical_relations",
            Component::Activity => "activity",
        }
    }

    /// Accepts the full name or the short aliases `depth`, `horizontal`, `vertical`.
    pub fn parse(s: &str) -> Option<Component> {
        let s = s.trim().to_lowercase().replace('-', "_");
        let short = match s.as_str() {
            "depth" => Some(Component::DepthRelations),
            "horizontal" => Some(Component::HorizontalRelations),
            "vertical" => Some(Component::VerticalRelations),
            "captions" => Some(Component::Caption),
            _ => None,
        };
        short.or_else(|| Component::ALL.into_iter().find(|c| c.as_str() == s))
    }

    fn axis(self) -> Option<Axis> {
        match self {
            Component::DepthRelations => Some(Axis::Depth),
            Component::HorizontalRelations => Some(Axis::Horizontal),
            Component::VerticalRelations => Some(Axis::Vertical),
            _ => None,
        }
    }
}

/// `Stack` keeps the scene-template block as separate records meant to be
/// averaged, with every extra sentence stacked beside it. `PerTemplate`
/// appends the extras to each scene template, one group per template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CorpusMode {
    #[default]
    Stack,
    PerTemplate,
}

impl CorpusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusMode::Stack => "stack",
            CorpusMode::PerTemplate => "per_template",
        }
    }
}

/// How a downstream embedder should combine a group's records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Aggregate {
    /// Average the scene-kind records into one embedding; stack the rest.
    MeanBlock,
    /// Each record is embedded on its own.
    Single,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::MeanBlock => "mean_block",
            Aggregate::Single => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusSpec {
    pub components: Vec<Component>,
    pub mode: CorpusMode,
    /// `None` keeps every relation.
    pub max_relations_per_axis: Option<usize>,
    pub seed: u64,
    pub phrasing: Phrasing,
    /// Keep only relations whose subject id is below the object id.
    pub canonical_only: bool,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            components: alloc::vec![Component::Scene],
            mode: CorpusMode::Stack,
            max_relations_per_axis: None,
            seed: 0,
            phrasing: Phrasing::Canonical,
            canonical_only: false,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), SentenceError> {
        if self.components.is_empty() {
            return Err(SentenceError::EmptyComponents);
        }
        if self.mode == CorpusMode::PerTemplate && !self.components.contains(&Component::Scene) {
            return Err(SentenceError::PerTemplateWithoutScene);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceGroup {
    pub image_id: String,
    pub mode: CorpusMode,
    pub aggregate: Aggregate,
    pub sentences: Vec<SentenceRecord>,
}

/// Relations of one axis after the canonical filter and truncation. The
/// kept subset is a seeded sample, returned in sorted relation order.
pub fn select_relations(
    image_id: &str,
    relations: &[SpatialRelation],
    axis: Axis,
    spec: &CorpusSpec,
) -> Vec<SpatialRelation> {
    let mut pool: Vec<SpatialRelation> = relations
        .iter()
        .filter(|r| r.axis() == axis)
        .filter(|r| !spec.canonical_only || r.subject < r.object)
        .copied()
        .collect();
    pool.sort();
    match spec.max_relations_per_axis {
        Some(k) if k < pool.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(stream_key(image_id) ^ (axis as u64 + 1));
            let mut picked = index::sample(&mut rng, pool.len(), k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| pool[i]).collect()
        }
        _ => pool,
    }
}

pub fn compose_corpus(
    sample: &Sample,
    relations: &[SpatialRelation],
    spec: &CorpusSpec,
    templates: &TemplateSet,
) -> Result<Vec<SentenceGroup>, SentenceError> {
    spec.validate()?;
    let id = sample.image_id.as_str();
    let class_names = sample.segmentation.class_of();

    let mut parts: Vec<(Component, Vec<SentenceRecord>)> = Vec::new();
    for &component in &spec.components {
        let records = match component {
            Component::Scene => scene_sentences(id, &sample.scene_label, templates),
            Component::Activity => alloc::vec![activity_sentence(id, &sample.scene_label)?],
            Component::Caption => {
                if sample.captions.is_empty() {
                    return Err(SentenceError::MissingCaptions(id.to_string()));
                }
                sample
                    .captions
                    .iter()
                    .map(|c| SentenceRecord {
                        image_id: id.to_string(),
                        text: c.clone(),
                        kind: SentenceKind::Caption,
                        relation: None,
                        template_id: None,
                    })
                    .collect()
            }
            c => {
                let axis = c.axis().expect("relation component");
                let mut out = Vec::new();
                for rel in select_relations(id, relations, axis, spec) {
                    out.extend(relation_sentence(
                        id,
                        &rel,
                        class_names,
                        templates,
                        spec.phrasing,
                        spec.seed,
                    )?);
                }
                out
            }
        };
        parts.push((component, records));
    }

    match spec.mode {
        CorpusMode::Stack => {
            let aggregate = if spec.components.contains(&Component::Scene) {
                Aggregate::MeanBlock
            } else {
                Aggregate::Single
            };
            Ok(alloc::vec![SentenceGroup {
                image_id: id.to_string(),
                mode: CorpusMode::Stack,
                aggregate,
                sentences: parts.into_iter().flat_map(|(_, r)| r).collect(),
            }])
        }
        CorpusMode::PerTemplate => {
            let mut scene_block = Vec::new();
            let mut extras = Vec::new();
            for (component, records) in parts {
                if component == Component::Scene {
                    scene_block = records;
                } else {
                    extras.extend(records.iter().map(|r| decapitalize(&r.text)));
                }
            }
            Ok(scene_block
                .into_iter()
                .map(|scene| {
                    let mut text = scene.text;
                    if !extras.is_empty() {
                        text.truncate(text.trim_end_matches('.').len());
                    }
                    for extra in &extras {
                        text.push_str(CONCAT_SEPARATOR);
                        text.push_str(extra);
                    }
                    SentenceGroup {
                        image_id: id.to_string(),
                        mode: CorpusMode::PerTemplate,
                        aggregate: Aggregate::Single,
                        sentences: alloc::vec![SentenceRecord { text, ..scene }],
                    }
                })
                .collect())
        }
    }
}

/// Canonical sentence and its two adversarial edits.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdversarialTriplet {
    pub axis: Axis,
    pub original: String,
    /// Direction flipped, order kept.
    pub relation_switch: String,
    /// Order swapped, direction kept.
    pub object_switch: String,
}

pub fn adversarial_variants(
    rel: &SpatialRelation,
    class_names: &BTreeMap<u16, String>,
    templates: &TemplateSet,
) -> Result<AdversarialTriplet, SentenceError> {
    Ok(AdversarialTriplet {
        axis: rel.axis(),
        original: canonical_text(rel, class_names, templates)?,
        relation_switch: canonical_text(&rel.flip_direction(), class_names, templates)?,
        object_switch: canonical_text(&rel.swap_objects(), class_names, templates)?,
    })
}

/// Word count after stripping ASCII punctuation and splitting on whitespace.
pub fn caption_word_count(caption: &str) -> usize {
    let stripped: String = caption
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    stripped.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DepthGrid, SegmentationMap};
    use alloc::vec;

    fn names(pairs: &[(u16, &str)]) -> BTreeMap<u16, String> {
        pairs.iter().map(|(i, n)| (*i, n.to_string())).collect()
    }

    fn rel(s: u16, o: u16, d: Direction) -> SpatialRelation {
        SpatialRelation::new(s, o, d).unwrap()
    }

    #[test]
    fn default_scene_sentence() {
        let out = scene_sentences("i", "bedroom", &TemplateSet::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "a photo of a bedroom");
        assert_eq!(out[0].template_id, Some(0));
    }

    #[test]
    fn eighty_templates_eighty_records() {
        let ts: Vec<String> = (0..80)
            .map(|i| format!("variant {i} of a [CLASS]"))
            .collect();
        let set = TemplateSet::with_scene_templates(ts).unwrap();
        let out = scene_sentences("i", "kitchen", &set);
        assert_eq!(out.len(), 80);
        assert_eq!(out[79].text, "variant 79 of a kitchen");
    }

    #[test]
    fn empty_template_list() {
        let set = TemplateSet::with_scene_templates(vec![]).unwrap();
        assert!(scene_sentences("i", "kitchen", &set).is_empty());
    }

    #[test]
    fn template_validation() {
        assert!(TemplateSet::with_scene_templates(vec!["no slot".into()]).is_err());
        assert!(TemplateSet::with_scene_templates(vec!["[CLASS] [CLASS]".into()]).is_err());
        let mut spatial = TemplateSet::default_spatial();
        spatial.insert(Direction::Left, vec![]);
        assert_eq!(
            TemplateSet::new(vec![], spatial),
            Err(SentenceError::MissingPhrasing(Direction::Left))
        );
    }

    #[test]
    fn activity_sentences() {
        assert_eq!(
            activity_sentence("i", "kitchen").unwrap().text,
            "a picture of a room to prepare and cook meals"
        );
        assert_eq!(
            activity_sentence("i", "bathroom").unwrap().text,
            "a picture of a room to attend to personal hygiene and grooming"
        );
        assert_eq!(
            activity_sentence("i", "living_room").unwrap().text,
            "a picture of a place to relax, socialize, and entertain guests in a house"
        );
        match activity_sentence("i", "spaceship") {
            Err(SentenceError::UnmappedScene { known, .. }) => assert_eq!(known.len(), 27),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_relation_sentences() {
        let n = names(&[(1, "knife"), (2, "refrigerator"), (3, "lamp"), (4, "table")]);
        let t = TemplateSet::default();
        let out = relation_sentence(
            "i",
            &rel(1, 2, Direction::Front),
            &n,
            &t,
            Phrasing::Canonical,
            0,
        )
        .unwrap();
        assert_eq!(out[0].text, "A knife is in front of a refrigerator");
        let out = relation_sentence(
            "i",
            &rel(3, 4, Direction::Above),
            &n,
            &t,
            Phrasing::Canonical,
            0,
        )
        .unwrap();
        assert_eq!(out[0].text, "A lamp is above a table");
    }

    #[test]
    fn all_depth_phrasings() {
        let n = names(&[(1, "knife"), (2, "refrigerator")]);
        let out = relation_sentence(
            "i",
            &rel(1, 2, Direction::Front),
            &n,
            &TemplateSet::default(),
            Phrasing::All,
            0,
        )
        .unwrap();
        let texts: Vec<&str> = out.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(
            texts,
            [
                "A knife is in front of a refrigerator",
                "A knife is closer than a refrigerator",
                "A knife is nearer than a refrigerator"
            ]
        );
    }

    #[test]
    fn seeded_phrasing_is_stable() {
        let n = names(&[(1, "cup"), (2, "bowl")]);
        let t = TemplateSet::default();
        let r = rel(1, 2, Direction::Behind);
        let a = relation_sentence("x", &r, &n, &t, Phrasing::SeededRandom, 7).unwrap();
        let b = relation_sentence("x", &r, &n, &t, Phrasing::SeededRandom, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert!(t.phrasings(Direction::Behind).len() > a[0].template_id.unwrap());
    }

    #[test]
    fn articles() {
        assert_eq!(with_article("apple"), "an apple");
        assert_eq!(with_article("TV"), "a tv");
        assert_eq!(with_article("night_stand"), "a night stand");
        assert_eq!(with_article("Umbrella stand"), "an umbrella stand");
    }

    #[test]
    fn adversarial_rules() {
        let n = names(&[(1, "A"), (2, "B")]);
        let t = TemplateSet::default();
        let tri = adversarial_variants(&rel(1, 2, Direction::Front), &n, &t).unwrap();
        assert_eq!(tri.original, "An a is in front of a b");
        assert_eq!(tri.relation_switch, "An a is behind a b");
        assert_eq!(tri.object_switch, "A b is in front of an a");

        let n = names(&[(1, "cup"), (2, "plate")]);
        let tri = adversarial_variants(&rel(1, 2, Direction::Left), &n, &t).unwrap();
        assert_eq!(tri.relation_switch, "A cup is to the right of a plate");
        assert_eq!(tri.object_switch, "A plate is to the left of a cup");
        let tri = adversarial_variants(&rel(1, 2, Direction::Above), &n, &t).unwrap();
        assert_eq!(tri.relation_switch, "A cup is below a plate");
        assert_eq!(tri.object_switch, "A plate is above a cup");
    }

    #[test]
    fn word_count() {
        assert_eq!(caption_word_count("A bed in a room."), 5);
        assert_eq!(caption_word_count("  - ... "), 0);
        assert_eq!(caption_word_count("tv, bed; lamp"), 3);
    }

    fn toy_sample(captions: Vec<String>) -> Sample {
        let classes = names(&[(1, "tv"), (2, "bed"), (3, "lamp"), (4, "sofa")]);
        let seg = SegmentationMap::new(4, 1, vec![1, 2, 3, 4], classes).unwrap();
        let depth = DepthGrid::from_raw(4, 1, vec![1.0, 2.0, 3.0, 1.0]).unwrap();
        Sample::new("img", "bedroom", depth, seg)
            .unwrap()
            .with_captions(captions)
    }

    #[test]
    fn stack_scene_only_is_identity() {
        let s = toy_sample(vec![]);
        let t = TemplateSet::default();
        let groups = compose_corpus(&s, &[], &CorpusSpec::default(), &t).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].aggregate, Aggregate::MeanBlock);
        assert_eq!(groups[0].sentences, scene_sentences("img", "bedroom", &t));
    }

    #[test]
    fn per_template_concatenation() {
        let s = toy_sample(vec![]);
        let spec = CorpusSpec {
            components: vec![Component::Scene, Component::DepthRelations],
            mode: CorpusMode::PerTemplate,
            ..CorpusSpec::default()
        };
        let rels = [rel(1, 2, Direction::Front), rel(3, 4, Direction::Behind)];
        let groups = compose_corpus(&s, &rels, &spec, &TemplateSet::default()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(
            groups[0].sentences[0].text,
            "a photo of a bedroom, a tv is in front of a bed, a lamp is behind a sofa"
        );

        let dotted =
            TemplateSet::with_scene_templates(vec!["a bad photo of a [CLASS].".into()]).unwrap();
        let groups = compose_corpus(&s, &rels[..1], &spec, &dotted).unwrap();
        assert_eq!(
            groups[0].sentences[0].text,
            "a bad photo of a bedroom, a tv is in front of a bed"
        );
    }

    #[test]
    fn caption_passthrough_and_missing() {
        let caps = vec!["A Bed, In A Room.".to_string(), "second".to_string()];
        let s = toy_sample(caps.clone());
        let spec = CorpusSpec {
            components: vec![Component::Caption],
            ..CorpusSpec::default()
        };
        let groups = compose_corpus(&s, &[], &spec, &TemplateSet::default()).unwrap();
        let texts: Vec<String> = groups[0].sentences.iter().map(|r| r.text.clone()).collect();
        assert_eq!(texts, caps);
        assert_eq!(groups[0].aggregate, Aggregate::Single);
        assert_eq!(
            compose_corpus(&toy_sample(vec![]), &[], &spec, &TemplateSet::default()),
            Err(SentenceError::MissingCaptions("img".into()))
        );
    }

    #[test]
    fn stack_keeps_component_order() {
        let s = toy_sample(vec!["cap".into()]);
        let spec = CorpusSpec {
            components: vec![
                Component::HorizontalRelations,
                Component::Scene,
                Component::Caption,
                Component::Activity,
            ],
            ..CorpusSpec::default()
        };
        let rels = [rel(1, 2, Direction::Left), rel(2, 1, Direction::Right)];
        let g = &compose_corpus(&s, &rels, &spec, &TemplateSet::default()).unwrap()[0];
        let kinds: Vec<SentenceKind> = g.sentences.iter().map(|r| r.kind).collect();
        assert_eq!(
            kinds,
            [
                SentenceKind::Spatial,
                SentenceKind::Spatial,
                SentenceKind::Scene,
                SentenceKind::Caption,
                SentenceKind::Activity
            ]
        );
    }

    #[test]
    fn truncation_and_canonical_filter() {
        let rels: Vec<SpatialRelation> = (1..=4u16)
            .flat_map(|a| (1..=4u16).filter(move |b| *b != a).map(move |b| (a, b)))
            .map(|(a, b)| {
                rel(
                    a,
                    b,
                    if a < b {
                        Direction::Left
                    } else {
                        Direction::Right
                    },
                )
            })
            .collect();
        let spec = CorpusSpec {
            max_relations_per_axis: Some(3),
            seed: 11,
            ..CorpusSpec::default()
        };
        let picked = select_relations("img", &rels, Axis::Horizontal, &spec);
        assert_eq!(picked.len(), 3);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            picked,
            select_relations("img", &rels, Axis::Horizontal, &spec)
        );
        let canon = CorpusSpec {
            canonical_only: true,
            ..CorpusSpec::default()
        };
        let picked = select_relations("img", &rels, Axis::Horizontal, &canon);
        assert_eq!(picked.len(), 6);
        assert!(picked.iter().all(|r| r.subject < r.object));
        assert!(select_relations("img", &rels, Axis::Depth, &canon).is_empty());
    }

    #[test]
    fn per_template_requires_scene() {
        let spec = CorpusSpec {
            components: vec![Component::Caption],
            mode: CorpusMode::PerTemplate,
            ..CorpusSpec::default()
        };
        assert_eq!(spec.validate(), Err(SentenceError::PerTemplateWithoutScene));
        let empty = CorpusSpec {
            components: vec![],
            ..CorpusSpec::default()
        };
        assert_eq!(empty.validate(), Err(SentenceError::EmptyComponents));
    }

    #[test]
    fn component_aliases() {
        assert_eq!(Component::parse("depth"), Some(Component::DepthRelations));
        assert_eq!(
            Component::parse("vertical-relations"),
            Some(Component::VerticalRelations)
        );
        assert_eq!(Component::parse("scene"), Some(Component::Scene));
        assert_eq!(Component::parse("bogus"), None);
    }
}
