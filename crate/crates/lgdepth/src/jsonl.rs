//! Line-oriented output schemas.
//!
//! Corpus, one line per group:
//! `{"image_id", "mode", "aggregate", "sentences": [{"text", "kind", "axis"?, "direction"?, "subject"?, "object"?}]}`
//!
//! Relations, one line per relation:
//! `{"image_id", "subject_id", "subject_class", "object_id", "object_class", "axis", "direction"}`
//!
//! Adversarial triplets:
//! `{"image_id", "axis", "original", "relation_switch", "object_switch"}`

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lgdepth_core::relations::SpatialRelation;
use lgdepth_core::sentences::{AdversarialTriplet, SentenceGroup, SentenceRecord};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceLine {
    pub text: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
}

impl From<&SentenceRecord> for SentenceLine {
    fn from(r: &SentenceRecord) -> Self {
        let m = r.relation.as_ref();
        Self {
            text: r.text.clone(),
            kind: r.kind.as_str().to_string(),
            axis: m.map(|m| m.relation.axis().as_str().to_string()),
            direction: m.map(|m| m.relation.direction.as_str().to_string()),
            subject: m.map(|m| m.subject_class.clone()),
            object: m.map(|m| m.object_class.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub image_id: String,
    pub mode: String,
    pub aggregate: String,
    pub sentences: Vec<SentenceLine>,
}

impl From<&SentenceGroup> for CorpusLine {
    fn from(g: &SentenceGroup) -> Self {
        Self {
            image_id: g.image_id.clone(),
            mode: g.mode.as_str().to_string(),
            aggregate: g.aggregate.as_str().to_string(),
            sentences: g.sentences.iter().map(SentenceLine::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLine {
    pub image_id: String,
    pub subject_id: u16,
    pub subject_class: String,
    pub object_id: u16,
    pub object_class: String,
    pub axis: String,
    pub direction: String,
}

impl RelationLine {
    pub fn new(image_id: &str, rel: &SpatialRelation, class_of: &BTreeMap<u16, String>) -> Self {
        let class = |id| class_of.get(&id).cloned().unwrap_or_default();
        Self {
            image_id: image_id.to_string(),
            subject_id: rel.subject,
            subject_class: class(rel.subject),
            object_id: rel.object,
            object_class: class(rel.object),
            axis: rel.axis().as_str().to_string(),
            direction: rel.direction.as_str().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletLine {
    pub image_id: String,
    pub axis: String,
    pub original: String,
    pub relation_switch: String,
    pub object_switch: String,
}

impl TripletLine {
    pub fn new(image_id: &str, t: &AdversarialTriplet) -> Self {
        Self {
            image_id: image_id.to_string(),
            axis: t.axis.as_str().to_string(),
            original: t.original.clone(),
            relation_switch: t.relation_switch.clone(),
            object_switch: t.object_switch.clone(),
        }
    }
}

/// Serializes each item on its own line.
pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("line serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}
