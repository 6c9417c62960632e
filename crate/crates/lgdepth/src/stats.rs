//! Per-scene corpus statistics: object counts, caption lengths and relation
//! counts per axis. Relations here are counted over all objects, unique or not.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use lgdepth_core::grid::Sample;
use lgdepth_core::objects::class_counts;
use lgdepth_core::relations::{axis_counts, extract_all, RelationConfig};
use lgdepth_core::sentences::caption_word_count;

use crate::manifest::scene_key;
use crate::report::fmt3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AxisCounts {
    pub horizontal: usize,
    pub vertical: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneStats {
    pub scene: String,
    pub n_images: usize,
    pub mean_objects: f64,
    pub mean_unique_objects: f64,
    /// Absent when no image of the scene has captions.
    pub mean_caption_words: Option<f64>,
    pub relations: AxisCounts,
}

/// Per-image tallies, kept separate so the scene roll-up can be checked
/// against a recount.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTally {
    pub scene: String,
    pub objects: usize,
    pub unique_objects: usize,
    pub caption_words: Vec<usize>,
    pub relations: [usize; 3],
}

pub fn tally(sample: &Sample, cfg: &RelationConfig) -> ImageTally {
    let counts = class_counts(&sample.segmentation);
    ImageTally {
        scene: scene_key(&sample.scene_label),
        objects: counts.values().sum(),
        unique_objects: counts.values().filter(|c| **c == 1).count(),
        caption_words: sample
            .captions
            .iter()
            .map(|c| caption_word_count(c))
            .collect(),
        relations: axis_counts(&extract_all(sample, cfg, false)),
    }
}

pub fn scene_stats(tallies: &[ImageTally]) -> Vec<SceneStats> {
    let mut by_scene: BTreeMap<&str, Vec<&ImageTally>> = BTreeMap::new();
    for t in tallies {
        by_scene.entry(t.scene.as_str()).or_default().push(t);
    }
    by_scene
        .into_iter()
        .map(|(scene, ts)| {
            let n = ts.len() as f64;
            let words: Vec<usize> = ts
                .iter()
                .flat_map(|t| t.caption_words.iter().copied())
                .collect();
            let sum = |i: usize| ts.iter().map(|t| t.relations[i]).sum();
            SceneStats {
                scene: scene.to_string(),
                n_images: ts.len(),
                mean_objects: ts.iter().map(|t| t.objects as f64).sum::<f64>() / n,
                mean_unique_objects: ts.iter().map(|t| t.unique_objects as f64).sum::<f64>() / n,
                mean_caption_words: (!words.is_empty())
                    .then(|| words.iter().sum::<usize>() as f64 / words.len() as f64),
                relations: AxisCounts {
                    horizontal: sum(0),
                    vertical: sum(1),
                    depth: sum(2),
                },
            }
        })
        .collect()
}

pub fn render_stats(stats: &[SceneStats]) -> String {
    let mut out = String::from(
        "| Scene | Images | Objects (mean) | Unique objects (mean) | Caption words (mean) | Horizontal | Vertical | Depth |\n|---|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for s in stats {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            s.scene,
            s.n_images,
            fmt3(s.mean_objects),
            fmt3(s.mean_unique_objects),
            s.mean_caption_words
                .map(fmt3)
                .unwrap_or_else(|| "n/a".into()),
            s.relations.horizontal,
            s.relations.vertical,
            s.relations.depth
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(scene: &str, objects: usize, words: &[usize]) -> ImageTally {
        ImageTally {
            scene: scene.into(),
            objects,
            unique_objects: objects,
            caption_words: words.to_vec(),
            relations: [1, 0, 2],
        }
    }

    #[test]
    fn mean_object_count() {
        let s = scene_stats(&[t("office", 3, &[]), t("office", 5, &[])]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_objects, 4.0);
        assert_eq!(s[0].mean_caption_words, None);
        assert_eq!(
            s[0].relations,
            AxisCounts {
                horizontal: 2,
                vertical: 0,
                depth: 4
            }
        );
    }

    #[test]
    fn caption_words_and_scene_order() {
        let s = scene_stats(&[t("office", 1, &[5, 3]), t("bedroom", 2, &[4])]);
        assert_eq!(s[0].scene, "bedroom");
        assert_eq!(s[1].mean_caption_words, Some(4.0));
        assert!(render_stats(&s).contains("| office | 1 | 1.000 | 1.000 | 4.000 | 1 | 0 | 2 |"));
    }
}
