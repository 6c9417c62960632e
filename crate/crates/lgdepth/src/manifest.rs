//! Dataset manifests and scene-based partitioning.
//!
//! ```json
//! {"dataset": "nyuv2", "entries": [
//!   {"id": "0001", "scene": "bedroom", "depth": "depth/0001.png",
//!    "segmentation": "seg/0001.png", "rgb": "rgb/0001.png",
//!    "captions": ["a bed next to a lamp"]}
//! ]}
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use lgdepth_core::sentences::display_scene;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub scene: String,
    pub depth: PathBuf,
    pub segmentation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_tag: Option<String>,
    pub entries: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(dataset: impl Into<String>, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            split_tag: None,
            entries: Vec::new(),
            base_dir: base_dir.into(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.check_unique_ids()?;
        Ok(manifest)
    }

    /// Writes the manifest to `path`. Entry paths are rewritten so they still
    /// resolve from the new location.
    pub fn save(&self, path: &Path) -> Result<()> {
        let target_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut out = self.clone();
        if !same_dir(&self.base_dir, &target_dir) {
            for e in &mut out.entries {
                e.depth = absolute(&self.base_dir, &e.depth);
                e.segmentation = absolute(&self.base_dir, &e.segmentation);
                e.rgb = e.rgb.as_ref().map(|p| absolute(&self.base_dir, p));
            }
        }
        out.base_dir = target_dir.clone();
        if !target_dir.as_os_str().is_empty() {
            fs::create_dir_all(&target_dir).map_err(|e| Error::io(&target_dir, e))?;
        }
        fs::write(path, out.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    /// SHA-256 of the serialized manifest, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_json())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate image id {:?} in manifest",
                    e.id
                )));
            }
        }
        Ok(())
    }

    /// Every referenced file exists.
    pub fn check_files(&self) -> Result<()> {
        for e in &self.entries {
            let paths = [Some(&e.depth), Some(&e.segmentation), e.rgb.as_ref()];
            for p in paths.into_iter().flatten() {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(Error::Validation(format!(
                        "{}: referenced file {} does not exist",
                        e.id,
                        full.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_entries(&self, entries: Vec<ManifestEntry>, split_tag: Option<String>) -> Self {
        Self {
            dataset: self.dataset.clone(),
            split_tag,
            entries,
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn has_captions(&self) -> bool {
        self.entries.iter().any(|e| !e.captions.is_empty())
    }
}

fn absolute(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    };
    std::path::absolute(&joined).unwrap_or(joined)
}

fn same_dir(a: &Path, b: &Path) -> bool {
    let canon = |p: &Path| {
        let p = if p.as_os_str().is_empty() {
            Path::new(".")
        } else {
            p
        };
        fs::canonicalize(p).ok()
    };
    a == b || matches!((canon(a), canon(b)), (Some(x), Some(y)) if x == y)
}

/// Canonical comparison form of a scene label: lowercase, underscores as spaces.
pub fn scene_key(label: &str) -> String {
    display_scene(label).trim().to_lowercase()
}

/// Scene-disjoint split used for the out-of-distribution experiment.
pub const OOD_TRAIN_SCENES: [&str; 15] = [
    "printer room",
    "bathroom",
    "living room",
    "study",
    "conference room",
    "study room",
    "kitchen",
    "home office",
    "bedroom",
    "dinette",
    "playroom",
    "indoor balcony",
    "laundry room",
    "basement",
    "exercise room",
];

pub const OOD_TEST_SCENES: [&str; 12] = [
    "student lounge",
    "dining room",
    "reception room",
    "computer lab",
    "classroom",
    "office",
    "bookstore",
    "foyer",
    "home storage",
    "cafe",
    "furniture store",
    "office kitchen",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: Manifest,
    pub test: Manifest,
    /// Entries whose scene is in neither set.
    pub dropped: Vec<String>,
}

pub fn partition_by_scene(
    manifest: &Manifest,
    train_scenes: &BTreeSet<String>,
    test_scenes: &BTreeSet<String>,
) -> Result<Partition> {
    let train_keys: BTreeSet<String> = train_scenes.iter().map(|s| scene_key(s)).collect();
    let test_keys: BTreeSet<String> = test_scenes.iter().map(|s| scene_key(s)).collect();
    let overlap: Vec<&String> = train_keys.intersection(&test_keys).collect();
    if !overlap.is_empty() {
        return Err(Error::Argument(format!(
            "train and test scene sets overlap: {}",
            overlap
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    let (mut train, mut test, mut dropped) = (Vec::new(), Vec::new(), Vec::new());
    for e in &manifest.entries {
        let key = scene_key(&e.scene);
        if train_keys.contains(&key) {
            train.push(e.clone());
        } else if test_keys.contains(&key) {
            test.push(e.clone());
        } else {
            dropped.push(e.id.clone());
        }
    }
    if !dropped.is_empty() {
        log::warn!(
            "partition: {} entries belong to neither scene set and were dropped",
            dropped.len()
        );
    }
    Ok(Partition {
        train: manifest.with_entries(train, Some("train".into())),
        test: manifest.with_entries(test, Some("test".into())),
        dropped,
    })
}

pub fn ood_scene_sets() -> (BTreeSet<String>, BTreeSet<String>) {
    (
        OOD_TRAIN_SCENES.iter().map(|s| s.to_string()).collect(),
        OOD_TEST_SCENES.iter().map(|s| s.to_string()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, scene: &str) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            scene: scene.into(),
            depth: format!("{id}.png").into(),
            segmentation: format!("{id}_seg.png").into(),
            rgb: None,
            captions: vec![],
        }
    }

    fn manifest(entries: &[(&str, &str)]) -> Manifest {
        let mut m = Manifest::new("toy", "");
        m.entries = entries.iter().map(|(i, s)| entry(i, s)).collect();
        m
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn four_entry_split() {
        let m = manifest(&[
            ("a", "kitchen"),
            ("b", "office"),
            ("c", "kitchen"),
            ("d", "office"),
        ]);
        let p = partition_by_scene(&m, &set(&["kitchen"]), &set(&["office"])).unwrap();
        let ids = |m: &Manifest| m.entries.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&p.train), ["a", "c"]);
        assert_eq!(ids(&p.test), ["b", "d"]);
        assert!(p.dropped.is_empty());
    }

    #[test]
    fn empty_test_set_and_drops() {
        let m = manifest(&[("a", "living_room"), ("b", "cafe")]);
        let p = partition_by_scene(&m, &set(&["Living Room"]), &BTreeSet::new()).unwrap();
        assert_eq!(p.train.entries.len(), 1);
        assert!(p.test.entries.is_empty());
        assert_eq!(p.dropped, ["b"]);
    }

    #[test]
    fn overlap_rejected() {
        let m = manifest(&[]);
        let err = partition_by_scene(&m, &set(&["office"]), &set(&["Office"])).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn ood_sets_cover_activity_scenes_disjointly() {
        let (train, test) = ood_scene_sets();
        assert_eq!(train.len() + test.len(), 27);
        assert!(train.is_disjoint(&test));
        for (scene, _) in lgdepth_core::sentences::ACTIVITY_MAP {
            assert!(train.contains(scene) || test.contains(scene), "{scene}");
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let m = manifest(&[("a", "x"), ("a", "y")]);
        assert!(m.check_unique_ids().is_err());
    }

    #[test]
    fn json_shape() {
        let json = r#"{"dataset":"d","entries":[{"id":"1","scene":"s","depth":"d.png","segmentation":"s.png","captions":["hi"]}]}"#;
        let m: Manifest = serde_json::from_str(json).unwrap();
        assert_eq!(m.entries[0].captions, ["hi"]);
        assert_eq!(m.entries[0].rgb, None);
    }
}
