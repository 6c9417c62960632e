//! Run configuration: a TOML file whose values are overridden by command
//! line flags.
//!
//! ```toml
//! seed = 0
//! out_dir = "out"
//!
//! [relations]
//! lambda = 1.0
//! unique_only = true
//!
//! [corpus]
//! components = ["scene", "depth"]
//! mode = "stack"            # or "per_template"
//! phrasing = "canonical"    # "all", "seeded_random"
//! templates = "imagenet_templates.toml"
//!
//! [eval]
//! max_depth = 10.0
//! center_crop = [228, 304]
//!
//! [mask]
//! fill = "zero"             # "mean_rgb" or [r, g, b]
//! ```
//!
//! Relative paths inside the file resolve against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lgdepth_core::metrics::{Aggregation, Crop};
use lgdepth_core::perturbation::FillPolicy;
use lgdepth_core::relations::Direction;
use lgdepth_core::sentences::{CorpusMode, Phrasing, TemplateSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub relations: RelationsSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub mask: MaskSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationsSection {
    pub lambda: Option<f64>,
    pub unique_only: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub components: Option<Vec<String>>,
    pub mode: Option<CorpusMode>,
    pub max_relations_per_axis: Option<usize>,
    pub phrasing: Option<Phrasing>,
    pub canonical_only: Option<bool>,
    pub relation_complete: Option<bool>,
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub max_depth: Option<f64>,
    pub min_depth: Option<f64>,
    pub delta_base: Option<f64>,
    pub aggregation: Option<Aggregation>,
    /// top, left, height, width
    pub crop: Option<[usize; 4]>,
    /// height, width
    pub center_crop: Option<[usize; 2]>,
    pub resize_nearest: Option<bool>,
    pub allow_missing: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    pub fill: Option<FillSetting>,
    pub target_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FillSetting {
    Named(String),
    Constant([u8; 3]),
}

impl FillSetting {
    pub fn to_policy(&self) -> Result<FillPolicy> {
        match self {
            FillSetting::Constant(c) => Ok(FillPolicy::Constant(*c)),
            FillSetting::Named(name) => parse_fill(name),
        }
    }
}

/// `zero`, `mean_rgb`, or `r,g,b`.
pub fn parse_fill(s: &str) -> Result<FillPolicy> {
    match s.trim() {
        "zero" | "black" => Ok(FillPolicy::Zero),
        "mean_rgb" | "mean" => Ok(FillPolicy::MeanRgb),
        other => {
            let parts: Vec<&str> = other.split(',').map(str::trim).collect();
            let values: Option<Vec<u8>> = parts.iter().map(|p| p.parse().ok()).collect();
            match values.as_deref() {
                Some(&[r, g, b]) => Ok(FillPolicy::Constant([r, g, b])),
                _ => Err(Error::Argument(format!(
                    "fill must be zero, mean_rgb or r,g,b; got {s:?}"
                ))),
            }
        }
    }
}

/// `top,left,height,width`.
pub fn parse_crop(s: &str) -> Result<Crop> {
    match parse_usizes(s).as_deref() {
        Some(&[top, left, height, width]) => Ok(Crop::Rect {
            top,
            left,
            height,
            width,
        }),
        _ => Err(Error::Argument(format!(
            "crop must be top,left,height,width; got {s:?}"
        ))),
    }
}

/// `HxW`.
pub fn parse_center_crop(s: &str) -> Result<Crop> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    match parts
        .iter()
        .map(|p| p.trim().parse().ok())
        .collect::<Option<Vec<usize>>>()
        .as_deref()
    {
        Some(&[height, width]) if parts.len() == 2 => Ok(Crop::Center { height, width }),
        _ => Err(Error::Argument(format!(
            "center crop must be HxW; got {s:?}"
        ))),
    }
}

fn parse_usizes(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

pub fn parse_phrasing(s: &str) -> Result<Phrasing> {
    match s.trim().replace('-', "_").as_str() {
        "canonical" => Ok(Phrasing::Canonical),
        "all" => Ok(Phrasing::All),
        "seeded_random" | "random" => Ok(Phrasing::SeededRandom),
        _ => Err(Error::Argument(format!(
            "phrasing must be canonical, all or seeded_random; got {s:?}"
        ))),
    }
}

pub fn parse_mode(s: &str) -> Result<CorpusMode> {
    match s.trim().replace('-', "_").as_str() {
        "stack" => Ok(CorpusMode::Stack),
        "per_template" => Ok(CorpusMode::PerTemplate),
        _ => Err(Error::Argument(format!(
            "mode must be stack or per_template; got {s:?}"
        ))),
    }
}

pub fn parse_aggregation(s: &str) -> Result<Aggregation> {
    match s.trim().replace('-', "_").as_str() {
        "per_image_mean" | "per_image" => Ok(Aggregation::PerImageMean),
        "pixel_pooled" | "pooled" => Ok(Aggregation::PixelPooled),
        _ => Err(Error::Argument(format!(
            "aggregation must be per_image_mean or pixel_pooled; got {s:?}"
        ))),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.out_dir.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.corpus.templates.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn crop(&self) -> Result<Option<Crop>> {
        match (self.eval.crop, self.eval.center_crop) {
            (Some(_), Some(_)) => Err(Error::Config(
                "eval.crop and eval.center_crop are exclusive".into(),
            )),
            (Some([top, left, height, width]), None) => Ok(Some(Crop::Rect {
                top,
                left,
                height,
                width,
            })),
            (None, Some([height, width])) => Ok(Some(Crop::Center { height, width })),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    scene_templates: Vec<String>,
    #[serde(default)]
    spatial: BTreeMap<String, Vec<String>>,
}

/// Loads a template file: `scene_templates = [...]` plus an optional
/// `[spatial]` table keyed by direction that replaces the default phrasings
/// of the directions it names.
pub fn load_templates(path: &Path) -> Result<TemplateSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TemplateFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut spatial = TemplateSet::default_spatial();
    for (key, phrasings) in file.spatial {
        let direction = Direction::parse(&key).ok_or_else(|| {
            Error::Config(format!("{}: unknown direction {key:?}", path.display()))
        })?;
        spatial.insert(direction, phrasings);
    }
    TemplateSet::new(file.scene_templates, spatial)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg: Config = toml::from_str(
            r#"
            seed = 7
            [relations]
            lambda = 2.0
            [corpus]
            components = ["scene", "depth"]
            mode = "per_template"
            phrasing = "seeded_random"
            [eval]
            center_crop = [4, 6]
            aggregation = "pixel_pooled"
            [mask]
            fill = [1, 2, 3]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.relations.lambda, Some(2.0));
        assert_eq!(cfg.corpus.mode, Some(CorpusMode::PerTemplate));
        assert_eq!(cfg.corpus.phrasing, Some(Phrasing::SeededRandom));
        assert_eq!(
            cfg.crop().unwrap(),
            Some(Crop::Center {
                height: 4,
                width: 6
            })
        );
        assert_eq!(cfg.eval.aggregation, Some(Aggregation::PixelPooled));
        assert_eq!(
            cfg.mask.fill.unwrap().to_policy().unwrap(),
            FillPolicy::Constant([1, 2, 3])
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[eval]\nmaxdepth = 3.0").is_err());
        assert!(toml::from_str::<Config>("sed = 3").is_err());
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_fill("mean_rgb").unwrap(), FillPolicy::MeanRgb);
        assert_eq!(
            parse_fill("0, 255,7").unwrap(),
            FillPolicy::Constant([0, 255, 7])
        );
        assert!(parse_fill("256,0,0").is_err());
        assert_eq!(
            parse_crop("1,2,3,4").unwrap(),
            Crop::Rect {
                top: 1,
                left: 2,
                height: 3,
                width: 4
            }
        );
        assert_eq!(
            parse_center_crop("228x304").unwrap(),
            Crop::Center {
                height: 228,
                width: 304
            }
        );
        assert!(parse_center_crop("228").is_err());
        assert!(parse_mode("stacked").is_err());
    }

    #[test]
    fn template_file_overrides_named_directions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(
            &path,
            "scene_templates = [\"a [CLASS]\", \"the [CLASS]\"]\n[spatial]\nabove = [\"[SUBJECT] sits over [OBJECT]\"]\n",
        )
        .unwrap();
        let t = load_templates(&path).unwrap();
        assert_eq!(t.scene_templates().len(), 2);
        assert_eq!(
            t.phrasings(Direction::Above),
            ["[SUBJECT] sits over [OBJECT]"]
        );
        assert_eq!(
            t.phrasings(Direction::Below),
            ["[SUBJECT] is below [OBJECT]"]
        );
        std::fs::write(&path, "scene_templates = [\"no slot\"]\n").unwrap();
        assert!(matches!(load_templates(&path), Err(Error::Config(_))));
    }
}
