//! Argument parsing and the glue from flags + config file to command
//! arguments. Flags override the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use lgdepth_core::metrics::EvalConfig;
use lgdepth_core::relations::RelationConfig;
use lgdepth_core::sentences::{Component, CorpusSpec, TemplateSet};

use crate::commands::{self, Context};
use crate::config::{self, Config};
use crate::dataset::LoadOptions;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lgdepth",
    version,
    about = "Spatial-language corpora and depth-metric reports"
)]
pub struct Cli {
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true, env = "LGDEPTH_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Seed for all random choices [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the sentence corpus, relation list and adversarial triplets.
    GenSentences(GenSentencesCmd),
    /// Mask one unique object per image and write compensation receipts.
    Mask(MaskCmd),
    /// Score predicted depth maps against the manifest's ground truth.
    Eval(EvalCmd),
    /// Signed and percent deltas between two evaluation reports.
    Compare(CompareCmd),
    /// Per-scene object, caption and relation statistics.
    Stats(StatsCmd),
    /// Summarize externally computed scores for adversarial triplets.
    Adversarial(AdversarialCmd),
    /// Keep only images with a relation on every axis.
    Subset(SubsetCmd),
    /// Split a manifest into scene-disjoint train and test manifests.
    Partition(PartitionCmd),
}

#[derive(Debug, Args)]
pub struct RelationFlags {
    /// Overlap factor for horizontal and vertical relations [default: 1].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Use every object, not only classes that occur once per image.
    #[arg(long)]
    pub all_objects: bool,
}

#[derive(Debug, Args)]
pub struct GenSentencesCmd {
    pub manifest: PathBuf,
    /// Comma-separated: scene, caption, depth, horizontal, vertical, activity.
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<String>>,
    /// stack or per_template.
    #[arg(long)]
    pub mode: Option<String>,
    /// canonical, all or seeded_random.
    #[arg(long)]
    pub phrasing: Option<String>,
    #[arg(long)]
    pub max_relations_per_axis: Option<usize>,
    /// Emit each unordered pair once (subject id < object id).
    #[arg(long)]
    pub canonical_only: bool,
    /// Restrict to images with a relation on every axis.
    #[arg(long)]
    pub relation_complete: bool,
    /// Template file with `scene_templates` and optional `[spatial]`.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[command(flatten)]
    pub relations: RelationFlags,
}

#[derive(Debug, Args)]
pub struct MaskCmd {
    pub manifest: PathBuf,
    /// zero, mean_rgb or r,g,b.
    #[arg(long)]
    pub fill: Option<String>,
    /// Mask the unique instance of this class instead of the lowest-id one.
    #[arg(long)]
    pub target_class: Option<String>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[command(flatten)]
    pub relations: RelationFlags,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    pub manifest: PathBuf,
    /// Directory holding `<image_id>.png` (uint16 mm) or `.dgrd` predictions.
    pub pred_dir: PathBuf,
    /// Report name; outputs are `<name>.json` and `<name>.md`.
    #[arg(long, default_value = "eval")]
    pub name: String,
    #[arg(long)]
    pub max_depth: Option<f64>,
    #[arg(long)]
    pub min_depth: Option<f64>,
    #[arg(long)]
    pub delta_base: Option<f64>,
    /// per_image_mean or pixel_pooled.
    #[arg(long)]
    pub aggregation: Option<String>,
    /// top,left,height,width
    #[arg(long, conflicts_with = "center_crop")]
    pub crop: Option<String>,
    /// HxW centered in the image.
    #[arg(long)]
    pub center_crop: Option<String>,
    /// Nearest-neighbour resize predictions whose size differs from the ground truth.
    #[arg(long)]
    pub resize_nearest: bool,
    /// Skip images without a prediction instead of failing.
    #[arg(long)]
    pub allow_missing: bool,
}

#[derive(Debug, Args)]
pub struct CompareCmd {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    /// Compare over the images both reports share.
    #[arg(long)]
    pub intersect: bool,
    #[arg(long, default_value = "compare")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct StatsCmd {
    pub manifest: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AdversarialCmd {
    /// adversarial.jsonl from gen-sentences.
    pub triplets: PathBuf,
    /// CSV: image_id,axis,original,relation_switch,object_switch
    pub scores: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubsetCmd {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub relations: RelationFlags,
}

#[derive(Debug, Args)]
pub struct PartitionCmd {
    pub manifest: PathBuf,
    /// Comma-separated train scenes; defaults to the built-in OOD split.
    #[arg(long, value_delimiter = ',', requires = "test_scenes")]
    pub train_scenes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', requires = "train_scenes")]
    pub test_scenes: Option<Vec<String>>,
}

fn relation_settings(cfg: &Config, flags: &RelationFlags) -> Result<(RelationConfig, bool)> {
    let lambda = flags.lambda.or(cfg.relations.lambda).unwrap_or(1.0);
    let unique_only = if flags.all_objects {
        false
    } else {
        cfg.relations.unique_only.unwrap_or(true)
    };
    Ok((RelationConfig::new(lambda)?, unique_only))
}

fn templates(cfg: &Config, flag: &Option<PathBuf>) -> Result<TemplateSet> {
    match flag.as_ref().or(cfg.corpus.templates.as_ref()) {
        Some(path) => config::load_templates(path),
        None => Ok(TemplateSet::default()),
    }
}

fn components(names: &[String]) -> Result<Vec<Component>> {
    names
        .iter()
        .map(|n| {
            Component::parse(n).ok_or_else(|| Error::Argument(format!("unknown component {n:?}")))
        })
        .collect()
}

fn eval_config(cfg: &Config, cmd: &EvalCmd) -> Result<EvalConfig> {
    let defaults = EvalConfig::default();
    let crop = match (&cmd.crop, &cmd.center_crop) {
        (Some(c), _) => Some(config::parse_crop(c)?),
        (None, Some(c)) => Some(config::parse_center_crop(c)?),
        (None, None) => cfg.crop()?,
    };
    let aggregation = match &cmd.aggregation {
        Some(a) => config::parse_aggregation(a)?,
        None => cfg.eval.aggregation.unwrap_or(defaults.aggregation),
    };
    let eval = EvalConfig {
        max_depth: cmd
            .max_depth
            .or(cfg.eval.max_depth)
            .unwrap_or(defaults.max_depth),
        min_depth: cmd
            .min_depth
            .or(cfg.eval.min_depth)
            .unwrap_or(defaults.min_depth),
        delta_base: cmd
            .delta_base
            .or(cfg.eval.delta_base)
            .unwrap_or(defaults.delta_base),
        crop,
        aggregation,
    };
    eval.validate()
        .map_err(|e| Error::Argument(format!("evaluation settings: {e}")))?;
    Ok(eval)
}

/// Runs the parsed command and returns the line printed on success.
pub fn run(cli: Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let ctx = Context {
        out_dir: cli
            .out_dir
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
    };
    let load = LoadOptions {
        max_depth: cfg.eval.max_depth.unwrap_or(10.0),
    };
    match cli.command {
        Command::GenSentences(cmd) => {
            let (relations, unique_only) = relation_settings(&cfg, &cmd.relations)?;
            let defaults = CorpusSpec::default();
            let spec = CorpusSpec {
                components: match cmd.components.as_ref().or(cfg.corpus.components.as_ref()) {
                    Some(names) => components(names)?,
                    None => defaults.components,
                },
                mode: match &cmd.mode {
                    Some(m) => config::parse_mode(m)?,
                    None => cfg.corpus.mode.unwrap_or(defaults.mode),
                },
                max_relations_per_axis: cmd
                    .max_relations_per_axis
                    .or(cfg.corpus.max_relations_per_axis),
                seed: ctx.seed,
                phrasing: match &cmd.phrasing {
                    Some(p) => config::parse_phrasing(p)?,
                    None => cfg.corpus.phrasing.unwrap_or(defaults.phrasing),
                },
                canonical_only: cmd.canonical_only || cfg.corpus.canonical_only.unwrap_or(false),
            };
            let args = commands::GenSentencesArgs {
                manifest: cmd.manifest,
                spec,
                relations,
                unique_only,
                relation_complete: cmd.relation_complete
                    || cfg.corpus.relation_complete.unwrap_or(false),
                templates: templates(&cfg, &cmd.templates)?,
                load,
            };
            Ok(commands::gen_sentences(&ctx, &args)?.line())
        }
        Command::Mask(cmd) => {
            let (relations, unique_only) = relation_settings(&cfg, &cmd.relations)?;
            let fill = match (&cmd.fill, &cfg.mask.fill) {
                (Some(f), _) => config::parse_fill(f)?,
                (None, Some(f)) => f.to_policy()?,
                (None, None) => Default::default(),
            };
            let args = commands::MaskArgs {
                manifest: cmd.manifest,
                fill,
                target_class: cmd.target_class.or(cfg.mask.target_class.clone()),
                relations,
                unique_only,
                templates: templates(&cfg, &cmd.templates)?,
                load,
            };
            let s = commands::mask(&ctx, &args)?;
            Ok(format!(
                "mask: {} image(s) masked, {} skipped",
                s.masked,
                s.skipped.len()
            ))
        }
        Command::Eval(cmd) => {
            let eval = eval_config(&cfg, &cmd)?;
            let args = commands::EvalArgs {
                eval,
                resize_nearest: cmd.resize_nearest || cfg.eval.resize_nearest.unwrap_or(false),
                allow_missing: cmd.allow_missing || cfg.eval.allow_missing.unwrap_or(false),
                manifest: cmd.manifest,
                pred_dir: cmd.pred_dir,
                name: cmd.name,
            };
            let r = commands::eval(&ctx, &args)?;
            Ok(format!(
                "eval: {} image(s), {} degenerate; rmse {:.3} abs_rel {:.3} δ1 {:.3}",
                r.n_images,
                r.degenerate.len(),
                r.aggregate.rmse,
                r.aggregate.abs_rel,
                r.aggregate.delta1
            ))
        }
        Command::Compare(cmd) => {
            let args = commands::CompareArgs {
                report_a: cmd.report_a,
                report_b: cmd.report_b,
                intersect: cmd.intersect,
                name: cmd.name,
            };
            let out = commands::compare_reports(&ctx, &args)?;
            Ok(format!(
                "compare: {} vs {} over {} image(s)",
                out.a, out.b, out.table.n_images
            ))
        }
        Command::Stats(cmd) => {
            let lambda = cmd.lambda.or(cfg.relations.lambda).unwrap_or(1.0);
            let args = commands::StatsArgs {
                manifest: cmd.manifest,
                relations: RelationConfig::new(lambda)?,
                load,
            };
            let rows = commands::stats(&ctx, &args)?;
            Ok(format!("stats: {} scene(s)", rows.len()))
        }
        Command::Adversarial(cmd) => {
            let args = commands::AdversarialArgs {
                triplets: cmd.triplets,
                scores: cmd.scores,
            };
            let rows = commands::adversarial(&ctx, &args)?;
            let flagged = rows
                .iter()
                .filter(|r| r.negative_relation || r.negative_object)
                .count();
            Ok(format!(
                "adversarial: {} axis row(s), {flagged} with a negative delta",
                rows.len()
            ))
        }
        Command::Subset(cmd) => {
            let (relations, unique_only) = relation_settings(&cfg, &cmd.relations)?;
            let args = commands::SubsetArgs {
                manifest: cmd.manifest,
                relations,
                unique_only,
                load,
            };
            let m = commands::subset(&ctx, &args)?;
            Ok(format!("subset: {} image(s) retained", m.entries.len()))
        }
        Command::Partition(cmd) => {
            let args = commands::PartitionArgs {
                manifest: cmd.manifest,
                train_scenes: cmd.train_scenes,
                test_scenes: cmd.test_scenes,
            };
            let s = commands::partition(&ctx, &args)?;
            Ok(format!(
                "partition: {} train, {} test, {} dropped",
                s.train, s.test, s.dropped
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cfg: Config = toml::from_str("[eval]\nmax_depth = 8.0\nmin_depth = 0.01\n").unwrap();
        let cli = Cli::try_parse_from(["lgdepth", "eval", "m.json", "preds", "--max-depth", "5"])
            .unwrap();
        let Command::Eval(cmd) = cli.command else {
            panic!("parsed the wrong subcommand")
        };
        let e = eval_config(&cfg, &cmd).unwrap();
        assert_eq!((e.max_depth, e.min_depth), (5.0, 0.01));
    }

    #[test]
    fn components_parse() {
        let names = vec!["scene".to_string(), "depth".into(), "activity".into()];
        assert_eq!(
            components(&names).unwrap(),
            [
                Component::Scene,
                Component::DepthRelations,
                Component::Activity
            ]
        );
        assert!(components(&["colour".to_string()]).is_err());
    }
}
