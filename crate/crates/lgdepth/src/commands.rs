//! Subcommand implementations. Per-sample work runs on the rayon pool; all
//! file writes happen afterwards on the calling thread, in image-id order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lgdepth_core::grid::DepthGrid;
use lgdepth_core::metrics::{
    aggregate, compare, EvalConfig, MetricReport, MetricsError, PixelMetrics,
};
use lgdepth_core::perturbation::{
    compensation_sentence, mask_object, maskable_targets, Compensation, FillPolicy, MaskError,
    MaskSpec,
};
use lgdepth_core::relations::{extract_all, RelationConfig};
use lgdepth_core::sentences::{
    adversarial_variants, compose_corpus, Component, CorpusSpec, SentenceGroup, SentenceKind,
    TemplateSet,
};

use crate::adversarial::{match_scores, read_scores, render_summary, summarize, AxisSummary};
use crate::dataset::{self, load_all, load_prediction, LoadOptions};
use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, to_jsonl, CorpusLine, RelationLine, TripletLine};
use crate::manifest::{partition_by_scene, scene_key, Manifest};
use crate::report::{render_delta_table, render_metrics_table};
use crate::stats::{render_stats, scene_stats, tally, SceneStats};

/// Extensions tried, in order, when looking up `<pred_dir>/<image_id>.<ext>`.
pub const PREDICTION_EXTENSIONS: [&str; 3] = ["png", "dgrd", "bin"];

/// Bookkeeping written to `<out>/runs/<run_id>.json` after every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_spec: Option<CorpusSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_path: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Output directory plus the seed shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
    bytes.push(b'\n');
    bytes
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn record_run(ctx: &Context, mut record: RunRecord) -> Result<RunRecord> {
    let runs = ctx.path("runs");
    fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut n = 0;
    let (run_id, path) = loop {
        let id = format!("{}-{now}-{n}", record.command);
        let path = runs.join(format!("{id}.json"));
        if !path.exists() {
            break (id, path);
        }
        n += 1;
    };
    record.run_id = run_id;
    record.timestamp = now;
    write_file(&path, &pretty_json(&record))?;
    Ok(record)
}

fn new_record(ctx: &Context, command: &str) -> RunRecord {
    RunRecord {
        run_id: String::new(),
        command: command.to_string(),
        seed: ctx.seed,
        corpus_spec: None,
        manifest_sha256: None,
        report_path: None,
        outputs: Vec::new(),
        timestamp: 0,
    }
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    let m = Manifest::load(path)?;
    m.check_unique_ids()?;
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct GenSentencesArgs {
    pub manifest: PathBuf,
    pub spec: CorpusSpec,
    pub relations: RelationConfig,
    pub unique_only: bool,
    pub relation_complete: bool,
    pub templates: TemplateSet,
    pub load: LoadOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenSummary {
    pub images: usize,
    pub groups: usize,
    pub relations: usize,
    pub triplets: usize,
    pub sentences_by_kind: BTreeMap<String, usize>,
}

impl GenSummary {
    pub fn line(&self) -> String {
        let kinds: Vec<String> = self
            .sentences_by_kind
            .iter()
            .map(|(k, n)| format!("{k}={n}"))
            .collect();
        format!(
            "gen-sentences: {} image(s), {} group(s), {} relation(s); sentences: {}",
            self.images,
            self.groups,
            self.relations,
            if kinds.is_empty() {
                "none".into()
            } else {
                kinds.join(" ")
            }
        )
    }
}

struct SampleOutput {
    image_id: String,
    groups: Vec<SentenceGroup>,
    relations: Vec<RelationLine>,
    triplets: Vec<TripletLine>,
}

/// Writes `corpus.jsonl`, `relations.jsonl` and `adversarial.jsonl`.
pub fn gen_sentences(ctx: &Context, args: &GenSentencesArgs) -> Result<GenSummary> {
    args.spec.validate()?;
    let mut manifest = load_manifest(&args.manifest)?;
    if args.spec.components.contains(&Component::Caption) && !manifest.has_captions() {
        return Err(Error::Config(format!(
            "corpus requests captions but {} has none",
            args.manifest.display()
        )));
    }
    if args.relation_complete {
        manifest = dataset::select_relation_complete_subset(
            &manifest,
            &args.relations,
            args.unique_only,
            &args.load,
        )?;
    }
    let samples = load_all(&manifest, &args.load)?;
    let mut outputs: Vec<SampleOutput> = samples
        .par_iter()
        .map(|loaded| {
            let sample = &loaded.sample;
            let relations = extract_all(sample, &args.relations, args.unique_only);
            let groups = compose_corpus(sample, &relations, &args.spec, &args.templates)?;
            let class_of = sample.segmentation.class_of();
            let triplets = relations
                .iter()
                .filter(|r| r.subject < r.object)
                .map(|r| {
                    Ok(TripletLine::new(
                        &sample.image_id,
                        &adversarial_variants(r, class_of, &args.templates)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleOutput {
                image_id: sample.image_id.clone(),
                relations: relations
                    .iter()
                    .map(|r| RelationLine::new(&sample.image_id, r, class_of))
                    .collect(),
                groups,
                triplets,
            })
        })
        .collect::<Result<_>>()?;
    outputs.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let mut summary = GenSummary {
        images: outputs.len(),
        ..GenSummary::default()
    };
    for o in &outputs {
        summary.groups += o.groups.len();
        summary.relations += o.relations.len();
        summary.triplets += o.triplets.len();
        for s in o.groups.iter().flat_map(|g| &g.sentences) {
            *summary
                .sentences_by_kind
                .entry(s.kind.as_str().to_string())
                .or_default() += 1;
        }
    }
    let corpus = ctx.path("corpus.jsonl");
    let relations = ctx.path("relations.jsonl");
    let triplets = ctx.path("adversarial.jsonl");
    write_file(
        &corpus,
        &to_jsonl(
            outputs
                .iter()
                .flat_map(|o| o.groups.iter().map(CorpusLine::from)),
        ),
    )?;
    write_file(
        &relations,
        &to_jsonl(outputs.iter().flat_map(|o| o.relations.iter())),
    )?;
    write_file(
        &triplets,
        &to_jsonl(outputs.iter().flat_map(|o| o.triplets.iter())),
    )?;

    let mut record = new_record(ctx, "gen-sentences");
    record.corpus_spec = Some(args.spec.clone());
    record.manifest_sha256 = Some(manifest.digest());
    record.outputs = vec![corpus, relations, triplets];
    record_run(ctx, record)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct MaskArgs {
    pub manifest: PathBuf,
    pub fill: FillPolicy,
    /// Mask the unique instance of this class; by default the lowest-id
    /// maskable instance.
    pub target_class: Option<String>,
    pub relations: RelationConfig,
    pub unique_only: bool,
    pub templates: TemplateSet,
    pub load: LoadOptions,
}

/// Receipt written next to each masked image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptFile {
    pub image_id: String,
    pub target_id: u16,
    pub target_class: String,
    pub pixels_masked: usize,
    pub compensation_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskSummary {
    pub masked: usize,
    pub skipped: Vec<String>,
}

/// Writes `masked/<id>.png`, `masked/<id>.json` and `masked/manifest.json`,
/// the input manifest with `rgb` pointing at the masked images.
pub fn mask(ctx: &Context, args: &MaskArgs) -> Result<MaskSummary> {
    let manifest = load_manifest(&args.manifest)?;
    let samples = load_all(&manifest, &args.load)?;
    let results: Vec<Option<(lgdepth_core::grid::RgbImage, ReceiptFile)>> = samples
        .par_iter()
        .map(|loaded| {
            let sample = &loaded.sample;
            if sample.rgb.is_none() {
                return Err(Error::Config(
                    MaskError::MissingRgb(sample.image_id.clone()).to_string(),
                ));
            }
            let relations = extract_all(sample, &args.relations, args.unique_only);
            let candidates = maskable_targets(sample, &relations);
            let target = match &args.target_class {
                Some(class) => candidates.into_iter().find(|id| {
                    sample
                        .segmentation
                        .class_name(*id)
                        .is_some_and(|c| c.eq_ignore_ascii_case(class))
                }),
                None => candidates.into_iter().next(),
            };
            let Some(target) = target else {
                log::warn!("{}: no maskable object, skipped", sample.image_id);
                return Ok(None);
            };
            let spec = MaskSpec {
                target_instance: target,
                fill: args.fill,
                compensation: Compensation::DepthAxisPreferred,
            };
            let (masked, receipt) = mask_object(sample, &spec)?;
            let sentence = compensation_sentence(
                &sample.image_id,
                target,
                &relations,
                sample.segmentation.class_of(),
                &args.templates,
            )?;
            debug_assert_eq!(sentence.kind, SentenceKind::Spatial);
            Ok(Some((
                masked,
                ReceiptFile {
                    image_id: receipt.image_id,
                    target_id: receipt.target_id,
                    target_class: receipt.target_class,
                    pixels_masked: receipt.pixels_masked,
                    compensation_text: sentence.text,
                },
            )))
        })
        .collect::<Result<_>>()?;

    let dir = ctx.path("masked");
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut outputs = Vec::new();
    for (entry, result) in manifest.entries.iter().zip(results) {
        let Some((rgb, receipt)) = result else {
            skipped.push(entry.id.clone());
            continue;
        };
        let png = dir.join(format!("{}.png", entry.id));
        dataset::write_rgb(&png, &rgb)?;
        let json = dir.join(format!("{}.json", entry.id));
        write_file(&json, &pretty_json(&receipt))?;
        let mut e = entry.clone();
        e.depth = manifest.resolve(&e.depth);
        e.segmentation = manifest.resolve(&e.segmentation);
        e.rgb = Some(png.clone());
        entries.push(e);
        outputs.push(png);
        outputs.push(json);
    }
    let masked_manifest = manifest.with_entries(entries, Some("masked".into()));
    let manifest_path = dir.join("manifest.json");
    masked_manifest.save(&manifest_path)?;
    outputs.push(manifest_path);

    let summary = MaskSummary {
        masked: masked_manifest.entries.len(),
        skipped,
    };
    let mut record = new_record(ctx, "mask");
    record.manifest_sha256 = Some(manifest.digest());
    record.outputs = outputs;
    record_run(ctx, record)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub manifest: PathBuf,
    pub pred_dir: PathBuf,
    pub name: String,
    pub eval: EvalConfig,
    pub resize_nearest: bool,
    pub allow_missing: bool,
}

pub fn find_prediction(pred_dir: &Path, image_id: &str) -> Option<PathBuf> {
    PREDICTION_EXTENSIONS
        .iter()
        .map(|ext| pred_dir.join(format!("{image_id}.{ext}")))
        .find(|p| p.is_file())
}

/// Scores every manifest entry against `<pred_dir>/<id>.{png,dgrd,bin}` and
/// writes `<name>.json` (the report) and `<name>.md`.
pub fn eval(ctx: &Context, args: &EvalArgs) -> Result<MetricReport> {
    args.eval.validate()?;
    let manifest = load_manifest(&args.manifest)?;
    let mut missing = Vec::new();
    let mut jobs = Vec::new();
    for entry in &manifest.entries {
        match find_prediction(&args.pred_dir, &entry.id) {
            Some(p) => jobs.push((entry, p)),
            None => missing.push(entry.id.clone()),
        }
    }
    if !missing.is_empty() {
        if !args.allow_missing {
            return Err(Error::MissingPredictions(missing));
        }
        log::warn!(
            "{} image(s) without predictions skipped: {}",
            missing.len(),
            missing.join(", ")
        );
    }
    let load = LoadOptions {
        max_depth: args.eval.max_depth,
    };
    let scored: Vec<(String, Option<PixelMetrics>)> = jobs
        .par_iter()
        .map(|(entry, pred_path)| {
            let gt = dataset::load_sample(&manifest, entry, &load)?.sample.depth;
            let mut pred = load_prediction(pred_path)?;
            if pred.dims() != gt.dims() {
                if !args.resize_nearest {
                    return Err(Error::Metrics(MetricsError::DimensionMismatch {
                        pred: pred.dims(),
                        gt: gt.dims(),
                    }));
                }
                let (w, h) = gt.dims();
                pred = pred.resize_nearest(w, h);
            }
            score(&entry.id, &pred, &gt, &args.eval)
        })
        .collect::<Result<_>>()?;
    let mut per_image = Vec::new();
    let mut degenerate = Vec::new();
    for (id, m) in scored {
        match m {
            Some(m) => per_image.push((id, m)),
            None => degenerate.push(id),
        }
    }
    let report = aggregate(per_image, degenerate, args.eval.aggregation)?;
    let json = ctx.path(format!("{}.json", args.name));
    let md = ctx.path(format!("{}.md", args.name));
    write_file(&json, &pretty_json(&report))?;
    write_file(
        &md,
        render_metrics_table(&[(args.name.clone(), report.aggregate)]).as_bytes(),
    )?;

    let mut record = new_record(ctx, "eval");
    record.manifest_sha256 = Some(manifest.digest());
    record.report_path = Some(json.clone());
    record.outputs = vec![json, md];
    record_run(ctx, record)?;
    Ok(report)
}

fn score(
    id: &str,
    pred: &DepthGrid,
    gt: &DepthGrid,
    cfg: &EvalConfig,
) -> Result<(String, Option<PixelMetrics>)> {
    match lgdepth_core::metrics::pixel_metrics(pred, gt, cfg) {
        Ok(m) => Ok((id.to_string(), Some(m))),
        Err(MetricsError::Degenerate) => {
            log::warn!("{id}: no valid pixels, excluded from the aggregate");
            Ok((id.to_string(), None))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    pub intersect: bool,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareOutput {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub table: lgdepth_core::metrics::DeltaTable,
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Writes `<name>.json` and `<name>.md` with `b − a` deltas.
pub fn compare_reports(ctx: &Context, args: &CompareArgs) -> Result<CompareOutput> {
    let a: MetricReport = read_json(&args.report_a)?;
    let b: MetricReport = read_json(&args.report_b)?;
    let table = compare(&a, &b, args.intersect)?;
    let (la, lb) = (label(&args.report_a), label(&args.report_b));
    let out = CompareOutput {
        a: la.clone(),
        b: lb.clone(),
        table,
    };
    let json = ctx.path(format!("{}.json", args.name));
    let md = ctx.path(format!("{}.md", args.name));
    write_file(&json, &pretty_json(&out))?;
    write_file(&md, render_delta_table(&out.table, &la, &lb).as_bytes())?;
    let mut record = new_record(ctx, "compare");
    record.outputs = vec![json, md];
    record_run(ctx, record)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub manifest: PathBuf,
    pub relations: RelationConfig,
    pub load: LoadOptions,
}

/// Writes `stats.json` and `stats.md`.
pub fn stats(ctx: &Context, args: &StatsArgs) -> Result<Vec<SceneStats>> {
    let manifest = load_manifest(&args.manifest)?;
    let samples = load_all(&manifest, &args.load)?;
    let tallies: Vec<_> = samples
        .par_iter()
        .map(|s| tally(&s.sample, &args.relations))
        .collect();
    let rows = scene_stats(&tallies);
    let json = ctx.path("stats.json");
    let md = ctx.path("stats.md");
    write_file(&json, &pretty_json(&rows))?;
    write_file(&md, render_stats(&rows).as_bytes())?;
    let mut record = new_record(ctx, "stats");
    record.manifest_sha256 = Some(manifest.digest());
    record.outputs = vec![json, md];
    record_run(ctx, record)?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct AdversarialArgs {
    pub triplets: PathBuf,
    pub scores: PathBuf,
}

/// Writes `adversarial_summary.json` and `adversarial_summary.md`.
pub fn adversarial(ctx: &Context, args: &AdversarialArgs) -> Result<Vec<AxisSummary>> {
    let triplets: Vec<TripletLine> = read_jsonl(&args.triplets)?;
    let scores = read_scores(&args.scores)?;
    let rows = summarize(&match_scores(&triplets, &scores)?);
    let json = ctx.path("adversarial_summary.json");
    let md = ctx.path("adversarial_summary.md");
    write_file(&json, &pretty_json(&rows))?;
    write_file(&md, render_summary(&rows).as_bytes())?;
    let mut record = new_record(ctx, "adversarial");
    record.outputs = vec![json, md];
    record_run(ctx, record)?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct SubsetArgs {
    pub manifest: PathBuf,
    pub relations: RelationConfig,
    pub unique_only: bool,
    pub load: LoadOptions,
}

/// Writes `subset.json`, the relation-complete subset of the manifest.
pub fn subset(ctx: &Context, args: &SubsetArgs) -> Result<Manifest> {
    let manifest = load_manifest(&args.manifest)?;
    let sub = dataset::select_relation_complete_subset(
        &manifest,
        &args.relations,
        args.unique_only,
        &args.load,
    )?;
    let path = ctx.path("subset.json");
    sub.save(&path)?;
    let mut record = new_record(ctx, "subset");
    record.manifest_sha256 = Some(manifest.digest());
    record.outputs = vec![path];
    record_run(ctx, record)?;
    Ok(sub)
}

#[derive(Debug, Clone)]
pub struct PartitionArgs {
    pub manifest: PathBuf,
    /// Both `None` selects the built-in out-of-distribution split.
    pub train_scenes: Option<Vec<String>>,
    pub test_scenes: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSummary {
    pub train: usize,
    pub test: usize,
    pub dropped: usize,
}

/// Writes `train.json` and `test.json`.
pub fn partition(ctx: &Context, args: &PartitionArgs) -> Result<PartitionSummary> {
    let manifest = load_manifest(&args.manifest)?;
    let (train, test) = match (&args.train_scenes, &args.test_scenes) {
        (None, None) => crate::manifest::ood_scene_sets(),
        (Some(tr), Some(te)) => (
            tr.iter().map(|s| scene_key(s)).collect(),
            te.iter().map(|s| scene_key(s)).collect(),
        ),
        _ => {
            return Err(Error::Argument(
                "--train-scenes and --test-scenes must be given together".into(),
            ))
        }
    };
    let p = partition_by_scene(&manifest, &train, &test)?;
    let (tp, sp) = (ctx.path("train.json"), ctx.path("test.json"));
    p.train.save(&tp)?;
    p.test.save(&sp)?;
    let mut record = new_record(ctx, "partition");
    record.manifest_sha256 = Some(manifest.digest());
    record.outputs = vec![tp, sp];
    record_run(ctx, record)?;
    Ok(PartitionSummary {
        train: p.train.entries.len(),
        test: p.test.entries.len(),
        dropped: p.dropped.len(),
    })
}
