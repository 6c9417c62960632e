//! Similarity-score summaries for original vs. switched relation sentences.
//!
//! Scores come from an external image-text model as CSV with header
//! `image_id,axis,original,relation_switch,object_switch`. Deltas are
//! `original - switched`; a negative delta means the wrong sentence scored
//! higher and is flagged.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lgdepth_core::relations::Axis;

use crate::error::{Error, Result};
use crate::jsonl::TripletLine;
use crate::report::fmt3;

pub const SCORE_HEADER: [&str; 5] = [
    "image_id",
    "axis",
    "original",
    "relation_switch",
    "object_switch",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTriplet {
    pub image_id: String,
    pub axis: Axis,
    pub score_original: f64,
    pub score_relation_switch: f64,
    pub score_object_switch: f64,
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    image_id: String,
    axis: String,
    original: f64,
    relation_switch: f64,
    object_switch: f64,
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoredTriplet>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scores(file, &path.display().to_string())
}

pub fn parse_scores(reader: impl std::io::Read, source: &str) -> Result<Vec<ScoredTriplet>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Validation(format!("{source}: {e}")))?;
    if header.iter().collect::<Vec<_>>() != SCORE_HEADER {
        return Err(Error::Validation(format!(
            "{source}: header must be {}",
            SCORE_HEADER.join(",")
        )));
    }
    rdr.deserialize::<ScoreRow>()
        .enumerate()
        .map(|(i, row)| {
            let row =
                row.map_err(|e| Error::Validation(format!("{source}: row {}: {e}", i + 1)))?;
            let axis = Axis::parse(&row.axis).ok_or_else(|| {
                Error::Validation(format!(
                    "{source}: row {}: unknown axis {:?}",
                    i + 1,
                    row.axis
                ))
            })?;
            Ok(ScoredTriplet {
                image_id: row.image_id,
                axis,
                score_original: row.original,
                score_relation_switch: row.relation_switch,
                score_object_switch: row.object_switch,
            })
        })
        .collect()
}

/// Pairs the k-th triplet of each (image, axis) with the k-th score row of
/// the same (image, axis). Any leftover on either side is an error.
pub fn match_scores(
    triplets: &[TripletLine],
    scores: &[ScoredTriplet],
) -> Result<Vec<ScoredTriplet>> {
    let mut pending: BTreeMap<(String, Axis), Vec<&ScoredTriplet>> = BTreeMap::new();
    for s in scores.iter().rev() {
        pending
            .entry((s.image_id.clone(), s.axis))
            .or_default()
            .push(s);
    }
    let mut out = Vec::with_capacity(triplets.len());
    for t in triplets {
        let axis = Axis::parse(&t.axis).ok_or_else(|| {
            Error::Validation(format!(
                "triplet for {}: unknown axis {:?}",
                t.image_id, t.axis
            ))
        })?;
        let score = pending
            .get_mut(&(t.image_id.clone(), axis))
            .and_then(Vec::pop)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "no score row for triplet {} / {axis}: {:?}",
                    t.image_id, t.original
                ))
            })?;
        out.push(score.clone());
    }
    let leftover: usize = pending.values().map(Vec::len).sum();
    if leftover > 0 {
        return Err(Error::Validation(format!(
            "{leftover} score row(s) match no triplet"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub axis: Axis,
    pub n: usize,
    pub original: f64,
    pub relation_switch: f64,
    pub object_switch: f64,
    /// original − relation_switch
    pub delta_relation: f64,
    /// original − object_switch
    pub delta_object: f64,
    pub negative_relation: bool,
    pub negative_object: bool,
}

/// Per-axis means in horizontal, vertical, depth order; empty axes are omitted.
pub fn summarize(scored: &[ScoredTriplet]) -> Vec<AxisSummary> {
    Axis::ALL
        .iter()
        .filter_map(|&axis| {
            let rows: Vec<&ScoredTriplet> = scored.iter().filter(|s| s.axis == axis).collect();
            if rows.is_empty() {
                return None;
            }
            let n = rows.len() as f64;
            let mean = |f: fn(&ScoredTriplet) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            let original = mean(|r| r.score_original);
            let relation_switch = mean(|r| r.score_relation_switch);
            let object_switch = mean(|r| r.score_object_switch);
            let delta_relation = original - relation_switch;
            let delta_object = original - object_switch;
            Some(AxisSummary {
                axis,
                n: rows.len(),
                original,
                relation_switch,
                object_switch,
                delta_relation,
                delta_object,
                negative_relation: delta_relation < 0.0,
                negative_object: delta_object < 0.0,
            })
        })
        .collect()
}

fn flagged(value: f64, negative: bool) -> String {
    if negative {
        format!("{} (!)", fmt3(value))
    } else {
        fmt3(value)
    }
}

/// Markdown table; negative deltas carry a `(!)` marker.
pub fn render_summary(rows: &[AxisSummary]) -> String {
    let mut out = String::from(
        "| Relation | Original | Rel. switch | Obj. switch | Δ orig.−rel. | Δ orig.−obj. |\n|---|---:|---:|---:|---:|---:|\n",
    );
    for r in rows {
        let mut name = r.axis.as_str().to_string();
        name[..1].make_ascii_uppercase();
        out.push_str(&format!(
            "| {name} | {} | {} | {} | {} | {} |\n",
            fmt3(r.original),
            fmt3(r.relation_switch),
            fmt3(r.object_switch),
            flagged(r.delta_relation, r.negative_relation),
            flagged(r.delta_object, r.negative_object),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scored(id: &str, axis: Axis, o: f64, r: f64, b: f64) -> ScoredTriplet {
        ScoredTriplet {
            image_id: id.into(),
            axis,
            score_original: o,
            score_relation_switch: r,
            score_object_switch: b,
        }
    }

    fn triplet(id: &str, axis: &str, text: &str) -> TripletLine {
        TripletLine {
            image_id: id.into(),
            axis: axis.into(),
            original: text.into(),
            relation_switch: String::new(),
            object_switch: String::new(),
        }
    }

    #[test]
    fn equal_scores_zero_deltas() {
        let rows = summarize(&[scored("a", Axis::Depth, 20.0, 20.0, 20.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].delta_relation, rows[0].delta_object), (0.0, 0.0));
        assert!(!rows[0].negative_relation && !rows[0].negative_object);
    }

    #[test]
    fn two_row_means() {
        let rows = summarize(&[
            scored("a", Axis::Vertical, 20.0, 19.0, 22.0),
            scored("b", Axis::Vertical, 22.0, 20.0, 21.0),
        ]);
        let r = &rows[0];
        assert_eq!(
            (r.original, r.relation_switch, r.object_switch),
            (21.0, 19.5, 21.5)
        );
        assert_eq!((r.delta_relation, r.delta_object), (1.5, -0.5));
        assert!(r.negative_object && !r.negative_relation);
        let md = render_summary(&rows);
        assert!(
            md.contains("| Vertical | 21.000 | 19.500 | 21.500 | 1.500 | -0.500 (!) |"),
            "{md}"
        );
    }

    #[test]
    fn csv_header_enforced() {
        let good = "image_id,axis,original,relation_switch,object_switch\nx,depth,1.0,2.0,3.0\n";
        let rows = parse_scores(good.as_bytes(), "mem").unwrap();
        assert_eq!(rows[0], scored("x", Axis::Depth, 1.0, 2.0, 3.0));
        let bad = "id,axis,original,relation_switch,object_switch\nx,depth,1,2,3\n";
        assert!(parse_scores(bad.as_bytes(), "mem").is_err());
        let bad_axis = "image_id,axis,original,relation_switch,object_switch\nx,diagonal,1,2,3\n";
        assert!(parse_scores(bad_axis.as_bytes(), "mem").is_err());
    }

    #[test]
    fn matching_by_order_within_image_and_axis() {
        let triplets = [
            triplet("a", "depth", "t1"),
            triplet("a", "depth", "t2"),
            triplet("b", "horizontal", "t3"),
        ];
        let scores = [
            scored("b", Axis::Horizontal, 3.0, 0.0, 0.0),
            scored("a", Axis::Depth, 1.0, 0.0, 0.0),
            scored("a", Axis::Depth, 2.0, 0.0, 0.0),
        ];
        let m = match_scores(&triplets, &scores).unwrap();
        let firsts: Vec<f64> = m.iter().map(|s| s.score_original).collect();
        assert_eq!(firsts, [1.0, 2.0, 3.0]);
        assert!(match_scores(&triplets[..2], &scores).is_err());
        assert!(match_scores(&triplets, &scores[..2]).is_err());
    }
}
