//! Markdown and JSON rendering of metric tables and run-to-run deltas.
//!
//! Numbers are printed with three decimals, the precision of the published
//! NYUv2 result tables.

use lgdepth_core::metrics::{DeltaTable, Metric, MetricValues};

use crate::error::{Error, Result};

/// Three decimals; a negative value that rounds to zero prints as `0.000`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn signed3(x: f64) -> String {
    let s = fmt3(x);
    if s.starts_with('-') || s == "0.000" {
        s
    } else {
        format!("+{s}")
    }
}

/// Rows of `(label, values)` as a Markdown table with columns
/// `δ1↑ δ2↑ δ3↑ RMSE↓ Abs.REL↓ Log10↓`.
pub fn render_metrics_table(rows: &[(String, MetricValues)]) -> String {
    let mut out = String::from("| Method |");
    for m in Metric::ALL {
        out.push_str(&format!(" {} |", m.header()));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(Metric::ALL.len()));
    out.push('\n');
    for (label, values) in rows {
        out.push_str(&format!("| {label} |"));
        for m in Metric::ALL {
            out.push_str(&format!(" {} |", fmt3(values.get(m))));
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`render_metrics_table`] up to the three-decimal rounding.
pub fn parse_metrics_table(markdown: &str) -> Result<Vec<(String, [f64; 6])>> {
    let mut lines = markdown.lines().filter(|l| l.trim_start().starts_with('|'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation("metrics table: no header row".into()))?;
    let expected: Vec<&str> = Metric::ALL.iter().map(|m| m.header()).collect();
    let columns: Vec<&str> = cells(header).skip(1).collect();
    if columns != expected {
        return Err(Error::Validation(format!(
            "metrics table: unexpected columns {columns:?}"
        )));
    }
    lines.next();
    lines
        .map(|line| {
            let mut it = cells(line);
            let label = it.next().unwrap_or_default().to_string();
            let values: Vec<f64> = it
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::Validation(format!("metrics table: bad cell {c:?}")))
                })
                .collect::<Result<_>>()?;
            let values: [f64; 6] = values.try_into().map_err(|v: Vec<f64>| {
                Error::Validation(format!(
                    "metrics table: row {label:?} has {} values",
                    v.len()
                ))
            })?;
            Ok((label, values))
        })
        .collect()
}

fn cells(line: &str) -> impl Iterator<Item = &str> {
    let inner = line.trim().trim_start_matches('|').trim_end_matches('|');
    inner.split('|').map(str::trim)
}

pub fn render_delta_table(table: &DeltaTable, label_a: &str, label_b: &str) -> String {
    let mut out = format!(
        "Δ = {label_b} − {label_a} over {} image(s)\n\n| Metric | {label_a} | {label_b} | Δ | Δ% |\n|---|---:|---:|---:|---:|\n",
        table.n_images
    );
    for row in &table.rows {
        let pct = row
            .percent
            .map(|p| format!("{}%", signed_pct(p)))
            .unwrap_or_else(|| "n/a".to_string());
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            row.metric.header(),
            fmt3(row.a),
            fmt3(row.b),
            signed3(row.delta),
            pct
        ));
    }
    out
}

fn signed_pct(p: f64) -> String {
    let s = format!("{p:.1}");
    match s.as_str() {
        "-0.0" | "0.0" => "0.0".to_string(),
        _ if s.starts_with('-') => s,
        _ => format!("+{s}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lgdepth_core::metrics::delta_rows;
    use proptest::prelude::*;

    fn scene_level_row() -> MetricValues {
        MetricValues {
            delta1: 0.962,
            delta2: 0.994,
            delta3: 0.999,
            rmse: 0.252,
            abs_rel: 0.068,
            log10: 0.029,
        }
    }

    #[test]
    fn renders_published_row() {
        let md = render_metrics_table(&[("Scene-Level".into(), scene_level_row())]);
        assert!(md.contains("| δ1↑ | δ2↑ | δ3↑ | RMSE↓ | Abs.REL↓ | Log10↓ |"));
        assert!(md.contains("0.962 | 0.994 | 0.999 | 0.252 | 0.068 | 0.029"));
    }

    #[test]
    fn identity_row() {
        let v = MetricValues {
            delta1: 1.0,
            delta2: 1.0,
            delta3: 1.0,
            ..MetricValues::default()
        };
        let md = render_metrics_table(&[("gt".into(), v)]);
        assert!(md.contains("| gt | 1.000 | 1.000 | 1.000 | 0.000 | 0.000 | 0.000 |"));
    }

    #[test]
    fn deltas_render_signed() {
        let a = MetricValues {
            rmse: 0.382,
            ..scene_level_row()
        };
        let b = MetricValues {
            rmse: 0.424,
            ..scene_level_row()
        };
        let md = render_delta_table(
            &DeltaTable {
                n_images: 1,
                rows: delta_rows(&a, &b),
            },
            "base",
            "new",
        );
        assert!(
            md.contains("| RMSE↓ | 0.382 | 0.424 | +0.042 | +11.0% |"),
            "{md}"
        );
        assert!(
            md.contains("| δ1↑ | 0.962 | 0.962 | 0.000 | 0.0% |"),
            "{md}"
        );
    }

    #[test]
    fn negative_zero_prints_clean() {
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt3(-0.0241), "-0.024");
    }

    proptest! {
        #[test]
        fn table_parses_back(vals in proptest::collection::vec(0.0f64..5.0, 6)) {
            let v = MetricValues {
                delta1: vals[0], delta2: vals[1], delta3: vals[2],
                rmse: vals[3], abs_rel: vals[4], log10: vals[5],
            };
            let md = render_metrics_table(&[("run".into(), v)]);
            let parsed = parse_metrics_table(&md).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            for (m, got) in Metric::ALL.iter().zip(parsed[0].1) {
                let want: f64 = fmt3(v.get(*m)).parse().unwrap();
                prop_assert_eq!(got, want);
                prop_assert_eq!(fmt3(got), fmt3(v.get(*m)));
            }
        }
    }
}
