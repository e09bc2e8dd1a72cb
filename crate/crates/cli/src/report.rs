//! Reading rendered study reports back into tables and charts.

use anyhow::{bail, Context, Result};
use modgov::chart::{Chart, Point, Series};

pub struct ParsedReport {
    pub header: Vec<(String, String)>,
    pub tables: Vec<(String, String)>,
}

pub fn parse(text: &str) -> Result<ParsedReport> {
    let mut header = Vec::new();
    let mut tables: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("# table: ") {
            tables.push((name.to_string(), String::new()));
        } else if let Some((_, csv)) = tables.last_mut() {
            csv.push_str(line);
            csv.push('\n');
        } else if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(" = ").or_else(|| rest.split_once(": ")).unwrap_or((rest, ""));
            header.push((k.to_string(), v.to_string()));
        } else if !line.trim().is_empty() {
            bail!("unexpected line before first table: {line:?}");
        }
    }
    if !header.iter().any(|(k, _)| k.starts_with("modgov")) {
        bail!("not a modgov study report");
    }
    Ok(ParsedReport { header, tables })
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

/// Charts for the tables whose layout is known; others are skipped.
pub fn charts(report: &ParsedReport) -> Result<Vec<Chart>> {
    let mut out = Vec::new();
    for (name, csv) in &report.tables {
        let mut rdr = csv::Reader::from_reader(csv.as_bytes());
        let headers = rdr.headers().with_context(|| format!("table {name}"))?.clone();
        let col = |h: &str| headers.iter().position(|x| x == h);
        let rows: Vec<csv::StringRecord> = rdr
            .records()
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("table {name}"))?;

        let add = |series_col: usize, label_col: usize, cols: [usize; 3], y_label: &str| {
            let mut series: Vec<Series> = Vec::new();
            for r in &rows {
                let key = r[series_col].to_string();
                let point = Point {
                    label: r[label_col].to_string(),
                    value: num(&r[cols[0]]),
                    low: num(&r[cols[1]]),
                    high: num(&r[cols[2]]),
                };
                match series.iter_mut().find(|s| s.name == key) {
                    Some(s) => s.points.push(point),
                    None => series.push(Series {
                        name: key,
                        points: vec![point],
                    }),
                }
            }
            series
                .into_iter()
                .map(|s| Chart {
                    title: format!("{name}: {}", s.name),
                    x_label: headers[label_col].to_string(),
                    y_label: y_label.to_string(),
                    series: vec![s],
                })
                .collect::<Vec<_>>()
        };

        if let (Some(st), Some(l), Some(wm), Some(wl), Some(wh), Some(um), Some(ul), Some(uh)) = (
            col("statistic"),
            col("bin_label"),
            col("weighted_mean"),
            col("weighted_ci_low"),
            col("weighted_ci_high"),
            col("unweighted_mean"),
            col("unweighted_ci_low"),
            col("unweighted_ci_high"),
        ) {
            for (mut adj, raw) in add(st, l, [wm, wl, wh], "")
                .into_iter()
                .zip(add(st, l, [um, ul, uh], ""))
            {
                adj.y_label = std::mem::replace(&mut adj.series[0].name, "adjusted".into());
                let mut s = raw.series.into_iter().next().expect("one series");
                s.name = "unadjusted".into();
                adj.series.push(s);
                out.push(adj);
            }
        } else if let (Some(g), Some(st), Some(m), Some(lo), Some(hi)) =
            (col("group"), col("statistic"), col("mean"), col("ci_low"), col("ci_high"))
        {
            out.extend(add(st, g, [m, lo, hi], "mean"));
        } else if let (Some(a), Some(st), Some(e), Some(lo), Some(hi)) = (
            col("attribute"),
            col("statistic"),
            col("estimate_pp"),
            col("ci_low"),
            col("ci_high"),
        ) {
            out.extend(add(st, a, [e, lo, hi], "percentage points"));
        }
    }
    Ok(out)
}

/// Markdown digest of the report header.
pub fn markdown(report: &ParsedReport) -> String {
    let mut out = String::new();
    let study = report
        .header
        .iter()
        .find(|(k, _)| k == "study")
        .map_or("study", |(_, v)| v.as_str());
    out.push_str(&format!("# {study}\n\n"));
    for section in ["summary", "warning", "config"] {
        let items: Vec<&(String, String)> = report
            .header
            .iter()
            .filter(|(k, _)| k.starts_with(section))
            .collect();
        if items.is_empty() {
            continue;
        }
        out.push_str(&format!("## {section}\n\n"));
        for (k, v) in items {
            let body = k.strip_prefix(section).unwrap_or(k).trim_start_matches(':').trim();
            if body.is_empty() {
                out.push_str(&format!("- {v}\n"));
            } else {
                out.push_str(&format!("- `{body}` = {v}\n"));
            }
        }
        out.push('\n');
    }
    out.push_str("## tables\n\n");
    for (name, csv) in &report.tables {
        out.push_str(&format!("- `{name}`: {} rows\n", csv.lines().count().saturating_sub(1)));
    }
    out
}
