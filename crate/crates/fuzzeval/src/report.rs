//! CSV tables, a Table-2 style text summary and SVG band plots.
//!
//! Times are decimal seconds everywhere. CSV output uses a header row,
//! comma delimiters and LF line endings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fuzzeval_core::campaign::{ComparisonResult, TrialKey};
use fuzzeval_core::dedup::DedupTable;
use fuzzeval_core::fuzz::TrialRecord;
use fuzzeval_core::stats::Band;
use fuzzeval_core::{Error, Result};
use serde::Deserialize;

use crate::triage::TriageOutcome;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("records are UTF-8")
}

fn write_row<I, S>(w: &mut csv::Writer<Vec<u8>>, row: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).expect("writing to memory cannot fail");
}

pub fn format_time(t: f64) -> String {
    format!("{t:.6}")
}

/// Shortest decimal that reads back as `x` (`12`, `2.5`).
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

/// `x` to six significant digits with trailing zeros removed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// Cumulative crash counts per trial: a `(0, 0)` row and one row per crash.
pub fn emit_timeseries_csv<'a>(trials: impl IntoIterator<Item = &'a TrialRecord>) -> String {
    let mut sorted: Vec<&TrialRecord> = trials.into_iter().collect();
    sorted.sort_by_key(|t| TrialKey::of(t));
    let mut w = writer();
    write_row(&mut w, ["fuzzer", "target", "seed_config", "trial", "time", "cumulative_crashes"]);
    for t in sorted {
        let trial = t.trial_index.to_string();
        let prefix = [t.fuzzer_id.as_str(), t.target_id.as_str(), t.seed_config_id.as_str(), trial.as_str()];
        let rows = std::iter::once(0.0).chain(t.crashes.iter().map(|c| c.at)).enumerate();
        for (count, time) in rows {
            let (time, count) = (format_time(time), count.to_string());
            write_row(&mut w, prefix.iter().copied().chain([time.as_str(), count.as_str()]));
        }
    }
    finish(w)
}

#[derive(Debug, Deserialize)]
struct TimeseriesRow {
    fuzzer: String,
    target: String,
    seed_config: String,
    trial: u32,
    time: f64,
    cumulative_crashes: u64,
}

/// Reads [`emit_timeseries_csv`] output back into per-trial `(time, count)` points.
pub fn parse_timeseries_csv(text: &str) -> Result<BTreeMap<TrialKey, Vec<(f64, u64)>>> {
    let mut out: BTreeMap<TrialKey, Vec<(f64, u64)>> = BTreeMap::new();
    for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<TimeseriesRow>() {
        let row = row.map_err(|e| Error::InvalidArgument(format!("time series CSV: {e}")))?;
        let key = TrialKey {
            fuzzer_id: row.fuzzer,
            target_id: row.target,
            seed_config_id: row.seed_config,
            trial_index: row.trial,
        };
        out.entry(key).or_default().push((row.time, row.cumulative_crashes));
    }
    Ok(out)
}

pub fn emit_comparison_table(results: &[ComparisonResult]) -> String {
    let mut w = writer();
    write_row(&mut w, ["target", "seed_config", "time", "median_a", "median_b", "p_value", "a12"]);
    for r in results {
        write_row(
            &mut w,
            [
                r.target_id.clone(),
                r.seed_config_id.clone(),
                format_time(r.at_time),
                format_number(r.median_a),
                format_number(r.median_b),
                format_sig(r.p_value),
                format_sig(r.a12),
            ],
        );
    }
    finish(w)
}

fn p_note(p: f64) -> String {
    if p >= 1e-3 {
        format!("(={p:.3})")
    } else if p > 0.0 {
        format!("(<1e-{})", (-p.log10()).floor() as i32)
    } else {
        "(=0)".to_string()
    }
}

/// Human-readable table: one block per time, one column per seed config, a
/// baseline row with medians and a candidate row with medians and p-values.
pub fn emit_comparison_text(results: &[ComparisonResult], fuzzer_a: &str, fuzzer_b: &str) -> String {
    let mut times: Vec<f64> = results.iter().map(|r| r.at_time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut seeds: Vec<&str> = results.iter().map(|r| r.seed_config_id.as_str()).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut targets: Vec<&str> = results.iter().map(|r| r.target_id.as_str()).collect();
    targets.sort_unstable();
    targets.dedup();

    let mut out = String::new();
    for &t in &times {
        let mut table: Vec<Vec<String>> = Vec::new();
        table.push(std::iter::once(format!("t = {}s", format_time(t))).chain(seeds.iter().map(|s| s.to_string())).collect());
        for target in &targets {
            let cell = |seed: &str| results.iter().find(|r| r.at_time == t && r.target_id == *target && r.seed_config_id == seed);
            let mut base = vec![format!("{target}, {fuzzer_b}")];
            let mut cand = vec![format!("{target}, {fuzzer_a}")];
            for seed in &seeds {
                match cell(seed) {
                    Some(r) => {
                        base.push(format_number(r.median_b));
                        cand.push(format!("{} {}", format_number(r.median_a), p_note(r.p_value)));
                    }
                    None => {
                        base.push(String::new());
                        cand.push(String::new());
                    }
                }
            }
            table.push(base);
            table.push(cand);
        }
        let widths: Vec<usize> = (0..=seeds.len())
            .map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        for row in &table {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        }
        out.push('\n');
    }
    out
}

/// Ground-truth comparison rows: distinct clusters per bug and how many of
/// them are shared with other bugs.
pub fn emit_dedup_csv(target_id: &str, table: &DedupTable) -> String {
    let mut w = writer();
    write_row(&mut w, ["target", "bug", "hashes", "matches", "false_matches", "inputs"]);
    write_dedup_rows(&mut w, target_id, table);
    finish(w)
}

fn write_dedup_rows(w: &mut csv::Writer<Vec<u8>>, target_id: &str, table: &DedupTable) {
    for r in &table.rows {
        write_row(
            w,
            [
                target_id.to_string(),
                r.label.to_string(),
                r.hashes.to_string(),
                r.matches.to_string(),
                r.false_matches.to_string(),
                r.inputs.to_string(),
            ],
        );
    }
}

/// [`emit_dedup_csv`] for several targets; targets without ground truth are skipped.
pub fn emit_dedup_csv_all(outcomes: &[TriageOutcome]) -> String {
    let mut w = writer();
    write_row(&mut w, ["target", "bug", "hashes", "matches", "false_matches", "inputs"]);
    for o in outcomes {
        if let Some(t) = &o.table {
            write_dedup_rows(&mut w, &o.target_id, t);
        }
    }
    finish(w)
}

pub fn emit_clusters_csv(outcomes: &[TriageOutcome]) -> String {
    let mut w = writer();
    write_row(&mut w, ["target", "cluster", "crashes"]);
    for o in outcomes {
        for (k, n) in &o.clusters {
            write_row(&mut w, [o.target_id.clone(), k.clone(), n.to_string()]);
        }
    }
    finish(w)
}

pub fn emit_triage_summary(outcomes: &[TriageOutcome]) -> String {
    let mut w = writer();
    write_row(&mut w, ["target", "strategy", "crashes", "clusters", "bugs", "overcount"]);
    for o in outcomes {
        let (bugs, over) = match &o.table {
            Some(t) => (t.distinct_bugs.to_string(), t.overcount_factor.map(format_sig).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        write_row(
            &mut w,
            [
                o.target_id.clone(),
                o.strategy.name().to_string(),
                o.crashes.to_string(),
                o.clusters.len().to_string(),
                bugs,
                over,
            ],
        );
    }
    finish(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub band: Band,
    /// An SVG color: a name or `#rgb`/`#rrggbb`.
    pub color: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
    pub width: u32,
    pub height: u32,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::InvalidArgument("plot has no series".into()));
        }
        if self.width < 200 || self.height < 150 {
            return Err(Error::InvalidArgument(format!(
                "plot must be at least 200x150 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        for s in &self.series {
            if s.band.rows.is_empty() {
                return Err(Error::InvalidArgument(format!("series {} has an empty band", s.label)));
            }
            let ok_color = match s.color.strip_prefix('#') {
                Some(hex) => matches!(hex.len(), 3 | 6) && hex.chars().all(|c| c.is_ascii_hexdigit()),
                None => !s.color.is_empty() && s.color.chars().all(|c| c.is_ascii_alphabetic()),
            };
            if !ok_color {
                return Err(Error::InvalidArgument(format!("series {} has invalid color {:?}", s.label, s.color)));
            }
            let finite = s
                .band
                .rows
                .iter()
                .all(|r| [r.time, r.median, r.min, r.max, r.ci_lo, r.ci_hi].iter().all(|v| v.is_finite()));
            if !finite {
                return Err(Error::InvalidArgument(format!("series {} has non-finite values", s.label)));
            }
        }
        Ok(())
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;
const TICKS: u32 = 5;

/// Median (solid), CI bounds (dashed) and min/max (dotted) per series, drawn as
/// step functions over the band's grid.
pub fn emit_svg_plot(spec: &PlotSpec) -> Result<String> {
    spec.validate()?;
    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let (plot_w, plot_h) = (w - MARGIN_LEFT - MARGIN_RIGHT, h - MARGIN_TOP - MARGIN_BOTTOM);
    let rows = || spec.series.iter().flat_map(|s| s.band.rows.iter());
    let x_max = rows().map(|r| r.time).fold(0.0, f64::max);
    let y_max = rows().map(|r| r.max).fold(0.0, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let sx = |x: f64| MARGIN_LEFT + x / x_max * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - y / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(&spec.title)
    );

    // Axes, ticks and labels.
    let (x0, y0, x1, y1) = (MARGIN_LEFT, MARGIN_TOP + plot_h, MARGIN_LEFT + plot_w, MARGIN_TOP);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
    for i in 0..=TICKS {
        let f = f64::from(i) / f64::from(TICKS);
        let (tx, ty) = (sx(f * x_max), sy(f * y_max));
        let _ = writeln!(s, r#"<line x1="{tx:.2}" y1="{y0:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            format_sig(f * x_max)
        );
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            ty + 4.0,
            format_sig(f * y_max)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 12.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    for series in &spec.series {
        let lines: [(&str, fn(&fuzzeval_core::stats::BandRow) -> f64, &str, &str); 5] = [
            ("median", |r| r.median, "2", ""),
            ("ci_lo", |r| r.ci_lo, "1.2", r#" stroke-dasharray="6 3""#),
            ("ci_hi", |r| r.ci_hi, "1.2", r#" stroke-dasharray="6 3""#),
            ("min", |r| r.min, "1", r#" stroke-dasharray="2 3" stroke-opacity="0.6""#),
            ("max", |r| r.max, "1", r#" stroke-dasharray="2 3" stroke-opacity="0.6""#),
        ];
        for (_, value, width, dash) in lines {
            let mut points = Vec::with_capacity(series.band.rows.len() * 2);
            for (i, r) in series.band.rows.iter().enumerate() {
                if i > 0 {
                    let prev = &series.band.rows[i - 1];
                    points.push(format!("{:.2},{:.2}", sx(r.time), sy(value(prev))));
                }
                points.push(format!("{:.2},{:.2}", sx(r.time), sy(value(r))));
            }
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{width}"{dash}/>"#,
                points.join(" "),
                series.color
            );
        }
    }

    for (i, series) in spec.series.iter().enumerate() {
        let y = MARGIN_TOP + 8.0 + 18.0 * i as f64;
        let x = MARGIN_LEFT + 12.0;
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="14" height="10" fill="{}"/>"#, series.color);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 20.0,
            y + 9.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
