//! Files written for a run: versioned CSV tables, the JSON result record,
//! two-column `.dat` curves and a separate timing file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiments::{Payload, ResultRecord};

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MODSPACE_NLS_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";

/// `# schema: modspace-nls/<kind>/v1`
pub fn schema_id(kind: &str) -> String {
    format!("modspace-nls/{kind}/v1")
}

/// Root directory for outputs: the environment override, then the config,
/// then `results`.
pub fn output_root(configured: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.map_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR), Path::to_path_buf),
    }
}

/// CSV with a schema comment line above the header row.
pub fn write_csv<R: Serialize>(path: &Path, kind: &str, rows: &[R]) -> io::Result<()> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "# schema: {}", schema_id(kind))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row).map_err(io::Error::other)?;
    }
    writer.flush()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Whitespace-separated `x y` lines.
pub fn write_curve(path: &Path, points: &[(f64, f64)]) -> io::Result<()> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    for (x, y) in points {
        writeln!(file, "{x:e} {y:e}")?;
    }
    file.flush()
}

/// Named curves for a payload, in a fixed order.
pub fn curves(payload: &Payload) -> Vec<(String, Vec<(f64, f64)>)> {
    match payload {
        Payload::Decay(report) => {
            let raw = report
                .times
                .iter()
                .copied()
                .zip(report.raw_norms.iter().copied());
            let comp = report
                .times
                .iter()
                .copied()
                .zip(report.ratios.iter().copied());
            vec![
                ("decay_raw".into(), raw.collect()),
                ("decay_compensated".into(), comp.collect()),
            ]
        }
        Payload::Existence(e) => {
            let mut out = vec![(
                "picard_residual".to_string(),
                e.history
                    .iter()
                    .map(|r| (r.iteration as f64, r.residual))
                    .collect::<Vec<_>>(),
            )];
            if !e.weighted.is_empty() {
                out.push((
                    "weighted_norm".into(),
                    e.times
                        .iter()
                        .copied()
                        .zip(e.weighted.iter().copied())
                        .collect(),
                ));
            }
            out
        }
        Payload::Holder(rows) => {
            let mut out = vec![(
                "holder_ratio".to_string(),
                rows.iter()
                    .map(|r| (r.pair as f64, r.ratio))
                    .collect::<Vec<_>>(),
            )];
            if rows.iter().all(|r| r.ratio_refined.is_some()) && !rows.is_empty() {
                out.push((
                    "holder_ratio_refined".into(),
                    rows.iter()
                        .map(|r| (r.pair as f64, r.ratio_refined.unwrap_or(f64::NAN)))
                        .collect(),
                ));
            }
            out
        }
        Payload::Embedding(rows) => vec![(
            "embedding_ratio".into(),
            rows.iter().map(|r| (r.sample as f64, r.ratio)).collect(),
        )],
        Payload::Kernel(rows) => {
            let mut ms: Vec<u32> = rows.iter().map(|r| r.m).collect();
            ms.dedup();
            ms.into_iter()
                .map(|m| {
                    let pts = rows
                        .iter()
                        .filter(|r| r.m == m)
                        .map(|r| (r.t, r.value))
                        .collect();
                    (format!("kernel_m{m}"), pts)
                })
                .collect()
        }
    }
}

/// One `.dat` file per non-empty curve. Nothing is written, and a warning is
/// logged, when every curve is empty.
pub fn emit_plot_data(record: &ResultRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let curves: Vec<_> = curves(&record.payload)
        .into_iter()
        .filter(|(_, pts)| !pts.is_empty())
        .collect();
    if curves.is_empty() {
        log::warn!(
            "{}: empty payload, no plot data written",
            record.config.name
        );
        return Ok(Vec::new());
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(curves.len());
    for (name, pts) in curves {
        let path = dir.join(format!("{name}.dat"));
        write_curve(&path, &pts)?;
        written.push(path);
    }
    Ok(written)
}

/// CSV table of the payload, named after the experiment kind.
fn write_table(record: &ResultRecord, dir: &Path) -> io::Result<Option<PathBuf>> {
    let kind = record.config.experiment.kind();
    let path = dir.join(format!("{kind}.csv"));
    match &record.payload {
        Payload::Decay(report) => {
            let rows: Vec<DecayRow> = (0..report.times.len())
                .map(|i| DecayRow {
                    t: report.times[i],
                    raw_norm: report.raw_norms[i],
                    compensated_ratio: report.ratios[i],
                    margin_mass: report.margin_mass[i],
                    valid: report.valid[i],
                })
                .collect();
            write_csv(&path, kind, &rows)?;
        }
        Payload::Existence(e) => {
            let rows: Vec<_> = e
                .history
                .iter()
                .map(|r| HistoryRow {
                    iteration: r.iteration,
                    residual: r.residual,
                    contraction_ratio: r.ratio,
                    tail_bound: r.tail_bound,
                })
                .collect();
            write_csv(&path, kind, &rows)?;
            if !e.weighted.is_empty() {
                let rows: Vec<_> = (0..e.times.len())
                    .map(|i| SeriesRow {
                        t: e.times[i],
                        norm: e.norms[i],
                        weighted_norm: e.weighted[i],
                    })
                    .collect();
                write_csv(&dir.join("existence_series.csv"), "existence_series", &rows)?;
            }
        }
        Payload::Holder(rows) => write_csv(&path, kind, rows)?,
        Payload::Embedding(rows) => write_csv(&path, kind, rows)?,
        Payload::Kernel(rows) => write_csv(&path, kind, rows)?,
    }
    Ok(Some(path))
}

#[derive(Serialize)]
struct DecayRow {
    t: f64,
    raw_norm: f64,
    compensated_ratio: f64,
    margin_mass: f64,
    valid: bool,
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    residual: f64,
    contraction_ratio: Option<f64>,
    tail_bound: Option<f64>,
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    norm: f64,
    weighted_norm: f64,
}

/// Everything for one run under `dir`: the table, `summary.json`,
/// `timings.json` and the plot files.
pub fn write_all(record: &ResultRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    written.extend(write_table(record, dir)?);
    let summary = dir.join("summary.json");
    write_json(&summary, record)?;
    written.push(summary);
    let timings = dir.join("timings.json");
    write_json(&timings, &record.timings)?;
    written.push(timings);
    written.extend(emit_plot_data(record, dir)?);
    Ok(written)
}
