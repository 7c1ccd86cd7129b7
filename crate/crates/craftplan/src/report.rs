//! Per-task aggregation and the csv / markdown / jsonl writers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use craftplan_core::agent::{cause_label, EpisodeResult};
use craftplan_core::craftworld::TaskSpec;
use craftplan_core::stats::{binomial_ci95, mean, sample_std};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunnelStage {
    pub item: String,
    /// Percent of episodes that held the item at some point.
    pub reached: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub task_id: String,
    pub meta_group: String,
    pub episodes: usize,
    /// Percent, in [0, 100].
    pub success_rate: f64,
    pub success_std: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_steps: f64,
    pub mean_rounds: f64,
    pub funnel: Vec<FunnelStage>,
}

/// Rows in suite order, episodes grouped by task id.
pub fn aggregate(tasks: &[TaskSpec], results: &[EpisodeResult]) -> Vec<ReportRow> {
    let mut by_task: BTreeMap<&str, Vec<&EpisodeResult>> = BTreeMap::new();
    for r in results {
        by_task.entry(r.task_id.as_str()).or_default().push(r);
    }
    tasks
        .iter()
        .filter_map(|t| by_task.get(t.id.as_str()).map(|rs| row(t, rs)))
        .collect()
}

fn row(task: &TaskSpec, rs: &[&EpisodeResult]) -> ReportRow {
    let n = rs.len();
    let wins: Vec<f64> = rs.iter().map(|r| if r.success { 100.0 } else { 0.0 }).collect();
    let successes = rs.iter().filter(|r| r.success).count();
    let (lo, hi) = binomial_ci95(successes, n);
    let steps: Vec<f64> = rs.iter().map(|r| r.steps_used as f64).collect();
    let rounds: Vec<f64> = rs.iter().map(|r| f64::from(r.rounds_used)).collect();
    let funnel = task
        .milestones
        .iter()
        .map(|m| FunnelStage {
            item: m.clone(),
            reached: 100.0 * rs.iter().filter(|r| r.milestones.iter().any(|x| &x.item == m)).count() as f64 / n as f64,
        })
        .collect();
    ReportRow {
        task_id: task.id.clone(),
        meta_group: task.meta_group.clone(),
        episodes: n,
        success_rate: mean(&wins),
        success_std: if n > 1 { sample_std(&wins) } else { 0.0 },
        ci95_low: 100.0 * lo,
        ci95_high: 100.0 * hi,
        mean_steps: mean(&steps),
        mean_rounds: mean(&rounds),
        funnel,
    }
}

/// Shared by the csv and markdown writers so their cells always agree.
pub fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn funnel_cell(f: &[FunnelStage]) -> String {
    f.iter().map(|s| format!("{}:{}", s.item, num(s.reached))).collect::<Vec<_>>().join(" ")
}

pub const CSV_HEADER: [&str; 10] = [
    "task_id",
    "meta_group",
    "episodes",
    "success_rate",
    "success_std",
    "ci95_low",
    "ci95_high",
    "mean_steps",
    "mean_rounds",
    "funnel",
];

pub fn cells(r: &ReportRow) -> [String; 10] {
    [
        r.task_id.clone(),
        r.meta_group.clone(),
        r.episodes.to_string(),
        num(r.success_rate),
        num(r.success_std),
        num(r.ci95_low),
        num(r.ci95_high),
        num(r.mean_steps),
        num(r.mean_rounds),
        funnel_cell(&r.funnel),
    ]
}

pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn md_escape(cell: &str) -> String {
    cell.replace('|', "\\|")
}

pub fn markdown(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    s.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        let r: Vec<String> = r.iter().map(|c| md_escape(c)).collect();
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

pub fn report_markdown(rows: &[ReportRow]) -> String {
    markdown(&CSV_HEADER, rows.iter().map(|r| cells(r).to_vec()))
}

#[derive(Serialize)]
struct EpisodeLine<'a> {
    kind: &'static str,
    meta_group: &'a str,
    cause: Option<String>,
    #[serde(flatten)]
    result: &'a EpisodeResult,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    kind: &'static str,
    #[serde(flatten)]
    row: &'a ReportRow,
}

/// One line per episode in run order, then one summary line per task.
pub fn write_results_jsonl<W: Write>(mut out: W, tasks: &[TaskSpec], results: &[EpisodeResult], rows: &[ReportRow]) -> std::io::Result<()> {
    let groups: BTreeMap<&str, &str> = tasks.iter().map(|t| (t.id.as_str(), t.meta_group.as_str())).collect();
    for r in results {
        let line = EpisodeLine {
            kind: "episode",
            meta_group: groups.get(r.task_id.as_str()).copied().unwrap_or(""),
            cause: r.failure_cause.as_ref().map(cause_label),
            result: r,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    for row in rows {
        serde_json::to_writer(&mut out, &SummaryLine { kind: "task_summary", row })?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: impl IntoIterator<Item = T>) -> std::io::Result<()> {
    for it in items {
        serde_json::to_writer(&mut out, &it)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// `report.csv`, `report.md` and `results.jsonl` under `dir`.
pub fn write_suite(dir: &Path, tasks: &[TaskSpec], results: &[EpisodeResult], rows: &[ReportRow]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    write_csv(BufWriter::new(File::create(dir.join("report.csv"))?), &CSV_HEADER, rows.iter().map(|r| cells(r).to_vec()))?;
    std::fs::write(dir.join("report.md"), report_markdown(rows))?;
    write_results_jsonl(BufWriter::new(File::create(dir.join("results.jsonl"))?), tasks, results, rows)?;
    Ok(())
}
