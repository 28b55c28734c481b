//! CSV tables and SVG charts for experiment results and schedules.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::domain::{CpWorkflow, Plant, Time};
use crate::sched::ExecutableWorkflow;
use crate::sim::{ExecutionTrace, MetricsReport};

/// One line of the metrics table. For rows averaged over several seeds,
/// `seed` reads `first..=last`, `submitted`/`accepted` are totals, and the
/// rate and time columns are means of the per-seed values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mode: String,
    pub priority: String,
    pub selection: String,
    pub workflows: usize,
    pub seed: String,
    pub submitted: usize,
    pub accepted: usize,
    pub assignment_rate: String,
    pub avg_waiting: String,
    pub avg_execution: String,
    pub wall_ms: String,
}

pub const METRICS_COLUMNS: [&str; 11] = [
    "mode",
    "priority",
    "selection",
    "workflows",
    "seed",
    "submitted",
    "accepted",
    "assignment_rate",
    "avg_waiting",
    "avg_execution",
    "wall_ms",
];

fn fixed(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn label(report: &MetricsReport) -> (String, String, String) {
    (
        report.mode.to_string(),
        report.priority.map(|p| p.to_string()).unwrap_or_default(),
        report.selection.to_string(),
    )
}

impl MetricsRow {
    pub fn from_report(report: &MetricsReport, wall_ms: Option<u128>) -> Self {
        let (mode, priority, selection) = label(report);
        MetricsRow {
            mode,
            priority,
            selection,
            workflows: report.submitted,
            seed: report.seed.to_string(),
            submitted: report.submitted,
            accepted: report.accepted,
            assignment_rate: fixed(Some(report.assignment_rate)),
            avg_waiting: fixed(report.avg_waiting),
            avg_execution: fixed(report.avg_execution),
            wall_ms: wall_ms.map(|w| w.to_string()).unwrap_or_default(),
        }
    }

    /// Averages runs of the same strategy cell over their seeds.
    pub fn aggregate(reports: &[MetricsReport], wall_ms: Option<u128>) -> Self {
        let first = &reports[0];
        let (mode, priority, selection) = label(first);
        let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let seeds: Vec<u64> = reports.iter().map(|r| r.seed).collect();
        let (lo, hi) = (seeds.iter().min().unwrap(), seeds.iter().max().unwrap());
        MetricsRow {
            mode,
            priority,
            selection,
            workflows: first.submitted,
            seed: if lo == hi { lo.to_string() } else { format!("{lo}..={hi}") },
            submitted: reports.iter().map(|r| r.submitted).sum(),
            accepted: reports.iter().map(|r| r.accepted).sum(),
            assignment_rate: fixed(mean(reports.iter().map(|r| r.assignment_rate).collect())),
            avg_waiting: fixed(mean(reports.iter().filter_map(|r| r.avg_waiting).collect())),
            avg_execution: fixed(mean(reports.iter().filter_map(|r| r.avg_execution).collect())),
            wall_ms: wall_ms.map(|w| w.to_string()).unwrap_or_default(),
        }
    }

    /// Short strategy label such as `LU-IS` or `online-DS`.
    pub fn strategy_label(&self) -> String {
        let first = if self.priority.is_empty() { &self.mode } else { &self.priority };
        format!("{}-{}", first.to_uppercase(), self.selection.to_uppercase())
    }
}

pub fn write_metrics_csv<W: io::Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(METRICS_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> csv::Result<Vec<MetricsRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// One reservation as exported for Gantt charts and offline inspection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservationRow {
    pub workflow: u32,
    pub task: u32,
    pub leg: String,
    pub resource: String,
    pub start: Time,
    pub end: Time,
}

pub fn reservation_rows(schedules: &[ExecutableWorkflow], plant: &Plant) -> Vec<ReservationRow> {
    schedules
        .iter()
        .flat_map(|s| {
            s.layout().into_iter().map(move |(task, leg, resource, interval)| ReservationRow {
                workflow: s.id().0,
                task: task.0,
                leg: leg.to_string(),
                resource: plant.resource(resource).name.clone(),
                start: interval.start,
                end: interval.end,
            })
        })
        .collect()
}

pub fn write_reservations_csv<W: io::Write>(out: W, rows: &[ReservationRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["workflow", "task", "leg", "resource", "start", "end"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reservations_csv(path: &Path) -> csv::Result<Vec<ReservationRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

/// Per-workflow outcome; start and completion are empty for rejections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: u32,
    pub accepted: bool,
    pub start: Option<Time>,
    pub completion: Option<Time>,
    pub deadline: Time,
}

pub fn summary_rows(workflows: &[CpWorkflow], accepted: &[ExecutableWorkflow]) -> Vec<SummaryRow> {
    let done: BTreeMap<_, _> = accepted.iter().map(|e| (e.id(), e)).collect();
    let mut rows: Vec<SummaryRow> = workflows
        .iter()
        .map(|w| {
            let e = done.get(&w.id);
            SummaryRow {
                id: w.id.0,
                accepted: e.is_some(),
                start: e.map(|e| e.planned_start),
                completion: e.map(|e| e.completion),
                deadline: w.deadline,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.id);
    rows
}

pub fn write_summary_csv<W: io::Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["id", "accepted", "start", "completion", "deadline"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: io::Write>(out: W, trace: &ExecutionTrace, plant: &Plant) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "kind", "workflow", "task", "leg", "resource"])?;
    for e in &trace.events {
        w.write_record([
            e.time.to_string(),
            e.kind.to_string(),
            e.workflow.0.to_string(),
            e.task.map(|t| t.0.to_string()).unwrap_or_default(),
            e.leg.map(|l| l.to_string()).unwrap_or_default(),
            e.resource.map(|r| plant.resource(r).name.clone()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped vertical bar chart: one group per category, one bar per series.
fn bar_chart(title: &str, categories: &[String], series: &[(&str, Vec<f64>)], y_max: Option<f64>) -> String {
    let (width, height, left, bottom, top) = (120.0 + 90.0 * categories.len() as f64, 360.0, 60.0, 70.0, 40.0);
    let plot_h = height - bottom - top;
    let max = y_max.unwrap_or_else(|| {
        series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0_f64, f64::max).max(1e-9) * 1.1
    });
    let group_w = 90.0;
    let bar_w = (group_w - 20.0) / series.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    let base = height - bottom;
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, width - 20.0);
    for i in 0..=4 {
        let v = max * i as f64 / 4.0;
        let y = base - plot_h * i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, left - 4.0, y + 4.0);
    }
    for (c, cat) in categories.iter().enumerate() {
        let gx = left + 10.0 + group_w * c as f64;
        for (s, (_, values)) in series.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0);
            let h = plot_h * (v / max).clamp(0.0, 1.0);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
                gx + bar_w * s as f64,
                base - h,
                bar_w - 2.0,
                h,
                PALETTE[s % PALETTE.len()],
                escape(cat)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            gx + (group_w - 20.0) / 2.0,
            base + 16.0,
            escape(cat)
        );
    }
    if series.len() > 1 {
        for (s, (name, _)) in series.iter().enumerate() {
            let x = left + 10.0 + 110.0 * s as f64;
            let _ = writeln!(svg, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#, height - 30.0, PALETTE[s]);
            let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 14.0, height - 21.0, escape(name));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn parse(s: &str) -> f64 {
    s.parse().unwrap_or(0.0)
}

/// Assignment rate per strategy pair.
pub fn assignment_rate_svg(rows: &[MetricsRow]) -> String {
    let cats: Vec<String> = rows.iter().map(|r| r.strategy_label()).collect();
    let rates = rows.iter().map(|r| parse(&r.assignment_rate)).collect();
    bar_chart("Assignment rate", &cats, &[("assignment rate", rates)], Some(1.0))
}

/// Waiting and execution time side by side per strategy pair.
pub fn times_svg(rows: &[MetricsRow]) -> String {
    let cats: Vec<String> = rows.iter().map(|r| r.strategy_label()).collect();
    let waiting = rows.iter().map(|r| parse(&r.avg_waiting)).collect();
    let execution = rows.iter().map(|r| parse(&r.avg_execution)).collect();
    bar_chart("Average waiting and execution time (ticks)", &cats, &[("waiting", waiting), ("execution", execution)], None)
}

/// Gantt chart with one lane per resource that carries a reservation, in
/// order of first use; bars are coloured by workflow.
pub fn gantt_svg(rows: &[ReservationRow]) -> String {
    let mut lanes: BTreeMap<&str, usize> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    let mut sorted: Vec<&ReservationRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.start, r.end, r.workflow, r.task));
    for r in &sorted {
        if !lanes.contains_key(r.resource.as_str()) {
            lanes.insert(&r.resource, order.len());
            order.push(&r.resource);
        }
    }
    let t_max = rows.iter().map(|r| r.end).max().unwrap_or(1).max(1) as f64;
    let (left, lane_h, plot_w) = (90.0, 22.0, 900.0);
    let height = 50.0 + lane_h * order.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="11">"#,
        left + plot_w + 20.0
    );
    for (i, name) in order.iter().enumerate() {
        let y = 20.0 + lane_h * i as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, y + 15.0, escape(name));
        let _ = writeln!(svg, r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, left + plot_w);
    }
    for r in &sorted {
        let y = 22.0 + lane_h * lanes[r.resource.as_str()] as f64;
        let x = left + plot_w * r.start as f64 / t_max;
        let w = (plot_w * (r.end - r.start) as f64 / t_max).max(1.0);
        let _ = writeln!(
            svg,
            r#"<rect class="bar" x="{x:.1}" y="{y}" width="{w:.1}" height="{}" fill="{}"><title>wf {} task {} {} [{}, {})</title></rect>"#,
            lane_h - 4.0,
            PALETTE[r.workflow as usize % PALETTE.len()],
            r.workflow,
            r.task,
            escape(&r.leg),
            r.start,
            r.end
        );
    }
    let axis_y = height - 12.0;
    let _ = writeln!(svg, r#"<text x="{left}" y="{axis_y}">0</text>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{axis_y}" text-anchor="end">{}</text>"#, left + plot_w, t_max);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::{PriorityStrategy, SelectionStrategy};
    use crate::sim::{run_offline_experiment, Mode};
    use crate::workload::{case_study_plant, product_a_workflow};

    fn report(priority: PriorityStrategy, seed: u64, rate: f64) -> MetricsReport {
        MetricsReport {
            mode: Mode::Offline,
            priority: Some(priority),
            selection: SelectionStrategy::Ds,
            seed,
            submitted: 10,
            accepted: (rate * 10.0) as usize,
            assignment_rate: rate,
            avg_waiting: if rate > 0.0 { Some(12.5) } else { None },
            avg_execution: if rate > 0.0 { Some(100.0) } else { None },
        }
    }

    #[test]
    fn single_row_csv() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[MetricsRow::from_report(&report(PriorityStrategy::Cd, 7, 0.5), None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], METRICS_COLUMNS.join(","));
        assert_eq!(lines[1], "offline,cd,ds,10,7,10,5,0.500000,12.500000,100.000000,");
    }

    #[test]
    fn aggregate_skips_absent_averages() {
        let rows = [report(PriorityStrategy::Lu, 1, 0.5), report(PriorityStrategy::Lu, 2, 0.0)];
        let row = MetricsRow::aggregate(&rows, None);
        assert_eq!(row.seed, "1..=2");
        assert_eq!(row.assignment_rate, "0.250000");
        assert_eq!(row.avg_waiting, "12.500000");
        assert_eq!(row.accepted, 5);
        assert_eq!(row.strategy_label(), "LU-DS");
    }

    #[test]
    fn product_a_gantt_has_twenty_bars() {
        let plant = case_study_plant();
        let mut w = product_a_workflow();
        w.deadline = 2000;
        let run = run_offline_experiment(&plant, &[w], PriorityStrategy::Cd, SelectionStrategy::Ds, 5000, 0).unwrap();
        let rows = reservation_rows(&run.accepted, &plant);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_reservations_csv(std::fs::File::create(&path).unwrap(), &rows).unwrap();
        let back = read_reservations_csv(&path).unwrap();
        assert_eq!(back, rows);
        let svg = gantt_svg(&back);
        assert_eq!(svg.matches(r#"class="bar""#).count(), 20);
        // Main conveyor plus conveyor, machine and buffer at each of the five stations.
        let lanes: std::collections::BTreeSet<_> = back.iter().map(|r| r.resource.as_str()).collect();
        assert_eq!(lanes.len(), 16);
    }

    #[test]
    fn summary_marks_rejections() {
        let plant = case_study_plant();
        let mut ok = product_a_workflow();
        ok.deadline = 2000;
        let mut late = product_a_workflow();
        late.id = crate::domain::WorkflowId(2);
        late.deadline = 100;
        let ws = [ok, late];
        let run = run_offline_experiment(&plant, &ws, PriorityStrategy::Cd, SelectionStrategy::Ds, 5000, 0).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &summary_rows(&ws, &run.accepted)).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id,accepted,start,completion,deadline\n1,true,0,625,2000\n2,false,,,100\n"
        );
    }

    #[test]
    fn charts_have_one_bar_per_value() {
        let rows: Vec<MetricsRow> = PriorityStrategy::ALL
            .iter()
            .map(|&p| MetricsRow::from_report(&report(p, 0, 0.5), None))
            .collect();
        assert_eq!(assignment_rate_svg(&rows).matches("<rect").count(), 4);
        assert_eq!(times_svg(&rows).matches("<rect").count(), 8 + 2);
    }
}
