//! Command-line experiment harness.

use clap::Parser;
use rayon::prelude::*;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::domain::{validate_plant, CpWorkflow, Plant};
use crate::report::{
    assignment_rate_svg, gantt_svg, reservation_rows, times_svg, write_metrics_csv, write_reservations_csv,
    summary_rows, write_summary_csv, write_trace_csv, MetricsRow,
};
use crate::sched::{default_horizon, IsWeights, PriorityStrategy, SelectionStrategy};
use crate::sim::{run_offline_experiment, run_online_experiment, ExperimentRun, MetricsReport, Mode};
use crate::workload::{case_study_config, generate_workflows, load_plant_config, load_workload, WorkloadParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ARGS: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fmsched", version, about = "Workflow scheduling experiments on a flexible manufacturing plant")]
pub struct Args {
    #[arg(long, default_value = "offline")]
    pub mode: Mode,
    #[arg(long, default_value = "lu")]
    pub priority: PriorityStrategy,
    #[arg(long, default_value = "is")]
    pub selection: SelectionStrategy,
    /// Weight of completion time in the integrated-selection cost.
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    /// Run every strategy pair of the chosen mode.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 250)]
    pub workflows: usize,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `case-study` or a plant JSON file.
    #[arg(long, default_value = "case-study")]
    pub plant: String,
    /// Workload JSON file; replaces the generated workload.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, default_value_t = 1.3)]
    pub tightness: f64,
    /// Mean ticks between arrivals of generated workflows; 0 puts every
    /// arrival at t=0.
    #[arg(long, default_value_t = 20.0)]
    pub interarrival: f64,
    /// Metrics CSV; stdout if omitted. With several seeds the per-seed rows
    /// go to a sibling `.runs.csv` file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for SVG charts.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Reservation CSV of the first run.
    #[arg(long)]
    pub export_reservations: Option<PathBuf>,
    /// Per-workflow outcome CSV of the first run.
    #[arg(long)]
    pub export_summary: Option<PathBuf>,
    /// Event trace CSV of the first run.
    #[arg(long)]
    pub export_trace: Option<PathBuf>,
    /// Fill the wall_ms column. Off by default so reruns are byte-identical.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Verify(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) | Failure::Io(_) => EXIT_CONFIG,
            Failure::Verify(_) => EXIT_VERIFY,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Verify(m) | Failure::Io(m) => m,
        }
    }
}

/// Parses `args` (program name first), runs the experiments and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ARGS } else { EXIT_OK };
        }
    };
    if let Err(msg) = check_args(&args) {
        eprintln!("error: {msg}");
        return EXIT_ARGS;
    }
    match execute(&args) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn check_args(a: &Args) -> Result<(), String> {
    if a.workflows == 0 && a.workload.is_none() {
        return Err("--workflows must be positive".into());
    }
    if a.repeats == 0 {
        return Err("--repeats must be positive".into());
    }
    if !(a.tightness >= 1.0 && a.tightness.is_finite()) {
        return Err("--tightness must be at least 1".into());
    }
    if !(a.interarrival >= 0.0 && a.interarrival.is_finite()) {
        return Err("--interarrival must be non-negative".into());
    }
    if IsWeights::new(a.alpha).is_none() {
        return Err("--alpha must lie in [0, 1]".into());
    }
    Ok(())
}

fn load_plant(spec: &str) -> Result<Plant, Failure> {
    let config = if spec == "case-study" {
        case_study_config()
    } else {
        load_plant_config(Path::new(spec)).map_err(|e| Failure::Config(e.to_string()))?
    };
    let problems = validate_plant(&config);
    if let Some(p) = problems.first() {
        return Err(Failure::Config(format!("invalid plant: {p}")));
    }
    Plant::new(config).map_err(|e| Failure::Config(e.to_string()))
}

#[derive(Clone, Copy)]
struct Cell {
    mode: Mode,
    priority: PriorityStrategy,
    selection: SelectionStrategy,
}

fn cells(a: &Args) -> Vec<Cell> {
    let weights = IsWeights::new(a.alpha).expect("checked");
    let with_weights = |s: SelectionStrategy| match s {
        SelectionStrategy::Is(_) => SelectionStrategy::Is(weights),
        ds => ds,
    };
    let selections = [SelectionStrategy::Ds, SelectionStrategy::Is(weights)];
    match (a.grid, a.mode) {
        (false, mode) => vec![Cell { mode, priority: a.priority, selection: with_weights(a.selection) }],
        (true, Mode::Offline) => PriorityStrategy::ALL
            .iter()
            .flat_map(|&priority| selections.iter().map(move |&selection| Cell { mode: Mode::Offline, priority, selection }))
            .collect(),
        (true, Mode::Online) => {
            selections.iter().map(|&selection| Cell { mode: Mode::Online, priority: a.priority, selection }).collect()
        }
    }
}

fn workload_for(a: &Args, plant: &Plant, seed: u64) -> Result<Vec<CpWorkflow>, Failure> {
    if let Some(path) = &a.workload {
        let workflows = load_workload(path).map_err(|e| Failure::Config(e.to_string()))?;
        for w in &workflows {
            let report = crate::domain::validate_workflow(w, plant);
            if !report.is_valid() {
                return Err(Failure::Config(format!("workflow {}: {report}", w.id.0)));
            }
        }
        return Ok(workflows);
    }
    let arrivals = if a.interarrival == 0.0 {
        crate::workload::ArrivalProcess::AllAtZero
    } else {
        crate::workload::ArrivalProcess::Uniform { mean_interarrival: a.interarrival }
    };
    let params = WorkloadParams { count: a.workflows, seed, tightness: a.tightness, arrivals, ..Default::default() };
    generate_workflows(&params, plant).map_err(|e| Failure::Config(e.to_string()))
}

fn run_cell(cell: Cell, plant: &Plant, workflows: &[CpWorkflow], seed: u64) -> Result<(ExperimentRun, u128), Failure> {
    let started = Instant::now();
    let mut sorted = workflows.to_vec();
    sorted.sort_by_key(|w| (w.arrival, w.id));
    let horizon = default_horizon(&sorted, plant);
    let run = match cell.mode {
        Mode::Offline => run_offline_experiment(plant, &sorted, cell.priority, cell.selection, horizon, seed),
        Mode::Online => run_online_experiment(plant, &sorted, cell.selection, horizon, seed),
    }
    .map_err(|e| Failure::Verify(e.to_string()))?;
    Ok((run, started.elapsed().as_millis()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn runs_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "metrics".into());
    out.with_file_name(format!("{stem}.runs.csv"))
}

fn execute(a: &Args) -> Result<(), Failure> {
    let plant = load_plant(&a.plant)?;
    let seeds: Vec<u64> = (a.seed..a.seed + a.repeats).collect();
    let workloads: Vec<Vec<CpWorkflow>> =
        seeds.iter().map(|&s| workload_for(a, &plant, s)).collect::<Result<_, _>>()?;
    let cells = cells(a);
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..seeds.len()).map(move |s| (c, s))).collect();
    let results: Vec<(ExperimentRun, u128)> = jobs
        .par_iter()
        .map(|&(c, s)| run_cell(cells[c], &plant, &workloads[s], seeds[s]))
        .collect::<Result<_, _>>()?;

    let wall = |ms: u128| a.timing.then_some(ms);
    let mut rows = Vec::with_capacity(cells.len());
    let mut per_seed = Vec::with_capacity(results.len());
    for chunk in results.chunks(seeds.len()) {
        let reports: Vec<MetricsReport> = chunk.iter().map(|(r, _)| r.report.clone()).collect();
        let total_ms: u128 = chunk.iter().map(|(_, ms)| ms).sum();
        rows.push(MetricsRow::aggregate(&reports, wall(total_ms)));
        per_seed.extend(chunk.iter().map(|(r, ms)| MetricsRow::from_report(&r.report, wall(*ms))));
    }

    let csv_err = |e: csv::Error| Failure::Io(e.to_string());
    match &a.out {
        Some(path) => {
            write_metrics_csv(create(path)?, &rows).map_err(csv_err)?;
            if seeds.len() > 1 {
                write_metrics_csv(create(&runs_path(path))?, &per_seed).map_err(csv_err)?;
            }
        }
        None => write_metrics_csv(io::stdout().lock(), &rows).map_err(csv_err)?,
    }

    let first = &results[0].0;
    let reservations = reservation_rows(&first.accepted, &plant);
    if let Some(path) = &a.export_reservations {
        write_reservations_csv(create(path)?, &reservations).map_err(csv_err)?;
    }
    if let Some(path) = &a.export_summary {
        write_summary_csv(create(path)?, &summary_rows(&workloads[0], &first.accepted)).map_err(csv_err)?;
    }
    if let Some(path) = &a.export_trace {
        write_trace_csv(create(path)?, &first.trace, &plant).map_err(csv_err)?;
    }
    if let Some(dir) = &a.plot {
        let write = |name: &str, body: String| -> Result<(), Failure> {
            let path = dir.join(name);
            let mut f = create(&path)?;
            f.write_all(body.as_bytes()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        };
        write("assignment_rate.svg", assignment_rate_svg(&rows))?;
        write("times.svg", times_svg(&rows))?;
        if a.export_reservations.is_some() {
            write("gantt.svg", gantt_svg(&reservations))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(dir: &Path, extra: &[&str]) -> i32 {
        let mut args = vec!["fmsched".to_string()];
        args.extend(extra.iter().map(|s| s.replace("{dir}", dir.to_str().unwrap())));
        run(args)
    }

    #[test]
    fn single_cell_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_in(dir.path(), &["--workflows", "30", "--seed", "7", "--out", "{dir}/m.csv"]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("offline,lu,is,30,7,30,"));
    }

    #[test]
    fn grid_with_repeats_and_plots() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_in(
            dir.path(),
            &["--grid", "--workflows", "15", "--repeats", "2", "--out", "{dir}/g.csv", "--plot", "{dir}/plots"],
        );
        assert_eq!(code, EXIT_OK);
        let rows = crate::report::read_metrics_csv(&dir.path().join("g.csv")).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.seed == "0..=1"));
        let runs = crate::report::read_metrics_csv(&dir.path().join("g.runs.csv")).unwrap();
        assert_eq!(runs.len(), 16);
        assert!(dir.path().join("plots/assignment_rate.svg").exists());
        assert!(dir.path().join("plots/times.svg").exists());
    }

    #[test]
    fn online_grid_and_exports() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_in(
            dir.path(),
            &[
                "--mode",
                "online",
                "--grid",
                "--workflows",
                "20",
                "--out",
                "{dir}/o.csv",
                "--export-reservations",
                "{dir}/r.csv",
                "--export-trace",
                "{dir}/t.csv",
                "--export-summary",
                "{dir}/s.csv",
                "--plot",
                "{dir}",
            ],
        );
        assert_eq!(code, EXIT_OK);
        let rows = crate::report::read_metrics_csv(&dir.path().join("o.csv")).unwrap();
        assert_eq!(rows.iter().map(|r| r.selection.as_str()).collect::<Vec<_>>(), ["ds", "is"]);
        assert!(rows.iter().all(|r| r.mode == "online" && r.priority.is_empty()));
        assert!(dir.path().join("gantt.svg").exists());
        let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(trace.starts_with("time,kind,workflow,task,leg,resource\n"));
        let summary = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(summary.lines().count(), 21);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["--priority", "fifo"]), EXIT_ARGS);
        assert_eq!(run_in(dir.path(), &["--tightness", "0.5"]), EXIT_ARGS);
        assert_eq!(run_in(dir.path(), &["--plant", "{dir}/missing.json"]), EXIT_CONFIG);
        std::fs::write(dir.path().join("bad.json"), "{\"stations\": 3}").unwrap();
        assert_eq!(run_in(dir.path(), &["--plant", "{dir}/bad.json"]), EXIT_CONFIG);
        std::fs::write(dir.path().join("w.json"), r#"{"workflows":[{"id":1,"arrival":0,"deadline":9,"tasks":[{"id":0,"station":"Z","duration":5,"predecessors":[]}]}]}"#).unwrap();
        assert_eq!(run_in(dir.path(), &["--workload", "{dir}/w.json"]), EXIT_CONFIG);
    }

    #[test]
    fn identical_flags_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a", "b"] {
            let out = format!("{{dir}}/{name}.csv");
            assert_eq!(run_in(dir.path(), &["--grid", "--workflows", "20", "--seed", "3", "--out", &out]), EXIT_OK);
        }
        let a = std::fs::read(dir.path().join("a.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b.csv")).unwrap();
        assert_eq!(a, b);
    }
}
