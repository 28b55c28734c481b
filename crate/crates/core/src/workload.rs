//! Case-study plant, product A, and a seeded random workflow generator.
//!
//! Generation uses ChaCha8 seeded from the 64-bit seed, with one stream per
//! workflow index, so the content of the `i`-th drawn workflow does not
//! depend on the batch size (uniform arrivals do, through the window
//! length). Ids are then assigned in arrival order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;
use std::path::Path;
use thiserror::Error;

use crate::domain::{BufferSpec, ConveyorSpec, CpWorkflow, Plant, PlantConfig, StationSpec, Task, Time, WorkflowId};

pub const CASE_STUDY_STATIONS: [&str; 5] = ["A", "B", "C", "D", "E"];

pub fn case_study_config() -> PlantConfig {
    let stations = CASE_STUDY_STATIONS
        .iter()
        .map(|s| StationSpec {
            id: s.to_string(),
            machines: (1..=5).map(|m| format!("{s}-M{m}")).collect(),
            buffer: BufferSpec { id: format!("{s}-BUF"), capacity: 4 },
            conveyor: ConveyorSpec { id: format!("{s}-CONV"), capacity: 4, transit: 5 },
        })
        .collect();
    PlantConfig {
        stations,
        main_conveyor: ConveyorSpec { id: "MAIN".into(), capacity: 10, transit: 10 },
        max_dwell: 60,
        unload_dwell: 10,
    }
}

pub fn case_study_plant() -> Plant {
    Plant::new(case_study_config()).expect("case-study layout is valid")
}

/// The five-step product A: A(20) -> B(50) -> C(100) -> D(180) -> E(200).
pub fn product_a_workflow() -> CpWorkflow {
    let durations = [20, 50, 100, 180, 200];
    let tasks = CASE_STUDY_STATIONS
        .iter()
        .zip(durations)
        .enumerate()
        .map(|(i, (s, d))| {
            let preds: &[u32] = if i == 0 { &[] } else { &[i as u32 - 1] };
            Task::new(i as u32, *s, d, preds)
        })
        .collect();
    CpWorkflow { id: WorkflowId(1), arrival: 0, deadline: 1000, tasks }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArrivalProcess {
    AllAtZero,
    /// Arrivals uniform over `[0, count * mean_interarrival)`.
    Uniform { mean_interarrival: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    pub count: usize,
    pub seed: u64,
    pub tasks_per_workflow: RangeInclusive<usize>,
    pub duration: RangeInclusive<Time>,
    /// Deadline multiplier on the longest path, at least 1.
    pub tightness: f64,
    pub fork_probability: f64,
    pub arrivals: ArrivalProcess,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            count: 250,
            seed: 0,
            tasks_per_workflow: 3..=5,
            duration: 20..=200,
            tightness: 1.3,
            fork_probability: 0.2,
            arrivals: ArrivalProcess::Uniform { mean_interarrival: 20.0 },
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("workflow count must be positive")]
    ZeroCount,
    #[error("empty range: {0}")]
    EmptyRange(&'static str),
    #[error("tightness must be at least 1, got {0}")]
    Tightness(f64),
    #[error("fork probability must lie in [0, 1], got {0}")]
    ForkProbability(f64),
    #[error("mean interarrival must be positive and finite, got {0}")]
    Interarrival(f64),
    #[error("plant has {stations} stations but workflows need up to {needed}")]
    TooFewStations { stations: usize, needed: usize },
}

impl WorkloadParams {
    pub fn validate(&self, plant: &Plant) -> Result<(), ParamsError> {
        if self.count == 0 {
            return Err(ParamsError::ZeroCount);
        }
        if self.tasks_per_workflow.is_empty() || *self.tasks_per_workflow.start() == 0 {
            return Err(ParamsError::EmptyRange("tasks per workflow"));
        }
        if self.duration.is_empty() || *self.duration.start() == 0 {
            return Err(ParamsError::EmptyRange("duration"));
        }
        if !(self.tightness >= 1.0 && self.tightness.is_finite()) {
            return Err(ParamsError::Tightness(self.tightness));
        }
        if !(0.0..=1.0).contains(&self.fork_probability) {
            return Err(ParamsError::ForkProbability(self.fork_probability));
        }
        if let ArrivalProcess::Uniform { mean_interarrival } = self.arrivals {
            if !(mean_interarrival > 0.0 && mean_interarrival.is_finite()) {
                return Err(ParamsError::Interarrival(mean_interarrival));
            }
        }
        let needed = *self.tasks_per_workflow.end();
        if needed > plant.stations().len() {
            return Err(ParamsError::TooFewStations { stations: plant.stations().len(), needed });
        }
        Ok(())
    }
}

/// Deadline for a workflow arriving at `arrival`: `tightness` times the
/// longest path, where each task weighs its transport lead plus machining.
pub fn deadline_for(w: &CpWorkflow, plant: &Plant, tightness: f64) -> Time {
    let cp = crate::sched::earliest_completion_bound(w, plant).map_or(0, |c| c - w.arrival);
    w.arrival + (cp as f64 * tightness).ceil() as Time
}

/// `count` random workflows. Each is a chain over distinct, randomly ordered
/// stations; with probability `fork_probability` (and at least four tasks)
/// one step forks into two parallel tasks that join again. Sibling branches
/// finish within `max_dwell` of each other so the join stays reachable.
pub fn generate_workflows(params: &WorkloadParams, plant: &Plant) -> Result<Vec<CpWorkflow>, ParamsError> {
    params.validate(plant)?;
    let window = match params.arrivals {
        ArrivalProcess::AllAtZero => 0,
        ArrivalProcess::Uniform { mean_interarrival } => {
            (params.count as f64 * mean_interarrival).ceil().max(1.0) as Time
        }
    };
    let mut workflows: Vec<CpWorkflow> = (0..params.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let arrival = if window == 0 { 0 } else { rng.random_range(0..window) };
            let mut w = random_workflow(&mut rng, params, plant);
            w.id = WorkflowId(i as u32);
            w.arrival = arrival;
            w.deadline = deadline_for(&w, plant, params.tightness);
            w
        })
        .collect();
    // Order numbers follow submission order.
    workflows.sort_by_key(|w| (w.arrival, w.id));
    for (i, w) in workflows.iter_mut().enumerate() {
        w.id = WorkflowId(i as u32);
    }
    Ok(workflows)
}

fn random_workflow(rng: &mut ChaCha8Rng, params: &WorkloadParams, plant: &Plant) -> CpWorkflow {
    let k = rng.random_range(params.tasks_per_workflow.clone());
    let mut stations: Vec<&str> = plant.stations().iter().map(|s| s.name.as_str()).collect();
    stations.shuffle(rng);
    stations.truncate(k);
    let lead = |name: &str| plant.transport_lead(plant.station(name).expect("plant station")) as i64;

    let fork_at = (k >= 4 && rng.random_bool(params.fork_probability)).then(|| rng.random_range(0..=k - 4));
    let (lo, hi) = (*params.duration.start(), *params.duration.end());
    let mut tasks: Vec<Task> = Vec::with_capacity(k);
    for (i, station) in stations.iter().enumerate() {
        let preds: Vec<u32> = match fork_at {
            Some(p) if i == p + 2 => vec![p as u32],
            Some(p) if i == p + 3 => vec![p as u32 + 1, p as u32 + 2],
            _ if i == 0 => vec![],
            _ => vec![i as u32 - 1],
        };
        let duration = match fork_at {
            Some(p) if i == p + 2 => {
                // Keep both branches' finishing times within max_dwell.
                let sibling = &tasks[p + 1];
                let target = lead(&sibling.station) + sibling.duration as i64 - lead(station);
                let slack = plant.max_dwell() as i64;
                let a = (target - slack).max(lo as i64) as Time;
                let b = (target + slack).min(hi as i64) as Time;
                if a <= b { rng.random_range(a..=b) } else { sibling.duration }
            }
            _ => rng.random_range(lo..=hi),
        };
        tasks.push(Task::new(i as u32, *station, duration, &preds));
    }
    CpWorkflow { id: WorkflowId(0), arrival: 0, deadline: 0, tasks }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub workflows: Vec<CpWorkflow>,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FileError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io { path: p.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| FileError::Json { path: p, source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let p = path.display().to_string();
    let text = serde_json::to_string_pretty(value).map_err(|source| FileError::Json { path: p.clone(), source })?;
    std::fs::write(path, text + "\n").map_err(|source| FileError::Io { path: p, source })
}

pub fn load_plant_config(path: &Path) -> Result<PlantConfig, FileError> {
    read_json(path)
}

pub fn save_plant_config(path: &Path, config: &PlantConfig) -> Result<(), FileError> {
    write_json(path, config)
}

pub fn load_workload(path: &Path) -> Result<Vec<CpWorkflow>, FileError> {
    read_json::<Workload>(path).map(|w| w.workflows)
}

pub fn save_workload(path: &Path, workflows: &[CpWorkflow]) -> Result<(), FileError> {
    write_json(path, &Workload { workflows: workflows.to_vec() })
}
