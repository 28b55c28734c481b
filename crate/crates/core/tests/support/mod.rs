//! Brute-force oracles shared by the integration tests. Nothing here goes
//! through the reservation store or the trace verifier.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fmsched::domain::{
    BufferSpec, ConveyorSpec, CpWorkflow, Plant, PlantConfig, ResourceId, StationSpec, Task, TaskId, Time, WorkflowId,
};
use fmsched::sched::ExecutableWorkflow;
use fmsched::store::Leg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two stations, main hop 2 ticks, station conveyor 1 tick.
pub fn tiny_plant(rng: &mut ChaCha8Rng) -> Plant {
    let stations = ["P", "Q"]
        .iter()
        .map(|s| StationSpec {
            id: s.to_string(),
            machines: (0..rng.random_range(1..=2)).map(|m| format!("{s}{m}")).collect(),
            buffer: BufferSpec { id: format!("{s}-buf"), capacity: rng.random_range(1..=2) },
            conveyor: ConveyorSpec { id: format!("{s}-conv"), capacity: rng.random_range(1..=2), transit: 1 },
        })
        .collect();
    let config = PlantConfig {
        stations,
        main_conveyor: ConveyorSpec { id: "main".into(), capacity: rng.random_range(1..=2), transit: 2 },
        max_dwell: rng.random_range(2..=8),
        unload_dwell: 2,
    };
    Plant::new(config).expect("tiny plant is valid")
}

/// Up to three tasks on two stations with random precedences.
pub fn tiny_workflow(rng: &mut ChaCha8Rng, id: u32) -> CpWorkflow {
    let n = rng.random_range(1..=3u32);
    let tasks = (0..n)
        .map(|i| {
            let preds: Vec<u32> = (0..i).filter(|_| rng.random_bool(0.5)).collect();
            let station = if rng.random_bool(0.5) { "P" } else { "Q" };
            Task::new(i, station, rng.random_range(3..=40), &preds)
        })
        .collect();
    let arrival = rng.random_range(0..=40);
    let deadline = (arrival + rng.random_range(5..=160)).min(200);
    CpWorkflow { id: WorkflowId(id), arrival, deadline, tasks }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-tick occupancy scan of every reservation of `schedules`, plus
/// leg alignment, leg lengths, precedence with the dwell window, buffer
/// hand-off and deadlines. Returns a description of the first problem.
pub fn recheck(schedules: &[ExecutableWorkflow], plant: &Plant) -> Result<(), String> {
    let mut ticks: BTreeMap<(ResourceId, Time), u32> = BTreeMap::new();
    for s in schedules {
        let w = &s.workflow;
        let mut mend: BTreeMap<TaskId, Time> = BTreeMap::new();
        for t in &w.tasks {
            let chain = s.chains.get(&t.id).ok_or(format!("wf {} task {} unscheduled", w.id.0, t.id.0))?;
            let legs = chain.legs();
            let station = plant.station(&t.station).unwrap();
            let expected = [
                (Leg::TransportMain, plant.main_conveyor(), plant.main_transit()),
                (Leg::TransportStation, station.conveyor, station.conveyor_transit),
            ];
            for (i, (leg, res, len)) in expected.into_iter().enumerate() {
                let r = legs[i];
                if r.owner.leg != leg || r.resource != res || r.interval.end - r.interval.start != len {
                    return Err(format!("wf {} task {} bad {leg}", w.id.0, t.id.0));
                }
            }
            if !station.machines.contains(&chain.machining.resource)
                || chain.machining.interval.end - chain.machining.interval.start != t.duration
                || chain.buffering.resource != station.buffer
            {
                return Err(format!("wf {} task {} bad machining/buffer", w.id.0, t.id.0));
            }
            for i in 1..4 {
                if legs[i - 1].interval.end != legs[i].interval.start {
                    return Err(format!("wf {} task {} misaligned", w.id.0, t.id.0));
                }
            }
            let hold = chain.buffering.interval.end - chain.buffering.interval.start;
            if hold == 0 || hold > plant.max_dwell() {
                return Err(format!("wf {} task {} buffer hold {hold}", w.id.0, t.id.0));
            }
            if legs[0].interval.start < w.arrival || chain.machining.interval.end > w.deadline {
                return Err(format!("wf {} task {} outside [arrival, deadline]", w.id.0, t.id.0));
            }
            for r in legs {
                for tick in r.interval.start..r.interval.end {
                    *ticks.entry((r.resource, tick)).or_insert(0) += 1;
                }
            }
            mend.insert(t.id, chain.machining.interval.end);
        }
        for t in &w.tasks {
            let start = s.chains[&t.id].transport_main.interval.start;
            for p in &t.predecessors {
                if start < mend[p] || start > mend[p] + plant.max_dwell() {
                    return Err(format!("wf {} task {} breaks precedence on {}", w.id.0, t.id.0, p.0));
                }
                if s.chains[p].buffering.interval.end < start {
                    return Err(format!("wf {} task {} picked up after buffer release", w.id.0, t.id.0));
                }
            }
        }
    }
    for ((res, tick), n) in ticks {
        if n > plant.resource(res).capacity {
            return Err(format!("resource {} holds {n} at t={tick}", res.0));
        }
    }
    Ok(())
}

/// Exhaustive search for any schedule of `w` alone on an empty plant:
/// every machine of each task's station and every integer transport start,
/// with the same buffer-hold rule as the schedulers (held until the last
/// successor leaves, at least one tick; `unload_dwell` for terminal tasks).
pub fn lone_feasible(w: &CpWorkflow, plant: &Plant) -> bool {
    let order = topo(w);
    let span = w.deadline as usize + plant.max_dwell() as usize + 2;
    let mut occ = vec![vec![0u32; span]; plant.resources().len()];
    let mut placed: BTreeMap<TaskId, (Time, Time)> = BTreeMap::new();
    dfs(w, plant, &order, 0, &mut occ, &mut placed)
}

fn topo(w: &CpWorkflow) -> Vec<TaskId> {
    let mut order = Vec::new();
    let mut left: Vec<&Task> = w.tasks.iter().collect();
    while !left.is_empty() {
        let i = left.iter().position(|t| t.predecessors.iter().all(|p| order.contains(p))).expect("acyclic");
        order.push(left.remove(i).id);
    }
    order
}

fn add(occ: &mut [Vec<u32>], res: ResourceId, from: Time, to: Time, plant: &Plant) -> bool {
    let cap = plant.resource(res).capacity;
    let row = &mut occ[res.index()];
    let mut ok = true;
    for t in from..to {
        row[t as usize] += 1;
        ok &= row[t as usize] <= cap;
    }
    ok
}

fn remove(occ: &mut [Vec<u32>], res: ResourceId, from: Time, to: Time) {
    for t in from..to {
        occ[res.index()][t as usize] -= 1;
    }
}

fn dfs(
    w: &CpWorkflow,
    plant: &Plant,
    order: &[TaskId],
    depth: usize,
    occ: &mut Vec<Vec<u32>>,
    placed: &mut BTreeMap<TaskId, (Time, Time)>,
) -> bool {
    let Some(&id) = order.get(depth) else { return true };
    let task = w.tasks.iter().find(|t| t.id == id).unwrap();
    let station = plant.station(&task.station).unwrap();
    let lead = plant.main_transit() + station.conveyor_transit;
    let (lo, hi) = if task.predecessors.is_empty() {
        (w.arrival, w.deadline)
    } else {
        let ends: Vec<Time> = task.predecessors.iter().map(|p| placed[p].1).collect();
        (*ends.iter().max().unwrap(), ends.iter().min().unwrap() + plant.max_dwell())
    };
    let successors = |t: TaskId| w.tasks.iter().filter(move |s| s.predecessors.contains(&t)).map(|s| s.id);
    for start in lo..=hi {
        let mend = start + lead + task.duration;
        if mend > w.deadline {
            break;
        }
        for &machine in &station.machines {
            let legs = [
                (plant.main_conveyor(), start, start + plant.main_transit()),
                (station.conveyor, start + plant.main_transit(), start + lead),
                (machine, start + lead, mend),
            ];
            let mut added: Vec<(ResourceId, Time, Time)> = Vec::new();
            let mut ok = true;
            for (r, a, b) in legs {
                ok &= add(occ, r, a, b, plant);
                added.push((r, a, b));
            }
            placed.insert(id, (start, mend));
            if successors(id).next().is_none() {
                ok &= add(occ, station.buffer, mend, mend + plant.unload_dwell(), plant);
                added.push((station.buffer, mend, mend + plant.unload_dwell()));
            }
            for p in &task.predecessors {
                let succ: Vec<TaskId> = successors(*p).collect();
                if succ.iter().all(|s| placed.contains_key(s)) {
                    let pend = placed[p].1;
                    let release = succ.iter().map(|s| placed[s].0).max().unwrap().max(pend + 1);
                    let pst = plant.station(&w.tasks.iter().find(|t| t.id == *p).unwrap().station).unwrap();
                    ok &= add(occ, pst.buffer, pend, release, plant);
                    added.push((pst.buffer, pend, release));
                }
            }
            if ok && dfs(w, plant, order, depth + 1, occ, placed) {
                return true;
            }
            placed.remove(&id);
            for (r, a, b) in added {
                remove(occ, r, a, b);
            }
        }
    }
    false
}
