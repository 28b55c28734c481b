use std::cmp::Ordering;
use thiserror::Error;

use crate::domain::{Interval, Plant, ResourceId, StationLayout, Task, Time};
use crate::store::ReservationStore;

use super::slot::{find_task_slot, ChainSlot, SlotWindow};
use super::{IsWeights, ResourceCombo};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no feasible resource combination")]
pub struct NoFeasibleCombo;

/// Outcome of integrated selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsChoice {
    pub combo: ResourceCombo,
    pub slot: ChainSlot,
    pub cost: f64,
}

pub(crate) fn load_window(not_before: Time, horizon: Time) -> Interval {
    Interval { start: not_before, end: horizon.max(not_before + 1) }
}

fn combo_for(plant: &Plant, station: &StationLayout, machine: ResourceId) -> ResourceCombo {
    ResourceCombo {
        machine,
        station_conveyor: station.conveyor,
        main_conveyor: plant.main_conveyor(),
        buffer: station.buffer,
    }
}

/// Lowest utilization over `window`, ties to the lowest id.
fn least_utilized(store: &ReservationStore, candidates: &[ResourceId], window: Interval) -> ResourceId {
    *candidates
        .iter()
        .min_by(|a, b| {
            store.utilization(**a, window).total_cmp(&store.utilization(**b, window)).then(a.cmp(b))
        })
        .expect("at least one candidate")
}

/// Detached selection. The machine is the station machine whose own table
/// admits the machining leg earliest (transport ignored); conveyors and
/// buffer are then chosen by lowest utilization, independently of the
/// machine.
pub fn select_resources_ds(
    task: &Task,
    plant: &Plant,
    store: &ReservationStore,
    not_before: Time,
    horizon: Time,
) -> Option<ResourceCombo> {
    let station = plant.station(&task.station)?;
    let machining_from = not_before + plant.transport_lead(station);
    let machine = station
        .machines
        .iter()
        .copied()
        .min_by_key(|&m| {
            let at = store.table(m).first_fit(machining_from, task.duration, Time::MAX - task.duration);
            (at.unwrap_or(Time::MAX), m)
        })
        .expect("stations have machines");
    let window = load_window(not_before, horizon);
    let station_conveyor = least_utilized(store, &[station.conveyor], window);
    let main_conveyor = least_utilized(store, &[plant.main_conveyor()], window);
    let buffer = least_utilized(store, &[station.buffer], window);
    Some(ResourceCombo { machine, station_conveyor, main_conveyor, buffer })
}

/// The detached pick followed by the station's other machines in ascending
/// utilization order: the retry sequence used when the detached combo has
/// no feasible chain. At most one entry per machine of the station.
pub fn ds_candidates(
    task: &Task,
    plant: &Plant,
    store: &ReservationStore,
    not_before: Time,
    horizon: Time,
) -> Vec<ResourceCombo> {
    let Some(first) = select_resources_ds(task, plant, store, not_before, horizon) else {
        return Vec::new();
    };
    let station = plant.station(&task.station).expect("resolved above");
    let window = load_window(not_before, horizon);
    let mut rest: Vec<(f64, ResourceId)> = station
        .machines
        .iter()
        .filter(|&&m| m != first.machine)
        .map(|&m| (store.utilization(m, window), m))
        .collect();
    rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let retries = station.machines.len();
    std::iter::once(first)
        .chain(rest.into_iter().map(|(_, m)| ResourceCombo { machine: m, ..first }))
        .take(retries)
        .collect()
}

/// Integrated selection. Every combination gets its earliest chain; the
/// cost is `alpha * (completion - not_before) / horizon + beta * mean
/// utilization` of the combination's four resources over
/// `[not_before, horizon)`. The cheapest wins, ties to the lowest machine id.
pub fn select_resources_is(
    task: &Task,
    plant: &Plant,
    store: &ReservationStore,
    window: SlotWindow,
    horizon: Time,
    weights: IsWeights,
) -> Result<IsChoice, NoFeasibleCombo> {
    let station = plant.station(&task.station).ok_or(NoFeasibleCombo)?;
    let load = load_window(window.not_before, horizon);
    let scale = horizon.max(1) as f64;
    let mut best: Option<IsChoice> = None;
    for &machine in &station.machines {
        let combo = combo_for(plant, station, machine);
        let Some(slot) = find_task_slot(task, combo, window, store, plant) else {
            continue;
        };
        let finish = (slot.completion() - window.not_before) as f64 / scale;
        let mean_util = [combo.main_conveyor, combo.station_conveyor, combo.machine, combo.buffer]
            .iter()
            .map(|&r| store.utilization(r, load))
            .sum::<f64>()
            / 4.0;
        let cost = weights.alpha * finish + weights.beta * mean_util;
        let better = match &best {
            None => true,
            Some(b) => match cost.total_cmp(&b.cost) {
                Ordering::Less => true,
                Ordering::Equal => combo.machine < b.combo.machine,
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some(IsChoice { combo, slot, cost });
        }
    }
    best.ok_or(NoFeasibleCombo)
}
