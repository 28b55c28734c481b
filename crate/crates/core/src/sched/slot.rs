use crate::domain::{Interval, Plant, Task, Time};
use crate::store::{Leg, ReservationStore};

use super::ResourceCombo;

/// Bounds on where a task's chain may be placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotWindow {
    /// Earliest main-conveyor start.
    pub not_before: Time,
    /// Latest main-conveyor start allowed by predecessor buffer holds.
    pub latest_start: Option<Time>,
    /// Machining must end by this instant.
    pub deadline: Time,
}

impl SlotWindow {
    pub fn new(not_before: Time, deadline: Time) -> Self {
        SlotWindow { not_before, latest_start: None, deadline }
    }
}

/// Uncommitted placement of a task's four legs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSlot {
    pub combo: ResourceCombo,
    pub transport_main: Interval,
    pub transport_station: Interval,
    pub machining: Interval,
    pub buffering: Interval,
}

impl ChainSlot {
    pub fn start(&self) -> Time {
        self.transport_main.start
    }

    pub fn completion(&self) -> Time {
        self.machining.end
    }

    pub fn legs(&self) -> [(Leg, crate::domain::ResourceId, Interval); 4] {
        [
            (Leg::TransportMain, self.combo.main_conveyor, self.transport_main),
            (Leg::TransportStation, self.combo.station_conveyor, self.transport_station),
            (Leg::Machining, self.combo.machine, self.machining),
            (Leg::Buffering, self.combo.buffer, self.buffering),
        ]
    }
}

/// Earliest aligned chain for `task` on `combo`.
///
/// Legs are placed back to back from a common start `T`: main conveyor
/// `[T, T+tm)`, station conveyor `[T+tm, T+tm+ts)`, machining for the task
/// duration, then a buffer hold of `max_dwell`. Each round asks every leg's
/// table for its first fit at the leg's offset; any leg that must move later
/// pushes `T` and the round restarts. Because each table's first fit is a
/// lower bound for that leg, the first `T` accepted by all four is the
/// earliest feasible one.
pub fn find_task_slot(
    task: &Task,
    combo: ResourceCombo,
    window: SlotWindow,
    store: &ReservationStore,
    plant: &Plant,
) -> Option<ChainSlot> {
    let station = plant.station(&task.station)?;
    let tm = plant.main_transit();
    let ts = station.conveyor_transit;
    let lead = tm + ts;
    let dwell = plant.max_dwell();

    let mut max_start = window.deadline.checked_sub(lead + task.duration)?;
    if let Some(latest) = window.latest_start {
        max_start = max_start.min(latest);
    }

    let legs = [
        (combo.main_conveyor, 0, tm),
        (combo.station_conveyor, tm, ts),
        (combo.machine, lead, task.duration),
        (combo.buffer, lead + task.duration, dwell),
    ];

    let mut start = window.not_before;
    'search: loop {
        if start > max_start {
            return None;
        }
        for &(resource, offset, len) in &legs {
            let fit = store.table(resource).first_fit(start + offset, len, max_start + offset)?;
            if fit > start + offset {
                start = fit - offset;
                continue 'search;
            }
        }
        let machining_start = start + lead;
        let machining_end = machining_start + task.duration;
        return Some(ChainSlot {
            combo,
            transport_main: Interval::with_len(start, tm),
            transport_station: Interval::with_len(start + tm, ts),
            machining: Interval::new(machining_start, machining_end)?,
            buffering: Interval::with_len(machining_end, dwell),
        });
    }
}
