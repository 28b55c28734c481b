//! Advance-reservation store: one timeslot table per plant resource and an
//! all-or-nothing batch commit that acts as the single arbitration point
//! between schedulers.

mod shared;
mod table;

pub use shared::SharedStore;
pub use table::TimeslotTable;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

use crate::domain::{Interval, Plant, ResourceId, TaskId, Time, WorkflowId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReservationId(pub u64);

/// Which part of a task's chain a reservation covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Leg {
    #[serde(rename = "transport-main")]
    TransportMain,
    #[serde(rename = "transport-station")]
    TransportStation,
    #[serde(rename = "machining")]
    Machining,
    #[serde(rename = "buffering")]
    Buffering,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::TransportMain, Leg::TransportStation, Leg::Machining, Leg::Buffering];

    pub fn as_str(self) -> &'static str {
        match self {
            Leg::TransportMain => "transport-main",
            Leg::TransportStation => "transport-station",
            Leg::Machining => "machining",
            Leg::Buffering => "buffering",
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Owner {
    pub workflow: WorkflowId,
    pub task: TaskId,
    pub leg: Leg,
}

impl Owner {
    pub fn new(workflow: WorkflowId, task: TaskId, leg: Leg) -> Self {
        Owner { workflow, task, leg }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reservation {
    pub id: ReservationId,
    pub resource: ResourceId,
    pub interval: Interval,
    pub owner: Owner,
}

/// A reservation not yet admitted by the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReservationRequest {
    pub resource: ResourceId,
    pub interval: Interval,
    pub owner: Owner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub resource: ResourceId,
    pub interval: Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommitOutcome {
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitReport {
    pub outcome: CommitOutcome,
    /// Empty iff the commit succeeded.
    pub conflicts: Vec<Conflict>,
    /// Ids assigned to the batch entries, in batch order. Empty on failure.
    pub ids: Vec<ReservationId>,
}

impl CommitReport {
    pub fn is_success(&self) -> bool {
        self.outcome == CommitOutcome::Success
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("unknown resource index {0}")]
    UnknownResource(u32),
    #[error("owner {0:?} already holds a live reservation or repeats within the batch")]
    DuplicateOwner(Owner),
    #[error("unknown reservation {0:?}")]
    UnknownReservation(ReservationId),
    #[error("cannot truncate {interval} to end {new_end}: new end must lie in ({}, {}]", interval.start, interval.end)]
    InvalidTruncation { interval: Interval, new_end: Time },
}

/// All timeslot tables of a plant plus the reservation index.
#[derive(Clone, Debug)]
pub struct ReservationStore {
    tables: Vec<TimeslotTable>,
    reservations: BTreeMap<ReservationId, Reservation>,
    by_owner: BTreeMap<Owner, ReservationId>,
    next_id: u64,
}

/// Equality covers the observable state only; the id counter is excluded so
/// that a rolled-back store compares equal to its prior state.
impl PartialEq for ReservationStore {
    fn eq(&self, other: &Self) -> bool {
        self.tables == other.tables && self.reservations == other.reservations && self.by_owner == other.by_owner
    }
}

impl Eq for ReservationStore {}

impl ReservationStore {
    pub fn new(plant: &Plant) -> Self {
        let tables = plant
            .resources()
            .iter()
            .enumerate()
            .map(|(i, r)| TimeslotTable::new(ResourceId(i as u32), r.capacity))
            .collect();
        Self::from_tables(tables)
    }

    /// A store over explicit capacities, indexed `0..capacities.len()`.
    pub fn with_capacities(capacities: &[u32]) -> Self {
        let tables =
            capacities.iter().enumerate().map(|(i, &c)| TimeslotTable::new(ResourceId(i as u32), c)).collect();
        Self::from_tables(tables)
    }

    fn from_tables(tables: Vec<TimeslotTable>) -> Self {
        ReservationStore { tables, reservations: BTreeMap::new(), by_owner: BTreeMap::new(), next_id: 0 }
    }

    pub fn table(&self, resource: ResourceId) -> &TimeslotTable {
        &self.tables[resource.index()]
    }

    pub fn tables(&self) -> &[TimeslotTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.reservations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reservations.is_empty()
    }

    pub fn get(&self, id: ReservationId) -> Option<&Reservation> {
        self.reservations.get(&id)
    }

    pub fn by_owner(&self, owner: &Owner) -> Option<&Reservation> {
        self.by_owner.get(owner).and_then(|id| self.reservations.get(id))
    }

    /// Live reservations in id order.
    pub fn reservations(&self) -> impl Iterator<Item = &Reservation> {
        self.reservations.values()
    }

    /// Live reservations of one workflow ordered by (task, leg).
    pub fn workflow_reservations(&self, workflow: WorkflowId) -> Vec<&Reservation> {
        self.by_owner
            .range(owner_range(workflow, None))
            .filter_map(|(_, id)| self.reservations.get(id))
            .collect()
    }

    pub fn is_feasible(&self, resource: ResourceId, interval: Interval) -> bool {
        self.table(resource).is_feasible(interval)
    }

    pub fn earliest_feasible(
        &self,
        resource: ResourceId,
        not_before: Time,
        duration: Time,
        horizon: Time,
    ) -> Option<Time> {
        self.table(resource).earliest_feasible(not_before, duration, horizon)
    }

    pub fn utilization(&self, resource: ResourceId, window: Interval) -> f64 {
        self.table(resource).utilization(window)
    }

    /// Admits every request or none. Capacity conflicts are reported in the
    /// returned [`CommitReport`]; malformed batches are errors and leave the
    /// store untouched.
    pub fn commit_batch(&mut self, batch: &[ReservationRequest]) -> Result<CommitReport, StoreError> {
        let mut owners = std::collections::HashSet::new();
        for req in batch {
            if req.resource.index() >= self.tables.len() {
                return Err(StoreError::UnknownResource(req.resource.0));
            }
            if self.by_owner.contains_key(&req.owner) || !owners.insert(req.owner) {
                return Err(StoreError::DuplicateOwner(req.owner));
            }
        }

        let mut applied = Vec::with_capacity(batch.len());
        let mut conflicts = Vec::new();
        for req in batch {
            let table = &mut self.tables[req.resource.index()];
            if table.is_feasible(req.interval) {
                table.occupy(req.interval);
                applied.push(*req);
            } else {
                conflicts.push(Conflict { resource: req.resource, interval: req.interval });
            }
        }

        if !conflicts.is_empty() {
            for req in applied.iter().rev() {
                self.tables[req.resource.index()].vacate(req.interval);
            }
            return Ok(CommitReport { outcome: CommitOutcome::Failure, conflicts, ids: Vec::new() });
        }

        let mut ids = Vec::with_capacity(batch.len());
        for req in applied {
            let id = ReservationId(self.next_id);
            self.next_id += 1;
            self.tables[req.resource.index()].add_entry(id, req.interval);
            self.reservations
                .insert(id, Reservation { id, resource: req.resource, interval: req.interval, owner: req.owner });
            self.by_owner.insert(req.owner, id);
            ids.push(id);
        }
        Ok(CommitReport { outcome: CommitOutcome::Success, conflicts, ids })
    }

    /// Removes every live reservation of `workflow` (restricted to `task`
    /// when given). Returns the number removed.
    pub fn release(&mut self, workflow: WorkflowId, task: Option<TaskId>) -> usize {
        let doomed: Vec<(Owner, ReservationId)> =
            self.by_owner.range(owner_range(workflow, task)).map(|(&o, &id)| (o, id)).collect();
        for (owner, id) in &doomed {
            self.by_owner.remove(owner);
            let r = self.reservations.remove(id).expect("owner index in sync");
            let table = &mut self.tables[r.resource.index()];
            table.remove_entry(r.id, r.interval);
            table.vacate(r.interval);
        }
        doomed.len()
    }

    /// Shrinks a reservation to end at `new_end`. Growth is refused.
    pub fn truncate(&mut self, id: ReservationId, new_end: Time) -> Result<Reservation, StoreError> {
        let r = *self.reservations.get(&id).ok_or(StoreError::UnknownReservation(id))?;
        if new_end <= r.interval.start || new_end > r.interval.end {
            return Err(StoreError::InvalidTruncation { interval: r.interval, new_end });
        }
        if new_end == r.interval.end {
            return Ok(r);
        }
        let shrunk = Interval { start: r.interval.start, end: new_end };
        let cut = Interval { start: new_end, end: r.interval.end };
        let table = &mut self.tables[r.resource.index()];
        table.vacate(cut);
        table.remove_entry(id, r.interval);
        table.add_entry(id, shrunk);
        let updated = Reservation { interval: shrunk, ..r };
        self.reservations.insert(id, updated);
        Ok(updated)
    }
}

fn owner_range(workflow: WorkflowId, task: Option<TaskId>) -> std::ops::RangeInclusive<Owner> {
    let (lo, hi) = match task {
        Some(t) => (t, t),
        None => (TaskId(0), TaskId(u32::MAX)),
    };
    Owner::new(workflow, lo, Leg::TransportMain)..=Owner::new(workflow, hi, Leg::Buffering)
}
