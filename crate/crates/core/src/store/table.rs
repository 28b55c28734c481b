use std::collections::BTreeMap;

use crate::domain::{Interval, ResourceId, Time};

use super::ReservationId;

/// Calendar of one resource.
///
/// Occupancy is kept as a canonical step function: `profile[k]` is the
/// number of concurrent holds on `[k, next key)`; the count before the first
/// key is zero, the last key always maps to zero and no two consecutive keys
/// carry the same count. Canonical form makes the profile a pure function of
/// the multiset of live intervals, so insert followed by remove restores the
/// exact prior state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeslotTable {
    resource: ResourceId,
    capacity: u32,
    entries: BTreeMap<(Time, ReservationId), Time>,
    profile: BTreeMap<Time, u32>,
    busy: u64,
}

impl TimeslotTable {
    pub fn new(resource: ResourceId, capacity: u32) -> Self {
        assert!(capacity >= 1, "timeslot table capacity must be positive");
        TimeslotTable { resource, capacity, entries: BTreeMap::new(), profile: BTreeMap::new(), busy: 0 }
    }

    pub fn resource(&self) -> ResourceId {
        self.resource
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Live reservations ordered by start, then id.
    pub fn entries(&self) -> impl Iterator<Item = (ReservationId, Interval)> + '_ {
        self.entries.iter().map(|(&(start, id), &end)| (id, Interval { start, end }))
    }

    /// Sum of held ticks over all entries.
    pub fn busy_ticks(&self) -> u64 {
        self.busy
    }

    /// Concurrent holds at instant `t`.
    pub fn count_at(&self, t: Time) -> u32 {
        self.profile.range(..=t).next_back().map_or(0, |(_, &c)| c)
    }

    /// Peak concurrent holds over `interval`.
    pub fn peak(&self, interval: Interval) -> u32 {
        let first = self.count_at(interval.start);
        self.profile
            .range(interval.start + 1..interval.end)
            .map(|(_, &c)| c)
            .fold(first, u32::max)
    }

    /// True iff one more hold over `interval` stays within capacity.
    pub fn is_feasible(&self, interval: Interval) -> bool {
        self.peak(interval) < self.capacity
    }

    /// Smallest start `s` with `not_before <= s <= max_start` such that
    /// `[s, s + duration)` is feasible. Only `not_before` and instants where
    /// occupancy drops (ends of existing holds) are ever tried.
    pub fn first_fit(&self, not_before: Time, duration: Time, max_start: Time) -> Option<Time> {
        debug_assert!(duration > 0);
        let mut s = not_before;
        loop {
            if s > max_start {
                return None;
            }
            match self.first_saturated(Interval::with_len(s, duration)) {
                None => return Some(s),
                Some(blocked) => {
                    // Canonical profiles end in a zero-count key, so a drop below
                    // capacity always exists past any saturated instant.
                    s = self
                        .profile
                        .range(blocked + 1..)
                        .find(|(_, &c)| c < self.capacity)
                        .map(|(&k, _)| k)
                        .expect("canonical profile ends at zero");
                }
            }
        }
    }

    /// Smallest feasible start in `[not_before, horizon - duration]`.
    pub fn earliest_feasible(&self, not_before: Time, duration: Time, horizon: Time) -> Option<Time> {
        let max_start = horizon.checked_sub(duration)?;
        self.first_fit(not_before, duration, max_start)
    }

    fn first_saturated(&self, interval: Interval) -> Option<Time> {
        if self.count_at(interval.start) >= self.capacity {
            return Some(interval.start);
        }
        self.profile
            .range(interval.start + 1..interval.end)
            .find(|(_, &c)| c >= self.capacity)
            .map(|(&k, _)| k)
    }

    /// Fraction of capacity-ticks held within `window`.
    pub fn utilization(&self, window: Interval) -> f64 {
        self.held_ticks(window) as f64 / (self.capacity as f64 * window.len() as f64)
    }

    /// Integral of occupancy over `window`.
    pub fn held_ticks(&self, window: Interval) -> u64 {
        let (Some((&first, _)), Some((&last, _))) = (self.profile.first_key_value(), self.profile.last_key_value())
        else {
            return 0;
        };
        if window.start <= first && window.end >= last {
            return self.busy;
        }
        let mut total = 0u64;
        let mut cursor = window.start;
        let mut count = self.count_at(window.start);
        for (&k, &c) in self.profile.range(window.start + 1..window.end) {
            total += count as u64 * (k - cursor);
            cursor = k;
            count = c;
        }
        total + count as u64 * (window.end - cursor)
    }

    pub(crate) fn add_entry(&mut self, id: ReservationId, interval: Interval) {
        self.entries.insert((interval.start, id), interval.end);
    }

    pub(crate) fn remove_entry(&mut self, id: ReservationId, interval: Interval) {
        self.entries.remove(&(interval.start, id));
    }

    pub(crate) fn occupy(&mut self, interval: Interval) {
        self.shift(interval, true);
        self.busy += interval.len();
    }

    pub(crate) fn vacate(&mut self, interval: Interval) {
        self.shift(interval, false);
        self.busy -= interval.len();
    }

    fn shift(&mut self, interval: Interval, up: bool) {
        let Interval { start, end } = interval;
        for key in [start, end] {
            if !self.profile.contains_key(&key) {
                let c = self.count_at(key);
                self.profile.insert(key, c);
            }
        }
        for (_, c) in self.profile.range_mut(start..end) {
            if up {
                *c += 1;
            } else {
                *c = c.checked_sub(1).expect("vacating an interval that was never occupied");
            }
        }
        for key in [start, end] {
            let before = self.profile.range(..key).next_back().map_or(0, |(_, &c)| c);
            if self.profile.get(&key) == Some(&before) {
                self.profile.remove(&key);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: Time, b: Time) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn table(cap: u32, holds: &[(Time, Time)]) -> TimeslotTable {
        let mut t = TimeslotTable::new(ResourceId(0), cap);
        for (i, &(a, b)) in holds.iter().enumerate() {
            t.occupy(iv(a, b));
            t.add_entry(ReservationId(i as u64), iv(a, b));
        }
        t
    }

    #[test]
    fn feasibility_examples() {
        assert!(table(1, &[]).is_feasible(iv(0, 10)));
        assert!(!table(1, &[(0, 10)]).is_feasible(iv(5, 15)));
        assert!(table(4, &[(0, 10); 3]).is_feasible(iv(0, 10)));
        assert!(!table(4, &[(0, 10); 4]).is_feasible(iv(0, 10)));
        assert!(table(1, &[(0, 10)]).is_feasible(iv(10, 20)));
    }

    #[test]
    fn earliest_feasible_examples() {
        assert_eq!(table(1, &[]).earliest_feasible(0, 10, 1000), Some(0));
        assert_eq!(table(1, &[(0, 10)]).earliest_feasible(0, 5, 1000), Some(10));
        assert_eq!(table(1, &[(0, 10), (20, 30)]).earliest_feasible(0, 10, 1000), Some(10));
        assert_eq!(table(1, &[(0, 10), (20, 30)]).earliest_feasible(0, 11, 1000), Some(30));
        assert_eq!(table(1, &[(0, 10)]).earliest_feasible(0, 10, 19), None);
        assert_eq!(table(1, &[]).earliest_feasible(0, 10, 5), None);
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(table(1, &[]).utilization(iv(0, 100)), 0.0);
        assert_eq!(table(1, &[(0, 100)]).utilization(iv(0, 100)), 1.0);
        assert_eq!(table(2, &[(0, 50)]).utilization(iv(0, 100)), 0.25);
        assert_eq!(table(1, &[(0, 100)]).utilization(iv(50, 60)), 1.0);
        assert_eq!(table(1, &[(10, 20), (30, 40)]).held_ticks(iv(15, 35)), 10);
    }

    #[test]
    fn occupy_vacate_restores_canonical_profile() {
        let mut t = table(3, &[(0, 10), (5, 20)]);
        let before = t.clone();
        t.occupy(iv(3, 12));
        t.occupy(iv(10, 15));
        t.vacate(iv(3, 12));
        t.vacate(iv(10, 15));
        assert_eq!(t, before);
    }

    proptest! {
        #[test]
        fn first_fit_matches_integer_scan(
            cap in 1u32..4,
            holds in proptest::collection::vec((0u64..150, 1u64..40), 0..10),
            not_before in 0u64..150,
            duration in 1u64..40,
        ) {
            let mut t = TimeslotTable::new(ResourceId(0), cap);
            for &(a, len) in &holds {
                let i = Interval::with_len(a, len);
                if t.is_feasible(i) {
                    t.occupy(i);
                }
            }
            let horizon = 200;
            let brute = (not_before..horizon)
                .filter(|&s| s + duration <= horizon)
                .find(|&s| (s..s + duration).all(|x| t.count_at(x) < cap));
            prop_assert_eq!(t.earliest_feasible(not_before, duration, horizon), brute);
        }
    }
}
