use super::{NetworkError, UserPair};

/// One switch setting held for the inclusive slot range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub start: u64,
    pub end: u64,
    pub pair: UserPair,
}

/// Time-ordered switch settings for both 1×N switches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingSchedule {
    entries: Vec<ScheduleEntry>,
}

impl RoutingSchedule {
    /// Sorts the entries by start slot and rejects inverted or overlapping ranges.
    pub fn new(mut entries: Vec<ScheduleEntry>) -> Result<Self, NetworkError> {
        entries.sort_by_key(|e| e.start);
        for e in &entries {
            if e.start > e.end {
                return Err(NetworkError::BadSchedule(format!(
                    "entry {}..={} is inverted",
                    e.start, e.end
                )));
            }
        }
        for w in entries.windows(2) {
            if w[1].start <= w[0].end {
                return Err(NetworkError::BadSchedule(format!(
                    "entries {}..={} and {}..={} overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(RoutingSchedule { entries })
    }

    /// The whole slot range `0..n_slots` routed to one pair.
    pub fn single(pair: UserPair, n_slots: u64) -> Self {
        if n_slots == 0 {
            return RoutingSchedule::default();
        }
        RoutingSchedule {
            entries: vec![ScheduleEntry {
                start: 0,
                end: n_slots - 1,
                pair,
            }],
        }
    }

    /// Consecutive windows of `slots_each` slots, one per pair, in order.
    pub fn round_robin(pairs: &[UserPair], slots_each: u64) -> Self {
        if slots_each == 0 {
            return RoutingSchedule::default();
        }
        let entries = pairs
            .iter()
            .enumerate()
            .map(|(i, &pair)| {
                let start = i as u64 * slots_each;
                ScheduleEntry {
                    start,
                    end: start + slots_each - 1,
                    pair,
                }
            })
            .collect();
        RoutingSchedule { entries }
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The pair the switches connect during `slot`, if any.
    pub fn route(&self, slot: u64) -> Option<UserPair> {
        let idx = self.entries.partition_point(|e| e.end < slot);
        self.entries
            .get(idx)
            .filter(|e| e.start <= slot)
            .map(|e| e.pair)
    }
}
