//! Single-agent schedule operations shared by every solver.

use crate::problem::{AgentId, AgentSchedule, Catalog, RequestId, TaskId};
use crate::rng::Rng;
use crate::time::Seconds;
use rand::seq::SliceRandom;
use std::collections::BTreeMap;

/// True once a task has started: it can no longer be added or removed.
pub fn is_frozen(catalog: &Catalog, task: TaskId, now: Seconds) -> bool {
    catalog.task(task).interval.start <= now
}

/// An agent's schedulable tasks at one event, grouped by request and sorted by start.
#[derive(Clone, Debug, Default)]
pub struct Candidates {
    by_request: BTreeMap<RequestId, Vec<TaskId>>,
    all: Vec<TaskId>,
}

impl Candidates {
    /// Tasks of `agent` that start after `now`, are not blocked, and whose
    /// request passes `admit`.
    pub fn new(catalog: &Catalog, agent: AgentId, now: Seconds, admit: impl Fn(RequestId) -> bool) -> Self {
        let mut by_request: BTreeMap<RequestId, Vec<TaskId>> = BTreeMap::new();
        let mut all = Vec::new();
        for &t in catalog.tasks_of_agent(agent) {
            let task = catalog.task(t);
            if task.interval.start > now && !catalog.is_blocked(t) && admit(task.request) {
                by_request.entry(task.request).or_default().push(t);
                all.push(t);
            }
        }
        Self { by_request, all }
    }

    pub fn requests(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.by_request.keys().copied()
    }

    pub fn has(&self, r: RequestId) -> bool {
        self.by_request.contains_key(&r)
    }

    pub fn of(&self, r: RequestId) -> &[TaskId] {
        self.by_request.get(&r).map_or(&[], Vec::as_slice)
    }

    /// Every candidate, by ascending start.
    pub fn tasks(&self) -> &[TaskId] {
        &self.all
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted(TaskId),
    Swapped { inserted: TaskId, removed: TaskId },
    NotInserted,
}

impl InsertOutcome {
    pub fn changed(self) -> bool {
        self != InsertOutcome::NotInserted
    }
}

/// The removable task whose start is closest to `start`; ties go to the
/// larger volume, then the lower id.
fn closest_removable(schedule: &AgentSchedule, catalog: &Catalog, start: Seconds, now: Seconds) -> Option<TaskId> {
    schedule
        .tasks()
        .iter()
        .copied()
        .filter(|&t| !is_frozen(catalog, t, now))
        .min_by(|&a, &b| {
            let (ta, tb) = (catalog.task(a), catalog.task(b));
            let (da, db) = ((ta.interval.start - start).abs(), (tb.interval.start - start).abs());
            da.total_cmp(&db).then(tb.volume.cmp(&ta.volume)).then(a.cmp(&b))
        })
}

/// Tries to schedule one of `candidates` (all for the same request, sorted by
/// start). A directly feasible candidate wins; otherwise each candidate in
/// turn may displace the single closest-start task.
pub fn schedule_insert(
    schedule: &mut AgentSchedule,
    catalog: &Catalog,
    candidates: &[TaskId],
    now: Seconds,
    ops: &mut u64,
) -> InsertOutcome {
    for &t in candidates {
        *ops += 1;
        if schedule.can_insert(catalog, t) {
            schedule.insert(catalog, t);
            return InsertOutcome::Inserted(t);
        }
    }
    for &t in candidates {
        let start = catalog.task(t).interval.start;
        let Some(victim) = closest_removable(schedule, catalog, start, now) else {
            return InsertOutcome::NotInserted;
        };
        schedule.remove(catalog, victim);
        *ops += 1;
        if schedule.can_insert(catalog, t) {
            schedule.insert(catalog, t);
            return InsertOutcome::Swapped { inserted: t, removed: victim };
        }
        schedule.insert(catalog, victim);
    }
    InsertOutcome::NotInserted
}

/// Drops unfrozen tasks whose request fails `keep`, then walks a shuffled
/// copy of `candidates` (tasks biased to this agent first) and inserts every
/// feasible task whose request the schedule does not hold yet.
pub fn repair(
    schedule: &mut AgentSchedule,
    catalog: &Catalog,
    candidates: &[TaskId],
    keep: impl Fn(RequestId) -> bool,
    biased: impl Fn(RequestId) -> bool,
    now: Seconds,
    rng: &mut Rng,
    ops: &mut u64,
) -> usize {
    let mut changes =
        schedule.remove_where(catalog, |t| !is_frozen(catalog, t, now) && !keep(catalog.task(t).request));
    let mut order: Vec<TaskId> = candidates.iter().copied().filter(|&t| keep(catalog.task(t).request)).collect();
    *ops += order.len() as u64;
    order.shuffle(rng);
    let (mut first, rest): (Vec<TaskId>, Vec<TaskId>) = order.into_iter().partition(|&t| biased(catalog.task(t).request));
    first.extend(rest);
    for t in first {
        if schedule.holds(catalog.task(t).request) {
            continue;
        }
        *ops += 1;
        if schedule.try_insert(catalog, t) {
            changes += 1;
        }
    }
    changes
}
