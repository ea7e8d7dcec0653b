#![allow(dead_code)]

use dcosp::problem::{AgentSchedule, CatalogBuilder, ChangeEvent, DcospInstance, RequestId, TaskId, TASK_DURATION};
use dcosp::time::TimeInterval;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const HORIZON: f64 = 3_000.0;

/// Small bounds for exhaustively checkable instances.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub max_agents: u32,
    pub max_requests: u32,
    pub max_events: usize,
}

pub const TINY: Bounds = Bounds { max_agents: 8, max_requests: 20, max_events: 4 };

/// A random dynamic instance with crowded tasks, tight memory and a few
/// downlinks so that every constraint can bind.
pub fn random_dcosp(seed: u64, bounds: Bounds) -> DcospInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = rng.random_range(1..=bounds.max_agents);
    let n = rng.random_range(2..=bounds.max_requests);
    let mut b = CatalogBuilder::new(agents);
    b.memory(rng.random_range(40..=160));
    for a in 0..agents {
        // at most one contact per half horizon keeps them disjoint
        for half in 0..2 {
            if rng.random_bool(0.4) {
                continue;
            }
            let s = rng.random_range(0.0..HORIZON / 2.0 - 100.0) + half as f64 * HORIZON / 2.0;
            b.downlink(a, s, s + rng.random_range(20.0..100.0), rng.random_range(10..=80));
        }
    }
    let mut requests = Vec::new();
    for _ in 0..n {
        let ws = rng.random_range(0.0..HORIZON - 400.0).round();
        let we = (ws + rng.random_range(300.0..1_500.0)).min(HORIZON).round();
        let r = b.request(ws, we);
        for _ in 0..rng.random_range(1..=4) {
            let start = rng.random_range(ws..=we - TASK_DURATION).round();
            b.task(r, rng.random_range(0..agents), start, rng.random_range(1..=40));
        }
        requests.push(r);
    }
    let catalog = b.build();

    let mut unused: Vec<RequestId> = requests.clone();
    unused.shuffle(&mut rng);
    let initial: Vec<RequestId> = unused.split_off(unused.len() / 2);
    let mut active: BTreeSet<RequestId> = initial.iter().copied().collect();
    let mut times: Vec<f64> = (0..rng.random_range(0..=bounds.max_events))
        .map(|_| rng.random_range(1.0..HORIZON).round())
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut events = Vec::new();
    for time in times {
        let opens_later = |r: &RequestId| catalog.request(*r).window.start > time;
        let removed: Vec<RequestId> =
            active.iter().copied().filter(opens_later).filter(|_| rng.random_bool(0.3)).collect();
        let added: Vec<RequestId> = unused.iter().copied().filter(opens_later).filter(|_| rng.random_bool(0.5)).collect();
        unused.retain(|r| !added.contains(r));
        removed.iter().for_each(|r| {
            active.remove(r);
        });
        active.extend(added.iter().copied());
        events.push(ChangeEvent { time, added, removed, add_shortfall: 0, remove_shortfall: 0 });
    }
    DcospInstance::new(TimeInterval::new(0.0, HORIZON), catalog, initial, events).expect("generator respects the rules")
}

/// A random trace that a well-behaved solver could have produced: tasks that
/// have started are never withdrawn, new tasks start after the change time,
/// every snapshot is feasible and holds only active requests.
pub fn random_trace(d: &DcospInstance, seed: u64) -> Vec<Vec<TaskId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = &d.catalog;
    let mut schedules: Vec<AgentSchedule> = catalog.agent_ids().map(AgentSchedule::new).collect();
    let mut trace = Vec::new();
    for inst in d.instances() {
        let now = inst.horizon.start;
        for s in &mut schedules {
            let drop_some = rng.random_bool(0.5);
            let coin: Vec<bool> = (0..s.len()).map(|_| rng.random_bool(0.5)).collect();
            let mut i = 0;
            s.remove_where(catalog, |t| {
                let task = catalog.task(t);
                let frozen = task.interval.start <= now;
                let flip = coin.get(i).copied().unwrap_or(false);
                i += 1;
                !frozen && (!inst.active.contains(&task.request) || (drop_some && flip))
            });
            let mut cands: Vec<TaskId> = catalog
                .tasks_of_agent(s.agent())
                .iter()
                .copied()
                .filter(|&t| {
                    let task = catalog.task(t);
                    inst.active.contains(&task.request) && task.interval.start > now
                })
                .collect();
            cands.shuffle(&mut rng);
            for t in cands {
                if !s.holds(catalog.task(t).request) && rng.random_bool(0.6) {
                    s.try_insert(catalog, t);
                }
            }
        }
        let mut snap: Vec<TaskId> = schedules.iter().flat_map(|s| s.tasks().iter().copied()).collect();
        snap.sort();
        trace.push(snap);
    }
    trace
}

/// Independent event-replay interpreter: walks the change events and counts a
/// request once some snapshot taken while it was active schedules one of its
/// tasks inside that snapshot's validity window.
pub fn replay_satisfied(d: &DcospInstance, trace: &[Vec<TaskId>]) -> usize {
    let mut active: BTreeSet<RequestId> = d.initial.iter().copied().collect();
    let mut satisfied: BTreeSet<RequestId> = BTreeSet::new();
    let mut from = d.horizon.start;
    for (t, snap) in trace.iter().enumerate() {
        if t > 0 {
            let e = &d.events[t - 1];
            for r in &e.removed {
                active.remove(r);
            }
            active.extend(e.added.iter().copied());
            from = e.time;
        }
        let until = d.events.get(t).map_or(d.horizon.end, |e| e.time);
        for &k in snap {
            let task = d.catalog.task(k);
            let (s, e) = (task.interval.start, task.interval.end);
            if active.contains(&task.request) && s <= until && e >= from {
                satisfied.insert(task.request);
            }
        }
    }
    satisfied.len()
}
