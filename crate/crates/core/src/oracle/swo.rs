use super::collapse::CollapsedInstance;
use super::{agent_of, empty_schedules, witness, OracleMethod, OracleSolution};
use crate::problem::{AgentSchedule, Catalog, RequestId, TaskId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwoParams {
    pub rounds: usize,
    /// Positions an unsatisfied request moves forward, as a fraction of the
    /// request count rounded up.
    pub jump_fraction: f64,
}

impl Default for SwoParams {
    fn default() -> Self {
        Self { rounds: 50, jump_fraction: 0.1 }
    }
}

/// Builds schedules in priority order, placing each request on its earliest
/// feasible surviving task across all agents.
fn construct(
    catalog: &Catalog,
    order: &[RequestId],
    cands: &dyn Fn(RequestId) -> Vec<TaskId>,
) -> (Vec<AgentSchedule>, BTreeSet<RequestId>) {
    let mut schedules = empty_schedules(catalog);
    let mut satisfied = BTreeSet::new();
    for &r in order {
        for t in cands(r) {
            let s = &mut schedules[agent_of(catalog, t).index()];
            if s.try_insert(catalog, t) {
                satisfied.insert(r);
                break;
            }
        }
    }
    (schedules, satisfied)
}

/// Squeaky wheel optimization over the collapsed instance: a lower bound on
/// the optimum. `warm_start` is an already feasible assignment that the
/// result never falls below; its satisfied requests lead the first priority
/// sequence.
pub fn swo(
    catalog: &Catalog,
    collapsed: &CollapsedInstance,
    params: SwoParams,
    warm_start: Option<&[TaskId]>,
) -> OracleSolution {
    let mut by_start: Vec<Vec<TaskId>> = Vec::new();
    let requests: Vec<RequestId> = collapsed.requests.iter().copied().collect();
    for &r in &requests {
        let mut v: Vec<TaskId> = collapsed.candidates(catalog, r).collect();
        v.sort_by(|a, b| catalog.task(*a).interval.start.total_cmp(&catalog.task(*b).interval.start).then(a.cmp(b)));
        by_start.push(v);
    }
    let slot = |r: RequestId| requests.binary_search(&r).expect("collapsed request");
    let cands = |r: RequestId| by_start[slot(r)].clone();
    let earliest = |r: RequestId| by_start[slot(r)].first().map_or(f64::INFINITY, |&t| catalog.task(t).interval.start);

    let mut best_schedules = empty_schedules(catalog);
    let mut best = 0usize;
    let mut leaders: Vec<RequestId> = Vec::new();
    if let Some(tasks) = warm_start {
        let mut sorted: Vec<TaskId> = tasks.iter().copied().filter(|&t| collapsed.contains(t)).collect();
        sorted.sort_by(|a, b| catalog.task(*a).interval.start.total_cmp(&catalog.task(*b).interval.start));
        let mut covered = BTreeSet::new();
        for t in sorted {
            let r = catalog.task(t).request;
            let s = &mut best_schedules[agent_of(catalog, t).index()];
            if !s.holds(r) && s.try_insert(catalog, t) && covered.insert(r) {
                leaders.push(r);
            }
        }
        best = covered.len();
    }

    let mut order: Vec<RequestId> = leaders.clone();
    let mut rest: Vec<RequestId> = requests.iter().copied().filter(|r| !leaders.contains(r)).collect();
    rest.sort_by(|a, b| earliest(*a).total_cmp(&earliest(*b)).then(a.cmp(b)));
    order.extend(rest);

    let jump = ((requests.len() as f64 * params.jump_fraction).ceil() as usize).max(1);
    let mut rounds = 0u64;
    for _ in 0..params.rounds {
        rounds += 1;
        let (schedules, satisfied) = construct(catalog, &order, &cands);
        if satisfied.len() > best {
            best = satisfied.len();
            best_schedules = schedules;
        }
        if satisfied.len() == requests.len() {
            break;
        }
        // unsatisfied requests jump ahead of everything `jump` places before them
        let mut keyed: Vec<(i64, usize, RequestId)> = order
            .iter()
            .enumerate()
            .map(|(pos, &r)| {
                let key = if satisfied.contains(&r) { 2 * pos as i64 } else { 2 * (pos as i64 - jump as i64) - 1 };
                (key, pos, r)
            })
            .collect();
        keyed.sort();
        order = keyed.into_iter().map(|(_, _, r)| r).collect();
    }
    OracleSolution {
        method: OracleMethod::Swo,
        satisfied: best,
        requests: requests.len(),
        proven: false,
        nodes: rounds,
        schedules: witness(&best_schedules),
    }
}
