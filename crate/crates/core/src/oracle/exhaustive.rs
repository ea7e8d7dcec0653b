use super::collapse::CollapsedInstance;
use crate::problem::{check_constraints, Catalog, RequestId, Schedule, TaskId};
use std::collections::{BTreeMap, BTreeSet};

/// Optimum by enumerating every 0/1 assignment of each agent's surviving
/// tasks and combining agents over request-coverage masks. Returns `None`
/// when an agent has more than `max_tasks_per_agent` tasks or there are more
/// than 64 requests.
pub fn exhaustive_optimum(
    catalog: &Catalog,
    collapsed: &CollapsedInstance,
    max_tasks_per_agent: usize,
) -> Option<usize> {
    if collapsed.requests.len() > 64 {
        return None;
    }
    let bit: BTreeMap<RequestId, u32> = collapsed.requests.iter().enumerate().map(|(k, &r)| (r, k as u32)).collect();
    let mut per_agent: BTreeMap<u32, Vec<TaskId>> = BTreeMap::new();
    for &t in &collapsed.tasks {
        per_agent.entry(catalog.task(t).agent.0).or_default().push(t);
    }
    let mut reachable: BTreeSet<u64> = [0].into();
    for (agent, tasks) in per_agent {
        if tasks.len() > max_tasks_per_agent {
            return None;
        }
        let mut masks: BTreeSet<u64> = BTreeSet::new();
        for subset in 0u64..(1 << tasks.len()) {
            let chosen: Vec<TaskId> = (0..tasks.len()).filter(|k| subset >> k & 1 == 1).map(|k| tasks[k]).collect();
            let schedule = Schedule { agent: crate::problem::AgentId(agent), tasks: chosen.clone() };
            if check_constraints(&schedule, catalog).map(|v| v.is_feasible()).unwrap_or(false) {
                masks.insert(chosen.iter().fold(0u64, |m, &t| m | 1 << bit[&catalog.task(t).request]));
            }
        }
        reachable = reachable.iter().flat_map(|&a| masks.iter().map(move |&b| a | b)).collect();
    }
    reachable.iter().map(|m| m.count_ones() as usize).max()
}
