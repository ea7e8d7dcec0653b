//! Event-driven execution of every solver over a DCOSP timeline.

use super::local::{is_frozen, repair, schedule_insert, Candidates, InsertOutcome};
use super::{stochastic_update, update_probability, SolverKind, SolverParams, WCounting};
use crate::config::Seeds;
use crate::decomposition::{gnd, single_neighborhood, Decomposition, GndParams};
use crate::problem::{AgentId, AgentSchedule, Catalog, CospInstance, DcospInstance, RequestId, TaskId};
use crate::rng::{stream, Rng};
use crate::time::Seconds;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Fixed per-message overhead in bytes.
pub const MESSAGE_HEADER_BYTES: u64 = 16;
/// Request id plus one flag byte.
pub const MESSAGE_ENTRY_BYTES: u64 = 9;

/// State after one search iteration (iteration 0 is the post-repair state).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    /// Active requests held by at least one schedule.
    pub held: usize,
    pub messages: u64,
    pub bytes: u64,
    /// Member counts of the neighborhoods that were still searching.
    pub searching_sizes: Vec<usize>,
    /// Total operation count over all agents after the iteration.
    pub ops: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub rows: Vec<IterationRow>,
    pub neighborhood_sizes: Vec<usize>,
    /// Largest allocated request set |R_N|.
    pub max_allocated: usize,
    pub unallocatable: usize,
    pub active_requests: usize,
}

struct AgentState {
    id: AgentId,
    schedule: AgentSchedule,
    assigned: BTreeSet<RequestId>,
    rng: Rng,
    repair_rng: Rng,
    random_rng: Rng,
    ops: u64,
    cands: Candidates,
}

/// Runs one solver across the change events of a scenario.
pub struct Engine {
    kind: SolverKind,
    params: SolverParams,
    gnd: GndParams,
    agents: Vec<AgentState>,
}

struct Shared<'a> {
    catalog: &'a Catalog,
    decomposition: &'a Decomposition,
    executed: &'a [BTreeSet<RequestId>],
    now: Seconds,
}

impl Engine {
    pub fn new(kind: SolverKind, params: SolverParams, seeds: &Seeds, agent_count: usize) -> Self {
        let agents = (0..agent_count as u32)
            .map(|k| AgentState {
                id: AgentId(k),
                schedule: AgentSchedule::new(AgentId(k)),
                assigned: BTreeSet::new(),
                rng: stream(seeds.solver, u64::from(k)),
                repair_rng: stream(seeds.repair, u64::from(k)),
                random_rng: stream(seeds.random_solver, u64::from(k)),
                ops: 0,
                cands: Candidates::default(),
            })
            .collect();
        let gnd = GndParams {
            n: params.gnd_n,
            neighborhood_size: params.neighborhood_size,
            tile_deg: params.tile_deg,
            seed: seeds.gnd,
        };
        Self { kind, params, gnd, agents }
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    pub fn schedules(&self) -> impl Iterator<Item = &AgentSchedule> {
        self.agents.iter().map(|a| &a.schedule)
    }

    /// Every scheduled task, sorted.
    pub fn snapshot(&self) -> Vec<TaskId> {
        let mut out: Vec<TaskId> = self.agents.iter().flat_map(|a| a.schedule.tasks().iter().copied()).collect();
        out.sort();
        out
    }

    pub fn ops(&self) -> Vec<u64> {
        self.agents.iter().map(|a| a.ops).collect()
    }

    fn total_ops(&self) -> u64 {
        self.agents.iter().map(|a| a.ops).sum()
    }

    fn held(&self, active: &BTreeSet<RequestId>) -> usize {
        let held: BTreeSet<RequestId> = self.agents.iter().flat_map(|a| a.schedule.requests()).collect();
        held.intersection(active).count()
    }

    /// Advances to instance `inst` and returns the per-iteration record.
    pub fn step(&mut self, dcosp: &DcospInstance, inst: &CospInstance) -> StepReport {
        if self.kind.is_iterative() {
            self.search_step(dcosp, inst)
        } else {
            self.baseline_step(&dcosp.catalog, inst)
        }
    }

    fn baseline_step(&mut self, catalog: &Catalog, inst: &CospInstance) -> StepReport {
        let now = inst.horizon.start;
        let active = &inst.active;
        let shuffle = self.kind == SolverKind::Random;
        self.agents.par_iter_mut().for_each(|ag| {
            ag.schedule.remove_where(catalog, |t| {
                !is_frozen(catalog, t, now) && !active.contains(&catalog.task(t).request)
            });
            let cands = Candidates::new(catalog, ag.id, now, |r| active.contains(&r));
            let mut order = cands.tasks().to_vec();
            if shuffle {
                ag.ops += order.len() as u64;
                order.shuffle(&mut ag.random_rng);
            }
            for t in order {
                if !ag.schedule.holds(catalog.task(t).request) {
                    ag.ops += 1;
                    ag.schedule.try_insert(catalog, t);
                }
            }
        });
        StepReport {
            rows: vec![IterationRow {
                iteration: 0,
                held: self.held(active),
                messages: 0,
                bytes: 0,
                searching_sizes: Vec::new(),
                ops: self.total_ops(),
            }],
            neighborhood_sizes: Vec::new(),
            max_allocated: 0,
            unallocatable: 0,
            active_requests: active.len(),
        }
    }

    fn search_step(&mut self, dcosp: &DcospInstance, inst: &CospInstance) -> StepReport {
        let catalog = &dcosp.catalog;
        let now = inst.horizon.start;
        let active = &inst.active;
        let decomposition = if self.kind.is_decomposed() {
            gnd(catalog, &dcosp.targets, active, now, &self.gnd).expect("validated parameters")
        } else {
            single_neighborhood(catalog, active, now)
        };
        let membership = decomposition.membership(self.agents.len());
        let nbs = &decomposition.neighborhoods;

        if self.kind.restarts() {
            for ag in &mut self.agents {
                ag.schedule.remove_where(catalog, |t| !is_frozen(catalog, t, now));
                ag.assigned.clear();
            }
        }

        // requests some member has already started serving
        let executed: Vec<BTreeSet<RequestId>> = nbs
            .iter()
            .map(|nb| {
                nb.members
                    .iter()
                    .flat_map(|a| self.agents[a.index()].schedule.tasks().iter().copied())
                    .filter(|&t| is_frozen(catalog, t, now))
                    .map(|t| catalog.task(t).request)
                    .filter(|r| nb.requests.contains(r))
                    .collect()
            })
            .collect();

        let shared = Shared { catalog, decomposition: &decomposition, executed: &executed, now };
        let restarts = self.kind.restarts();
        self.agents.par_iter_mut().for_each(|ag| {
            let k = membership[ag.id.index()];
            let nb = &shared.decomposition.neighborhoods[k];
            let done = &shared.executed[k];
            let keep = |r: RequestId| nb.requests.contains(&r) && !done.contains(&r);
            ag.cands = Candidates::new(catalog, ag.id, now, keep);
            let me = ag.id;
            repair(
                &mut ag.schedule,
                catalog,
                ag.cands.tasks(),
                keep,
                |r| nb.bias.get(&r) == Some(&me),
                now,
                &mut ag.repair_rng,
                &mut ag.ops,
            );
            if restarts {
                ag.assigned.clear();
            } else {
                let cands = &ag.cands;
                ag.assigned.retain(|&r| cands.has(r));
            }
            let held: Vec<RequestId> = ag.schedule.requests().filter(|&r| ag.cands.has(r)).collect();
            ag.assigned.extend(held);
        });

        let mut rows = vec![IterationRow {
            iteration: 0,
            held: self.held(active),
            messages: 0,
            bytes: 0,
            searching_sizes: Vec::new(),
            ops: self.total_ops(),
        }];
        let mut converged = vec![false; nbs.len()];
        for iteration in 1..=self.params.max_iters {
            let searching: Vec<usize> = (0..nbs.len()).filter(|&k| !converged[k]).collect();
            if searching.is_empty() {
                break;
            }
            // message exchange: each member reports its scheduled or executed requests in R_N
            let flags: Vec<BTreeSet<RequestId>> = self
                .agents
                .iter()
                .map(|ag| {
                    let nb = &nbs[membership[ag.id.index()]];
                    ag.schedule.requests().filter(|r| nb.requests.contains(r)).collect()
                })
                .collect();
            let mut counts: Vec<BTreeMap<RequestId, u32>> = vec![BTreeMap::new(); nbs.len()];
            let (mut messages, mut bytes) = (0u64, 0u64);
            for &k in &searching {
                let m = nbs[k].members.len() as u64;
                for a in &nbs[k].members {
                    for &r in &flags[a.index()] {
                        *counts[k].entry(r).or_default() += 1;
                    }
                    let size = MESSAGE_HEADER_BYTES + MESSAGE_ENTRY_BYTES * flags[a.index()].len() as u64;
                    messages += m - 1;
                    bytes += (m - 1) * size;
                    self.agents[a.index()].ops += m - 1;
                }
            }

            let p_u = self.params.p_u;
            let w_counting = self.params.w_counting;
            let changed: Vec<bool> = self
                .agents
                .par_iter_mut()
                .map(|ag| {
                    let k = membership[ag.id.index()];
                    if converged[k] {
                        return false;
                    }
                    update_agent(ag, &shared, &shared.executed[k], &counts[k], &flags[ag.id.index()], p_u, w_counting)
                })
                .collect();
            for &k in &searching {
                let quiet = nbs[k].members.iter().all(|a| !changed[a.index()]);
                converged[k] = quiet && !self.params.fixed_iterations;
            }
            rows.push(IterationRow {
                iteration,
                held: self.held(active),
                messages,
                bytes,
                searching_sizes: searching.iter().map(|&k| nbs[k].members.len()).collect(),
                ops: self.total_ops(),
            });
        }

        StepReport {
            rows,
            neighborhood_sizes: nbs.iter().map(|n| n.members.len()).collect(),
            max_allocated: nbs.iter().map(|n| n.requests.len()).max().unwrap_or(0),
            unallocatable: decomposition.unallocatable.len(),
            active_requests: active.len(),
        }
    }
}

/// One agent's pass over its shuffled subproblem. Returns whether any
/// assignment or schedule entry changed.
fn update_agent(
    ag: &mut AgentState,
    shared: &Shared<'_>,
    k_executed: &BTreeSet<RequestId>,
    counts: &BTreeMap<RequestId, u32>,
    reported: &BTreeSet<RequestId>,
    p_u: f64,
    w_counting: WCounting,
) -> bool {
    let catalog = shared.catalog;
    let mut order: Vec<RequestId> = ag.cands.requests().collect();
    ag.ops += order.len() as u64;
    order.shuffle(&mut ag.rng);
    let mut changed = false;
    for r in order {
        let executed = k_executed.contains(&r);
        // W as carried by the messages of this iteration
        let reported_all = counts.get(&r).copied().unwrap_or(0);
        let w = match w_counting {
            WCounting::IncludeSelf => reported_all,
            WCounting::ExcludeSelf => reported_all - u32::from(reported.contains(&r)),
        };
        let assigned = ag.assigned.contains(&r);
        let (next, drew) = stochastic_update(update_probability(executed, assigned, w, p_u), &mut ag.rng);
        ag.ops += u64::from(drew);
        if next != assigned {
            changed = true;
            if next {
                ag.assigned.insert(r);
            } else {
                ag.assigned.remove(&r);
            }
        }
        // assignment only decides whether to attempt scheduling; held tasks stay
        if next && !ag.schedule.holds(r) {
            match schedule_insert(&mut ag.schedule, catalog, ag.cands.of(r), shared.now, &mut ag.ops) {
                InsertOutcome::NotInserted => {}
                InsertOutcome::Inserted(_) => changed = true,
                InsertOutcome::Swapped { removed, .. } => {
                    // the displaced request stays assigned and may come back
                    ag.assigned.insert(catalog.task(removed).request);
                    changed = true;
                }
            }
        }
    }
    changed
}
