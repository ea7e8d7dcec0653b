use super::collapse::CollapsedInstance;
use super::{agent_of, empty_schedules, witness, OracleMethod, OracleSolution};
use crate::problem::{AgentSchedule, Bucket, Catalog, RequestId, TaskId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbLimits {
    pub node_budget: u64,
    pub time_budget: Option<Duration>,
}

impl Default for BnbLimits {
    fn default() -> Self {
        Self { node_budget: 5_000_000, time_budget: None }
    }
}

struct Search<'a> {
    catalog: &'a Catalog,
    order: Vec<RequestId>,
    cands: Vec<Vec<TaskId>>,
    schedules: Vec<AgentSchedule>,
    best: usize,
    best_witness: Vec<(RequestId, TaskId)>,
    chosen: Vec<(RequestId, TaskId)>,
    nodes: u64,
    limits: BnbLimits,
    started: Instant,
    exhausted: bool,
}

impl Search<'_> {
    fn insertable(&self, t: TaskId) -> bool {
        self.schedules[agent_of(self.catalog, t).index()].can_insert(self.catalog, t)
    }

    /// Requests from `idx` on that could still be satisfied one at a time.
    fn bound(&self, idx: usize) -> usize {
        (idx..self.order.len()).filter(|&k| self.cands[k].iter().any(|&t| self.insertable(t))).count()
    }

    fn out_of_budget(&mut self) -> bool {
        if self.nodes >= self.limits.node_budget
            || self.limits.time_budget.is_some_and(|b| self.nodes % 1024 == 0 && self.started.elapsed() > b)
        {
            self.exhausted = true;
        }
        self.exhausted
    }

    fn dfs(&mut self, idx: usize, covered: usize) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        if idx == self.order.len() {
            if covered > self.best {
                self.best = covered;
                self.best_witness = self.chosen.clone();
            }
            return;
        }
        if covered + self.bound(idx) <= self.best {
            return;
        }
        let r = self.order[idx];
        let options: Vec<TaskId> = self.cands[idx].iter().copied().filter(|&t| self.insertable(t)).collect();
        for t in options {
            let a = agent_of(self.catalog, t).index();
            self.schedules[a].insert(self.catalog, t);
            self.chosen.push((r, t));
            self.dfs(idx + 1, covered + 1);
            self.chosen.pop();
            self.schedules[a].remove(self.catalog, t);
            if self.exhausted {
                return;
            }
        }
        self.dfs(idx + 1, covered);
    }
}

/// Requests grouped so that no constraint links two groups: tasks of one
/// agent that overlap in time, or that share a capacity bucket whose limit
/// the candidates could exceed, tie their requests together.
fn components(catalog: &Catalog, cands: &BTreeMap<RequestId, Vec<TaskId>>) -> Vec<Vec<RequestId>> {
    let ids: Vec<RequestId> = cands.keys().copied().collect();
    let index: BTreeMap<RequestId, usize> = ids.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |a: usize, b: usize, p: &mut Vec<usize>| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };

    let mut by_agent: BTreeMap<u32, Vec<TaskId>> = BTreeMap::new();
    let mut by_bucket: BTreeMap<(u32, Bucket), Vec<TaskId>> = BTreeMap::new();
    for list in cands.values() {
        for &t in list {
            let a = catalog.task(t).agent.0;
            by_agent.entry(a).or_default().push(t);
            by_bucket.entry((a, catalog.bucket(t))).or_default().push(t);
        }
    }
    for tasks in by_agent.values_mut() {
        tasks.sort_by(|x, y| catalog.task(*x).interval.start.total_cmp(&catalog.task(*y).interval.start));
        // sweep: each task against later tasks that start before it ends
        for (i, &x) in tasks.iter().enumerate() {
            let ix = catalog.task(x).interval;
            for &y in &tasks[i + 1..] {
                let iy = catalog.task(y).interval;
                if iy.start >= ix.end {
                    break;
                }
                if ix.overlaps(&iy) {
                    union(index[&catalog.task(x).request], index[&catalog.task(y).request], &mut parent);
                }
            }
        }
    }
    for ((a, bucket), tasks) in &by_bucket {
        let total: u64 = tasks.iter().map(|&t| catalog.task(t).volume).sum();
        if total > catalog.bucket_limit(crate::problem::AgentId(*a), *bucket) {
            for w in tasks.windows(2) {
                union(index[&catalog.task(w[0]).request], index[&catalog.task(w[1]).request], &mut parent);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<RequestId>> = BTreeMap::new();
    for (k, &r) in ids.iter().enumerate() {
        groups.entry(find(&mut parent, k)).or_default().push(r);
    }
    groups.into_values().collect()
}

/// Maximum number of satisfiable requests of the collapsed instance.
///
/// Independent request groups are searched separately, depth first over
/// requests with the fewest candidates first. The bound adds the remaining
/// requests that still have an individually insertable task. When a budget
/// runs out the best assignment found is returned with `proven = false`.
pub fn branch_and_bound(catalog: &Catalog, collapsed: &CollapsedInstance, limits: BnbLimits) -> OracleSolution {
    let cands: BTreeMap<RequestId, Vec<TaskId>> = collapsed
        .requests
        .iter()
        .map(|&r| (r, collapsed.candidates(catalog, r).collect::<Vec<_>>()))
        .filter(|(_, v)| !v.is_empty())
        .collect();
    let started = Instant::now();
    let mut schedules = empty_schedules(catalog);
    let (mut satisfied, mut nodes, mut proven) = (0, 0, true);

    for group in components(catalog, &cands) {
        let mut order = group;
        order.sort_by_key(|r| (cands[r].len(), *r));
        let mut search = Search {
            catalog,
            cands: order
                .iter()
                .map(|r| {
                    let mut v = cands[r].clone();
                    // earliest finishing first tends to leave the most room
                    v.sort_by(|a, b| {
                        catalog.task(*a).interval.end.total_cmp(&catalog.task(*b).interval.end).then(a.cmp(b))
                    });
                    v
                })
                .collect(),
            order,
            schedules: empty_schedules(catalog),
            best: 0,
            best_witness: Vec::new(),
            chosen: Vec::new(),
            nodes: 0,
            limits: BnbLimits { node_budget: limits.node_budget.saturating_sub(nodes), ..limits },
            started,
            exhausted: false,
        };
        search.dfs(0, 0);
        nodes += search.nodes;
        proven &= !search.exhausted;
        satisfied += search.best;
        for (_, t) in search.best_witness {
            schedules[agent_of(catalog, t).index()].insert(catalog, t);
        }
    }
    OracleSolution {
        method: OracleMethod::BranchAndBound,
        satisfied,
        requests: collapsed.requests.len(),
        proven,
        nodes,
        schedules: witness(&schedules),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{collapse, exhaustive_optimum};
    use crate::problem::{check_constraints, CatalogBuilder, DcospInstance, Schedule};
    use crate::rng::stream;
    use crate::time::TimeInterval;
    use rand::Rng;

    fn solve(b: &CatalogBuilder, active: Vec<RequestId>) -> (Catalog, OracleSolution) {
        let c = b.build();
        let d = DcospInstance::new(TimeInterval::new(0.0, 100_000.0), c.clone(), active, vec![]).unwrap();
        let sol = branch_and_bound(&c, &collapse(&d), BnbLimits::default());
        (c, sol)
    }

    #[test]
    fn two_disjoint_requests_are_both_served() {
        let mut b = CatalogBuilder::new(1);
        let r0 = b.request(0.0, 1000.0);
        let r1 = b.request(0.0, 1000.0);
        b.task(r0, 0, 100.0, 1);
        b.task(r1, 0, 300.0, 1);
        let (_, sol) = solve(&b, vec![r0, r1]);
        assert_eq!(sol.satisfied, 2);
        assert!(sol.proven);
    }

    #[test]
    fn pairwise_overlapping_requests_allow_one() {
        let mut b = CatalogBuilder::new(1);
        let r0 = b.request(0.0, 1000.0);
        let r1 = b.request(0.0, 1000.0);
        b.task(r0, 0, 100.0, 1);
        b.task(r0, 0, 110.0, 1);
        b.task(r1, 0, 120.0, 1);
        b.task(r1, 0, 105.0, 1);
        let (_, sol) = solve(&b, vec![r0, r1]);
        assert_eq!(sol.satisfied, 1);
    }

    #[test]
    fn exhausted_budget_is_flagged() {
        let mut b = CatalogBuilder::new(1);
        let rs: Vec<_> = (0..6).map(|_| b.request(0.0, 1000.0)).collect();
        for (k, &r) in rs.iter().enumerate() {
            b.task(r, 0, 10.0 * k as f64, 1);
            b.task(r, 0, 100.0 + 10.0 * k as f64, 1);
        }
        let c = b.build();
        let d = DcospInstance::new(TimeInterval::new(0.0, 1000.0), c.clone(), rs, vec![]).unwrap();
        let sol = branch_and_bound(&c, &collapse(&d), BnbLimits { node_budget: 3, time_budget: None });
        assert!(!sol.proven);
    }

    fn random_instance(seed: u64) -> (Catalog, DcospInstance) {
        let mut rng = stream(seed, 11);
        let agents = rng.random_range(1..4);
        let mut b = CatalogBuilder::new(agents);
        b.memory(rng.random_range(150..600));
        let n = rng.random_range(1..=12);
        let rs: Vec<_> = (0..n).map(|_| b.request(0.0, 2000.0)).collect();
        for &r in &rs {
            for _ in 0..rng.random_range(0..4) {
                let a = rng.random_range(0..agents);
                b.task(r, a, rng.random_range(0.0..1900.0_f64).floor(), rng.random_range(40..120));
            }
        }
        for a in 0..agents {
            if rng.random_bool(0.6) {
                let s = rng.random_range(0.0..1800.0_f64).floor();
                b.downlink(a, s, s + 100.0, rng.random_range(50..400));
            }
        }
        let c = b.build();
        let d = DcospInstance::new(TimeInterval::new(0.0, 2000.0), c.clone(), rs, vec![]).unwrap();
        (c, d)
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut compared = 0;
        for seed in 0..300 {
            let (c, d) = random_instance(seed);
            let col = collapse(&d);
            let Some(exact) = exhaustive_optimum(&c, &col, 16) else { continue };
            let sol = branch_and_bound(&c, &col, BnbLimits::default());
            assert!(sol.proven);
            assert_eq!(sol.satisfied, exact, "seed {seed}");
            for (a, tasks) in sol.schedules.iter().enumerate() {
                let s = Schedule { agent: crate::problem::AgentId(a as u32), tasks: tasks.clone() };
                assert!(check_constraints(&s, &c).unwrap().is_feasible());
            }
            compared += 1;
        }
        assert!(compared > 250);
    }
}
