//! Deterministic event loop: replays a scenario's change events, steps the
//! selected solver at each, snapshots assignments and keeps the ledgers.

use crate::config::{OracleLimits, OracleMode, Seeds};
use crate::oracle::{branch_and_bound, collapse, swo, BnbLimits, OracleSolution, SwoParams};
use crate::problem::{check_constraints, dynamic_utility, AgentId, DcospInstance, TaskId, TraceError, Verdict};
use crate::solvers::{Engine, SolverKind, SolverParams, StepReport};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("event {event}: agent {agent} holds an infeasible schedule: {verdict:?}")]
    Infeasible { event: usize, agent: AgentId, verdict: Verdict },
    #[error("event {event}: snapshot holds task {task} of inactive request")]
    InactiveTask { event: usize, task: TaskId },
    #[error("event {event}: agent {agent} schedule is malformed: {reason}")]
    Malformed { event: usize, agent: AgentId, reason: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl RunError {
    /// True for errors that indicate a solver bug rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        !matches!(self, RunError::Pool(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLedger {
    pub messages: u64,
    pub bytes: u64,
    pub decomposition_bytes: u64,
    pub repair_bytes: u64,
    pub search_bytes: u64,
    /// Schedule uplink volume of a centralized solution.
    pub uplink_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub event: usize,
    pub iteration: usize,
    pub solver: SolverKind,
    pub satisfaction_pct: f64,
    pub cumulative_bytes: u64,
    pub ops: u64,
    pub messages: u64,
    pub active_neighborhoods: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub time: f64,
    pub active_requests: usize,
    pub iterations: usize,
    pub neighborhood_sizes: Vec<usize>,
    pub max_allocated: usize,
    pub unallocatable: usize,
}

/// Everything a run reports except wall-clock measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub solver: SolverKind,
    pub seeds: Seeds,
    pub params: SolverParams,
    pub satisfied: usize,
    pub total_requests: usize,
    pub satisfaction_pct: f64,
    pub ledger: MessageLedger,
    pub ops_per_agent: Vec<u64>,
    pub mean_ops_per_agent: f64,
    pub events: Vec<EventSummary>,
    pub trace: Vec<TraceRow>,
    /// Per change event: last pre-event quality minus the quality after the
    /// first post-event search iteration.
    pub drops: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
    pub per_agent_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub metrics: RunMetrics,
    pub timing: Timing,
    /// Global scheduled tasks after each instance's step.
    pub schedule_trace: Vec<Vec<TaskId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub solver: SolverKind,
    pub params: SolverParams,
    pub seeds: Seeds,
    /// Worker threads; zero uses the ambient pool.
    pub workers: usize,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn check_step(dcosp: &DcospInstance, engine: &Engine, event: usize, snapshot: &[TaskId]) -> Result<(), RunError> {
    let catalog = &dcosp.catalog;
    for s in engine.schedules() {
        let verdict = check_constraints(&s.to_schedule(), catalog)
            .map_err(|e| RunError::Malformed { event, agent: s.agent(), reason: e.to_string() })?;
        if !verdict.is_feasible() {
            return Err(RunError::Infeasible { event, agent: s.agent(), verdict });
        }
    }
    let inst_active = &dcosp.instances()[event].active;
    if let Some(&task) = snapshot.iter().find(|&&t| !inst_active.contains(&catalog.task(t).request)) {
        return Err(RunError::InactiveTask { event, task });
    }
    Ok(())
}

fn run_inner(dcosp: &DcospInstance, opts: &RunOptions) -> Result<RunRecord, RunError> {
    let started = Instant::now();
    let catalog = &dcosp.catalog;
    let mut engine = Engine::new(opts.solver, opts.params, &opts.seeds, catalog.agent_count());
    let instances = dcosp.instances();
    let mut ledger = MessageLedger::default();
    let mut trace = Vec::new();
    let mut events = Vec::new();
    let mut schedule_trace = Vec::with_capacity(instances.len());
    let mut reports: Vec<StepReport> = Vec::with_capacity(instances.len());

    for inst in &instances {
        let report = engine.step(dcosp, inst);
        let snapshot = engine.snapshot();
        check_step(dcosp, &engine, inst.index, &snapshot)?;
        for row in &report.rows {
            ledger.messages += row.messages;
            ledger.bytes += row.bytes;
            ledger.search_bytes += row.bytes;
            trace.push(TraceRow {
                event: inst.index,
                iteration: row.iteration,
                solver: opts.solver,
                satisfaction_pct: pct(row.held, report.active_requests),
                cumulative_bytes: ledger.bytes,
                ops: row.ops,
                messages: row.messages,
                active_neighborhoods: row.searching_sizes.len(),
            });
        }
        events.push(EventSummary {
            time: inst.horizon.start,
            active_requests: report.active_requests,
            iterations: report.rows.len() - 1,
            neighborhood_sizes: report.neighborhood_sizes.clone(),
            max_allocated: report.max_allocated,
            unallocatable: report.unallocatable,
        });
        schedule_trace.push(snapshot);
        reports.push(report);
    }

    let satisfied = dynamic_utility(&schedule_trace, dcosp)?;
    let total_requests = dcosp.all_requests().len();
    let ops_per_agent = engine.ops();
    let mean_ops_per_agent = if ops_per_agent.is_empty() {
        0.0
    } else {
        ops_per_agent.iter().sum::<u64>() as f64 / ops_per_agent.len() as f64
    };
    let drops = stability_trace(&trace);
    let wall = started.elapsed();
    Ok(RunRecord {
        metrics: RunMetrics {
            solver: opts.solver,
            seeds: opts.seeds,
            params: opts.params,
            satisfied,
            total_requests,
            satisfaction_pct: pct(satisfied, total_requests),
            ledger,
            ops_per_agent,
            mean_ops_per_agent,
            events,
            trace,
            drops,
        },
        timing: Timing {
            wall_ms: ms(wall),
            per_agent_ms: ms(wall) / catalog.agent_count().max(1) as f64,
        },
        schedule_trace,
    })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs one solver over the whole timeline of `dcosp`.
pub fn run(dcosp: &DcospInstance, opts: &RunOptions) -> Result<RunRecord, RunError> {
    if opts.workers == 0 {
        return run_inner(dcosp, opts);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| run_inner(dcosp, opts))
}

/// Per change event, the quality of the last iteration before it minus the
/// quality of the first search iteration after it. The post-repair row stands
/// in when an event runs no search iterations.
pub fn stability_trace(trace: &[TraceRow]) -> Vec<f64> {
    let mut groups: Vec<&[TraceRow]> = Vec::new();
    let mut rest = trace;
    while let Some(first) = rest.first() {
        let len = rest.iter().take_while(|r| r.event == first.event).count();
        let (head, tail) = rest.split_at(len);
        groups.push(head);
        rest = tail;
    }
    groups
        .windows(2)
        .map(|pair| {
            let before = pair[0].last().expect("groups are nonempty");
            let after = pair[1].iter().find(|r| r.iteration == 1).unwrap_or(&pair[1][0]);
            before.satisfaction_pct - after.satisfaction_pct
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapReference {
    Optimal,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Oracle satisfaction minus solver satisfaction, in percentage points.
    pub points: f64,
    pub reference: GapReference,
}

pub fn optimality_gap(run: &RunMetrics, oracle: &OracleReference) -> Gap {
    Gap {
        points: oracle.satisfaction_pct() - run.satisfaction_pct,
        reference: if oracle.solution.proven { GapReference::Optimal } else { GapReference::LowerBound },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReference {
    pub solution: OracleSolution,
    pub ledger: MessageLedger,
    pub wall_ms: f64,
}

impl OracleReference {
    pub fn satisfaction_pct(&self) -> f64 {
        self.solution.satisfaction_pct()
    }
}

/// Solves the collapsed instance. An unproven branch and bound falls back to
/// the better of its incumbent and SWO, labeled as a lower bound.
/// `warm_start` seeds SWO with a known feasible assignment.
pub fn solve_oracle(
    dcosp: &DcospInstance,
    mode: OracleMode,
    limits: &OracleLimits,
    warm_start: Option<&[TaskId]>,
) -> Option<OracleReference> {
    let started = Instant::now();
    let catalog = &dcosp.catalog;
    let collapsed = collapse(dcosp);
    let swo_params = SwoParams { rounds: limits.swo_rounds, jump_fraction: limits.swo_jump_fraction };
    let solution = match mode {
        OracleMode::None => return None,
        OracleMode::Swo => swo(catalog, &collapsed, swo_params, warm_start),
        OracleMode::Bnb => {
            let bnb_limits = BnbLimits {
                node_budget: limits.node_budget,
                time_budget: (limits.time_budget_ms > 0).then(|| Duration::from_millis(limits.time_budget_ms)),
            };
            let exact = branch_and_bound(catalog, &collapsed, bnb_limits);
            if exact.proven {
                exact
            } else {
                let lower = swo(catalog, &collapsed, swo_params, warm_start);
                if lower.satisfied > exact.satisfied {
                    lower
                } else {
                    exact
                }
            }
        }
    };
    let uplink = solution.uplink_bytes();
    Some(OracleReference {
        solution,
        ledger: MessageLedger { bytes: uplink, uplink_bytes: uplink, ..MessageLedger::default() },
        wall_ms: ms(started.elapsed()),
    })
}

/// Writes the per-iteration trace with one header row.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event-index", "iteration", "solver", "satisfaction-%", "cumulative-message-bytes", "op-counter"])?;
    for r in rows {
        w.write_record([
            r.event.to_string(),
            r.iteration.to_string(),
            r.solver.name().to_owned(),
            format!("{:.4}", r.satisfaction_pct),
            r.cumulative_bytes.to_string(),
            r.ops.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Checks a persisted run against its scenario and returns every violated
/// invariant. An empty result means the record is internally consistent.
pub fn audit(dcosp: &DcospInstance, record: &RunRecord) -> Vec<String> {
    let mut bad = Vec::new();
    let catalog = &dcosp.catalog;
    let m = &record.metrics;
    let instances = dcosp.instances();
    if record.schedule_trace.len() != instances.len() {
        bad.push(format!("{} snapshots for {} instances", record.schedule_trace.len(), instances.len()));
        return bad;
    }
    if let Some(t) = record.schedule_trace.iter().flatten().find(|t| t.index() >= catalog.tasks().len()) {
        bad.push(format!("unknown task {t}"));
        return bad;
    }
    let mut prev: Option<&Vec<TaskId>> = None;
    for (inst, snap) in instances.iter().zip(&record.schedule_trace) {
        let mut per_agent = vec![Vec::new(); catalog.agent_count()];
        for &t in snap {
            per_agent[catalog.task(t).agent.index()].push(t);
        }
        for (a, tasks) in per_agent.into_iter().enumerate() {
            let schedule = crate::problem::Schedule { agent: AgentId(a as u32), tasks };
            match check_constraints(&schedule, catalog) {
                Ok(v) if v.is_feasible() => {}
                Ok(v) => bad.push(format!("event {}: agent {a} infeasible: {v:?}", inst.index)),
                Err(e) => bad.push(format!("event {}: agent {a} malformed: {e}", inst.index)),
            }
        }
        if let Some(t) = snap.iter().find(|&&t| !inst.active.contains(&catalog.task(t).request)) {
            bad.push(format!("event {}: task {t} of an inactive request", inst.index));
        }
        let now = inst.horizon.start;
        let frozen = |s: &Vec<TaskId>| -> Vec<TaskId> {
            s.iter().copied().filter(|&t| catalog.task(t).interval.start <= now).collect()
        };
        if let Some(p) = prev {
            if frozen(p) != frozen(snap) {
                bad.push(format!("event {}: tasks started before the change were altered", inst.index));
            }
        }
        prev = Some(snap);
    }
    match dynamic_utility(&record.schedule_trace, dcosp) {
        Ok(u) if u == m.satisfied => {}
        Ok(u) => bad.push(format!("recorded {} satisfied requests, trace yields {u}", m.satisfied)),
        Err(e) => bad.push(e.to_string()),
    }
    let total = dcosp.all_requests().len();
    if m.total_requests != total {
        bad.push(format!("recorded {} requests, scenario has {total}", m.total_requests));
    }
    if m.satisfaction_pct != pct(m.satisfied, m.total_requests) {
        bad.push("satisfaction percentage disagrees with its counts".into());
    }
    let l = &m.ledger;
    if l.bytes != l.decomposition_bytes + l.repair_bytes + l.search_bytes + l.uplink_bytes {
        bad.push("ledger bytes are not the sum of their parts".into());
    }
    if l.messages != m.trace.iter().map(|r| r.messages).sum::<u64>() {
        bad.push("ledger messages disagree with the trace".into());
    }
    if l.bytes != m.trace.last().map_or(0, |r| r.cumulative_bytes) {
        bad.push("ledger bytes disagree with the trace".into());
    }
    if m.trace.windows(2).any(|w| w[1].cumulative_bytes < w[0].cumulative_bytes) {
        bad.push("cumulative bytes decrease".into());
    }
    if !m.solver.is_iterative() && (l.bytes > 0 || l.messages > 0) {
        bad.push(format!("{} sent messages", m.solver));
    }
    if m.events.len() != instances.len() {
        bad.push(format!("{} event summaries for {} instances", m.events.len(), instances.len()));
    }
    if m.trace.len() != m.events.iter().map(|e| e.iterations + 1).sum::<usize>() {
        bad.push("trace length disagrees with the iteration counts".into());
    }
    if m.trace.iter().any(|r| r.solver != m.solver) {
        bad.push("trace rows from another solver".into());
    }
    if m.drops != stability_trace(&m.trace) {
        bad.push("recorded drops disagree with the trace".into());
    }
    if m.ops_per_agent.len() != catalog.agent_count() {
        bad.push("op counters do not cover every agent".into());
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CatalogBuilder, ChangeEvent, RequestId};
    use crate::time::TimeInterval;

    fn opts(solver: SolverKind) -> RunOptions {
        RunOptions { solver, params: SolverParams::default(), seeds: Seeds::default(), workers: 1 }
    }

    fn small() -> DcospInstance {
        let mut b = CatalogBuilder::new(3);
        let mut rs = Vec::new();
        for k in 0..12 {
            let start = 500.0 * f64::from(k % 4);
            let r = b.request(start, 6_000.0);
            for a in 0..3 {
                b.task(r, a, start + 100.0 + 40.0 * f64::from(k) + 7.0 * f64::from(a), 10);
            }
            rs.push(r);
        }
        b.downlink(0, 3_000.0, 3_200.0, 1_000);
        DcospInstance::new(
            TimeInterval::new(0.0, 6_000.0),
            b.build(),
            rs[..8].to_vec(),
            vec![ChangeEvent {
                time: 1_200.0,
                added: vec![RequestId(11)],
                removed: vec![RequestId(7)],
                add_shortfall: 0,
                remove_shortfall: 0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn baselines_send_nothing() {
        let d = small();
        for k in [SolverKind::Greedy, SolverKind::Random] {
            let r = run(&d, &opts(k)).unwrap();
            assert_eq!(r.metrics.ledger, MessageLedger::default());
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let d = small();
        for k in SolverKind::ALL {
            let a = run(&d, &opts(k)).unwrap();
            let b = run(&d, &RunOptions { workers: 3, ..opts(k) }).unwrap();
            assert_eq!(a.metrics, b.metrics);
            assert_eq!(a.schedule_trace, b.schedule_trace);
        }
    }

    #[test]
    fn static_run_matches_exact_optimum_when_easy() {
        // every request has a private agent-free slot, so all solvers hit the optimum
        let mut b = CatalogBuilder::new(2);
        let rs: Vec<_> = (0..5).map(|k| {
            let r = b.request(0.0, 5_000.0);
            b.task(r, (k % 2) as u32, 100.0 + 200.0 * k as f64, 1);
            r
        }).collect();
        let d = DcospInstance::new(TimeInterval::new(0.0, 5_000.0), b.build(), rs, vec![]).unwrap();
        let oracle = solve_oracle(&d, OracleMode::Bnb, &OracleLimits::default(), None).unwrap();
        assert!(oracle.solution.proven);
        let r = run(&d, &opts(SolverKind::DNss)).unwrap();
        assert_eq!(r.metrics.satisfied, oracle.solution.satisfied);
        assert_eq!(optimality_gap(&r.metrics, &oracle), Gap { points: 0.0, reference: GapReference::Optimal });
    }

    #[test]
    fn gap_arithmetic() {
        let d = small();
        let mut m = run(&d, &opts(SolverKind::Greedy)).unwrap().metrics;
        let mut oracle = solve_oracle(&d, OracleMode::Swo, &OracleLimits::default(), None).unwrap();
        oracle.solution.requests = 10;
        oracle.solution.satisfied = 8;
        m.satisfaction_pct = 78.0;
        let g = optimality_gap(&m, &oracle);
        assert!((g.points - 2.0).abs() < 1e-12);
        assert_eq!(g.reference, GapReference::LowerBound);
    }

    #[test]
    fn static_scenarios_have_no_drops() {
        let d = small().without_dynamics();
        for k in SolverKind::ALL {
            assert!(run(&d, &opts(k)).unwrap().metrics.drops.is_empty());
        }
    }

    fn row(event: usize, iteration: usize, q: f64) -> TraceRow {
        TraceRow {
            event,
            iteration,
            solver: SolverKind::DNss,
            satisfaction_pct: q,
            cumulative_bytes: 0,
            ops: 0,
            messages: 0,
            active_neighborhoods: 0,
        }
    }

    #[test]
    fn drop_compares_last_iteration_with_first_search_iteration() {
        let t = [row(0, 0, 50.0), row(0, 1, 60.0), row(1, 0, 70.0), row(1, 1, 40.0), row(1, 2, 45.0), row(2, 0, 30.0)];
        assert_eq!(stability_trace(&t), vec![20.0, 15.0]);
    }

    #[test]
    fn trace_csv_has_the_documented_columns() {
        let r = run(&small(), &opts(SolverKind::DNss)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&r.metrics.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "event-index,iteration,solver,satisfaction-%,cumulative-message-bytes,op-counter"
        );
        assert_eq!(lines.count(), r.metrics.trace.len());
    }

    #[test]
    fn audit_accepts_runs_and_flags_tampering() {
        let d = small();
        for k in SolverKind::ALL {
            let r = run(&d, &opts(k)).unwrap();
            assert_eq!(audit(&d, &r), Vec::<String>::new(), "{k}");
            let mut forged = r.clone();
            forged.metrics.satisfied += 1;
            assert!(!audit(&d, &forged).is_empty());
            let mut forged = r.clone();
            forged.schedule_trace.pop();
            assert!(!audit(&d, &forged).is_empty());
        }
    }

    #[test]
    fn trace_length_is_iterations_plus_repair_rows() {
        let r = run(&small(), &opts(SolverKind::DDsa)).unwrap();
        let expected: usize = r.metrics.events.iter().map(|e| e.iterations + 1).sum();
        assert_eq!(r.metrics.trace.len(), expected);
        assert!(r.metrics.satisfied <= r.metrics.total_requests);
    }
}
