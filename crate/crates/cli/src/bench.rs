use crate::error::CliError;
use dcosp::config::{OracleMode, ScenarioConfig};
use dcosp::problem::executed_tasks;
use dcosp::scenario::Scenario;
use dcosp::simkernel::{optimality_gap, run, solve_oracle, write_trace_csv, GapReference, OracleReference, RunOptions, RunRecord};
use dcosp::solvers::SolverKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct BenchOptions {
    pub out: PathBuf,
    pub workers: usize,
    pub allow_unproven: bool,
}

/// A run record with the scenario it came from.
#[derive(Debug, Serialize, Deserialize)]
pub struct PersistedRun {
    pub scenario: PathBuf,
    pub name: String,
    pub index: usize,
    pub record: RunRecord,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PersistedOracle {
    pub scenario: PathBuf,
    pub mode: OracleMode,
    pub reference: OracleReference,
}

#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    solver: &'a str,
    scenario: &'a str,
    run_file: String,
    satisfied: usize,
    requests: usize,
    satisfaction_pct: f64,
    oracle_pct: Option<f64>,
    gap_pp: Option<f64>,
    reference: Option<GapReference>,
    messages: u64,
    message_kb: f64,
    mean_ops_per_agent: f64,
    wall_ms: f64,
}

const KB: f64 = 1000.0;

struct Loaded {
    path: PathBuf,
    stem: String,
    scenario: Scenario,
}

fn load(paths: &[PathBuf]) -> Result<Vec<Loaded>, CliError> {
    let mut out: Vec<Loaded> = Vec::with_capacity(paths.len());
    for path in paths {
        let scenario = Scenario::load(path).map_err(|e| CliError::Format { path: path.clone(), reason: e.to_string() })?;
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if out.iter().any(|l| l.stem == stem) {
            return Err(CliError::Usage(format!("two scenario files are named `{stem}`")));
        }
        out.push(Loaded { path: path.clone(), stem, scenario });
    }
    Ok(out)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn bench(config: &ScenarioConfig, paths: &[PathBuf], opts: &BenchOptions) -> Result<(), CliError> {
    let scenarios = load(paths)?;
    let out = &opts.out;
    for sub in ["runs", "oracle", "traces"] {
        let dir = out.join(sub);
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;

    // the oracle warm start needs greedy even when it is not being benchmarked
    let mut kinds = config.solvers.clone();
    let warm_from_extra = config.oracle != OracleMode::None && !kinds.contains(&SolverKind::Greedy);
    if warm_from_extra {
        kinds.push(SolverKind::Greedy);
    }
    let jobs: Vec<(usize, SolverKind)> =
        (0..scenarios.len()).flat_map(|s| kinds.iter().map(move |&k| (s, k))).collect();
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, solver)| {
                let ro = RunOptions { solver, params: config.solver, seeds: config.seeds, workers: 0 };
                run(&scenarios[s].scenario.dcosp, &ro).map_err(|source| CliError::Run {
                    scenario: scenarios[s].stem.clone(),
                    solver: solver.to_string(),
                    source,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    let mut by_pair: BTreeMap<(usize, SolverKind), RunRecord> = jobs.into_iter().zip(records).collect();

    let oracles: Vec<Option<OracleReference>> = pool.install(|| {
        scenarios
            .par_iter()
            .enumerate()
            .map(|(s, l)| {
                let warm = by_pair.get(&(s, SolverKind::Greedy)).map(|g| {
                    executed_tasks(&g.schedule_trace, &l.scenario.dcosp)
                        .expect("greedy trace is well formed")
                        .into_iter()
                        .collect::<Vec<_>>()
                });
                solve_oracle(&l.scenario.dcosp, config.oracle, &config.oracle_limits, warm.as_deref())
            })
            .collect()
    });
    if warm_from_extra {
        by_pair.retain(|&(_, k), _| config.solvers.contains(&k));
    }

    for (l, oracle) in scenarios.iter().zip(&oracles) {
        if let Some(reference) = oracle {
            let persisted = PersistedOracle { scenario: l.path.clone(), mode: config.oracle, reference: reference.clone() };
            write_json(&out.join("oracle").join(format!("{}.json", l.stem)), &persisted)?;
        }
    }

    let order: Vec<SolverKind> = SolverKind::ALL.into_iter().filter(|k| config.solvers.contains(k)).collect();
    let results_path = out.join("results.csv");
    let mut results = csv::Writer::from_path(&results_path)
        .map_err(|e| CliError::Format { path: results_path.clone(), reason: e.to_string() })?;
    let csv_err = |e: csv::Error| CliError::Format { path: results_path.clone(), reason: e.to_string() };
    let mut table_rows = Vec::new();
    for &kind in &order {
        let mut agg = Aggregate::default();
        for (s, l) in scenarios.iter().enumerate() {
            let record = by_pair.remove(&(s, kind)).expect("every pair ran");
            let stem = format!("{}.{}", l.stem, kind);
            let run_file = format!("runs/{stem}.json");
            let trace_path = out.join("traces").join(format!("{stem}.csv"));
            let file = std::fs::File::create(&trace_path).map_err(CliError::io(&trace_path))?;
            write_trace_csv(&record.metrics.trace, file)
                .map_err(|e| CliError::Format { path: trace_path.clone(), reason: e.to_string() })?;
            let m = &record.metrics;
            let gap = oracles[s].as_ref().map(|o| (o, optimality_gap(m, o)));
            results
                .serialize(ResultRow {
                    solver: kind.name(),
                    scenario: &l.stem,
                    run_file: run_file.clone(),
                    satisfied: m.satisfied,
                    requests: m.total_requests,
                    satisfaction_pct: m.satisfaction_pct,
                    oracle_pct: gap.map(|(o, _)| o.satisfaction_pct()),
                    gap_pp: gap.map(|(_, g)| g.points),
                    reference: gap.map(|(_, g)| g.reference),
                    messages: m.ledger.messages,
                    message_kb: m.ledger.bytes as f64 / KB,
                    mean_ops_per_agent: m.mean_ops_per_agent,
                    wall_ms: record.timing.wall_ms,
                })
                .map_err(csv_err)?;
            agg.add(&record, gap.map(|(_, g)| g));
            figure_add(&mut agg.figure, &record, l.scenario.dcosp.catalog.agent_count());
            let persisted = PersistedRun {
                scenario: l.path.clone(),
                name: l.scenario.name.clone(),
                index: l.scenario.index,
                record,
            };
            write_json(&out.join(&run_file), &persisted)?;
        }
        table_rows.push((kind, agg));
    }
    results.flush().map_err(CliError::io(&results_path))?;

    write_figure(&out.join("figure3.csv"), &table_rows)?;
    let table = render_table(&table_rows, &oracles, config.oracle);
    let table_path = out.join("table.md");
    std::fs::write(&table_path, &table).map_err(CliError::io(&table_path))?;
    print!("{table}");

    let unproven = oracles.iter().flatten().filter(|o| !o.solution.proven).count();
    if config.oracle == OracleMode::Bnb && unproven > 0 && !opts.allow_unproven {
        return Err(CliError::OracleBudget(unproven));
    }
    Ok(())
}

#[derive(Default)]
struct Aggregate {
    runs: usize,
    gap_sum: f64,
    gaps: usize,
    lower_bounds: usize,
    sat_sum: f64,
    wall_sum: f64,
    bytes_sum: f64,
    ops_sum: f64,
    /// (event, iteration) -> (count, satisfaction, KB, ops per agent)
    figure: BTreeMap<(usize, usize), (usize, f64, f64, f64)>,
}

impl Aggregate {
    fn add(&mut self, r: &RunRecord, gap: Option<dcosp::simkernel::Gap>) {
        self.runs += 1;
        if let Some(g) = gap {
            self.gaps += 1;
            self.gap_sum += g.points;
            self.lower_bounds += usize::from(g.reference == GapReference::LowerBound);
        }
        self.sat_sum += r.metrics.satisfaction_pct;
        self.wall_sum += r.timing.wall_ms;
        self.bytes_sum += r.metrics.ledger.bytes as f64;
        self.ops_sum += r.metrics.mean_ops_per_agent;
    }

    fn mean(&self, sum: f64) -> f64 {
        sum / self.runs.max(1) as f64
    }
}

fn figure_add(fig: &mut BTreeMap<(usize, usize), (usize, f64, f64, f64)>, r: &RunRecord, agents: usize) {
    for row in &r.metrics.trace {
        let e = fig.entry((row.event, row.iteration)).or_default();
        e.0 += 1;
        e.1 += row.satisfaction_pct;
        e.2 += row.cumulative_bytes as f64 / KB;
        e.3 += row.ops as f64 / agents.max(1) as f64;
    }
}

/// Mean quality, message volume and per-agent work per event and iteration.
fn write_figure(path: &Path, rows: &[(SolverKind, Aggregate)]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Format { path: path.to_path_buf(), reason: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["solver", "event-index", "iteration", "runs", "mean-satisfaction-%", "mean-cumulative-kb", "mean-ops-per-agent"])
        .map_err(err)?;
    for (kind, agg) in rows {
        for (&(event, iteration), &(n, sat, kb, ops)) in &agg.figure {
            let n_f = n as f64;
            w.write_record([
                kind.name().to_owned(),
                event.to_string(),
                iteration.to_string(),
                n.to_string(),
                format!("{:.4}", sat / n_f),
                format!("{:.3}", kb / n_f),
                format!("{:.2}", ops / n_f),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(CliError::io(path))
}

fn render_table(rows: &[(SolverKind, Aggregate)], oracles: &[Option<OracleReference>], mode: OracleMode) -> String {
    let mut t = String::new();
    t.push_str("| Algorithm | Opt. Gap (%) | Gap vs | Satisfaction (%) | Time (ms) | Messages (KB) | Ops/agent |\n");
    t.push_str("|---|---:|---|---:|---:|---:|---:|\n");
    let reference = |lower: usize, n: usize| match lower {
        0 => "optimal".to_owned(),
        k => format!("lower bound ({k}/{n} unproven)"),
    };
    for (kind, a) in rows {
        let (gap, vs) = if a.gaps == 0 {
            ("n/a".to_owned(), "no oracle".to_owned())
        } else {
            (format!("{:.3}", a.gap_sum / a.gaps as f64), reference(a.lower_bounds, a.gaps))
        };
        let _ = writeln!(
            t,
            "| {kind} | {gap} | {vs} | {:.2} | {:.1} | {:.1} | {:.0} |",
            a.mean(a.sat_sum),
            a.mean(a.wall_sum),
            a.mean(a.bytes_sum) / KB,
            a.mean(a.ops_sum),
        );
    }
    let solved: Vec<&OracleReference> = oracles.iter().flatten().collect();
    if !solved.is_empty() {
        let n = solved.len() as f64;
        let unproven = solved.iter().filter(|o| !o.solution.proven).count();
        let label = match mode {
            OracleMode::Bnb => "oracle (bnb)",
            OracleMode::Swo => "oracle (swo)",
            OracleMode::None => unreachable!("no oracle runs in this mode"),
        };
        let vs = if mode == OracleMode::Swo { "heuristic".to_owned() } else { reference(unproven, solved.len()) };
        let _ = writeln!(
            t,
            "| {label} | 0.000 | {vs} | {:.2} | {:.1} | {:.1} | - |",
            solved.iter().map(|o| o.satisfaction_pct()).sum::<f64>() / n,
            solved.iter().map(|o| o.wall_ms).sum::<f64>() / n,
            solved.iter().map(|o| o.ledger.bytes as f64).sum::<f64>() / n / KB,
        );
    }
    t
}
