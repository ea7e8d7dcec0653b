use crate::bench::PersistedRun;
use crate::error::CliError;
use dcosp::problem::dynamic_utility;
use dcosp::scenario::Scenario;
use dcosp::simkernel::{audit, run, RunOptions};
use std::path::Path;

fn load_run(path: &Path, scenario: Option<&Path>) -> Result<(PersistedRun, Scenario), CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let persisted: PersistedRun =
        serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.to_path_buf(), reason: e.to_string() })?;
    let scenario_path = scenario.unwrap_or(&persisted.scenario);
    let scenario = Scenario::load(scenario_path)
        .map_err(|e| CliError::Format { path: scenario_path.to_path_buf(), reason: e.to_string() })?;
    if (scenario.name.as_str(), scenario.index) != (persisted.name.as_str(), persisted.index) {
        return Err(CliError::Usage(format!(
            "{} was recorded on {}-{:03} but {} holds {}-{:03}",
            path.display(),
            persisted.name,
            persisted.index,
            scenario_path.display(),
            scenario.name,
            scenario.index
        )));
    }
    Ok((persisted, scenario))
}

/// Reruns each record with its own solver, parameters and seeds.
pub fn replay(runs: &[std::path::PathBuf], scenario: Option<&Path>, workers: usize) -> Result<(), CliError> {
    let mut failures = 0;
    for path in runs {
        let (persisted, s) = load_run(path, scenario)?;
        let m = &persisted.record.metrics;
        let opts = RunOptions { solver: m.solver, params: m.params, seeds: m.seeds, workers };
        let fresh = run(&s.dcosp, &opts).map_err(|source| CliError::Run {
            scenario: format!("{}-{:03}", s.name, s.index),
            solver: m.solver.to_string(),
            source,
        })?;
        let mut problems = Vec::new();
        if fresh.metrics != *m {
            problems.push("metrics differ from the rerun");
        }
        if fresh.schedule_trace != persisted.record.schedule_trace {
            problems.push("schedules differ from the rerun");
        }
        match dynamic_utility(&persisted.record.schedule_trace, &s.dcosp) {
            Ok(u) if u == m.satisfied => {}
            _ => problems.push("recorded utility does not follow from the recorded schedules"),
        }
        if problems.is_empty() {
            println!("{}: ok ({} {}/{} satisfied)", path.display(), m.solver, m.satisfied, m.total_requests);
        } else {
            failures += 1;
            println!("{}: MISMATCH: {}", path.display(), problems.join("; "));
        }
    }
    match failures {
        0 => Ok(()),
        n => Err(CliError::Invariant(format!("{n} of {} runs did not replay", runs.len()))),
    }
}

pub fn verify(runs: &[std::path::PathBuf], scenario: Option<&Path>) -> Result<(), CliError> {
    let mut failures = 0;
    for path in runs {
        let (persisted, s) = load_run(path, scenario)?;
        let problems = audit(&s.dcosp, &persisted.record);
        if problems.is_empty() {
            println!("{}: ok", path.display());
        } else {
            failures += 1;
            for p in problems {
                println!("{}: {p}", path.display());
            }
        }
    }
    match failures {
        0 => Ok(()),
        n => Err(CliError::Invariant(format!("{n} of {} runs failed verification", runs.len()))),
    }
}
