use crate::config_args::config_to_toml;
use crate::error::CliError;
use dcosp::config::ScenarioConfig;
use dcosp::scenario::{build_suite, Scenario};
use std::path::{Path, PathBuf};

pub fn scenario_file(out: &Path, s: &Scenario) -> PathBuf {
    out.join(format!("{}-{:03}.json", s.name, s.index))
}

pub fn generate(config: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let suite = build_suite(config)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let cfg_path = out.join(format!("{}.toml", config.name));
    std::fs::write(&cfg_path, config_to_toml(config)).map_err(CliError::io(&cfg_path))?;
    println!("{:<28} {:>6} {:>8} {:>8} {:>7} {:>6} {:>3}", "file", "agents", "campaign", "requests", "tasks", "events", "v");
    for s in &suite {
        let path = scenario_file(out, s);
        std::fs::write(&path, s.to_json()).map_err(CliError::io(&path))?;
        let c = &s.dcosp.catalog;
        println!(
            "{:<28} {:>6} {:>8} {:>8} {:>7} {:>6} {:>3}",
            path.file_name().unwrap_or_default().to_string_lossy(),
            c.agent_count(),
            c.requests().len(),
            s.dcosp.all_requests().len(),
            c.tasks().len(),
            s.dcosp.events.len(),
            s.volatility,
        );
    }
    println!("config written to {}", cfg_path.display());
    Ok(())
}
