use crate::error::CliError;
use crate::merge::deep_merge;
use clap::{Args, ValueEnum};
use dcosp::config::{ConstellationChoice, OracleMode, ScenarioConfig, TargetSource};
use dcosp::problem::generate::{Periodicity, Volatility};
use dcosp::solvers::SolverKind;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConstellationArg {
    Planet,
    Walker,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OracleArg {
    Bnb,
    Swo,
    None,
}

/// Scenario and solver settings. Flags apply on top of the preset; a config
/// file applies on top of the flags.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// TOML file with any subset of the configuration; its values win over flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting point: tiny, small-planet, small-walker, planet or walker.
    #[arg(long, default_value = "tiny")]
    pub preset: String,
    #[arg(long)]
    pub name: Option<String>,
    /// Number of scenarios in the suite.
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long, value_enum)]
    pub constellation: Option<ConstellationArg>,
    /// JSON constellation definition; replaces --constellation.
    #[arg(long)]
    pub constellation_file: Option<PathBuf>,
    #[arg(long)]
    pub altitude_km: Option<f64>,
    /// CSV of targets with `latitude,longitude` columns.
    #[arg(long)]
    pub targets_file: Option<PathBuf>,
    /// Number of targets for the built-in city list or generated targets.
    #[arg(long)]
    pub target_count: Option<usize>,
    #[arg(long)]
    pub horizon_length_s: Option<f64>,
    /// Start every horizon at time zero instead of a seeded offset.
    #[arg(long)]
    pub fixed_start: bool,
    /// `fixed:P` or `uniform:MIN-MAX`.
    #[arg(long, value_parser = parse_periodicity)]
    pub periodicity: Option<Periodicity>,
    /// `fixed:V` or `uniform:MIN-MAX`.
    #[arg(long, value_parser = parse_volatility)]
    pub volatility: Option<Volatility>,
    #[arg(long)]
    pub scenario_seed: Option<u64>,
    #[arg(long)]
    pub repair_seed: Option<u64>,
    #[arg(long)]
    pub solver_seed: Option<u64>,
    #[arg(long)]
    pub gnd_seed: Option<u64>,
    #[arg(long)]
    pub random_seed: Option<u64>,
    /// Comma-separated: d-nss,0-nss,d-dsa,0-dsa,greedy,random.
    #[arg(long, value_delimiter = ',', value_parser = parse_solver)]
    pub solvers: Option<Vec<SolverKind>>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleArg>,
    /// Neighborhoods each request is allocated to.
    #[arg(long)]
    pub gnd_n: Option<usize>,
    #[arg(long)]
    pub neighborhood_size: Option<usize>,
    #[arg(long)]
    pub p_u: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Run every iterative solver for exactly max-iters iterations per event.
    #[arg(long)]
    pub fixed_iterations: bool,
    #[arg(long)]
    pub node_budget: Option<u64>,
    #[arg(long)]
    pub time_budget_ms: Option<u64>,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_pair(s: &str) -> Result<(&str, u32, u32), String> {
    let (mode, rest) = s.split_once(':').ok_or_else(|| format!("`{s}`: expected fixed:N or uniform:MIN-MAX"))?;
    let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("`{x}`: {e}"));
    match mode {
        "fixed" => {
            let n = num(rest)?;
            Ok(("fixed", n, n))
        }
        "uniform" => {
            let (a, b) = rest.split_once('-').ok_or_else(|| format!("`{rest}`: expected MIN-MAX"))?;
            Ok(("uniform", num(a)?, num(b)?))
        }
        other => Err(format!("unknown mode `{other}` (expected fixed or uniform)")),
    }
}

fn parse_periodicity(s: &str) -> Result<Periodicity, String> {
    Ok(match parse_pair(s)? {
        ("fixed", p, _) => Periodicity::Fixed { p },
        (_, min, max) => Periodicity::Uniform { min, max },
    })
}

fn parse_volatility(s: &str) -> Result<Volatility, String> {
    Ok(match parse_pair(s)? {
        ("fixed", v, _) => Volatility::Fixed { v },
        (_, min, max) => Volatility::Uniform { min, max },
    })
}

impl ConfigArgs {
    fn apply_flags(&self, c: &mut ScenarioConfig) -> Result<(), CliError> {
        if let Some(name) = &self.name {
            c.name = name.clone();
        }
        if let Some(n) = self.scenarios {
            c.scenarios = n;
        }
        match (self.constellation, &self.constellation_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("--constellation and --constellation-file are exclusive".into()))
            }
            (_, Some(path)) => c.constellation = ConstellationChoice::File { path: path.clone() },
            (Some(ConstellationArg::Planet), _) => {
                c.constellation = ConstellationChoice::Planet { altitude_km: 475.0 };
                if !matches!(c.targets, TargetSource::File { .. }) {
                    c.targets = ScenarioConfig::preset("planet")?.targets;
                }
            }
            (Some(ConstellationArg::Walker), _) => {
                c.constellation = ConstellationChoice::Walker { altitude_km: 500.0 };
                if !matches!(c.targets, TargetSource::File { .. }) {
                    c.targets = ScenarioConfig::preset("walker")?.targets;
                }
            }
            (None, None) => {}
        }
        if let Some(alt) = self.altitude_km {
            match &mut c.constellation {
                ConstellationChoice::Planet { altitude_km } | ConstellationChoice::Walker { altitude_km } => *altitude_km = alt,
                ConstellationChoice::Groups { groups, .. } => groups.iter_mut().for_each(|g| g.altitude_km = alt),
                ConstellationChoice::File { .. } => {
                    return Err(CliError::Usage("--altitude-km does not apply to a constellation file".into()))
                }
            }
        }
        if let Some(path) = &self.targets_file {
            c.targets = TargetSource::File { path: path.clone() };
        }
        if let Some(n) = self.target_count {
            match &mut c.targets {
                TargetSource::Generated { count, .. } | TargetSource::Cities { count, .. } => *count = n,
                TargetSource::File { .. } => {
                    return Err(CliError::Usage("--target-count does not apply to a targets file".into()))
                }
            }
        }
        if let Some(h) = self.horizon_length_s {
            c.horizon.length_s = h;
        }
        if self.fixed_start {
            c.horizon.random_start = false;
        }
        if let Some(p) = self.periodicity {
            c.periodicity = p;
        }
        if let Some(v) = self.volatility {
            c.volatility = v;
        }
        let seeds = &mut c.seeds;
        for (flag, slot) in [
            (self.scenario_seed, &mut seeds.scenario),
            (self.repair_seed, &mut seeds.repair),
            (self.solver_seed, &mut seeds.solver),
            (self.gnd_seed, &mut seeds.gnd),
            (self.random_seed, &mut seeds.random_solver),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(s) = &self.solvers {
            c.solvers = s.clone();
        }
        if let Some(o) = self.oracle {
            c.oracle = match o {
                OracleArg::Bnb => OracleMode::Bnb,
                OracleArg::Swo => OracleMode::Swo,
                OracleArg::None => OracleMode::None,
            };
        }
        if let Some(n) = self.gnd_n {
            c.solver.gnd_n = n;
        }
        if let Some(n) = self.neighborhood_size {
            c.solver.neighborhood_size = n;
        }
        if let Some(p) = self.p_u {
            c.solver.p_u = p;
        }
        if let Some(n) = self.max_iters {
            c.solver.max_iters = n;
        }
        if self.fixed_iterations {
            c.solver.fixed_iterations = true;
        }
        if let Some(n) = self.node_budget {
            c.oracle_limits.node_budget = n;
        }
        if let Some(ms) = self.time_budget_ms {
            c.oracle_limits.time_budget_ms = ms;
        }
        Ok(())
    }

    /// Preset, then flags, then the config file; validated.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut config = ScenarioConfig::preset(&self.preset)?;
        self.apply_flags(&mut config)?;
        if let Some(path) = &self.config {
            config = overlay_file(&config, path)?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn overlay_file(config: &ScenarioConfig, path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |reason: String| CliError::Usage(format!("{}: {reason}", path.display()));
    let top: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;
    let mut merged = toml::Value::try_from(config).map_err(|e| bad(e.to_string()))?;
    deep_merge(&mut merged, toml::Value::Table(top));
    merged.try_into().map_err(|e: toml::de::Error| bad(e.to_string()))
}

pub fn config_to_toml(config: &ScenarioConfig) -> String {
    toml::to_string_pretty(config).expect("configs serialize to TOML")
}
