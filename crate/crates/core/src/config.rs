//! Scenario and experiment configuration with the shipped presets.

use crate::geometry::{Constellation, GeometryError, GroundStation, PlaneGroup, Target, DEFAULT_SCAN_STEP};
use crate::problem::generate::{generate_targets, Periodicity, Region, TaskParams, Volatility};
use crate::rng::{stream, TARGET_STREAM};
use crate::solvers::{SolverKind, SolverParams};
use serde::{Deserialize, Serialize};
use rand::seq::SliceRandom;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unknown preset `{0}` (expected one of tiny, small-planet, small-walker, planet, walker)")]
    UnknownPreset(String),
}

fn field(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, reason: reason.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConstellationChoice {
    Planet { altitude_km: f64 },
    Walker { altitude_km: f64 },
    Groups { name: String, groups: Vec<PlaneGroup>, max_off_nadir_deg: f64, memory_capacity: u64 },
    /// A JSON-serialized constellation.
    File { path: PathBuf },
}

impl ConstellationChoice {
    pub fn resolve(&self) -> Result<Constellation, ConfigError> {
        let c = match self {
            ConstellationChoice::Planet { altitude_km } => Constellation::planet(*altitude_km),
            ConstellationChoice::Walker { altitude_km } => Constellation::walker(*altitude_km),
            ConstellationChoice::Groups { name, groups, max_off_nadir_deg, memory_capacity } => {
                Constellation::from_groups(name, groups, *max_off_nadir_deg, *memory_capacity)?
            }
            ConstellationChoice::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.clone(), reason: e.to_string() })?
            }
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSource {
    Generated { count: usize, seed: u64, region: Region },
    /// The bundled list of the most populous cities. A `count` below the list
    /// length takes a seeded sample that keeps population order.
    Cities { count: usize, seed: u64 },
    /// CSV with columns `latitude,longitude`; ids follow row order.
    File { path: PathBuf },
}

/// 634 most populous cities from GeoNames, most populous first.
pub const CITIES_CSV: &str = include_str!("../data/cities.csv");

#[derive(Debug, Deserialize)]
struct TargetRow {
    latitude: f64,
    longitude: f64,
}

fn read_targets(source: impl std::io::Read, path: &Path) -> Result<Vec<Target>, ConfigError> {
    let parse = |reason: String| ConfigError::Parse { path: path.to_path_buf(), reason };
    let mut reader = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (id, row) in reader.deserialize::<TargetRow>().enumerate() {
        let row = row.map_err(|e| parse(e.to_string()))?;
        out.push(Target { id: id as u32, latitude_deg: row.latitude, longitude_deg: row.longitude });
    }
    Ok(out)
}

impl TargetSource {
    pub fn resolve(&self) -> Result<Vec<Target>, ConfigError> {
        let targets = match self {
            TargetSource::Generated { count, seed, region } => {
                generate_targets(*count, *region, &mut stream(*seed, TARGET_STREAM))
            }
            TargetSource::Cities { count, seed } => {
                let all = read_targets(CITIES_CSV.as_bytes(), Path::new("<bundled cities>"))?;
                if *count == 0 || *count > all.len() {
                    return Err(ConfigError::Field {
                        field: "targets.count".into(),
                        reason: format!("must be in 1..={}", all.len()),
                    });
                }
                let mut picked: Vec<usize> = (0..all.len()).collect();
                if *count < all.len() {
                    picked.partial_shuffle(&mut stream(*seed, TARGET_STREAM), *count);
                    picked.truncate(*count);
                    picked.sort_unstable();
                }
                picked
                    .into_iter()
                    .enumerate()
                    .map(|(id, k)| Target { id: id as u32, ..all[k] })
                    .collect()
            }
            TargetSource::File { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| ConfigError::Parse { path: path.clone(), reason: e.to_string() })?;
                read_targets(file, path)?
            }
        };
        for t in &targets {
            t.validate()?;
        }
        Ok(targets)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonConfig {
    pub length_s: f64,
    /// Draw the horizon start uniformly from whole seconds in `[0, start_range_s)`.
    pub random_start: bool,
    pub start_range_s: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self { length_s: 86_400.0, random_start: true, start_range_s: 86_400.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Scenario `k` of a suite uses `scenario + k`.
    pub scenario: u64,
    pub repair: u64,
    pub solver: u64,
    pub gnd: u64,
    pub random_solver: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { scenario: 2005, repair: 1, solver: 1234, gnd: 2, random_solver: 2023 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    Bnb,
    Swo,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub node_budget: u64,
    /// Wall-clock cap in milliseconds; zero disables it.
    pub time_budget_ms: u64,
    pub swo_rounds: usize,
    /// Promotion distance as a fraction of the request count (rounded up).
    pub swo_jump_fraction: f64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { node_budget: 5_000_000, time_budget_ms: 0, swo_rounds: 50, swo_jump_fraction: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenarios: usize,
    pub constellation: ConstellationChoice,
    pub stations: Vec<GroundStation>,
    pub targets: TargetSource,
    pub horizon: HorizonConfig,
    pub periodicity: Periodicity,
    pub volatility: Volatility,
    pub tasks: TaskParams,
    pub scan_step_s: f64,
    pub seeds: Seeds,
    pub solvers: Vec<SolverKind>,
    pub oracle: OracleMode,
    pub solver: SolverParams,
    pub oracle_limits: OracleLimits,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(field("name", "must not be empty"));
        }
        if self.scenarios == 0 {
            return Err(field("scenarios", "must be at least 1"));
        }
        if self.stations.is_empty() {
            return Err(field("stations", "at least one ground station is required"));
        }
        for s in &self.stations {
            s.validate()?;
        }
        if !(self.horizon.length_s > 0.0) {
            return Err(field("horizon.length_s", "must be positive"));
        }
        if self.horizon.random_start && !(self.horizon.start_range_s >= 1.0) {
            return Err(field("horizon.start_range_s", "must be at least one second"));
        }
        match self.periodicity {
            Periodicity::Fixed { p } if p == 0 => return Err(field("periodicity.p", "must be at least 1")),
            Periodicity::Uniform { min, max } if min == 0 || min > max => {
                return Err(field("periodicity", "needs 1 <= min <= max"))
            }
            _ => {}
        }
        match self.volatility {
            Volatility::Fixed { v } if v == 0 => return Err(field("volatility.v", "must be at least 1")),
            Volatility::Uniform { min, max } if min == 0 || min > max => {
                return Err(field("volatility", "needs 1 <= min <= max"))
            }
            _ => {}
        }
        self.tasks.validate().map_err(|e| field("tasks", e.to_string()))?;
        if !(self.scan_step_s > 0.0) {
            return Err(field("scan_step_s", "must be positive"));
        }
        if self.solvers.is_empty() {
            return Err(field("solvers", "select at least one solver"));
        }
        self.solver.validate().map_err(|reason| field("solver", reason))?;
        if self.oracle_limits.swo_rounds == 0 {
            return Err(field("oracle_limits.swo_rounds", "must be at least 1"));
        }
        if !(self.oracle_limits.swo_jump_fraction > 0.0 && self.oracle_limits.swo_jump_fraction <= 1.0) {
            return Err(field("oracle_limits.swo_jump_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "tiny" => Ok(tiny()),
            "small-planet" => Ok(small_planet()),
            "small-walker" => Ok(small_walker()),
            "planet" => Ok(planet()),
            "walker" => Ok(walker()),
            other => Err(ConfigError::UnknownPreset(other.to_owned())),
        }
    }

    pub const PRESETS: [&'static str; 5] = ["tiny", "small-planet", "small-walker", "planet", "walker"];
}

fn base(name: &str, constellation: ConstellationChoice, targets: TargetSource, periodicity: Periodicity) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_owned(),
        scenarios: 10,
        constellation,
        stations: GroundStation::defaults(),
        targets,
        horizon: HorizonConfig::default(),
        periodicity,
        volatility: Volatility::Uniform { min: 3, max: 5 },
        tasks: TaskParams::default(),
        scan_step_s: DEFAULT_SCAN_STEP,
        seeds: Seeds::default(),
        solvers: SolverKind::ALL.to_vec(),
        oracle: OracleMode::Swo,
        solver: SolverParams::default(),
        oracle_limits: OracleLimits::default(),
    }
}

const TARGET_SEED: u64 = 634;

/// Eight satellites over a clustered target set; small enough for the exact oracle.
pub fn tiny() -> ScenarioConfig {
    let groups = vec![
        PlaneGroup {
            planes: 1,
            satellites_per_plane: 4,
            inclination_deg: 88.0,
            altitude_km: 500.0,
            raan_spread_deg: 0.0,
            raan_offset_deg: 0.0,
        },
        PlaneGroup {
            planes: 1,
            satellites_per_plane: 4,
            inclination_deg: 51.6,
            altitude_km: 500.0,
            raan_spread_deg: 0.0,
            raan_offset_deg: 90.0,
        },
    ];
    let mut c = base(
        "tiny",
        ConstellationChoice::Groups {
            name: "tiny".into(),
            groups,
            max_off_nadir_deg: 45.0,
            memory_capacity: crate::geometry::DEFAULT_MEMORY_CAPACITY,
        },
        TargetSource::Generated {
            count: 10,
            seed: TARGET_SEED,
            region: Region { lat_min: 30.0, lat_max: 40.0, lon_min: -105.0, lon_max: -95.0 },
        },
        Periodicity::Fixed { p: 3 },
    );
    c.scenarios = 30;
    c.oracle = OracleMode::Bnb;
    c
}

pub fn small_planet() -> ScenarioConfig {
    base(
        "small-planet",
        ConstellationChoice::Planet { altitude_km: 475.0 },
        TargetSource::Cities { count: 166, seed: TARGET_SEED },
        Periodicity::Fixed { p: 3 },
    )
}

pub fn small_walker() -> ScenarioConfig {
    base(
        "small-walker",
        ConstellationChoice::Walker { altitude_km: 500.0 },
        TargetSource::Cities { count: 333, seed: TARGET_SEED },
        Periodicity::Fixed { p: 3 },
    )
}

pub fn planet() -> ScenarioConfig {
    base(
        "planet",
        ConstellationChoice::Planet { altitude_km: 475.0 },
        TargetSource::Cities { count: 634, seed: TARGET_SEED },
        Periodicity::Uniform { min: 5, max: 12 },
    )
}

pub fn walker() -> ScenarioConfig {
    base(
        "walker",
        ConstellationChoice::Walker { altitude_km: 500.0 },
        TargetSource::Cities { count: 634, seed: TARGET_SEED },
        Periodicity::Uniform { min: 5, max: 12 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in ScenarioConfig::PRESETS {
            let c = ScenarioConfig::preset(name).unwrap();
            c.validate().unwrap();
            let json = serde_json::to_string(&c).unwrap();
            let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(c, back);
        }
    }

    #[test]
    fn shipped_constellation_sizes() {
        assert_eq!(planet().constellation.resolve().unwrap().satellites.len(), 200);
        assert_eq!(walker().constellation.resolve().unwrap().satellites.len(), 108);
        assert_eq!(tiny().constellation.resolve().unwrap().satellites.len(), 8);
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut c = tiny();
        c.scan_step_s = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::Field { field: "scan_step_s", .. })));
        let mut c = tiny();
        c.solvers.clear();
        assert!(matches!(c.validate(), Err(ConfigError::Field { field: "solvers", .. })));
    }

    #[test]
    fn targets_load_from_csv() {
        let dir = std::env::temp_dir().join(format!("dcosp-targets-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        std::fs::write(&path, "latitude,longitude\n10.5,20.25\n-33.9,151.2\n").unwrap();
        let ts = TargetSource::File { path: path.clone() }.resolve().unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[1].id, 1);
        assert_eq!(ts[1].longitude_deg, 151.2);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
