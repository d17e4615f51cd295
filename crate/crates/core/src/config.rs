//! TOML files for model specs and experiment configs.
//!
//! ```toml
//! [graph]
//! id = "base"
//!
//! [phi]
//! value = 0.5
//!
//! [deltas]
//! UW = 0.6
//! XY = 0.1
//!
//! [pattern]          # high_dim_u only
//! uv = "linear"
//! uy = "constant"
//! strength = 1.5
//!
//! [experiment]       # experiment configs only
//! study = "table1"
//! n_per_run = 100000
//! n_runs = 100
//! seed = 7
//! cond_cutoff = 30.0
//! population = false
//! param = "UW"       # scans
//! grid = [0.1, 0.2]
//! ```
//!
//! Omitted deltas keep their defaults. In a high_dim_u spec a delta may be an
//! array of per-dimension values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::{DeltaPattern, DgpError, DgpSpec, GraphId, HIGHDIM_STRENGTH};
use crate::experiments::{default_condition_grid, ExperimentConfig, ExperimentError, Study};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("invalid `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("missing section [{0}]")]
    Missing(&'static str),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T, E = ConfigError> = std::result::Result<T, E>;

fn invalid(key: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.to_string() }
}

impl From<DgpError> for ConfigError {
    fn from(e: DgpError) -> Self {
        match e {
            DgpError::UnknownDelta { ref key, .. } | DgpError::MissingDelta { ref key, .. } => invalid(key, &e),
            other => invalid("deltas", other),
        }
    }
}

impl From<ExperimentError> for ConfigError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config { key, msg } => ConfigError::Invalid { key, msg },
            other => invalid("experiment", other),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    graph: Option<RawGraph>,
    phi: Option<RawPhi>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    deltas: BTreeMap<String, RawDelta>,
    pattern: Option<RawPattern>,
    experiment: Option<RawExperiment>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhi {
    value: Number,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn get(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawDelta {
    Scalar(Number),
    Vector(Vec<Number>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    uv: Option<String>,
    uy: Option<String>,
    strength: Option<Number>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    study: String,
    n_per_run: Option<u64>,
    n_runs: Option<u64>,
    seed: Option<u64>,
    cond_cutoff: Option<Number>,
    population: Option<bool>,
    param: Option<String>,
    grid: Option<Vec<Number>>,
}

fn parse_raw(text: &str) -> Result<RawFile> {
    toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string().trim_end().to_string()))
}

fn parse_graph(raw: &RawGraph) -> Result<GraphId> {
    raw.id.parse().map_err(|e| invalid("id", e))
}

fn parse_pattern(key: &str, value: &Option<String>) -> Result<DeltaPattern> {
    match value {
        Some(s) => s.parse().map_err(|e| invalid(key, e)),
        None => Ok(DeltaPattern::Constant),
    }
}

fn build_spec(raw: &RawFile) -> Result<DgpSpec> {
    let graph = parse_graph(raw.graph.as_ref().ok_or(ConfigError::Missing("graph"))?)?;
    let mut spec = DgpSpec::default_for(graph);
    if let Some(phi) = &raw.phi {
        spec.phi = phi.value.get();
    }
    if let Some(p) = &raw.pattern {
        if graph != GraphId::HighDimU {
            return Err(invalid("pattern", "only applies to graph `high_dim_u`"));
        }
        let strength = p.strength.map_or(HIGHDIM_STRENGTH, Number::get);
        spec.set_patterns(parse_pattern("uv", &p.uv)?, parse_pattern("uy", &p.uy)?, strength);
    }
    for (key, value) in &raw.deltas {
        match value {
            RawDelta::Scalar(v) => spec.set_delta(key, v.get())?,
            RawDelta::Vector(v) => spec.set_delta_vector(key, v.iter().map(|n| n.get()).collect())?,
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Parses a model spec; an `[experiment]` section is accepted and ignored.
pub fn parse_spec(text: &str) -> Result<DgpSpec> {
    build_spec(&parse_raw(text)?)
}

/// Serializes a spec; every delta is written explicitly.
pub fn spec_to_toml(spec: &DgpSpec) -> String {
    let mut deltas: BTreeMap<String, RawDelta> =
        spec.deltas.iter().map(|(k, v)| (k.clone(), RawDelta::Scalar(Number::Float(*v)))).collect();
    for (k, v) in &spec.delta_vectors {
        deltas.insert(k.clone(), RawDelta::Vector(v.iter().map(|x| Number::Float(*x)).collect()));
    }
    let raw = RawFile {
        graph: Some(RawGraph { id: spec.graph.name().to_string() }),
        phi: Some(RawPhi { value: Number::Float(spec.phi) }),
        deltas,
        ..RawFile::default()
    };
    toml::to_string(&raw).expect("spec fields are TOML-representable")
}

pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let raw = parse_raw(text)?;
    let exp = raw.experiment.as_ref().ok_or(ConfigError::Missing("experiment"))?;
    let study: Study = exp.study.parse()?;
    let mut cfg = ExperimentConfig::new(study);
    if let Some(g) = &raw.graph {
        if matches!(study, Study::Table1 | Study::Table2) {
            return Err(invalid("graph", format!("`{study}` runs a fixed list of graphs")));
        }
        cfg.graph = Some(parse_graph(g)?);
    }
    cfg.phi = raw.phi.as_ref().map(|p| p.value.get());
    for (key, value) in &raw.deltas {
        match value {
            RawDelta::Scalar(v) => {
                cfg.overrides.insert(key.clone(), v.get());
            }
            RawDelta::Vector(_) => return Err(invalid(key, "experiment overrides must be scalars")),
        }
    }
    if let Some(p) = &raw.pattern {
        if study != Study::Table2 || p.uv.is_some() || p.uy.is_some() {
            return Err(invalid("pattern", "experiments accept only `strength`, and only for table2"));
        }
        if let Some(s) = p.strength {
            cfg.strength = s.get();
        }
    }
    if let Some(n) = exp.n_per_run {
        cfg.n_per_run = usize::try_from(n).map_err(|_| invalid("n_per_run", "too large"))?;
    }
    if let Some(n) = exp.n_runs {
        cfg.n_runs = usize::try_from(n).map_err(|_| invalid("n_runs", "too large"))?;
    }
    if let Some(s) = exp.seed {
        cfg.seed = s;
    }
    if let Some(c) = exp.cond_cutoff {
        cfg.cond_cutoff = c.get();
    }
    if let Some(p) = exp.population {
        cfg.population = p;
    }
    let grid = exp.grid.as_ref().map(|g| g.iter().map(|n| n.get()).collect::<Vec<f64>>());
    match (study, &exp.param, grid) {
        (Study::Table1 | Study::Table2, None, None) => {}
        (Study::Table1 | Study::Table2, _, _) => return Err(invalid("param", "only scan studies take a grid")),
        (Study::ViolationScan, Some(param), _) if param != "WX" => {
            return Err(invalid("param", "the violation scan varies `WX`"))
        }
        (_, Some(param), Some(grid)) => cfg.scans = vec![(param.clone(), grid)],
        (Study::ConditionScan, Some(param), None) => cfg.scans = vec![(param.clone(), default_condition_grid(param))],
        (_, None, Some(grid)) => cfg.scans = vec![(cfg.scans[0].0.clone(), grid)],
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })
}

pub fn load_spec(path: &Path) -> Result<DgpSpec> {
    parse_spec(&read(path)?)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    parse_experiment(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec_uses_defaults() {
        let spec = parse_spec("[graph]\nid = \"base\"\n").unwrap();
        assert_eq!(spec, DgpSpec::default_for(GraphId::Base));
        let spec = parse_spec("[graph]\nid = \"exotic2\"\n[phi]\nvalue = 0.45\n[deltas]\nXY = 0\n").unwrap();
        assert_eq!(spec.phi, 0.45);
        assert_eq!(spec.delta("XY"), Some(0.0));
    }

    #[test]
    fn spec_round_trip() {
        for g in GraphId::ALL {
            let spec = DgpSpec::default_for(g);
            assert_eq!(parse_spec(&spec_to_toml(&spec)).unwrap(), spec, "{g}");
        }
        let spec = DgpSpec::high_dim(DeltaPattern::Linear, DeltaPattern::Leading);
        assert_eq!(parse_spec(&spec_to_toml(&spec)).unwrap(), spec);
    }

    #[test]
    fn patterns_match_the_builder() {
        let text = "[graph]\nid = \"high_dim_u\"\n[pattern]\nuv = \"zeroed\"\nuy = \"linear\"\n";
        assert_eq!(parse_spec(text).unwrap(), DgpSpec::high_dim(DeltaPattern::Leading, DeltaPattern::Linear));
        assert!(matches!(parse_spec("[graph]\nid = \"base\"\n[pattern]\nuv = \"linear\"\n"), Err(ConfigError::Invalid { key, .. }) if key == "pattern"));
    }

    #[test]
    fn errors_name_the_offending_key() {
        let msg = parse_spec("[graph]\nid = \"base\"\n[deltas]\nQX = 0.2\n").unwrap_err().to_string();
        assert!(msg.contains("QX"), "{msg}");
        let msg = parse_spec("[graph]\nid = \"base\"\ncolour = 1\n").unwrap_err().to_string();
        assert!(msg.contains("colour"), "{msg}");
        let msg = parse_spec("[graph]\nid = \"base\"\n[deltas]\nUW = 1.2\n").unwrap_err().to_string();
        assert!(msg.contains("W"), "{msg}");
        assert!(matches!(parse_spec("[graph]\nid = \"fig9\"\n"), Err(ConfigError::Invalid { key, .. }) if key == "id"));
        assert!(matches!(parse_spec("[deltas]\nUW = 0.1\n"), Err(ConfigError::Missing("graph"))));
        let msg = parse_experiment("[experiment]\nstudy = \"table1\"\nn_per_run = 10\n").unwrap_err().to_string();
        assert!(msg.contains("n_per_run"), "{msg}");
        let msg = parse_experiment("[experiment]\nstudy = \"table1\"\nreps = 10\n").unwrap_err().to_string();
        assert!(msg.contains("reps"), "{msg}");
    }

    #[test]
    fn experiment_sections() {
        let cfg = parse_experiment("[experiment]\nstudy = \"table1\"\nn_runs = 7\nseed = 3\n[deltas]\nXY = 0.2\n").unwrap();
        assert_eq!((cfg.study, cfg.n_runs, cfg.seed, cfg.n_per_run), (Study::Table1, 7, 3, 100_000));
        assert_eq!(cfg.overrides.get("XY"), Some(&0.2));
        assert!(!cfg.population);

        let cfg = parse_experiment("[experiment]\nstudy = \"condition_scan\"\nparam = \"UX\"\n").unwrap();
        assert_eq!(cfg.scans, vec![("UX".to_string(), default_condition_grid("UX"))]);
        assert!(cfg.population);

        let cfg = parse_experiment("[experiment]\nstudy = \"violation_scan\"\ngrid = [0, 0.1]\npopulation = false\n").unwrap();
        assert_eq!(cfg.scans, vec![("WX".to_string(), vec![0.0, 0.1])]);
        assert_eq!(cfg.scan_graph(), GraphId::Violation);

        assert!(parse_experiment("[experiment]\nstudy = \"table1\"\n[graph]\nid = \"base\"\n").is_err());
        assert!(parse_experiment("[experiment]\nstudy = \"violation_scan\"\ngrid = []\n").is_err());
        assert!(matches!(parse_experiment("[graph]\nid = \"base\"\n"), Err(ConfigError::Missing("experiment"))));
    }
}
