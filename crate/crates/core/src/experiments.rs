//! Replication studies: bias tables over graph families and
//! one-parameter scans of the condition number and of the W -> X violation.
//!
//! Every replication draws its data from `derive_seed(master, [scenario, run])`
//! and results are collected by run index, so outputs do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::{DeltaPattern, DgpError, DgpSpec, GraphId, HIGHDIM_STRENGTH};
use crate::estimators::{
    proximal_g, regression_ate, regression_ate_population, relative_bias, EstimateError, Method, ProbModel,
};
use crate::seed::derive_seed;

pub const DEFAULT_N_PER_RUN: usize = 100_000;
pub const DEFAULT_N_RUNS: usize = 100;
pub const DEFAULT_COND_CUTOFF: f64 = 30.0;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const MIN_N_PER_RUN: usize = 10_000;
/// Observed covariates of the regression benchmark.
pub const REGRESSION_COVARIATES: [&str; 2] = ["Z", "W"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error(transparent)]
    Dgp(#[from] DgpError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

fn config_err(key: &str, msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config { key: key.to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Table1,
    ConditionScan,
    ViolationScan,
    Table2,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Table1 => "table1",
            Study::ConditionScan => "condition_scan",
            Study::ViolationScan => "violation_scan",
            Study::Table2 => "table2",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "table1" => Ok(Study::Table1),
            "table2" => Ok(Study::Table2),
            "conditionscan" | "scancondition" => Ok(Study::ConditionScan),
            "violationscan" | "scanviolation" => Ok(Study::ViolationScan),
            _ => Err(config_err("study", format!("unknown study `{s}`"))),
        }
    }
}

/// Default grid of a condition-number scan parameter.
pub fn default_condition_grid(param: &str) -> Vec<f64> {
    let top = match param {
        "WY" | "UY" => 7,
        _ => 8,
    };
    (0..=top).map(|i| i as f64 / 10.0).collect()
}

/// Parameters scanned when a condition-scan config names none.
pub const CONDITION_SCAN_PARAMS: [&str; 6] = ["UW", "UZ", "UX", "ZX", "WY", "UY"];

/// Nonnegative strengths of the W -> X edge; the sign of the edge changes
/// the sign and size of the bias, so two-sided grids are left to configs.
pub fn default_violation_grid() -> Vec<f64> {
    (0..=6).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub study: Study,
    /// Graph of scan studies; table studies use fixed scenario lists.
    pub graph: Option<GraphId>,
    pub phi: Option<f64>,
    /// Scalar difference parameters replacing defaults wherever the key exists.
    pub overrides: BTreeMap<String, f64>,
    /// Per-dimension L1 budget factor of the high-dimensional confounder.
    pub strength: f64,
    pub n_per_run: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub cond_cutoff: f64,
    /// Exact enumeration instead of sampling.
    pub population: bool,
    /// `(parameter, grid)` pairs, one scan each.
    pub scans: Vec<(String, Vec<f64>)>,
}

impl ExperimentConfig {
    /// Defaults of a study; scans run in population mode.
    pub fn new(study: Study) -> Self {
        let scans = match study {
            Study::ConditionScan => {
                CONDITION_SCAN_PARAMS.iter().map(|p| (p.to_string(), default_condition_grid(p))).collect()
            }
            Study::ViolationScan => vec![("WX".to_string(), default_violation_grid())],
            _ => Vec::new(),
        };
        ExperimentConfig {
            study,
            graph: None,
            phi: None,
            overrides: BTreeMap::new(),
            strength: HIGHDIM_STRENGTH,
            n_per_run: DEFAULT_N_PER_RUN,
            n_runs: DEFAULT_N_RUNS,
            seed: DEFAULT_SEED,
            cond_cutoff: DEFAULT_COND_CUTOFF,
            population: matches!(study, Study::ConditionScan | Study::ViolationScan),
            scans,
        }
    }

    pub fn scan_graph(&self) -> GraphId {
        self.graph.unwrap_or(match self.study {
            Study::ViolationScan => GraphId::Violation,
            _ => GraphId::Base,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_run < MIN_N_PER_RUN {
            return Err(config_err("n_per_run", format!("must be at least {MIN_N_PER_RUN}, got {}", self.n_per_run)));
        }
        if self.n_runs == 0 {
            return Err(config_err("n_runs", "must be at least 1"));
        }
        if !(self.cond_cutoff > 0.0) {
            return Err(config_err("cond_cutoff", "must be positive"));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(config_err("strength", "must be finite and nonnegative"));
        }
        match self.study {
            Study::ConditionScan | Study::ViolationScan => {
                if self.scans.is_empty() {
                    return Err(config_err("grid", "scan studies need a parameter grid"));
                }
                let keys = self.scan_graph().scalar_keys();
                for (param, grid) in &self.scans {
                    if !keys.contains(param) {
                        return Err(config_err("param", format!("`{param}` is not a parameter of `{}`", self.scan_graph())));
                    }
                    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
                        return Err(config_err("grid", "must be a nonempty list of finite values"));
                    }
                }
            }
            Study::Table1 | Study::Table2 => {}
        }
        let graphs = self.graphs_in_use();
        for key in self.overrides.keys() {
            if !graphs.iter().any(|g| g.scalar_keys().contains(key)) {
                return Err(config_err(key, "is not a parameter of any graph in this study"));
            }
        }
        Ok(())
    }

    fn graphs_in_use(&self) -> Vec<GraphId> {
        match self.study {
            Study::Table1 => TABLE1_GRAPHS.to_vec(),
            Study::Table2 => vec![GraphId::Exotic2, GraphId::HighDimU],
            _ => vec![self.scan_graph()],
        }
    }

    /// Default spec of `graph` with the config's overrides applied.
    pub fn spec_for(&self, graph: GraphId) -> DgpSpec {
        let mut spec = DgpSpec::default_for(graph);
        if let Some(phi) = self.phi {
            spec.phi = phi;
        }
        for (k, v) in &self.overrides {
            if spec.deltas.contains_key(k) {
                spec.deltas.insert(k.clone(), *v);
            }
        }
        spec
    }
}

pub const TABLE1_GRAPHS: [GraphId; 4] = [GraphId::Base, GraphId::Exotic1, GraphId::Exotic2, GraphId::Exotic3];

/// `(uv, uy)` patterns of the high-dimensional confounder scenarios.
pub const TABLE2_PATTERNS: [(DeltaPattern, DeltaPattern); 6] = [
    (DeltaPattern::Constant, DeltaPattern::Constant),
    (DeltaPattern::Linear, DeltaPattern::Linear),
    (DeltaPattern::Linear, DeltaPattern::Constant),
    (DeltaPattern::Constant, DeltaPattern::Linear),
    (DeltaPattern::Leading, DeltaPattern::Constant),
    (DeltaPattern::Constant, DeltaPattern::Leading),
];

fn pattern_name(p: DeltaPattern) -> &'static str {
    match p {
        DeltaPattern::Constant => "constant",
        DeltaPattern::Linear => "linear",
        DeltaPattern::Leading => "zeroed",
    }
}

pub fn table2_scenario_name(uv: DeltaPattern, uy: DeltaPattern) -> String {
    format!("highdim_uv_{}_uy_{}", pattern_name(uv), pattern_name(uy))
}

pub const TABLE2_BINARY_SCENARIO: &str = "exotic2_binary_x";

/// Outcome of one replication for one method.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Included(f64),
    /// Removed by the condition-number gate.
    Omitted,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: Option<f64>,
    pub n_runs: usize,
    pub n_included: usize,
    /// Gated plus failed runs.
    pub n_omitted: usize,
    pub n_failed: usize,
    pub ci: Option<(f64, f64)>,
}

pub fn summarize(runs: &[RunOutcome]) -> SummaryStats {
    let values: Vec<f64> = runs
        .iter()
        .filter_map(|r| match r {
            RunOutcome::Included(v) => Some(*v),
            _ => None,
        })
        .collect();
    let n_failed = runs.iter().filter(|r| matches!(r, RunOutcome::Failed(_))).count();
    let k = values.len();
    let mean = (k > 0).then(|| values.iter().sum::<f64>() / k as f64);
    let sd = mean.filter(|_| k > 1).map(|m| {
        let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (k - 1) as f64).sqrt()
    });
    SummaryStats { mean, sd, n_runs: runs.len(), n_included: k, n_omitted: runs.len() - k, n_failed, ci: None }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: String,
    pub method: Method,
    pub stats: SummaryStats,
}

/// One replication: ungated relative biases of both methods.
struct Replication {
    proximal: std::result::Result<f64, String>,
    /// Infinite when the matrix is singular, NaN when no matrix was formed.
    max_cond: f64,
    regression: std::result::Result<f64, String>,
    regression_ci: Option<(f64, f64)>,
}

impl Replication {
    fn gated(&self, cutoff: f64) -> RunOutcome {
        match &self.proximal {
            Err(e) => RunOutcome::Failed(e.clone()),
            Ok(_) if !(self.max_cond <= cutoff) => RunOutcome::Omitted,
            Ok(b) => RunOutcome::Included(*b),
        }
    }

    fn regression_outcome(&self) -> RunOutcome {
        match &self.regression {
            Ok(b) => RunOutcome::Included(*b),
            Err(e) => RunOutcome::Failed(e.clone()),
        }
    }
}

fn replicate(spec: &DgpSpec, truth: f64, n: Option<usize>, seed: u64) -> Result<Replication> {
    let (model, regression) = match n {
        Some(n) => {
            let data = spec.sample(n, seed)?;
            (ProbModel::fit(&data), regression_ate(&data, &REGRESSION_COVARIATES))
        }
        None => {
            let joint = spec.observed_joint()?;
            (ProbModel::from_joint(&joint), regression_ate_population(&joint, &REGRESSION_COVARIATES))
        }
    };
    let (proximal, max_cond) = match model.and_then(|m| proximal_g(&m, 1)) {
        Ok(r) => (Ok(relative_bias(r.ate, truth)?), r.max_condition_number().unwrap_or(f64::INFINITY)),
        Err(e @ EstimateError::Singular { .. }) => (Err(e.to_string()), f64::INFINITY),
        Err(e) => (Err(e.to_string()), f64::NAN),
    };
    let (regression, regression_ci) = match regression {
        Ok(r) => {
            let ci = match r.ci95 {
                Some((lo, hi)) => Some((relative_bias(lo, truth)?, relative_bias(hi, truth)?)),
                None => None,
            };
            (Ok(relative_bias(r.ate, truth)?), ci)
        }
        Err(e) => (Err(e.to_string()), None),
    };
    Ok(Replication { proximal, max_cond, regression, regression_ci })
}

/// Replications of one scenario, ordered by run index.
fn replications(cfg: &ExperimentConfig, spec: &DgpSpec, scenario: u64) -> Result<Vec<Replication>> {
    let truth = spec.true_ate()?;
    if cfg.population {
        return Ok(vec![replicate(spec, truth, None, 0)?]);
    }
    (0..cfg.n_runs)
        .into_par_iter()
        .map(|run| {
            let seed = derive_seed(cfg.seed, &[scenario, run as u64]);
            replicate(spec, truth, Some(cfg.n_per_run), seed)
        })
        .collect()
}

fn mean_ci(reps: &[Replication]) -> Option<(f64, f64)> {
    let cis: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.regression_ci).collect();
    if cis.is_empty() {
        return None;
    }
    let k = cis.len() as f64;
    Some((cis.iter().map(|c| c.0).sum::<f64>() / k, cis.iter().map(|c| c.1).sum::<f64>() / k))
}

fn table_rows(cfg: &ExperimentConfig, scenarios: Vec<(String, DgpSpec)>) -> Result<Vec<TableRow>> {
    for (_, spec) in &scenarios {
        spec.validate()?;
    }
    let mut rows = Vec::with_capacity(2 * scenarios.len());
    for (i, (name, spec)) in scenarios.iter().enumerate() {
        let reps = replications(cfg, spec, i as u64)?;
        let proximal: Vec<RunOutcome> = reps.iter().map(|r| r.gated(cfg.cond_cutoff)).collect();
        let regression: Vec<RunOutcome> = reps.iter().map(Replication::regression_outcome).collect();
        let mut reg_stats = summarize(&regression);
        reg_stats.ci = mean_ci(&reps);
        rows.push(TableRow { scenario: name.clone(), method: Method::Proximal, stats: summarize(&proximal) });
        rows.push(TableRow { scenario: name.clone(), method: Method::Regression, stats: reg_stats });
    }
    Ok(rows)
}

fn expect_study(cfg: &ExperimentConfig, study: Study) -> Result<()> {
    if cfg.study != study {
        return Err(config_err("study", format!("expected `{study}`, got `{}`", cfg.study)));
    }
    cfg.validate()
}

/// Relative ATE bias of the proximal and regression estimators on the
/// four equivalence-class graphs.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    expect_study(cfg, Study::Table1)?;
    let scenarios = TABLE1_GRAPHS.iter().map(|&g| (g.name().to_string(), cfg.spec_for(g))).collect();
    table_rows(cfg, scenarios)
}

/// The bias table for a ten-dimensional confounder under each pattern
/// pair, preceded by the binary-confounder reference graph.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    expect_study(cfg, Study::Table2)?;
    let mut scenarios = vec![(TABLE2_BINARY_SCENARIO.to_string(), cfg.spec_for(GraphId::Exotic2))];
    for (uv, uy) in TABLE2_PATTERNS {
        let mut spec = cfg.spec_for(GraphId::HighDimU);
        spec.set_patterns(uv, uy, cfg.strength);
        scenarios.push((table2_scenario_name(uv, uy), spec));
    }
    table_rows(cfg, scenarios)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub param: String,
    pub value: f64,
    /// Larger of the two per-arm condition numbers; averaged over runs in
    /// sampled mode.
    pub cond_number: f64,
    pub omitted: bool,
    pub proximal_bias: Option<f64>,
    pub regression_bias: Option<f64>,
    pub regression_ci: Option<(f64, f64)>,
}

fn scan(cfg: &ExperimentConfig) -> Result<Vec<ScanPoint>> {
    let graph = cfg.scan_graph();
    let mut jobs = Vec::new();
    for (param, grid) in &cfg.scans {
        for &value in grid {
            let spec = cfg.spec_for(graph).with_delta(param, value)?;
            spec.validate()?;
            jobs.push((param.clone(), value, spec));
        }
    }
    let mut points = Vec::with_capacity(jobs.len());
    for (i, (param, value, spec)) in jobs.into_iter().enumerate() {
        let reps = replications(cfg, &spec, i as u64)?;
        let cond_number = reps.iter().map(|r| r.max_cond).sum::<f64>() / reps.len() as f64;
        let omitted = !(cond_number <= cfg.cond_cutoff);
        let proximal_bias = if omitted {
            None
        } else {
            let ungated: Vec<RunOutcome> = reps.iter().map(|r| r.gated(f64::INFINITY)).collect();
            summarize(&ungated).mean
        };
        let regression: Vec<RunOutcome> = reps.iter().map(Replication::regression_outcome).collect();
        points.push(ScanPoint {
            param,
            value,
            cond_number,
            omitted,
            proximal_bias,
            regression_bias: summarize(&regression).mean,
            regression_ci: mean_ci(&reps),
        });
    }
    Ok(points)
}

pub fn run_condition_scan(cfg: &ExperimentConfig) -> Result<Vec<ScanPoint>> {
    expect_study(cfg, Study::ConditionScan)?;
    scan(cfg)
}

pub fn run_violation_scan(cfg: &ExperimentConfig) -> Result<Vec<ScanPoint>> {
    expect_study(cfg, Study::ViolationScan)?;
    scan(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudyOutput {
    Table(Vec<TableRow>),
    Scan(Vec<ScanPoint>),
}

pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    Ok(match cfg.study {
        Study::Table1 => StudyOutput::Table(run_table1(cfg)?),
        Study::Table2 => StudyOutput::Table(run_table2(cfg)?),
        Study::ConditionScan => StudyOutput::Scan(run_condition_scan(cfg)?),
        Study::ViolationScan => StudyOutput::Scan(run_violation_scan(cfg)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub scenario: String,
    pub method: Method,
    pub mean_bias: Option<f64>,
    pub sd_bias: Option<f64>,
    pub n_runs: usize,
    pub n_omitted: usize,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub param: String,
    pub value: f64,
    pub method: Method,
    pub bias: Option<f64>,
    pub cond_number: f64,
    pub omitted: bool,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl TableRow {
    pub fn record(&self) -> TableRecord {
        TableRecord {
            scenario: self.scenario.clone(),
            method: self.method,
            mean_bias: self.stats.mean,
            sd_bias: self.stats.sd,
            n_runs: self.stats.n_runs,
            n_omitted: self.stats.n_omitted,
            ci_low: self.stats.ci.map(|c| c.0),
            ci_high: self.stats.ci.map(|c| c.1),
        }
    }
}

impl ScanPoint {
    /// One record per method; the regression record is never gated.
    pub fn records(&self) -> [ScanRecord; 2] {
        let base = |method, bias, omitted, ci: Option<(f64, f64)>| ScanRecord {
            param: self.param.clone(),
            value: self.value,
            method,
            bias,
            cond_number: self.cond_number,
            omitted,
            ci_low: ci.map(|c| c.0),
            ci_high: ci.map(|c| c.1),
        };
        [
            base(Method::Proximal, self.proximal_bias, self.omitted, None),
            base(Method::Regression, self.regression_bias, false, self.regression_ci),
        ]
    }
}

impl StudyOutput {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match self {
            StudyOutput::Table(rows) => {
                for r in rows {
                    w.serialize(r.record())?;
                }
            }
            StudyOutput::Scan(points) => {
                for r in points.iter().flat_map(ScanPoint::records) {
                    w.serialize(r)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Array of the CSV records; infinite condition numbers become `null`.
    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        match self {
            StudyOutput::Table(rows) => {
                serde_json::to_writer_pretty(&mut writer, &rows.iter().map(TableRow::record).collect::<Vec<_>>())?
            }
            StudyOutput::Scan(points) => serde_json::to_writer_pretty(
                &mut writer,
                &points.iter().flat_map(ScanPoint::records).collect::<Vec<_>>(),
            )?,
        }
        writeln!(writer)?;
        Ok(())
    }
}
