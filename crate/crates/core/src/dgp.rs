//! Structural-equation data-generating processes over binary variables.
//!
//! Every node follows a linear-probability equation
//! `V ~ Ber(phi + sum_p (p - 1/2) * delta_pV)` over its parents `p`, so
//! `delta_pV` is exactly the difference `P(V=1 | p=1, ..) - P(V=1 | p=0, ..)`.
//! A [`DgpSpec`] names one of the shipped graph layouts together with its
//! parameters and compiles into a [`StructuralModel`], which can be sampled,
//! enumerated exactly, or intervened on.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CausalGraph, NodeKind};
use crate::seed;
use crate::table::{JointTable, TableError};

/// Largest number of binary nodes `exact_joint` will enumerate.
pub const DIM_CAP: usize = 24;
/// Number of binary dimensions of the confounder in [`GraphId::HighDimU`].
pub const HIGHDIM_DIMS: usize = 10;
/// Each per-dimension vector has L1 norm `HIGHDIM_STRENGTH` times the scalar
/// default of its edge. 1.5 is the largest round factor that keeps the
/// default U -> W and U -> Z edges inside [0, 1].
pub const HIGHDIM_STRENGTH: f64 = 1.5;
const SAMPLE_CHUNK: usize = 4096;
const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DgpError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("`{key}` is not a parameter of graph `{graph}`")]
    UnknownDelta { graph: GraphId, key: String },
    #[error("graph `{graph}` needs a value for `{key}`")]
    MissingDelta { graph: GraphId, key: String },
    #[error("{dims} binary dimensions exceed the enumeration cap of {DIM_CAP}")]
    TooLarge { dims: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("dataset has no rows")]
    EmptyData,
    #[error("malformed dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DgpError> = std::result::Result<T, E>;

/// Graph layouts with shipped structural equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphId {
    /// Two proxies around a binary confounder.
    Base,
    /// Post-treatment proxy: X -> Z.
    Exotic1,
    /// Extra latent `Ustar` feeding U, W and Y.
    Exotic2,
    /// U as a bottleneck between latents `U1` and `U2`.
    Exotic3,
    /// Base plus a direct W -> X edge.
    Violation,
    /// Base with a 10-dimensional binary confounder `U0..U9`.
    HighDimU,
}

impl GraphId {
    pub const ALL: [GraphId; 6] = [
        GraphId::Base,
        GraphId::Exotic1,
        GraphId::Exotic2,
        GraphId::Exotic3,
        GraphId::Violation,
        GraphId::HighDimU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphId::Base => "base",
            GraphId::Exotic1 => "exotic1",
            GraphId::Exotic2 => "exotic2",
            GraphId::Exotic3 => "exotic3",
            GraphId::Violation => "violation",
            GraphId::HighDimU => "high_dim_u",
        }
    }

    /// Nodes in topological order: name, latent flag, scalar-delta parents.
    fn layout(self) -> Vec<(String, bool, Vec<&'static str>)> {
        let node = |n: &str, latent: bool, parents: &[&'static str]| (n.to_string(), latent, parents.to_vec());
        match self {
            GraphId::Base | GraphId::Violation => {
                let x_parents: &[&str] = if self == GraphId::Violation { &["U", "Z", "W"] } else { &["U", "Z"] };
                vec![
                    node("U", true, &[]),
                    node("W", false, &["U"]),
                    node("Z", false, &["U"]),
                    node("X", false, x_parents),
                    node("Y", false, &["U", "W", "X"]),
                ]
            }
            GraphId::Exotic1 => vec![
                node("U", true, &[]),
                node("W", false, &["U"]),
                node("X", false, &["U"]),
                node("Z", false, &["U", "X"]),
                node("Y", false, &["U", "W", "X"]),
            ],
            GraphId::Exotic2 => vec![
                node("Ustar", true, &[]),
                node("U", true, &["Ustar"]),
                node("W", false, &["U", "Ustar"]),
                node("Z", false, &["U"]),
                node("X", false, &["U", "Z"]),
                node("Y", false, &["U", "W", "X", "Ustar"]),
            ],
            GraphId::Exotic3 => vec![
                node("U1", true, &[]),
                node("U", true, &["U1"]),
                node("U2", true, &["U"]),
                node("W", false, &["U", "U2"]),
                node("Z", false, &["U", "U1"]),
                node("X", false, &["U", "Z", "U1"]),
                node("Y", false, &["U", "W", "X", "U2"]),
            ],
            GraphId::HighDimU => {
                let mut nodes: Vec<_> = (0..HIGHDIM_DIMS).map(|j| (format!("U{j}"), true, vec![])).collect();
                nodes.push(node("W", false, &[]));
                nodes.push(node("Z", false, &[]));
                nodes.push(node("X", false, &["Z"]));
                nodes.push(node("Y", false, &["W", "X"]));
                nodes
            }
        }
    }

    /// Keys of the scalar difference parameters, `parent ++ child`.
    pub fn scalar_keys(self) -> Vec<String> {
        self.layout()
            .into_iter()
            .flat_map(|(child, _, parents)| parents.into_iter().map(move |p| format!("{p}{child}")))
            .collect()
    }

    /// Keys of the per-dimension confounder vectors (HighDimU only).
    pub fn vector_keys(self) -> &'static [&'static str] {
        match self {
            GraphId::HighDimU => &["UW", "UZ", "UX", "UY"],
            _ => &[],
        }
    }
}

impl fmt::Display for GraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphId {
    type Err = DgpError;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        GraphId::ALL
            .into_iter()
            .find(|g| g.name().replace('_', "") == key)
            .ok_or_else(|| DgpError::InvalidSpec(format!("unknown graph id `{s}`")))
    }
}

/// Shape of a per-dimension confounder vector across `j = 0..10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPattern {
    /// Same strength in every dimension.
    Constant,
    /// Strength proportional to `10 - j`.
    Linear,
    /// All strength in dimension 0, zero for `j >= 1`.
    Leading,
}

impl DeltaPattern {
    /// Nonnegative weights summing to 1.
    pub fn weights(self, dims: usize) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            DeltaPattern::Constant => vec![1.0; dims],
            DeltaPattern::Linear => (0..dims).map(|j| (dims - j) as f64).collect(),
            DeltaPattern::Leading => (0..dims).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect(),
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / total).collect()
    }
}

impl FromStr for DeltaPattern {
    type Err = DgpError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(DeltaPattern::Constant),
            "linear" => Ok(DeltaPattern::Linear),
            "leading" | "zeroed" => Ok(DeltaPattern::Leading),
            other => Err(DgpError::InvalidSpec(format!("unknown delta pattern `{other}`"))),
        }
    }
}

/// Fixture value of a difference parameter where no other value is given.
pub fn default_delta(key: &str) -> f64 {
    match key {
        "UW" | "UZ" => 0.6,
        "UX" | "ZX" | "UY" | "WY" | "WX" => 0.2,
        "XY" | "XZ" => 0.1,
        _ => 0.3,
    }
}

/// A named structural-equation model: layout, baseline probability and
/// difference parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub graph: GraphId,
    pub phi: f64,
    pub deltas: BTreeMap<String, f64>,
    /// Per-dimension vectors, keyed like the scalar edge they replace.
    pub delta_vectors: BTreeMap<String, Vec<f64>>,
}

impl DgpSpec {
    pub fn default_for(graph: GraphId) -> Self {
        let deltas = graph.scalar_keys().into_iter().map(|k| {
            let v = default_delta(&k);
            (k, v)
        });
        let mut spec = DgpSpec { graph, phi: 0.5, deltas: deltas.collect(), delta_vectors: BTreeMap::new() };
        if graph == GraphId::HighDimU {
            spec.set_patterns(DeltaPattern::Constant, DeltaPattern::Constant, HIGHDIM_STRENGTH);
        }
        spec
    }

    /// HighDimU spec whose U -> {W, Z, X} vectors follow `uv` and whose
    /// U -> Y vector follows `uy`.
    pub fn high_dim(uv: DeltaPattern, uy: DeltaPattern) -> Self {
        let mut spec = DgpSpec::default_for(GraphId::HighDimU);
        spec.set_patterns(uv, uy, HIGHDIM_STRENGTH);
        spec
    }

    /// Rebuilds the confounder vectors from patterns; each vector has L1 norm
    /// `strength * default_delta(key)`.
    pub fn set_patterns(&mut self, uv: DeltaPattern, uy: DeltaPattern, strength: f64) {
        for key in GraphId::HighDimU.vector_keys() {
            let pattern = if *key == "UY" { uy } else { uv };
            let scale = strength * default_delta(key);
            let v = pattern.weights(HIGHDIM_DIMS).into_iter().map(|w| w * scale).collect();
            self.delta_vectors.insert(key.to_string(), v);
        }
    }

    pub fn with_delta(mut self, key: &str, value: f64) -> Result<Self> {
        self.set_delta(key, value)?;
        Ok(self)
    }

    pub fn set_delta(&mut self, key: &str, value: f64) -> Result<()> {
        if !self.graph.scalar_keys().iter().any(|k| k == key) {
            return Err(DgpError::UnknownDelta { graph: self.graph, key: key.to_string() });
        }
        self.deltas.insert(key.to_string(), value);
        Ok(())
    }

    pub fn set_delta_vector(&mut self, key: &str, value: Vec<f64>) -> Result<()> {
        if !self.graph.vector_keys().contains(&key) {
            return Err(DgpError::UnknownDelta { graph: self.graph, key: key.to_string() });
        }
        self.delta_vectors.insert(key.to_string(), value);
        Ok(())
    }

    pub fn delta(&self, key: &str) -> Option<f64> {
        self.deltas.get(key).copied()
    }

    /// Number of binary dimensions of the confounder U.
    pub fn u_dims(&self) -> usize {
        if self.graph == GraphId::HighDimU {
            HIGHDIM_DIMS
        } else {
            1
        }
    }

    /// Checks keys, vector shapes and that every Bernoulli argument stays in [0, 1].
    pub fn validate(&self) -> Result<()> {
        self.structural_model().map(|_| ())
    }

    /// Compiles the spec into its structural equations.
    pub fn structural_model(&self) -> Result<StructuralModel> {
        if !(self.phi > 0.0 && self.phi < 1.0) {
            return Err(DgpError::InvalidSpec(format!("phi = {} is outside (0, 1)", self.phi)));
        }
        let scalar_keys = self.graph.scalar_keys();
        for key in self.deltas.keys() {
            if !scalar_keys.contains(key) {
                return Err(DgpError::UnknownDelta { graph: self.graph, key: key.clone() });
            }
        }
        for key in self.delta_vectors.keys() {
            if !self.graph.vector_keys().contains(&key.as_str()) {
                return Err(DgpError::UnknownDelta { graph: self.graph, key: key.clone() });
            }
        }
        let scalar = |key: &str| -> Result<f64> {
            let v = self
                .deltas
                .get(key)
                .copied()
                .ok_or_else(|| DgpError::MissingDelta { graph: self.graph, key: key.to_string() })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DgpError::InvalidSpec(format!("`{key}` is not finite")))
            }
        };

        let layout = self.graph.layout();
        let names: Vec<&str> = layout.iter().map(|(n, _, _)| n.as_str()).collect();
        let pos = |n: &str| names.iter().position(|m| *m == n).expect("layout parents precede children");
        let mut equations = Vec::with_capacity(layout.len());
        for (name, latent, parents) in &layout {
            let mut terms = Vec::new();
            if let Some(vkey) = self.graph.vector_keys().iter().find(|k| k.ends_with(name.as_str())) {
                let v = self
                    .delta_vectors
                    .get(*vkey)
                    .ok_or_else(|| DgpError::MissingDelta { graph: self.graph, key: vkey.to_string() })?;
                if v.len() != HIGHDIM_DIMS || v.iter().any(|d| !d.is_finite()) {
                    return Err(DgpError::InvalidSpec(format!(
                        "`{vkey}` needs {HIGHDIM_DIMS} finite entries, got {}",
                        v.len()
                    )));
                }
                terms.extend(v.iter().enumerate().map(|(j, &d)| (pos(&format!("U{j}")), d)));
            }
            for p in parents {
                terms.push((pos(p), scalar(&format!("{p}{name}"))?));
            }
            let mechanism = if terms.is_empty() { Mechanism::Root } else { Mechanism::Linear(terms) };
            equations.push(Equation { name: name.clone(), latent: *latent, mechanism });
        }
        StructuralModel::new(self.phi, equations)
    }

    pub fn graph(&self) -> Result<CausalGraph> {
        Ok(self.structural_model()?.graph())
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.structural_model()?.sample(n, seed)
    }

    pub fn exact_joint(&self) -> Result<JointTable> {
        self.structural_model()?.exact_joint()
    }

    /// Exact joint of the observed nodes.
    pub fn observed_joint(&self) -> Result<JointTable> {
        self.structural_model()?.observed_joint()
    }

    /// `P(Y = 1 | do(X = x))` by enumerating the mutilated model.
    pub fn do_distribution(&self, x: u8) -> Result<f64> {
        let mutilated = self.structural_model()?.intervene("X", x)?;
        Ok(mutilated.exact_joint()?.prob(&[("Y", 1)])?)
    }

    /// `P(Y=1 | do(X=1)) - P(Y=1 | do(X=0))`.
    pub fn true_ate(&self) -> Result<f64> {
        Ok(self.do_distribution(1)? - self.do_distribution(0)?)
    }
}

/// How a node's value is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    /// `Ber(phi)`.
    Root,
    /// `Ber(phi + sum (v_parent - 1/2) * delta)` over `(parent index, delta)`.
    Linear(Vec<(usize, f64)>),
    /// Fixed by intervention.
    Constant(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    pub latent: bool,
    pub mechanism: Mechanism,
}

/// Binary structural equations in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralModel {
    phi: f64,
    equations: Vec<Equation>,
}

impl StructuralModel {
    /// Equations must be topologically ordered and every reachable Bernoulli
    /// argument must lie in [0, 1].
    pub fn new(phi: f64, equations: Vec<Equation>) -> Result<Self> {
        for (i, eq) in equations.iter().enumerate() {
            if equations[..i].iter().any(|e| e.name == eq.name) {
                return Err(DgpError::InvalidSpec(format!("duplicate node `{}`", eq.name)));
            }
            let terms: &[(usize, f64)] = match &eq.mechanism {
                Mechanism::Linear(t) => t,
                Mechanism::Constant(v) if *v > 1 => {
                    return Err(DgpError::InvalidSpec(format!("`{}` fixed to non-binary {v}", eq.name)))
                }
                _ => &[],
            };
            if let Some(&(p, _)) = terms.iter().find(|(p, _)| *p >= i) {
                return Err(DgpError::InvalidSpec(format!(
                    "`{}` depends on node {p}, which does not precede it",
                    eq.name
                )));
            }
            if !matches!(eq.mechanism, Mechanism::Constant(_)) {
                let spread: f64 = terms.iter().map(|(_, d)| d.abs() / 2.0).sum();
                let (lo, hi) = (phi - spread, phi + spread);
                if lo < -BOUND_TOL || hi > 1.0 + BOUND_TOL {
                    return Err(DgpError::InvalidSpec(format!(
                        "Bernoulli argument of `{}` ranges over [{lo:.4}, {hi:.4}]",
                        eq.name
                    )));
                }
            }
        }
        Ok(StructuralModel { phi, equations })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn names(&self) -> Vec<&str> {
        self.equations.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn observed_names(&self) -> Vec<&str> {
        self.equations.iter().filter(|e| !e.latent).map(|e| e.name.as_str()).collect()
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.equations
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| DgpError::UnknownNode(name.to_string()))
    }

    /// The causal graph implied by the equations; zero-valued deltas still
    /// count as edges.
    pub fn graph(&self) -> CausalGraph {
        let nodes: Vec<(&str, NodeKind)> = self
            .equations
            .iter()
            .map(|e| (e.name.as_str(), if e.latent { NodeKind::Latent } else { NodeKind::Observed }))
            .collect();
        let mut edges = Vec::new();
        for eq in &self.equations {
            if let Mechanism::Linear(terms) = &eq.mechanism {
                edges.extend(terms.iter().map(|&(p, _)| (self.equations[p].name.as_str(), eq.name.as_str())));
            }
        }
        CausalGraph::new(&nodes, &edges).expect("topologically ordered equations form a DAG")
    }

    /// Replaces the equation of `name` by the constant `value`.
    pub fn intervene(&self, name: &str, value: u8) -> Result<StructuralModel> {
        let i = self.position(name)?;
        let mut equations = self.equations.clone();
        equations[i].mechanism = Mechanism::Constant(value);
        StructuralModel::new(self.phi, equations)
    }

    #[inline]
    fn prob_one(&self, mechanism: &Mechanism, value_of: impl Fn(usize) -> u8) -> f64 {
        match mechanism {
            Mechanism::Root => self.phi,
            Mechanism::Constant(v) => *v as f64,
            Mechanism::Linear(terms) => {
                let arg = terms.iter().fold(self.phi, |acc, &(p, d)| acc + (value_of(p) as f64 - 0.5) * d);
                arg.clamp(0.0, 1.0)
            }
        }
    }

    /// `n` i.i.d. draws. Rows are generated in fixed-size chunks, each with an
    /// RNG derived from `(seed, chunk index)`, so the result does not depend
    /// on the number of worker threads.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(DgpError::EmptyData);
        }
        let k = self.equations.len();
        let mut data = vec![0u8; n * k];
        data.par_chunks_mut(SAMPLE_CHUNK * k).enumerate().for_each(|(chunk, rows)| {
            let mut rng = seed::stream(seed, &[chunk as u64]);
            for row in rows.chunks_mut(k) {
                for (i, eq) in self.equations.iter().enumerate() {
                    row[i] = match eq.mechanism {
                        Mechanism::Constant(v) => v,
                        ref m => {
                            let p = self.prob_one(m, |j| row[j]);
                            (rng.random::<f64>() < p) as u8
                        }
                    };
                }
            }
        });
        let columns = self
            .equations
            .iter()
            .map(|e| Column { name: e.name.clone(), latent: e.latent })
            .collect();
        Ok(Dataset { columns, rows: n, data, seed: Some(seed) })
    }

    /// Exact mass of every configuration, built one node at a time in
    /// topological order (bit `i` of the cell index is node `i`).
    pub fn exact_joint(&self) -> Result<JointTable> {
        let k = self.equations.len();
        if k > DIM_CAP {
            return Err(DgpError::TooLarge { dims: k });
        }
        let mut mass = Vec::with_capacity(1 << k);
        mass.push(1.0);
        for (i, eq) in self.equations.iter().enumerate() {
            let half = mass.len();
            mass.resize(2 * half, 0.0);
            for cfg in 0..half {
                let p = self.prob_one(&eq.mechanism, |j| ((cfg >> j) & 1) as u8);
                let m = mass[cfg];
                mass[cfg] = m * (1.0 - p);
                mass[cfg | (1 << i)] = m * p;
            }
        }
        Ok(JointTable::from_raw(self.names().iter().map(|s| s.to_string()).collect(), mass))
    }

    pub fn observed_joint(&self) -> Result<JointTable> {
        Ok(self.exact_joint()?.marginal(&self.observed_names())?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    pub latent: bool,
}

/// Header prefix that marks latent columns in CSV exports.
pub const LATENT_PREFIX: &str = "latent_";

/// Rows of binary values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: usize,
    data: Vec<u8>,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>, data: Vec<u8>) -> Result<Self> {
        let k = columns.len();
        if k == 0 || !data.len().is_multiple_of(k) {
            return Err(DgpError::Dataset(format!("{} values do not fill {k} columns", data.len())));
        }
        if let Some(v) = data.iter().find(|&&v| v > 1) {
            return Err(DgpError::Dataset(format!("non-binary value {v}")));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|d| d.name == c.name) {
                return Err(DgpError::Dataset(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Dataset { rows: data.len() / k, columns, data, seed: None })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let k = self.columns.len();
        &self.data[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.data.chunks(self.columns.len())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| DgpError::UnknownNode(name.to_string()))
    }

    /// Empirical joint distribution of `vars`.
    pub fn frequencies(&self, vars: &[&str]) -> Result<JointTable> {
        if self.rows == 0 {
            return Err(DgpError::EmptyData);
        }
        let idx: Vec<usize> = vars.iter().map(|v| self.column_index(v)).collect::<Result<_>>()?;
        let mut counts = vec![0u64; 1 << vars.len()];
        for row in self.rows() {
            let cell = idx.iter().enumerate().fold(0usize, |acc, (j, &c)| acc | ((row[c] as usize) << j));
            counts[cell] += 1;
        }
        Ok(JointTable::from_counts(vars.iter().map(|s| s.to_string()).collect(), &counts)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| {
            if c.latent {
                format!("{LATENT_PREFIX}{}", c.name)
            } else {
                c.name.clone()
            }
        }))?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| if *v == 1 { "1" } else { "0" }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let columns: Vec<Column> = r
            .headers()?
            .iter()
            .map(|h| match h.strip_prefix(LATENT_PREFIX) {
                Some(name) => Column { name: name.to_string(), latent: true },
                None => Column { name: h.to_string(), latent: false },
            })
            .collect();
        let mut data = Vec::new();
        for (i, record) in r.records().enumerate() {
            for field in record?.iter() {
                data.push(match field.trim() {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(DgpError::Dataset(format!("row {}: value `{other}` is not 0/1", i + 1))),
                });
            }
        }
        Dataset::new(columns, data)
    }
}
