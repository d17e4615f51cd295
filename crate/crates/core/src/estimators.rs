//! Histogram estimators of interventional probabilities.
//!
//! The proximal g-formula replaces the `P(Z)` weights of the backdoor
//! g-formula by `P(W | Z, x)^-1 P(W)`:
//!
//! ```text
//! P(y | do(x)) = sum_{z,w} P(y | x, z) [P(W | Z, x)^-1]_{z,w} P(w)
//! ```
//!
//! All estimators take either an exact observed joint (population mode) or
//! frequencies from a [`Dataset`]. Estimates are never clipped to [0, 1];
//! an out-of-range value is reported through [`Warning::OutOfRange`].

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgp::{Dataset, DgpError};
use crate::table::{JointTable, TableError};

/// Variables of the proxy setting, in the order used by [`ProbModel`].
pub const OBSERVED: [&str; 4] = ["X", "Y", "Z", "W"];
/// `|det|` below which the 2x2 adjugate inverse is refused.
pub const DET_TOL: f64 = 1e-12;
/// Smallest singular value treated as exactly zero.
pub const SIGMA_TOL: f64 = 1e-14;
/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("dataset has no rows")]
    EmptyData,
    #[error("stratum {stratum} has zero mass at x = {x}")]
    EmptyStratum { stratum: String, x: u8 },
    #[error("P(W | Z, x = {x}) is singular")]
    Singular { x: u8 },
    #[error("regression design matrix is rank deficient")]
    RankDeficient,
    #[error("relative bias undefined for a zero true effect")]
    ZeroTruth,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

pub type Result<T, E = EstimateError> = std::result::Result<T, E>;

impl From<DgpError> for EstimateError {
    fn from(e: DgpError) -> Self {
        match e {
            DgpError::EmptyData => EstimateError::EmptyData,
            DgpError::UnknownNode(n) => EstimateError::MissingColumn(n),
            DgpError::Table(t) => EstimateError::Table(t),
            other => EstimateError::MissingColumn(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Exact,
    Empirical(usize),
}

/// Joint distribution of (X, Y, Z, W).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbModel {
    table: JointTable,
    origin: Origin,
}

impl ProbModel {
    /// Population model from an exact joint; extra variables are summed out.
    pub fn from_joint(joint: &JointTable) -> Result<Self> {
        Ok(ProbModel { table: joint.marginal(&OBSERVED)?, origin: Origin::Exact })
    }

    /// Normalized frequency table of the observed columns; latent columns are
    /// ignored.
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.n_rows() == 0 {
            return Err(EstimateError::EmptyData);
        }
        Ok(ProbModel { table: data.frequencies(&OBSERVED)?, origin: Origin::Empirical(data.n_rows()) })
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn table(&self) -> &JointTable {
        &self.table
    }

    #[inline]
    fn cell(&self, x: usize, y: usize, z: usize, w: usize) -> f64 {
        self.table.mass()[x | (y << 1) | (z << 2) | (w << 3)]
    }

    /// Marginal mass; `None` sums a variable out.
    pub fn p(&self, x: Option<u8>, y: Option<u8>, z: Option<u8>, w: Option<u8>) -> f64 {
        let range = |v: Option<u8>| match v {
            Some(v) => v as usize..v as usize + 1,
            None => 0..2,
        };
        let mut total = 0.0;
        for xi in range(x) {
            for yi in range(y) {
                for zi in range(z) {
                    for wi in range(w) {
                        total += self.cell(xi, yi, zi, wi);
                    }
                }
            }
        }
        total
    }
}

/// `P(W | Z, x)` with rows indexed by w and columns by z.
#[derive(Debug, Clone, PartialEq)]
pub struct CondMatrix {
    pub x: u8,
    pub m: DMatrix<f64>,
}

impl CondMatrix {
    pub fn new(x: u8, m: DMatrix<f64>) -> Self {
        CondMatrix { x, m }
    }
}

pub fn cond_matrix(model: &ProbModel, x: u8) -> Result<CondMatrix> {
    let mut m = DMatrix::zeros(2, 2);
    for z in 0..2u8 {
        let pzx = model.p(Some(x), None, Some(z), None);
        if pzx <= 0.0 {
            return Err(EstimateError::EmptyStratum { stratum: format!("Z={z}"), x });
        }
        for w in 0..2u8 {
            m[(w as usize, z as usize)] = model.p(Some(x), None, Some(z), Some(w)) / pzx;
        }
    }
    Ok(CondMatrix { x, m })
}

/// Spectral condition number `sigma_max / sigma_min`; infinite when the
/// smallest singular value is zero within [`SIGMA_TOL`].
pub fn condition_number(c: &CondMatrix) -> f64 {
    let sv = c.m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= SIGMA_TOL {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Closed-form adjugate for 2x2, pivoted LU otherwise.
fn invert(c: &CondMatrix) -> Option<DMatrix<f64>> {
    let m = &c.m;
    if m.shape() == (2, 2) {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        if det.abs() < DET_TOL {
            return None;
        }
        Some(DMatrix::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]) / det)
    } else {
        m.clone().lu().try_inverse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proximal,
    Backdoor,
    Regression,
    Naive,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proximal => "proximal",
            Method::Backdoor => "backdoor",
            Method::Regression => "regression",
            Method::Naive => "naive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    /// `p_do[arm]` left [0, 1].
    OutOfRange { arm: u8 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::OutOfRange { arm } => write!(f, "p_do_{arm}_out_of_range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    /// Estimated `P(Y = y | do(X = x))` for x = 0, 1.
    pub p_do: [f64; 2],
    pub ate: f64,
    /// Per-arm condition numbers of `P(W | Z, x)` (proximal only).
    pub condition_numbers: Option<[f64; 2]>,
    pub invertible: bool,
    /// 95% interval for the ATE (regression only).
    pub ci95: Option<(f64, f64)>,
    pub warnings: Vec<Warning>,
}

impl EstimateReport {
    fn new(method: Method, p_do: [f64; 2]) -> Self {
        let warnings = (0..2u8)
            .filter(|&a| !(0.0..=1.0).contains(&p_do[a as usize]))
            .map(|arm| Warning::OutOfRange { arm })
            .collect();
        EstimateReport {
            method,
            p_do,
            ate: p_do[1] - p_do[0],
            condition_numbers: None,
            invertible: true,
            ci95: None,
            warnings,
        }
    }

    /// The larger of the two per-arm condition numbers.
    pub fn max_condition_number(&self) -> Option<f64> {
        self.condition_numbers.map(|[a, b]| a.max(b))
    }

    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            method: self.method,
            p_do_0: self.p_do[0],
            p_do_1: self.p_do[1],
            ate: self.ate,
            cond_x0: self.condition_numbers.map(|c| c[0]),
            cond_x1: self.condition_numbers.map(|c| c[1]),
            invertible: self.invertible,
            ci_low: self.ci95.map(|c| c.0),
            ci_high: self.ci95.map(|c| c.1),
            warnings: self.warnings.iter().map(Warning::to_string).collect::<Vec<_>>().join(";"),
        }
    }
}

/// Flat serialization of an [`EstimateReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub method: Method,
    pub p_do_0: f64,
    pub p_do_1: f64,
    pub ate: f64,
    pub cond_x0: Option<f64>,
    pub cond_x1: Option<f64>,
    pub invertible: bool,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub warnings: String,
}

/// Proximal g-formula for outcome level `y`, evaluated separately for each arm.
pub fn proximal_g(model: &ProbModel, y: u8) -> Result<EstimateReport> {
    let p_w = [model.p(None, None, None, Some(0)), model.p(None, None, None, Some(1))];
    let mut p_do = [0.0; 2];
    let mut conds = [0.0; 2];
    for x in 0..2u8 {
        let c = cond_matrix(model, x)?;
        conds[x as usize] = condition_number(&c);
        let inv = invert(&c).ok_or(EstimateError::Singular { x })?;
        let mut total = 0.0;
        for z in 0..2u8 {
            let p_y = model.p(Some(x), Some(y), Some(z), None) / model.p(Some(x), None, Some(z), None);
            for w in 0..2 {
                total += p_y * inv[(z as usize, w)] * p_w[w];
            }
        }
        p_do[x as usize] = total;
    }
    let mut report = EstimateReport::new(Method::Proximal, p_do);
    report.condition_numbers = Some(conds);
    report.invertible = conds.iter().all(|c| c.is_finite());
    Ok(report)
}

/// Backdoor g-formula `sum_a P(y | x, a) P(a)` over the columns `adj` of a
/// joint table; an empty adjustment set gives the naive contrast.
pub fn backdoor_g(joint: &JointTable, treatment: &str, outcome: &str, adj: &[&str], y: u8) -> Result<EstimateReport> {
    let mut vars = vec![treatment, outcome];
    vars.extend_from_slice(adj);
    let m = joint.marginal(&vars)?;
    let mass = m.mass();
    let mut p_do = [0.0; 2];
    for x in 0..2usize {
        for a in 0..(1usize << adj.len()) {
            let cell = |xi: usize, yi: usize| mass[xi | (yi << 1) | (a << 2)];
            let p_a: f64 = (0..2).flat_map(|xi| (0..2).map(move |yi| (xi, yi))).map(|(xi, yi)| cell(xi, yi)).sum();
            if p_a <= 0.0 {
                continue;
            }
            let p_xa = cell(x, 0) + cell(x, 1);
            if p_xa <= 0.0 {
                let stratum = adj
                    .iter()
                    .enumerate()
                    .map(|(j, n)| format!("{n}={}", (a >> j) & 1))
                    .collect::<Vec<_>>()
                    .join(",");
                return Err(EstimateError::EmptyStratum { stratum, x: x as u8 });
            }
            p_do[x] += cell(x, y as usize) / p_xa * p_a;
        }
    }
    let method = if adj.is_empty() { Method::Naive } else { Method::Backdoor };
    Ok(EstimateReport::new(method, p_do))
}

/// Sufficient statistics of a (weighted) least-squares problem.
struct Moments {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    mean: DVector<f64>,
    /// Observation count; `None` for population moments.
    n: Option<usize>,
}

fn ols(mo: Moments) -> Result<EstimateReport> {
    let p = mo.xtx.nrows();
    let sv = mo.xtx.clone().singular_values();
    if sv.min() <= 1e-12 * sv.max() || mo.n.is_some_and(|n| n <= p) {
        return Err(EstimateError::RankDeficient);
    }
    let chol = mo.xtx.clone().cholesky().ok_or(EstimateError::RankDeficient)?;
    let beta = chol.solve(&mo.xty);
    // design column 1 is the treatment
    let ate = beta[1];
    let base: f64 = (0..p).filter(|&j| j != 1).map(|j| beta[j] * mo.mean[j]).sum();
    let mut report = EstimateReport::new(Method::Regression, [base, base + ate]);
    report.ate = ate;
    if let Some(n) = mo.n {
        let rss = (mo.yty - beta.dot(&mo.xty)).max(0.0);
        let sigma2 = rss / (n - p) as f64;
        let var = sigma2 * chol.inverse()[(1, 1)];
        let half = Z_95 * var.sqrt();
        report.ci95 = Some((ate - half, ate + half));
    }
    Ok(report)
}

/// Linear-probability OLS of Y on an intercept, X and `covariates`; the ATE
/// is the X coefficient, with a homoskedastic 95% interval.
pub fn regression_ate(data: &Dataset, covariates: &[&str]) -> Result<EstimateReport> {
    if data.n_rows() == 0 {
        return Err(EstimateError::EmptyData);
    }
    let x = data.column_index("X")?;
    let y = data.column_index("Y")?;
    let cov: Vec<usize> = covariates.iter().map(|c| data.column_index(c)).collect::<Result<_, _>>()?;
    let p = 2 + cov.len();
    // all regressors are binary, so the moments only depend on cell counts
    let mut counts = vec![[0u64; 2]; 1 << (p - 1)];
    for row in data.rows() {
        let cell = cov.iter().enumerate().fold(row[x] as usize, |acc, (j, &c)| acc | ((row[c] as usize) << (j + 1)));
        counts[cell][row[y] as usize] += 1;
    }
    let n = data.n_rows();
    let mut mo = weighted_moments(p, counts.iter().enumerate().map(|(cell, c)| (cell, c[0] as f64, c[1] as f64)));
    mo.n = Some(n);
    ols(mo)
}

/// Population counterpart of [`regression_ate`] computed from a joint table.
pub fn regression_ate_population(joint: &JointTable, covariates: &[&str]) -> Result<EstimateReport> {
    let mut vars = vec!["X"];
    vars.extend_from_slice(covariates);
    vars.push("Y");
    let m = joint.marginal(&vars)?;
    let k = vars.len() - 1;
    let mass = m.mass();
    let cells = (0..1usize << k).map(|cell| (cell, mass[cell], mass[cell | (1 << k)]));
    ols(weighted_moments(k + 1, cells))
}

/// Moments from `(regressor cell, weight of y=0, weight of y=1)`; bit `j` of
/// the cell is regressor column `j + 1`.
fn weighted_moments(p: usize, cells: impl Iterator<Item = (usize, f64, f64)>) -> Moments {
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    let mut yty = 0.0;
    let mut total = 0.0;
    let mut row = DVector::zeros(p);
    for (cell, w0, w1) in cells {
        let w = w0 + w1;
        if w == 0.0 {
            continue;
        }
        row[0] = 1.0;
        for j in 1..p {
            row[j] = ((cell >> (j - 1)) & 1) as f64;
        }
        xtx.ger(w, &row, &row, 1.0);
        xty.axpy(w1, &row, 1.0);
        yty += w1;
        total += w;
    }
    let mean = xtx.column(0) / total;
    Moments { xtx, xty, yty, mean, n: None }
}

pub fn relative_bias(estimate: f64, truth: f64) -> Result<f64> {
    if truth == 0.0 {
        return Err(EstimateError::ZeroTruth);
    }
    Ok((estimate - truth) / truth)
}
