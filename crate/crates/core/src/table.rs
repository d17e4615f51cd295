//! Probability tables over binary variables.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("table over {vars} variables needs {expected} cells, got {got}")]
    Shape { vars: usize, expected: usize, got: usize },
    #[error("negative mass {0} in cell {1}")]
    Negative(f64, usize),
    #[error("total mass {0} is not 1")]
    NotNormalized(f64),
}

/// Probability mass over every configuration of a list of binary variables.
///
/// Cell `k` holds the configuration in which variable `i` takes the value of
/// bit `i` of `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointTable {
    vars: Vec<String>,
    mass: Vec<f64>,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl JointTable {
    pub fn new(vars: Vec<String>, mass: Vec<f64>) -> Result<Self, TableError> {
        let expected = 1usize << vars.len();
        if mass.len() != expected {
            return Err(TableError::Shape { vars: vars.len(), expected, got: mass.len() });
        }
        if let Some((i, &m)) = mass.iter().enumerate().find(|(_, m)| !(**m >= 0.0)) {
            return Err(TableError::Negative(m, i));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TableError::NotNormalized(total));
        }
        Ok(JointTable { vars, mass })
    }

    /// Normalizes nonnegative counts into a table.
    pub fn from_counts(vars: Vec<String>, counts: &[u64]) -> Result<Self, TableError> {
        let n: u64 = counts.iter().sum();
        let mass = counts.iter().map(|&c| c as f64 / n as f64).collect();
        JointTable::new(vars, mass)
    }

    pub(crate) fn from_raw(vars: Vec<String>, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), 1 << vars.len());
        JointTable { vars, mass }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn position(&self, var: &str) -> Result<usize, TableError> {
        self.vars
            .iter()
            .position(|v| v == var)
            .ok_or_else(|| TableError::UnknownVariable(var.to_string()))
    }

    /// Marginal probability of a partial assignment.
    pub fn prob(&self, assignment: &[(&str, u8)]) -> Result<f64, TableError> {
        let mut mask = 0usize;
        let mut want = 0usize;
        for &(var, val) in assignment {
            let bit = 1 << self.position(var)?;
            mask |= bit;
            if val != 0 {
                want |= bit;
            }
        }
        Ok(self
            .mass
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask == want)
            .map(|(_, m)| m)
            .sum())
    }

    /// Marginal table over `keep`, in the given order.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointTable, TableError> {
        let pos: Vec<usize> = keep.iter().map(|v| self.position(v)).collect::<Result<_, _>>()?;
        let mut mass = vec![0.0; 1 << keep.len()];
        for (k, &m) in self.mass.iter().enumerate() {
            let mut target = 0;
            for (j, &p) in pos.iter().enumerate() {
                target |= ((k >> p) & 1) << j;
            }
            mass[target] += m;
        }
        Ok(JointTable::from_raw(keep.iter().map(|s| s.to_string()).collect(), mass))
    }

    /// Largest deviation `|P(a,b|c) - P(a|c) P(b|c)|` over all configurations
    /// with `P(c) > 0`. Zero (up to rounding) iff `a` and `b` are
    /// conditionally independent given `c`.
    pub fn independence_gap(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64, TableError> {
        let all: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        let m = self.marginal(&all)?;
        let (na, nb, nc) = (a.len(), b.len(), c.len());
        let mut gap: f64 = 0.0;
        for zc in 0..(1usize << nc) {
            let cell = |za: usize, zb: usize| m.mass[za | (zb << na) | (zc << (na + nb))];
            let mut pc = 0.0;
            let mut pa = vec![0.0; 1 << na];
            let mut pb = vec![0.0; 1 << nb];
            for za in 0..(1usize << na) {
                for zb in 0..(1usize << nb) {
                    let v = cell(za, zb);
                    pc += v;
                    pa[za] += v;
                    pb[zb] += v;
                }
            }
            if pc <= 0.0 {
                continue;
            }
            for za in 0..(1usize << na) {
                for zb in 0..(1usize << nb) {
                    let d = (cell(za, zb) / pc - (pa[za] / pc) * (pb[zb] / pc)).abs();
                    gap = gap.max(d);
                }
            }
        }
        Ok(gap)
    }
}
