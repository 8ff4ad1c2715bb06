//! Exact maximal correlation on finite alphabets.

mod events;
mod gram;
mod markov;

pub use events::{event_extremes, mixing_coefficients, EventWitness, MixingCoefficients, EVENT_SCAN_CAP};
pub use gram::ColumnGram;
pub use markov::{markov_chain_checks, MarkovReport};

use crate::error::{invalid, Error, Result};
use crate::linalg::top_singular;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const SUM_TOL: f64 = 1e-12;
pub const STATE_CAP: usize = 1 << 20;
pub const POOL_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FinitePair {
    pub labels_x: Vec<String>,
    pub labels_y: Vec<String>,
    pub joint: DMatrix<f64>,
}

impl FinitePair {
    pub fn new(labels_x: Vec<String>, labels_y: Vec<String>, joint: DMatrix<f64>) -> Result<Self> {
        let (n, m) = joint.shape();
        if n == 0 || m == 0 {
            return Err(invalid("joint table must be at least 1x1"));
        }
        if labels_x.len() != n || labels_y.len() != m {
            return Err(invalid(format!(
                "label counts ({}, {}) do not match joint shape ({n}, {m})",
                labels_x.len(),
                labels_y.len()
            )));
        }
        check_distribution(joint.iter().copied())?;
        Ok(Self { labels_x, labels_y, joint })
    }

    /// Pair with labels `0..n`, `0..m`.
    pub fn from_matrix(joint: DMatrix<f64>) -> Result<Self> {
        let (n, m) = joint.shape();
        Self::new(index_labels(n), index_labels(m), joint)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(invalid("ragged joint table"));
        }
        Self::from_matrix(DMatrix::from_fn(n, m, |r, c| rows[r][c]))
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.joint.row_iter().map(|r| r.sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        self.joint.column_iter().map(|c| c.sum()).collect()
    }

    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(px.len(), py.len(), |r, c| px[r] * py[c]))
    }
}

pub(crate) fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn check_distribution<I: Iterator<Item = f64>>(values: I) -> Result<()> {
    let mut total = 0.0;
    for v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(format!("probability {v} is negative or not finite")));
        }
        total += v;
    }
    if (total - 1.0).abs() > SUM_TOL {
        return Err(invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelationReport {
    pub rho: f64,
    /// Π over the retained states; dropped states are absent.
    pub pi_matrix: Vec<Vec<f64>>,
    pub optimal_f: Vec<f64>,
    pub optimal_g: Vec<f64>,
    /// True when either side is almost surely constant.
    pub degenerate: bool,
}

/// Maximal correlation of a finite pair as the top singular value of Π.
pub fn maxcorr_pair(pair: &FinitePair) -> PairCorrelationReport {
    let px = pair.marginal_x();
    let py = pair.marginal_y();
    let keep_x: Vec<usize> = (0..px.len()).filter(|&a| px[a] > 0.0).collect();
    let keep_y: Vec<usize> = (0..py.len()).filter(|&b| py[b] > 0.0).collect();
    let pi = DMatrix::from_fn(keep_x.len(), keep_y.len(), |r, c| {
        let (a, b) = (keep_x[r], keep_y[c]);
        (pair.joint[(a, b)] - px[a] * py[b]) / (px[a] * py[b]).sqrt()
    });
    let pi_rows = pi.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut f = vec![0.0; px.len()];
    let mut g = vec![0.0; py.len()];
    if keep_x.len() < 2 || keep_y.len() < 2 {
        return PairCorrelationReport { rho: 0.0, pi_matrix: pi_rows, optimal_f: f, optimal_g: g, degenerate: true };
    }
    let (rho, u, v) = top_singular(&pi);
    let rho = rho.min(1.0);
    if rho > 0.0 {
        fill_witness(&mut f, &keep_x, &px, &u);
        fill_witness(&mut g, &keep_y, &py, &v);
        if let Some(first) = f.iter().copied().find(|x| x.abs() > 1e-14) {
            if first < 0.0 {
                f.iter_mut().for_each(|x| *x = -*x);
                g.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    PairCorrelationReport { rho, pi_matrix: pi_rows, optimal_f: f, optimal_g: g, degenerate: false }
}

fn fill_witness(out: &mut [f64], keep: &[usize], marg: &[f64], vec: &DVector<f64>) {
    for (k, &a) in keep.iter().enumerate() {
        out[a] = vec[k] / marg[a].sqrt();
    }
}

/// `(Σ (h−1)² p_a p^b)^{1/2}` for the density `h = p_a^b / (p_a p^b)`.
pub fn density_bound(pair: &FinitePair) -> Result<f64> {
    let px = pair.marginal_x();
    let py = pair.marginal_y();
    if let Some(i) = px.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginal { side: "x", index: i });
    }
    if let Some(i) = py.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginal { side: "y", index: i });
    }
    let mut total = 0.0;
    for a in 0..px.len() {
        for b in 0..py.len() {
            let w = px[a] * py[b];
            let h = pair.joint[(a, b)] / w;
            total += (h - 1.0).powi(2) * w;
        }
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

/// Joint law of several finite variables, row-major with the last variable fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSystem {
    pub variables: Vec<Variable>,
    pub joint: Vec<f64>,
}

impl FiniteSystem {
    pub fn new(variables: Vec<Variable>, joint: Vec<f64>) -> Result<Self> {
        if variables.is_empty() {
            return Err(invalid("system needs at least one variable"));
        }
        if let Some(v) = variables.iter().find(|v| v.size == 0) {
            return Err(invalid(format!("variable {} has an empty alphabet", v.name)));
        }
        let states = variables
            .iter()
            .try_fold(1usize, |acc, v| acc.checked_mul(v.size).filter(|&s| s <= STATE_CAP))
            .ok_or(Error::SizeCap { what: "product space", size: usize::MAX, cap: STATE_CAP })?;
        if joint.len() != states {
            return Err(invalid(format!("joint has {} entries, expected {states}", joint.len())));
        }
        check_distribution(joint.iter().copied())?;
        Ok(Self { variables, joint })
    }

    /// Variables named `v0, v1, …` with the given alphabet sizes.
    pub fn with_sizes(sizes: &[usize], joint: Vec<f64>) -> Result<Self> {
        let vars = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| Variable { name: format!("v{i}"), size: s })
            .collect();
        Self::new(vars, joint)
    }

    /// Product law of independent factors.
    pub fn independent(factors: &[Vec<f64>]) -> Result<Self> {
        let sizes: Vec<usize> = factors.iter().map(Vec::len).collect();
        let mut joint = vec![1.0];
        for f in factors {
            joint = joint.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
        }
        Self::with_sizes(&sizes, joint)
    }

    /// Joint law of two independent systems, variables of `self` first.
    pub fn tensor(&self, other: &FiniteSystem) -> Result<Self> {
        let mut vars = self.variables.clone();
        vars.extend(other.variables.iter().cloned());
        let joint = self
            .joint
            .iter()
            .flat_map(|&a| other.joint.iter().map(move |&b| a * b))
            .collect();
        Self::new(vars, joint)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.size).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_states(&self) -> usize {
        self.joint.len()
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.variables.len()];
        for (k, v) in self.variables.iter().enumerate().rev() {
            out[k] = index % v.size;
            index /= v.size;
        }
        out
    }

    pub fn encode(&self, values: &[usize]) -> usize {
        self.variables.iter().zip(values).fold(0, |acc, (v, &x)| acc * v.size + x)
    }

    /// Marginal table over `vars` in the given order (last fastest).
    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let sizes = self.sizes();
        let total: usize = vars.iter().map(|&v| sizes[v]).product();
        let mut out = vec![0.0; total];
        let mut digits = vec![0usize; sizes.len()];
        for &p in &self.joint {
            if p != 0.0 {
                let idx = vars.iter().fold(0, |acc, &v| acc * sizes[v] + digits[v]);
                out[idx] += p;
            }
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < sizes[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        out
    }

    pub fn block_size(&self, vars: &[usize]) -> usize {
        vars.iter().map(|&v| self.variables[v].size).product()
    }

    /// Flattened pair `(X_I, Y_J)`.
    pub fn pair(&self, xs: &[usize], ys: &[usize]) -> Result<FinitePair> {
        self.check_blocks(xs, ys)?;
        let mut order = xs.to_vec();
        order.extend_from_slice(ys);
        let table = self.marginal(&order);
        let (n, m) = (self.block_size(xs), self.block_size(ys));
        let joint = DMatrix::from_fn(n, m, |r, c| table[r * m + c]);
        let total: f64 = joint.sum();
        FinitePair::new(index_labels(n), index_labels(m), joint / total)
    }

    fn check_blocks(&self, xs: &[usize], ys: &[usize]) -> Result<()> {
        let nv = self.num_vars();
        if xs.is_empty() || ys.is_empty() {
            return Err(invalid("blocks must be nonempty"));
        }
        if let Some(&v) = xs.iter().chain(ys).find(|&&v| v >= nv) {
            return Err(invalid(format!("variable index {v} out of range")));
        }
        let overlap: Vec<usize> = xs.iter().copied().filter(|v| ys.contains(v)).collect();
        if !overlap.is_empty() {
            return Err(Error::Overlap(overlap));
        }
        Ok(())
    }
}

/// `{X_I : Y_J}` for blocks of variables.
pub fn maxcorr_blocks(sys: &FiniteSystem, xs: &[usize], ys: &[usize]) -> Result<f64> {
    Ok(maxcorr_pair(&sys.pair(xs, ys)?).rho)
}

/// Supremum over all conditionings on sub-blocks of `pool` of the conditional maximal correlation.
pub fn subjective_maxcorr_blocks(
    sys: &FiniteSystem,
    xs: &[usize],
    ys: &[usize],
    pool: &[usize],
) -> Result<f64> {
    sys.check_blocks(xs, ys)?;
    if let Some(&v) = pool.iter().find(|v| xs.contains(v) || ys.contains(v)) {
        return Err(invalid(format!("pool variable {v} is one of the correlated variables")));
    }
    if pool.len() > POOL_CAP {
        return Err(Error::SizeCap { what: "conditioning pool", size: pool.len(), cap: POOL_CAP });
    }
    let (n, m) = (sys.block_size(xs), sys.block_size(ys));
    let mut best: f64 = 0.0;
    for mask in 0u32..(1u32 << pool.len()) {
        let k_vars: Vec<usize> = (0..pool.len()).filter(|&b| mask >> b & 1 == 1).map(|b| pool[b]).collect();
        let mut order = xs.to_vec();
        order.extend_from_slice(ys);
        order.extend_from_slice(&k_vars);
        let table = sys.marginal(&order);
        let nk = sys.block_size(&k_vars);
        for kv in 0..nk {
            let mass: f64 = (0..n * m).map(|ij| table[ij * nk + kv]).sum();
            if mass <= 0.0 {
                continue;
            }
            let joint = DMatrix::from_fn(n, m, |r, c| table[(r * m + c) * nk + kv] / mass);
            let pair = FinitePair { labels_x: index_labels(n), labels_y: index_labels(m), joint };
            best = best.max(maxcorr_pair(&pair).rho);
        }
    }
    Ok(best)
}

/// Single-variable form of [`subjective_maxcorr_blocks`].
pub fn subjective_maxcorr(sys: &FiniteSystem, i: usize, j: usize, pool: &[usize]) -> Result<f64> {
    subjective_maxcorr_blocks(sys, &[i], &[j], pool)
}
