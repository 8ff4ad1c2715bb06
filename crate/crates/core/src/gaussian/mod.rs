//! Centered Gaussian systems.
//!
//! Maximal correlation between two Gaussian blocks is the top singular value of the
//! whitened cross-covariance, and conditioning is a Schur complement that does not
//! depend on the conditioning values.

mod construct;
mod ou;
mod three_lines;

pub use construct::{
    banded_e_half, build_banded_zz, build_optimal_simple, mixing_system, mixing_table, BandedZz, MixingTable, OptimalSimple,
};
pub use ou::{noise_covariance, ou_chain_joint, ou_small_t_expansion, OuChainParams, OuChainReport, SmallTExpansion};
pub use three_lines::{lines_with_angles, three_lines, ThreeLinesReport};

use crate::error::{invalid, Error, Result};
use crate::linalg::{pinv_psd, spectral_norm, submatrix, sym_eigen_sorted, whitening};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative cutoff for PSD checks and rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSystem {
    pub labels: Vec<String>,
    pub cov: DMatrix<f64>,
}

impl GaussianSystem {
    pub fn new(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if cov.ncols() != n {
            return Err(invalid("covariance must be square"));
        }
        if labels.len() != n {
            return Err(invalid(format!("{} labels for a {n}x{n} covariance", labels.len())));
        }
        if cov.iter().any(|x| !x.is_finite()) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(invalid(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        if n > 0 {
            let (vals, _) = sym_eigen_sorted(&cov);
            let norm = vals.last().copied().unwrap_or(0.0).abs().max(vals[0].abs());
            if vals[0] < -RANK_TOL * norm {
                return Err(invalid(format!("covariance has negative eigenvalue {}", vals[0])));
            }
        }
        Ok(Self { labels, cov })
    }

    pub fn unlabeled(cov: DMatrix<f64>) -> Result<Self> {
        let labels = (0..cov.nrows()).map(|i| format!("x{i}")).collect();
        Self::new(labels, cov)
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn indices(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| invalid(format!("unknown label {l}"))))
            .collect()
    }

    fn cutoff(&self) -> f64 {
        RANK_TOL * spectral_norm(&self.cov)
    }

    /// Sub-system on the given coordinates.
    pub fn restrict(&self, idx: &[usize]) -> GaussianSystem {
        GaussianSystem {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            cov: submatrix(&self.cov, idx, idx),
        }
    }
}

fn check_disjoint(n: usize, xs: &[usize], ys: &[usize]) -> Result<()> {
    if let Some(&v) = xs.iter().chain(ys).find(|&&v| v >= n) {
        return Err(invalid(format!("index {v} out of range")));
    }
    let overlap: Vec<usize> = xs.iter().copied().filter(|v| ys.contains(v)).collect();
    if !overlap.is_empty() {
        return Err(Error::Overlap(overlap));
    }
    Ok(())
}

/// `{X_I : X_J}` for a Gaussian system; degenerate directions are projected out.
pub fn maxcorr_gaussian(sys: &GaussianSystem, xs: &[usize], ys: &[usize]) -> Result<f64> {
    check_disjoint(sys.dim(), xs, ys)?;
    if xs.is_empty() || ys.is_empty() {
        return Ok(0.0);
    }
    let cut = sys.cutoff();
    let wx = whitening(&submatrix(&sys.cov, xs, xs), cut);
    let wy = whitening(&submatrix(&sys.cov, ys, ys), cut);
    if wx.nrows() == 0 || wy.nrows() == 0 {
        return Ok(0.0);
    }
    let c = &wx * submatrix(&sys.cov, xs, ys) * wy.transpose();
    Ok(spectral_norm(&c).clamp(0.0, 1.0))
}

/// Conditional covariance of the remaining coordinates given `given`.
pub fn condition(sys: &GaussianSystem, given: &[usize]) -> Result<GaussianSystem> {
    let n = sys.dim();
    if let Some(&v) = given.iter().find(|&&v| v >= n) {
        return Err(invalid(format!("index {v} out of range")));
    }
    let rest: Vec<usize> = (0..n).filter(|i| !given.contains(i)).collect();
    let saa = submatrix(&sys.cov, &rest, &rest);
    if given.is_empty() {
        return Ok(sys.restrict(&rest));
    }
    let sak = submatrix(&sys.cov, &rest, given);
    let skk_pinv = pinv_psd(&submatrix(&sys.cov, given, given), sys.cutoff());
    let schur = saa - &sak * skk_pinv * sak.transpose();
    Ok(GaussianSystem {
        labels: rest.iter().map(|&i| sys.labels[i].clone()).collect(),
        cov: crate::linalg::symmetrize(&schur),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainedReport {
    /// `e_i = {X_i : Y | X_{<i}}` in the given order.
    pub conditional: Vec<f64>,
    pub chained: f64,
    pub direct: f64,
}

/// Sequential conditional correlations and their combination `√(1 − Π(1 − e_i²))`.
pub fn chained_maxcorr(sys: &GaussianSystem, xs: &[usize], y: usize) -> Result<ChainedReport> {
    check_disjoint(sys.dim(), xs, &[y])?;
    let mut conditional = Vec::with_capacity(xs.len());
    for (k, &x) in xs.iter().enumerate() {
        let cond = condition(sys, &xs[..k])?;
        let pos = |label: &str| cond.index_of(label).expect("label survives conditioning");
        let (xi, yi) = (pos(&sys.labels[x]), pos(&sys.labels[y]));
        conditional.push(maxcorr_gaussian(&cond, &[xi], &[yi])?);
    }
    let chained = crate::tensor::simple_bound(&conditional);
    let direct = maxcorr_gaussian(sys, xs, &[y])?;
    Ok(ChainedReport { conditional, chained, direct })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sys2(r: f64) -> GaussianSystem {
        GaussianSystem::unlabeled(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0])).unwrap()
    }

    #[test]
    fn scalar_correlation() {
        assert_relative_eq!(maxcorr_gaussian(&sys2(-0.37), &[0], &[1]).unwrap(), 0.37, epsilon = 1e-14);
        assert_relative_eq!(maxcorr_gaussian(&sys2(1.0), &[0], &[1]).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn block_diagonal_is_uncorrelated() {
        let mut c = DMatrix::identity(4, 4);
        c[(0, 1)] = 0.5;
        c[(1, 0)] = 0.5;
        let s = GaussianSystem::unlabeled(c).unwrap();
        assert!(maxcorr_gaussian(&s, &[0, 1], &[2, 3]).unwrap() < 1e-15);
    }

    #[test]
    fn independent_conditioning_is_noop() {
        let mut c = DMatrix::identity(3, 3);
        c[(0, 1)] = 0.4;
        c[(1, 0)] = 0.4;
        let s = GaussianSystem::unlabeled(c.clone()).unwrap();
        let cond = condition(&s, &[2]).unwrap();
        assert!((cond.cov - c.view((0, 0), (2, 2))).norm() < 1e-15);
    }

    #[test]
    fn deterministic_direction_is_projected() {
        // x2 = x0 + x1 exactly; {(x0,x1) : x2} = 1.
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
        let s = GaussianSystem::unlabeled(c).unwrap();
        assert_relative_eq!(maxcorr_gaussian(&s, &[0, 1], &[2]).unwrap(), 1.0, epsilon = 1e-9);
        let cond = condition(&s, &[2]).unwrap();
        assert_relative_eq!(maxcorr_gaussian(&cond, &[0], &[1]).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_psd() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianSystem::unlabeled(c).is_err());
    }
}
