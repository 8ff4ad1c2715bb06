//! Tensorization bounds: from pairwise decorrelation data to block correlations.

mod kernel;
mod pf;
pub mod sweep;

pub use kernel::{distance_bound, DistanceBound, sublattice_k, zn_bound, LatticeKernel, Norm, SublatticeK, Tail, ZnBound, SPACING_CAP};
pub use pf::{certifies, pf_certificate, spectral_radius, PfCertificate};

use crate::error::{invalid, Result};
use crate::linalg::{spectral_norm, Compensated};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Rectangular matrix of pairwise decorrelation bounds with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonMatrix {
    pub entries: DMatrix<f64>,
}

impl EpsilonMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(invalid(format!("epsilon entry {e} outside [0, 1]")));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(invalid("ragged epsilon matrix"));
        }
        Self::new(DMatrix::from_fn(n, m, |r, c| rows[r][c]))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }
}

/// `√(1 − Π(1 − ε_i²))`.
pub fn simple_bound(eps: &[f64]) -> f64 {
    let prod: f64 = eps.iter().map(|e| 1.0 - e * e).product();
    (1.0 - prod).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmBound {
    /// Operator norm of the ε matrix.
    pub raw: f64,
    pub value: f64,
}

/// Operator-norm bound `‖ε‖ ∧ 1`.
pub fn nm_bound(eps: &EpsilonMatrix) -> NmBound {
    let raw = spectral_norm(&eps.entries);
    NmBound { raw, value: raw.min(1.0) }
}

/// `Σ arcsin ε(z)` with compensated summation.
pub fn arcsin_sum(values: &[f64]) -> f64 {
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v.clamp(0.0, 1.0).asin());
    }
    acc.value()
}

/// `sin(Σ arcsin ε(z) ∧ π/2)`.
pub fn zz_bound(values: &[f64]) -> f64 {
    arcsin_sum(values).min(FRAC_PI_2).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simple_bound_values() {
        assert_relative_eq!(simple_bound(&[0.5, 0.5]), 7f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_eq!(simple_bound(&[]), 0.0);
        assert_eq!(simple_bound(&[0.2, 1.0]), 1.0);
    }

    #[test]
    fn nm_bound_row_and_constant() {
        let row = EpsilonMatrix::from_rows(&[vec![0.3, 0.4]]).unwrap();
        assert_relative_eq!(nm_bound(&row).value, 0.5, epsilon = 1e-14);
        let c = EpsilonMatrix::new(DMatrix::from_element(3, 4, 0.1)).unwrap();
        assert_relative_eq!(nm_bound(&c).raw, 0.1 * 12f64.sqrt(), epsilon = 1e-14);
        let big = EpsilonMatrix::new(DMatrix::from_element(3, 4, 0.9)).unwrap();
        assert_eq!(nm_bound(&big).value, 1.0);
        assert!(EpsilonMatrix::from_rows(&[vec![1.2]]).is_err());
    }

    #[test]
    fn zz_bound_values() {
        assert_relative_eq!(zz_bound(&[0.37]), 0.37, epsilon = 1e-15);
        assert_eq!(zz_bound(&[0.9, 0.9]), 1.0);
        let e: f64 = 0.3;
        assert_relative_eq!(zz_bound(&[e, e]), 2.0 * e * (1.0 - e * e).sqrt(), epsilon = 1e-15);
    }
}
