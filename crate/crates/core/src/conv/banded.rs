use crate::error::{invalid, Result};
use crate::linalg::sym_eigen_sorted;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandedConstants {
    /// Prefactor of the inverse's entry bound.
    pub a_prime: f64,
    pub gamma_prime: f64,
    /// Growth constant of the rescaled powers.
    pub a1: f64,
    pub gamma1: f64,
}

/// Constants `(A′, γ′)` with `|(M⁻¹)_ij| ≤ A′ e^{−γ′|i−j|}` whenever `rI ≤ M ≤ RI` and `|M_ij| ≤ A e^{−γ|i−j|}`.
pub fn banded_inverse_constants(r: f64, big_r: f64, a: f64, gamma: f64) -> Result<BandedConstants> {
    if !(r > 0.0 && r <= big_r && big_r.is_finite()) {
        return Err(invalid(format!("need 0 < r ≤ R < ∞, got r = {r}, R = {big_r}")));
    }
    if !(a >= 0.0 && a.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("need finite A ≥ 0 and γ > 0"));
    }
    let r1 = r / big_r;
    let a_scaled = a / big_r + 1.0;
    let gamma1 = gamma / 2.0;
    let a1 = (1.0 - (-2.0 * gamma).exp()) * a_scaled
        / ((1.0 - (-(gamma - gamma1)).exp()) * (1.0 - (-(gamma + gamma1)).exp()));
    let a_prime = (a1 / (a1 - 1.0) + 1.0 / r1) / big_r;
    let contraction = (1.0 - r1).ln().abs();
    let gamma_prime = if contraction.is_infinite() { gamma1 } else { contraction * gamma1 / (contraction + a1.ln()) };
    Ok(BandedConstants { a_prime, gamma_prime, a1, gamma1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedCheck {
    pub r: f64,
    pub big_r: f64,
    pub a: f64,
    pub constants: BandedConstants,
    /// `max |(M⁻¹)_ij| / (A′ e^{−γ′|i−j|})`.
    pub worst_ratio: f64,
    pub holds: bool,
}

/// Measures `r`, `R`, `A` of a symmetric matrix and checks the entry bound on its dense inverse.
pub fn banded_inverse_check(m: &DMatrix<f64>, gamma: f64) -> Result<BandedCheck> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 {
        return Err(invalid("matrix must be square and symmetric"));
    }
    let (eig, _) = sym_eigen_sorted(m);
    let (r, big_r) = (eig[0], eig[eig.len() - 1]);
    let n = m.nrows();
    let dist = |i: usize, j: usize| (i as f64 - j as f64).abs();
    let a = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].abs() * (gamma * dist(i, j)).exp())
        .fold(0.0, f64::max);
    let constants = banded_inverse_constants(r, big_r, a, gamma)?;
    let inv = m.clone().try_inverse().ok_or_else(|| invalid("matrix is singular"))?;
    let worst_ratio = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| inv[(i, j)].abs() / (constants.a_prime * (-constants.gamma_prime * dist(i, j)).exp()))
        .fold(0.0, f64::max);
    Ok(BandedCheck { r, big_r, a, constants, worst_ratio, holds: worst_ratio <= 1.0 + 1e-12 })
}

/// Symmetric, diagonally dominant matrix with off-diagonal entries bounded by `e^{−γ|i−j|}`.
pub fn random_banded_matrix<R: Rng>(rng: &mut R, size: usize, gamma: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for i in 0..size {
        for j in i + 1..size {
            let v = rng.random_range(-1.0..1.0) * (-gamma * (j - i) as f64).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    for i in 0..size {
        let off: f64 = (0..size).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] = off + rng.random_range(0.1..1.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng;

    #[test]
    fn scalar_case() {
        let m = DMatrix::identity(5, 5) * 3.0;
        let c = banded_inverse_check(&m, 1.0).unwrap();
        assert_eq!(c.constants.gamma_prime, 0.5);
        assert!(c.holds);
    }

    #[test]
    fn random_matrices() {
        let mut r = rng(21);
        for _ in 0..10 {
            let m = random_banded_matrix(&mut r, 50, 0.7);
            assert!(banded_inverse_check(&m, 0.7).unwrap().holds);
        }
    }

    /// `tridiag(−1, 2 + δ, −1)` has inverse entries `U_{i} U_{n−1−j} / U_n` (i ≤ j) with `U_k = sinh((k+1)θ)/sinh θ`.
    #[test]
    fn tridiagonal_closed_form() {
        let (n, delta) = (40, 0.5);
        let m = DMatrix::from_fn(n, n, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0 + delta,
            1 => -1.0,
            _ => 0.0,
        });
        let theta = ((2.0 + delta) / 2.0f64).acosh();
        let u = |k: usize| ((k as f64 + 1.0) * theta).sinh() / theta.sinh();
        let inv = m.clone().try_inverse().unwrap();
        for i in 0..n {
            for j in i..n {
                let closed = u(i) * u(n - 1 - j) / u(n);
                assert!((inv[(i, j)] - closed).abs() < 1e-12);
            }
        }
        let c = banded_inverse_check(&m, 1.0).unwrap();
        assert!(c.holds);
        assert!(c.constants.gamma_prime <= theta);
    }
}
