use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

const POWER_ITERS: usize = 20_000;
const BRACKET_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfCertificate {
    /// Spectral radius estimate, the midpoint of the bracket.
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    /// `upper + δ`, the level certified by `u`.
    pub lambda: f64,
    /// Strictly positive vector with `A u ≤ λ u`.
    pub u: Vec<f64>,
}

/// Collatz–Wielandt bracket on the spectral radius of an irreducible block.
fn irreducible_bracket(a: &DMatrix<f64>) -> (f64, f64) {
    let n = a.nrows();
    if n == 1 {
        return (a[(0, 0)], a[(0, 0)]);
    }
    // A + I is primitive, so power iteration converges to the Perron vector.
    let b = a + DMatrix::identity(n, n);
    let mut x = DVector::from_element(n, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..POWER_ITERS {
        let y = &b * &x;
        let ratios = y.iter().zip(x.iter()).map(|(yi, xi)| yi / xi);
        let (l, h) = ratios.fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(r), h.max(r)));
        lo = f64::max(lo, l);
        hi = f64::min(hi, h);
        x = &y / y.max();
        if hi - lo <= BRACKET_RTOL * hi {
            break;
        }
    }
    ((lo - 1.0).max(0.0), (hi - 1.0).max(0.0))
}

/// Spectral radius bracket of a nonnegative matrix, combining its strongly connected components.
fn bracket(a: &DMatrix<f64>) -> (f64, f64) {
    let n = a.nrows();
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut out = (0.0f64, 0.0f64);
    for comp in tarjan_scc(&g) {
        let idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
        let sub = crate::linalg::submatrix(a, &idx, &idx);
        if idx.len() == 1 && sub[(0, 0)] == 0.0 {
            continue;
        }
        let (l, h) = irreducible_bracket(&sub);
        out = (out.0.max(l), out.1.max(h));
    }
    out
}

fn check_nonnegative(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(invalid("matrix must be square"));
    }
    if a.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(invalid("matrix must have finite nonnegative entries"));
    }
    Ok(())
}

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    check_nonnegative(a)?;
    let (l, h) = bracket(a);
    Ok(0.5 * (l + h))
}

/// Spectral radius with a positive vector certifying `ρ(A) ≤ λ` for `λ = upper + δ`.
pub fn pf_certificate(a: &DMatrix<f64>, delta: f64) -> Result<PfCertificate> {
    check_nonnegative(a)?;
    if !(delta > 0.0) {
        return Err(invalid("certificate margin must be positive"));
    }
    let n = a.nrows();
    let (lower, upper) = bracket(a);
    let lambda = upper + delta;
    // (λ − A)^{-1} 1 = Σ A^k 1 / λ^{k+1} is positive and satisfies A u = λ u − 1.
    let shifted = DMatrix::identity(n, n) * lambda - a;
    let u = shifted
        .lu()
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| invalid("shifted matrix is singular"))?;
    Ok(PfCertificate { rho: 0.5 * (lower + upper), lower, upper, lambda, u: u.iter().copied().collect() })
}

/// Whether `u > 0` and `A u ≤ λ u` hold in floating point.
pub fn certifies(a: &DMatrix<f64>, u: &[f64], lambda: f64) -> bool {
    if u.len() != a.ncols() || u.iter().any(|x| !(*x > 0.0)) {
        return false;
    }
    let v = DVector::from_column_slice(u);
    let au = a * &v;
    au.iter().zip(u).all(|(l, r)| *l <= lambda * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nilpotent() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = pf_certificate(&a, 1e-3).unwrap();
        assert_eq!(c.rho, 0.0);
        assert!(certifies(&a, &c.u, c.lambda));
        assert!(!certifies(&a, &c.u, 0.0));
    }

    #[test]
    fn scalar() {
        let a = DMatrix::from_element(1, 1, 0.7);
        assert_relative_eq!(spectral_radius(&a).unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn reducible_takes_component_max() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 1.0, 0.0, 0.0, 0.2, 3.0, 0.0, 0.0, 0.9]);
        assert_relative_eq!(spectral_radius(&a).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn periodic_irreducible() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]);
        let c = pf_certificate(&a, 1e-6).unwrap();
        assert_relative_eq!(c.rho, 1.0, epsilon = 1e-12);
        assert!(certifies(&a, &c.u, c.lambda));
    }
}
