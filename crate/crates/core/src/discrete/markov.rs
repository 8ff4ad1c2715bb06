use super::{maxcorr_pair, FinitePair};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub stationary: Vec<f64>,
    /// `{X_0 : X_t}` for `t = 1..=steps`.
    pub lagged_maxcorr: Vec<f64>,
    /// `{X_0:X_1}^t`, the submultiplicative bound for each lag.
    pub product_bound: Vec<f64>,
    pub reversible: bool,
    /// Largest deviation `|{X_0:X_t}| − {X_0:X_1}^t|` over the lags.
    pub power_law_error: f64,
}

/// Stationary-chain correlation checks for a column-stochastic matrix `P[(to, from)]`.
pub fn markov_chain_checks(p: &DMatrix<f64>, steps: usize) -> Result<MarkovReport> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(invalid("transition matrix must be square and nonempty"));
    }
    for j in 0..n {
        let col = p.column(j);
        if col.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(invalid(format!("column {j} has a negative entry")));
        }
        if (col.sum() - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("column {j} sums to {}", col.sum())));
        }
    }
    let defect = p - DMatrix::identity(n, n);
    let mut sv: Vec<f64> = defect.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    if n > 1 && sv[1] <= 1e-10 {
        return Err(Error::NonErgodic("stationary law is not unique".into()));
    }
    let pi = stationary(p)?;
    let mut lagged = Vec::with_capacity(steps);
    let mut power = p.clone();
    for _ in 0..steps {
        let joint = DMatrix::from_fn(n, n, |a, b| pi[a] * power[(b, a)]);
        let total = joint.sum();
        lagged.push(maxcorr_pair(&FinitePair::from_matrix(joint / total)?).rho);
        power = p * &power;
    }
    let first = lagged.first().copied().unwrap_or(0.0);
    let product_bound: Vec<f64> = (1..=steps).map(|t| first.powi(t as i32)).collect();
    let reversible = (0..n).all(|a| (0..n).all(|b| (pi[a] * p[(b, a)] - pi[b] * p[(a, b)]).abs() <= 1e-12));
    let power_law_error = lagged.iter().zip(&product_bound).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(MarkovReport {
        stationary: pi.iter().copied().collect(),
        lagged_maxcorr: lagged,
        product_bound,
        reversible,
        power_law_error,
    })
}

/// Stationary law by power iteration on the lazy chain `(P + I)/2`.
fn stationary(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    let lazy = (p + DMatrix::identity(n, n)) * 0.5;
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..1_000_000 {
        let next = &lazy * &v;
        let diff = (&next - &v).amax();
        v = next;
        if diff < 1e-16 {
            return Ok(&v / v.sum());
        }
    }
    Err(Error::NonErgodic("power iteration did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_state_reversible_power_law() {
        // P[to][from]: leave state 0 w.p. a, state 1 w.p. b; second eigenvalue 1-a-b.
        let (a, b) = (0.3, 0.1);
        let p = DMatrix::from_row_slice(2, 2, &[1.0 - a, b, a, 1.0 - b]);
        let r = markov_chain_checks(&p, 6).unwrap();
        assert!(r.reversible);
        for (t, v) in r.lagged_maxcorr.iter().enumerate() {
            assert_relative_eq!(*v, (1.0f64 - a - b).abs().powi(t as i32 + 1), epsilon = 1e-12);
        }
        assert!(r.power_law_error < 1e-9);
    }

    #[test]
    fn disconnected_chain_is_rejected() {
        let p = DMatrix::identity(2, 2);
        assert!(matches!(markov_chain_checks(&p, 2), Err(Error::NonErgodic(_))));
    }
}
