use crate::discrete::{subjective_maxcorr_blocks, FiniteSystem};
use crate::error::{invalid, Error, Result};
use nalgebra::{Complex, DMatrix};

const MATCH_TOL: f64 = 1e-12;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCheck {
    /// `|E[Π_i Φ_i] − φ^N|`.
    pub lhs: f64,
    /// `N ε̄ (1 + ε̄)(1 − |φ|²)`.
    pub rhs: f64,
    pub eps_bar: f64,
    /// Common mean `φ = E[Φ_i]` as `(re, im)`.
    pub phi: (f64, f64),
    pub blocks: usize,
    /// Conditional maximal correlations between blocks, zero on the diagonal.
    pub eps: DMatrix<f64>,
    pub holds: bool,
}

/// Compares `E[Π_i exp(iλ f(X_i))]` with the product of the means for identically distributed blocks.
pub fn phase_product_bound(
    sys: &FiniteSystem,
    blocks: &[Vec<usize>],
    f: &dyn Fn(&[usize]) -> f64,
    lambda: f64,
) -> Result<PhaseCheck> {
    if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
        return Err(invalid("need at least one nonempty block"));
    }
    let mut seen = vec![false; sys.num_vars()];
    for &v in blocks.iter().flatten() {
        if v >= seen.len() {
            return Err(invalid(format!("variable {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::Overlap(vec![v]));
        }
    }
    let reference = sys.marginal(&blocks[0]);
    let ref_sizes: Vec<usize> = blocks[0].iter().map(|&v| sys.variables[v].size).collect();
    for (k, b) in blocks.iter().enumerate().skip(1) {
        let sizes: Vec<usize> = b.iter().map(|&v| sys.variables[v].size).collect();
        if sizes != ref_sizes {
            return Err(Error::DistributionMismatch(format!("block {k} has different state spaces")));
        }
        let m = sys.marginal(b);
        if m.iter().zip(&reference).any(|(a, r)| (a - r).abs() > MATCH_TOL) {
            return Err(Error::DistributionMismatch(format!("block {k} differs from block 0")));
        }
    }

    let phase = |values: &[usize]| Complex::from_polar(1.0, lambda * f(values));
    let block_states = |b: &[usize]| {
        let sizes: Vec<usize> = b.iter().map(|&v| sys.variables[v].size).collect();
        let count: usize = sizes.iter().product();
        (0..count).map(move |mut idx| {
            let mut vals = vec![0; sizes.len()];
            for k in (0..sizes.len()).rev() {
                vals[k] = idx % sizes[k];
                idx /= sizes[k];
            }
            vals
        })
    };
    let phi: Complex<f64> = block_states(&blocks[0]).zip(&reference).map(|(vals, &p)| phase(&vals) * p).sum();

    let mut expectation = Complex::new(0.0, 0.0);
    for (idx, &p) in sys.joint.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let state = sys.decode(idx);
        let prod: Complex<f64> = blocks
            .iter()
            .map(|b| phase(&b.iter().map(|&v| state[v]).collect::<Vec<_>>()))
            .product();
        expectation += prod * p;
    }
    let n = blocks.len();
    let lhs = (expectation - phi.powu(n as u32)).norm();

    let all: Vec<usize> = blocks.iter().flatten().copied().collect();
    let mut eps = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let pool: Vec<usize> = all.iter().copied().filter(|v| !blocks[i].contains(v) && !blocks[j].contains(v)).collect();
            let e = subjective_maxcorr_blocks(sys, &blocks[i], &blocks[j], &pool)?;
            eps[(i, j)] = e;
            eps[(j, i)] = e;
        }
    }
    let eps_bar = (0..n).map(|i| eps.row(i).sum()).fold(0.0, f64::max);
    let rhs = n as f64 * eps_bar * (1.0 + eps_bar) * (1.0 - phi.norm_sqr()).max(0.0);
    Ok(PhaseCheck { lhs, rhs, eps_bar, phi: (phi.re, phi.im), blocks: n, eps, holds: lhs <= rhs + SLACK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin_sum(values: &[usize]) -> f64 {
        values.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).sum()
    }

    #[test]
    fn independent_blocks() {
        let sys = FiniteSystem::independent(&[vec![0.3, 0.7], vec![0.6, 0.4], vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let c = phase_product_bound(&sys, &[vec![0, 1], vec![2, 3]], &spin_sum, 0.8).unwrap();
        assert!(c.lhs < 1e-14);
        assert!(c.eps_bar < 1e-12);
        assert!(c.holds);
    }

    /// Two symmetric binary blocks with `P[equal] = 0.8`: `ε = 0.6` and `E[Φ₁Φ₂] = 0.2 + 0.8 cos 2λ`.
    #[test]
    fn correlated_binary_blocks() {
        let sys = FiniteSystem::with_sizes(&[2, 2], vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let lambda = 0.7f64;
        let c = phase_product_bound(&sys, &[vec![0], vec![1]], &spin_sum, lambda).unwrap();
        let expect = 0.2 + 0.8 * (2.0 * lambda).cos();
        let phi = lambda.cos();
        assert!((c.lhs - (expect - phi * phi).abs()).abs() < 1e-14);
        assert!((c.eps_bar - 0.6).abs() < 1e-12);
        assert!((c.rhs - 2.0 * 0.6 * 1.6 * (1.0 - phi * phi)).abs() < 1e-12);
        assert!(c.lhs < c.rhs);
    }

    #[test]
    fn zero_frequency() {
        let sys = FiniteSystem::with_sizes(&[2, 2], vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let c = phase_product_bound(&sys, &[vec![0], vec![1]], &spin_sum, 0.0).unwrap();
        assert!(c.lhs < 1e-15 && c.rhs < 1e-15);
    }

    #[test]
    fn mismatched_blocks() {
        let sys = FiniteSystem::independent(&[vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let err = phase_product_bound(&sys, &[vec![0], vec![1]], &spin_sum, 1.0).unwrap_err();
        assert!(matches!(err, Error::DistributionMismatch(_)));
    }
}
