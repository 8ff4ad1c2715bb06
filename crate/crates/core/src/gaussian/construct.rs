use super::{condition, maxcorr_gaussian, GaussianSystem};
use crate::error::{invalid, Result};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSimple {
    pub system: GaussianSystem,
    pub alphas: Vec<f64>,
    /// Recomputed `e_i = {X_i : Y | X_{<i}}`.
    pub conditional: Vec<f64>,
    pub maxcorr: f64,
    pub bound: f64,
}

fn one_factor_cov(alphas: &[f64]) -> DMatrix<f64> {
    let n = alphas.len();
    let load = |i: usize| if i < n { alphas[i].sqrt() } else { 1.0 };
    DMatrix::from_fn(n + 1, n + 1, |r, c| if r == c { 1.0 } else { load(r) * load(c) })
}

fn one_factor_system(alphas: &[f64]) -> GaussianSystem {
    let mut labels: Vec<String> = (1..=alphas.len()).map(|i| format!("X{i}")).collect();
    labels.push("Y".into());
    GaussianSystem { labels, cov: one_factor_cov(alphas) }
}

fn last_conditional(alphas: &[f64]) -> f64 {
    let sys = one_factor_system(alphas);
    let n = alphas.len();
    let given: Vec<usize> = (0..n - 1).collect();
    let cond = condition(&sys, &given).expect("indices in range");
    maxcorr_gaussian(&cond, &[0], &[1]).expect("disjoint")
}

/// One-factor system `X_i = √(1−α_i) ζ_i + √α_i Y` whose sequential conditional
/// correlations equal the requested values.
pub fn build_optimal_simple(eps: &[f64]) -> Result<OptimalSimple> {
    if let Some(e) = eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
        return Err(invalid(format!("epsilon {e} outside [0, 1)")));
    }
    let mut alphas: Vec<f64> = Vec::with_capacity(eps.len());
    for &target in eps {
        if target == 0.0 {
            alphas.push(0.0);
            continue;
        }
        alphas.push(0.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            *alphas.last_mut().unwrap() = mid;
            if last_conditional(&alphas) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        *alphas.last_mut().unwrap() = 0.5 * (lo + hi);
    }
    let system = one_factor_system(&alphas);
    let n = alphas.len();
    let conditional = (1..=n).map(|k| last_conditional(&alphas[..k])).collect();
    let xs: Vec<usize> = (0..n).collect();
    let maxcorr = if n == 0 { 0.0 } else { maxcorr_gaussian(&system, &xs, &[n])? };
    Ok(OptimalSimple { system, alphas, conditional, maxcorr, bound: crate::tensor::simple_bound(eps) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedZz {
    pub system: GaussianSystem,
    pub x_indices: Vec<usize>,
    pub y_indices: Vec<usize>,
    /// `{X_0 : Y_{1/2} | X_{<0}, Y_{<1/2}}` on the window.
    pub e_half: f64,
    pub e_half_closed_form: f64,
    pub maxcorr: f64,
    pub limit: f64,
}

/// Closed form of the nearest-neighbour conditional correlation in the banded construction.
pub fn banded_e_half(alpha: f64) -> f64 {
    ((1.0 + 4.0 * alpha).sqrt() - 1.0) / (2.0 * (1.0 + 2.0 * alpha).sqrt())
}

/// Banded system `X_i = ζ_i + √α(ω_{i−1/4} + ω_{i+1/4})`, `Y_j` likewise, on `|i| ≤ k`.
pub fn build_banded_zz(alpha: f64, k: usize) -> Result<BandedZz> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(invalid("alpha must be a finite nonnegative number"));
    }
    if k < 2 {
        return Err(invalid("window half-width must be at least 2"));
    }
    let k = k as i64;
    // Positions doubled: X at even 2i, Y at odd 2j.
    let xs: Vec<i64> = (-k..=k).map(|i| 2 * i).collect();
    let ys: Vec<i64> = (-k..k).map(|j| 2 * j + 1).collect();
    let pos: Vec<i64> = xs.iter().chain(&ys).copied().collect();
    let n = pos.len();
    let cov = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            1.0 + 2.0 * alpha
        } else if (pos[r] - pos[c]).abs() == 1 {
            alpha
        } else {
            0.0
        }
    });
    let labels = pos
        .iter()
        .map(|&p| if p % 2 == 0 { format!("X[{}]", p / 2) } else { format!("Y[{}]", p as f64 / 2.0) })
        .collect();
    let system = GaussianSystem { labels, cov };
    let x_indices: Vec<usize> = (0..xs.len()).collect();
    let y_indices: Vec<usize> = (xs.len()..n).collect();
    let past: Vec<usize> = (0..n).filter(|&i| pos[i] < 0).collect();
    let cond = condition(&system, &past)?;
    let e_half = maxcorr_gaussian(&cond, &cond.indices(&["X[0]"])?, &cond.indices(&["Y[0.5]"])?)?;
    let maxcorr = maxcorr_gaussian(&system, &x_indices, &y_indices)?;
    Ok(BandedZz {
        system,
        x_indices,
        y_indices,
        e_half,
        e_half_closed_form: banded_e_half(alpha),
        maxcorr,
        limit: 2.0 * alpha / (1.0 + 2.0 * alpha),
    })
}

/// Two-by-two table of the variance pieces for a pair `(X_1, X_2)` against `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingTable {
    pub v: [[f64; 2]; 2],
}

/// System `(X_1, X_2, Y)` whose coordinates are the rows of `mixing` applied to i.i.d. normals.
pub fn mixing_system(mixing: &Matrix3<f64>) -> GaussianSystem {
    let cov = mixing * mixing.transpose();
    GaussianSystem {
        labels: vec!["X1".into(), "X2".into(), "Y".into()],
        cov: DMatrix::from_fn(3, 3, |r, c| cov[(r, c)]),
    }
}

fn along(v: &Vector3<f64>, dir: &Vector3<f64>) -> Vector3<f64> {
    let n2 = dir.norm_squared();
    if n2 == 0.0 {
        Vector3::zeros()
    } else {
        dir * (v.dot(dir) / n2)
    }
}

/// Variance table of the optimal additive function, before and after revealing `Y`.
pub fn mixing_table(mixing: &Matrix3<f64>) -> MixingTable {
    let a: Vector3<f64> = mixing.row(0).transpose();
    let b: Vector3<f64> = mixing.row(1).transpose();
    let w: Vector3<f64> = mixing.row(2).transpose();
    let b_along_a = along(&b, &a);
    let b_rest = b - b_along_a;
    let a_t = a - along(&a, &w);
    let b_t = b - along(&b, &w);
    let b_hat = along(&b_t, &a_t);
    let b_dag = b_t - b_hat;
    MixingTable {
        v: [
            [(a + b_along_a).norm_squared(), b_rest.norm_squared()],
            [(a_t + b_hat).norm_squared(), b_dag.norm_squared()],
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_epsilon_gives_squared_loading() {
        let r = build_optimal_simple(&[0.6]).unwrap();
        assert_relative_eq!(r.alphas[0], 0.36, epsilon = 1e-12);
    }

    #[test]
    fn alphas_match_closed_form() {
        // α_i = e²/(e² + v(1−e²)) with v = Var(Y | X_{<i}).
        let eps = [0.3, 0.5, 0.2];
        let r = build_optimal_simple(&eps).unwrap();
        let mut v = 1.0;
        for (i, &e) in eps.iter().enumerate() {
            let expected = e * e / (e * e + v * (1.0 - e * e));
            assert_relative_eq!(r.alphas[i], expected, epsilon = 1e-12);
            v *= 1.0 - e * e;
        }
    }

    #[test]
    fn zero_epsilons() {
        let r = build_optimal_simple(&[0.0, 0.0]).unwrap();
        assert_eq!(r.alphas, vec![0.0, 0.0]);
        assert!(r.maxcorr < 1e-15);
    }

    #[test]
    fn banded_closed_form_on_window() {
        let r = build_banded_zz(1.0, 12).unwrap();
        assert_relative_eq!(r.e_half, r.e_half_closed_form, epsilon = 1e-9);
        let z = build_banded_zz(0.0, 3).unwrap();
        assert_eq!(z.maxcorr, 0.0);
    }

    #[test]
    fn mixing_tables() {
        let m = Matrix3::new(4.0, 1.0, 1.0, 1.0, 4.0, 1.0, 1.0, 1.0, 4.0);
        let t = mixing_table(&m);
        let expected = [[40.5, 13.5], [24.0, 12.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(t.v[r][c], expected[r][c], epsilon = 1e-12);
            }
        }
        let m = Matrix3::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0);
        assert_eq!(mixing_table(&m).v, [[4.0, 0.0], [2.0, 0.0]]);
    }
}
