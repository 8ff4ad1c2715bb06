//! Event criteria: bounds on maximal correlation from covariances of indicator functions.

mod chogosov;
mod nu;

pub use chogosov::{
    chogosov_event_ratio, ks_uniform, lambda_integral_identity, lstar_identity, lstar_power, ChogosovModel,
    ChogosovSample, IntervalWitness, LambdaIntegral, OpnormReport, SampleBranch, Zone, MIN_GRID,
};
pub use nu::{NuEventReport, NuModel};

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// `Λ(ε) = ε(1 + |ln ε|)`, with `Λ(0) = 0`.
pub fn lambda_fn(eps: f64) -> f64 {
    if eps <= 0.0 {
        0.0
    } else {
        eps * (1.0 + eps.ln().abs())
    }
}

/// Largest admissible boundary value for sampled profiles.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakBound {
    /// `‖ζ‖ ‖θ‖`, or `+∞` when either norm diverges under refinement.
    pub value: f64,
    pub zeta_norm: f64,
    pub theta_norm: f64,
    pub divergent: bool,
}

/// Discrete `H¹₀` energy `Σ (Δζ)² / h` of samples on a uniform grid of `[0, 1]` taken with the given stride.
fn energy(samples: &[f64], stride: usize) -> f64 {
    let cells = (samples.len() - 1) / stride;
    let h = 1.0 / cells as f64;
    (0..cells).map(|k| (samples[(k + 1) * stride] - samples[k * stride]).powi(2) / h).sum()
}

/// Seminorm and a divergence flag from the energies at three nested grids.
fn seminorm(samples: &[f64], side: &'static str) -> Result<(f64, bool)> {
    if samples.len() < 9 || !(samples.len() - 1).is_multiple_of(4) {
        return Err(invalid("profiles need 4k+1 samples with k ≥ 2"));
    }
    for v in [samples[0], samples[samples.len() - 1]] {
        if !(v.abs() <= BOUNDARY_TOL) {
            return Err(Error::Boundary { side, value: v });
        }
    }
    let (fine, mid, coarse) = (energy(samples, 1), energy(samples, 2), energy(samples, 4));
    let (d1, d2) = (fine - mid, mid - coarse);
    // Convergent energies refine at second order; a logarithmic blow-up adds a constant per halving.
    let divergent = d2 > 0.0 && d1 / d2 >= 0.95;
    Ok((fine.sqrt(), divergent))
}

/// Product of discrete `H¹₀` seminorms of two profiles sampled on the same uniform grid.
pub fn weak_bound(zeta: &[f64], theta: &[f64]) -> Result<WeakBound> {
    let (zn, zd) = seminorm(zeta, "zeta")?;
    let (tn, td) = seminorm(theta, "theta")?;
    let divergent = zd || td;
    let value = if divergent { f64::INFINITY } else { zn * tn };
    Ok(WeakBound { value, zeta_norm: zn, theta_norm: tn, divergent })
}

/// Samples `f` at `cells + 1` uniform points of `[0, 1]`.
pub fn sample_profile<F: Fn(f64) -> f64>(f: F, cells: usize) -> Vec<f64> {
    (0..=cells).map(|k| f(k as f64 / cells as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_fn(0.0), 0.0);
        assert_eq!(lambda_fn(1.0), 1.0);
        assert_relative_eq!(lambda_fn((-1f64).exp()), 2.0 / std::f64::consts::E, epsilon = 1e-15);
        assert!(lambda_fn(0.3) > 0.3);
    }

    #[test]
    fn parabola_energy() {
        let z = sample_profile(|p| p * (1.0 - p), 1 << 12);
        let w = weak_bound(&z, &z).unwrap();
        assert!(!w.divergent);
        assert_relative_eq!(w.zeta_norm.powi(2), 1.0 / 3.0, epsilon = 1e-6);
        assert_relative_eq!(w.value, 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_profile() {
        let z = sample_profile(|_| 0.0, 64);
        let w = weak_bound(&z, &z).unwrap();
        assert_eq!(w.value, 0.0);
        assert!(!w.divergent);
    }

    #[test]
    fn square_root_profile_diverges() {
        let z = sample_profile(|p| (p * (1.0 - p)).sqrt(), 1 << 12);
        let t = sample_profile(|p| p * (1.0 - p), 1 << 12);
        let w = weak_bound(&z, &t).unwrap();
        assert!(w.divergent && w.value.is_infinite());
    }

    #[test]
    fn boundary_violation() {
        let z = sample_profile(|p| p, 16);
        assert!(matches!(weak_bound(&z, &z), Err(Error::Boundary { side: "zeta", .. })));
    }
}
