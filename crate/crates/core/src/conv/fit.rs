use super::ToeplitzKernel;
use crate::error::{invalid, Result};
use crate::tensor::Norm;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shells needed for a decay fit, after the innermost two are dropped.
pub const MIN_SHELLS: usize = 12;
/// Minimum coefficient of determination for a fit to count.
const GOOD_R2: f64 = 0.95;
/// Values below this are treated as underflow and left out of the fits.
const VALUE_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitClass {
    Exponential,
    Polynomial,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub shells_used: usize,
    /// Slope of `−ln v` against the shell index.
    pub exp_rate: f64,
    pub exp_r2: f64,
    /// Slope of `−ln v` against `ln s`.
    pub poly_exponent: f64,
    pub poly_r2: f64,
    pub class: FitClass,
    pub inconclusive: bool,
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Log-linear and log-log regressions of the shell profile on shells `2..=max_shell`.
pub fn decay_fit(kernel: &ToeplitzKernel, max_shell: Option<usize>) -> Result<DecayFit> {
    let profile = kernel.shell_profile();
    let last = max_shell.unwrap_or(kernel.radius).min(kernel.radius);
    let shells: Vec<(f64, f64)> = (2..=last)
        .filter(|&s| profile[s] > VALUE_FLOOR)
        .map(|s| (s as f64, profile[s].ln()))
        .collect();
    if shells.len() < MIN_SHELLS {
        return Err(invalid(format!("decay fit needs {MIN_SHELLS} nonzero shells beyond radius 1, got {}", shells.len())));
    }
    let (exp_slope, exp_r2) = least_squares(&shells);
    let logs: Vec<(f64, f64)> = shells.iter().map(|&(s, v)| (s.ln(), v)).collect();
    let (poly_slope, poly_r2) = least_squares(&logs);
    let inconclusive = exp_r2 < GOOD_R2 && poly_r2 < GOOD_R2;
    let class = if inconclusive {
        FitClass::Inconclusive
    } else if exp_r2 >= poly_r2 {
        FitClass::Exponential
    } else {
        FitClass::Polynomial
    };
    Ok(DecayFit {
        shells_used: shells.len(),
        exp_rate: -exp_slope,
        exp_r2,
        poly_exponent: -poly_slope,
        poly_r2,
        class,
        inconclusive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiCertificate {
    pub d: f64,
    /// `max (φ_d * a)(z) / φ_d(z)` over the test window.
    pub rho: f64,
    pub test_radius: usize,
}

/// Searches `d = 1, 2, 4, …` for `φ_d * a ≤ ρ φ_d` with `ρ < 1` on `|z|_∞ ≤ test_radius`,
/// where `φ_d(z) = max(|z|, d)^{−α}`.
pub fn phi_subinvariance(a: &ToeplitzKernel, alpha: f64, norm: Norm, test_radius: usize) -> Option<PhiCertificate> {
    let support: Vec<(Vec<i64>, f64)> = a.points().filter(|(_, v)| *v != 0.0).map(|(z, v)| (z, v.abs())).collect();
    let n = a.n;
    let probe = ToeplitzKernel::zero(n, test_radius);
    let mut d = 1.0;
    while d <= 4.0 * test_radius as f64 {
        let phi = |z: &[i64]| norm.eval(z).max(d).powf(-alpha);
        let rho = (0..probe.values.len())
            .into_par_iter()
            .map(|i| {
                let z = probe.point(i);
                let conv: f64 = support
                    .iter()
                    .map(|(y, v)| {
                        let diff: Vec<i64> = z.iter().zip(y).map(|(p, q)| p - q).collect();
                        v * phi(&diff)
                    })
                    .sum();
                conv / phi(&z)
            })
            .reduce(|| 0.0, f64::max);
        if rho < 1.0 {
            return Some(PhiCertificate { d, rho, test_radius });
        }
        d *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::conv_inverse;

    #[test]
    fn exponential_profile() {
        let k = ToeplitzKernel::from_fn(1, 40, |z| (-(z[0].abs() as f64)).exp()).unwrap();
        let f = decay_fit(&k, None).unwrap();
        assert_eq!(f.class, FitClass::Exponential);
        assert!((f.exp_rate - 1.0).abs() < 0.02);
    }

    #[test]
    fn polynomial_profile() {
        let k = ToeplitzKernel::from_fn(1, 400, |z| (1.0 + z[0].abs() as f64).powi(-3)).unwrap();
        let f = decay_fit(&k, None).unwrap();
        assert_eq!(f.class, FitClass::Polynomial);
        assert!((f.poly_exponent - 3.0).abs() < 0.3, "{}", f.poly_exponent);
    }

    #[test]
    fn too_few_shells() {
        let k = ToeplitzKernel::from_fn(1, 8, |z| (-(z[0].abs() as f64)).exp()).unwrap();
        assert!(decay_fit(&k, None).is_err());
    }

    #[test]
    fn polynomial_inverse_keeps_exponent() {
        let raw = ToeplitzKernel::from_fn(1, 400, |z| if z[0] == 0 { 0.0 } else { (z[0].abs() as f64).powi(-3) }).unwrap();
        let s = 0.5 / raw.window_norm();
        let a = ToeplitzKernel::new(1, 400, raw.values.iter().map(|v| v * s).collect()).unwrap();
        let b = conv_inverse(&a).unwrap();
        let f = decay_fit(&b.kernel, Some(400)).unwrap();
        assert!((f.poly_exponent - 3.0).abs() < 0.3, "{}", f.poly_exponent);
    }

    #[test]
    fn phi_certificate_found() {
        let raw = ToeplitzKernel::from_fn(1, 30, |z| if z[0] == 0 { 0.0 } else { (z[0].abs() as f64).powi(-3) }).unwrap();
        let s = 0.6 / raw.window_norm();
        let a = ToeplitzKernel::new(1, 30, raw.values.iter().map(|v| v * s).collect()).unwrap();
        let c = phi_subinvariance(&a, 3.0, Norm::L1, 200).unwrap();
        assert!(c.rho < 1.0);
    }
}
