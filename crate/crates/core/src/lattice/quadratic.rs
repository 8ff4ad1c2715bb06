use crate::conv::{conv_inverse, ToeplitzKernel};
use crate::error::{invalid, Error, Result};
use crate::tensor::{distance_bound, sublattice_k, zn_bound, DistanceBound, LatticeKernel, Norm, SublatticeK, Tail, ZnBound};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Gaussian field on `Z^n` with unit pinning and attractive pair couplings `γ_z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    /// `γ_z` on a window; the origin entry is ignored and `tail_mass` bounds the couplings outside.
    pub coupling: ToeplitzKernel,
    /// Norm used for the distance-based bounds on the resulting kernel.
    pub norm: Norm,
}

impl QuadraticModel {
    pub fn new(coupling: ToeplitzKernel, norm: Norm) -> Result<Self> {
        if !coupling.is_nonnegative() || coupling.tail_mass < 0.0 {
            return Err(invalid("couplings must be nonnegative"));
        }
        for (z, v) in coupling.points() {
            let neg: Vec<i64> = z.iter().map(|x| -x).collect();
            if (v - coupling.get(&neg)).abs() > 1e-12 {
                return Err(invalid(format!("couplings are not symmetric at {z:?}")));
            }
        }
        let mut coupling = coupling;
        let origin = vec![0i64; coupling.n];
        if let Some(idx) = (0..coupling.values.len()).find(|&i| coupling.point(i) == origin) {
            coupling.values[idx] = 0.0;
        }
        Ok(Self { coupling, norm })
    }

    /// `γ(±e_k) = g` and zero elsewhere.
    pub fn nearest_neighbour(n: usize, g: f64) -> Result<Self> {
        let k = ToeplitzKernel::from_fn(n, 1, |z| if Norm::L1.eval(z) == 1.0 { g } else { 0.0 })?;
        Self::new(k, Norm::L1)
    }

    pub fn dimension(&self) -> usize {
        self.coupling.n
    }

    /// `Γ = Σ_{z≠0} γ_z`, including the declared tail.
    pub fn gamma_total(&self) -> f64 {
        self.coupling.l1_norm()
    }

    /// Precision `(1+Γ)I − γ` periodized on a torus of the given side.
    pub fn torus_precision(&self, side: usize) -> Result<DMatrix<f64>> {
        let n = self.dimension();
        if self.coupling.tail_mass > 0.0 {
            return Err(invalid("torus precision needs couplings with finite support"));
        }
        let sites = side.checked_pow(n as u32).filter(|&s| s <= 1 << 13).ok_or(Error::SizeCap {
            what: "torus sites",
            size: usize::MAX,
            cap: 1 << 13,
        })?;
        let coords = |mut i: usize| {
            let mut c = vec![0i64; n];
            for k in (0..n).rev() {
                c[k] = (i % side) as i64;
                i /= side;
            }
            c
        };
        let index = |c: &[i64]| c.iter().fold(0usize, |acc, &x| acc * side + x.rem_euclid(side as i64) as usize);
        let mut q = DMatrix::identity(sites, sites) * (1.0 + self.gamma_total());
        for i in 0..sites {
            let ci = coords(i);
            for (z, g) in self.coupling.points().filter(|(_, g)| *g != 0.0) {
                let cj: Vec<i64> = ci.iter().zip(&z).map(|(a, b)| a + b).collect();
                q[(i, index(&cj))] -= g;
            }
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCovariance {
    /// `Cov(ω_i, ω_j) = a_inv(j − i)` at unit inverse temperature.
    pub a_inv: ToeplitzKernel,
    /// `ε(z) = a_inv(z) / a_inv(0)` off the origin, with a certified mass tail.
    pub kernel: LatticeKernel,
    pub gamma_total: f64,
    pub window_sum: f64,
    /// Certified ℓ¹ bound on everything the window misses, outside mass included.
    pub outside_mass: f64,
    pub neumann_terms: usize,
    pub identity_residual: f64,
}

/// Covariance of the quadratic model from the Neumann series of the normalized couplings.
pub fn quadratic_covariance(model: &QuadraticModel) -> Result<QuadraticCovariance> {
    let gamma = model.gamma_total();
    let scale = 1.0 / (1.0 + gamma);
    let normalized = ToeplitzKernel::new(
        model.coupling.n,
        model.coupling.radius,
        model.coupling.values.iter().map(|v| v * scale).collect(),
    )?
    .with_tail_mass(model.coupling.tail_mass * scale);
    let inv = conv_inverse(&normalized)?;
    let origin = vec![0i64; model.dimension()];
    let mut a_inv = inv.kernel.clone();
    for (i, v) in a_inv.values.iter_mut().enumerate() {
        let delta = if inv.kernel.point(i) == origin { 1.0 } else { 0.0 };
        *v = (delta + *v) * scale;
    }
    let window_sum: f64 = a_inv.values.iter().sum();
    let outside_mass = inv.error_bound * scale;
    a_inv.tail_mass = outside_mass;
    let a0 = a_inv.get(&origin);
    let kernel = LatticeKernel::new(
        a_inv.n,
        model.norm,
        a_inv.radius,
        a_inv
            .points()
            .map(|(z, v)| if z == origin { 0.0 } else { (v / a0).clamp(0.0, 1.0) })
            .collect(),
        Tail::Mass { total: outside_mass / a0 },
        false,
    )?;
    Ok(QuadraticCovariance {
        a_inv,
        kernel,
        gamma_total: gamma,
        window_sum,
        outside_mass,
        neumann_terms: inv.terms,
        identity_residual: inv.identity_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticRhoReport {
    pub gamma_total: f64,
    /// Certified `Σ_{z≠0} ε(z)`.
    pub eps_sum: f64,
    pub gamma_bound_holds: bool,
    /// `Γ` itself when it is below 1, a bound on every block-to-block correlation.
    pub gamma_bound: Option<f64>,
    pub zn: ZnBound,
    pub distance: Vec<(f64, DistanceBound)>,
    pub sublattice: Option<SublatticeK>,
    pub window_sum: f64,
}

/// Distances at which [`quadratic_rho_report`] evaluates the distance bound.
pub const REPORT_DISTANCES: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

pub fn quadratic_rho_report(model: &QuadraticModel) -> Result<QuadraticRhoReport> {
    let cov = quadratic_covariance(model)?;
    let eps_sum = cov.kernel.off_origin_sum()?;
    let gamma = cov.gamma_total;
    let distance = REPORT_DISTANCES
        .iter()
        .map(|&d| distance_bound(&cov.kernel, d).map(|b| (d, b)))
        .collect::<Result<Vec<_>>>()?;
    let sublattice = match sublattice_k(&cov.kernel) {
        Ok(s) => Some(s),
        Err(Error::NoValidSpacing { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(QuadraticRhoReport {
        gamma_total: gamma,
        eps_sum,
        gamma_bound_holds: eps_sum <= gamma + 1e-12,
        gamma_bound: (gamma < 1.0).then_some(gamma),
        zn: zn_bound(&cov.kernel)?,
        distance,
        sublattice,
        window_sum: cov.window_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::{decay_fit, FitClass};

    #[test]
    fn nearest_neighbour_chain() {
        let m = QuadraticModel::nearest_neighbour(1, 0.2).unwrap();
        let cov = quadratic_covariance(&m).unwrap();
        assert!((cov.window_sum - 1.0).abs() < 1e-10);
        assert!(cov.a_inv.get(&[0]) >= 1.0 / 1.4);
        assert!(cov.a_inv.values.iter().all(|&v| v >= 0.0));
        let rep = quadratic_rho_report(&m).unwrap();
        assert!(rep.eps_sum <= 0.4 && rep.gamma_bound_holds);
        assert_eq!(rep.gamma_bound, Some(0.4));
    }

    /// On `Z` the nearest-neighbour covariance is geometric with ratio `μ` solving `γμ² − (1+2γ)μ + γ = 0`.
    #[test]
    fn geometric_covariance() {
        let g = 0.2;
        let m = QuadraticModel::nearest_neighbour(1, g).unwrap();
        let cov = quadratic_covariance(&m).unwrap();
        let b = 1.0 + 2.0 * g;
        let mu = (b - (b * b - 4.0 * g * g).sqrt()) / (2.0 * g);
        let a0 = 1.0 / (b * b - 4.0 * g * g).sqrt();
        for z in 0..15i64 {
            assert!((cov.a_inv.get(&[z]) - a0 * mu.powi(z as i32)).abs() < 1e-11, "z = {z}");
        }
    }

    #[test]
    fn no_coupling() {
        let m = QuadraticModel::nearest_neighbour(2, 0.0).unwrap();
        let cov = quadratic_covariance(&m).unwrap();
        assert_eq!(cov.a_inv.get(&[0, 0]), 1.0);
        assert!(cov.kernel.values.iter().all(|&v| v == 0.0));
        let rep = quadratic_rho_report(&m).unwrap();
        assert_eq!(rep.eps_sum, 0.0);
        assert_eq!(rep.zn.value, 0.0);
    }

    #[test]
    fn torus_precision_rows_sum_to_one() {
        let m = QuadraticModel::nearest_neighbour(2, 0.1).unwrap();
        let q = m.torus_precision(4).unwrap();
        for i in 0..16 {
            assert!((q.row(i).sum() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exponential_couplings_decay_no_faster() {
        let raw = ToeplitzKernel::from_fn(1, 40, |z| if z[0] == 0 { 0.0 } else { (-(z[0].abs() as f64)).exp() }).unwrap();
        let s = 0.5 / raw.window_norm();
        let coupling = ToeplitzKernel::new(1, 40, raw.values.iter().map(|v| v * s).collect()).unwrap();
        let m = QuadraticModel::new(coupling.clone(), Norm::L1).unwrap();
        let cov = quadratic_covariance(&m).unwrap();
        let fit_in = decay_fit(&coupling, None).unwrap();
        let fit_out = decay_fit(&cov.a_inv, Some(40)).unwrap();
        assert_eq!(fit_out.class, FitClass::Exponential);
        assert!(fit_out.exp_rate <= fit_in.exp_rate);
    }
}
