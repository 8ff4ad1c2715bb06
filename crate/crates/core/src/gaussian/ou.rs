//! Damped harmonic chain with friction noise on the momenta, on a periodic ring.
//!
//! State order is `(p_0, …, p_{K−1}, q_0, …, q_{K−1})`.

use super::{maxcorr_gaussian, GaussianSystem};
use crate::error::{invalid, Error, Result};
use crate::linalg::{sym_eigen_sorted, symmetrize};
use nalgebra::{DMatrix, DVector};
use ode_solvers::dop853::Dop853;
use ode_solvers::System;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuChainParams {
    pub m: f64,
    pub omega: f64,
    pub c: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub lambda: f64,
    pub t: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl Default for OuChainParams {
    fn default() -> Self {
        Self { m: 1.0, omega: 1.0, c: 1.0, temperature: 1.0, lambda: 1.0, t: 1.0, k: 16 }
    }
}

impl OuChainParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("m", self.m),
            ("omega", self.omega),
            ("c", self.c),
            ("T", self.temperature),
            ("lambda", self.lambda),
            ("t", self.t),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k < 3 {
            return Err(invalid(format!("K must be at least 3, got {}", self.k)));
        }
        Ok(())
    }

    pub fn with_t(&self, t: f64) -> Self {
        Self { t, ..*self }
    }

    /// Drift matrix of `d(p, q)`.
    pub fn drift(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut a = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            let (l, r) = ((i + k - 1) % k, (i + 1) % k);
            a[(i, i)] = -self.lambda;
            a[(i, k + i)] = -self.m * (self.omega.powi(2) + 2.0 * self.c.powi(2));
            a[(i, k + l)] += self.m * self.c.powi(2);
            a[(i, k + r)] += self.m * self.c.powi(2);
            a[(k + i, i)] = 1.0 / self.m;
        }
        a
    }

    /// Quadratic form of the energy: `H = ½ ηᵀ Q η`.
    pub fn energy_form(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut q = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            let (l, r) = ((i + k - 1) % k, (i + 1) % k);
            q[(i, i)] = 1.0 / self.m;
            q[(k + i, k + i)] = self.m * (self.omega.powi(2) + 2.0 * self.c.powi(2));
            q[(k + i, k + l)] -= self.m * self.c.powi(2);
            q[(k + i, k + r)] -= self.m * self.c.powi(2);
        }
        q
    }

    /// Stationary covariance `T Q⁻¹`.
    pub fn stationary_cov(&self) -> DMatrix<f64> {
        let inv = self.energy_form().try_inverse().expect("energy form is positive definite");
        symmetrize(&(inv * self.temperature))
    }

    fn noise_strength(&self) -> f64 {
        2.0 * self.temperature * self.lambda * self.m
    }
}

struct Lyapunov {
    a: DMatrix<f64>,
    n: usize,
    noise: f64,
}

impl System<f64, DVector<f64>> for Lyapunov {
    fn system(&self, _u: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let s = DMatrix::from_column_slice(self.n, self.n, y.as_slice());
        let as_ = &self.a * &s;
        let mut d = &as_ + as_.transpose();
        let k = self.n / 2;
        for i in 0..k {
            d[(i, i)] += self.noise;
        }
        dy.copy_from_slice(d.as_slice());
    }
}

/// Noise covariance `∫_0^t e^{uA} N e^{uAᵀ} du` from the matrix ODE `S' = AS + SAᵀ + N`.
pub fn noise_covariance(params: &OuChainParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = 2 * params.k;
    let sys = Lyapunov { a: params.drift(), n, noise: params.noise_strength() };
    let y0: DVector<f64> = DVector::zeros(n * n);
    let t = params.t;
    // Step-end output; the solver's dense interpolant is not accurate enough here.
    let mut solver = Dop853::new(sys, 0.0, t, 0.0, y0, 1e-10, 1e-24);
    solver.integrate().map_err(|e| Error::Integrator(format!("{e} (t = {t}, K = {})", params.k)))?;
    let (_, ys) = solver.results().get();
    let end = ys.last().ok_or_else(|| Error::Integrator("no output".into()))?;
    let s = DMatrix::from_column_slice(n, n, end.as_slice());
    Ok(symmetrize(&s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuChainReport {
    /// Joint system over `(η, η′)`; labels `p0.., q0.., p0'.., q0'..`.
    pub joint: GaussianSystem,
    pub noise_cov: DMatrix<f64>,
    pub maxcorr: f64,
    /// `|Corr(η_a, η′_b)|` for all coordinate pairs.
    pub coordinate_correlations: DMatrix<f64>,
    /// Extreme eigenvalues of the rescaled joint precision matrix.
    pub precision_min: f64,
    pub precision_max: f64,
    /// `‖e^{tA} S e^{tAᵀ} + Ĉ − S‖_max`; zero for an exact integration.
    pub stationarity_residual: f64,
}

/// Joint covariance of the stationary state and its evolution after time `t`.
pub fn ou_chain_joint(params: &OuChainParams) -> Result<OuChainReport> {
    params.validate()?;
    let k = params.k;
    let n = 2 * k;
    let s = params.stationary_cov();
    let flow = (params.drift() * params.t).exp();
    let noise_cov = noise_covariance(params)?;
    let cross = &flow * &s;
    let later = symmetrize(&(&cross * flow.transpose() + &noise_cov));
    let stationarity_residual = (&later - &s).amax();
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    cov.view_mut((0, 0), (n, n)).copy_from(&s);
    cov.view_mut((n, 0), (n, n)).copy_from(&cross);
    cov.view_mut((0, n), (n, n)).copy_from(&cross.transpose());
    cov.view_mut((n, n), (n, n)).copy_from(&later);
    let mut labels: Vec<String> = Vec::with_capacity(2 * n);
    for prime in ["", "'"] {
        labels.extend((0..k).map(|i| format!("p{i}{prime}")));
        labels.extend((0..k).map(|i| format!("q{i}{prime}")));
    }
    let joint = GaussianSystem::new(labels, cov)?;
    let now: Vec<usize> = (0..n).collect();
    let then: Vec<usize> = (n..2 * n).collect();
    let maxcorr = maxcorr_gaussian(&joint, &now, &then)?;
    let c = &joint.cov;
    let coordinate_correlations =
        DMatrix::from_fn(n, n, |a, b| (c[(a, n + b)] / (c[(a, a)] * c[(n + b, n + b)]).sqrt()).abs());
    let chi = params.m * params.omega;
    let scale = DVector::from_fn(2 * n, |i, _| if i % n < k { chi } else { 1.0 });
    let precision = c.clone().try_inverse().ok_or_else(|| invalid("joint covariance is singular"))?;
    let rescaled = DMatrix::from_fn(2 * n, 2 * n, |r, cc| scale[r] * precision[(r, cc)] * scale[cc]);
    let (vals, _) = sym_eigen_sorted(&rescaled);
    Ok(OuChainReport {
        joint,
        noise_cov,
        maxcorr,
        coordinate_correlations,
        precision_min: vals[0],
        precision_max: vals[vals.len() - 1],
        stationarity_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallTExpansion {
    pub times: Vec<f64>,
    /// Extrapolated limits of `Ĉ_pp/t`, `Ĉ_pq/t²`, `Ĉ_qq/t³` at site 0.
    pub pp_coefficient: f64,
    pub pq_coefficient: f64,
    pub qq_coefficient: f64,
    /// Predicted leading coefficients `2Tλm`, `Tλ`, `(2/3)Tλ/m`.
    pub pp_expected: f64,
    pub pq_expected: f64,
    pub qq_expected: f64,
    /// Log-log slope of `|Ĉ_{p_0 p_d}|` between the two smallest times, for `d = 1, 2, …`.
    pub offdiag_slopes: Vec<f64>,
}

/// Neville extrapolation of samples `(h_i, v_i)` to `h = 0`.
pub fn neville_at_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            p[i] = (h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i]);
        }
    }
    p[0]
}

/// Leading small-time behaviour of the noise covariance at times `t0 / 2^j`.
pub fn ou_small_t_expansion(params: &OuChainParams, t0: f64, levels: usize, max_offset: usize) -> Result<SmallTExpansion> {
    params.validate()?;
    let k = params.k;
    let times: Vec<f64> = (0..levels).map(|j| t0 / 2f64.powi(j as i32)).collect();
    let mut pp = Vec::new();
    let mut pq = Vec::new();
    let mut qq = Vec::new();
    let mut mats = Vec::new();
    for &t in &times {
        let c = noise_covariance(&params.with_t(t))?;
        pp.push(c[(0, 0)] / t);
        pq.push(c[(0, k)] / t.powi(2));
        qq.push(c[(k, k)] / t.powi(3));
        mats.push(c);
    }
    let (a, b) = (levels - 2, levels - 1);
    let offdiag_slopes = (1..=max_offset)
        .map(|d| (mats[a][(0, d)].abs().ln() - mats[b][(0, d)].abs().ln()) / (times[a].ln() - times[b].ln()))
        .collect();
    let (tt, lam, m) = (params.temperature, params.lambda, params.m);
    Ok(SmallTExpansion {
        pp_coefficient: neville_at_zero(&times, &pp),
        pq_coefficient: neville_at_zero(&times, &pq),
        qq_coefficient: neville_at_zero(&times, &qq),
        pp_expected: 2.0 * tt * lam * m,
        pq_expected: tt * lam,
        qq_expected: 2.0 / 3.0 * tt * lam / m,
        offdiag_slopes,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stationary_cov_solves_lyapunov() {
        let p = OuChainParams { k: 5, m: 1.3, omega: 0.7, c: 0.9, temperature: 2.0, lambda: 0.4, t: 1.0 };
        let a = p.drift();
        let s = p.stationary_cov();
        let mut resid = &a * &s + &s * a.transpose();
        for i in 0..p.k {
            resid[(i, i)] += p.noise_strength();
        }
        assert!(resid.amax() < 1e-12);
    }

    #[test]
    fn ode_matches_flow_identity() {
        let p = OuChainParams { k: 4, t: 0.7, ..Default::default() };
        let r = ou_chain_joint(&p).unwrap();
        assert!(r.stationarity_residual < 1e-9, "{}", r.stationarity_residual);
        assert!(r.maxcorr < 1.0 && r.precision_min > 0.0);
    }

    #[test]
    fn neville_recovers_polynomial() {
        let h = [0.4, 0.2, 0.1, 0.05];
        let v: Vec<f64> = h.iter().map(|x| 3.0 - 2.0 * x + 5.0 * x * x).collect();
        assert_relative_eq!(neville_at_zero(&h, &v), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_small_ring() {
        let p = OuChainParams { k: 2, ..Default::default() };
        assert!(ou_chain_joint(&p).is_err());
    }
}
