use super::lambda_fn;
use crate::error::{invalid, Error, Result};
use crate::linalg::lanczos_extremes;
use crate::seeds::rng;
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest grid accepted by [`ChogosovModel::opnorm`].
pub const MIN_GRID: usize = 256;

const CURVE_RTOL: f64 = 1e-12;

/// Region of the unit square relative to the two support curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    /// Below the lower curve, where the CDF equals `q`.
    Below,
    Interior,
    /// Above the upper curve, where the CDF equals `p`.
    Above,
    OnLower,
    OnUpper,
}

impl Zone {
    pub fn code(&self) -> &'static str {
        match self {
            Zone::Below => "1",
            Zone::Interior => "2",
            Zone::Above => "3",
            Zone::OnLower => "D",
            Zone::OnUpper => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleBranch {
    Lower,
    Interior,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChogosovSample {
    pub p: f64,
    pub q: f64,
    pub branch: SampleBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpnormReport {
    pub m: usize,
    pub rho_hat: f64,
    pub rayleigh: f64,
    pub lambda: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaIntegral {
    pub p: f64,
    pub atom_lower: f64,
    pub atom_upper: f64,
    pub interior: f64,
    pub total: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalWitness {
    pub max_ratio: f64,
    pub a: (f64, f64),
    pub b: (f64, f64),
}

/// Bivariate law on the unit square with uniform marginals and CDF `(pq + ε√(pp̄qq̄)) ∧ p ∧ q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChogosovModel {
    pub eps: f64,
}

impl ChogosovModel {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps = {eps} outside (0, 1)")));
        }
        Ok(Self { eps })
    }

    pub fn lambda(&self) -> f64 {
        lambda_fn(self.eps)
    }

    /// Lower support curve `q_D(p) = ε²p / (p̄ + ε²p)`.
    pub fn q_lower(&self, p: f64) -> f64 {
        let e2 = self.eps * self.eps;
        e2 * p / (1.0 - p + e2 * p)
    }

    /// Upper support curve `q_U(p) = p / (p + ε²p̄)`.
    pub fn q_upper(&self, p: f64) -> f64 {
        let e2 = self.eps * self.eps;
        p / (p + e2 * (1.0 - p))
    }

    /// Conditional mass of the lower curve given `p`.
    pub fn omega_lower(&self, p: f64) -> f64 {
        self.q_lower(p) / (2.0 * p)
    }

    /// One minus the conditional mass of the upper curve given `p`.
    pub fn omega_upper(&self, p: f64) -> f64 {
        1.0 - (1.0 - self.q_upper(p)) / (2.0 * (1.0 - p))
    }

    pub fn cdf(&self, p: f64, q: f64) -> f64 {
        let (p, q) = (p.clamp(0.0, 1.0), q.clamp(0.0, 1.0));
        let smooth = p * q + self.eps * (p * (1.0 - p) * q * (1.0 - q)).sqrt();
        smooth.min(p).min(q)
    }

    pub fn zone(&self, p: f64, q: f64) -> Zone {
        let e2 = self.eps * self.eps;
        let r = p * (1.0 - q) / (q * (1.0 - p));
        if (r * e2 - 1.0).abs() < CURVE_RTOL {
            Zone::OnLower
        } else if (r / e2 - 1.0).abs() < CURVE_RTOL {
            Zone::OnUpper
        } else if r * e2 > 1.0 {
            Zone::Below
        } else if r < e2 {
            Zone::Above
        } else {
            Zone::Interior
        }
    }

    /// Absolutely continuous density between the curves.
    pub fn density(&self, p: f64, q: f64) -> f64 {
        1.0 + self.eps * (p - 0.5) * (q - 0.5) / (p * (1.0 - p) * q * (1.0 - q)).sqrt()
    }

    /// `∂_p Z` on the interior branch: the conditional CDF of `q` given `p` between the curves.
    fn smooth_conditional(&self, p: f64, q: f64) -> f64 {
        q - self.eps * (p - 0.5) * (q * (1.0 - q) / (p * (1.0 - p))).sqrt()
    }

    /// Conditional CDF of the second coordinate given the first, atoms included.
    pub fn conditional_cdf(&self, p: f64, q: f64) -> f64 {
        if q < self.q_lower(p) {
            0.0
        } else if q >= self.q_upper(p) {
            1.0
        } else {
            self.smooth_conditional(p, q)
        }
    }

    /// Monotone rearrangement `Q(p, ω)` of the conditional law.
    pub fn quantile(&self, p: f64, omega: f64) -> f64 {
        let (lo_q, hi_q) = (self.q_lower(p), self.q_upper(p));
        if omega <= self.omega_lower(p) {
            return lo_q;
        }
        if omega >= self.omega_upper(p) {
            return hi_q;
        }
        let (mut lo, mut hi) = (lo_q, hi_q);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.smooth_conditional(p, mid) < omega {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn branch(&self, p: f64, omega: f64) -> SampleBranch {
        if omega <= self.omega_lower(p) {
            SampleBranch::Lower
        } else if omega >= self.omega_upper(p) {
            SampleBranch::Upper
        } else {
            SampleBranch::Interior
        }
    }

    /// Inverse-transform sampling; deterministic per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<ChogosovSample> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                let p: f64 = r.random();
                let omega: f64 = r.random();
                ChogosovSample { p, q: self.quantile(p, omega), branch: self.branch(p, omega) }
            })
            .collect()
    }

    /// `μ(cell_i × cell_j)` on the uniform `m × m` grid, row-major.
    pub fn cell_masses(&self, m: usize) -> Vec<f64> {
        let h = 1.0 / m as f64;
        let mut out = vec![0.0; m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let (p0, p1) = (i as f64 * h, (i + 1) as f64 * h);
            for (j, cell) in row.iter_mut().enumerate() {
                let (q0, q1) = (j as f64 * h, (j + 1) as f64 * h);
                let mass = self.cdf(p1, q1) - self.cdf(p0, q1) - self.cdf(p1, q0) + self.cdf(p0, q0);
                *cell = mass.max(0.0);
            }
        });
        out
    }

    /// Spectral radius of the discretized transfer operator on mean-zero functions.
    pub fn opnorm(&self, m: usize) -> Result<OpnormReport> {
        if m < MIN_GRID {
            return Err(Error::GridTooCoarse { m, min: MIN_GRID });
        }
        let w = self.cell_masses(m);
        let scale = m as f64;
        let apply = |f: &DVector<f64>| -> DVector<f64> {
            let mean = f.sum() / scale;
            let out: Vec<f64> = w
                .par_chunks(m)
                .map(|row| scale * row.iter().zip(f.iter()).map(|(a, b)| a * b).sum::<f64>() - mean)
                .collect();
            DVector::from_vec(out)
        };
        let (lo, hi) = lanczos_extremes(m, apply, 400, 1e-12);
        let rho_hat = lo.abs().max(hi.abs());

        let eta = 4.0 / scale;
        let f = DVector::from_fn(m, |i, _| {
            let p = ((i as f64 + 0.5) / scale).clamp(eta, 1.0 - eta);
            2.0 * (2.0 * p - 1.0) / (p * (1.0 - p)).sqrt()
        });
        let f = &f - DVector::from_element(m, f.mean());
        let rayleigh = f.dot(&apply(&f)) / f.dot(&f);
        Ok(OpnormReport { m, rho_hat, rayleigh, lambda: self.lambda(), eta })
    }
}

/// `∫₀¹ (pp̄/QQ̄)^{3/2} ∂_pQ dω`, split into the two curve atoms and the interior.
pub fn lambda_integral_identity(model: &ChogosovModel, p: f64) -> Result<LambdaIntegral> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p = {p} outside (0, 1)")));
    }
    let eps = model.eps;
    let e2 = eps * eps;
    let pp = p * (1.0 - p);
    let weight = |q: f64| (pp / (q * (1.0 - q))).powf(1.5);

    let s_lo = 1.0 - p + e2 * p;
    let q_lo = model.q_lower(p);
    let atom_lower = model.omega_lower(p) * weight(q_lo) * e2 / (s_lo * s_lo);

    let s_hi = p + e2 * (1.0 - p);
    let q_hi = model.q_upper(p);
    let atom_upper = (1.0 - model.omega_upper(p)) * weight(q_hi) * e2 / (s_hi * s_hi);

    let integrand = |omega: f64| {
        let q = model.quantile(p, omega);
        let dq = eps * (q * (1.0 - q)).sqrt() / (4.0 * pp.powf(1.5) * model.density(p, q));
        weight(q) * dq
    };
    let interior = quadrature::integrate(integrand, model.omega_lower(p), model.omega_upper(p), 1e-12).integral;
    let total = atom_lower + atom_upper + interior;
    Ok(LambdaIntegral { p, atom_lower, atom_upper, interior, total, lambda: model.lambda() })
}

/// Closed-form image of `q ↦ q^s` under the scale-invariant adjoint operator at `p`.
pub fn lstar_power(eps: f64, s: f64, p: f64) -> f64 {
    let e2 = eps * eps;
    let (a, b) = (e2 * p, p / e2);
    let k = s + 0.5;
    let integral = if k.abs() < 1e-300 { (b / a).ln() } else { (b.powf(k) - a.powf(k)) / k };
    eps / (4.0 * p.sqrt()) * integral + 0.5 * e2 * a.powf(s) + 0.5 * b.powf(s)
}

/// Largest relative residual of `L* f = Λ(ε) f` for `f(p) = p^{-1/2}` over the given points.
pub fn lstar_identity(eps: f64, points: &[f64]) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps = {eps} outside (0, 1)")));
    }
    if points.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid("evaluation points must be positive"));
    }
    let lam = lambda_fn(eps);
    Ok(points
        .iter()
        .map(|&p| {
            let target = lam / p.sqrt();
            ((lstar_power(eps, -0.5, p) - target) / target).abs()
        })
        .fold(0.0, f64::max))
}

/// Worst normalized covariance of interval events with endpoints on a `g`-grid.
pub fn chogosov_event_ratio(model: &ChogosovModel, g: usize) -> Result<IntervalWitness> {
    if g < 2 {
        return Err(invalid("interval grid needs at least 2 cells"));
    }
    let h = 1.0 / g as f64;
    let cdf: Vec<f64> = (0..=g).flat_map(|i| (0..=g).map(move |j| (i, j))).map(|(i, j)| model.cdf(i as f64 * h, j as f64 * h)).collect();
    let at = |i: usize, j: usize| cdf[i * (g + 1) + j];
    let intervals: Vec<(usize, usize)> = (0..g).flat_map(|a| (a + 1..=g).map(move |b| (a, b))).filter(|&(a, b)| b - a < g).collect();
    let best = intervals
        .par_iter()
        .map(|&(a0, a1)| {
            let la = (a1 - a0) as f64 * h;
            let mut best = IntervalWitness { max_ratio: 0.0, a: (0.0, 0.0), b: (0.0, 0.0) };
            for &(b0, b1) in &intervals {
                let lb = (b1 - b0) as f64 * h;
                let mass = at(a1, b1) - at(a0, b1) - at(a1, b0) + at(a0, b0);
                let r = (mass - la * lb).abs() / (la * (1.0 - la) * lb * (1.0 - lb)).sqrt();
                if r > best.max_ratio {
                    best = IntervalWitness { max_ratio: r, a: (a0 as f64 * h, a1 as f64 * h), b: (b0 as f64 * h, b1 as f64 * h) };
                }
            }
            best
        })
        .reduce_with(|x, y| if y.max_ratio > x.max_ratio { y } else { x })
        .expect("nonempty interval list");
    Ok(best)
}

/// Kolmogorov–Smirnov distance of a sample to the uniform law on `[0, 1]`.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(e: f64) -> ChogosovModel {
        ChogosovModel::new(e).unwrap()
    }

    #[test]
    fn cdf_basics() {
        let m = model(0.4);
        assert_relative_eq!(m.cdf(0.3, 1.0 - 1e-15), 0.3, epsilon = 1e-7);
        assert_eq!(m.cdf(0.2, 0.7), m.cdf(0.7, 0.2));
        assert_eq!(m.density(0.5, 0.5), 1.0);
        assert_eq!(m.zone(0.5, 0.5), Zone::Interior);
        assert_eq!(m.zone(0.5, 0.01), Zone::Below);
        assert_eq!(m.zone(0.5, 0.99), Zone::Above);
        assert_eq!(m.zone(0.3, m.q_lower(0.3)), Zone::OnLower);
    }

    #[test]
    fn quantile_branches() {
        let m = model(0.5);
        let p = 0.3;
        assert_eq!(m.quantile(p, 0.5 * m.omega_lower(p)), m.q_lower(p));
        assert_eq!(m.quantile(p, 1.0), m.q_upper(p));
        assert_relative_eq!(m.quantile(0.5, 0.5), 0.5, epsilon = 1e-14);
        let omega = 0.6;
        let q = m.quantile(0.4, omega);
        let h = 1e-6;
        let dz = (m.cdf(0.4 + h, q) - m.cdf(0.4 - h, q)) / (2.0 * h);
        assert_relative_eq!(dz, omega, epsilon = 1e-7);
    }

    #[test]
    fn atoms_are_half_eps() {
        for &e in &[0.2, 0.5, 0.8] {
            for &p in &[0.1, 0.5, 0.9] {
                let r = lambda_integral_identity(&model(e), p).unwrap();
                assert_relative_eq!(r.atom_lower, e / 2.0, epsilon = 1e-13);
                assert_relative_eq!(r.atom_upper, e / 2.0, epsilon = 1e-13);
                assert_relative_eq!(r.interior, -e * e.ln(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn lstar_matches_direct_quadrature() {
        for &s in &[-0.5, -0.3, 0.2] {
            let (e, p): (f64, f64) = (0.5, 0.7);
            let a = e * e * p;
            let b = p / (e * e);
            let direct = quadrature::integrate(|q| e / (4.0 * (p * q).sqrt()) * q.powf(s), a, b, 1e-14).integral
                + 0.5 * e * e * a.powf(s)
                + 0.5 * b.powf(s);
            assert_relative_eq!(lstar_power(e, s, p), direct, max_relative = 1e-12);
        }
        assert!(lstar_identity(0.5, &[1.0, 0.01, 37.0]).unwrap() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(model(0.5).opnorm(128), Err(Error::GridTooCoarse { m: 128, min: 256 })));
    }

    #[test]
    fn cell_masses_have_uniform_marginals() {
        let m = 64;
        let w = model(0.3).cell_masses(m);
        for i in 0..m {
            let row: f64 = w[i * m..(i + 1) * m].iter().sum();
            assert_relative_eq!(row, 1.0 / m as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn sample_marginals() {
        let s = model(0.5).sample(20_000, 1);
        let qs: Vec<f64> = s.iter().map(|x| x.q).collect();
        assert!(ks_uniform(&qs) < 1.63 / (20_000f64).sqrt());
    }
}
