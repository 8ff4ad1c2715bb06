//! Convolution algebra on `Z^n`: Neumann-series inverses, decay fits and banded-matrix inverse decay.

mod banded;
mod fit;

pub use banded::{banded_inverse_check, banded_inverse_constants, random_banded_matrix, BandedCheck, BandedConstants};
pub use fit::{decay_fit, phi_subinvariance, DecayFit, FitClass, PhiCertificate, MIN_SHELLS};

use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Target for the truncated Neumann series tail.
pub const SERIES_TOL: f64 = 1e-12;

/// Largest window radius used by [`conv_inverse`] in dimension `n`.
pub fn window_cap(n: usize) -> usize {
    match n {
        1 => 4096,
        2 => 128,
        _ => 24,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum DecayClass {
    Unknown,
    Compact,
    Exponential { rate: f64 },
    Polynomial { alpha: f64 },
}

/// Function on `Z^n` stored on the cube `|z|_∞ ≤ radius`, row-major with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzKernel {
    pub n: usize,
    pub radius: usize,
    pub values: Vec<f64>,
    pub decay: DecayClass,
    /// Bound on the ℓ¹ mass outside the window.
    pub tail_mass: f64,
}

fn side(radius: usize) -> usize {
    2 * radius + 1
}

fn point_of(mut idx: usize, n: usize, radius: usize) -> Vec<i64> {
    let s = side(radius);
    let mut z = vec![0i64; n];
    for k in (0..n).rev() {
        z[k] = (idx % s) as i64 - radius as i64;
        idx /= s;
    }
    z
}

fn index_of(z: &[i64], radius: usize) -> Option<usize> {
    let r = radius as i64;
    if z.iter().any(|x| x.abs() > r) {
        return None;
    }
    let s = 2 * r + 1;
    Some(z.iter().fold(0i64, |acc, x| acc * s + (x + r)) as usize)
}

impl ToeplitzKernel {
    pub fn new(n: usize, radius: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let expected = side(radius).checked_pow(n as u32).filter(|&s| s <= 1 << 24);
        if expected != Some(values.len()) {
            return Err(invalid(format!("kernel needs {}^{n} values, got {}", side(radius), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("kernel values must be finite"));
        }
        Ok(Self { n, radius, values, decay: DecayClass::Unknown, tail_mass: 0.0 })
    }

    pub fn from_fn<F: FnMut(&[i64]) -> f64>(n: usize, radius: usize, mut f: F) -> Result<Self> {
        let total = side(radius).pow(n as u32);
        Self::new(n, radius, (0..total).map(|i| f(&point_of(i, n, radius))).collect())
    }

    pub fn zero(n: usize, radius: usize) -> Self {
        Self::from_fn(n, radius, |_| 0.0).expect("valid shape")
    }

    pub fn with_decay(mut self, decay: DecayClass) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_tail_mass(mut self, mass: f64) -> Self {
        self.tail_mass = mass;
        self
    }

    pub fn point(&self, idx: usize) -> Vec<i64> {
        point_of(idx, self.n, self.radius)
    }

    pub fn get(&self, z: &[i64]) -> f64 {
        if z.len() != self.n {
            return 0.0;
        }
        index_of(z, self.radius).map_or(0.0, |i| self.values[i])
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.point(i), v))
    }

    pub fn window_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Window ℓ¹ norm plus the declared tail mass.
    pub fn l1_norm(&self) -> f64 {
        self.window_norm() + self.tail_mass
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Smallest radius containing every nonzero value.
    pub fn support_radius(&self) -> usize {
        self.points()
            .filter(|(_, v)| *v != 0.0)
            .map(|(z, _)| z.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Same function on another window, cropped or zero-padded.
    pub fn resized(&self, radius: usize) -> Self {
        let mut out = Self::from_fn(self.n, radius, |z| self.get(z)).expect("valid shape");
        out.decay = self.decay;
        out.tail_mass = self.tail_mass;
        out
    }

    pub fn abs(&self) -> Self {
        Self { values: self.values.iter().map(|v| v.abs()).collect(), ..self.clone() }
    }

    /// Largest `|value|` on each shell `|z|_∞ = s`, for `s = 0..=radius`.
    pub fn shell_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.radius + 1];
        for (z, v) in self.points() {
            let s = z.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
            out[s] = out[s].max(v.abs());
        }
        out
    }

    fn nonzero(&self) -> Vec<(Vec<i64>, f64)> {
        self.points().filter(|(_, v)| *v != 0.0).collect()
    }
}

/// `(a * b)(z)` for `|z|_∞ ≤ radius`, using only the stored windows of both factors.
pub fn convolve(a: &ToeplitzKernel, b: &ToeplitzKernel, radius: usize) -> Result<ToeplitzKernel> {
    if a.n != b.n {
        return Err(invalid("convolution of kernels in different dimensions"));
    }
    let support = a.nonzero();
    let n = a.n;
    let total = side(radius).pow(n as u32);
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let z = point_of(i, n, radius);
            let mut shifted = vec![0i64; n];
            let mut acc = 0.0;
            for (y, av) in &support {
                for k in 0..n {
                    shifted[k] = z[k] - y[k];
                }
                if let Some(j) = index_of(&shifted, b.radius) {
                    acc += av * b.values[j];
                }
            }
            acc
        })
        .collect();
    ToeplitzKernel::new(n, radius, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvInverse {
    /// `B[a] = a + a*a + …` on the working window.
    pub kernel: ToeplitzKernel,
    pub norm: f64,
    pub terms: usize,
    pub series_tail: f64,
    /// ℓ¹ mass of the partial powers that fell outside the window.
    pub dropped_mass: f64,
    /// ℓ¹ bound on the difference between the stored window and the true `B[a]`.
    pub error_bound: f64,
    /// `max |b − a − a*b|` on the part of the window where `a*b` is fully determined.
    pub identity_residual: f64,
}

/// Convolution inverse `B[a]` by a Neumann series on a window sized to the series length.
pub fn conv_inverse(a: &ToeplitzKernel) -> Result<ConvInverse> {
    let norm = a.l1_norm();
    if !(norm < 1.0) {
        return Err(Error::NormTooLarge { norm });
    }
    let reach = a.support_radius();
    let terms = if norm == 0.0 { 1 } else { series_terms(norm) };
    let needed = terms * reach;
    let cap = window_cap(a.n).max(reach);
    let mut window = reach.max(1);
    while window < needed && window < cap {
        window = (2 * window).min(cap);
    }
    let a_w = a.resized(reach);
    let window_mass = a_w.window_norm();
    let signed = !a_w.is_nonnegative();
    let a_abs = a_w.abs();

    let mut power = a_w.resized(window);
    let mut power_abs = signed.then(|| power.abs());
    let mut sum = power.values.clone();
    let mut dropped = 0.0;
    for _ in 1..terms {
        let next = convolve(&a_w, &power, window)?;
        let next_abs = match &power_abs {
            Some(p) => convolve(&a_abs, p, window)?,
            None => next.clone(),
        };
        let before = power_abs.as_ref().unwrap_or(&power).window_norm();
        dropped += (before * window_mass - next_abs.window_norm()).max(0.0);
        for (s, v) in sum.iter_mut().zip(&next.values) {
            *s += v;
        }
        power = next;
        if signed {
            power_abs = Some(next_abs);
        }
    }
    let mut kernel = ToeplitzKernel::new(a.n, window, sum)?;

    let series_tail = if norm == 0.0 { 0.0 } else { norm.powi(terms as i32 + 1) / (1.0 - norm) };
    let tail_effect = 1.0 / (1.0 - norm) - 1.0 / (1.0 - window_mass);
    let error_bound = series_tail + dropped / (1.0 - window_mass) + tail_effect;
    let abs_norm = a.abs().l1_norm();
    kernel.tail_mass = (abs_norm / (1.0 - abs_norm) - kernel.window_norm()).max(0.0) + error_bound;

    let inner = window.saturating_sub(reach);
    let ab = convolve(&a_w, &kernel, inner)?;
    let identity_residual = ab
        .points()
        .map(|(z, v)| (kernel.get(&z) - a_w.get(&z) - v).abs())
        .fold(0.0, f64::max);
    Ok(ConvInverse { kernel, norm, terms, series_tail, dropped_mass: dropped, error_bound, identity_residual })
}

/// Smallest `K` with `‖a‖^{K+1} / (1 − ‖a‖) < SERIES_TOL`.
fn series_terms(norm: f64) -> usize {
    let mut k = 1;
    while norm.powi(k as i32 + 1) / (1.0 - norm) >= SERIES_TOL {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng;
    use rand::Rng;

    /// Direct convolution on explicit coordinate lists, independent of the windowed indexing.
    fn naive_convolve(a: &ToeplitzKernel, b: &ToeplitzKernel, z: &[i64]) -> f64 {
        let mut acc = 0.0;
        for (x, av) in a.points() {
            let y: Vec<i64> = z.iter().zip(&x).map(|(p, q)| p - q).collect();
            acc += av * b.get(&y);
        }
        acc
    }

    #[test]
    fn shifted_exponential() {
        let a = ToeplitzKernel::from_fn(1, 1, |z| if z[0] == 1 { (-1f64).exp() } else { 0.0 }).unwrap();
        let inv = conv_inverse(&a).unwrap();
        for z in -40..=40i64 {
            let expected = if z > 0 { (-(z as f64)).exp() } else { 0.0 };
            assert!((inv.kernel.get(&[z]) - expected).abs() < 1e-12, "z = {z}");
        }
        assert!(inv.identity_residual < 1e-12);
        assert_eq!(inv.dropped_mass, 0.0);
    }

    #[test]
    fn zero_kernel() {
        let inv = conv_inverse(&ToeplitzKernel::zero(2, 3)).unwrap();
        assert!(inv.kernel.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norm_too_large() {
        let a = ToeplitzKernel::from_fn(1, 1, |z| if z[0] != 0 { 0.5 } else { 0.0 }).unwrap();
        assert!(matches!(conv_inverse(&a), Err(Error::NormTooLarge { .. })));
    }

    #[test]
    fn convolution_matches_naive() {
        let mut r = rng(3);
        let a = ToeplitzKernel::from_fn(2, 2, |_| r.random::<f64>() - 0.3).unwrap();
        let mut r2 = rng(4);
        let b = ToeplitzKernel::from_fn(2, 3, |_| r2.random::<f64>()).unwrap();
        let c = convolve(&a, &b, 5).unwrap();
        for (z, v) in c.points() {
            assert!((v - naive_convolve(&a, &b, &z)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_kernel_identity() {
        let mut r = rng(11);
        let raw = ToeplitzKernel::from_fn(1, 5, |_| r.random::<f64>()).unwrap();
        let scale = 0.7 / raw.window_norm();
        let a = ToeplitzKernel::new(1, 5, raw.values.iter().map(|v| v * scale).collect()).unwrap();
        let inv = conv_inverse(&a).unwrap();
        assert!(inv.identity_residual < 1e-10, "{}", inv.identity_residual);
        let total: f64 = inv.kernel.values.iter().sum();
        assert!((total - 0.7 / 0.3).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional_identity() {
        let a = ToeplitzKernel::from_fn(2, 1, |z| if z.iter().map(|x| x.abs()).sum::<i64>() == 1 { 0.1 } else { 0.0 })
            .unwrap();
        let inv = conv_inverse(&a).unwrap();
        assert!(inv.identity_residual < 1e-10);
        let total: f64 = inv.kernel.values.iter().sum();
        assert!((total - 0.4 / 0.6).abs() < 1e-9);
    }

    #[test]
    fn signed_kernel_is_dominated() {
        let a = ToeplitzKernel::from_fn(1, 2, |z| [0.1, -0.2, 0.0, -0.2, 0.1][(z[0] + 2) as usize]).unwrap();
        let inv = conv_inverse(&a).unwrap();
        let dom = conv_inverse(&a.abs()).unwrap();
        for (z, v) in inv.kernel.points() {
            assert!(v.abs() <= dom.kernel.get(&z) + 1e-12);
        }
    }
}
