use super::{arcsin_sum, simple_bound};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Largest sublattice spacing tried by [`sublattice_k`].
pub const SPACING_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn eval(&self, z: &[i64]) -> f64 {
        match self {
            Norm::L1 => z.iter().map(|x| x.unsigned_abs() as f64).sum(),
            Norm::L2 => z.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt(),
            Norm::Linf => z.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64,
        }
    }

    /// Largest ratio `|z| / |z|_∞` on `Z^n`.
    pub fn sup_ratio(&self, n: usize) -> f64 {
        match self {
            Norm::L1 => n as f64,
            Norm::L2 => (n as f64).sqrt(),
            Norm::Linf => 1.0,
        }
    }
}

/// Majorant of `ε(z)` outside the window, as a function of `s = |z|_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Tail {
    None,
    /// `ε(z) ≤ C e^{−ψ s}`.
    Exponential {
        #[serde(rename = "C")]
        c: f64,
        psi: f64,
    },
    /// `ε(z) ≤ C s^{−α}`.
    Polynomial {
        #[serde(rename = "C")]
        c: f64,
        alpha: f64,
    },
    /// `Σ ε(z)` over the whole complement of the window is at most `total`.
    Mass { total: f64 },
}

/// Translation-invariant decorrelation bound `ε(z)` on a cubic window `|z|_∞ ≤ R`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeKernel {
    pub n: usize,
    pub norm: Norm,
    pub radius: usize,
    /// Row-major over `z_1, …, z_n ∈ [−R, R]`, last coordinate fastest.
    pub values: Vec<f64>,
    pub tail: Tail,
    /// Whether `ε` vanishes outside the window when no tail is given.
    pub complete: bool,
}

impl LatticeKernel {
    pub fn new(n: usize, norm: Norm, radius: usize, values: Vec<f64>, tail: Tail, complete: bool) -> Result<Self> {
        if n == 0 {
            return Err(invalid("lattice dimension must be positive"));
        }
        let side = 2 * radius + 1;
        let expected = side.checked_pow(n as u32).filter(|&s| s <= 1 << 24);
        if expected != Some(values.len()) {
            return Err(invalid(format!("kernel needs {side}^{n} values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("kernel value {v} outside [0, 1]")));
        }
        match tail {
            Tail::Exponential { c, psi } if !(c >= 0.0 && psi >= 0.0) => {
                return Err(invalid("tail parameters must be nonnegative"))
            }
            Tail::Polynomial { c, alpha } if !(c >= 0.0 && alpha >= 0.0) => {
                return Err(invalid("tail parameters must be nonnegative"))
            }
            Tail::Mass { total } if !(total >= 0.0 && total.is_finite()) => {
                return Err(invalid("tail mass must be finite and nonnegative"))
            }
            _ => {}
        }
        let k = Self { n, norm, radius, values, tail, complete };
        for (idx, v) in k.values.iter().enumerate() {
            let z = k.point(idx);
            let neg: Vec<i64> = z.iter().map(|x| -x).collect();
            if (v - k.get(&neg)).abs() > 1e-12 {
                return Err(invalid(format!("kernel is not symmetric at {z:?}")));
            }
        }
        Ok(k)
    }

    pub fn from_fn<F: Fn(&[i64]) -> f64>(n: usize, norm: Norm, radius: usize, tail: Tail, f: F) -> Result<Self> {
        let side = (2 * radius + 1) as i64;
        let total = side.pow(n as u32) as usize;
        let r = radius as i64;
        let values = (0..total)
            .map(|mut idx| {
                let mut z = vec![0i64; n];
                for k in (0..n).rev() {
                    z[k] = (idx % side as usize) as i64 - r;
                    idx /= side as usize;
                }
                f(&z)
            })
            .collect();
        Self::new(n, norm, radius, values, tail, true)
    }

    /// Nearest-neighbour kernel `ε(±e_k) = e` with no tail.
    pub fn nearest_neighbour(n: usize, e: f64) -> Result<Self> {
        Self::from_fn(n, Norm::L1, 1, Tail::None, |z| if Norm::L1.eval(z) == 1.0 { e } else { 0.0 })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_fn(n, Norm::Linf, 0, Tail::None, |_| 0.0)
    }

    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = 2 * self.radius + 1;
        let mut z = vec![0i64; self.n];
        for k in (0..self.n).rev() {
            z[k] = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
        z
    }

    pub fn get(&self, z: &[i64]) -> f64 {
        let r = self.radius as i64;
        if z.len() != self.n || z.iter().any(|x| x.abs() > r) {
            return 0.0;
        }
        let side = 2 * r + 1;
        let idx = z.iter().fold(0i64, |acc, x| acc * side + (x + r));
        self.values[idx as usize]
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.point(i), v))
    }

    /// Certified bound on `Σ ε(z)` over `|z|_∞ ≥ max(start, R+1)`.
    pub fn tail_sum_from(&self, start: usize) -> Result<f64> {
        let s0 = start.max(self.radius + 1);
        let n = self.n as i32;
        match self.tail {
            Tail::None if self.complete => Ok(0.0),
            Tail::None => Err(Error::MissingTail),
            Tail::Exponential { c: 0.0, .. } => Ok(0.0),
            Tail::Exponential { psi: 0.0, .. } => {
                Err(Error::NonSummableTail("exponential tail with zero rate".into()))
            }
            Tail::Exponential { c, psi } => Ok(exponential_shell_sum(self.n, c, psi, s0)),
            Tail::Mass { total } => Ok(total),
            Tail::Polynomial { c: 0.0, .. } => Ok(0.0),
            Tail::Polynomial { alpha, .. } if alpha <= self.n as f64 => {
                Err(Error::NonSummableTail(format!("polynomial exponent {alpha} ≤ dimension {n}")))
            }
            Tail::Polynomial { c, alpha } => {
                let s = s0 as f64;
                let lead = 2.0 * self.n as f64 * c * 3f64.powi(n - 1);
                Ok(lead * (s.powf(n as f64 - 1.0 - alpha) + s.powf(n as f64 - alpha) / (alpha - n as f64)))
            }
        }
    }

    /// Window sum over `z ≠ 0` plus the certified tail.
    pub fn off_origin_sum(&self) -> Result<f64> {
        let window: f64 = self.points().filter(|(z, _)| z.iter().any(|&x| x != 0)).map(|(_, v)| v).sum();
        Ok(window + self.tail_sum_from(0)?)
    }
}

/// `Σ_{s ≥ s0} 2n(2s+1)^{n−1} C e^{−ψ s}`, summed until a geometric remainder certifies the rest.
fn exponential_shell_sum(n: usize, c: f64, psi: f64, s0: usize) -> f64 {
    if n == 1 {
        return 2.0 * c * (-psi * s0 as f64).exp() / (1.0 - (-psi).exp());
    }
    let term = |s: f64| 2.0 * n as f64 * (2.0 * s + 1.0).powi(n as i32 - 1) * c * (-psi * s).exp();
    let ratio = |s: f64| ((2.0 * s + 3.0) / (2.0 * s + 1.0)).powi(n as i32 - 1) * (-psi).exp();
    let mut acc = 0.0;
    let mut s = s0 as f64;
    loop {
        let t = term(s);
        acc += t;
        let r = ratio(s);
        if r < 1.0 && t <= 1e-17 * acc.max(f64::MIN_POSITIVE) {
            return acc + t * r / (1.0 - r);
        }
        if s > 1e7 {
            return f64::INFINITY;
        }
        s += 1.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZnBound {
    /// Certified bound including the tail.
    pub value: f64,
    /// Bound from the window alone.
    pub window_value: f64,
    /// Upper bound on the arcsine mass outside the window.
    pub tail_error: f64,
}

/// Arcsine-sum bound for `Z^n` against `Z^n`.
pub fn zn_bound(kernel: &LatticeKernel) -> Result<ZnBound> {
    let window = arcsin_sum(&kernel.values);
    let tail_error = FRAC_PI_2 * kernel.tail_sum_from(0)?;
    Ok(ZnBound {
        value: (window + tail_error).min(FRAC_PI_2).sin(),
        window_value: window.min(FRAC_PI_2).sin(),
        tail_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    pub raw: f64,
    pub value: f64,
}

/// `Σ_{|z| ≥ d} ε(z) ∧ 1` in the kernel's norm.
pub fn distance_bound(kernel: &LatticeKernel, d: f64) -> Result<DistanceBound> {
    if !(d >= 0.0) {
        return Err(invalid("distance must be nonnegative"));
    }
    let window: f64 = kernel.points().filter(|(z, _)| kernel.norm.eval(z) >= d).map(|(_, v)| v).sum();
    let shell = (d / kernel.norm.sup_ratio(kernel.n)).ceil() as usize;
    let raw = window + kernel.tail_sum_from(shell)?;
    Ok(DistanceBound { raw, value: raw.min(1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublatticeK {
    pub k: f64,
    pub spacing: usize,
    /// Congruence-class sums, indexed like a row-major `spacing^n` array.
    pub class_sums: Vec<f64>,
}

/// Uniform correlation bound `k < 1` between disjoint sets from a sublattice decomposition.
pub fn sublattice_k(kernel: &LatticeKernel) -> Result<SublatticeK> {
    let tail = kernel.tail_sum_from(0)?;
    if kernel.points().any(|(z, v)| z.iter().any(|&x| x != 0) && v >= 1.0) {
        return Err(invalid("kernel reaches 1 away from the origin"));
    }
    let pts: Vec<(Vec<i64>, f64)> =
        kernel.points().filter(|(z, v)| *v > 0.0 && z.iter().any(|&x| x != 0)).collect();
    for spacing in 1..=SPACING_CAP {
        let classes = spacing.pow(kernel.n as u32);
        let mut sums = vec![tail; classes];
        for (z, v) in &pts {
            let idx = z.iter().fold(0usize, |acc, x| acc * spacing + x.rem_euclid(spacing as i64) as usize);
            sums[idx] += v;
        }
        if sums.iter().all(|&s| s < 1.0) {
            let block = 1.0 - simple_bound(&sums).powi(2);
            let k = (1.0 - block.powf(classes as f64)).max(0.0).sqrt();
            return Ok(SublatticeK { k, spacing, class_sums: sums });
        }
    }
    Err(Error::NoValidSpacing { cap: SPACING_CAP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nearest_neighbour_on_z() {
        let k = LatticeKernel::nearest_neighbour(1, 0.6).unwrap();
        let s = sublattice_k(&k).unwrap();
        assert_eq!(s.spacing, 3);
        let expected = (1.0 - 0.64f64.powi(2).powi(3)).sqrt();
        assert_relative_eq!(s.k, expected, epsilon = 1e-14);
        assert!(s.k < 1.0);
    }

    #[test]
    fn small_sum_uses_unit_spacing() {
        let k = LatticeKernel::nearest_neighbour(2, 0.1).unwrap();
        let s = sublattice_k(&k).unwrap();
        assert_eq!(s.spacing, 1);
        assert_relative_eq!(s.k, 0.4, epsilon = 1e-14);
        assert_eq!(sublattice_k(&LatticeKernel::zero(2).unwrap()).unwrap().k, 0.0);
    }

    #[test]
    fn exponential_tail_matches_direct_sum() {
        let k = LatticeKernel::from_fn(2, Norm::Linf, 3, Tail::Exponential { c: 0.5, psi: 0.7 }, |_| 0.0).unwrap();
        let mut direct = 0.0;
        for s in 4..400 {
            let count = (2 * s + 1) * (2 * s + 1) - (2 * s - 1) * (2 * s - 1);
            direct += count as f64 * 0.5 * (-0.7 * s as f64).exp();
        }
        let bound = k.tail_sum_from(0).unwrap();
        assert!(bound >= direct * (1.0 - 1e-12));
        // Shell counts are 8s against the majorant 4(2s+1).
        assert!(bound <= direct * 1.2);
    }

    #[test]
    fn polynomial_tail_dominates() {
        let k = LatticeKernel::from_fn(1, Norm::Linf, 5, Tail::Polynomial { c: 1.0, alpha: 3.0 }, |_| 0.0).unwrap();
        let direct: f64 = (6..100_000).map(|s| 2.0 * (s as f64).powi(-3)).sum();
        assert!(k.tail_sum_from(0).unwrap() >= direct);
        let bad = LatticeKernel::from_fn(2, Norm::Linf, 5, Tail::Polynomial { c: 1.0, alpha: 2.0 }, |_| 0.0).unwrap();
        assert!(matches!(bad.tail_sum_from(0), Err(Error::NonSummableTail(_))));
    }

    #[test]
    fn incomplete_window_needs_tail() {
        let mut k = LatticeKernel::nearest_neighbour(1, 0.2).unwrap();
        k.complete = false;
        assert!(matches!(zn_bound(&k), Err(Error::MissingTail)));
    }

    #[test]
    fn distance_bound_shells() {
        let k = LatticeKernel::from_fn(1, Norm::Linf, 4, Tail::None, |z| 0.1 / (1 + z[0].abs()) as f64).unwrap();
        let b = distance_bound(&k, 3.0).unwrap();
        assert_relative_eq!(b.raw, 2.0 * (0.1 / 4.0 + 0.1 / 5.0), epsilon = 1e-15);
        assert!(distance_bound(&LatticeKernel::nearest_neighbour(1, 0.6).unwrap(), 0.0).unwrap().value == 1.0);
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        assert!(LatticeKernel::from_fn(1, Norm::Linf, 1, Tail::None, |z| if z[0] == 1 { 0.3 } else { 0.0 }).is_err());
    }
}
