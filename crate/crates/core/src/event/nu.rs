use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cells per side of the coarse grid whose interval unions are scanned.
const COARSE_CELLS: usize = 16;
const MAX_RUNS: usize = 4;
/// Log-spaced cells used by the correlation witness.
const WITNESS_CELLS: usize = 64;

/// Law on the unit square with uniform marginals: the scale-invariant extremal law on `(0, x]²`,
/// uniform strips on `(0, x] × (x, 1]` and its mirror, and a uniform block on `(x, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuModel {
    pub eps: f64,
    pub x: f64,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuEventReport {
    pub worst_ratio: f64,
    pub factor: f64,
    pub grid_tolerance: f64,
    /// Row cells `[start, end)` of the worst first-coordinate event.
    pub event_a: Vec<(usize, usize)>,
    pub events_scanned: usize,
    /// Correlation of `p^{-1/2}`-shaped step functions on `(0, x]`, a lower bound on the maximal correlation.
    pub witness_correlation: f64,
}

impl NuModel {
    pub fn new(eps: f64, x: f64, m: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps = {eps} outside (0, 1)")));
        }
        if !(x > 0.0 && x < 1.0) || (2.0 - eps) * x > 1.0 {
            return Err(invalid(format!("x = {x} must lie in (0, 1/(2 - eps)]")));
        }
        if m < COARSE_CELLS || !m.is_multiple_of(COARSE_CELLS) {
            return Err(invalid(format!("grid size {m} must be a positive multiple of {COARSE_CELLS}")));
        }
        let model = Self { eps, x, m };
        let factor = model.factor();
        if factor >= 1.0 {
            return Err(Error::FactorTooLarge { factor });
        }
        Ok(model)
    }

    /// Event constant `ε/(1−x) + (εx − x²)/(ε(1−x)²)`.
    pub fn factor(&self) -> f64 {
        let (e, x) = (self.eps, self.x);
        e / (1.0 - x) + (e * x - x * x) / (e * (1.0 - x).powi(2))
    }

    /// CDF of the scale-invariant law, `ε√(PQ) ∧ P ∧ Q`.
    pub fn mu_star_cdf(&self, p: f64, q: f64) -> f64 {
        (self.eps * (p * q).sqrt()).min(p).min(q)
    }

    pub fn cdf(&self, p: f64, q: f64) -> f64 {
        let (p, q) = (p.clamp(0.0, 1.0), q.clamp(0.0, 1.0));
        let x = self.x;
        if p > q {
            return self.cdf(q, p);
        }
        if q <= x {
            return self.mu_star_cdf(p, q);
        }
        if p <= x {
            let g = self.mu_star_cdf(p, x);
            return g + (p - g) * (q - x) / (1.0 - x);
        }
        let e = self.eps;
        let strip = (x - e * x) / (1.0 - x);
        let c = (1.0 - (2.0 - e) * x) / (1.0 - x).powi(2);
        e * x + strip * (q - x) + strip * (p - x) + c * (p - x) * (q - x)
    }

    /// `ν(cell_i × cell_j)` on the uniform `m × m` grid, row-major.
    pub fn cell_masses(&self) -> Vec<f64> {
        let m = self.m;
        let h = 1.0 / m as f64;
        let mut out = vec![0.0; m * m];
        out.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let (p0, p1) = (i as f64 * h, (i + 1) as f64 * h);
            for (j, cell) in row.iter_mut().enumerate() {
                let (q0, q1) = (j as f64 * h, (j + 1) as f64 * h);
                *cell = (self.cdf(p1, q1) - self.cdf(p0, q1) - self.cdf(p1, q0) + self.cdf(p0, q0)).max(0.0);
            }
        });
        out
    }

    /// Worst normalized event covariance over interval-union events, with the second event optimized exactly.
    pub fn event_ratio(&self) -> NuEventReport {
        let m = self.m;
        let w = self.cell_masses();
        // prefix[i * m + j] = Σ_{i' < i} w[i', j]
        let mut prefix = vec![0.0; (m + 1) * m];
        for i in 0..m {
            for j in 0..m {
                prefix[(i + 1) * m + j] = prefix[i * m + j] + w[i * m + j];
            }
        }
        let mut events: Vec<Vec<(usize, usize)>> =
            (0..m).flat_map(|a| (a + 1..=m).map(move |b| vec![(a, b)])).filter(|e| e[0] != (0, m)).collect();
        let stride = m / COARSE_CELLS;
        for mask in 1u32..(1 << COARSE_CELLS) - 1 {
            let runs = runs_of(mask);
            if runs.len() > 1 && runs.len() <= MAX_RUNS {
                events.push(runs.iter().map(|&(a, b)| (a * stride, b * stride)).collect());
            }
        }
        let best = events
            .par_iter()
            .enumerate()
            .map(|(k, ev)| (best_ratio_for(ev, &prefix, m), k))
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        NuEventReport {
            worst_ratio: best.0,
            factor: self.factor(),
            grid_tolerance: 2.0 / m as f64,
            event_a: events[best.1].clone(),
            events_scanned: events.len(),
            witness_correlation: self.witness_correlation(),
        }
    }

    /// `Corr(f(P), f(Q))` for `f` equal to `c^{-1/2}` on log-spaced cells `(c/2, c]` of `(0, x]`.
    pub fn witness_correlation(&self) -> f64 {
        let edges: Vec<f64> = (0..=WITNESS_CELLS).rev().map(|k| self.x * 0.5f64.powi(k as i32)).collect();
        let vals: Vec<f64> = edges.windows(2).map(|e| 1.0 / (e[0] * e[1]).sqrt().sqrt()).collect();
        let n = vals.len();
        let (mut mean, mut second, mut cross) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let len = edges[k + 1] - edges[k];
            mean += vals[k] * len;
            second += vals[k] * vals[k] * len;
            for l in 0..n {
                let mass = self.cdf(edges[k + 1], edges[l + 1]) - self.cdf(edges[k], edges[l + 1])
                    - self.cdf(edges[k + 1], edges[l])
                    + self.cdf(edges[k], edges[l]);
                cross += vals[k] * vals[l] * mass;
            }
        }
        (cross - mean * mean) / (second - mean * mean)
    }
}

/// Maximal runs of set bits as half-open coarse-cell intervals.
fn runs_of(mask: u32) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < COARSE_CELLS {
        if mask >> i & 1 == 1 {
            let start = i;
            while i < COARSE_CELLS && mask >> i & 1 == 1 {
                i += 1;
            }
            runs.push((start, i));
        } else {
            i += 1;
        }
    }
    runs
}

/// For a fixed row event, the best column event takes the cells with the largest excess mass.
fn best_ratio_for(event: &[(usize, usize)], prefix: &[f64], m: usize) -> f64 {
    let rows: usize = event.iter().map(|(a, b)| b - a).sum();
    let la = rows as f64 / m as f64;
    let mut excess: Vec<f64> = (0..m)
        .map(|j| event.iter().map(|&(a, b)| prefix[b * m + j] - prefix[a * m + j]).sum::<f64>() - la / m as f64)
        .collect();
    excess.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut best = f64::NEG_INFINITY;
    for (k, d) in excess.iter().enumerate().take(m - 1) {
        acc += d;
        let lb = (k + 1) as f64 / m as f64;
        best = best.max(acc / (la * (1.0 - la) * lb * (1.0 - lb)).sqrt());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn factor_arithmetic() {
        let n = NuModel::new(0.5, 0.02, 64).unwrap();
        assert_relative_eq!(n.factor(), 0.5 / 0.98 + (0.01 - 0.0004) / (0.5 * 0.9604), epsilon = 1e-15);
        let tiny = NuModel::new(0.5, 1e-9, 64).unwrap();
        assert_relative_eq!(tiny.factor(), 0.5, epsilon = 1e-8);
        assert!(matches!(NuModel::new(0.9, 0.3, 64), Err(Error::FactorTooLarge { .. })));
    }

    #[test]
    fn marginals_are_uniform() {
        let n = NuModel::new(0.4, 0.05, 64).unwrap();
        for &p in &[0.01, 0.05, 0.3, 0.9] {
            assert_relative_eq!(n.cdf(p, 1.0), p, epsilon = 1e-14);
            assert_relative_eq!(n.cdf(1.0, p), p, epsilon = 1e-14);
        }
        let w = n.cell_masses();
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mu_star_rectangles() {
        let n = NuModel::new(0.5, 0.1, 64).unwrap();
        let cells = 32;
        let h = n.x / cells as f64;
        let mass = |i: usize, j: usize| {
            let (p0, p1, q0, q1) = (i as f64 * h, (i + 1) as f64 * h, j as f64 * h, (j + 1) as f64 * h);
            n.mu_star_cdf(p1, q1) - n.mu_star_cdf(p0, q1) - n.mu_star_cdf(p1, q0) + n.mu_star_cdf(p0, q0)
        };
        let mut r = rng(5);
        for _ in 0..200 {
            let a: Vec<usize> = (0..cells).filter(|_| r.random_bool(0.3)).collect();
            let b: Vec<usize> = (0..cells).filter(|_| r.random_bool(0.3)).collect();
            let joint: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| mass(i, j)).sum();
            let bound = n.eps * (a.len() as f64 * h * b.len() as f64 * h).sqrt();
            assert!(joint <= bound + 1e-15);
        }
    }

    #[test]
    fn runs() {
        assert_eq!(runs_of(0b1011_0001), vec![(0, 1), (4, 6), (7, 8)]);
    }
}
