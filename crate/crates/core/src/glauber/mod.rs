//! Spectral gap of heat-bath Glauber dynamics: lower bounds from decorrelation data and exact values.

mod sim;

pub use sim::{fit_relaxation, glauber_simulate, HeatBath, RelaxationFit, SimConfig, SimReport, Transition};

use crate::discrete::{subjective_maxcorr, FiniteSystem};
use crate::error::{invalid, Error, Result};
use crate::linalg::{spectral_norm, sym_eigen_sorted, symmetrize};
use crate::seeds::child_rng;
use crate::tensor::{spectral_radius, sublattice_k, sweep::random_system, EpsilonMatrix, LatticeKernel, SPACING_CAP};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest state space accepted by [`exact_gap`].
pub const GAP_STATE_CAP: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapBoundReport {
    pub m_matrix: Vec<Vec<f64>>,
    pub mprime_matrix: Option<Vec<Vec<f64>>>,
    pub bound_m: f64,
    pub bound_mprime: Option<f64>,
    pub bound_simple: f64,
    pub eps_norm: f64,
    pub eps_spectral_radius: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Sequential-conditioning matrix `M = (I − Ẽ)^{-1} diag(1̃)`.
pub fn m_matrix(eps: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = eps.nrows();
    let mut upper = DMatrix::zeros(n, n);
    let mut diag = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut prod = 1.0;
        for j in i + 1..n {
            let e = eps[(i, j)];
            if e >= 1.0 {
                return Err(Error::UnitEntry(i, j));
            }
            prod *= 1.0 - e * e;
            upper[(i, j)] = e / prod;
        }
        diag[(i, i)] = 1.0 / prod;
    }
    // I − Ẽ is unit upper triangular.
    let inv = (DMatrix::identity(n, n) - upper)
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("unit triangular matrix is invertible");
    Ok(inv * diag)
}

/// All three spectral-gap lower bounds for a symmetric matrix of pairwise decorrelations.
pub fn gap_lower_bounds(eps: &EpsilonMatrix) -> Result<GapBoundReport> {
    let (n, m) = eps.shape();
    if n != m {
        return Err(invalid("decorrelation matrix must be square"));
    }
    let mut e = eps.entries.clone();
    for i in 0..n {
        e[(i, i)] = 0.0;
        for j in 0..i {
            if (e[(i, j)] - e[(j, i)]).abs() > 1e-12 {
                return Err(invalid(format!("decorrelation matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let mm = m_matrix(&e)?;
    let bound_m = spectral_norm(&mm).powi(-2);
    let eps_norm = spectral_norm(&e);
    let radius = spectral_radius(&e)?;
    let (mprime, bound_mprime) = if radius < 1.0 {
        let inv = (DMatrix::identity(n, n) - &e).try_inverse().ok_or_else(|| invalid("I − ε is singular"))?;
        let b = spectral_norm(&inv).powi(-2);
        (Some(rows(&inv)), Some(b))
    } else {
        (None, None)
    };
    Ok(GapBoundReport {
        m_matrix: rows(&mm),
        mprime_matrix: mprime,
        bound_m,
        bound_mprime,
        bound_simple: (1.0 - eps_norm).max(0.0).powi(2),
        eps_norm,
        eps_spectral_radius: radius,
    })
}

/// Generator `−L = Σ_i (I − P_i)` on the support, with `P_i` the heat-bath resampling of site `i`.
pub struct Generator {
    /// Indices of the supported states in the full table.
    pub states: Vec<usize>,
    /// `(−L)[(x, y)]` over supported states.
    pub matrix: DMatrix<f64>,
    pub weights: Vec<f64>,
}

pub fn generator(sys: &FiniteSystem) -> Result<Generator> {
    let total = sys.num_states();
    if total > GAP_STATE_CAP {
        return Err(Error::SizeCap { what: "Glauber state space", size: total, cap: GAP_STATE_CAP });
    }
    let states: Vec<usize> = (0..total).filter(|&s| sys.joint[s] > 0.0).collect();
    let mut pos = vec![usize::MAX; total];
    for (k, &s) in states.iter().enumerate() {
        pos[s] = k;
    }
    let n = states.len();
    let sizes = sys.sizes();
    let mut gen = DMatrix::zeros(n, n);
    for (row, &s) in states.iter().enumerate() {
        let x = sys.decode(s);
        for (site, &size) in sizes.iter().enumerate() {
            let mut y = x.clone();
            let neighbours: Vec<usize> = (0..size)
                .map(|v| {
                    y[site] = v;
                    sys.encode(&y)
                })
                .collect();
            let context: f64 = neighbours.iter().map(|&t| sys.joint[t]).sum();
            gen[(row, row)] += 1.0;
            for &t in &neighbours {
                if sys.joint[t] > 0.0 {
                    gen[(row, pos[t])] -= sys.joint[t] / context;
                }
            }
        }
    }
    let weights = states.iter().map(|&s| sys.joint[s]).collect();
    Ok(Generator { states, matrix: gen, weights })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactGap {
    pub gap: f64,
    /// Mean-zero, unit-variance eigenfunction of the gap, indexed by full-table state (zero off the support).
    pub eigenfunction: Vec<f64>,
    pub spectrum_min: f64,
}

/// Smallest nonzero eigenvalue of the Dirichlet form `Σ_i E[Var(f | rest)]`.
pub fn exact_gap(sys: &FiniteSystem) -> Result<ExactGap> {
    let g = generator(sys)?;
    let n = g.states.len();
    if n < 2 {
        return Err(invalid("law is concentrated on a single state"));
    }
    let sq: Vec<f64> = g.weights.iter().map(|w| w.sqrt()).collect();
    let sym = symmetrize(&DMatrix::from_fn(n, n, |r, c| sq[r] * g.matrix[(r, c)] / sq[c]));
    let (vals, vecs) = sym_eigen_sorted(&sym);
    let mut eigenfunction = vec![0.0; sys.num_states()];
    for (k, &s) in g.states.iter().enumerate() {
        eigenfunction[s] = vecs[(k, 1)] / sq[k];
    }
    Ok(ExactGap { gap: vals[1], eigenfunction, spectrum_min: vals[0] })
}

/// Measured decorrelation matrix `ε̂_ij = {X_i : X_j}` conditioned on all other sites.
pub fn measured_eps(sys: &FiniteSystem) -> Result<EpsilonMatrix> {
    let n = sys.num_vars();
    let mut e = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let pool: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
            let v = subjective_maxcorr(sys, i, j, &pool)?;
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
    }
    EpsilonMatrix::new(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSweepConfig {
    pub systems: usize,
    pub seed: u64,
    pub max_spins: usize,
}

impl Default for GapSweepConfig {
    fn default() -> Self {
        Self { systems: 200, seed: 0, max_spins: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSweepReport {
    pub systems: usize,
    /// `min (gap − ‖M‖^{-2})`.
    pub min_gap_slack: f64,
    /// `min (‖M‖^{-2} − (1 − ‖ε̂‖)₊²)`.
    pub min_chain_slack: f64,
    /// Smallest and largest `gap / ‖M‖^{-2}` among systems with a positive bound.
    pub tightest_ratio: f64,
    pub loosest_ratio: f64,
    /// Systems where some `ε̂_ij = 1`, so the bound degenerates to 0.
    pub degenerate: usize,
}

/// Exact gaps of random binary spin systems against the bound from measured decorrelations.
pub fn gap_sweep(cfg: &GapSweepConfig) -> Result<GapSweepReport> {
    let rows: Vec<(f64, f64, f64, f64)> = (0..cfg.systems)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(cfg.seed, i as u64);
            let spins = rng.random_range(2..=cfg.max_spins);
            let sys = loop {
                let sys = random_system(&mut rng, &vec![2; spins]);
                if sys.joint.iter().filter(|&&p| p > 0.0).count() >= 2 {
                    break sys;
                }
            };
            let gap = exact_gap(&sys)?.gap;
            let eps = measured_eps(&sys)?;
            match gap_lower_bounds(&eps) {
                Ok(r) => Ok((gap, r.bound_m, r.bound_simple, 0.0)),
                Err(Error::UnitEntry(..)) => Ok((gap, 0.0, 0.0, 1.0)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = rows.iter().filter(|r| r.1 > 0.0).map(|r| r.0 / r.1).collect();
    Ok(GapSweepReport {
        systems: rows.len(),
        min_gap_slack: rows.iter().map(|r| r.0 - r.1).fold(f64::INFINITY, f64::min),
        min_chain_slack: rows.iter().map(|r| r.1 - r.2).fold(f64::INFINITY, f64::min),
        tightest_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        loosest_ratio: ratios.iter().copied().fold(0.0, f64::max),
        degenerate: rows.iter().filter(|r| r.3 > 0.0).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublatticeGap {
    pub value: f64,
    pub spacing: usize,
    /// Decorrelation mass of the sublattice `ℓZ^n ∖ {0}`.
    pub zeta: f64,
    pub block_eps: Vec<Vec<f64>>,
    pub bound_m: f64,
}

/// Gap lower bound for translation-invariant systems via block dynamics on the cosets of `ℓZ^n`.
pub fn sublattice_gap(kernel: &LatticeKernel) -> Result<SublatticeGap> {
    let tail = kernel.tail_sum_from(0)?;
    let k_uniform = sublattice_k(kernel).map(|s| s.k).unwrap_or(1.0);
    let n = kernel.n;
    let pts: Vec<(Vec<i64>, f64)> = kernel.points().filter(|(z, v)| *v > 0.0 && z.iter().any(|&x| x != 0)).collect();
    for spacing in 1..=SPACING_CAP {
        let classes = spacing.pow(n as u32);
        let mut sums = vec![tail; classes];
        for (z, v) in &pts {
            sums[class_index(z, spacing)] += v;
        }
        let zeta = sums[0];
        if zeta >= 1.0 {
            continue;
        }
        let mut e = DMatrix::zeros(classes, classes);
        for u in 0..classes {
            for v in 0..classes {
                if u != v {
                    let w = class_difference(u, v, spacing, n);
                    e[(u, v)] = sums[w].min(k_uniform);
                }
            }
        }
        if e.iter().any(|&x| x >= 1.0) {
            continue;
        }
        let bound_m = spectral_norm(&m_matrix(&e)?).powi(-2);
        return Ok(SublatticeGap { value: bound_m * (1.0 - zeta).powi(2), spacing, zeta, block_eps: rows(&e), bound_m });
    }
    Err(Error::NoValidSpacing { cap: SPACING_CAP })
}

fn class_index(z: &[i64], spacing: usize) -> usize {
    z.iter().fold(0usize, |acc, x| acc * spacing + x.rem_euclid(spacing as i64) as usize)
}

fn class_difference(u: usize, v: usize, spacing: usize, n: usize) -> usize {
    let digits = |mut x: usize| {
        let mut d = vec![0i64; n];
        for k in (0..n).rev() {
            d[k] = (x % spacing) as i64;
            x /= spacing;
        }
        d
    };
    let (du, dv) = (digits(u), digits(v));
    let diff: Vec<i64> = dv.iter().zip(&du).map(|(a, b)| a - b).collect();
    class_index(&diff, spacing)
}
