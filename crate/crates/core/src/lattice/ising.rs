use crate::discrete::{maxcorr_blocks, subjective_maxcorr, FiniteSystem, Variable};
use crate::error::{invalid, Error, Result};
use crate::glauber::HeatBath;
use crate::seeds::rng;
use crate::tensor::{LatticeKernel, Norm, Tail};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest torus enumerated exactly.
pub const EXACT_SITE_CAP: usize = 16;
/// Largest torus on which clamped contexts are scanned.
pub const CLAMP_SCAN_CAP: usize = 10;
/// Normal quantile for the 95% Wilson intervals.
const WILSON_Z: f64 = 1.959963984540054;

/// Nearest-neighbour Ising model `H = −½ Σ_i Σ_{±e_k} ω_i ω_{i±e_k}` on the torus `(Z/LZ)^n`,
/// with spin `−1` stored as state 0 and `+1` as state 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingTorus {
    pub n: usize,
    pub side: usize,
    pub temperature: f64,
    /// Sites held fixed, with their spins `±1`.
    #[serde(default)]
    pub clamp: Vec<(usize, i8)>,
}

impl IsingTorus {
    pub fn new(n: usize, side: usize, temperature: f64) -> Result<Self> {
        if n == 0 || side < 2 {
            return Err(invalid("need dimension ≥ 1 and side ≥ 2"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid(format!("temperature {temperature} must be positive")));
        }
        if side.checked_pow(n as u32).is_none_or(|s| s > 1 << 24) {
            return Err(Error::SizeCap { what: "torus sites", size: usize::MAX, cap: 1 << 24 });
        }
        Ok(Self { n, side, temperature, clamp: Vec::new() })
    }

    pub fn with_clamp(mut self, clamp: Vec<(usize, i8)>) -> Result<Self> {
        let sites = self.num_sites();
        for &(s, v) in &clamp {
            if s >= sites || v.abs() != 1 {
                return Err(invalid(format!("clamp ({s}, {v}) needs a valid site and spin ±1")));
            }
        }
        self.clamp = clamp;
        Ok(self)
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.n as u32)
    }

    pub fn coords(&self, mut site: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.n];
        for k in (0..self.n).rev() {
            c[k] = (site % self.side) as i64;
            site /= self.side;
        }
        c
    }

    pub fn site(&self, coords: &[i64]) -> usize {
        let l = self.side as i64;
        coords.iter().fold(0usize, |acc, &x| acc * self.side + x.rem_euclid(l) as usize)
    }

    /// The `2n` neighbour slots of a site; on a side-2 torus both slots of an axis hit the same site.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let c = self.coords(site);
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            for step in [-1i64, 1] {
                let mut d = c.clone();
                d[k] += step;
                out.push(self.site(&d));
            }
        }
        out
    }

    fn clamped(&self, site: usize) -> Option<i8> {
        self.clamp.iter().find(|(s, _)| *s == site).map(|&(_, v)| v)
    }

    pub fn local_field(&self, state: &[usize], site: usize) -> f64 {
        self.neighbours(site).iter().map(|&j| spin(state[j])).sum()
    }

    pub fn energy(&self, state: &[usize]) -> f64 {
        -0.5 * (0..self.num_sites()).map(|i| spin(state[i]) * self.local_field(state, i)).sum::<f64>()
    }
}

pub fn spin(state: usize) -> f64 {
    if state == 1 {
        1.0
    } else {
        -1.0
    }
}

impl HeatBath for IsingTorus {
    fn num_sites(&self) -> usize {
        IsingTorus::num_sites(self)
    }

    fn initial_state<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        (0..IsingTorus::num_sites(self))
            .map(|i| match self.clamped(i) {
                Some(v) => usize::from(v > 0),
                None => usize::from(rng.random_bool(0.5)),
            })
            .collect()
    }

    fn resample<R: Rng>(&self, state: &mut [usize], site: usize, rng: &mut R) -> usize {
        if self.clamped(site).is_none() {
            let h = self.local_field(state, site);
            let p_up = 1.0 / (1.0 + (-2.0 * h / self.temperature).exp());
            state[site] = usize::from(rng.random::<f64>() < p_up);
        }
        state[site]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingConstants {
    /// Prefactor turning event-covariance decay into maximal-correlation decay.
    pub c0: f64,
    /// Uniform bound on single-spin pair correlations in any clamped context.
    pub k0: f64,
    /// Lower bound on any single-spin probability under any boundary condition.
    pub p_single: f64,
    /// Lower bound on any two-spin probability under any boundary condition.
    pub p_pair: f64,
}

/// Constants depending only on `n` and `T`; `c0 = 1/(2p(1−p))` with `p` the single-spin floor.
pub fn ising_constants(n: usize, temperature: f64) -> IsingConstants {
    let x = 4.0 * n as f64 / temperature;
    let p_single = 1.0 / (x.exp() + 1.0);
    let p_pair = 1.0 / ((8.0 * n as f64 / temperature).exp() + 2.0 * ((4.0 * n as f64 + 2.0) / temperature).exp() + 1.0);
    IsingConstants { c0: 0.5 / (p_single * (1.0 - p_single)), k0: 1.0 - 4.0 * p_pair, p_single, p_pair }
}

/// Gibbs measure `∝ e^{−H/T}` on all `2^N` configurations, restricted to the clamp.
pub fn ising_exact(torus: &IsingTorus) -> Result<FiniteSystem> {
    let sites = torus.num_sites();
    if sites > EXACT_SITE_CAP {
        return Err(Error::SizeCap { what: "exactly enumerated torus", size: sites, cap: EXACT_SITE_CAP });
    }
    let energies: Vec<Option<f64>> = (0..1usize << sites)
        .map(|idx| {
            let state: Vec<usize> = (0..sites).map(|i| (idx >> (sites - 1 - i)) & 1).collect();
            let consistent = torus.clamp.iter().all(|&(s, v)| spin(state[s]) == f64::from(v));
            consistent.then(|| torus.energy(&state))
        })
        .collect();
    let e_min = energies.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
    let weights: Vec<f64> =
        energies.iter().map(|e| e.map_or(0.0, |e| (-(e - e_min) / torus.temperature).exp())).collect();
    let z: f64 = weights.iter().sum();
    let variables = (0..sites).map(|i| Variable { name: format!("s{i}"), size: 2 }).collect();
    FiniteSystem::new(variables, weights.iter().map(|w| w / z).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EpsMethod {
    Exact {
        /// Take the supremum over clamped contexts of the remaining sites.
        subjective: bool,
    },
    Mcmc {
        samples: usize,
        burn_in_sweeps: usize,
        thin_sweeps: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsInterval {
    pub offset: Vec<i64>,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingEpsilon {
    /// `ε(z)` on offsets `|z|_∞ ≤ side/2`; offsets of length `side/2` alias their negatives.
    pub kernel: LatticeKernel,
    pub constants: IsingConstants,
    pub intervals: Vec<EpsInterval>,
    pub method: EpsMethod,
}

/// Pairwise decorrelation `ε(z)`, maximized over base sites.
pub fn ising_epsilon(torus: &IsingTorus, method: EpsMethod, seed: u64) -> Result<IsingEpsilon> {
    let radius = torus.side / 2;
    let offsets: Vec<Vec<i64>> = {
        let side = 2 * radius + 1;
        (0..side.pow(torus.n as u32))
            .map(|mut idx| {
                let mut z = vec![0i64; torus.n];
                for k in (0..torus.n).rev() {
                    z[k] = (idx % side) as i64 - radius as i64;
                    idx /= side;
                }
                z
            })
            .collect()
    };
    let free: Vec<usize> = (0..torus.num_sites()).filter(|&i| torus.clamped(i).is_none()).collect();
    let intervals = match method {
        EpsMethod::Exact { subjective } => exact_intervals(torus, &offsets, &free, subjective)?,
        EpsMethod::Mcmc { samples, burn_in_sweeps, thin_sweeps } => {
            mcmc_intervals(torus, &offsets, &free, samples, burn_in_sweeps, thin_sweeps, seed)?
        }
    };
    let kernel = LatticeKernel::new(
        torus.n,
        Norm::L1,
        radius,
        intervals.iter().map(|iv| iv.estimate).collect(),
        Tail::None,
        true,
    )?;
    Ok(IsingEpsilon { kernel, constants: ising_constants(torus.n, torus.temperature), intervals, method })
}

fn partner(torus: &IsingTorus, i: usize, z: &[i64]) -> usize {
    let c: Vec<i64> = torus.coords(i).iter().zip(z).map(|(a, b)| a + b).collect();
    torus.site(&c)
}

fn exact_intervals(torus: &IsingTorus, offsets: &[Vec<i64>], free: &[usize], subjective: bool) -> Result<Vec<EpsInterval>> {
    let sys = ising_exact(torus)?;
    if subjective && torus.num_sites() > CLAMP_SCAN_CAP {
        return Err(Error::SizeCap { what: "clamp-scanned torus", size: torus.num_sites(), cap: CLAMP_SCAN_CAP });
    }
    offsets
        .par_iter()
        .map(|z| {
            let mut best: f64 = 0.0;
            if z.iter().any(|&x| x != 0) {
                for &i in free {
                    let j = partner(torus, i, z);
                    if j == i || !free.contains(&j) {
                        continue;
                    }
                    let value = if subjective {
                        let pool: Vec<usize> = free.iter().copied().filter(|&k| k != i && k != j).collect();
                        subjective_maxcorr(&sys, i, j, &pool)?
                    } else {
                        maxcorr_blocks(&sys, &[i], &[j])?
                    };
                    best = best.max(value);
                }
            }
            let estimate = best.clamp(0.0, 1.0);
            Ok(EpsInterval { offset: z.clone(), estimate, lower: estimate, upper: estimate })
        })
        .collect()
}

/// `{X:Y}` for a 2×2 table `[p(−,−), p(−,+), p(+,−), p(+,+)]`.
pub fn two_by_two_maxcorr(cells: [f64; 4]) -> f64 {
    let total: f64 = cells.iter().sum();
    let p: Vec<f64> = cells.iter().map(|c| c / total).collect();
    let (r0, r1) = (p[0] + p[1], p[2] + p[3]);
    let (c0, c1) = (p[0] + p[2], p[1] + p[3]);
    let denom = (r0 * r1 * c0 * c1).sqrt();
    if denom <= 0.0 {
        return 0.0;
    }
    ((p[0] * p[3] - p[1] * p[2]).abs() / denom).min(1.0)
}

fn wilson(p: f64, n: f64) -> (f64, f64) {
    let z2 = WILSON_Z * WILSON_Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Heat-bath sweeps with pair tables pooled over base sites; each recorded configuration
/// counts as one observation in the Wilson intervals, and the range is taken over the 16 corner tables.
fn mcmc_intervals(
    torus: &IsingTorus,
    offsets: &[Vec<i64>],
    free: &[usize],
    samples: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<Vec<EpsInterval>> {
    let sites = torus.num_sites();
    let work = (burn_in + samples * thin.max(1)) as u128 * sites as u128 + (samples * sites * offsets.len()) as u128;
    if samples == 0 || work > 4_000_000_000 {
        return Err(Error::Budget(format!("{samples} samples on {sites} sites exceed the MCMC budget")));
    }
    let mut r = rng(seed);
    let mut state = torus.initial_state(&mut r);
    let sweep = |state: &mut Vec<usize>, r: &mut ChaCha8Rng| {
        for _ in 0..sites {
            let s = r.random_range(0..sites);
            torus.resample(state, s, r);
        }
    };
    for _ in 0..burn_in {
        sweep(&mut state, &mut r);
    }
    let pairs: Vec<Vec<(usize, usize)>> = offsets
        .iter()
        .map(|z| {
            free.iter()
                .map(|&i| (i, partner(torus, i, z)))
                .filter(|&(i, j)| i != j && free.contains(&j) && z.iter().any(|&x| x != 0))
                .collect()
        })
        .collect();
    let mut counts = vec![[0.0f64; 4]; offsets.len()];
    for _ in 0..samples {
        for _ in 0..thin.max(1) {
            sweep(&mut state, &mut r);
        }
        for (o, list) in pairs.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let w = 1.0 / list.len() as f64;
            for &(i, j) in list {
                counts[o][2 * state[i] + state[j]] += w;
            }
        }
    }
    Ok(offsets
        .iter()
        .zip(&counts)
        .zip(&pairs)
        .map(|((z, c), list)| {
            if list.is_empty() {
                return EpsInterval { offset: z.clone(), estimate: 0.0, lower: 0.0, upper: 0.0 };
            }
            let n = samples as f64;
            let freq = c.map(|v| v / n);
            let estimate = two_by_two_maxcorr(freq);
            let bounds: Vec<(f64, f64)> = freq.iter().map(|&p| wilson(p, n)).collect();
            let (mut lower, mut upper) = (estimate, estimate);
            for mask in 0..16 {
                let corner: [f64; 4] = std::array::from_fn(|k| if mask >> k & 1 == 1 { bounds[k].1 } else { bounds[k].0 });
                let v = two_by_two_maxcorr(corner);
                lower = lower.min(v);
                upper = upper.max(v);
            }
            EpsInterval { offset: z.clone(), estimate, lower, upper }
        })
        .collect())
}

/// Exact sample of the periodic chain `P ∝ exp(Σ ω_k ω_{k+1} / T)` by sequential conditioning.
pub fn sample_ising_chain<R: Rng>(side: usize, temperature: f64, rng: &mut R) -> Vec<i8> {
    let theta = (1.0 / temperature).tanh();
    let coupling = (1.0 / temperature).exp();
    let first: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
    let mut out = Vec::with_capacity(side);
    out.push(first);
    for k in 0..side - 1 {
        let a = f64::from(out[k]);
        let remaining = (side - k - 1) as i32;
        let weight = |b: f64| {
            let bond = if a == b { coupling } else { 1.0 / coupling };
            bond * (1.0 + b * f64::from(first) * theta.powi(remaining))
        };
        let (up, down) = (weight(1.0), weight(-1.0));
        out.push(if rng.random::<f64>() * (up + down) < up { 1 } else { -1 });
    }
    out
}

/// `E[ω_0 ω_d]` on the periodic chain of the given side.
pub fn ising_chain_correlation(side: usize, temperature: f64, d: usize) -> f64 {
    let theta = (1.0 / temperature).tanh();
    (theta.powi(d as i32) + theta.powi((side - d) as i32)) / (1.0 + theta.powi(side as i32))
}

/// `Σ_d E[ω_0 ω_d] = (1+θ)/(1−θ)` on the infinite chain, `θ = tanh(1/T)`.
pub fn ising_chain_sigma2(temperature: f64) -> f64 {
    let theta = (1.0 / temperature).tanh();
    (1.0 + theta) / (1.0 - theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng;

    #[test]
    fn constants() {
        let c = ising_constants(2, 3.0);
        let x: f64 = 8.0 / 3.0;
        assert!((c.c0 - (x.cosh() + 1.0)).abs() < 1e-12);
        assert!(c.k0 < 1.0 && c.k0 > 0.0);
    }

    #[test]
    fn exact_chain_matches_transfer_matrix() {
        let t = IsingTorus::new(1, 12, 2.0).unwrap();
        let sys = ising_exact(&t).unwrap();
        for d in 1..6 {
            let table = sys.marginal(&[0, d]);
            let corr = table[0] + table[3] - table[1] - table[2];
            assert!((corr - ising_chain_correlation(12, 2.0, d)).abs() < 1e-12);
        }
    }

    #[test]
    fn high_temperature_decorrelates() {
        let t = IsingTorus::new(2, 3, 1e6).unwrap();
        let e = ising_epsilon(&t, EpsMethod::Exact { subjective: false }, 0).unwrap();
        assert!(e.kernel.values.iter().all(|&v| v < 1e-5));
    }

    #[test]
    fn clamped_contexts_stay_below_k0() {
        let t = IsingTorus::new(2, 3, 3.0).unwrap();
        let e = ising_epsilon(&t, EpsMethod::Exact { subjective: true }, 0).unwrap();
        let k0 = e.constants.k0;
        assert!(e.kernel.values.iter().all(|&v| v <= k0));
        let plain = ising_epsilon(&t, EpsMethod::Exact { subjective: false }, 0).unwrap();
        for (a, b) in plain.kernel.values.iter().zip(&e.kernel.values) {
            assert!(a <= &(b + 1e-12));
        }
    }

    #[test]
    fn chain_sampler_correlations() {
        let (side, t) = (32, 1.5);
        let mut r = rng(8);
        let reps = 20_000;
        let mut acc = [0.0; 4];
        for _ in 0..reps {
            let s = sample_ising_chain(side, t, &mut r);
            for d in 1..=4 {
                acc[d - 1] += f64::from(s[0] * s[d]);
            }
        }
        for d in 1..=4 {
            let est = acc[d - 1] / reps as f64;
            assert!((est - ising_chain_correlation(side, t, d)).abs() < 0.03, "d = {d}: {est}");
        }
    }

    #[test]
    fn mcmc_agrees_with_exact() {
        let t = IsingTorus::new(1, 8, 1.0).unwrap();
        let exact = ising_epsilon(&t, EpsMethod::Exact { subjective: false }, 0).unwrap();
        let mc = ising_epsilon(&t, EpsMethod::Mcmc { samples: 20_000, burn_in_sweeps: 100, thin_sweeps: 2 }, 5).unwrap();
        for (e, m) in exact.intervals.iter().zip(&mc.intervals) {
            assert!((e.estimate - m.estimate).abs() < 0.05, "{:?} {} {}", e.offset, e.estimate, m.estimate);
            assert!(m.lower <= m.estimate && m.estimate <= m.upper);
        }
    }

    #[test]
    fn two_by_two_formula() {
        assert!((two_by_two_maxcorr([0.4, 0.1, 0.1, 0.4]) - 0.6).abs() < 1e-15);
        assert_eq!(two_by_two_maxcorr([0.25; 4]), 0.0);
    }
}
