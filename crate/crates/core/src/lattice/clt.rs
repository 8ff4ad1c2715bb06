use super::ising::{sample_ising_chain, spin, IsingTorus};
use super::quadratic::QuadraticModel;
use crate::error::{invalid, Error, Result};
use crate::glauber::HeatBath;
use crate::seeds::{child_rng, child_seed};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Points of the `λ ∈ [−3, 3]` grid for the characteristic-function distance.
pub const LAMBDA_POINTS: usize = 121;
pub const LAMBDA_MAX: f64 = 3.0;
/// Upper limit on `replicas × sites` per block size.
const SITE_BUDGET: u128 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CltModel {
    /// Independent spins `±1` with `P[+1] = p_up`.
    Independent { p_up: f64 },
    /// Ising torus template; its side is replaced per block size and its clamp must be empty.
    Ising { torus: IsingTorus, burn_in_sweeps: usize },
    Quadratic { model: QuadraticModel },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockShape {
    Cube,
    /// Sites within Euclidean distance `ℓ/2` of the cell centre.
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub block_sizes: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub shape: BlockShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub ell: usize,
    pub block_sites: usize,
    pub samples: usize,
    /// Sample variance of the normalized block sums.
    pub block_variance: f64,
    /// `Σ_{|d|_∞ ≤ ℓ/2} Ĉ(d)`, the covariance-sum estimate of the limiting variance.
    pub sigma_hat2: f64,
    /// `sup_λ |φ̂(λ) − exp(−σ̂²λ²/2)|` over the grid.
    pub cf_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
    pub decreasing: bool,
}

/// Cells per side of the torus, giving 16 blocks per replica in dimensions 1 and 2.
fn cells_per_side(n: usize) -> usize {
    match n {
        1 => 16,
        2 => 4,
        _ => 2,
    }
}

struct Replica {
    block_sums: Vec<f64>,
    total: f64,
    products: Vec<f64>,
}

/// Block sums of `f` over disjoint cells of replicated tori, compared with a centered Gaussian.
pub fn clt_experiment(model: &CltModel, f: &(dyn Fn(f64) -> f64 + Sync), cfg: &CltConfig) -> Result<CltReport> {
    if cfg.block_sizes.is_empty() || cfg.replicas < 2 {
        return Err(invalid("need at least one block size and two replicas"));
    }
    let n = match model {
        CltModel::Independent { p_up } => {
            if !(0.0..=1.0).contains(p_up) {
                return Err(invalid("p_up must lie in [0, 1]"));
            }
            1
        }
        CltModel::Ising { torus, .. } => {
            if !torus.clamp.is_empty() {
                return Err(invalid("CLT experiments need an unclamped torus"));
            }
            torus.n
        }
        CltModel::Quadratic { model } => model.dimension(),
    };
    let mut rows = Vec::with_capacity(cfg.block_sizes.len());
    for (row_idx, &ell) in cfg.block_sizes.iter().enumerate() {
        if ell < 2 {
            return Err(invalid("block sizes must be at least 2"));
        }
        let side = ell * cells_per_side(n);
        let sites = side.pow(n as u32);
        if cfg.replicas as u128 * sites as u128 > SITE_BUDGET {
            return Err(Error::Budget(format!("{} replicas of {sites} sites", cfg.replicas)));
        }
        rows.push(run_row(model, f, cfg, n, ell, side, child_seed(cfg.seed, row_idx as u64))?);
    }
    let decreasing = rows.windows(2).all(|w| w[1].cf_distance < w[0].cf_distance);
    Ok(CltReport { rows, decreasing })
}

fn run_row(
    model: &CltModel,
    f: &(dyn Fn(f64) -> f64 + Sync),
    cfg: &CltConfig,
    n: usize,
    ell: usize,
    side: usize,
    seed: u64,
) -> Result<CltRow> {
    let sites = side.pow(n as u32);
    let coords = |mut i: usize| {
        let mut c = vec![0usize; n];
        for k in (0..n).rev() {
            c[k] = i % side;
            i /= side;
        }
        c
    };
    let index = |c: &[i64]| c.iter().fold(0usize, |acc, &x| acc * side + x.rem_euclid(side as i64) as usize);
    let cells = cells_per_side(n);
    let centre = (ell as f64 - 1.0) / 2.0;
    let in_block = |offset: &[usize]| match cfg.shape {
        BlockShape::Cube => true,
        BlockShape::Disk => offset.iter().map(|&x| (x as f64 - centre).powi(2)).sum::<f64>() <= (ell as f64 / 2.0).powi(2),
    };
    let mut block_of = vec![usize::MAX; sites];
    let mut block_sites = 0;
    for (i, slot) in block_of.iter_mut().enumerate() {
        let c = coords(i);
        let offset: Vec<usize> = c.iter().map(|x| x % ell).collect();
        if in_block(&offset) {
            *slot = c.iter().fold(0, |acc, x| acc * cells + x / ell);
            if *slot == 0 {
                block_sites += 1;
            }
        }
    }
    let blocks = cells.pow(n as u32);
    let reach = (ell / 2) as i64;
    let lag_side = 2 * reach + 1;
    let lags: Vec<Vec<i64>> = (0..(lag_side as usize).pow(n as u32))
        .map(|mut idx| {
            let mut z = vec![0i64; n];
            for k in (0..n).rev() {
                z[k] = (idx % lag_side as usize) as i64 - reach;
                idx /= lag_side as usize;
            }
            z
        })
        .collect();
    let partners: Vec<Vec<usize>> = lags
        .iter()
        .map(|z| {
            (0..sites)
                .map(|i| {
                    let c: Vec<i64> = coords(i).iter().zip(z).map(|(&a, b)| a as i64 + b).collect();
                    index(&c)
                })
                .collect()
        })
        .collect();

    let chol = match model {
        CltModel::Quadratic { model } => Some(
            model
                .torus_precision(side)?
                .cholesky()
                .ok_or_else(|| invalid("torus precision is not positive definite"))?,
        ),
        _ => None,
    };
    let replicas: Vec<Replica> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(seed, r as u64);
            let field: Vec<f64> = match model {
                CltModel::Independent { p_up } => {
                    (0..sites).map(|_| if rng.random_bool(*p_up) { 1.0 } else { -1.0 }).collect()
                }
                CltModel::Ising { torus, .. } if n == 1 => {
                    sample_ising_chain(side, torus.temperature, &mut rng).into_iter().map(f64::from).collect()
                }
                CltModel::Ising { torus, burn_in_sweeps } => {
                    let t = IsingTorus { side, clamp: Vec::new(), ..torus.clone() };
                    let mut state = t.initial_state(&mut rng);
                    for _ in 0..burn_in_sweeps * sites {
                        let s = rng.random_range(0..sites);
                        t.resample(&mut state, s, &mut rng);
                    }
                    state.into_iter().map(spin).collect()
                }
                CltModel::Quadratic { .. } => {
                    let l = chol.as_ref().expect("factorized").l();
                    let z = DVector::from_fn(sites, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let x = l.transpose().solve_upper_triangular(&z).expect("nonsingular factor");
                    x.iter().copied().collect()
                }
            };
            let g: Vec<f64> = field.iter().map(|&v| f(v)).collect();
            let mut block_sums = vec![0.0; blocks];
            for (i, &b) in block_of.iter().enumerate() {
                if b != usize::MAX {
                    block_sums[b] += g[i];
                }
            }
            let products = partners.iter().map(|p| p.iter().enumerate().map(|(i, &j)| g[i] * g[j]).sum()).collect();
            Replica { block_sums, total: g.iter().sum(), products }
        })
        .collect();

    let count = (cfg.replicas * sites) as f64;
    let mean = replicas.iter().map(|r| r.total).sum::<f64>() / count;
    let mut sigma_hat2 = 0.0;
    for k in 0..lags.len() {
        sigma_hat2 += replicas.iter().map(|r| r.products[k]).sum::<f64>() / count - mean * mean;
    }
    let sigma_hat2 = sigma_hat2.max(0.0);
    let norm = (block_sites as f64).sqrt();
    let samples: Vec<f64> = replicas
        .iter()
        .flat_map(|r| r.block_sums.iter().map(|s| (s - block_sites as f64 * mean) / norm))
        .collect();
    let m = samples.len() as f64;
    let block_variance = samples.iter().map(|x| x * x).sum::<f64>() / m - (samples.iter().sum::<f64>() / m).powi(2);
    let cf_distance = (0..LAMBDA_POINTS)
        .map(|k| {
            let lambda = -LAMBDA_MAX + 2.0 * LAMBDA_MAX * k as f64 / (LAMBDA_POINTS - 1) as f64;
            let re = samples.iter().map(|x| (lambda * x).cos()).sum::<f64>() / m;
            let im = samples.iter().map(|x| (lambda * x).sin()).sum::<f64>() / m;
            let target = (-sigma_hat2 * lambda * lambda / 2.0).exp();
            ((re - target).powi(2) + im * im).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(CltRow { ell, block_sites, samples: samples.len(), block_variance, sigma_hat2, cf_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ising_chain_sigma2;

    #[test]
    fn independent_spins() {
        let cfg = CltConfig { block_sizes: vec![32], replicas: 1000, seed: 1, shape: BlockShape::Cube };
        let rep = clt_experiment(&CltModel::Independent { p_up: 0.5 }, &|x| x, &cfg).unwrap();
        let row = &rep.rows[0];
        assert_eq!(row.samples, 16_000);
        assert!(row.cf_distance < 0.02, "{}", row.cf_distance);
        assert!((row.sigma_hat2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn ising_chain_variance() {
        let torus = IsingTorus::new(1, 4, 3.0).unwrap();
        let cfg = CltConfig { block_sizes: vec![16], replicas: 2000, seed: 2, shape: BlockShape::Cube };
        let rep = clt_experiment(&CltModel::Ising { torus, burn_in_sweeps: 0 }, &|x| x, &cfg).unwrap();
        let target = ising_chain_sigma2(3.0);
        assert!((rep.rows[0].sigma_hat2 / target - 1.0).abs() < 0.05, "{}", rep.rows[0].sigma_hat2);
    }

    #[test]
    fn gaussian_blocks() {
        let model = QuadraticModel::nearest_neighbour(1, 0.3).unwrap();
        let cfg = CltConfig { block_sizes: vec![8], replicas: 1000, seed: 3, shape: BlockShape::Cube };
        let rep = clt_experiment(&CltModel::Quadratic { model }, &|x| x, &cfg).unwrap();
        let row = &rep.rows[0];
        assert!((row.sigma_hat2 - 1.0).abs() < 0.1, "{}", row.sigma_hat2);
        assert!(row.cf_distance < 0.03);
    }

    #[test]
    fn disk_blocks_in_two_dimensions() {
        let cfg = CltConfig { block_sizes: vec![6], replicas: 200, seed: 4, shape: BlockShape::Disk };
        let torus = IsingTorus::new(2, 4, 10.0).unwrap();
        let rep = clt_experiment(&CltModel::Ising { torus, burn_in_sweeps: 20 }, &|x| x, &cfg).unwrap();
        let row = &rep.rows[0];
        assert!(row.block_sites < 36 && row.block_sites > 20);
        assert_eq!(row.samples, 200 * 16);
    }
}
