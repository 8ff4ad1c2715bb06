//! Randomized soundness checks of the tensorization and event bounds against exact oracles.

use super::{nm_bound, simple_bound, zz_bound, EpsilonMatrix};
use crate::discrete::{event_extremes, maxcorr_blocks, subjective_maxcorr, FiniteSystem};
use crate::error::Result;
use crate::event::lambda_fn;
use crate::seeds::child_rng;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub instances: usize,
    pub seed: u64,
    pub max_vars_per_side: usize,
    pub max_alphabet: usize,
    /// Blocks are event-scanned only when both flattened alphabets are at most this size.
    pub event_block_cap: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { instances: 500, seed: 0, max_vars_per_side: 3, max_alphabet: 3, event_block_cap: 10 }
    }
}

/// Joint law with the first `nx` variables on the X side and the rest on the Y side.
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub system: FiniteSystem,
    pub nx: usize,
}

impl SweepInstance {
    pub fn xs(&self) -> Vec<usize> {
        (0..self.nx).collect()
    }

    pub fn ys(&self) -> Vec<usize> {
        (self.nx..self.system.num_vars()).collect()
    }
}

/// Random joint law whose concentration and sparsity vary between draws.
pub fn random_system<R: Rng>(rng: &mut R, sizes: &[usize]) -> FiniteSystem {
    let total: usize = sizes.iter().product();
    let sharpness = [1.0, 2.0, 4.0, 8.0][rng.random_range(0..4)];
    let sparsity = if rng.random_bool(0.3) { rng.random_range(0.1..0.6) } else { 0.0 };
    let mut w: Vec<f64> = (0..total)
        .map(|_| if rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>().powf(sharpness) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    FiniteSystem::with_sizes(sizes, w).expect("normalized random law")
}

pub fn random_instance<R: Rng>(rng: &mut R, max_vars: usize, max_alphabet: usize) -> SweepInstance {
    let nx = rng.random_range(1..=max_vars);
    let ny = rng.random_range(1..=max_vars);
    let sizes: Vec<usize> = (0..nx + ny).map(|_| rng.random_range(2..=max_alphabet)).collect();
    SweepInstance { system: random_system(rng, &sizes), nx }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub nx: usize,
    pub ny: usize,
    pub measured: f64,
    pub eps_hat: Vec<Vec<f64>>,
    pub nm_slack: f64,
    pub simple_slack: Option<f64>,
    pub zz_slack: f64,
    /// `maxcorr − event ratio` over every scanned pair of blocks.
    pub event_lower_slack: f64,
    /// `Λ(event ratio) − maxcorr` over every scanned pair of blocks.
    pub event_upper_slack: f64,
    pub event_checks: usize,
}

/// Exact measurements and bound slacks for one instance.
pub fn check_instance(inst: &SweepInstance, event_block_cap: usize) -> Result<InstanceOutcome> {
    let sys = &inst.system;
    let (xs, ys) = (inst.xs(), inst.ys());
    let all: Vec<usize> = (0..sys.num_vars()).collect();
    let mut eps = DMatrix::zeros(xs.len(), ys.len());
    for (r, &i) in xs.iter().enumerate() {
        for (c, &j) in ys.iter().enumerate() {
            let pool: Vec<usize> = all.iter().copied().filter(|&v| v != i && v != j).collect();
            eps[(r, c)] = subjective_maxcorr(sys, i, j, &pool)?;
        }
    }
    let measured = maxcorr_blocks(sys, &xs, &ys)?;
    let nm = nm_bound(&EpsilonMatrix::new(eps.clone())?).value;
    let simple_slack = if xs.len() == 1 || ys.len() == 1 {
        let v: Vec<f64> = eps.iter().copied().collect();
        Some(simple_bound(&v) - measured)
    } else {
        None
    };
    // X_r sits at site r and Y_c at site c; ε(z) is the worst entry with offset z.
    let span = xs.len() + ys.len();
    let mut profile = vec![0.0f64; 2 * span + 1];
    for r in 0..xs.len() {
        for c in 0..ys.len() {
            let z = c as isize - r as isize + span as isize;
            profile[z as usize] = profile[z as usize].max(eps[(r, c)]);
        }
    }
    let zz = zz_bound(&profile);

    let mut blocks: Vec<(Vec<usize>, Vec<usize>)> =
        xs.iter().flat_map(|&i| ys.iter().map(move |&j| (vec![i], vec![j]))).collect();
    if (xs.len() > 1 || ys.len() > 1) && sys.block_size(&xs) <= event_block_cap && sys.block_size(&ys) <= event_block_cap {
        blocks.push((xs.clone(), ys.clone()));
    }
    let (mut lower, mut upper) = (f64::INFINITY, f64::INFINITY);
    for (bx, by) in &blocks {
        let pair = sys.pair(bx, by)?;
        let rho = crate::discrete::maxcorr_pair(&pair).rho;
        let ratio = event_extremes(&pair)?.max_ratio;
        lower = lower.min(rho - ratio);
        upper = upper.min(lambda_fn(ratio) - rho);
    }
    Ok(InstanceOutcome {
        nx: xs.len(),
        ny: ys.len(),
        measured,
        eps_hat: eps.row_iter().map(|r| r.iter().copied().collect()).collect(),
        nm_slack: nm - measured,
        simple_slack,
        zz_slack: zz - measured,
        event_lower_slack: lower,
        event_upper_slack: upper,
        event_checks: blocks.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub instances: usize,
    pub min_nm_slack: f64,
    pub min_simple_slack: f64,
    pub simple_checks: usize,
    pub min_zz_slack: f64,
    pub min_event_lower_slack: f64,
    pub min_event_upper_slack: f64,
    pub event_checks: usize,
}

impl SweepReport {
    pub fn min_tensor_slack(&self) -> f64 {
        self.min_nm_slack.min(self.min_simple_slack).min(self.min_zz_slack)
    }

    pub fn min_event_slack(&self) -> f64 {
        self.min_event_lower_slack.min(self.min_event_upper_slack)
    }
}

/// Runs the sweep in parallel; instance `i` always uses the child stream `i` of the seed.
pub fn soundness_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let outcomes: Vec<InstanceOutcome> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(cfg.seed, i as u64);
            let inst = random_instance(&mut rng, cfg.max_vars_per_side, cfg.max_alphabet);
            check_instance(&inst, cfg.event_block_cap)
        })
        .collect::<Result<_>>()?;
    let min = |f: &dyn Fn(&InstanceOutcome) -> f64| outcomes.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(SweepReport {
        instances: outcomes.len(),
        min_nm_slack: min(&|o| o.nm_slack),
        min_simple_slack: min(&|o| o.simple_slack.unwrap_or(f64::INFINITY)),
        simple_checks: outcomes.iter().filter(|o| o.simple_slack.is_some()).count(),
        min_zz_slack: min(&|o| o.zz_slack),
        min_event_lower_slack: min(&|o| o.event_lower_slack),
        min_event_upper_slack: min(&|o| o.event_upper_slack),
        event_checks: outcomes.iter().map(|o| o.event_checks).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweep_is_sound() {
        let r = soundness_sweep(&SweepConfig { instances: 20, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(r.instances, 20);
        assert!(r.min_tensor_slack() >= -1e-9, "{r:?}");
        assert!(r.min_event_slack() >= -1e-9, "{r:?}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = SweepConfig { instances: 6, seed: 11, ..Default::default() };
        assert_eq!(soundness_sweep(&cfg).unwrap(), soundness_sweep(&cfg).unwrap());
    }
}
