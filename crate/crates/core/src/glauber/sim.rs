//! Continuous-time heat-bath dynamics: every site carries a rate-one clock and resamples
//! from its conditional law given the other sites when it rings.

use crate::discrete::FiniteSystem;
use crate::error::{invalid, Result};
use crate::seeds::rng;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A model that can be simulated by single-site heat-bath updates.
pub trait HeatBath: Sync {
    fn num_sites(&self) -> usize;
    /// Starting configuration; exact stationary samples where available.
    fn initial_state<R: Rng>(&self, rng: &mut R) -> Vec<usize>;
    /// Resamples `site` from its conditional law and returns the new value.
    fn resample<R: Rng>(&self, state: &mut [usize], site: usize, rng: &mut R) -> usize;
}

fn draw<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

impl HeatBath for FiniteSystem {
    fn num_sites(&self) -> usize {
        self.num_vars()
    }

    fn initial_state<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        self.decode(draw(&self.joint, rng))
    }

    fn resample<R: Rng>(&self, state: &mut [usize], site: usize, rng: &mut R) -> usize {
        let size = self.variables[site].size;
        let weights: Vec<f64> = (0..size)
            .map(|v| {
                state[site] = v;
                self.joint[self.encode(state)]
            })
            .collect();
        let v = draw(&weights, rng);
        state[site] = v;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub events: usize,
    pub seed: u64,
    /// Spacing of the observable samples used for the autocorrelation.
    pub sample_dt: f64,
    /// Events discarded before recording starts.
    pub burn_in: usize,
    pub record_trajectory: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { events: 1_000_000, seed: 0, sample_dt: 0.05, burn_in: 0, record_trajectory: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub site: usize,
    pub new_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationFit {
    pub rate: f64,
    /// Lag at which the autocorrelation first drops to `1/e`.
    pub tau: f64,
    pub fitted_points: usize,
    pub autocorrelation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub events: usize,
    pub horizon: f64,
    pub fit: RelaxationFit,
    pub trajectory: Vec<Transition>,
}

/// Gillespie simulation with total rate equal to the number of sites.
pub fn glauber_simulate<M, F>(model: &M, observable: F, cfg: &SimConfig) -> Result<SimReport>
where
    M: HeatBath,
    F: Fn(&[usize]) -> f64,
{
    if cfg.events == 0 || !(cfg.sample_dt > 0.0) {
        return Err(invalid("need a positive event count and sample spacing"));
    }
    let n = model.num_sites();
    let mut r = rng(cfg.seed);
    let clock = Exp::new(n as f64).expect("positive rate");
    let mut state = model.initial_state(&mut r);
    for _ in 0..cfg.burn_in {
        let site = r.random_range(0..n);
        model.resample(&mut state, site, &mut r);
    }
    let mut samples = Vec::with_capacity((cfg.events as f64 / (n as f64 * cfg.sample_dt)) as usize + 1);
    let mut trajectory = Vec::new();
    let mut time = 0.0;
    let mut next_sample = 0.0;
    let mut value = observable(&state);
    for _ in 0..cfg.events {
        time += clock.sample(&mut r);
        while next_sample < time {
            samples.push(value);
            next_sample += cfg.sample_dt;
        }
        let site = r.random_range(0..n);
        let new_state = model.resample(&mut state, site, &mut r);
        value = observable(&state);
        if cfg.record_trajectory {
            trajectory.push(Transition { time, site, new_state });
        }
    }
    let fit = fit_relaxation(&samples, cfg.sample_dt)?;
    Ok(SimReport { events: cfg.events, horizon: time, fit, trajectory })
}

/// Exponential fit of the normalized autocorrelation on lags in `[0.1, 3]` relaxation times.
pub fn fit_relaxation(samples: &[f64], dt: f64) -> Result<RelaxationFit> {
    let n = samples.len();
    if n < 100 {
        return Err(invalid("too few samples for an autocorrelation fit"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let var = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return Err(invalid("observable is constant along the trajectory"));
    }
    let lag_cap = (n / 4).min(200_000);
    let corr = |k: usize| centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum::<f64>() / ((n - k) as f64 * var);
    let mut acf = vec![1.0];
    let stop = (-3.5f64).exp();
    'outer: while acf.len() < lag_cap {
        let start = acf.len();
        let batch: Vec<f64> = (start..(start + 64).min(lag_cap)).into_par_iter().map(corr).collect();
        for c in batch {
            acf.push(c);
            if c < stop {
                break 'outer;
            }
        }
    }
    let cross = acf.iter().position(|&c| c <= (-1f64).exp()).ok_or_else(|| invalid("autocorrelation never drops below 1/e"))?;
    let (c0, c1) = (acf[cross - 1], acf[cross]);
    let tau = dt * ((cross - 1) as f64 + (c0 - (-1f64).exp()) / (c0 - c1));
    let (lo, hi) = (0.1 * tau, 3.0 * tau);
    let pts: Vec<(f64, f64)> = acf
        .iter()
        .enumerate()
        .map(|(k, &c)| (k as f64 * dt, c))
        .filter(|&(t, c)| t >= lo && t <= hi && c > 0.0)
        .map(|(t, c)| (t, c.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(invalid("fit window holds fewer than three lags; reduce the sample spacing"));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    Ok(RelaxationFit { rate: -sxy / sxx, tau, fitted_points: pts.len(), autocorrelation: acf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glauber::exact_gap;

    #[test]
    fn independent_spin_relaxes_at_unit_rate() {
        let sys = FiniteSystem::independent(&[vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        let cfg = SimConfig { events: 200_000, seed: 4, ..Default::default() };
        let r = glauber_simulate(&sys, |s| s[0] as f64, &cfg).unwrap();
        assert!((r.fit.rate - 1.0).abs() < 0.08, "{}", r.fit.rate);
    }

    #[test]
    fn deterministic_per_seed() {
        let sys = FiniteSystem::independent(&[vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        let cfg = SimConfig { events: 5_000, seed: 9, record_trajectory: true, ..Default::default() };
        let a = glauber_simulate(&sys, |s| s[0] as f64, &cfg).unwrap();
        let b = glauber_simulate(&sys, |s| s[0] as f64, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trajectory.len(), 5_000);
    }

    #[test]
    fn two_spin_rate_matches_gap() {
        let sys = FiniteSystem::with_sizes(&[2, 2], vec![0.35, 0.15, 0.15, 0.35]).unwrap();
        let g = exact_gap(&sys).unwrap();
        let f = g.eigenfunction.clone();
        let cfg = SimConfig { events: 300_000, seed: 2, ..Default::default() };
        let r = glauber_simulate(&sys, |s| f[sys.encode(s)], &cfg).unwrap();
        assert!((r.fit.rate / g.gap - 1.0).abs() < 0.1, "{} vs {}", r.fit.rate, g.gap);
    }
}
