//! Shared fixtures for the criterion benchmarks.

use rhomix_core::seeds::rng;
use rhomix_core::tensor::sweep::random_system;
use rhomix_core::{FinitePair, FiniteSystem, ToeplitzKernel};

/// Random joint law on an `n × m` alphabet.
pub fn random_pair(n: usize, m: usize, seed: u64) -> FinitePair {
    random_system(&mut rng(seed), &[n, m]).pair(&[0], &[1]).expect("two variables")
}

/// Random law on `spins` binary variables.
pub fn random_spins(spins: usize, seed: u64) -> FiniteSystem {
    random_system(&mut rng(seed), &vec![2; spins])
}

/// Nearest-neighbour kernel `a(±e_k) = total / 2n` on `Z^n`.
pub fn nearest_neighbour_kernel(n: usize, total: f64) -> ToeplitzKernel {
    ToeplitzKernel::from_fn(n, 1, |z| {
        let l1: i64 = z.iter().map(|x| x.abs()).sum();
        if l1 == 1 { total / (2 * n) as f64 } else { 0.0 }
    })
    .expect("valid kernel")
}
