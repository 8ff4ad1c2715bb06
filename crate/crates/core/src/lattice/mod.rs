//! Lattice models: the quadratic (Gaussian) model, the Ising torus, block CLT experiments and the phase product check.

mod clt;
mod ising;
mod phase;
mod quadratic;

pub use clt::{clt_experiment, BlockShape, CltConfig, CltModel, CltReport, CltRow, LAMBDA_MAX, LAMBDA_POINTS};
pub use ising::{
    ising_chain_correlation, ising_chain_sigma2, ising_constants, ising_epsilon, ising_exact, sample_ising_chain,
    spin, two_by_two_maxcorr, EpsInterval, EpsMethod, IsingConstants, IsingEpsilon, IsingTorus, CLAMP_SCAN_CAP,
    EXACT_SITE_CAP,
};
pub use phase::{phase_product_bound, PhaseCheck};
pub use quadratic::{
    quadratic_covariance, quadratic_rho_report, QuadraticCovariance, QuadraticModel, QuadraticRhoReport,
    REPORT_DISTANCES,
};
