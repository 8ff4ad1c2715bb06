//! Maximal correlation, tensorization bounds and spectral-gap estimates.
//!
//! The crate is organised around a handful of data types:
//! [`FinitePair`] and [`FiniteSystem`] for exact discrete laws,
//! [`GaussianSystem`] for centered Gaussian vectors,
//! [`EpsilonMatrix`] and [`LatticeKernel`] for pairwise decorrelation data,
//! [`ChogosovModel`] for the extremal event-criterion law, and
//! [`ToeplitzKernel`] for convolution-algebra computations on `Z^n`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod conv;
pub mod discrete;
pub mod error;
pub mod event;
pub mod gaussian;
pub mod glauber;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod seeds;
pub mod tensor;
pub mod verify;

pub use conv::ToeplitzKernel;
pub use discrete::{FinitePair, FiniteSystem, PairCorrelationReport, Variable};
pub use error::{Error, Result};
pub use event::{ChogosovModel, NuModel};
pub use gaussian::{GaussianSystem, OuChainParams};
pub use glauber::GapBoundReport;
pub use lattice::{IsingTorus, QuadraticModel};
pub use tensor::{EpsilonMatrix, LatticeKernel, Norm, Tail};
