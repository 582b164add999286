//! Well-spreadness of subspaces and the oblivious-regression lower-bound toolkit.
//!
//! Modules, bottom up: [`numerics`] (dense and exact linear algebra),
//! [`spreadness`] (exact and heuristic spreadness checks), [`certify`]
//! (degree-4 spectral certificates), [`noise`] (symmetric geometric and noisy
//! Bernoulli-Rademacher laws), [`instances`] (generators), [`fano`] (minimax
//! lower bounds), [`lowdeg`] (low-degree likelihood ratio), [`regression`]
//! (simulation harness) and [`spark`].

pub mod certify;
pub mod error;
pub mod fano;
pub mod instances;
pub mod lowdeg;
pub mod noise;
pub mod numerics;
pub mod regression;
pub mod rng;
pub mod spark;
pub mod spreadness;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, RationalMatrix, SpectrumSummary};
pub use rng::SeedStream;
