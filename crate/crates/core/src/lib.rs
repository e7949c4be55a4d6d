//! Bayesian optimization for cell-based neural architecture search, built
//! from interchangeable parts so each one can be ablated: architecture
//! encoding, surrogate model, acquisition function and acquisition
//! optimizer.

pub mod acq_optimizers;
pub mod acquisition;
pub mod analysis;
pub mod benchmarks;
pub mod bo_engine;
pub mod encodings;
pub mod error;
pub mod plots;
pub mod search_space;
pub mod seed;
pub mod suite;
pub mod surrogates;

pub use error::{Error, Result};
