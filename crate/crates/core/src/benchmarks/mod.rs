//! True-objective providers.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::search_space::Architecture;

pub mod bridge;
pub mod synthetic;

pub use bridge::{BridgeBenchmark, BridgeClient, BridgeInfo};
pub use synthetic::{SyntheticOracle, SyntheticOracleConfig, DEFAULT_BENCHMARK_SEED};

/// Something that scores architectures by validation accuracy. Must be
/// callable from concurrent replications.
pub trait Benchmark: Send + Sync {
    fn evaluate(&self, arch: &Architecture) -> Result<f64>;
    fn name(&self) -> String;
}

/// Counts every evaluation made through it, main or shadow.
pub struct BenchmarkHandle<'a> {
    inner: &'a dyn Benchmark,
    evaluations: AtomicU64,
}

impl<'a> BenchmarkHandle<'a> {
    pub fn new(inner: &'a dyn Benchmark) -> Self {
        Self {
            inner,
            evaluations: AtomicU64::new(0),
        }
    }

    pub fn evaluate(&self, arch: &Architecture) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(arch)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }
}
