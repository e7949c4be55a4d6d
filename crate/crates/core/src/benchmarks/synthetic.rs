//! Deterministic synthetic stand-in for a tabular NAS benchmark.
//!
//! The raw score of an architecture is
//!
//! ```text
//! raw = λ_loc · Σ_edges u[cell][node][op]
//!     + λ_int · Σ_(consecutive edge slots) w[op_a][op_b]
//!     +         Σ_nodes b[cell][node][input pair]
//! ```
//!
//! where edge slots are taken in canonical order within a cell and the tables
//! `u`, `w`, `b` hold uniform values drawn from a stream seeded by
//! `benchmark_seed`. The raw score is mapped affinely from its attainable
//! bounds onto `[accuracy_floor, accuracy_ceiling]`.
//!
//! One edit touches one `u` term and at most two `w` terms (an operation
//! change) or one `b` term (an input-pair change), which gives the published
//! single-edit bound.

use rand::Rng as _;

use super::Benchmark;
use crate::error::{Error, Result};
use crate::search_space::{pair_index, Architecture, SearchSpaceSpec};
use crate::seed::derive_rng;

/// Benchmark seed used by default and pinned by the test suite.
pub const DEFAULT_BENCHMARK_SEED: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOracleConfig {
    pub benchmark_seed: u64,
    pub accuracy_floor: f64,
    pub accuracy_ceiling: f64,
    pub locality_weight: f64,
    pub interaction_weight: f64,
}

impl Default for SyntheticOracleConfig {
    fn default() -> Self {
        Self {
            benchmark_seed: DEFAULT_BENCHMARK_SEED,
            accuracy_floor: 0.88,
            accuracy_ceiling: 0.95,
            locality_weight: 0.6,
            interaction_weight: 0.3,
        }
    }
}

impl SyntheticOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy_floor < self.accuracy_ceiling) {
            return Err(Error::Config("accuracy floor must be below the ceiling".into()));
        }
        if !(self.locality_weight >= 0.0 && self.interaction_weight >= 0.0) {
            return Err(Error::Config("oracle weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    spec: SearchSpaceSpec,
    cfg: SyntheticOracleConfig,
    /// `[cell][node][op]`
    unary: Vec<Vec<Vec<f64>>>,
    /// `[op_a][op_b]`
    pairwise: Vec<Vec<f64>>,
    /// `[cell][node][pair index]`
    wiring: Vec<Vec<Vec<f64>>>,
    raw_min: f64,
    raw_max: f64,
    single_edit_bound: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

impl SyntheticOracle {
    pub fn new(spec: &SearchSpaceSpec, cfg: SyntheticOracleConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.benchmark_seed;
        let n_ops = spec.num_operations();
        let nodes = spec.num_intermediate_nodes();

        let mut rng = derive_rng(seed, "oracle/unary", 0);
        let unary: Vec<Vec<Vec<f64>>> = (0..spec.num_cells())
            .map(|_| {
                (0..nodes)
                    .map(|_| (0..n_ops).map(|_| rng.random::<f64>()).collect())
                    .collect()
            })
            .collect();
        let mut rng = derive_rng(seed, "oracle/pairwise", 0);
        let pairwise: Vec<Vec<f64>> = (0..n_ops)
            .map(|_| (0..n_ops).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut rng = derive_rng(seed, "oracle/wiring", 0);
        let wiring: Vec<Vec<Vec<f64>>> = (0..spec.num_cells())
            .map(|_| {
                (0..nodes)
                    .map(|node| (0..spec.num_pairs(node)).map(|_| rng.random::<f64>()).collect())
                    .collect()
            })
            .collect();

        let (w_lo, w_hi) = spread(pairwise.iter().flatten().copied());
        let edges_per_cell = 2 * nodes;
        let mut raw_min = 0.0;
        let mut raw_max = 0.0;
        let mut du_max: f64 = 0.0;
        let mut db_max: f64 = 0.0;
        for cell in 0..spec.num_cells() {
            for node in 0..nodes {
                let (lo, hi) = spread(unary[cell][node].iter().copied());
                raw_min += 2.0 * cfg.locality_weight * lo;
                raw_max += 2.0 * cfg.locality_weight * hi;
                du_max = du_max.max(hi - lo);
                let (lo, hi) = spread(wiring[cell][node].iter().copied());
                raw_min += lo;
                raw_max += hi;
                db_max = db_max.max(hi - lo);
            }
            raw_min += (edges_per_cell - 1) as f64 * cfg.interaction_weight * w_lo;
            raw_max += (edges_per_cell - 1) as f64 * cfg.interaction_weight * w_hi;
        }
        let scale = (cfg.accuracy_ceiling - cfg.accuracy_floor) / (raw_max - raw_min).max(f64::MIN_POSITIVE);
        let single_edit_bound = scale
            * (cfg.locality_weight * du_max + 2.0 * cfg.interaction_weight * (w_hi - w_lo) + db_max);
        Ok(Self {
            spec: spec.clone(),
            cfg,
            unary,
            pairwise,
            wiring,
            raw_min,
            raw_max,
            single_edit_bound,
        })
    }

    pub fn spec(&self) -> &SearchSpaceSpec {
        &self.spec
    }

    pub fn config(&self) -> &SyntheticOracleConfig {
        &self.cfg
    }

    /// Largest change in accuracy any single edit can cause.
    pub fn single_edit_bound(&self) -> f64 {
        self.single_edit_bound
    }

    pub fn raw_score(&self, arch: &Architecture) -> f64 {
        let nodes = self.spec.num_intermediate_nodes();
        let mut raw = 0.0;
        for cell in 0..self.spec.num_cells() {
            let mut prev_op: Option<usize> = None;
            for node in 0..nodes {
                let gene = arch.gene(&self.spec, cell, node);
                raw += self.wiring[cell][node][pair_index(gene.inputs[0], gene.inputs[1])];
                for &op in &gene.ops {
                    raw += self.cfg.locality_weight * self.unary[cell][node][op];
                    if let Some(p) = prev_op {
                        raw += self.cfg.interaction_weight * self.pairwise[p][op];
                    }
                    prev_op = Some(op);
                }
            }
        }
        raw
    }

    pub fn accuracy(&self, arch: &Architecture) -> f64 {
        let t = ((self.raw_score(arch) - self.raw_min) / (self.raw_max - self.raw_min)).clamp(0.0, 1.0);
        self.cfg.accuracy_floor + t * (self.cfg.accuracy_ceiling - self.cfg.accuracy_floor)
    }
}

impl Benchmark for SyntheticOracle {
    fn evaluate(&self, arch: &Architecture) -> Result<f64> {
        arch.validate(&self.spec)?;
        Ok(self.accuracy(arch))
    }

    fn name(&self) -> String {
        format!("synthetic(seed={})", self.cfg.benchmark_seed)
    }
}

pub fn synth_evaluate(oracle: &SyntheticOracle, arch: &Architecture) -> Result<f64> {
    oracle.evaluate(arch)
}
