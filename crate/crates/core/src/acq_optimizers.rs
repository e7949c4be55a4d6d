//! Inner-loop optimizers: each generates a candidate pool, scores it with the
//! acquisition function and returns the first maximizer.

use crate::acquisition::{AcquisitionContext, AcquisitionKind};
use crate::encodings::Encoder;
use crate::error::{Error, Result};
use crate::search_space::{mutate, sample_uniform, Architecture, SearchSpaceSpec};
use crate::seed::Rng;
use crate::surrogates::{PosteriorPrediction, Surrogate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    /// Single-edit mutations of the incumbent.
    Mut,
    /// Uniform random samples.
    Rs,
    /// Uniform random samples with a large pool.
    RsPlus,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Mut, OptimizerKind::Rs, OptimizerKind::RsPlus];

    pub fn label(self) -> &'static str {
        match self {
            OptimizerKind::Mut => "mut",
            OptimizerKind::Rs => "rs",
            OptimizerKind::RsPlus => "rs_plus",
        }
    }

    pub fn default_candidates(self) -> usize {
        match self {
            OptimizerKind::Mut => 100,
            OptimizerKind::Rs => 1000,
            OptimizerKind::RsPlus => 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProposalBudget {
    pub kind: OptimizerKind,
    pub n_candidates: usize,
}

impl ProposalBudget {
    pub fn new(kind: OptimizerKind, n_candidates: usize) -> Result<Self> {
        if n_candidates == 0 {
            return Err(Error::Config("a proposal needs at least one candidate".into()));
        }
        Ok(Self { kind, n_candidates })
    }

    pub fn default_for(kind: OptimizerKind) -> Self {
        Self {
            kind,
            n_candidates: kind.default_candidates(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub architecture: Architecture,
    pub acquisition_value: f64,
    pub prediction: PosteriorPrediction,
    pub candidate_pool_size: usize,
    pub optimizer_kind: OptimizerKind,
}

/// Everything needed to turn an architecture into an acquisition value.
#[derive(Clone, Copy)]
pub struct Scorer<'a> {
    pub surrogate: &'a dyn Surrogate,
    pub encoder: &'a Encoder,
    pub acquisition: AcquisitionKind,
}

impl Scorer<'_> {
    /// Acquisition values in pool order. ITS draws are consumed in that order.
    pub fn score(
        &self,
        pool: &[Architecture],
        ctx: &mut AcquisitionContext,
    ) -> Result<Vec<(f64, PosteriorPrediction)>> {
        let xs = pool
            .iter()
            .map(|a| self.encoder.encode(a))
            .collect::<Result<Vec<_>>>()?;
        let preds = self.surrogate.predict_batch(&xs)?;
        Ok(preds
            .into_iter()
            .map(|p| (self.acquisition.evaluate(&p, ctx), p))
            .collect())
    }
}

/// Index of the largest value; the earliest index wins ties.
pub fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn select(
    pool: Vec<Architecture>,
    scorer: &Scorer<'_>,
    ctx: &mut AcquisitionContext,
    kind: OptimizerKind,
) -> Result<Proposal> {
    let scored = scorer.score(&pool, ctx)?;
    let values: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let best = first_argmax(&values).ok_or_else(|| Error::Config("empty candidate pool".into()))?;
    let candidate_pool_size = pool.len();
    let (acquisition_value, prediction) = scored[best];
    Ok(Proposal {
        architecture: pool.into_iter().nth(best).expect("index in pool"),
        acquisition_value,
        prediction,
        candidate_pool_size,
        optimizer_kind: kind,
    })
}

pub fn mutation_pool(
    spec: &SearchSpaceSpec,
    incumbent: &Architecture,
    n: usize,
    rng: &mut Rng,
) -> Result<Vec<Architecture>> {
    (0..n).map(|_| mutate(spec, incumbent, rng, 1)).collect()
}

pub fn uniform_pool(spec: &SearchSpaceSpec, n: usize, rng: &mut Rng) -> Vec<Architecture> {
    (0..n).map(|_| sample_uniform(spec, rng)).collect()
}

pub fn propose_mut(
    spec: &SearchSpaceSpec,
    incumbent: &Architecture,
    scorer: &Scorer<'_>,
    ctx: &mut AcquisitionContext,
    budget: ProposalBudget,
    rng: &mut Rng,
) -> Result<Proposal> {
    if budget.kind != OptimizerKind::Mut {
        return Err(Error::Config("propose_mut needs a mutation budget".into()));
    }
    let pool = mutation_pool(spec, incumbent, budget.n_candidates, rng)?;
    select(pool, scorer, ctx, OptimizerKind::Mut)
}

pub fn propose_rs(
    spec: &SearchSpaceSpec,
    scorer: &Scorer<'_>,
    ctx: &mut AcquisitionContext,
    budget: ProposalBudget,
    rng: &mut Rng,
) -> Result<Proposal> {
    if budget.kind == OptimizerKind::Mut {
        return Err(Error::Config("propose_rs needs a random-search budget".into()));
    }
    let pool = uniform_pool(spec, budget.n_candidates, rng);
    select(pool, scorer, ctx, budget.kind)
}

/// Dispatches on `budget.kind`.
pub fn propose(
    spec: &SearchSpaceSpec,
    incumbent: &Architecture,
    scorer: &Scorer<'_>,
    ctx: &mut AcquisitionContext,
    budget: ProposalBudget,
    rng: &mut Rng,
) -> Result<Proposal> {
    match budget.kind {
        OptimizerKind::Mut => propose_mut(spec, incumbent, scorer, ctx, budget, rng),
        OptimizerKind::Rs | OptimizerKind::RsPlus => propose_rs(spec, scorer, ctx, budget, rng),
    }
}

/// Proposals of the non-driving optimizers for one round, each with its own
/// candidate and acquisition streams so the driving run is unaffected.
pub fn shadow_propose(
    spec: &SearchSpaceSpec,
    incumbent: &Architecture,
    scorer: &Scorer<'_>,
    y_max: f64,
    budgets: &[ProposalBudget],
    streams: &mut [(Rng, Rng)],
) -> Result<Vec<Proposal>> {
    budgets
        .iter()
        .zip(streams.iter_mut())
        .map(|(budget, (candidates, acq))| {
            let mut ctx = AcquisitionContext::new(y_max, acq.clone());
            let p = propose(spec, incumbent, scorer, &mut ctx, *budget, candidates);
            *acq = ctx.rng;
            p
        })
        .collect()
}
