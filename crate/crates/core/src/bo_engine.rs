//! Outer loops: Bayesian optimization with pluggable parts, and the local
//! search and random search baselines.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use crate::acq_optimizers::{propose, shadow_propose, OptimizerKind, ProposalBudget, Scorer};
use crate::acquisition::{AcquisitionContext, AcquisitionKind};
use crate::benchmarks::Benchmark;
use crate::encodings::{build_path_table, Encoder, EncodingKind, TabularSchema, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::search_space::{neighbors, sample_uniform, Architecture, SearchSpaceSpec};
use crate::seed::{derive_rng, Rng};
use crate::surrogates::{fit_surrogate, Surrogate, SurrogateConfig, SurrogateKind, TrainingSet};

#[derive(Debug, Clone, PartialEq)]
pub struct BOConfig {
    pub encoding: EncodingKind,
    pub surrogate: SurrogateConfig,
    pub acquisition: AcquisitionKind,
    pub optimizer: ProposalBudget,
    /// Refit the surrogate every `k` rounds.
    pub refit_every_k: usize,
    pub init_design_size: usize,
    pub iterations: usize,
    /// Path-encoding length.
    pub truncation: usize,
}

impl BOConfig {
    /// Defaults for everything but the four ablated components.
    pub fn new(
        encoding: EncodingKind,
        surrogate: SurrogateKind,
        acquisition: AcquisitionKind,
        optimizer: OptimizerKind,
    ) -> Self {
        Self {
            encoding,
            surrogate: SurrogateConfig::default_for(surrogate),
            acquisition,
            optimizer: ProposalBudget::default_for(optimizer),
            refit_every_k: 1,
            init_design_size: 10,
            iterations: 100,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.surrogate.kind() == SurrogateKind::NnEnsemble && self.encoding != EncodingKind::Path {
            return Err(Error::PathEncodingRequired);
        }
        if self.refit_every_k == 0 {
            return Err(Error::Config("refit_every_k must be at least 1".into()));
        }
        if self.optimizer.n_candidates == 0 {
            return Err(Error::Config("a proposal needs at least one candidate".into()));
        }
        let min_init = match self.surrogate.kind() {
            SurrogateKind::NnEnsemble => 1,
            SurrogateKind::RandomForest => 2,
        };
        if self.init_design_size < min_init {
            return Err(Error::Config(format!(
                "init_design_size must be at least {min_init} for this surrogate"
            )));
        }
        if self.encoding == EncodingKind::Path && self.truncation == 0 {
            return Err(Error::Config("truncation must be at least 1".into()));
        }
        Ok(())
    }

    /// `encoding+surrogate+acquisition+optimizer`, e.g. `path+nn+its+mut`.
    pub fn label(&self) -> String {
        format!(
            "{}+{}+{}+{}",
            self.encoding.label(),
            self.surrogate.kind().label(),
            self.acquisition.label(),
            self.optimizer.kind.label()
        )
    }

    pub fn total_evaluations(&self) -> usize {
        self.init_design_size + self.iterations
    }
}

/// Builds the encoder for `kind`. Path probabilities are estimated from a
/// stream derived from `seed`.
pub fn make_encoder(kind: EncodingKind, spec: &SearchSpaceSpec, truncation: usize, seed: u64) -> Result<Encoder> {
    Ok(match kind {
        EncodingKind::Path => Encoder::Path(build_path_table(spec, truncation, &mut derive_rng(seed, "paths", 0))?),
        EncodingKind::Tabular => Encoder::Tabular(TabularSchema::new(spec)),
    })
}

pub fn initial_design(spec: &SearchSpaceSpec, size: usize, rng: &mut Rng) -> Vec<Architecture> {
    (0..size).map(|_| sample_uniform(spec, rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// 1-based evaluation index.
    pub iteration: usize,
    pub architecture: Architecture,
    pub true_accuracy: f64,
    /// Best accuracy up to and including this trial.
    pub incumbent_accuracy: f64,
    /// Acquisition value of a BO proposal; `None` for design points and
    /// baseline evaluations.
    pub acquisition_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub message: String,
    pub bridge: bool,
}

#[derive(Debug, Clone)]
pub struct History {
    pub method: String,
    pub seed: u64,
    pub records: Vec<TrialRecord>,
    /// Wall-clock time per evaluation, including any model work before it.
    pub wall_clock: Vec<Duration>,
    /// Rounds at which the surrogate was refitted.
    pub refit_rounds: Vec<usize>,
    /// Local optima at which local search restarted.
    pub local_optima: Vec<Architecture>,
    /// Set when the benchmark failed; the records are then a prefix.
    pub failure: Option<RunFailure>,
}

impl History {
    pub fn new(method: impl Into<String>, seed: u64) -> Self {
        Self {
            method: method.into(),
            seed,
            records: Vec::new(),
            wall_clock: Vec::new(),
            refit_rounds: Vec::new(),
            local_optima: Vec::new(),
            failure: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }

    pub fn incumbent_accuracy(&self) -> Option<f64> {
        self.records.last().map(|r| r.incumbent_accuracy)
    }

    /// First evaluated architecture with the best accuracy.
    pub fn incumbent(&self) -> Option<&TrialRecord> {
        let mut best: Option<&TrialRecord> = None;
        for r in &self.records {
            if best.is_none_or(|b| r.true_accuracy > b.true_accuracy) {
                best = Some(r);
            }
        }
        best
    }

    fn push(&mut self, architecture: Architecture, accuracy: f64, acquisition_value: Option<f64>, started: Instant) {
        let incumbent_accuracy = self.incumbent_accuracy().map_or(accuracy, |b| b.max(accuracy));
        self.records.push(TrialRecord {
            iteration: self.records.len() + 1,
            architecture,
            true_accuracy: accuracy,
            incumbent_accuracy,
            acquisition_value,
        });
        self.wall_clock.push(started.elapsed());
    }

    fn fail(&mut self, err: &Error) {
        self.failure = Some(RunFailure {
            message: err.to_string(),
            bridge: err.is_bridge(),
        });
    }
}

/// One optimizer's proposal in a round of an instrumented run.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowRecord {
    /// 1-based BO round.
    pub iteration: usize,
    pub optimizer: OptimizerKind,
    pub ei: f64,
    pub true_accuracy: f64,
    /// Incumbent accuracy before the round.
    pub incumbent_accuracy: f64,
}

impl ShadowRecord {
    pub fn improvement(&self) -> f64 {
        self.true_accuracy - self.incumbent_accuracy
    }

    pub fn improved(&self) -> bool {
        self.improvement() > 0.0
    }
}

/// Precomputed inputs that runs within a replication may share.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunInputs<'a> {
    pub encoder: Option<&'a Encoder>,
    pub initial_design: Option<&'a [Architecture]>,
}

pub fn run_bo(cfg: &BOConfig, benchmark: &dyn Benchmark, spec: &SearchSpaceSpec, seed: u64) -> Result<History> {
    run_bo_with(cfg, benchmark, spec, seed, RunInputs::default())
}

pub fn run_bo_with(
    cfg: &BOConfig,
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    seed: u64,
    inputs: RunInputs<'_>,
) -> Result<History> {
    Ok(bo_loop(cfg, benchmark, spec, seed, inputs, None)?.0)
}

/// BO driven by random search with a large pool, additionally recording what
/// the mutation and small random-search optimizers would have proposed.
pub fn run_rs_plus_with_shadows(
    cfg: &BOConfig,
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    seed: u64,
    inputs: RunInputs<'_>,
) -> Result<(History, Vec<ShadowRecord>)> {
    if cfg.optimizer.kind != OptimizerKind::RsPlus || cfg.acquisition != AcquisitionKind::Ei {
        return Err(Error::Config("shadow runs are driven by rs_plus with ei".into()));
    }
    let shadows = [
        ProposalBudget::default_for(OptimizerKind::Mut),
        ProposalBudget::default_for(OptimizerKind::Rs),
    ];
    bo_loop(cfg, benchmark, spec, seed, inputs, Some(&shadows))
}

fn bo_loop(
    cfg: &BOConfig,
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    seed: u64,
    inputs: RunInputs<'_>,
    shadow_budgets: Option<&[ProposalBudget]>,
) -> Result<(History, Vec<ShadowRecord>)> {
    cfg.validate()?;
    let owned_encoder;
    let encoder = match inputs.encoder {
        Some(e) => e,
        None => {
            owned_encoder = make_encoder(cfg.encoding, spec, cfg.truncation, seed)?;
            &owned_encoder
        }
    };
    if encoder.kind() != cfg.encoding {
        return Err(Error::Config("encoder does not match the configured encoding".into()));
    }
    let owned_design;
    let design = match inputs.initial_design {
        Some(d) => d,
        None => {
            owned_design = initial_design(spec, cfg.init_design_size, &mut derive_rng(seed, "init", 0));
            &owned_design
        }
    };
    if design.len() != cfg.init_design_size {
        return Err(Error::Config(format!(
            "initial design has {} architectures, expected {}",
            design.len(),
            cfg.init_design_size
        )));
    }

    let mut history = History::new(cfg.label(), seed);
    let mut shadow_records = Vec::new();
    let mut data = TrainingSet::new(encoder.column_kinds());
    for arch in design {
        let started = Instant::now();
        match benchmark.evaluate(arch) {
            Ok(acc) => {
                data.push(encoder.encode(arch)?, acc)?;
                history.push(arch.clone(), acc, None, started);
            }
            Err(e) => {
                history.fail(&e);
                return Ok((history, shadow_records));
            }
        }
    }

    let mut model: Option<Box<dyn Surrogate>> = None;
    for round in 1..=cfg.iterations {
        let started = Instant::now();
        let round_index = round as u64;
        if (round - 1) % cfg.refit_every_k == 0 {
            model = Some(fit_surrogate(&cfg.surrogate, &data, &mut derive_rng(seed, "fit", round_index))?);
            history.refit_rounds.push(round);
        }
        let surrogate = model.as_deref().expect("fitted in round 1");
        let scorer = Scorer {
            surrogate,
            encoder,
            acquisition: cfg.acquisition,
        };
        let incumbent = history.incumbent().expect("nonempty design");
        let (inc_arch, y_max) = (incumbent.architecture.clone(), incumbent.true_accuracy);
        let mut ctx = AcquisitionContext::new(y_max, derive_rng(seed, "acquire", round_index));
        let proposal = propose(
            spec,
            &inc_arch,
            &scorer,
            &mut ctx,
            cfg.optimizer,
            &mut derive_rng(seed, "candidates", round_index),
        )?;

        if let Some(budgets) = shadow_budgets {
            let mut streams: Vec<(Rng, Rng)> = budgets
                .iter()
                .map(|b| {
                    let tag = b.kind.label();
                    (
                        derive_rng(seed, &format!("shadow/candidates/{tag}"), round_index),
                        derive_rng(seed, &format!("shadow/acquire/{tag}"), round_index),
                    )
                })
                .collect();
            let shadows = shadow_propose(spec, &inc_arch, &scorer, y_max, budgets, &mut streams)?;
            for p in shadows {
                match benchmark.evaluate(&p.architecture) {
                    Ok(acc) => shadow_records.push(ShadowRecord {
                        iteration: round,
                        optimizer: p.optimizer_kind,
                        ei: p.acquisition_value,
                        true_accuracy: acc,
                        incumbent_accuracy: y_max,
                    }),
                    Err(e) => {
                        history.fail(&e);
                        return Ok((history, shadow_records));
                    }
                }
            }
        }

        match benchmark.evaluate(&proposal.architecture) {
            Ok(acc) => {
                if shadow_budgets.is_some() {
                    shadow_records.push(ShadowRecord {
                        iteration: round,
                        optimizer: proposal.optimizer_kind,
                        ei: proposal.acquisition_value,
                        true_accuracy: acc,
                        incumbent_accuracy: y_max,
                    });
                }
                data.push(encoder.encode(&proposal.architecture)?, acc)?;
                history.push(proposal.architecture, acc, Some(proposal.acquisition_value), started);
            }
            Err(e) => {
                history.fail(&e);
                return Ok((history, shadow_records));
            }
        }
    }
    Ok((history, shadow_records))
}

/// First-improvement local search with random neighbor order and random
/// restarts. Architectures already evaluated in the run are looked up rather
/// than re-evaluated.
pub fn run_local_search(
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    budget_evals: usize,
    seed: u64,
) -> Result<History> {
    if budget_evals == 0 {
        return Err(Error::Config("local search needs a budget of at least 1".into()));
    }
    let mut rng = derive_rng(seed, "local_search", 0);
    let mut history = History::new("ls", seed);
    let mut known: HashMap<Architecture, f64> = HashMap::new();
    // evaluates unless known; None when the budget is spent or on failure
    let mut evaluate = |arch: &Architecture, history: &mut History| -> Option<f64> {
        if let Some(&v) = known.get(arch) {
            return Some(v);
        }
        if history.len() >= budget_evals || history.failure.is_some() {
            return None;
        }
        let started = Instant::now();
        match benchmark.evaluate(arch) {
            Ok(acc) => {
                known.insert(arch.clone(), acc);
                history.push(arch.clone(), acc, None, started);
                Some(acc)
            }
            Err(e) => {
                history.fail(&e);
                None
            }
        }
    };

    'restart: while history.len() < budget_evals && history.failure.is_none() {
        let mut current = sample_uniform(spec, &mut rng);
        let Some(mut current_acc) = evaluate(&current, &mut history) else {
            break;
        };
        loop {
            let mut order = neighbors(spec, &current);
            order.shuffle(&mut rng);
            let mut moved = false;
            for n in order {
                let Some(acc) = evaluate(&n, &mut history) else {
                    break 'restart;
                };
                if acc > current_acc {
                    current = n;
                    current_acc = acc;
                    moved = true;
                    break;
                }
            }
            if !moved {
                history.local_optima.push(current);
                continue 'restart;
            }
        }
    }
    Ok(history)
}

pub fn run_random_search(
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    budget_evals: usize,
    seed: u64,
) -> Result<History> {
    if budget_evals == 0 {
        return Err(Error::Config("random search needs a budget of at least 1".into()));
    }
    let mut rng = derive_rng(seed, "random_search", 0);
    let mut history = History::new("random", seed);
    for _ in 0..budget_evals {
        let started = Instant::now();
        let arch = sample_uniform(spec, &mut rng);
        match benchmark.evaluate(&arch) {
            Ok(acc) => history.push(arch, acc, None, started),
            Err(e) => {
                history.fail(&e);
                break;
            }
        }
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{SyntheticOracle, SyntheticOracleConfig};
    use crate::search_space::enumerate_all;
    use crate::surrogates::{EnsembleConfig, ForestConfig};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn oracle(spec: &SearchSpaceSpec) -> SyntheticOracle {
        SyntheticOracle::new(spec, SyntheticOracleConfig::default()).unwrap()
    }

    fn small_forest(cfg: &mut BOConfig) {
        cfg.surrogate = SurrogateConfig::Forest(ForestConfig {
            num_trees: 30,
            ..ForestConfig::default()
        });
    }

    fn assert_incumbent_trace(h: &History) {
        let mut best = f64::NEG_INFINITY;
        for (i, r) in h.records.iter().enumerate() {
            assert_eq!(r.iteration, i + 1);
            best = best.max(r.true_accuracy);
            assert_eq!(r.incumbent_accuracy, best);
        }
    }

    #[test]
    fn rejects_nn_with_tabular() {
        let cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::NnEnsemble,
            AcquisitionKind::Its,
            OptimizerKind::Mut,
        );
        assert!(matches!(cfg.validate(), Err(Error::PathEncodingRequired)));
        let mut ok = cfg.clone();
        ok.encoding = EncodingKind::Path;
        assert!(ok.validate().is_ok());
        ok.refit_every_k = 0;
        assert!(ok.validate().is_err());
        assert_eq!(cfg.label(), "tabular+nn+its+mut");
    }

    #[test]
    fn zero_iterations_gives_the_design() {
        let spec = SearchSpaceSpec::default();
        let mut cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::RandomForest,
            AcquisitionKind::Ei,
            OptimizerKind::Mut,
        );
        cfg.iterations = 0;
        let h = run_bo(&cfg, &oracle(&spec), &spec, 1).unwrap();
        assert_eq!(h.len(), 10);
        assert!(h.records.iter().all(|r| r.acquisition_value.is_none()));
        let design = initial_design(&spec, 10, &mut derive_rng(1, "init", 0));
        assert_eq!(h.records.iter().map(|r| r.architecture.clone()).collect::<Vec<_>>(), design);
    }

    #[test]
    fn bo_runs_are_reproducible_and_monotone() {
        let spec = SearchSpaceSpec::default();
        let o = oracle(&spec);
        for (enc, acq, opt) in [
            (EncodingKind::Tabular, AcquisitionKind::Ei, OptimizerKind::Mut),
            (EncodingKind::Path, AcquisitionKind::Its, OptimizerKind::Rs),
            (EncodingKind::Tabular, AcquisitionKind::ConstMean, OptimizerKind::Rs),
        ] {
            let mut cfg = BOConfig::new(enc, SurrogateKind::RandomForest, acq, opt);
            cfg.iterations = 8;
            small_forest(&mut cfg);
            let a = run_bo(&cfg, &o, &spec, 5).unwrap();
            let b = run_bo(&cfg, &o, &spec, 5).unwrap();
            assert_eq!(a.records, b.records);
            assert_eq!(a.len(), cfg.total_evaluations());
            assert!(a.is_valid());
            assert_incumbent_trace(&a);
            assert!(a.records[10..].iter().all(|r| r.acquisition_value.is_some()));
        }
    }

    #[test]
    fn ensemble_bo_runs() {
        let spec = SearchSpaceSpec::default();
        let mut cfg = BOConfig::new(
            EncodingKind::Path,
            SurrogateKind::NnEnsemble,
            AcquisitionKind::Its,
            OptimizerKind::Mut,
        );
        cfg.iterations = 3;
        cfg.surrogate = SurrogateConfig::Ensemble(EnsembleConfig {
            epochs: 20,
            ..EnsembleConfig::default()
        });
        let h = run_bo(&cfg, &oracle(&spec), &spec, 2).unwrap();
        assert_eq!(h.len(), 13);
        assert_incumbent_trace(&h);
    }

    #[test]
    fn refits_follow_k() {
        let spec = SearchSpaceSpec::default();
        let mut cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::RandomForest,
            AcquisitionKind::Ei,
            OptimizerKind::Mut,
        );
        small_forest(&mut cfg);
        cfg.iterations = 25;
        cfg.refit_every_k = 10;
        let h = run_bo(&cfg, &oracle(&spec), &spec, 3).unwrap();
        assert_eq!(h.refit_rounds, vec![1, 11, 21]);
        cfg.refit_every_k = 1;
        cfg.iterations = 4;
        let h = run_bo(&cfg, &oracle(&spec), &spec, 3).unwrap();
        assert_eq!(h.refit_rounds, vec![1, 2, 3, 4]);
    }

    #[test]
    fn shared_design_is_used() {
        let spec = SearchSpaceSpec::default();
        let design = initial_design(&spec, 10, &mut derive_rng(77, "init", 0));
        let mut cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::RandomForest,
            AcquisitionKind::Ei,
            OptimizerKind::Mut,
        );
        cfg.iterations = 0;
        let inputs = RunInputs {
            encoder: None,
            initial_design: Some(&design),
        };
        let h = run_bo_with(&cfg, &oracle(&spec), &spec, 1, inputs).unwrap();
        assert_eq!(h.records[3].architecture, design[3]);
        let short = &design[..4];
        let inputs = RunInputs {
            encoder: None,
            initial_design: Some(short),
        };
        assert!(run_bo_with(&cfg, &oracle(&spec), &spec, 1, inputs).is_err());
    }

    #[test]
    fn shadows_do_not_touch_the_main_run() {
        let spec = SearchSpaceSpec::default();
        let o = oracle(&spec);
        let mut cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::RandomForest,
            AcquisitionKind::Ei,
            OptimizerKind::RsPlus,
        );
        small_forest(&mut cfg);
        cfg.optimizer.n_candidates = 2000;
        cfg.iterations = 6;
        let plain = run_bo(&cfg, &o, &spec, 9).unwrap();
        let (with, shadows) = run_rs_plus_with_shadows(&cfg, &o, &spec, 9, RunInputs::default()).unwrap();
        assert_eq!(plain.records, with.records);
        assert_eq!(shadows.len(), 3 * cfg.iterations);
        for round in 1..=cfg.iterations {
            let kinds: Vec<_> = shadows
                .iter()
                .filter(|s| s.iteration == round)
                .map(|s| s.optimizer)
                .collect();
            assert_eq!(kinds, vec![OptimizerKind::Mut, OptimizerKind::Rs, OptimizerKind::RsPlus]);
        }
        let driving: Vec<_> = shadows.iter().filter(|s| s.optimizer == OptimizerKind::RsPlus).collect();
        for (s, r) in driving.iter().zip(&with.records[10..]) {
            assert_eq!(s.true_accuracy, r.true_accuracy);
            assert_eq!(Some(s.ei), r.acquisition_value);
        }
        let mut wrong = cfg.clone();
        wrong.optimizer = ProposalBudget::default_for(OptimizerKind::Mut);
        assert!(run_rs_plus_with_shadows(&wrong, &o, &spec, 9, RunInputs::default()).is_err());
    }

    /// Injective objective: distinct scores for every architecture.
    struct Ranked(HashMap<Architecture, f64>);

    impl Benchmark for Ranked {
        fn evaluate(&self, arch: &Architecture) -> Result<f64> {
            Ok(self.0[arch])
        }
        fn name(&self) -> String {
            "ranked".into()
        }
    }

    #[test]
    fn local_search_reaches_local_optima_within_budget() {
        let spec = SearchSpaceSpec::generic(2, 2, 2, 1).unwrap();
        let o = oracle(&spec);
        let all = enumerate_all(&spec, 64).unwrap();
        let ranked = Ranked(
            all.iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), o.evaluate(a).unwrap() + i as f64 * 1e-9))
                .collect(),
        );
        for seed in 0..20 {
            let h = run_local_search(&ranked, &spec, 40, seed).unwrap();
            assert_eq!(h.len(), 40);
            assert_incumbent_trace(&h);
            assert!(!h.local_optima.is_empty());
            for opt in &h.local_optima {
                let v = ranked.0[opt];
                assert!(neighbors(&spec, opt).iter().all(|n| ranked.0[n] < v));
            }
        }
        let a = run_local_search(&ranked, &spec, 17, 3).unwrap();
        assert_eq!(a.records, run_local_search(&ranked, &spec, 17, 3).unwrap().records);
        assert!(run_local_search(&ranked, &spec, 0, 3).is_err());
    }

    #[test]
    fn random_search_budget_and_order_statistics() {
        let spec = SearchSpaceSpec::generic(2, 2, 2, 1).unwrap();
        let o = oracle(&spec);
        let h = run_random_search(&o, &spec, 1, 0).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(
            run_random_search(&o, &spec, 7, 4).unwrap().records,
            run_random_search(&o, &spec, 7, 4).unwrap().records
        );

        // E[max of n uniform draws] over the 48 architectures
        let mut values: Vec<f64> = enumerate_all(&spec, 64)
            .unwrap()
            .iter()
            .map(|a| o.evaluate(a).unwrap())
            .collect();
        values.sort_by(f64::total_cmp);
        let m = values.len() as f64;
        let n = 5;
        let cdf = |k: usize| (k as f64 / m).powi(n);
        let expected: f64 = values.iter().enumerate().map(|(k, v)| v * (cdf(k + 1) - cdf(k))).sum();
        let second: f64 = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * v * (cdf(k + 1) - cdf(k)))
            .sum();
        let sd = (second - expected * expected).sqrt();
        let reps = 1000;
        let mean = (0..reps)
            .map(|s| run_random_search(&o, &spec, n as usize, s).unwrap().incumbent_accuracy().unwrap())
            .sum::<f64>()
            / reps as f64;
        assert!((mean - expected).abs() < 3.0 * sd / (reps as f64).sqrt(), "{mean} vs {expected}");
    }

    struct Flaky {
        inner: SyntheticOracle,
        left: AtomicUsize,
    }

    impl Benchmark for Flaky {
        fn evaluate(&self, arch: &Architecture) -> Result<f64> {
            if self.left.fetch_sub(1, Ordering::SeqCst) == 0 {
                return Err(Error::BridgeUnavailable("gone".into()));
            }
            self.inner.evaluate(arch)
        }
        fn name(&self) -> String {
            "flaky".into()
        }
    }

    #[test]
    fn benchmark_failure_keeps_the_prefix() {
        let spec = SearchSpaceSpec::default();
        let flaky = Flaky {
            inner: oracle(&spec),
            left: AtomicUsize::new(12),
        };
        let mut cfg = BOConfig::new(
            EncodingKind::Tabular,
            SurrogateKind::RandomForest,
            AcquisitionKind::Ei,
            OptimizerKind::Mut,
        );
        small_forest(&mut cfg);
        cfg.iterations = 5;
        let h = run_bo(&cfg, &flaky, &spec, 0).unwrap();
        assert_eq!(h.len(), 12);
        let failure = h.failure.unwrap();
        assert!(failure.bridge);
        assert!(failure.message.contains("gone"));
    }
}
