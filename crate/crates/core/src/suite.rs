//! Batch experiments: method enumeration, seeding, parallel execution and
//! CSV artifacts.
//!
//! Seeds: every (method, replication) cell runs with
//! `derive_seed(master, "cell/<method>", replication)`. Initial designs come
//! from `derive_rng(master, "init", i)` where `i` is the replication in the
//! ablation suite and 0 (one design shared by all replications) otherwise.
//! The path table is built once per suite from `derive_rng(master, "paths", 0)`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::acq_optimizers::OptimizerKind;
use crate::acquisition::AcquisitionKind;
use crate::analysis::{
    anova_oneway, anova_type2, mean, probe_edit_distance, standard_error, summarize_probe, summarize_runs, AnovaTable,
    FactorialObservation, OneWay, ProbeConfig, ProbeRecord, RunTrace,
};
use crate::benchmarks::bridge::DEFAULT_TIMEOUT;
use crate::benchmarks::{Benchmark, BridgeBenchmark, SyntheticOracle, SyntheticOracleConfig};
use crate::bo_engine::{
    initial_design, make_encoder, run_bo_with, run_local_search, run_random_search, run_rs_plus_with_shadows,
    BOConfig, History, RunFailure, RunInputs, ShadowRecord,
};
use crate::encodings::{Encoder, EncodingKind, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::search_space::{Architecture, SearchSpaceSpec};
use crate::seed::{derive_rng, derive_seed};
use crate::surrogates::SurrogateKind;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Size of the random initial design of every BO method.
pub const INIT_DESIGN_SIZE: usize = 10;

/// Number of best methods compared by the one-way ANOVA.
pub const ONEWAY_TOP: usize = 7;

/// Placeholder for components a baseline does not have.
const NOT_APPLICABLE: &str = "na";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Ablation,
    OptimizerCompare,
    Probe,
}

impl Suite {
    pub fn label(self) -> &'static str {
        match self {
            Suite::Ablation => "ablation",
            Suite::OptimizerCompare => "optimizer_compare",
            Suite::Probe => "probe",
        }
    }

    pub fn default_replications(self) -> usize {
        match self {
            Suite::Ablation | Suite::OptimizerCompare => 20,
            Suite::Probe => 100,
        }
    }

    pub fn default_iterations(self) -> usize {
        match self {
            Suite::Ablation | Suite::OptimizerCompare => 100,
            Suite::Probe => 50,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ablation" => Ok(Suite::Ablation),
            "optimizer_compare" => Ok(Suite::OptimizerCompare),
            "probe" => Ok(Suite::Probe),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkChoice {
    Synthetic,
    Bridge,
}

impl BenchmarkChoice {
    pub fn label(self) -> &'static str {
        match self {
            BenchmarkChoice::Synthetic => "synthetic",
            BenchmarkChoice::Bridge => "bridge",
        }
    }
}

impl std::str::FromStr for BenchmarkChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(BenchmarkChoice::Synthetic),
            "bridge" => Ok(BenchmarkChoice::Bridge),
            other => Err(Error::Config(format!("unknown benchmark {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuiteConfig {
    pub suite: Suite,
    pub replications: usize,
    pub iterations: usize,
    pub seed: u64,
    pub benchmark: BenchmarkChoice,
    pub bridge_command: Option<String>,
    pub output_dir: PathBuf,
    pub nodes: usize,
    pub ops: usize,
    pub cells: usize,
    pub truncation: usize,
    /// Cap on concurrently running cells; `None` uses one per core.
    pub threads: Option<usize>,
}

impl ExperimentSuiteConfig {
    pub fn new(suite: Suite, output_dir: impl Into<PathBuf>) -> Self {
        let default = SearchSpaceSpec::default();
        Self {
            suite,
            replications: suite.default_replications(),
            iterations: suite.default_iterations(),
            seed: 0,
            benchmark: BenchmarkChoice::Synthetic,
            bridge_command: None,
            output_dir: output_dir.into(),
            nodes: default.num_intermediate_nodes(),
            ops: default.num_operations(),
            cells: default.num_cells(),
            truncation: DEFAULT_TRUNCATION,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.truncation == 0 {
            return Err(Error::Config("truncation must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread cap must be at least 1".into()));
        }
        match (self.benchmark, &self.bridge_command) {
            (BenchmarkChoice::Bridge, None) => {
                return Err(Error::Config("the bridge benchmark needs a bridge command".into()))
            }
            (BenchmarkChoice::Synthetic, Some(_)) => {
                return Err(Error::Config("a bridge command is only valid with the bridge benchmark".into()))
            }
            _ => {}
        }
        self.spec()?;
        Ok(())
    }

    pub fn spec(&self) -> Result<SearchSpaceSpec> {
        SearchSpaceSpec::with_operation_count(self.nodes, 2, self.ops, self.cells)
    }

    /// SHA-256 over every setting that affects results. The output directory
    /// and thread cap are excluded.
    pub fn config_hash(&self) -> String {
        let text = format!(
            "suite={};replications={};iterations={};seed={};benchmark={};bridge_command={};nodes={};ops={};cells={};truncation={}",
            self.suite.label(),
            self.replications,
            self.iterations,
            self.seed,
            self.benchmark.label(),
            self.bridge_command.as_deref().unwrap_or(""),
            self.nodes,
            self.ops,
            self.cells,
            self.truncation,
        );
        Sha256::digest(text.as_bytes())
            .iter()
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    /// First line of every CSV artifact.
    pub fn metadata_line(&self) -> String {
        format!("# nas-ablate {VERSION} config={}", self.config_hash())
    }
}

#[derive(Debug, Clone)]
enum Runner {
    Bo(BOConfig),
    Shadowed(BOConfig),
    LocalSearch,
    RandomSearch,
    Probe(ProbeConfig),
}

/// A method label with the components reported in `runs.csv`.
#[derive(Debug, Clone)]
pub struct Method {
    pub label: String,
    pub encoding: String,
    pub surrogate: String,
    pub acqf: String,
    pub acqopt: String,
    /// Part of the four-way factorial design.
    pub factorial: bool,
    runner: Runner,
}

impl Method {
    fn bo(label: String, cfg: &BOConfig, factorial: bool, runner: Runner) -> Self {
        Self {
            label,
            encoding: cfg.encoding.label().into(),
            surrogate: cfg.surrogate.kind().label().into(),
            acqf: cfg.acquisition.label().into(),
            acqopt: cfg.optimizer.kind.label().into(),
            factorial,
            runner,
        }
    }

    fn baseline(label: &str, runner: Runner) -> Self {
        Self {
            label: label.into(),
            encoding: NOT_APPLICABLE.into(),
            surrogate: NOT_APPLICABLE.into(),
            acqf: NOT_APPLICABLE.into(),
            acqopt: NOT_APPLICABLE.into(),
            factorial: false,
            runner,
        }
    }

    fn factor_levels(&self) -> Vec<String> {
        vec![
            self.encoding.clone(),
            self.surrogate.clone(),
            self.acqf.clone(),
            self.acqopt.clone(),
        ]
    }
}

pub const FACTORS: [&str; 4] = ["encoding", "surrogate", "acqf", "acqopt"];

fn bo_config(
    enc: EncodingKind,
    sur: SurrogateKind,
    acq: AcquisitionKind,
    opt: OptimizerKind,
    cfg: &ExperimentSuiteConfig,
) -> BOConfig {
    let mut c = BOConfig::new(enc, sur, acq, opt);
    c.iterations = cfg.iterations;
    c.init_design_size = INIT_DESIGN_SIZE;
    c.truncation = cfg.truncation;
    c
}

/// Every method label run by the suite, in run order.
pub fn suite_methods(cfg: &ExperimentSuiteConfig) -> Vec<Method> {
    match cfg.suite {
        Suite::Ablation => {
            let mut out = Vec::new();
            let pairs = [
                (EncodingKind::Path, SurrogateKind::NnEnsemble),
                (EncodingKind::Path, SurrogateKind::RandomForest),
                (EncodingKind::Tabular, SurrogateKind::RandomForest),
            ];
            for (enc, sur) in pairs {
                for acq in AcquisitionKind::ALL {
                    for opt in [OptimizerKind::Mut, OptimizerKind::Rs] {
                        let c = bo_config(enc, sur, acq, opt, cfg);
                        out.push(Method::bo(c.label(), &c, true, Runner::Bo(c.clone())));
                    }
                }
            }
            for k in [1, 10] {
                let mut c = bo_config(
                    EncodingKind::Path,
                    SurrogateKind::NnEnsemble,
                    AcquisitionKind::Its,
                    OptimizerKind::Mut,
                    cfg,
                );
                c.refit_every_k = k;
                out.push(Method::bo(format!("bananas_k{k}"), &c, false, Runner::Bo(c.clone())));
            }
            out.push(Method::baseline("ls", Runner::LocalSearch));
            out.push(Method::baseline("random", Runner::RandomSearch));
            out
        }
        Suite::OptimizerCompare => [OptimizerKind::Mut, OptimizerKind::Rs, OptimizerKind::RsPlus]
            .into_iter()
            .map(|opt| {
                let c = bo_config(
                    EncodingKind::Tabular,
                    SurrogateKind::RandomForest,
                    AcquisitionKind::Ei,
                    opt,
                    cfg,
                );
                let runner = if opt == OptimizerKind::RsPlus {
                    Runner::Shadowed(c.clone())
                } else {
                    Runner::Bo(c.clone())
                };
                Method::bo(c.label(), &c, false, runner)
            })
            .collect(),
        Suite::Probe => {
            let probe = ProbeConfig {
                iterations: cfg.iterations,
                ..ProbeConfig::default()
            };
            let c = crate::analysis::probe_bo_config(cfg.iterations);
            vec![Method::bo(c.label(), &c, false, Runner::Probe(probe))]
        }
    }
}

/// Outcome of one (method, replication) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub method: String,
    pub replication: usize,
    pub seed: u64,
    pub history: Option<History>,
    pub shadows: Vec<ShadowRecord>,
    pub probe: Vec<ProbeRecord>,
    pub failure: Option<RunFailure>,
}

impl CellResult {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.history.as_ref().and_then(History::incumbent_accuracy)
    }
}

#[derive(Debug)]
pub struct SuiteOutcome {
    /// Completed and failed cells, sorted by method label then replication.
    pub cells: Vec<CellResult>,
    pub anova: Option<AnovaTable>,
    pub oneway: Option<(Vec<String>, OneWay)>,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl SuiteOutcome {
    pub fn completed(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.failure.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| c.failure.is_some())
    }

    /// Final incumbent accuracies of completed cells of `method`.
    pub fn finals(&self, method: &str) -> Vec<f64> {
        self.completed()
            .filter(|c| c.method == method)
            .filter_map(CellResult::final_accuracy)
            .collect()
    }

    /// 0 when every cell completed, 3 when a failure involved the bridge,
    /// 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        let mut code = 0;
        for c in self.failures() {
            let bridge = c.failure.as_ref().is_some_and(|f| f.bridge);
            code = code.max(if bridge { 3 } else { 2 });
        }
        code
    }
}

/// Exit status for an error that stopped a suite before any cell ran.
pub fn error_exit_code(err: &Error) -> i32 {
    if err.is_bridge() {
        3
    } else {
        1
    }
}

struct Shared<'a> {
    spec: &'a SearchSpaceSpec,
    benchmark: &'a dyn Benchmark,
    path_encoder: Option<Encoder>,
    tabular_encoder: Encoder,
    designs: Vec<Vec<Architecture>>,
    budget: usize,
    master: u64,
}

impl Shared<'_> {
    fn design(&self, replication: usize) -> &[Architecture] {
        &self.designs[replication.min(self.designs.len() - 1)]
    }

    fn inputs(&self, cfg: &BOConfig, replication: usize) -> RunInputs<'_> {
        let encoder = match cfg.encoding {
            EncodingKind::Path => self.path_encoder.as_ref(),
            EncodingKind::Tabular => Some(&self.tabular_encoder),
        };
        RunInputs {
            encoder,
            initial_design: Some(self.design(replication)),
        }
    }

    fn run_cell(&self, method: &Method, replication: usize) -> CellResult {
        let seed = derive_seed(self.master, &format!("cell/{}", method.label), replication as u64);
        let mut cell = CellResult {
            method: method.label.clone(),
            replication,
            seed,
            history: None,
            shadows: Vec::new(),
            probe: Vec::new(),
            failure: None,
        };
        let result = match &method.runner {
            Runner::Bo(c) => run_bo_with(c, self.benchmark, self.spec, seed, self.inputs(c, replication)),
            Runner::Shadowed(c) => run_rs_plus_with_shadows(c, self.benchmark, self.spec, seed, self.inputs(c, replication))
                .map(|(h, s)| {
                    cell.shadows = s;
                    h
                }),
            Runner::LocalSearch => run_local_search(self.benchmark, self.spec, self.budget, seed),
            Runner::RandomSearch => run_random_search(self.benchmark, self.spec, self.budget, seed),
            Runner::Probe(p) => {
                let c = crate::analysis::probe_bo_config(p.iterations);
                probe_edit_distance(p, self.benchmark, self.spec, seed, replication, self.inputs(&c, replication)).map(
                    |(h, recs)| {
                        cell.probe = recs;
                        h
                    },
                )
            }
        };
        match result {
            Ok(mut h) => {
                h.method = method.label.clone();
                cell.failure = h.failure.clone();
                cell.history = Some(h);
            }
            Err(e) => {
                cell.failure = Some(RunFailure {
                    message: e.to_string(),
                    bridge: e.is_bridge(),
                });
            }
        }
        if cell.failure.is_some() {
            cell.shadows.clear();
            cell.probe.clear();
        }
        cell
    }
}

/// Runs every cell of the suite and writes its artifacts.
pub fn run_suite(cfg: &ExperimentSuiteConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let benchmark: Box<dyn Benchmark> = match cfg.benchmark {
        BenchmarkChoice::Synthetic => Box::new(SyntheticOracle::new(&spec, SyntheticOracleConfig::default())?),
        BenchmarkChoice::Bridge => Box::new(BridgeBenchmark::spawn(
            &spec,
            cfg.bridge_command.as_deref().expect("validated"),
            DEFAULT_TIMEOUT,
        )?),
    };
    let methods = suite_methods(cfg);
    let uses_paths = methods.iter().any(|m| m.encoding == EncodingKind::Path.label());
    let path_encoder = if uses_paths {
        Some(make_encoder(EncodingKind::Path, &spec, cfg.truncation, cfg.seed)?)
    } else {
        None
    };
    let design_count = if cfg.suite == Suite::Ablation { cfg.replications } else { 1 };
    let designs = (0..design_count)
        .map(|i| initial_design(&spec, INIT_DESIGN_SIZE, &mut derive_rng(cfg.seed, "init", i as u64)))
        .collect();
    let shared = Shared {
        spec: &spec,
        benchmark: benchmark.as_ref(),
        path_encoder,
        tabular_encoder: make_encoder(EncodingKind::Tabular, &spec, cfg.truncation, cfg.seed)?,
        designs,
        budget: INIT_DESIGN_SIZE + cfg.iterations,
        master: cfg.seed,
    };

    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..cfg.replications).map(move |r| (m, r)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut cells: Vec<CellResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, r)| {
                let cell = shared.run_cell(&methods[m], r);
                log::info!("{} replication {} done", cell.method, cell.replication);
                cell
            })
            .collect()
    });
    cells.sort_by(|a, b| a.method.cmp(&b.method).then(a.replication.cmp(&b.replication)));

    check_budget_parity(&cells, shared.budget)?;
    write_artifacts(cfg, &methods, cells)
}

/// Every completed cell must have spent exactly the suite's budget.
fn check_budget_parity(cells: &[CellResult], budget: usize) -> Result<()> {
    for c in cells.iter().filter(|c| c.failure.is_none()) {
        let used = c.history.as_ref().map_or(0, History::len);
        if used != budget {
            return Err(Error::BudgetParity(format!(
                "{} replication {} used {used} evaluations, expected {budget}",
                c.method, c.replication
            )));
        }
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Opens `name` in the output directory with the metadata line written.
fn open_csv(cfg: &ExperimentSuiteConfig, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = cfg.output_dir.join(name);
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "{}", cfg.metadata_line())?;
    files.push(path);
    Ok(f)
}

fn write_artifacts(cfg: &ExperimentSuiteConfig, methods: &[Method], cells: Vec<CellResult>) -> Result<SuiteOutcome> {
    let spec = cfg.spec()?;
    let by_label = |label: &str| methods.iter().find(|m| m.label == label).expect("known method");
    let mut files = Vec::new();

    let mut w = csv::Writer::from_writer(open_csv(cfg, "runs.csv", &mut files)?);
    w.write_record([
        "suite",
        "method",
        "encoding",
        "surrogate",
        "acqf",
        "acqopt",
        "replication",
        "iteration",
        "proposed_arch",
        "proposed_acc",
        "incumbent_acc",
        "seed",
    ])?;
    for c in cells.iter().filter(|c| c.failure.is_none()) {
        let m = by_label(&c.method);
        for r in &c.history.as_ref().expect("completed").records {
            w.write_record([
                cfg.suite.label().to_string(),
                m.label.clone(),
                m.encoding.clone(),
                m.surrogate.clone(),
                m.acqf.clone(),
                m.acqopt.clone(),
                c.replication.to_string(),
                r.iteration.to_string(),
                r.architecture.to_canonical_string(&spec),
                fmt_f64(r.true_accuracy),
                fmt_f64(r.incumbent_accuracy),
                c.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let traces: Vec<RunTrace> = cells
        .iter()
        .filter(|c| c.failure.is_none())
        .map(|c| RunTrace {
            method: c.method.clone(),
            incumbent: c.history.as_ref().expect("completed").records.iter().map(|r| r.incumbent_accuracy).collect(),
        })
        .collect();
    let mut w = csv::Writer::from_writer(open_csv(cfg, "curves.csv", &mut files)?);
    w.write_record(["method", "iteration", "n", "mean", "se", "q025", "q975"])?;
    for p in summarize_runs(&traces) {
        w.write_record([
            p.method,
            p.iteration.to_string(),
            p.n.to_string(),
            fmt_f64(p.mean),
            fmt_f64(p.se),
            fmt_f64(p.q025),
            fmt_f64(p.q975),
        ])?;
    }
    w.flush()?;

    let mut anova = None;
    let mut oneway = None;
    if cfg.suite == Suite::Ablation {
        let observations: Vec<FactorialObservation> = cells
            .iter()
            .filter(|c| c.failure.is_none() && by_label(&c.method).factorial)
            .map(|c| FactorialObservation {
                levels: by_label(&c.method).factor_levels(),
                replication: c.replication,
                response: c.final_accuracy().expect("completed"),
            })
            .collect();
        match anova_type2(&FACTORS, &observations) {
            Ok(table) => {
                table.write_csv(open_csv(cfg, "anova.csv", &mut files)?)?;
                anova = Some(table);
            }
            Err(e) => log::warn!("four-way ANOVA not computed: {e}"),
        }
        oneway = top_methods_oneway(methods, &cells);
        if let Some((labels, ow)) = &oneway {
            let mut w = csv::Writer::from_writer(open_csv(cfg, "oneway.csv", &mut files)?);
            w.write_record(["methods", "F value", "Df1", "Df2", "Pr(>F)"])?;
            w.write_record([
                labels.join(";"),
                fmt_f64(ow.f),
                ow.df1.to_string(),
                ow.df2.to_string(),
                fmt_f64(ow.p),
            ])?;
            w.flush()?;
        }
    }

    if cfg.suite == Suite::OptimizerCompare {
        let mut w = csv::Writer::from_writer(open_csv(cfg, "shadow.csv", &mut files)?);
        w.write_record(["replication", "iteration", "optimizer", "ei", "true_acc", "incumbent_acc", "improved"])?;
        for c in cells.iter().filter(|c| c.failure.is_none()) {
            for s in &c.shadows {
                w.write_record([
                    c.replication.to_string(),
                    s.iteration.to_string(),
                    s.optimizer.label().to_string(),
                    fmt_f64(s.ei),
                    fmt_f64(s.true_accuracy),
                    fmt_f64(s.incumbent_accuracy),
                    u8::from(s.improved()).to_string(),
                ])?;
            }
        }
        w.flush()?;
    }

    if cfg.suite == Suite::Probe {
        let mut w = csv::Writer::from_writer(open_csv(cfg, "probe.csv", &mut files)?);
        w.write_record([
            "replication",
            "edit_distance",
            "test_index",
            "predicted_mean",
            "predicted_sd",
            "true_accuracy",
            "ei",
            "improvement",
            "improved",
            "incumbent_accuracy",
        ])?;
        for c in cells.iter().filter(|c| c.failure.is_none()) {
            for r in &c.probe {
                w.write_record([
                    r.replication.to_string(),
                    r.edit_distance.to_string(),
                    r.test_index.to_string(),
                    fmt_f64(r.predicted_mean),
                    fmt_f64(r.predicted_sd),
                    fmt_f64(r.true_accuracy),
                    fmt_f64(r.ei),
                    fmt_f64(r.improvement),
                    u8::from(r.improved()).to_string(),
                    fmt_f64(r.incumbent_accuracy),
                ])?;
            }
        }
        w.flush()?;
    }

    let failed: Vec<&CellResult> = cells.iter().filter(|c| c.failure.is_some()).collect();
    if !failed.is_empty() {
        let mut w = csv::Writer::from_writer(open_csv(cfg, "failures.csv", &mut files)?);
        w.write_record(["method", "replication", "seed", "bridge", "completed_evaluations", "message"])?;
        for c in failed {
            let f = c.failure.as_ref().expect("failed");
            w.write_record([
                c.method.clone(),
                c.replication.to_string(),
                c.seed.to_string(),
                u8::from(f.bridge).to_string(),
                c.history.as_ref().map_or(0, History::len).to_string(),
                f.message.clone(),
            ])?;
        }
        w.flush()?;
    }

    let mut outcome = SuiteOutcome {
        cells,
        anova,
        oneway,
        files,
        summary: String::new(),
    };
    outcome.summary = summary_table(cfg, methods, &outcome)?;
    Ok(outcome)
}

/// One-way ANOVA over the `ONEWAY_TOP` methods with the best mean final
/// accuracy. `None` when fewer than two methods have two or more runs.
fn top_methods_oneway(methods: &[Method], cells: &[CellResult]) -> Option<(Vec<String>, OneWay)> {
    let mut ranked: Vec<(String, Vec<f64>)> = methods
        .iter()
        .map(|m| {
            let finals: Vec<f64> = cells
                .iter()
                .filter(|c| c.failure.is_none() && c.method == m.label)
                .filter_map(CellResult::final_accuracy)
                .collect();
            (m.label.clone(), finals)
        })
        .filter(|(_, v)| v.len() >= 2)
        .collect();
    ranked.sort_by(|a, b| mean(&b.1).total_cmp(&mean(&a.1)).then(a.0.cmp(&b.0)));
    ranked.truncate(ONEWAY_TOP);
    if ranked.len() < 2 {
        return None;
    }
    let groups: Vec<Vec<f64>> = ranked.iter().map(|(_, v)| v.clone()).collect();
    let ow = anova_oneway(&groups).ok()?;
    Some((ranked.into_iter().map(|(l, _)| l).collect(), ow))
}

fn summary_table(cfg: &ExperimentSuiteConfig, methods: &[Method], outcome: &SuiteOutcome) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "suite {} ({} replications, {} iterations)", cfg.suite.label(), cfg.replications, cfg.iterations);
    let _ = writeln!(s, "{:<28} {:>4} {:>10} {:>10}", "method", "runs", "final", "se");
    let mut labels: Vec<&str> = methods.iter().map(|m| m.label.as_str()).collect();
    labels.sort_unstable();
    for label in labels {
        let finals = outcome.finals(label);
        if finals.is_empty() {
            let _ = writeln!(s, "{label:<28} {:>4} {:>10} {:>10}", 0, "-", "-");
        } else {
            let _ = writeln!(
                s,
                "{label:<28} {:>4} {:>10.5} {:>10.5}",
                finals.len(),
                mean(&finals),
                standard_error(&finals)
            );
        }
    }
    if let Some(table) = &outcome.anova {
        let _ = writeln!(s, "four-way ANOVA (Type II)");
        for r in &table.rows {
            let _ = writeln!(
                s,
                "  {:<10} SS {:>12.4e} df {:>3} F {:>10} p {:>10}",
                r.term,
                r.sum_sq,
                r.df,
                r.f_value.map_or("-".into(), |f| format!("{f:.3}")),
                r.p_value.map_or("-".into(), |p| format!("{p:.3e}")),
            );
        }
    }
    if let Some((labels, ow)) = &outcome.oneway {
        let _ = writeln!(
            s,
            "one-way ANOVA, top {}: F({}, {}) = {:.3}, p = {:.3}",
            labels.len(),
            ow.df1,
            ow.df2,
            ow.f,
            ow.p
        );
    }
    let probe: Vec<ProbeRecord> = outcome.completed().flat_map(|c| c.probe.iter().cloned()).collect();
    if !probe.is_empty() {
        let _ = writeln!(s, "{:>2} {:>8} {:>10} {:>10}", "d", "tau", "true", "ei");
        for p in summarize_probe(&probe)? {
            let _ = writeln!(
                s,
                "{:>2} {:>8} {:>10.5} {:>10.3e}",
                p.edit_distance,
                p.mean_tau.map_or("-".into(), |t| format!("{t:.3}")),
                p.mean_true,
                p.mean_ei
            );
        }
    }
    let failed = outcome.failures().count();
    if failed > 0 {
        let _ = writeln!(s, "{failed} cells failed; see failures.csv");
    }
    Ok(s)
}
