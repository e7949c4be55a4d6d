//! Independent oracles shared by the integration and acceptance tests. Each
//! check returns a report instead of asserting so callers can print it.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use nas_ablate::acq_optimizers::{propose_rs, OptimizerKind, ProposalBudget, Scorer};
use nas_ablate::acquisition::{acq_ei, expected_improvement, AcquisitionContext, AcquisitionKind};
use nas_ablate::analysis::{anova_oneway, anova_type2, f_upper_tail, FactorialObservation};
use nas_ablate::benchmarks::{Benchmark, SyntheticOracle, SyntheticOracleConfig};
use nas_ablate::bo_engine::run_local_search;
use nas_ablate::encodings::{build_path_table, Encoder, TabularSchema};
use nas_ablate::search_space::{enumerate_all, neighbors, sample_uniform, SearchSpaceSpec};
use nas_ablate::seed::rng_from_seed;
use nas_ablate::surrogates::{
    fit_ensemble, fit_surrogate, EnsembleConfig, PosteriorPrediction, Surrogate, SurrogateConfig, SurrogateKind,
    TrainingSet,
};

/// Outcome of one oracle comparison.
#[derive(Debug, Clone)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

// ---------------------------------------------------------------- EI

pub const EI_DRAWS: usize = 1_000_000;
pub const EI_GAPS: [f64; 5] = [-0.01, -0.005, 0.0, 0.005, 0.01];
pub const EI_SDS: [f64; 5] = [0.005, 0.01, 0.02, 0.03, 0.04];

/// Closed-form EI against a Monte Carlo average of `max(f - y_max, 0)` with
/// `f ~ N(mean, sd^2)` over the gap x sd grid, plus exactness at `sd = 0`.
pub fn ei_monte_carlo(draws: usize) -> Check {
    let y_max = 0.93;
    let mut rng = rng_from_seed(20_240_601);
    let mut worst_z: f64 = 0.0;
    for &gap in &EI_GAPS {
        for &sd in &EI_SDS {
            let mean = y_max + gap;
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..draws {
                let z: f64 = StandardNormal.sample(&mut rng);
                let imp = (mean + sd * z - y_max).max(0.0);
                sum += imp;
                sum_sq += imp * imp;
            }
            let n = draws as f64;
            let mc = sum / n;
            let var = (sum_sq / n - mc * mc) * n / (n - 1.0);
            let se = (var / n).sqrt();
            let closed = expected_improvement(mean, sd, y_max);
            let via_ctx = acq_ei(&PosteriorPrediction::new(mean, sd), &AcquisitionContext::new(y_max, rng_from_seed(0)));
            if via_ctx != closed {
                return Check::new(false, format!("acq_ei {via_ctx} differs from expected_improvement {closed}"));
            }
            worst_z = worst_z.max((closed - mc).abs() / se);
        }
    }
    let mut exact = true;
    for &gap in &EI_GAPS {
        let mean = y_max + gap;
        exact &= expected_improvement(mean, 0.0, y_max) == (mean - y_max).max(0.0);
    }
    Check::new(
        worst_z <= 3.0 && exact,
        format!("max |closed - MC| = {worst_z:.3} SE over 25 grid points ({draws} draws each); exact at sd=0: {exact}"),
    )
}

// ---------------------------------------------------------------- ANOVA

/// Four factors with 2, 2, 3 and 2 levels, one row per cell (24 rows).
/// Responses follow fixed additive effects plus deterministic noise.
pub fn anova_fixture_balanced() -> Vec<FactorialObservation> {
    let mut out = Vec::new();
    let mut i = 0usize;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..3 {
                for d in 0..2 {
                    let effect = 0.012 * a as f64 - 0.004 * b as f64 + [0.0, 0.003, -0.006][c] + 0.02 * d as f64;
                    let noise = 0.003 * ((i as f64) * 1.7).sin();
                    out.push(FactorialObservation {
                        levels: vec![format!("a{a}"), format!("b{b}"), format!("c{c}"), format!("d{d}")],
                        replication: 0,
                        response: 0.9 + effect + noise,
                    });
                    i += 1;
                }
            }
        }
    }
    out
}

/// The balanced fixture with three rows dropped and two cells doubled.
pub fn anova_fixture_unbalanced() -> Vec<FactorialObservation> {
    let base = anova_fixture_balanced();
    let mut out: Vec<FactorialObservation> = base
        .iter()
        .enumerate()
        .filter(|(i, _)| ![3, 10, 17].contains(i))
        .map(|(_, o)| o.clone())
        .collect();
    for (k, i) in [5usize, 20].into_iter().enumerate() {
        let mut extra = base[i].clone();
        extra.replication = 1;
        extra.response += 0.002 * (k as f64 + 1.0);
        out.push(extra);
    }
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Residual sum of squares from the normal equations `X'X beta = X'y` with
/// treatment dummies for the listed factors.
fn normal_equations_rss(data: &[FactorialObservation], factors: &[usize]) -> f64 {
    let levels: Vec<Vec<String>> = (0..data[0].levels.len())
        .map(|f| {
            let mut v: Vec<String> = data.iter().map(|o| o.levels[f].clone()).collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|o| {
            let mut x = vec![1.0];
            for &f in factors {
                for l in &levels[f][1..] {
                    x.push(if o.levels[f] == *l { 1.0 } else { 0.0 });
                }
            }
            x
        })
        .collect();
    let p = rows[0].len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (x, o) in rows.iter().zip(data) {
        for i in 0..p {
            xty[i] += x[i] * o.response;
            for j in 0..p {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    let beta = solve(xtx, xty);
    rows.iter()
        .zip(data)
        .map(|(x, o)| {
            let fit: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (o.response - fit).powi(2)
        })
        .sum()
}

/// Largest absolute difference between `anova_type2` and the oracle over
/// SS, F and p of every term.
pub fn anova_oracle_difference(data: &[FactorialObservation]) -> f64 {
    let names = ["enc", "sur", "acq", "opt"];
    let table = anova_type2(&names, data).expect("full-rank fixture");
    let all: Vec<usize> = (0..4).collect();
    let rss_full = normal_equations_rss(data, &all);
    let df_levels = [1usize, 1, 2, 1];
    let df_resid = data.len() - 1 - df_levels.iter().sum::<usize>();
    let mut worst: f64 = (table.residual().sum_sq - rss_full).abs();
    worst = worst.max((table.residual().df as f64 - df_resid as f64).abs());
    for (f, name) in names.iter().enumerate() {
        let reduced: Vec<usize> = all.iter().copied().filter(|&g| g != f).collect();
        let ss = normal_equations_rss(data, &reduced) - rss_full;
        let fv = (ss / df_levels[f] as f64) / (rss_full / df_resid as f64);
        let p = f_upper_tail(fv, df_levels[f] as f64, df_resid as f64);
        let row = table.term(name).expect("term present");
        worst = worst
            .max((row.sum_sq - ss).abs())
            .max((row.df as f64 - df_levels[f] as f64).abs())
            .max((row.f_value.unwrap() - fv).abs() / fv.abs().max(1.0))
            .max((row.p_value.unwrap() - p).abs());
    }
    worst
}

/// On a balanced design the Type II terms and residual add up to the total.
pub fn balanced_decomposition_gap(data: &[FactorialObservation]) -> f64 {
    let table = anova_type2(&["enc", "sur", "acq", "opt"], data).unwrap();
    let mean = data.iter().map(|o| o.response).sum::<f64>() / data.len() as f64;
    let total: f64 = data.iter().map(|o| (o.response - mean).powi(2)).sum();
    (table.rows.iter().map(|r| r.sum_sq).sum::<f64>() - total).abs()
}

pub fn anova_oracle() -> Check {
    let balanced = anova_oracle_difference(&anova_fixture_balanced());
    let unbalanced = anova_oracle_difference(&anova_fixture_unbalanced());
    let gap = balanced_decomposition_gap(&anova_fixture_balanced());
    let groups: Vec<Vec<f64>> = (0..7)
        .map(|g| (0..20).map(|r| 0.93 + 0.001 * ((g * 20 + r) as f64).cos()).collect())
        .collect();
    let ow = anova_oneway(&groups).unwrap();
    let df_ok = (ow.df1, ow.df2) == (6, 133);
    Check::new(
        balanced <= 1e-8 && unbalanced <= 1e-8 && gap <= 1e-12 && df_ok,
        format!(
            "max diff balanced {balanced:.2e}, unbalanced {unbalanced:.2e}; balanced SS gap {gap:.1e}; one-way df ({}, {})",
            ow.df1, ow.df2
        ),
    )
}

// ---------------------------------------------------------------- combinatorics

/// Three intermediate nodes, two operations: 1152 architectures.
pub fn small_space() -> SearchSpaceSpec {
    SearchSpaceSpec::with_operation_count(3, 2, 2, 1).unwrap()
}

pub fn neighbors_vs_brute_force() -> Check {
    let spec = small_space();
    let all = enumerate_all(&spec, 5000).unwrap();
    let mut mismatches = 0;
    for a in &all {
        let got: HashSet<_> = neighbors(&spec, a).into_iter().collect();
        let brute: HashSet<_> = all.iter().filter(|b| a.edit_distance(b).unwrap() == 1).cloned().collect();
        if got != brute {
            mismatches += 1;
        }
    }
    Check::new(
        mismatches == 0,
        format!("{} architectures, {mismatches} neighborhoods differ", all.len()),
    )
}

/// A forest fitted to oracle data, maximized by RS+ and by enumeration.
pub fn propose_rs_exhaustive() -> Check {
    let spec = small_space();
    let oracle = SyntheticOracle::new(&spec, SyntheticOracleConfig::default()).unwrap();
    let encoder = Encoder::Tabular(TabularSchema::new(&spec));
    let mut data = TrainingSet::new(encoder.column_kinds());
    let mut rng = rng_from_seed(5);
    for _ in 0..30 {
        let a = sample_uniform(&spec, &mut rng);
        data.push(encoder.encode(&a).unwrap(), oracle.evaluate(&a).unwrap()).unwrap();
    }
    let y_max = data.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let model = fit_surrogate(&SurrogateConfig::default_for(SurrogateKind::RandomForest), &data, &mut rng).unwrap();
    let scorer = Scorer {
        surrogate: model.as_ref(),
        encoder: &encoder,
        acquisition: AcquisitionKind::Ei,
    };
    let all = enumerate_all(&spec, 5000).unwrap();
    let mut ctx = AcquisitionContext::new(y_max, rng_from_seed(0));
    let best = scorer
        .score(&all, &mut ctx)
        .unwrap()
        .into_iter()
        .map(|(v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let budget = ProposalBudget::default_for(OptimizerKind::RsPlus);
    let mut ctx = AcquisitionContext::new(y_max, rng_from_seed(0));
    let p = propose_rs(&spec, &scorer, &mut ctx, budget, &mut rng_from_seed(6)).unwrap();
    Check::new(
        p.acquisition_value == best,
        format!(
            "{} candidates over {} architectures: proposal EI {:.6e}, true max {:.6e}",
            budget.n_candidates,
            all.len(),
            p.acquisition_value,
            best
        ),
    )
}

pub fn local_search_endpoints() -> Check {
    let spec = small_space();
    let oracle = SyntheticOracle::new(&spec, SyntheticOracleConfig::default()).unwrap();
    let mut endpoints = 0;
    let mut improvable = 0;
    for seed in 0..20 {
        let h = run_local_search(&oracle, &spec, 200, seed).unwrap();
        for opt in &h.local_optima {
            endpoints += 1;
            let v = oracle.evaluate(opt).unwrap();
            if neighbors(&spec, opt).iter().any(|n| oracle.evaluate(n).unwrap() > v) {
                improvable += 1;
            }
        }
    }
    Check::new(
        endpoints > 0 && improvable == 0,
        format!("{endpoints} pre-restart endpoints over 20 runs, {improvable} with an improving neighbor"),
    )
}

// ---------------------------------------------------------------- ensemble

fn hand_stats(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Injected member outputs returned verbatim by a stub model.
struct Injected(Vec<f64>);

impl Surrogate for Injected {
    fn member_predictions(&self, _x: &[f64]) -> nas_ablate::Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

pub fn ensemble_statistics() -> Check {
    let mut rng = rng_from_seed(77);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=12);
        let outputs: Vec<f64> = (0..m).map(|_| 0.85 + 0.1 * rng.random::<f64>()).collect();
        let p = Injected(outputs.clone()).predict(&[]).unwrap();
        let (mean, sd) = hand_stats(&outputs);
        worst = worst.max((p.mean - mean).abs()).max((p.sd - sd).abs());
    }
    let fixed = Injected(vec![0.90, 0.92, 0.94]).predict(&[]).unwrap();
    worst = worst.max((fixed.mean - 0.92).abs()).max((fixed.sd - 0.02).abs());

    // a trained ensemble summarizes its own members the same way
    let spec = SearchSpaceSpec::default();
    let table = build_path_table(&spec, 64, &mut rng_from_seed(1)).unwrap();
    let oracle = SyntheticOracle::new(&spec, SyntheticOracleConfig::default()).unwrap();
    let mut data = TrainingSet::new(Encoder::Path(table.clone()).column_kinds());
    for _ in 0..20 {
        let a = sample_uniform(&spec, &mut rng);
        data.push(table.encode(&a).unwrap(), oracle.evaluate(&a).unwrap()).unwrap();
    }
    let model = fit_ensemble(&data, &EnsembleConfig::default(), &mut rng_from_seed(2)).unwrap();
    for _ in 0..20 {
        let x = table.encode(&sample_uniform(&spec, &mut rng)).unwrap();
        let p = model.predict(&x).unwrap();
        let (mean, sd) = hand_stats(&model.member_predictions(&x).unwrap());
        worst = worst.max((p.mean - mean).abs()).max((p.sd - sd).abs());
    }
    Check::new(worst <= 1e-12, format!("max deviation from hand-computed mean/sd {worst:.2e}"))
}
