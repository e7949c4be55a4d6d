//! Acceptance suite: one PASS/FAIL line per criterion. Runs the experiment
//! suites at full desk scale on the default synthetic oracle, so expect it to
//! take tens of minutes on one core.

mod common;

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use common::*;
use nas_ablate::acq_optimizers::OptimizerKind;
use nas_ablate::analysis::{mean, standard_error, summarize_probe, ProbeRecord};
use nas_ablate::plots::emit_plots;
use nas_ablate::suite::{run_suite, ExperimentSuiteConfig, Suite, SuiteOutcome};

const SEED: u64 = 2024;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, check: Check, started: Instant) {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        if !check.passed {
            self.failures += 1;
        }
        println!(
            "{verdict} {name}: {} [{:.1}s]",
            check.detail,
            started.elapsed().as_secs_f64()
        );
        let _ = std::io::stdout().flush();
    }
}

fn suite(kind: Suite, replications: usize, iterations: usize, dir: &Path) -> SuiteOutcome {
    let mut cfg = ExperimentSuiteConfig::new(kind, dir);
    cfg.seed = SEED;
    cfg.replications = replications;
    cfg.iterations = iterations;
    let outcome = run_suite(&cfg).expect("suite runs");
    assert_eq!(outcome.failures().count(), 0, "cells failed");
    outcome
}

/// Difference of means in units of its standard error.
fn separation(a: &[f64], b: &[f64]) -> (f64, f64) {
    let se_a = standard_error(a);
    let se_b = standard_error(b);
    let pooled = (se_a * se_a + se_b * se_b).sqrt();
    let diff = mean(a) - mean(b);
    (diff, pooled)
}

fn optimizer_dominance(dir: &Path) -> Check {
    let outcome = suite(Suite::Ablation, 10, 60, dir);
    let table = outcome.anova.as_ref().expect("anova computed");
    let ranked = table.ranked();
    let (top, next) = (ranked[0], ranked[1]);
    let ratio = top.sum_sq / next.sum_sq;
    let listing: Vec<String> = ranked.iter().map(|r| format!("{} {:.3e}", r.term, r.sum_sq)).collect();
    Check {
        passed: top.term == "acqopt" && ratio >= 3.0,
        detail: format!(
            "18 algorithms x 10 replications x 60 iterations; Sum Sq {}; top/next = {ratio:.2}",
            listing.join(", ")
        ),
    }
}

fn mutation_beats_random_search(dir: &Path) -> Check {
    let outcome = suite(Suite::OptimizerCompare, 10, 100, dir);
    let finals = |opt: &str| outcome.finals(&format!("tabular+rf+ei+{opt}"));
    let (mu, rs, rsp) = (finals("mut"), finals("rs"), finals("rs_plus"));
    let (d_rs, se_rs) = separation(&mu, &rs);
    let (d_rsp, se_rsp) = separation(&mu, &rsp);
    let shadows: Vec<_> = outcome.completed().flat_map(|c| c.shadows.iter()).collect();
    let ei = |k: OptimizerKind| {
        let v: Vec<f64> = shadows.iter().filter(|s| s.optimizer == k).map(|s| s.ei).collect();
        mean(&v)
    };
    let (ei_mut, ei_rs) = (ei(OptimizerKind::Mut), ei(OptimizerKind::Rs));
    Check {
        passed: d_rs > se_rs && d_rsp > se_rsp && ei_mut >= ei_rs,
        detail: format!(
            "final mut {:.5}, rs {:.5}, rs_plus {:.5}; mut-rs {d_rs:.5} (pooled SE {se_rs:.5}), mut-rs_plus {d_rsp:.5} (pooled SE {se_rsp:.5}); shadow EI mut {ei_mut:.3e} vs rs {ei_rs:.3e}",
            mean(&mu),
            mean(&rs),
            mean(&rsp)
        ),
    }
}

fn probe_trends(dir: &Path) -> Check {
    let reps = 30;
    let outcome = suite(Suite::Probe, reps, 50, dir);
    let records: Vec<ProbeRecord> = outcome.completed().flat_map(|c| c.probe.iter().cloned()).collect();
    let summary = summarize_probe(&records).expect("summary");
    let complete = summary.len() == 8
        && records.len() == reps * 8 * 100
        && summary.iter().all(|s| s.tau_q025.is_some() && s.tau_q975.is_some());
    let plots_ok = emit_plots(dir).is_ok();
    let d1 = summary.first().map_or(f64::NAN, |s| s.mean_true);
    let d8 = summary.last().map_or(f64::NAN, |s| s.mean_true);
    let taus: Vec<String> = summary
        .iter()
        .map(|s| {
            format!(
                "d{} {:.3} [{:.3}, {:.3}]",
                s.edit_distance,
                s.mean_tau.unwrap_or(f64::NAN),
                s.tau_q025.unwrap_or(f64::NAN),
                s.tau_q975.unwrap_or(f64::NAN)
            )
        })
        .collect();
    Check {
        passed: complete && plots_ok && d1 > d8,
        detail: format!(
            "{reps} replications x 50 iterations; mean true accuracy d1 {d1:.5} vs d8 {d8:.5}; report complete: {}; tau {}",
            complete && plots_ok,
            taus.join(", ")
        ),
    }
}

fn determinism() -> Check {
    let mut identical = true;
    let mut compared = 0;
    for (kind, reps, iters, nodes) in [
        (Suite::Ablation, 2, 6, 3),
        (Suite::OptimizerCompare, 2, 10, 4),
        (Suite::Probe, 2, 10, 4),
    ] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (dir, threads) in dirs.iter().zip([1, 2]) {
            let mut cfg = ExperimentSuiteConfig::new(kind, dir.path());
            cfg.seed = SEED;
            cfg.replications = reps;
            cfg.iterations = iters;
            cfg.nodes = nodes;
            cfg.threads = Some(threads);
            run_suite(&cfg).expect("suite runs");
        }
        for entry in std::fs::read_dir(dirs[0].path()).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(dirs[0].path().join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(&name)).ok();
            identical &= b.as_deref() == Some(a.as_slice());
            compared += 1;
        }
    }
    Check {
        passed: identical,
        detail: format!("{compared} artifacts from three suites rerun with 1 and 2 worker threads; identical: {identical}"),
    }
}

fn main() {
    let mut report = Report { failures: 0 };
    let t = Instant::now();
    report.line("ensemble statistics", ensemble_statistics(), t);
    let t = Instant::now();
    report.line("EI oracle equivalence", ei_monte_carlo(EI_DRAWS), t);
    let t = Instant::now();
    report.line("ANOVA oracle equivalence", anova_oracle(), t);
    let t = Instant::now();
    report.line("combinatorial oracle: neighbors", neighbors_vs_brute_force(), t);
    let t = Instant::now();
    report.line("combinatorial oracle: exhaustive rs_plus", propose_rs_exhaustive(), t);
    let t = Instant::now();
    report.line("combinatorial oracle: local search endpoints", local_search_endpoints(), t);
    let t = Instant::now();
    report.line("determinism", determinism(), t);

    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    report.line("probe trends", probe_trends(dir.path()), t);
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    report.line("mutation beats random search", mutation_beats_random_search(dir.path()), t);
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    report.line("optimizer dominance", optimizer_dominance(dir.path()), t);

    if report.failures > 0 {
        println!("{} acceptance criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
