//! Statistics over finished runs: rank correlation, additive ANOVA, summary
//! curves and the edit-distance probe.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;

use crate::acq_optimizers::OptimizerKind;
use crate::acquisition::{expected_improvement, AcquisitionKind};
use crate::benchmarks::Benchmark;
use crate::bo_engine::{run_bo_with, BOConfig, History, RunInputs};
use crate::encodings::{Encoder, EncodingKind, TabularSchema};
use crate::error::{Error, Result};
use crate::search_space::{mutate, SearchSpaceSpec};
use crate::seed::derive_rng;
use crate::surrogates::{fit_surrogate, SurrogateKind, TrainingSet};

/// Reported in place of an infinite F statistic.
pub const F_CAP: f64 = 1e12;

/// Tie-corrected Kendall rank correlation (tau-b). `None` when either list
/// is constant.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Statistics(format!(
            "kendall_tau needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Statistics("kendall_tau needs at least 2 pairs".into()));
    }
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).ok_or_else(|| Error::Statistics("NaN in kendall_tau".into()))?;
            let dy = y[i].partial_cmp(&y[j]).ok_or_else(|| Error::Statistics("NaN in kendall_tau".into()))?;
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    ties_x += 1;
                    ties_y += 1;
                }
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - ties_x) * (n0 - ties_y)) as f64).sqrt();
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((concordant - discordant) as f64 / denom))
}

/// Linear-interpolation quantile of a sample (the common "type 7").
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean; zero for fewer than two values.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Upper tail of the F distribution.
pub fn f_upper_tail(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if !f.is_finite() || f >= F_CAP {
        return 0.0;
    }
    beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)).clamp(0.0, 1.0)
}

/// Sums of squares at or below this count as zero.
const NEGLIGIBLE: f64 = 1e-24;

/// F statistic with the degenerate cases pinned: no residual variance gives
/// 0 without an effect and [`F_CAP`] with one.
fn f_ratio(ss: f64, df: f64, rss: f64, df_resid: f64) -> f64 {
    if rss <= NEGLIGIBLE {
        return if ss > NEGLIGIBLE { F_CAP } else { 0.0 };
    }
    ((ss / df) / (rss / df_resid)).min(F_CAP)
}

/// One run of a factorial experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialObservation {
    /// One level per factor, in factor order.
    pub levels: Vec<String>,
    pub replication: usize,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub term: String,
    pub sum_sq: f64,
    pub df: usize,
    /// Absent on the residual row.
    pub f_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    /// Factor rows in input order, then `Residuals`.
    pub rows: Vec<AnovaRow>,
}

impl AnovaTable {
    pub fn term(&self, name: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.term == name)
    }

    pub fn residual(&self) -> &AnovaRow {
        self.rows.last().expect("residual row")
    }

    /// Factor rows, largest sum of squares first.
    pub fn ranked(&self) -> Vec<&AnovaRow> {
        let mut rows: Vec<&AnovaRow> = self.rows[..self.rows.len() - 1].iter().collect();
        rows.sort_by(|a, b| b.sum_sq.total_cmp(&a.sum_sq));
        rows
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "Sum Sq", "Df", "F value", "Pr(>F)"])?;
        for r in &self.rows {
            w.write_record([
                r.term.clone(),
                format!("{}", r.sum_sq),
                r.df.to_string(),
                r.f_value.map(|v| format!("{v}")).unwrap_or_default(),
                r.p_value.map(|v| format!("{v}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorted distinct levels of each factor.
fn factor_levels(n_factors: usize, data: &[FactorialObservation]) -> Vec<Vec<String>> {
    (0..n_factors)
        .map(|f| {
            data.iter()
                .map(|o| o.levels[f].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect()
}

/// Intercept plus treatment-coded dummies for the chosen factors.
fn design_matrix(data: &[FactorialObservation], levels: &[Vec<String>], factors: &[usize]) -> DMatrix<f64> {
    let cols = 1 + factors.iter().map(|&f| levels[f].len() - 1).sum::<usize>();
    let mut x = DMatrix::zeros(data.len(), cols);
    for (i, o) in data.iter().enumerate() {
        x[(i, 0)] = 1.0;
        let mut c = 1;
        for &f in factors {
            let pos = levels[f].iter().position(|l| *l == o.levels[f]).expect("level listed");
            if pos > 0 {
                x[(i, c + pos - 1)] = 1.0;
            }
            c += levels[f].len() - 1;
        }
    }
    x
}

fn rank(x: &DMatrix<f64>) -> usize {
    let svd = x.clone().svd(false, false);
    let max = svd.singular_values.max();
    let tol = max * 1e-10 * x.nrows().max(x.ncols()) as f64;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Residual sum of squares of the least-squares fit of `y` on full-rank `x`.
fn rss(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let qr = x.clone().qr();
    let q = qr.q();
    let fitted = &q * (q.transpose() * y);
    (y - fitted).norm_squared()
}

/// Additive-model ANOVA with Type II sums of squares.
pub fn anova_type2(factors: &[&str], data: &[FactorialObservation]) -> Result<AnovaTable> {
    if factors.is_empty() {
        return Err(Error::Statistics("no factors given".into()));
    }
    if data.iter().any(|o| o.levels.len() != factors.len()) {
        return Err(Error::Statistics("every observation needs one level per factor".into()));
    }
    let levels = factor_levels(factors.len(), data);
    for (f, l) in levels.iter().enumerate() {
        if l.len() < 2 {
            return Err(Error::Statistics(format!("factor {} has fewer than 2 levels", factors[f])));
        }
    }
    let all: Vec<usize> = (0..factors.len()).collect();
    let x_full = design_matrix(data, &levels, &all);
    let model_df = x_full.ncols() - 1;
    if rank(&x_full) < x_full.ncols() {
        for a in 0..factors.len() {
            for b in a + 1..factors.len() {
                let x = design_matrix(data, &levels, &[a, b]);
                if rank(&x) < x.ncols() {
                    return Err(Error::Confounded(factors[a].into(), factors[b].into()));
                }
            }
        }
        return Err(Error::Confounded(factors[0].into(), factors[factors.len() - 1].into()));
    }
    if data.len() <= model_df + 1 {
        return Err(Error::Statistics("no residual degrees of freedom".into()));
    }
    let y = DVector::from_iterator(data.len(), data.iter().map(|o| o.response));
    let rss_full = rss(&x_full, &y);
    let df_resid = data.len() - model_df - 1;
    let mut rows = Vec::with_capacity(factors.len() + 1);
    for f in 0..factors.len() {
        let others: Vec<usize> = all.iter().copied().filter(|&g| g != f).collect();
        let x = design_matrix(data, &levels, &others);
        let ss = (rss(&x, &y) - rss_full).max(0.0);
        let df = levels[f].len() - 1;
        let f_value = f_ratio(ss, df as f64, rss_full, df_resid as f64);
        rows.push(AnovaRow {
            term: factors[f].to_string(),
            sum_sq: ss,
            df,
            f_value: Some(f_value),
            p_value: Some(f_upper_tail(f_value, df as f64, df_resid as f64)),
        });
    }
    rows.push(AnovaRow {
        term: "Residuals".into(),
        sum_sq: rss_full,
        df: df_resid,
        f_value: None,
        p_value: None,
    });
    Ok(AnovaTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneWay {
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
}

pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<OneWay> {
    if groups.len() < 2 {
        return Err(Error::Statistics("one-way ANOVA needs at least 2 groups".into()));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::Statistics("every group needs at least 2 values".into()));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in groups {
        let m = mean(g);
        between += g.len() as f64 * (m - grand) * (m - grand);
        within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let df1 = groups.len() - 1;
    let df2 = n - groups.len();
    let f = f_ratio(between, df1 as f64, within, df2 as f64);
    Ok(OneWay {
        f,
        df1,
        df2,
        p: f_upper_tail(f, df1 as f64, df2 as f64),
    })
}

/// Incumbent trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: String,
    pub incumbent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub method: String,
    /// 1-based evaluation index.
    pub iteration: usize,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Per method and evaluation index: mean incumbent accuracy, its standard
/// error and the 2.5%/97.5% quantiles. Methods come out sorted by name.
pub fn summarize_runs(runs: &[RunTrace]) -> Vec<CurvePoint> {
    let mut by_method: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for r in runs {
        by_method.entry(&r.method).or_default().push(&r.incumbent);
    }
    let mut out = Vec::new();
    for (method, traces) in by_method {
        let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
        for i in 0..len {
            let values: Vec<f64> = traces.iter().filter_map(|t| t.get(i).copied()).collect();
            out.push(CurvePoint {
                method: method.to_string(),
                iteration: i + 1,
                n: values.len(),
                mean: mean(&values),
                se: standard_error(&values),
                q025: quantile(&values, 0.025).expect("nonempty"),
                q975: quantile(&values, 0.975).expect("nonempty"),
            });
        }
    }
    out
}

/// One test architecture of the edit-distance probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub replication: usize,
    pub edit_distance: usize,
    pub test_index: usize,
    pub predicted_mean: f64,
    pub predicted_sd: f64,
    pub true_accuracy: f64,
    pub ei: f64,
    /// True accuracy minus the incumbent's.
    pub improvement: f64,
    pub incumbent_accuracy: f64,
}

impl ProbeRecord {
    pub fn improved(&self) -> bool {
        self.improvement > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub iterations: usize,
    pub tests_per_distance: usize,
    pub max_distance: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            tests_per_distance: 100,
            max_distance: 8,
        }
    }
}

/// The BO configuration the probe runs: tabular, forest, EI, mutation.
pub fn probe_bo_config(iterations: usize) -> BOConfig {
    let mut cfg = BOConfig::new(
        EncodingKind::Tabular,
        SurrogateKind::RandomForest,
        AcquisitionKind::Ei,
        OptimizerKind::Mut,
    );
    cfg.iterations = iterations;
    cfg
}

/// Runs BO, refits the surrogate on everything evaluated, then scores
/// mutants of the final incumbent at each edit distance. Returns the BO
/// history with the records.
pub fn probe_edit_distance(
    probe: &ProbeConfig,
    benchmark: &dyn Benchmark,
    spec: &SearchSpaceSpec,
    seed: u64,
    replication: usize,
    inputs: RunInputs<'_>,
) -> Result<(History, Vec<ProbeRecord>)> {
    let cfg = probe_bo_config(probe.iterations);
    let history = run_bo_with(&cfg, benchmark, spec, seed, inputs)?;
    if let Some(f) = &history.failure {
        return Err(if f.bridge {
            Error::BridgeUnavailable(f.message.clone())
        } else {
            Error::Config(f.message.clone())
        });
    }
    let encoder = Encoder::Tabular(TabularSchema::new(spec));
    let mut data = TrainingSet::new(encoder.column_kinds());
    for r in &history.records {
        data.push(encoder.encode(&r.architecture)?, r.true_accuracy)?;
    }
    let model = fit_surrogate(&cfg.surrogate, &data, &mut derive_rng(seed, "probe/fit", 0))?;
    let incumbent = history.incumbent().expect("nonempty history").clone();
    let available = spec.num_mutable_parameters();
    let mut out = Vec::new();
    for d in 1..=probe.max_distance {
        if d > available {
            log::warn!("skipping edit distance {d}: only {available} mutable parameters");
            continue;
        }
        let mut rng = derive_rng(seed, "probe/mutate", d as u64);
        let tests = (0..probe.tests_per_distance)
            .map(|_| mutate(spec, &incumbent.architecture, &mut rng, d))
            .collect::<Result<Vec<_>>>()?;
        let xs = tests.iter().map(|a| encoder.encode(a)).collect::<Result<Vec<_>>>()?;
        let preds = model.predict_batch(&xs)?;
        for (i, (arch, pred)) in tests.iter().zip(preds).enumerate() {
            if arch.edit_distance(&incumbent.architecture)? != d {
                return Err(Error::Statistics(format!("test architecture not at edit distance {d}")));
            }
            let acc = benchmark.evaluate(arch)?;
            out.push(ProbeRecord {
                replication,
                edit_distance: d,
                test_index: i,
                predicted_mean: pred.mean,
                predicted_sd: pred.sd,
                true_accuracy: acc,
                ei: expected_improvement(pred.mean, pred.sd, incumbent.true_accuracy),
                improvement: acc - incumbent.true_accuracy,
                incumbent_accuracy: incumbent.true_accuracy,
            });
        }
    }
    Ok((history, out))
}

/// Per-distance aggregates of probe records over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSummary {
    pub edit_distance: usize,
    /// Replications with a defined tau.
    pub tau_count: usize,
    pub mean_tau: Option<f64>,
    pub tau_q025: Option<f64>,
    pub tau_q975: Option<f64>,
    pub mean_true: f64,
    pub true_q025: f64,
    pub true_q975: f64,
    pub mean_ei: f64,
    pub ei_q025: f64,
    pub ei_q975: f64,
    pub mean_improvement: f64,
    pub improvement_q025: f64,
    pub improvement_q975: f64,
}

pub fn summarize_probe(records: &[ProbeRecord]) -> Result<Vec<ProbeSummary>> {
    let mut by_d: BTreeMap<usize, BTreeMap<usize, Vec<&ProbeRecord>>> = BTreeMap::new();
    for r in records {
        by_d.entry(r.edit_distance).or_default().entry(r.replication).or_default().push(r);
    }
    let mut out = Vec::new();
    for (d, reps) in by_d {
        let mut taus = Vec::new();
        for recs in reps.values() {
            if recs.len() < 2 {
                continue;
            }
            let pred: Vec<f64> = recs.iter().map(|r| r.predicted_mean).collect();
            let truth: Vec<f64> = recs.iter().map(|r| r.true_accuracy).collect();
            if let Some(t) = kendall_tau(&pred, &truth)? {
                taus.push(t);
            }
        }
        let all: Vec<&ProbeRecord> = reps.values().flatten().copied().collect();
        let col = |f: fn(&ProbeRecord) -> f64| -> Vec<f64> { all.iter().map(|r| f(r)).collect() };
        let truth = col(|r| r.true_accuracy);
        let ei = col(|r| r.ei);
        let imp = col(|r| r.improvement);
        let q = |v: &[f64], p| quantile(v, p).expect("nonempty");
        out.push(ProbeSummary {
            edit_distance: d,
            tau_count: taus.len(),
            mean_tau: (!taus.is_empty()).then(|| mean(&taus)),
            tau_q025: quantile(&taus, 0.025),
            tau_q975: quantile(&taus, 0.975),
            mean_true: mean(&truth),
            true_q025: q(&truth, 0.025),
            true_q975: q(&truth, 0.975),
            mean_ei: mean(&ei),
            ei_q025: q(&ei, 0.025),
            ei_q975: q(&ei, 0.975),
            mean_improvement: mean(&imp),
            improvement_q025: q(&imp, 0.025),
            improvement_q975: q(&imp, 0.975),
        });
    }
    Ok(out)
}
