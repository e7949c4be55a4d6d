//! Plot-ready data files derived from suite artifacts.
//!
//! Every `.dat` file is whitespace-separated long format with a `#` header
//! line naming the columns:
//!
//! | file        | source      | columns |
//! |-------------|-------------|---------|
//! | `fig1.dat`  | curves.csv  | method iteration mean se lower upper |
//! | `fig2a.dat` | curves.csv  | method iteration mean q025 q975 |
//! | `fig2b.dat` | shadow.csv  | optimizer iteration mean_ei q025 q975 |
//! | `fig2c.dat` | shadow.csv  | optimizer iteration mean_relative q025 q975 |
//! | `fig2d.dat` | shadow.csv  | optimizer replication iteration improvement no_improvement |
//! | `fig3a.dat` | probe.csv   | edit_distance mean_tau q025 q975 |
//! | `fig3b.dat` | probe.csv   | edit_distance mean_true q025 q975 mean_incumbent |
//! | `fig3c.dat` | probe.csv   | edit_distance mean_ei ei_q025 ei_q975 mean_improvement improvement_q025 improvement_q975 |
//!
//! `relative` is the proposal's true accuracy minus the incumbent's. A
//! missing optional source yields files holding only the header line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::analysis::{mean, quantile, summarize_probe, ProbeRecord};
use crate::error::{Error, Result};

pub const REQUIRED_ARTIFACTS: [&str; 2] = ["runs.csv", "curves.csv"];

#[derive(Debug, Deserialize)]
struct CurveRow {
    method: String,
    iteration: usize,
    mean: f64,
    se: f64,
    q025: f64,
    q975: f64,
}

#[derive(Debug, Deserialize)]
struct ShadowRow {
    replication: usize,
    iteration: usize,
    optimizer: String,
    ei: f64,
    true_acc: f64,
    incumbent_acc: f64,
}

#[derive(Debug, Deserialize)]
struct ProbeRow {
    replication: usize,
    edit_distance: usize,
    test_index: usize,
    predicted_mean: f64,
    predicted_sd: f64,
    true_accuracy: f64,
    ei: f64,
    improvement: f64,
    incumbent_accuracy: f64,
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

fn read_optional<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    if path.exists() {
        read_rows(&path)
    } else {
        Ok(Vec::new())
    }
}

fn create(dir: &Path, name: &str, columns: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "# {columns}")?;
    files.push(path);
    Ok(f)
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), |x| format!("{x}"))
}

/// Mean and 2.5%/97.5% quantiles of a column per (group, iteration).
fn band<'a>(rows: impl Iterator<Item = (&'a str, usize, f64)>) -> BTreeMap<(&'a str, usize), (f64, f64, f64)> {
    let mut groups: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    for (g, i, v) in rows {
        groups.entry((g, i)).or_default().push(v);
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let q = |p| quantile(&v, p).expect("nonempty");
            (k, (mean(&v), q(0.025), q(0.975)))
        })
        .collect()
}

/// Writes the `.dat` files for the artifacts in `dir` and returns their paths.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let missing: Vec<String> = REQUIRED_ARTIFACTS
        .iter()
        .filter(|n| !dir.join(n).is_file())
        .map(|n| n.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts {
            dir: dir.display().to_string(),
            expected: missing,
        });
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(dir.join("runs.csv"))?;
    reader.headers()?;
    let curves: Vec<CurveRow> = read_rows(&dir.join("curves.csv"))?;
    let shadows: Vec<ShadowRow> = read_optional(dir, "shadow.csv")?;
    let probe: Vec<ProbeRow> = read_optional(dir, "probe.csv")?;
    let mut files = Vec::new();

    let mut f = create(dir, "fig1.dat", "method iteration mean se lower upper", &mut files)?;
    for c in &curves {
        writeln!(f, "{} {} {} {} {} {}", c.method, c.iteration, c.mean, c.se, c.mean - c.se, c.mean + c.se)?;
    }
    f.flush()?;
    let mut f = create(dir, "fig2a.dat", "method iteration mean q025 q975", &mut files)?;
    for c in &curves {
        writeln!(f, "{} {} {} {} {}", c.method, c.iteration, c.mean, c.q025, c.q975)?;
    }
    f.flush()?;

    let mut f = create(dir, "fig2b.dat", "optimizer iteration mean_ei q025 q975", &mut files)?;
    for ((g, i), (m, lo, hi)) in band(shadows.iter().map(|s| (s.optimizer.as_str(), s.iteration, s.ei))) {
        writeln!(f, "{g} {i} {m} {lo} {hi}")?;
    }
    f.flush()?;
    let mut f = create(dir, "fig2c.dat", "optimizer iteration mean_relative q025 q975", &mut files)?;
    let relative = shadows
        .iter()
        .map(|s| (s.optimizer.as_str(), s.iteration, s.true_acc - s.incumbent_acc));
    for ((g, i), (m, lo, hi)) in band(relative) {
        writeln!(f, "{g} {i} {m} {lo} {hi}")?;
    }
    f.flush()?;
    let mut f = create(
        dir,
        "fig2d.dat",
        "optimizer replication iteration improvement no_improvement",
        &mut files,
    )?;
    let mut ordered: Vec<&ShadowRow> = shadows.iter().collect();
    ordered.sort_by(|a, b| (&a.optimizer, a.replication, a.iteration).cmp(&(&b.optimizer, b.replication, b.iteration)));
    for s in ordered {
        let improvement = (s.true_acc - s.incumbent_acc).max(0.0);
        let flag = u8::from(improvement <= 0.0);
        writeln!(f, "{} {} {} {} {}", s.optimizer, s.replication, s.iteration, improvement, flag)?;
    }
    f.flush()?;

    let records: Vec<ProbeRecord> = probe
        .iter()
        .map(|p| ProbeRecord {
            replication: p.replication,
            edit_distance: p.edit_distance,
            test_index: p.test_index,
            predicted_mean: p.predicted_mean,
            predicted_sd: p.predicted_sd,
            true_accuracy: p.true_accuracy,
            ei: p.ei,
            improvement: p.improvement,
            incumbent_accuracy: p.incumbent_accuracy,
        })
        .collect();
    let summary = summarize_probe(&records)?;
    let mut incumbents: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in &records {
        incumbents.entry(r.edit_distance).or_default().insert(r.replication, r.incumbent_accuracy);
    }
    let mut fa = create(dir, "fig3a.dat", "edit_distance mean_tau q025 q975", &mut files)?;
    let mut fb = create(dir, "fig3b.dat", "edit_distance mean_true q025 q975 mean_incumbent", &mut files)?;
    let mut fc = create(
        dir,
        "fig3c.dat",
        "edit_distance mean_ei ei_q025 ei_q975 mean_improvement improvement_q025 improvement_q975",
        &mut files,
    )?;
    for s in &summary {
        let d = s.edit_distance;
        writeln!(fa, "{d} {} {} {}", num(s.mean_tau), num(s.tau_q025), num(s.tau_q975))?;
        let inc: Vec<f64> = incumbents[&d].values().copied().collect();
        writeln!(fb, "{d} {} {} {} {}", s.mean_true, s.true_q025, s.true_q975, mean(&inc))?;
        writeln!(
            fc,
            "{d} {} {} {} {} {} {}",
            s.mean_ei, s.ei_q025, s.ei_q975, s.mean_improvement, s.improvement_q025, s.improvement_q975
        )?;
    }
    fa.flush()?;
    fb.flush()?;
    fc.flush()?;
    Ok(files)
}
