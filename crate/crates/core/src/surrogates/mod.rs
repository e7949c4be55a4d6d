//! Performance predictors with uncertainty.
//!
//! Both models implement [`Surrogate`]: given an encoded architecture they
//! return a [`PosteriorPrediction`] holding the mean and standard deviation
//! of their member (network or tree) predictions.

use std::io::Write;

use crate::encodings::ColumnKind;
use crate::error::{Error, Result};
use crate::seed::Rng;

mod ensemble;
mod forest;

pub use ensemble::{fit_ensemble, EnsembleConfig, EnsembleModel};
pub use forest::{fit_forest, ForestConfig, ForestModel, UncertaintyMethod};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorPrediction {
    pub mean: f64,
    pub sd: f64,
}

impl PosteriorPrediction {
    pub fn new(mean: f64, sd: f64) -> Self {
        debug_assert!(sd >= 0.0);
        Self { mean, sd }
    }

    /// Arithmetic mean and sample standard deviation (denominator `M - 1`)
    /// of member outputs. A single member yields `sd = 0`.
    pub fn from_members(outputs: &[f64]) -> Self {
        let m = outputs.len() as f64;
        if outputs.iter().all(|&o| o == outputs[0]) {
            return Self {
                mean: outputs[0],
                sd: 0.0,
            };
        }
        let mean = outputs.iter().sum::<f64>() / m;
        let ss: f64 = outputs.iter().map(|o| (o - mean) * (o - mean)).sum();
        Self {
            mean,
            sd: (ss / (m - 1.0)).sqrt(),
        }
    }
}

/// Encoded architectures with their observed accuracies.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    kinds: Vec<ColumnKind>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(kinds: Vec<ColumnKind>) -> Self {
        Self {
            kinds,
            rows: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>, target: f64) -> Result<()> {
        check_row(&self.kinds, &row)?;
        if !target.is_finite() {
            return Err(Error::Config(format!("non-finite training target {target}")));
        }
        self.rows.push(row);
        self.targets.push(target);
        Ok(())
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.kinds.len()
    }
}

pub(crate) fn check_row(kinds: &[ColumnKind], row: &[f64]) -> Result<()> {
    if row.len() != kinds.len() {
        return Err(Error::WidthMismatch {
            expected: kinds.len(),
            got: row.len(),
        });
    }
    for (j, (kind, &v)) in kinds.iter().zip(row).enumerate() {
        match *kind {
            ColumnKind::Numeric if !v.is_finite() => {
                return Err(Error::SchemaMismatch(format!("column {j}: non-finite value {v}")))
            }
            ColumnKind::Categorical { levels }
                if !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < levels) =>
            {
                return Err(Error::SchemaMismatch(format!(
                    "column {j}: level code {v} outside 0..{levels}"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// A fitted performance predictor.
pub trait Surrogate: Send + Sync {
    /// Raw predictions of every member (network or tree).
    fn member_predictions(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<PosteriorPrediction> {
        Ok(PosteriorPrediction::from_members(&self.member_predictions(x)?))
    }

    /// Same values as calling [`Surrogate::predict`] on each row.
    fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<PosteriorPrediction>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    NnEnsemble,
    RandomForest,
}

impl SurrogateKind {
    pub fn label(self) -> &'static str {
        match self {
            SurrogateKind::NnEnsemble => "nn",
            SurrogateKind::RandomForest => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurrogateConfig {
    Ensemble(EnsembleConfig),
    Forest(ForestConfig),
}

impl SurrogateConfig {
    pub fn default_for(kind: SurrogateKind) -> Self {
        match kind {
            SurrogateKind::NnEnsemble => SurrogateConfig::Ensemble(EnsembleConfig::default()),
            SurrogateKind::RandomForest => SurrogateConfig::Forest(ForestConfig::default()),
        }
    }

    pub fn kind(&self) -> SurrogateKind {
        match self {
            SurrogateConfig::Ensemble(_) => SurrogateKind::NnEnsemble,
            SurrogateConfig::Forest(_) => SurrogateKind::RandomForest,
        }
    }
}

pub fn fit_surrogate(
    cfg: &SurrogateConfig,
    data: &TrainingSet,
    rng: &mut Rng,
) -> Result<Box<dyn Surrogate>> {
    Ok(match cfg {
        SurrogateConfig::Ensemble(c) => Box::new(fit_ensemble(data, c, rng)?),
        SurrogateConfig::Forest(c) => Box::new(fit_forest(data, c, rng)?),
    })
}

/// Debug dump: one CSV row per probe with every member prediction.
pub fn write_member_dump<W: Write>(
    model: &dyn Surrogate,
    probes: &[Vec<f64>],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header_written = false;
    for (i, x) in probes.iter().enumerate() {
        let members = model.member_predictions(x)?;
        if !header_written {
            let mut header = vec!["probe".to_string()];
            header.extend((0..members.len()).map(|m| format!("member_{m}")));
            w.write_record(&header)?;
            header_written = true;
        }
        let mut rec = vec![i.to_string()];
        rec.extend(members.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
