//! Acquisition functions over posterior predictions. All are maximized.

use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

use crate::seed::Rng;
use crate::surrogates::PosteriorPrediction;

/// Standard deviations below this are treated as zero.
pub const SD_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    /// Independent Thompson sampling: one normal draw per candidate.
    Its,
    /// Expected improvement over the best observed accuracy.
    Ei,
    /// Posterior mean only.
    ConstMean,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 3] = [
        AcquisitionKind::Its,
        AcquisitionKind::Ei,
        AcquisitionKind::ConstMean,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AcquisitionKind::Its => "its",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::ConstMean => "const_mean",
        }
    }

    /// Scores one candidate. Only ITS consumes randomness.
    pub fn evaluate(self, pred: &PosteriorPrediction, ctx: &mut AcquisitionContext) -> f64 {
        match self {
            AcquisitionKind::Its => acq_its(pred, ctx),
            AcquisitionKind::Ei => acq_ei(pred, ctx),
            AcquisitionKind::ConstMean => acq_const_mean(pred, ctx),
        }
    }
}

/// State shared by the candidates of one proposal round.
#[derive(Debug, Clone)]
pub struct AcquisitionContext {
    /// Best true accuracy observed so far.
    pub y_max: f64,
    /// Stream for Thompson draws, owned by the round.
    pub rng: Rng,
}

impl AcquisitionContext {
    pub fn new(y_max: f64, rng: Rng) -> Self {
        Self { y_max, rng }
    }
}

pub fn acq_its(pred: &PosteriorPrediction, ctx: &mut AcquisitionContext) -> f64 {
    let z: f64 = StandardNormal.sample(&mut ctx.rng);
    if pred.sd < SD_EPSILON {
        pred.mean
    } else {
        pred.mean + pred.sd * z
    }
}

pub fn acq_ei(pred: &PosteriorPrediction, ctx: &AcquisitionContext) -> f64 {
    expected_improvement(pred.mean, pred.sd, ctx.y_max)
}

pub fn acq_const_mean(pred: &PosteriorPrediction, _ctx: &AcquisitionContext) -> f64 {
    pred.mean
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E[max(Y - y_max, 0)]` for `Y ~ N(mean, sd^2)`.
pub fn expected_improvement(mean: f64, sd: f64, y_max: f64) -> f64 {
    let gap = mean - y_max;
    if sd < SD_EPSILON {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (sd * (z * normal_cdf(z) + normal_pdf(z))).max(0.0)
}
