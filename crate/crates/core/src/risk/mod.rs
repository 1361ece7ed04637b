//! Posterior means, the predictive risk `R(gamma)` and model selection.

mod closed_form;
mod lasso;
mod nested;

pub use closed_form::{equicorrelated_factor, equicorrelated_risk, orthogonal_duplicate_risk, DuplicatePriorKind, DuplicateRisk};
pub use lasso::{lasso_kkt_residual, lasso_summarize, LassoFit};
pub use nested::{nested_transform, NestedTransform};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coef::CoefPrior;
use crate::design::DesignStats;
use crate::error::{Error, Result};
use crate::marginals::fit_model;
use crate::model::{Model, MAX_Q};
use crate::posterior::PosteriorSummary;

/// Relative tolerance under which two risks (or probabilities) count as tied.
pub const TIE_TOL: f64 = 1e-12;
/// Distance from 1/2 at which an inclusion probability triggers a boundary warning.
pub const MPM_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorMeans {
    /// `H_gamma beta_hat_gamma` for every model, by `Model::index`.
    pub conditional: Vec<DVector<f64>>,
    /// Model-averaged mean `beta_bar`.
    pub overall: DVector<f64>,
}

/// Conditional posterior means of every model and their posterior average.
pub fn posterior_means(stats: &DesignStats, post: &PosteriorSummary, prior: &CoefPrior) -> Result<PosteriorMeans> {
    prior.validate_values()?;
    if post.q != stats.q() {
        return Err(Error::Dimension(format!("posterior over {} covariates, design has {}", post.q, stats.q())));
    }
    let conditional = post
        .models
        .par_iter()
        .map(|m| Ok(fit_model(stats, m, prior)?.mean))
        .collect::<Result<Vec<_>>>()?;
    Ok(average(conditional, &post.probs))
}

/// Averages conditional means with the given model probabilities.
pub fn average(conditional: Vec<DVector<f64>>, probs: &[f64]) -> PosteriorMeans {
    let q = conditional.first().map_or(0, |v| v.len());
    let mut overall = DVector::zeros(q);
    for (v, &p) in conditional.iter().zip(probs) {
        if p != 0.0 {
            overall.axpy(p, v, 1.0);
        }
    }
    PosteriorMeans { conditional, overall }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub models: Vec<Model>,
    /// `R(gamma)` by `Model::index`.
    pub risk: Vec<f64>,
    /// `R(gamma) / R(optimal)`.
    pub relative: Vec<f64>,
    pub optimal: Model,
    pub mpm: Model,
    pub hpm: Model,
    /// Set when some inclusion probability is within 1e-9 of 1/2.
    pub mpm_boundary: bool,
}

fn tie_break(cands: impl Iterator<Item = Model>) -> Option<Model> {
    cands.min_by_key(|m| (m.size(), m.bits()))
}

/// Model with the smallest value among `cands`, ties (relative `TIE_TOL`) to
/// the smaller model and then the lower mask.
fn argmin_tied(values: &[f64], models: &[Model], cands: &[usize]) -> Option<Model> {
    let best = cands.iter().map(|&i| values[i]).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let scale = cands.iter().map(|&i| values[i].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    tie_break(cands.iter().filter(|&&i| values[i] <= best + TIE_TOL * scale).map(|&i| models[i]))
}

/// The median probability model: covariates with inclusion probability above 1/2.
pub fn median_probability_model(post: &PosteriorSummary) -> (Model, bool) {
    let mut boundary = false;
    let idx: Vec<usize> = (0..post.q)
        .filter(|&i| {
            if (post.incl[i] - 0.5).abs() <= MPM_BOUNDARY_TOL {
                boundary = true;
            }
            post.incl[i] > 0.5
        })
        .collect();
    if boundary {
        log::warn!("an inclusion probability is within {MPM_BOUNDARY_TOL:e} of 1/2; the median model is on a boundary");
    }
    (Model::from_indices(post.q, &idx).expect("indices in range"), boundary)
}

/// The highest posterior model with the parsimony tie-break.
pub fn highest_posterior_model(post: &PosteriorSummary) -> Model {
    let neg: Vec<f64> = post.probs.iter().map(|p| -p).collect();
    let all: Vec<usize> = (0..post.models.len()).collect();
    argmin_tied(&neg, &post.models, &all).expect("nonempty posterior")
}

/// `R(gamma) = (H beta_hat - beta_bar)' X'X (H beta_hat - beta_bar)` for every model.
pub fn risk_report(stats: &DesignStats, post: &PosteriorSummary, means: &PosteriorMeans) -> Result<RiskReport> {
    let q = stats.q();
    if post.q != q || means.overall.len() != q || means.conditional.len() != post.models.len() {
        return Err(Error::Dimension("posterior, means and design disagree in size".into()));
    }
    if q > MAX_Q {
        return Err(Error::Capacity(format!("q = {q}")));
    }
    let gram = stats.gram();
    let risk: Vec<f64> = means
        .conditional
        .par_iter()
        .map(|c| {
            let d = c - &means.overall;
            d.dot(&(gram * &d))
        })
        .collect();
    let all: Vec<usize> = (0..risk.len()).collect();
    let optimal = argmin_tied(&risk, &post.models, &all)
        .ok_or_else(|| Error::Numeric("risks are not finite".into()))?;
    let r_opt = risk[optimal.index()];
    let relative = risk
        .iter()
        .map(|&r| if r_opt > 0.0 { r / r_opt } else if r <= 0.0 { 1.0 } else { f64::INFINITY })
        .collect();
    let (mpm, mpm_boundary) = median_probability_model(post);
    Ok(RiskReport { models: post.models.clone(), risk, relative, optimal, mpm, hpm: highest_posterior_model(post), mpm_boundary })
}

impl RiskReport {
    pub fn risk_of(&self, m: &Model) -> f64 {
        self.risk[m.index()]
    }

    /// Risk-minimizing model within `candidates`, with the usual tie-break.
    pub fn optimal_among(&self, candidates: &[Model]) -> Option<Model> {
        let idx: Vec<usize> = candidates.iter().map(|m| m.index()).collect();
        argmin_tied(&self.risk, &self.models, &idx)
    }
}
