//! Closed-form risk decompositions for duplicate-block and equicorrelated designs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::PosteriorSummary;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DuplicatePriorKind {
    GPrior { g: f64 },
    IndependentNormal { variance: f64 },
}

/// Risk of one model split into the head-block part `r1` and the duplicate-block part `r2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicateRisk {
    pub r1: f64,
    pub r2: f64,
}

impl DuplicateRisk {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2
    }
}

/// Risk decomposition for an orthonormal head of `p = z_head.len()` covariates
/// plus `k = q - p` exact copies of a unit covariate orthogonal to the head.
pub fn orthogonal_duplicate_risk(
    z_head: &[f64],
    z_dup: f64,
    post: &PosteriorSummary,
    kind: DuplicatePriorKind,
) -> Result<Vec<DuplicateRisk>> {
    let p = z_head.len();
    if post.q <= p {
        return Err(Error::Precondition(format!(
            "posterior over {} covariates leaves no duplicate block after {p} head covariates",
            post.q
        )));
    }
    if let Some(b) = post.block {
        if b != p {
            return Err(Error::Precondition(format!("posterior block starts at {b}, head has {p} covariates")));
        }
    }
    let q = post.q;
    // Head shrinkage and the duplicate-block functional f(j) = fitted sum of the j copies / z.
    let (head_shrink, f): (f64, Box<dyn Fn(usize) -> f64>) = match kind {
        DuplicatePriorKind::GPrior { g } => {
            if !(g > 0.0) {
                return Err(Error::Domain("g must be positive".into()));
            }
            let s = g / (1.0 + g);
            (s, Box::new(move |j| if j > 0 { s } else { 0.0 }))
        }
        DuplicatePriorKind::IndependentNormal { variance: t } => {
            if !(t > 0.0) {
                return Err(Error::Domain("variance must be positive".into()));
            }
            (t / (1.0 + t), Box::new(move |j| t * j as f64 / (1.0 + t * j as f64)))
        }
    };
    let mean_f = post.expect(|m| f(m.count_in(p, q)));
    Ok(post
        .models
        .iter()
        .map(|m| {
            let r1 = (0..p)
                .map(|i| {
                    let g = if m.contains(i) { 1.0 } else { 0.0 };
                    (head_shrink * z_head[i] * (g - post.incl[i])).powi(2)
                })
                .sum();
            let r2 = (z_dup * (f(m.count_in(p, q)) - mean_f)).powi(2);
            DuplicateRisk { r1, r2 }
        })
        .collect())
}

/// Constant `(g/(1+g))^2 / (1-r)^2` linking [`equicorrelated_risk`] to the generic risk.
pub fn equicorrelated_factor(g: f64, r: f64) -> f64 {
    (g / (1.0 + g)).powi(2) / (1.0 - r).powi(2)
}

/// Risk criterion for the Gram matrix `(1-r)I + r 11'` under the g-prior, up to
/// [`equicorrelated_factor`]: `(1-r)||B z||^2 + r (1'B z)^2` with
/// `B = diag(gamma - pi) - r(gamma gamma'/(1-r+r|gamma|) - Pi)` and
/// `Pi = E[gamma gamma'/(1-r+r|gamma|) | Y]`.
pub fn equicorrelated_risk(z: &[f64], r: f64, post: &PosteriorSummary) -> Result<Vec<f64>> {
    let p = z.len();
    if post.q != p {
        return Err(Error::Dimension(format!("{p} scores for a posterior over {} covariates", post.q)));
    }
    let lower = if p > 1 { -1.0 / (p as f64 - 1.0) } else { f64::NEG_INFINITY };
    if !(r > lower && r < 1.0) {
        return Err(Error::Domain(format!("r = {r} outside the positive definite range ({lower}, 1)")));
    }
    let zv = DVector::from_column_slice(z);
    let indicator = |m: &crate::model::Model| DVector::from_fn(p, |i, _| if m.contains(i) { 1.0 } else { 0.0 });
    let mut big_pi = DMatrix::zeros(p, p);
    for (m, &pr) in post.models.iter().zip(&post.probs) {
        if pr != 0.0 {
            let g = indicator(m);
            big_pi += (&g * g.transpose()) * (pr / (1.0 - r + r * m.size() as f64));
        }
    }
    let pi = DVector::from_column_slice(&post.incl);
    Ok(post
        .models
        .iter()
        .map(|m| {
            let g = indicator(m);
            let mut b = DMatrix::from_diagonal(&(&g - &pi));
            b -= (&g * g.transpose() / (1.0 - r + r * m.size() as f64) - &big_pi) * r;
            let bz = b * &zv;
            (1.0 - r) * bz.norm_squared() + r * bz.sum().powi(2)
        })
        .collect())
}
