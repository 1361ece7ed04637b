use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Model, MAX_Q};

const MAX_SWEEPS: usize = 100_000;
const CHANGE_TOL: f64 = 1e-8;
const KKT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub support: Model,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

fn soft(c: f64, lambda: f64) -> f64 {
    if c > lambda {
        c - lambda
    } else if c < -lambda {
        c + lambda
    } else {
        0.0
    }
}

/// Largest violation of the subgradient conditions of
/// `1/2 (b - t)' G (b - t) + lambda ||b||_1` at `b`.
pub fn lasso_kkt_residual(gram: &DMatrix<f64>, target: &DVector<f64>, lambda: f64, b: &DVector<f64>) -> f64 {
    let grad = gram * (b - target);
    (0..b.len())
        .map(|i| {
            if b[i] != 0.0 {
                (grad[i] + lambda * b[i].signum()).abs()
            } else {
                (grad[i].abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Support of the lasso fit of `X beta_bar` onto `X`, by cyclic coordinate descent.
pub fn lasso_summarize(gram: &DMatrix<f64>, target: &DVector<f64>, lambda: f64) -> Result<LassoFit> {
    let q = gram.nrows();
    if !gram.is_square() || target.len() != q {
        return Err(Error::Dimension("gram and target sizes disagree".into()));
    }
    if q > MAX_Q {
        return Err(Error::Capacity(format!("q = {q}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be a finite non-negative number, got {lambda}")));
    }
    let support_of = |b: &DVector<f64>| {
        let idx: Vec<usize> = (0..q).filter(|&i| b[i] != 0.0).collect();
        Model::from_indices(q, &idx).expect("indices in range")
    };
    if lambda == 0.0 && linalg::cholesky_lower(gram).is_ok() {
        let coef = target.clone();
        return Ok(LassoFit { support: support_of(&coef), kkt_residual: 0.0, sweeps: 0, coef });
    }
    let gt = gram * target;
    let scale = gt.amax().max(lambda).max(1.0);
    let mut b = DVector::zeros(q);
    let mut gb = DVector::<f64>::zeros(q);
    let mut max_change = f64::INFINITY;
    let mut kkt = f64::INFINITY;
    for sweep in 1..=MAX_SWEEPS {
        max_change = 0.0;
        for i in 0..q {
            let gii = gram[(i, i)];
            let new = if gii > 0.0 {
                let c = gt[i] - (gb[i] - gii * b[i]);
                soft(c, lambda) / gii
            } else {
                0.0
            };
            let delta = new - b[i];
            if delta != 0.0 {
                gb.axpy(delta, &gram.column(i), 1.0);
                b[i] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= CHANGE_TOL * b.amax().max(1.0) {
            kkt = lasso_kkt_residual(gram, target, lambda, &b);
            if kkt <= KKT_TOL * scale {
                return Ok(LassoFit { support: support_of(&b), coef: b, sweeps: sweep, kkt_residual: kkt });
            }
        }
    }
    Err(Error::Convergence { sweeps: MAX_SWEEPS, max_change, kkt })
}
