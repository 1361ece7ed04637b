use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::model::Model;

/// Model-space prior `pi(gamma)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelPrior {
    UniformOverModels,
    /// `pi(|gamma|) = 1/(q+1)`, spread evenly over models of each size.
    UniformOverSizes,
    Bernoulli { theta: f64 },
    BetaBinomial { a: f64, b: f64 },
    /// Bernoulli(`theta1`) on the first `p` covariates and Bernoulli(`theta2`)
    /// on the `k` duplicates, with `theta2` from [`dilution_theta2`].
    Dilution { theta1: f64, p: usize, k: usize },
}

fn check_prob(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_pos(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

impl ModelPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelPrior::UniformOverModels | ModelPrior::UniformOverSizes => Ok(()),
            ModelPrior::Bernoulli { theta } => check_prob(theta, "theta"),
            ModelPrior::BetaBinomial { a, b } => {
                check_pos(a, "a")?;
                check_pos(b, "b")
            }
            ModelPrior::Dilution { theta1, k, .. } => {
                check_prob(theta1, "theta1")?;
                if k == 0 {
                    return Err(Error::Domain("dilution needs at least one duplicate".into()));
                }
                Ok(())
            }
        }
    }

    /// Checks that the prior can be evaluated over `q` covariates.
    pub fn validate_for(&self, q: usize) -> Result<()> {
        self.validate()?;
        if let ModelPrior::Dilution { p, k, .. } = *self {
            if p + k != q {
                return Err(Error::Dimension(format!(
                    "dilution prior covers p + k = {} covariates, design has {q}",
                    p + k
                )));
            }
        }
        Ok(())
    }
}

fn ln_bernoulli(theta: f64, included: usize, excluded: usize) -> f64 {
    included as f64 * theta.ln() + excluded as f64 * (-theta).ln_1p()
}

/// `log pi(gamma)`.
pub fn log_model_prior_mass(prior: &ModelPrior, model: &Model) -> Result<f64> {
    let q = model.q();
    prior.validate_for(q)?;
    let s = model.size();
    Ok(match *prior {
        ModelPrior::UniformOverModels => -(q as f64) * std::f64::consts::LN_2,
        ModelPrior::UniformOverSizes => -((q + 1) as f64).ln() - ln_binomial(q as u64, s as u64),
        ModelPrior::Bernoulli { theta } => ln_bernoulli(theta, s, q - s),
        ModelPrior::BetaBinomial { a, b } => {
            ln_beta(s as f64 + a, (q - s) as f64 + b) - ln_beta(a, b)
        }
        ModelPrior::Dilution { theta1, p, k } => {
            let theta2 = dilution_theta2(theta1, k)?;
            let s1 = model.count_in(0, p);
            let s2 = s - s1;
            ln_bernoulli(theta1, s1, p - s1) + ln_bernoulli(theta2, s2, k - s2)
        }
    })
}

/// `pi(gamma)`.
pub fn model_prior_mass(prior: &ModelPrior, model: &Model) -> Result<f64> {
    Ok(log_model_prior_mass(prior, model)?.exp())
}

/// Prior mass of the collective `M_{gamma1,x}` (models with `gamma1` on the
/// first `p` covariates and at least one of `k` duplicates) or, when
/// `include_x` is false, of `M_{gamma1,0}` (no duplicate included).
pub fn collective_prior_mass(prior: &ModelPrior, gamma1: &Model, k: usize, include_x: bool) -> Result<f64> {
    prior.validate()?;
    if include_x && k == 0 {
        return Err(Error::Domain("a collective including x needs k >= 1".into()));
    }
    let p = gamma1.q();
    let i = gamma1.size();
    let bernoulli = |theta: f64| {
        let base = ln_bernoulli(theta, i, p - i).exp();
        let none = (k as f64 * (-theta).ln_1p()).exp();
        if include_x {
            base * -(k as f64 * (-theta).ln_1p()).exp_m1()
        } else {
            base * none
        }
    };
    Ok(match *prior {
        ModelPrior::UniformOverModels => bernoulli(0.5),
        ModelPrior::Bernoulli { theta } => bernoulli(theta),
        ModelPrior::UniformOverSizes => {
            let q = p + k;
            let per_size = |size: usize| (-((q + 1) as f64).ln() - ln_binomial(q as u64, size as u64)).exp();
            if include_x {
                (1..=k)
                    .map(|j| ln_binomial(k as u64, j as u64).exp() * per_size(i + j))
                    .sum()
            } else {
                per_size(i)
            }
        }
        ModelPrior::BetaBinomial { a, b } => {
            let ia = i as f64 + a;
            let without = ln_beta(ia, (p + k - i) as f64 + b) - ln_beta(a, b);
            if include_x {
                let head = ln_beta(ia, (p - i) as f64 + b) - ln_beta(a, b);
                head.exp() * -(without - head).exp_m1()
            } else {
                without.exp()
            }
        }
        ModelPrior::Dilution { theta1, p: pd, k: kd } => {
            if pd != p || kd != k {
                return Err(Error::Dimension(format!(
                    "dilution prior is for p={pd}, k={kd}; asked about p={p}, k={k}"
                )));
            }
            let base = ln_bernoulli(theta1, i, p - i).exp();
            if include_x {
                base * theta1
            } else {
                base * (1.0 - theta1)
            }
        }
    })
}

/// Prior odds `pi(M_{gamma1,x}) / pi(M_{gamma1,0})` for `|gamma1| = gamma1_size`.
pub fn collective_prior_odds(prior: &ModelPrior, gamma1_size: usize, p: usize, k: usize) -> Result<f64> {
    prior.validate()?;
    if gamma1_size > p {
        return Err(Error::Dimension(format!("|gamma1| = {gamma1_size} exceeds p = {p}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    Ok(match *prior {
        ModelPrior::UniformOverModels => (k as f64 * std::f64::consts::LN_2).exp_m1(),
        ModelPrior::Bernoulli { theta } => (-(k as f64) * (-theta).ln_1p()).exp_m1(),
        ModelPrior::BetaBinomial { a, b } => beta_binomial_odds_product(gamma1_size, a, b, p, k) - 1.0,
        ModelPrior::Dilution { theta1, .. } => theta1 / (1.0 - theta1),
        ModelPrior::UniformOverSizes => {
            let g1 = Model::from_indices(p, &(0..gamma1_size).collect::<Vec<_>>())?;
            collective_prior_mass(prior, &g1, k, true)? / collective_prior_mass(prior, &g1, k, false)?
        }
    })
}

/// `prod_{j=1}^{k} (1 + (i+a)/(p+b-i+j-1))`, one plus the beta-binomial collective odds.
pub fn beta_binomial_odds_product(i: usize, a: f64, b: f64, p: usize, k: usize) -> f64 {
    (1..=k)
        .map(|j| 1.0 + (i as f64 + a) / (p as f64 + b - i as f64 + j as f64 - 1.0))
        .product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxOrder {
    First,
    Second,
}

/// Large-`p` approximation of the beta-binomial odds product, with the exact value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddsApproximation {
    pub approx: f64,
    pub exact: f64,
    pub error: f64,
}

/// The second-order constant `C = -(i+a)[b - 1 - i + (i+a+1)/2]`.
pub fn odds_second_order_constant(i: usize, a: u32, b: u32) -> f64 {
    let ia = i as f64 + a as f64;
    -ia * (b as f64 - 1.0 - i as f64 + (ia + 1.0) / 2.0)
}

/// Approximates `prod_{j=1}^{k}(1 + (i+a)/(p+b-i+j-1))` for large `p` with `i` fixed.
pub fn collective_odds_approx(i: usize, a: u32, b: u32, p: usize, k: usize, order: ApproxOrder) -> Result<OddsApproximation> {
    if p == 0 || a == 0 || b == 0 {
        return Err(Error::Domain("need p >= 1 and positive integer a, b".into()));
    }
    if i > p {
        return Err(Error::Dimension(format!("i = {i} exceeds p = {p}")));
    }
    let exact = beta_binomial_odds_product(i, a as f64, b as f64, p, k);
    let (pf, kf) = (p as f64, k as f64);
    let first = (1.0 + kf / pf).powf(i as f64 + a as f64);
    let approx = match order {
        ApproxOrder::First => first,
        ApproxOrder::Second => first * (1.0 + odds_second_order_constant(i, a, b) * kf / (pf * (pf + kf))),
    };
    Ok(OddsApproximation { approx, exact, error: exact - approx })
}

/// Per-duplicate inclusion probability that gives the whole duplicate block
/// the prior mass of a single covariate: `1 - (1 - theta1)^{1/k}`.
pub fn dilution_theta2(theta1: f64, k: usize) -> Result<f64> {
    check_prob(theta1, "theta1")?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    Ok(-((-theta1).ln_1p() / k as f64).exp_m1())
}
