use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coef::CoefPrior;
use crate::design::DesignStats;
use crate::error::{Error, Result};
use crate::marginals::fit_model;
use crate::model::{enumerate_models, Model};
use crate::priors::{log_model_prior_mass, ModelPrior};

/// Exact posterior over all `2^q` models, indexed by `Model::index`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub q: usize,
    pub models: Vec<Model>,
    pub probs: Vec<f64>,
    /// Log marginal of each model (empty when built from explicit probabilities).
    pub log_marginals: Vec<f64>,
    /// Marginal inclusion probabilities `pi_i`.
    pub incl: Vec<f64>,
    /// Joint inclusion probabilities `E[gamma gamma' | Y]`.
    pub pairwise: DMatrix<f64>,
    /// First index of the duplicate block, if one was declared.
    pub block: Option<usize>,
    /// `pi(gamma_2 != 0 | Y)` for the declared block.
    pub collective: Option<f64>,
}

impl PosteriorSummary {
    /// Builds the summary from explicit model probabilities in enumeration order.
    pub fn from_probabilities(q: usize, probs: Vec<f64>, block: Option<usize>) -> Result<Self> {
        let models = enumerate_models(q)?;
        if probs.len() != models.len() {
            return Err(Error::Dimension(format!("{} probabilities for {} models", probs.len(), models.len())));
        }
        if probs.iter().any(|p| !(0.0..=1.0 + 1e-12).contains(p)) {
            return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        if let Some(b) = block {
            if b > q {
                return Err(Error::Dimension(format!("block boundary {b} exceeds q = {q}")));
            }
        }
        Ok(summarize(models, probs, Vec::new(), block))
    }

    pub fn prob(&self, model: &Model) -> f64 {
        self.probs[model.index()]
    }

    /// Expectation of `f(gamma)` under the posterior.
    pub fn expect<F: Fn(&Model) -> f64>(&self, f: F) -> f64 {
        self.models.iter().zip(&self.probs).map(|(m, p)| p * f(m)).sum()
    }
}

fn summarize(models: Vec<Model>, probs: Vec<f64>, log_marginals: Vec<f64>, block: Option<usize>) -> PosteriorSummary {
    let q = models.first().map_or(0, |m| m.q());
    let mut incl = vec![0.0; q];
    let mut pairwise = DMatrix::zeros(q, q);
    let mut collective = block.map(|_| 0.0);
    for (m, &p) in models.iter().zip(&probs) {
        if p == 0.0 {
            continue;
        }
        let idx = m.indices();
        for (a, &i) in idx.iter().enumerate() {
            incl[i] += p;
            for &j in &idx[a..] {
                pairwise[(i, j)] += p;
            }
        }
        if let (Some(b), Some(c)) = (block, collective.as_mut()) {
            if m.count_in(b, q) > 0 {
                *c += p;
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            pairwise[(i, j)] = pairwise[(j, i)];
        }
    }
    PosteriorSummary { q, models, probs, log_marginals, incl, pairwise, block, collective }
}

/// Posterior probabilities `pi(gamma | Y)` by exhaustive enumeration.
pub fn posterior_summary(
    stats: &DesignStats,
    coef_prior: &CoefPrior,
    model_prior: &ModelPrior,
    block: Option<usize>,
) -> Result<PosteriorSummary> {
    coef_prior.validate_values()?;
    let q = stats.q();
    model_prior.validate_for(q)?;
    if let Some(b) = block {
        if b > q {
            return Err(Error::Dimension(format!("block boundary {b} exceeds q = {q}")));
        }
    }
    let models = enumerate_models(q)?;
    let scored: Vec<(f64, f64)> = models
        .par_iter()
        .map(|m| Ok((log_model_prior_mass(model_prior, m)?, fit_model(stats, m, coef_prior)?.log_marginal)))
        .collect::<Result<Vec<_>>>()?;
    let log_post: Vec<f64> = scored.iter().map(|(lp, lm)| lp + lm).collect();
    let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degenerate("every model has zero or undefined posterior weight".into()));
    }
    let weights: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / total).collect();
    let log_marginals = scored.into_iter().map(|(_, lm)| lm).collect();
    Ok(summarize(models, probs, log_marginals, block))
}

/// Scheme for [`inclusion_threshold_z2`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum ThresholdScheme {
    /// Equal prior probability for every model.
    UniformModels,
    /// Beta-binomial prior with the first-order odds `(1 + k/p)^{i+a} - 1`.
    BetaBinomialFirstOrder { i: usize, a: f64, p: usize },
    /// Any model prior, through its exact collective prior odds.
    PriorOdds { odds: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionThreshold {
    /// Threshold on `z^2` above which the duplicate block is included.
    pub z2: f64,
    /// True when the threshold is not positive, i.e. `x` is included for every `z`.
    pub always_included: bool,
}

/// Value of `z^2 = (x'y)^2` (unit-norm `x`, `g = n`) at which the collective
/// inclusion probability of `k` duplicates crosses 1/2.
pub fn inclusion_threshold_z2(n: usize, k: usize, sigma2: f64, scheme: ThresholdScheme) -> Result<InclusionThreshold> {
    if n == 0 || k == 0 {
        return Err(Error::Domain("need n >= 1 and k >= 1".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain("sigma^2 must be positive".into()));
    }
    let nf = n as f64;
    let ln_odds = match scheme {
        ThresholdScheme::UniformModels => (k as f64 * std::f64::consts::LN_2).exp_m1().ln(),
        ThresholdScheme::BetaBinomialFirstOrder { i, a, p } => {
            if p == 0 || !(a > 0.0) {
                return Err(Error::Domain("need p >= 1 and a > 0".into()));
            }
            ((i as f64 + a) * (k as f64 / p as f64).ln_1p()).exp_m1().ln()
        }
        ThresholdScheme::PriorOdds { odds } => {
            if !(odds > 0.0) || !odds.is_finite() {
                return Err(Error::Domain(format!("prior odds must be positive and finite, got {odds}")));
            }
            odds.ln()
        }
    };
    let z2 = 2.0 * sigma2 * (1.0 + 1.0 / nf) * (0.5 * nf.ln_1p() - ln_odds);
    Ok(InclusionThreshold { z2, always_included: z2 <= 0.0 })
}

/// Posterior probability of the duplicate collective given `gamma1`, for an
/// orthonormal design with unit-norm `x`, `g = n` and known `sigma2`.
pub fn collective_posterior_probability(prior_odds: f64, z2: f64, n: usize, sigma2: f64) -> Result<f64> {
    if n == 0 || !(sigma2 > 0.0) || !(z2 >= 0.0) || !(prior_odds >= 0.0) {
        return Err(Error::Domain("need n >= 1, sigma^2 > 0, z^2 >= 0 and non-negative prior odds".into()));
    }
    let nf = n as f64;
    let log_odds = prior_odds.ln() - 0.5 * nf.ln_1p() + nf * z2 / (2.0 * sigma2 * (1.0 + nf));
    Ok(1.0 / (1.0 + (-log_odds).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coef::{CoefPriorKind, SigmaMode};
    use crate::design::Normalization;
    use crate::marginals::marginal_likelihood;
    use crate::priors::model_prior_mass;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn known_g(g: f64) -> CoefPrior {
        CoefPrior { kind: CoefPriorKind::GPrior { g }, sigma: SigmaMode::Known { sigma2: 1.0 } }
    }

    #[test]
    fn symmetric_models_split_evenly() {
        // Two exchangeable covariates with equal signal: q=1 null vs full equal.
        let g: f64 = 3.0;
        // choose z with -0.5 ln(1+g) + g z^2 / (2(1+g)) = 0
        let z2 = (1.0 + g) / g * (1.0 + g).ln();
        let s = DesignStats::from_parts(10, DMatrix::identity(1, 1), DVector::from_vec(vec![z2.sqrt()]), 5.0, Normalization::UnitNorm).unwrap();
        let post = posterior_summary(&s, &known_g(g), &ModelPrior::UniformOverModels, None).unwrap();
        assert_relative_eq!(post.probs[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(post.probs[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn collective_matches_closed_form_under_uniform_prior() {
        let (g, k) = (10.0, 3usize);
        let s = DesignStats::duplicate_block(&[0.4, -1.2], 1.1, k, 6.0, 10).unwrap();
        let post = posterior_summary(&s, &known_g(g), &ModelPrior::UniformOverModels, Some(2)).unwrap();
        let mx = crate::marginals::marginal_factor_x(&s, &Model::null(5), 2, g, 1.0).unwrap();
        let c = ((1 << k) - 1) as f64 * mx;
        assert_relative_eq!(post.collective.unwrap(), c / (1.0 + c), epsilon = 1e-12);
        for i in 2..5 {
            assert!(post.collective.unwrap() >= post.incl[i]);
        }
    }

    #[test]
    fn inclusion_sums_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = DMatrix::from_fn(15, 4, |_, _| StandardNormal.sample(&mut rng));
        let y = &x * DVector::from_vec(vec![1.0, 0.0, 0.5, 0.0]) + DVector::from_fn(15, |_, _| StandardNormal.sample(&mut rng));
        let s = DesignStats::from_data(&x, &y).unwrap();
        let cp = CoefPrior::g_prior(15.0, SigmaMode::Jeffreys).unwrap();
        let mp = ModelPrior::BetaBinomial { a: 1.0, b: 2.0 };
        let post = posterior_summary(&s, &cp, &mp, Some(2)).unwrap();
        // brute force from scratch
        let ms = enumerate_models(4).unwrap();
        let w: Vec<f64> = ms
            .iter()
            .map(|m| model_prior_mass(&mp, m).unwrap() * marginal_likelihood(&s, m, &cp).unwrap().log_value.exp())
            .collect();
        let tot: f64 = w.iter().sum();
        assert_relative_eq!(post.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for i in 0..4 {
            let inc: f64 = ms.iter().zip(&w).filter(|(m, _)| m.contains(i)).map(|(_, w)| w / tot).sum();
            assert_relative_eq!(post.incl[i], inc, epsilon = 1e-12);
            for j in 0..4 {
                let joint: f64 = ms.iter().zip(&w).filter(|(m, _)| m.contains(i) && m.contains(j)).map(|(_, w)| w / tot).sum();
                assert_relative_eq!(post.pairwise[(i, j)], joint, epsilon = 1e-12);
            }
            assert_relative_eq!(post.pairwise[(i, i)], post.incl[i], epsilon = 1e-15);
        }
        let coll: f64 = ms.iter().zip(&w).filter(|(m, _)| m.count_in(2, 4) > 0).map(|(_, w)| w / tot).sum();
        assert_relative_eq!(post.collective.unwrap(), coll, epsilon = 1e-12);
    }

    #[test]
    fn collective_probability_matches_enumeration() {
        let (n, k, z) = (10usize, 3usize, 1.4f64);
        let s = DesignStats::duplicate_block(&[0.7], z, k, 20.0, n).unwrap();
        let prior = known_g(n as f64);
        let post = posterior_summary(&s, &prior, &ModelPrior::UniformOverModels, Some(1)).unwrap();
        let odds = 2f64.powi(k as i32) - 1.0;
        let got = collective_posterior_probability(odds, z * z, n, 1.0).unwrap();
        assert_relative_eq!(got, post.collective.unwrap(), epsilon = 1e-12);
        let t = inclusion_threshold_z2(n, k, 1.0, ThresholdScheme::PriorOdds { odds: 0.5 }).unwrap();
        assert_relative_eq!(collective_posterior_probability(0.5, t.z2, n, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(inclusion_threshold_z2(n, k, 1.0, ThresholdScheme::PriorOdds { odds: 0.0 }).is_err());
    }

    #[test]
    fn threshold_examples() {
        let t = inclusion_threshold_z2(100, 1, 1.0, ThresholdScheme::UniformModels).unwrap();
        assert_relative_eq!(t.z2, 1.01 * 101f64.ln(), epsilon = 1e-12);
        assert!((t.z2 - 4.66127).abs() < 1e-4);
        assert!(!t.always_included);
        // 2^k - 1 > sqrt(101) for k = 4
        let t = inclusion_threshold_z2(100, 4, 1.0, ThresholdScheme::UniformModels).unwrap();
        assert!(t.always_included && t.z2 < 0.0);
        let uni = inclusion_threshold_z2(100, 40, 1.0, ThresholdScheme::UniformModels).unwrap();
        let bb = inclusion_threshold_z2(100, 40, 1.0, ThresholdScheme::BetaBinomialFirstOrder { i: 0, a: 1.0, p: 10 }).unwrap();
        assert!(bb.z2 > uni.z2 + 20.0, "{} vs {}", bb.z2, uni.z2);
    }

    #[test]
    fn threshold_root_matches_posterior_crossing() {
        // bisection on z for collective = 0.5 on an orthonormal duplicate design
        for &(n, k, p) in &[(100usize, 1usize, 0usize), (10, 2, 1), (50, 3, 2)] {
            let t = inclusion_threshold_z2(n, k, 1.0, ThresholdScheme::UniformModels).unwrap();
            let head: Vec<f64> = (0..p).map(|i| 0.3 * (i + 1) as f64).collect();
            let coll = |z: f64| {
                let yty = head.iter().map(|v| v * v).sum::<f64>() + z * z + 1.0;
                let s = DesignStats::duplicate_block(&head, z, k, yty, n).unwrap();
                posterior_summary(&s, &known_g(n as f64), &ModelPrior::UniformOverModels, Some(p)).unwrap().collective.unwrap()
            };
            let (mut lo, mut hi) = (0.0, 20.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if coll(mid) > 0.5 { hi = mid } else { lo = mid }
            }
            assert_relative_eq!(lo * lo, t.z2, max_relative = 1e-9);
        }
    }

    #[test]
    fn duplicate_prior_inclusion_under_uniform() {
        for k in 1..6 {
            let q = 2 + k;
            let s = DesignStats::duplicate_block(&[0.0, 0.0], 0.0, k, 1.0, 10).unwrap();
            let flat = CoefPrior { kind: CoefPriorKind::GPrior { g: 1e-12 }, sigma: SigmaMode::Known { sigma2: 1.0 } };
            let post = posterior_summary(&s, &flat, &ModelPrior::UniformOverModels, Some(2)).unwrap();
            assert_eq!(post.q, q);
            assert_relative_eq!(post.collective.unwrap(), 1.0 - 0.5f64.powi(k as i32), epsilon = 1e-10);
        }
    }

    #[test]
    fn orthogonal_null_column_leaves_others_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let q = rng.gen_range(1..5);
            let z: Vec<f64> = (0..q).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let yty = z.iter().map(|v| v * v).sum::<f64>() + 2.0;
            let s1 = DesignStats::from_parts(20, DMatrix::identity(q, q), DVector::from_vec(z.clone()), yty, Normalization::UnitNorm).unwrap();
            let z2: Vec<f64> = z.iter().copied().chain([0.0]).collect();
            let s2 = DesignStats::from_parts(20, DMatrix::identity(q + 1, q + 1), DVector::from_vec(z2), yty, Normalization::UnitNorm).unwrap();
            for mp in [ModelPrior::UniformOverModels, ModelPrior::Bernoulli { theta: 0.3 }] {
                let a = posterior_summary(&s1, &known_g(20.0), &mp, None).unwrap();
                let b = posterior_summary(&s2, &known_g(20.0), &mp, None).unwrap();
                for i in 0..q {
                    assert_relative_eq!(a.incl[i], b.incl[i], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn from_probabilities_validation() {
        assert!(PosteriorSummary::from_probabilities(1, vec![0.5, 0.4], None).is_err());
        let p = PosteriorSummary::from_probabilities(2, vec![0.1, 0.2, 0.3, 0.4], Some(1)).unwrap();
        assert_relative_eq!(p.incl[0], 0.6);
        assert_relative_eq!(p.incl[1], 0.7);
        assert_relative_eq!(p.collective.unwrap(), 0.7);
        assert_relative_eq!(p.pairwise[(0, 1)], 0.4);
    }
}
