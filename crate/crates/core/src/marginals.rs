use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coef::{CoefPrior, CoefPriorKind, SigmaMode};
use crate::design::DesignStats;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{embed_coefficients, Model};

/// Relative size of `x'(I - P_B)x` below which `x` is treated as lying in span(B).
pub const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Log density of `Y` (known sigma).
    Density,
    /// Log Bayes factor against the null model (Jeffreys sigma).
    BayesFactorVsNull,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalValue {
    pub log_value: f64,
    pub mode: MarginalMode,
}

/// Log marginal and conditional posterior mean of one model.
pub(crate) struct ModelFit {
    pub log_marginal: f64,
    /// `H_gamma beta_hat_gamma` as a q-vector.
    pub mean: DVector<f64>,
}

fn log_gaussian_density(n: usize, sigma2: f64, logdet: f64, yty: f64, quad: f64) -> f64 {
    let nf = n as f64;
    -0.5 * nf * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * logdet - (yty - quad) / (2.0 * sigma2)
}

/// Prior covariance `V` (relative to sigma^2) and the columns it acts on.
fn gaussian_prior_cov(stats: &DesignStats, model: &Model, kind: &CoefPriorKind) -> Result<(Model, DMatrix<f64>)> {
    let q = stats.q();
    match kind {
        CoefPriorKind::IndependentNormal { variance } => {
            let m = model.size();
            Ok((*model, DMatrix::identity(m, m) * *variance))
        }
        CoefPriorKind::SpikeSlab { v0, v1 } => {
            let diag = DVector::from_fn(q, |i, _| if model.contains(i) { *v1 } else { *v0 });
            Ok((Model::full(q), DMatrix::from_diagonal(&diag)))
        }
        CoefPriorKind::RescaledG { d } => {
            if d.len() != q {
                return Err(Error::Dimension(format!(
                    "rescaled g-prior has {} diagonal entries for {q} covariates",
                    d.len()
                )));
            }
            let idx = model.indices();
            if idx.is_empty() {
                return Ok((*model, DMatrix::zeros(0, 0)));
            }
            let t = linalg::cholesky_upper(&stats.sub_gram(model))?;
            let t_inv = t
                .solve_upper_triangular(&DMatrix::identity(idx.len(), idx.len()))
                .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
            let dg = DMatrix::from_diagonal(&DVector::from_fn(idx.len(), |a, _| d[idx[a]]));
            Ok((*model, linalg::symmetrize(&(&t_inv * dg * t_inv.transpose()))))
        }
        CoefPriorKind::GPrior { .. } => unreachable!("g-prior handled in closed form"),
    }
}

pub(crate) fn fit_model(stats: &DesignStats, model: &Model, prior: &CoefPrior) -> Result<ModelFit> {
    stats.check_model(model)?;
    match (&prior.kind, prior.sigma) {
        (CoefPriorKind::GPrior { g }, sigma) => {
            let sol = linalg::gram_solve(&stats.sub_gram(model), &stats.sub_xty(model), true)?;
            let shrink = g / (1.0 + g);
            let mean = embed_coefficients(model, (sol.coef * shrink).as_slice())?;
            let r = sol.rank as f64;
            let log_marginal = match sigma {
                SigmaMode::Known { sigma2 } => log_gaussian_density(
                    stats.n(),
                    sigma2,
                    r * g.ln_1p(),
                    stats.yty(),
                    shrink * sol.quad,
                ),
                SigmaMode::Jeffreys => {
                    let df = stats.jeffreys_df();
                    let r2 = if stats.yty() > 0.0 { (sol.quad / stats.yty()).clamp(0.0, 1.0) } else { 0.0 };
                    0.5 * (df - r) * g.ln_1p() - 0.5 * df * (g * (1.0 - r2)).ln_1p()
                }
            };
            Ok(ModelFit { log_marginal, mean })
        }
        (kind, SigmaMode::Known { sigma2 }) => {
            let (cols, v) = gaussian_prior_cov(stats, model, kind)?;
            let fit = linalg::gaussian_fit(&stats.sub_gram(&cols), &v, &stats.sub_xty(&cols))?;
            let log_marginal = log_gaussian_density(stats.n(), sigma2, fit.logdet, stats.yty(), fit.quad);
            Ok(ModelFit { log_marginal, mean: embed_coefficients(&cols, fit.mean.as_slice())? })
        }
        (_, SigmaMode::Jeffreys) => Err(Error::Domain("the Jeffreys sigma mode requires a g-prior".into())),
    }
}

/// Log marginal likelihood `m(y | gamma)`.
///
/// With known sigma this is the log density of `Y`; in Jeffreys mode it is the
/// log Bayes factor of `gamma` against the null model.
pub fn marginal_likelihood(stats: &DesignStats, model: &Model, prior: &CoefPrior) -> Result<MarginalValue> {
    prior.validate_values()?;
    let fit = fit_model(stats, model, prior)?;
    if !fit.log_marginal.is_finite() {
        return Err(Error::Numeric(format!("non-finite log marginal for model {model}")));
    }
    let mode = match prior.sigma {
        SigmaMode::Known { .. } => MarginalMode::Density,
        SigmaMode::Jeffreys => MarginalMode::BayesFactorVsNull,
    };
    Ok(MarginalValue { log_value: fit.log_marginal, mode })
}

fn projection(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    if b.ncols() == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let l = linalg::cholesky_lower(&(b.transpose() * b))
        .map_err(|_| Error::Collinearity("B does not have full column rank".into()))?;
    let w = l.solve_lower_triangular(&b.transpose()).expect("nonsingular factor");
    Ok(linalg::symmetrize(&(w.transpose() * w)))
}

/// The projection `P_B + [P_B x - x][x'P_B - x'] / (x'x - x'P_B x)` onto span(B, x).
pub fn limiting_projection(b: &DMatrix<f64>, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != x.len() {
        return Err(Error::Dimension(format!("B has {} rows, x has {}", b.nrows(), x.len())));
    }
    let pb = projection(b)?;
    let xx = x.dot(x);
    let pbx = &pb * x;
    let denom = xx - x.dot(&pbx);
    if xx == 0.0 || denom < COLLINEARITY_TOL * xx {
        return Err(Error::Collinearity("x lies in span(B)".into()));
    }
    let u = pbx - x;
    Ok(pb + &u * u.transpose() / denom)
}

/// `log m(y|x)` of the factorization `m(y|gamma1, x) = m(y|gamma1) m(y|x)` under
/// the g-prior with known `sigma2`.
pub fn log_marginal_factor_x(stats: &DesignStats, gamma1: &Model, x_index: usize, g: f64, sigma2: f64) -> Result<f64> {
    stats.check_model(gamma1)?;
    if x_index >= stats.q() || gamma1.contains(x_index) {
        return Err(Error::Domain(format!("covariate {x_index} must be outside gamma1 = {gamma1}")));
    }
    if !(g > 0.0 && sigma2 > 0.0) {
        return Err(Error::Domain("g and sigma^2 must be positive".into()));
    }
    let idx = gamma1.indices();
    let gram = stats.gram();
    let gbx = DVector::from_fn(idx.len(), |a, _| gram[(idx[a], x_index)]);
    let gxx = gram[(x_index, x_index)];
    let zx = stats.xty()[x_index];
    let (num, den) = if idx.is_empty() {
        (zx, gxx)
    } else {
        let l = linalg::cholesky_lower(&stats.sub_gram(gamma1))
            .map_err(|_| Error::Collinearity("gamma1 columns are not linearly independent".into()))?;
        let zb = stats.sub_xty(gamma1);
        let w_z = linalg::chol_solve(&l, &zb);
        let w_x = linalg::chol_solve(&l, &gbx);
        (zx - gbx.dot(&w_z), gxx - gbx.dot(&w_x))
    };
    if gxx <= 0.0 || den < COLLINEARITY_TOL * gxx {
        return Err(Error::Collinearity("x lies in span(B)".into()));
    }
    Ok(-0.5 * g.ln_1p() + g * num * num / (2.0 * sigma2 * (1.0 + g) * den))
}

/// `m(y|x)`, the multiplicative factor contributed by `x` (not in log scale).
pub fn marginal_factor_x(stats: &DesignStats, gamma1: &Model, x_index: usize, g: f64, sigma2: f64) -> Result<f64> {
    Ok(log_marginal_factor_x(stats, gamma1, x_index, g, sigma2)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{perturbed_duplicate_design, Normalization};
    use crate::model::enumerate_models;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    fn known(kind: CoefPriorKind, sigma2: f64) -> CoefPrior {
        CoefPrior { kind, sigma: SigmaMode::Known { sigma2 } }
    }

    /// Direct log N(y; 0, sigma^2 (I + X V X')) with an explicit n x n covariance.
    fn direct_log_density(x: &DMatrix<f64>, v: &DMatrix<f64>, y: &DVector<f64>, sigma2: f64) -> f64 {
        let n = y.len();
        let cov = (DMatrix::identity(n, n) + x * v * x.transpose()) * sigma2;
        let chol = cov.cholesky().unwrap();
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let sol = chol.solve(y);
        -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + y.dot(&sol))
    }

    fn columns(x: &DMatrix<f64>, m: &Model) -> DMatrix<f64> {
        let idx = m.indices();
        DMatrix::from_fn(x.nrows(), idx.len(), |r, c| x[(r, idx[c])])
    }

    #[test]
    fn null_model_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = randn(&mut rng, 6, 2);
        let y = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let s = DesignStats::from_data(&x, &y).unwrap();
        let null = Model::null(2);
        let m = marginal_likelihood(&s, &null, &known(CoefPriorKind::GPrior { g: 4.0 }, 2.0)).unwrap();
        let direct = direct_log_density(&DMatrix::zeros(6, 0), &DMatrix::zeros(0, 0), &y, 2.0);
        assert_relative_eq!(m.log_value, direct, epsilon = 1e-12);
        assert_eq!(m.mode, MarginalMode::Density);
        let j = marginal_likelihood(&s, &null, &CoefPrior::g_prior(4.0, SigmaMode::Jeffreys).unwrap()).unwrap();
        assert_eq!(j.log_value, 0.0);
        assert_eq!(j.mode, MarginalMode::BayesFactorVsNull);
    }

    #[test]
    fn orthogonal_covariate_ratio() {
        let s = DesignStats::from_parts(
            10,
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![0.0]),
            3.0,
            Normalization::UnitNorm,
        )
        .unwrap();
        let pr = known(CoefPriorKind::GPrior { g: 3.0 }, 1.0);
        let m1 = marginal_likelihood(&s, &Model::full(1), &pr).unwrap().log_value;
        let m0 = marginal_likelihood(&s, &Model::null(1), &pr).unwrap().log_value;
        assert_relative_eq!((m1 - m0).exp(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_marginals_match_direct_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, q) = (9, 3);
        let x = randn(&mut rng, n, q);
        let y = randn(&mut rng, n, 1).column(0).into_owned();
        let s = DesignStats::from_data(&x, &y).unwrap();
        let sigma2 = 1.7;
        for m in enumerate_models(q).unwrap() {
            let xg = columns(&x, &m);
            let k = m.size();
            // g-prior: V = g (X_g'X_g)^{-1}
            let g = 5.0;
            let v = if k > 0 { (xg.transpose() * &xg).try_inverse().unwrap() * g } else { DMatrix::zeros(0, 0) };
            let got = marginal_likelihood(&s, &m, &known(CoefPriorKind::GPrior { g }, sigma2)).unwrap().log_value;
            assert_relative_eq!(got, direct_log_density(&xg, &v, &y, sigma2), epsilon = 1e-10);
            // independent normal
            let v = DMatrix::identity(k, k) * 0.8;
            let got = marginal_likelihood(&s, &m, &known(CoefPriorKind::IndependentNormal { variance: 0.8 }, sigma2)).unwrap().log_value;
            assert_relative_eq!(got, direct_log_density(&xg, &v, &y, sigma2), epsilon = 1e-10);
            // continuous spike and slab over all columns
            let diag = DVector::from_fn(q, |i, _| if m.contains(i) { 2.0 } else { 0.01 });
            let got = marginal_likelihood(&s, &m, &known(CoefPriorKind::SpikeSlab { v0: 0.01, v1: 2.0 }, sigma2)).unwrap().log_value;
            assert_relative_eq!(got, direct_log_density(&x, &DMatrix::from_diagonal(&diag), &y, sigma2), epsilon = 1e-10);
            // rescaled g with D = g I is the g-prior
            let got = marginal_likelihood(&s, &m, &known(CoefPriorKind::RescaledG { d: vec![g; q] }, sigma2)).unwrap().log_value;
            let v = if k > 0 { (xg.transpose() * &xg).try_inverse().unwrap() * g } else { DMatrix::zeros(0, 0) };
            assert_relative_eq!(got, direct_log_density(&xg, &v, &y, sigma2), epsilon = 1e-10);
        }
    }

    #[test]
    fn jeffreys_matches_sigma_integral() {
        // Oracle: integrate the known-sigma density against 1/sigma^2 numerically.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, q) = (12, 3);
        let x = randn(&mut rng, n, q);
        let y = &x * DVector::from_vec(vec![0.7, 0.0, -0.4]) + randn(&mut rng, n, 1).column(0);
        let s = DesignStats::from_data(&x, &y).unwrap();
        let g = 6.0;
        let integrate = |m: &Model| {
            // log integral over t = log sigma^2 on a fine grid, via log-sum-exp
            let (lo, hi, steps) = (-12.0, 12.0, 24_000);
            let h = (hi - lo) / steps as f64;
            let vals: Vec<f64> = (0..=steps)
                .map(|i| {
                    let t = lo + i as f64 * h;
                    marginal_likelihood(&s, m, &known(CoefPriorKind::GPrior { g }, t.exp())).unwrap().log_value
                })
                .collect();
            let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            mx + (vals.iter().map(|v| (v - mx).exp()).sum::<f64>() * h).ln()
        };
        let base = integrate(&Model::null(q));
        let pr = CoefPrior::g_prior(g, SigmaMode::Jeffreys).unwrap();
        for m in enumerate_models(q).unwrap() {
            let got = marginal_likelihood(&s, &m, &pr).unwrap().log_value;
            assert_relative_eq!(got, integrate(&m) - base, epsilon = 1e-6);
        }
    }

    #[test]
    fn jeffreys_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = randn(&mut rng, 10, 3);
        let y = randn(&mut rng, 10, 1).column(0).into_owned();
        let s1 = DesignStats::from_data(&x, &y).unwrap();
        let s2 = DesignStats::from_data(&x, &(&y * 37.5)).unwrap();
        let pr = CoefPrior::g_prior(10.0, SigmaMode::Jeffreys).unwrap();
        for m in enumerate_models(3).unwrap() {
            let a = marginal_likelihood(&s1, &m, &pr).unwrap().log_value;
            let b = marginal_likelihood(&s2, &m, &pr).unwrap().log_value;
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn singular_design_rejected_without_duplicates() {
        // Column 3 = column 1 + column 2: not an exact duplicate, so no pseudo-inverse.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = randn(&mut rng, 8, 3);
        let c = x.column(0) + x.column(1);
        x.set_column(2, &c);
        let y = randn(&mut rng, 8, 1).column(0).into_owned();
        let s = DesignStats::from_data(&x, &y).unwrap();
        let r = marginal_likelihood(&s, &Model::full(3), &known(CoefPriorKind::GPrior { g: 2.0 }, 1.0));
        assert!(matches!(r, Err(Error::Collinearity(_))), "{r:?}");
    }

    #[test]
    fn projection_simple_cases() {
        let x = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let p = limiting_projection(&DMatrix::zeros(3, 0), &x).unwrap();
        assert!((p - &x * x.transpose() / 9.0).amax() < 1e-15);
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let x = DVector::from_vec(vec![0.0, 0.0, 3.0, 4.0]);
        let p = limiting_projection(&b, &x).unwrap();
        let expect = &b * b.transpose() + &x * x.transpose() / 25.0;
        assert!((p - expect).amax() < 1e-15);
        let inside = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(limiting_projection(&b, &inside), Err(Error::Collinearity(_))));
    }

    /// Random `B`, `x` and orthonormal perturbations orthogonal to both.
    fn near_duplicate_setup(rng: &mut ChaCha8Rng, n: usize, p: usize, k: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let raw = randn(rng, n, p + 1 + k);
        let qr = raw.clone().qr();
        let qm = qr.q();
        let b = raw.columns(0, p).into_owned();
        let x = raw.column(p).into_owned();
        let deltas = qm.columns(p + 1, k).into_owned();
        (b, x, deltas)
    }

    fn hat(x: &DMatrix<f64>) -> DMatrix<f64> {
        x * (x.transpose() * x).try_inverse().unwrap() * x.transpose()
    }

    #[test]
    fn projection_properties_and_single_copy_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (b, x, deltas) = near_duplicate_setup(&mut rng, 8, 2, 1);
        let p = limiting_projection(&b, &x).unwrap();
        assert!((&p * &p - &p).amax() < 1e-10);
        assert!((&p - p.transpose()).amax() < 1e-10);
        assert!((p.trace() - 3.0).abs() < 1e-8);
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let xe = perturbed_duplicate_design(&b, &x, &deltas, eps).unwrap();
            let err = (hat(&xe) - &p).amax();
            assert!(err < 10.0 * eps, "eps={eps} err={err}");
            assert!(err < prev / 5.0);
            prev = err;
        }
    }

    #[test]
    fn projection_with_several_copies_keeps_difference_directions() {
        // With k >= 2 copies the column space keeps k-1 perturbation-difference
        // directions for every eps > 0; the finite-eps hat matrix converges to the
        // formula plus the projector onto those directions.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (n, k) = (8, 3);
        let (b, x, deltas) = near_duplicate_setup(&mut rng, n, 2, k);
        let p = limiting_projection(&b, &x).unwrap();
        let center = DMatrix::identity(k, k) - DMatrix::from_element(k, k, 1.0 / k as f64);
        let extra = &deltas * center * deltas.transpose();
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let h = hat(&perturbed_duplicate_design(&b, &x, &deltas, eps).unwrap());
            assert!((h.trace() - (2 + k) as f64).abs() < 1e-6);
            assert!((&h - &p).amax() > 0.1);
            let err = (&h - &p - &extra).amax();
            assert!(err < 100.0 * eps, "eps={eps} err={err}");
            assert!(err < prev / 5.0);
            prev = err;
        }
    }

    #[test]
    fn factor_x_examples() {
        let s = DesignStats::from_parts(10, DMatrix::identity(2, 2), DVector::from_vec(vec![1.3, 0.0]), 5.0, Normalization::UnitNorm).unwrap();
        let f = marginal_factor_x(&s, &Model::parse("10").unwrap(), 1, 3.0, 1.0).unwrap();
        assert_relative_eq!(f, 0.5, epsilon = 1e-15);
        let s = DesignStats::from_parts(10, DMatrix::identity(1, 1), DVector::from_vec(vec![0.8]), 5.0, Normalization::UnitNorm).unwrap();
        let f = marginal_factor_x(&s, &Model::null(1), 0, 3.0, 2.0).unwrap();
        assert_relative_eq!(f, 0.5 * (3.0f64 * 0.64 / (2.0 * 2.0 * 4.0)).exp(), epsilon = 1e-15);
        assert!(marginal_factor_x(&s, &Model::full(1), 0, 3.0, 1.0).is_err());
    }

    #[test]
    fn factor_x_reproduces_augmented_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (n, p, k) = (10, 2, 2);
        let (b, x, deltas) = near_duplicate_setup(&mut rng, n, p, k);
        let xe = perturbed_duplicate_design(&b, &x, &deltas, 1e-5).unwrap();
        let y = randn(&mut rng, n, 1).column(0).into_owned();
        let s = DesignStats::from_data(&xe, &y).unwrap();
        let (g, sigma2) = (10.0, 1.0);
        let pr = known(CoefPriorKind::GPrior { g }, sigma2);
        for bits in 0..(1u32 << p) {
            let g1 = Model::new(bits, p + k).unwrap();
            let with_x = Model::new(bits | 1 << p, p + k).unwrap();
            let ratio = (marginal_likelihood(&s, &with_x, &pr).unwrap().log_value
                - marginal_likelihood(&s, &g1, &pr).unwrap().log_value)
                .exp();
            // factor evaluated on the exact (eps = 0) column x
            let exact = perturbed_duplicate_design(&b, &x, &deltas, 0.0).unwrap();
            let s0 = DesignStats::from_data(&exact, &y).unwrap();
            let f = marginal_factor_x(&s0, &g1, p, g, sigma2).unwrap();
            assert!((ratio / f - 1.0).abs() < 1e-3, "bits={bits}: {ratio} vs {f}");
            // identity exact at eps = 0 where the augmented design has true duplicates
            let r0 = (marginal_likelihood(&s0, &with_x, &pr).unwrap().log_value
                - marginal_likelihood(&s0, &g1, &pr).unwrap().log_value)
                .exp();
            assert_relative_eq!(r0, f, max_relative = 1e-10);
        }
    }

    #[test]
    fn exact_duplicates_give_matched_g_prior_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (n, p, k) = (12, 2, 3);
        let (b, x, deltas) = near_duplicate_setup(&mut rng, n, p, k);
        let xd = perturbed_duplicate_design(&b, &x, &deltas, 0.0).unwrap();
        let y = randn(&mut rng, n, 1).column(0).into_owned();
        let s = DesignStats::from_data(&xd, &y).unwrap();
        for pr in [known(CoefPriorKind::GPrior { g: 12.0 }, 1.3), CoefPrior::g_prior(12.0, SigmaMode::Jeffreys).unwrap()] {
            for head in 0..(1u32 << p) {
                let vals: Vec<f64> = (1..(1u32 << k))
                    .map(|dup| {
                        let m = Model::new(head | dup << p, p + k).unwrap();
                        marginal_likelihood(&s, &m, &pr).unwrap().log_value
                    })
                    .collect();
                let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - vals.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(spread < 1e-10, "head={head} spread={spread}");
            }
        }
        // Under an independent prior the number of copies matters.
        let pr = known(CoefPriorKind::IndependentNormal { variance: 1.0 }, 1.0);
        let one = marginal_likelihood(&s, &Model::new(1 << p, p + k).unwrap(), &pr).unwrap().log_value;
        let three = marginal_likelihood(&s, &Model::new(7 << p, p + k).unwrap(), &pr).unwrap().log_value;
        assert!((one - three).abs() > 0.1);
    }
}
