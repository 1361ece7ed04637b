//! `geometry`, `study` and `collective` subcommands.

use medsel_core::geometry2d::{
    alpha_points, classify_case, euclidean_argmin, optimal_from_conditions, region_weights, risk_differences, AlphaPoints, GeomCase,
    RiskDifferences, WeightSystem, BOUNDARY_TOL, MODELS2,
};
use medsel_core::posterior::{collective_posterior_probability, inclusion_threshold_z2, InclusionThreshold, ThresholdScheme};
use medsel_core::priors::{collective_prior_mass, collective_prior_odds};
use medsel_core::study::{run_study, Scenario, StudyConfig, StudyTable};
use medsel_core::{Error, Model, ModelPrior};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Serialize)]
pub struct Weights {
    pub system: WeightSystem,
    pub vertices: [String; 3],
    pub weights: [f64; 3],
}

#[derive(Serialize)]
pub struct ProbabilityAnalysis {
    /// `[p00, p10, p01, p11]`
    pub probs: [f64; 4],
    pub inclusion: [f64; 2],
    pub alpha_bar: [f64; 2],
    /// Squared distances from `alpha_bar` in `[00, 10, 01, 11]` order.
    pub distances: [f64; 4],
    pub weights: Vec<Weights>,
    pub risk_differences: Option<RiskDifferences>,
    /// Optimal model from the closed-form conditions; `None` on a tie.
    pub optimal: Option<Model>,
    /// Contenders when the conditions are tied.
    pub tied: Vec<Model>,
    pub euclidean_optimal: Option<Model>,
    pub mpm: Model,
}

#[derive(Serialize)]
pub struct GeometryReport {
    pub r12: f64,
    pub r1y: f64,
    pub r2y: f64,
    pub case: GeomCase,
    pub alpha: AlphaPoints,
    pub midpoint: [f64; 2],
    pub analysis: Option<ProbabilityAnalysis>,
}

fn model2(bits: u32) -> Model {
    Model::new(bits, 2).expect("two-covariate model")
}

pub fn geometry(r12: f64, r1y: f64, r2y: f64, probs: Option<&[f64]>) -> CliResult<GeometryReport> {
    let case = classify_case(r12, r1y, r2y)?;
    let pts = alpha_points(r12, r1y, r2y)?;
    let analysis = match probs {
        None => None,
        Some(p) => {
            if p.len() != 4 {
                return Err(CliError::usage(format!("--probs needs four values p00,p10,p01,p11, got {}", p.len())));
            }
            let probs = [p[0], p[1], p[2], p[3]];
            let abar = pts.average(&probs);
            let distances = pts.distances(abar);
            let labels = |sys: WeightSystem| match sys {
                WeightSystem::W1 => ["00", "10", "11"],
                WeightSystem::W2 => ["00", "01", "11"],
                WeightSystem::W3 => ["10", "01", "E"],
                WeightSystem::W4 => ["00", "10", "E"],
                WeightSystem::W5 => ["01", "11", "E"],
            };
            let weights = WeightSystem::ALL
                .iter()
                .filter_map(|&sys| {
                    region_weights(abar, &pts, sys)
                        .ok()
                        .map(|w| Weights { system: sys, vertices: labels(sys).map(String::from), weights: w })
                })
                .collect();
            let (optimal, tied) = match optimal_from_conditions(probs, r12, r1y, r2y) {
                Ok(m) => (Some(m), Vec::new()),
                Err(Error::Tie(v)) => (None, v),
                Err(Error::Degenerate(_)) => (None, Vec::new()),
                Err(e) => return Err(e.into()),
            };
            let scale = pts.all().iter().map(|v| v[0] * v[0] + v[1] * v[1]).fold(0.0, f64::max);
            let inclusion = [probs[1] + probs[3], probs[2] + probs[3]];
            let mpm = model2((inclusion[0] > 0.5) as u32 | ((inclusion[1] > 0.5) as u32) << 1);
            Some(ProbabilityAnalysis {
                probs,
                inclusion,
                alpha_bar: abar,
                distances,
                weights,
                risk_differences: risk_differences(&pts, abar).ok(),
                optimal,
                tied,
                euclidean_optimal: euclidean_argmin(&distances, BOUNDARY_TOL * scale).map(|i| model2(MODELS2[i])),
                mpm,
            })
        }
    };
    Ok(GeometryReport { r12, r1y, r2y, case, midpoint: pts.e(), alpha: pts, analysis })
}

pub fn study(scenario: &str, sizes: Vec<usize>) -> CliResult<StudyTable> {
    let cfg = StudyConfig::new(Scenario::parse(scenario)?, sizes);
    Ok(run_study(&cfg)?)
}

#[derive(Serialize)]
pub struct Decision {
    pub z: f64,
    pub n: usize,
    pub sigma2: f64,
    pub threshold: InclusionThreshold,
    pub collective_probability: f64,
    pub include: bool,
}

#[derive(Serialize)]
pub struct CollectiveReport {
    pub model_prior: ModelPrior,
    pub p: usize,
    pub k: usize,
    pub gamma1_size: usize,
    /// Prior mass of models with `gamma1` and at least one duplicate.
    pub mass_with_x: Option<f64>,
    /// Prior mass of `gamma1` with no duplicate.
    pub mass_without_x: Option<f64>,
    pub prior_odds: f64,
    /// Threshold on `z^2` at the given `n` (needs `--n`).
    pub threshold: Option<InclusionThreshold>,
    pub decision: Option<Decision>,
}

pub struct CollectiveArgs {
    pub p: usize,
    pub k: usize,
    pub prior: ModelPrior,
    pub gamma1_size: usize,
    pub z: Option<f64>,
    pub n: Option<usize>,
    pub sigma2: f64,
}

pub fn collective(a: CollectiveArgs) -> CliResult<CollectiveReport> {
    if a.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let odds = collective_prior_odds(&a.prior, a.gamma1_size, a.p, a.k)?;
    // Masses need an explicit model over the head block, so p must fit the mask.
    let g1 = Model::from_indices(a.p, &(0..a.gamma1_size).collect::<Vec<_>>()).ok();
    let mass = |include_x| g1.as_ref().and_then(|g1| collective_prior_mass(&a.prior, g1, a.k, include_x).ok());
    let (with_x, without_x) = (mass(true), mass(false));
    let threshold = match a.n {
        Some(n) => Some(inclusion_threshold_z2(n, a.k, a.sigma2, ThresholdScheme::PriorOdds { odds })?),
        None => None,
    };
    let decision = match (a.z, a.n, threshold) {
        (Some(z), Some(n), Some(t)) => {
            let prob = collective_posterior_probability(odds, z * z, n, a.sigma2)?;
            Some(Decision { z, n, sigma2: a.sigma2, threshold: t, collective_probability: prob, include: prob > 0.5 })
        }
        (Some(_), None, _) => return Err(CliError::usage("--z needs --n")),
        _ => None,
    };
    Ok(CollectiveReport {
        model_prior: a.prior,
        p: a.p,
        k: a.k,
        gamma1_size: a.gamma1_size,
        mass_with_x: with_x,
        mass_without_x: without_x,
        prior_odds: odds,
        threshold,
        decision,
    })
}
