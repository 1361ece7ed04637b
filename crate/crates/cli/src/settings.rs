//! Parsers for the prior and setting strings accepted on the command line.

use medsel_core::{CoefPriorKind, ModelPrior, SigmaMode};

use crate::error::{CliError, CliResult};

fn numbers(s: &str, what: &str, count: usize) -> CliResult<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::usage(format!("{what}: '{v}' is not a number"))))
        .collect::<CliResult<_>>()?;
    if vals.len() != count {
        return Err(CliError::usage(format!("{what} takes {count} value(s), got '{s}'")));
    }
    Ok(vals)
}

fn count(v: f64, what: &str) -> CliResult<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(CliError::usage(format!("{what} must be a non-negative integer, got {v}")))
    }
}

/// `auto` or a positive number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GSetting {
    Auto,
    Value(f64),
}

pub fn parse_g(s: &str) -> CliResult<GSetting> {
    if s == "auto" {
        return Ok(GSetting::Auto);
    }
    let g = numbers(s, "--g", 1)?[0];
    if g <= 0.0 || !g.is_finite() {
        return Err(CliError::usage(format!("--g must be positive, got {s}")));
    }
    Ok(GSetting::Value(g))
}

/// `gprior`, `indep[:TAU]` or `spikeslab:V0,V1`; `g` fills in the g-prior.
pub fn parse_coef_prior(s: &str, g: f64) -> CliResult<CoefPriorKind> {
    let (head, rest) = s.split_once(':').map_or((s, None), |(h, r)| (h, Some(r)));
    match (head, rest) {
        ("gprior", None) => Ok(CoefPriorKind::GPrior { g }),
        ("indep", None) => Ok(CoefPriorKind::IndependentNormal { variance: 1.0 }),
        ("indep", Some(r)) => Ok(CoefPriorKind::IndependentNormal { variance: numbers(r, "indep", 1)?[0] }),
        ("spikeslab", Some(r)) => {
            let v = numbers(r, "spikeslab", 2)?;
            Ok(CoefPriorKind::SpikeSlab { v0: v[0], v1: v[1] })
        }
        _ => Err(CliError::usage(format!("unknown coefficient prior '{s}' (gprior | indep[:TAU] | spikeslab:V0,V1)"))),
    }
}

/// `known:S2` or `jeffreys`.
pub fn parse_sigma(s: &str) -> CliResult<SigmaMode> {
    match s.split_once(':') {
        None if s == "jeffreys" => Ok(SigmaMode::Jeffreys),
        Some(("known", r)) => Ok(SigmaMode::Known { sigma2: numbers(r, "known", 1)?[0] }),
        _ => Err(CliError::usage(format!("unknown sigma mode '{s}' (known:S2 | jeffreys)"))),
    }
}

/// `uniform | sizes | bernoulli:T | betabinom:A,B | dilution:T1,K`. The
/// dilution block is the last `K` of `q` covariates.
pub fn parse_model_prior(s: &str, q: usize) -> CliResult<ModelPrior> {
    let (head, rest) = s.split_once(':').map_or((s, None), |(h, r)| (h, Some(r)));
    let prior = match (head, rest) {
        ("uniform", None) => ModelPrior::UniformOverModels,
        ("sizes", None) => ModelPrior::UniformOverSizes,
        ("bernoulli", Some(r)) => ModelPrior::Bernoulli { theta: numbers(r, "bernoulli", 1)?[0] },
        ("betabinom", Some(r)) => {
            let v = numbers(r, "betabinom", 2)?;
            ModelPrior::BetaBinomial { a: v[0], b: v[1] }
        }
        ("dilution", Some(r)) => {
            let v = numbers(r, "dilution", 2)?;
            let k = count(v[1], "dilution K")?;
            if k == 0 || k > q {
                return Err(CliError::usage(format!("dilution block size {k} must be between 1 and {q}")));
            }
            ModelPrior::Dilution { theta1: v[0], p: q - k, k }
        }
        _ => {
            return Err(CliError::usage(format!(
                "unknown model prior '{s}' (uniform | sizes | bernoulli:T | betabinom:A,B | dilution:T1,K)"
            )))
        }
    };
    prior.validate()?;
    Ok(prior)
}

pub fn parse_sizes(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| CliError::usage(format!("'{v}' is not a sample size"))))
        .collect()
}
