//! `analyze`: CSV ingestion, full enumeration and the selection report.

use std::path::{Path, PathBuf};

use medsel_core::{
    posterior_means, posterior_summary, risk_report, CoefPrior, DesignStats, Model, ModelPrior, Normalization,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::settings::{parse_coef_prior, parse_g, parse_model_prior, parse_sigma, GSetting};

/// Everything needed to reproduce a report; embedded verbatim in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub data: PathBuf,
    pub response: String,
    pub g: String,
    pub coef_prior: String,
    pub model_prior: String,
    pub sigma: String,
    pub block: Option<usize>,
    pub standardize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateTransform {
    pub name: String,
    pub mean: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub n: usize,
    pub response_mean: f64,
    pub response_centered: bool,
    pub covariates_standardized: bool,
    /// Centering and scaling applied to each covariate (identity when not standardized).
    pub covariates: Vec<CovariateTransform>,
    pub coef_prior: CoefPrior,
    pub model_prior: ModelPrior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: Model,
    pub covariates: Vec<String>,
    pub probability: f64,
    pub log_marginal: f64,
    pub risk: f64,
    pub relative_risk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub covariate: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub model: Model,
    pub covariates: Vec<String>,
    pub risk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selected {
    pub mpm: Selection,
    pub hpm: Selection,
    pub optimal: Selection,
    pub mpm_on_boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalyzeConfig,
    pub provenance: Provenance,
    pub selected: Selected,
    pub inclusion: Vec<Inclusion>,
    /// Posterior probability that the block after the first `block` covariates is active.
    pub collective: Option<f64>,
    pub models: Vec<ModelRow>,
}

struct Dataset {
    names: Vec<String>,
    x: DMatrix<f64>,
    y: DVector<f64>,
    hash: String,
}

fn read_csv(path: &Path, response: &str) -> CliResult<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::data(format!("malformed CSV header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let yi = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::data(format!("response column '{response}' not found in {headers:?}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(format!("malformed CSV: {e}")))?;
        if rec.len() != headers.len() {
            return Err(CliError::data(format!("row {} has {} fields, header has {}", r + 2, rec.len(), headers.len())));
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    CliError::data(format!("row {}, column '{}': '{v}' is not a finite number", r + 2, headers[c]))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(vals);
    }
    let n = rows.len();
    if n < 2 {
        return Err(CliError::data(format!("need at least two data rows, found {n}")));
    }
    let cols: Vec<usize> = (0..headers.len()).filter(|&c| c != yi).collect();
    if cols.is_empty() {
        return Err(CliError::data("no covariate columns besides the response"));
    }
    let x = DMatrix::from_fn(n, cols.len(), |i, j| rows[i][cols[j]]);
    let y = DVector::from_fn(n, |i, _| rows[i][yi]);
    Ok(Dataset { names: cols.iter().map(|&c| headers[c].clone()).collect(), x, y, hash })
}

fn selection(model: Model, names: &[String], risk: f64) -> Selection {
    Selection { covariates: model.indices().iter().map(|&i| names[i].clone()).collect(), model, risk }
}

pub fn run(config: &AnalyzeConfig, expected_hash: Option<&str>) -> CliResult<AnalysisReport> {
    let mut ds = read_csv(&config.data, &config.response)?;
    if let Some(h) = expected_hash {
        if h != ds.hash {
            return Err(CliError::data(format!("{} changed since the report was written (sha256 {} != {h})", config.data.display(), ds.hash)));
        }
    }
    let (n, q) = ds.x.shape();
    if q > medsel_core::MAX_Q {
        return Err(CliError::data(format!("{q} covariates exceed the enumeration cap of {}", medsel_core::MAX_Q)));
    }
    let response_mean = ds.y.mean();
    ds.y.add_scalar_mut(-response_mean);
    let mut transforms = Vec::with_capacity(q);
    for j in 0..q {
        let (mut mean, mut norm) = (0.0, 1.0);
        if config.standardize {
            mean = ds.x.column(j).mean();
            let mut col = ds.x.column_mut(j);
            col.add_scalar_mut(-mean);
            norm = col.norm();
            if norm <= 0.0 || norm.is_nan() {
                return Err(CliError::data(format!("covariate '{}' is constant", ds.names[j])));
            }
            col /= norm;
        }
        transforms.push(CovariateTransform { name: ds.names[j].clone(), mean, norm });
    }
    let normalization = if config.standardize { Normalization::UnitNorm } else { Normalization::Raw };
    let stats = DesignStats::from_data(&ds.x, &ds.y)?.with_centered_response(true).with_normalization(normalization);

    let g = match parse_g(&config.g)? {
        GSetting::Auto => n as f64,
        GSetting::Value(g) => g,
    };
    let coef_prior = CoefPrior::new(parse_coef_prior(&config.coef_prior, g)?, parse_sigma(&config.sigma)?)?;
    let model_prior = parse_model_prior(&config.model_prior, q)?;
    let post = posterior_summary(&stats, &coef_prior, &model_prior, config.block)?;
    let means = posterior_means(&stats, &post, &coef_prior)?;
    let rep = risk_report(&stats, &post, &means)?;

    let names = &ds.names;
    let models = post
        .models
        .iter()
        .map(|m| ModelRow {
            model: *m,
            covariates: m.indices().iter().map(|&i| names[i].clone()).collect(),
            probability: post.probs[m.index()],
            log_marginal: post.log_marginals[m.index()],
            risk: rep.risk[m.index()],
            relative_risk: rep.relative[m.index()],
        })
        .collect();
    Ok(AnalysisReport {
        config: config.clone(),
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: ds.hash.clone(),
            n,
            response_mean,
            response_centered: true,
            covariates_standardized: config.standardize,
            covariates: transforms,
            coef_prior,
            model_prior,
        },
        selected: Selected {
            mpm: selection(rep.mpm, names, rep.risk_of(&rep.mpm)),
            hpm: selection(rep.hpm, names, rep.risk_of(&rep.hpm)),
            optimal: selection(rep.optimal, names, rep.risk_of(&rep.optimal)),
            mpm_on_boundary: rep.mpm_boundary,
        },
        inclusion: names.iter().zip(&post.incl).map(|(c, &p)| Inclusion { covariate: c.clone(), probability: p }).collect(),
        collective: post.collective,
        models,
    })
}

/// Loads the configuration (and input hash) embedded in an earlier report,
/// or a bare configuration object.
pub fn load_config(path: &Path) -> CliResult<(AnalyzeConfig, Option<String>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("config").is_some() {
        let hash = value.pointer("/provenance/input_sha256").and_then(|v| v.as_str()).map(str::to_string);
        Ok((serde_json::from_value(value["config"].clone())?, hash))
    } else {
        Ok((serde_json::from_value(value)?, None))
    }
}
