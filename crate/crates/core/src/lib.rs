//! Exact Bayesian variable selection for Gaussian linear models.
//!
//! Every posterior is computed by enumerating all `2^q` submodels. On top of
//! the posterior the crate identifies the median probability model (MPM), the
//! highest posterior model (HPM) and the model with minimal posterior
//! predictive risk, and provides closed forms for duplicate, equicorrelated
//! and two-covariate designs.

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coef;
pub mod design;
pub mod error;
pub mod geometry2d;
pub mod marginals;
pub mod model;
pub mod posterior;
pub mod priors;
pub mod risk;
pub mod study;

mod linalg;

pub use coef::{CoefPrior, CoefPriorKind, SigmaMode};
pub use design::{DesignStats, Normalization};
pub use error::{Error, Result};
pub use marginals::{marginal_likelihood, MarginalMode, MarginalValue};
pub use model::{embed_coefficients, enumerate_models, Model, MAX_Q};
pub use posterior::{posterior_summary, PosteriorSummary};
pub use priors::ModelPrior;
pub use risk::{posterior_means, risk_report, PosteriorMeans, RiskReport};
