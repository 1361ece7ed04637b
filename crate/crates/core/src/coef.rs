use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment of the error variance `sigma^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SigmaMode {
    Known { sigma2: f64 },
    /// Reference prior `1/sigma^2`; marginals become Bayes factors against the null model.
    Jeffreys,
}

/// Coefficient prior `pi(beta | gamma)`, with covariances relative to `sigma^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefPriorKind {
    /// `N(0, g sigma^2 (X_g'X_g)^+)`.
    GPrior { g: f64 },
    /// `N(0, variance * sigma^2 I)` on the included coefficients.
    IndependentNormal { variance: f64 },
    /// Continuous spike and slab: every coefficient is `N(0, v1 sigma^2)` if
    /// included and `N(0, v0 sigma^2)` otherwise.
    SpikeSlab { v0: f64, v1: f64 },
    /// Diagonal prior `D` on the coordinates `T beta`, where `T` is the upper
    /// Cholesky factor of the model's Gram block.
    RescaledG { d: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefPrior {
    pub kind: CoefPriorKind,
    pub sigma: SigmaMode,
}

impl CoefPrior {
    pub fn new(kind: CoefPriorKind, sigma: SigmaMode) -> Result<Self> {
        let p = CoefPrior { kind, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn g_prior(g: f64, sigma: SigmaMode) -> Result<Self> {
        CoefPrior::new(CoefPriorKind::GPrior { g }, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        if let CoefPriorKind::SpikeSlab { v0, v1 } = self.kind {
            if v1 <= v0 {
                return Err(Error::Domain(format!("spike-slab needs v1 > v0, got v0={v0}, v1={v1}")));
            }
        }
        Ok(())
    }

    /// Positivity and sigma-mode checks only; computations accept `v0 = v1`.
    pub(crate) fn validate_values(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match &self.kind {
            CoefPriorKind::GPrior { g } => pos(*g, "g")?,
            CoefPriorKind::IndependentNormal { variance } => pos(*variance, "prior variance")?,
            CoefPriorKind::SpikeSlab { v0, v1 } => {
                pos(*v0, "v0")?;
                pos(*v1, "v1")?;
            }
            CoefPriorKind::RescaledG { d } => {
                for v in d {
                    pos(*v, "rescaled g-prior diagonal entry")?;
                }
            }
        }
        match self.sigma {
            SigmaMode::Known { sigma2 } => pos(sigma2, "sigma^2")?,
            SigmaMode::Jeffreys => {
                if !matches!(self.kind, CoefPriorKind::GPrior { .. }) {
                    return Err(Error::Domain("the Jeffreys sigma mode requires a g-prior".into()));
                }
            }
        }
        Ok(())
    }
}
