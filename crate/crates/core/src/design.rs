use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Model;

/// How the covariate columns were scaled before forming the Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// Columns scaled to unit Euclidean norm (Gram diagonal 1).
    UnitNorm,
    /// Columns scaled to squared norm n (Gram diagonal n).
    SampleSize,
}

/// Pairwise correlations of a two-covariate problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub r12: f64,
    pub r1y: f64,
    pub r2y: f64,
}

/// Sufficient statistics `(X'X, X'Y, Y'Y, n)` of a regression problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    n: usize,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    normalization: Normalization,
    centered_response: bool,
    corr: Option<CorrelationTriple>,
}

fn symmetric_psd_check(gram: &DMatrix<f64>, what: &str) -> Result<()> {
    if !gram.is_square() {
        return Err(Error::Dimension(format!("{what} is {}x{}", gram.nrows(), gram.ncols())));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{what} has non-finite entries")));
    }
    let scale = gram.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let q = gram.nrows();
    for i in 0..q {
        for j in 0..i {
            if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!("{what} is not symmetric at ({i}, {j})")));
            }
        }
    }
    if q > 0 {
        let min_eig = gram.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::Domain(format!(
                "{what} is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
    }
    Ok(())
}

impl DesignStats {
    /// Builds statistics from precomputed inner products.
    pub fn from_parts(
        n: usize,
        gram: DMatrix<f64>,
        xty: DVector<f64>,
        yty: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        symmetric_psd_check(&gram, "gram matrix")?;
        if xty.len() != gram.nrows() {
            return Err(Error::Dimension(format!(
                "X'Y has length {} but gram is {}x{}",
                xty.len(),
                gram.nrows(),
                gram.ncols()
            )));
        }
        if !yty.is_finite() || yty < 0.0 || xty.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("response inner products must be finite, Y'Y >= 0".into()));
        }
        if n == 0 {
            return Err(Error::Domain("sample size must be positive".into()));
        }
        Ok(DesignStats { n, gram, xty, yty, normalization, centered_response: false, corr: None })
    }

    /// Builds statistics from a design matrix and response, as given.
    pub fn from_data(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        let gram = linalg::symmetrize(&(x.transpose() * x));
        let xty = x.transpose() * y;
        DesignStats::from_parts(x.nrows(), gram, xty, y.dot(y), Normalization::Raw)
    }

    /// Unit-norm statistics of a standardized two-covariate problem with unit-norm response.
    pub fn from_correlations(r12: f64, r1y: f64, r2y: f64, n: usize) -> Result<Self> {
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, r12, r12, 1.0]);
        let rxy = DVector::from_vec(vec![r1y, r2y]);
        let mut s = DesignStats::from_correlation_matrix(gram, rxy, n)?;
        s.corr = Some(CorrelationTriple { r12, r1y, r2y });
        Ok(s)
    }

    /// Unit-norm statistics from a covariate correlation matrix and covariate-response correlations.
    pub fn from_correlation_matrix(rxx: DMatrix<f64>, rxy: DVector<f64>, n: usize) -> Result<Self> {
        let q = rxx.nrows();
        if rxy.len() != q {
            return Err(Error::Dimension("correlation vector length differs from matrix".into()));
        }
        if (0..q).any(|i| (rxx[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::Domain("correlation matrix must have unit diagonal".into()));
        }
        let mut full = DMatrix::identity(q + 1, q + 1);
        full.view_mut((0, 0), (q, q)).copy_from(&rxx);
        for i in 0..q {
            full[(i, q)] = rxy[i];
            full[(q, i)] = rxy[i];
        }
        symmetric_psd_check(&full, "correlation matrix of (x, y)")?;
        let mut s = DesignStats::from_parts(n, rxx, rxy, 1.0, Normalization::UnitNorm)?;
        s.centered_response = true;
        Ok(s)
    }

    /// Statistics of an orthonormal head block of `z_head.len()` covariates plus
    /// `k` exact copies of a unit-norm covariate orthogonal to the head.
    pub fn duplicate_block(z_head: &[f64], z_dup: f64, k: usize, yty: f64, n: usize) -> Result<Self> {
        let p = z_head.len();
        let q = p + k;
        let gram = DMatrix::from_fn(q, q, |i, j| {
            if i < p || j < p {
                if i == j { 1.0 } else { 0.0 }
            } else {
                1.0
            }
        });
        let xty = DVector::from_fn(q, |i, _| if i < p { z_head[i] } else { z_dup });
        let min_yty = z_head.iter().map(|z| z * z).sum::<f64>() + z_dup * z_dup;
        if yty < min_yty - 1e-12 * min_yty.max(1.0) {
            return Err(Error::Domain(format!(
                "Y'Y = {yty} is smaller than the explained sum of squares {min_yty}"
            )));
        }
        DesignStats::from_parts(n, gram, xty, yty, Normalization::UnitNorm)
    }

    /// Marks whether the response was centered (an intercept absorbed).
    pub fn with_centered_response(mut self, centered: bool) -> Self {
        self.centered_response = centered;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn centered_response(&self) -> bool {
        self.centered_response
    }

    pub fn correlations(&self) -> Option<CorrelationTriple> {
        self.corr
    }

    /// Residual degrees of freedom used by the unknown-variance Bayes factor.
    pub fn jeffreys_df(&self) -> f64 {
        if self.centered_response {
            self.n as f64 - 1.0
        } else {
            self.n as f64
        }
    }

    /// True when every Gram diagonal entry is 1 (within 1e-10).
    pub fn is_unit_norm(&self) -> bool {
        self.normalization == Normalization::UnitNorm
            || (0..self.q()).all(|i| (self.gram[(i, i)] - 1.0).abs() < 1e-10)
    }

    pub fn sub_gram(&self, model: &Model) -> DMatrix<f64> {
        let idx = model.indices();
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.gram[(idx[a], idx[b])])
    }

    pub fn sub_xty(&self, model: &Model) -> DVector<f64> {
        let idx = model.indices();
        DVector::from_fn(idx.len(), |a, _| self.xty[idx[a]])
    }

    pub(crate) fn check_model(&self, model: &Model) -> Result<()> {
        if model.q() != self.q() {
            return Err(Error::Dimension(format!(
                "model over {} covariates for a design with {}",
                model.q(),
                self.q()
            )));
        }
        Ok(())
    }
}

/// Columns `[B, x + eps d_1, ..., x + eps d_k]` of a near-duplicate design.
pub fn perturbed_duplicate_design(b: &DMatrix<f64>, x: &DVector<f64>, deltas: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    if b.nrows() != n || deltas.nrows() != n {
        return Err(Error::Dimension("B, x and the perturbations must have the same row count".into()));
    }
    let (p, k) = (b.ncols(), deltas.ncols());
    let mut out = DMatrix::zeros(n, p + k);
    out.view_mut((0, 0), (n, p)).copy_from(b);
    for j in 0..k {
        let col = x + deltas.column(j) * eps;
        out.set_column(p + j, &col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_data_matches_inner_products() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = DesignStats::from_data(&x, &y).unwrap();
        assert_eq!(s.gram(), &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert_eq!(s.xty().as_slice(), &[4.0, 5.0]);
        assert_eq!(s.yty(), 14.0);
        assert_eq!(s.jeffreys_df(), 3.0);
    }

    #[test]
    fn correlations_reject_non_psd() {
        assert!(DesignStats::from_correlations(0.9, 0.9, -0.9, 10).is_err());
        let s = DesignStats::from_correlations(0.5, 0.3, 0.4, 10).unwrap();
        assert!(s.is_unit_norm());
        assert!(s.centered_response());
        assert_eq!(s.jeffreys_df(), 9.0);
    }

    #[test]
    fn rejects_asymmetric_gram() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        let z = DVector::zeros(2);
        assert!(DesignStats::from_parts(5, g, z, 1.0, Normalization::Raw).is_err());
    }

    #[test]
    fn duplicate_block_layout() {
        let s = DesignStats::duplicate_block(&[0.5, -1.0], 2.0, 3, 10.0, 20).unwrap();
        assert_eq!(s.q(), 5);
        assert_eq!(s.gram()[(0, 0)], 1.0);
        assert_eq!(s.gram()[(0, 1)], 0.0);
        assert_eq!(s.gram()[(2, 4)], 1.0);
        assert_eq!(s.xty().as_slice(), &[0.5, -1.0, 2.0, 2.0, 2.0]);
        assert!(DesignStats::duplicate_block(&[3.0], 0.0, 1, 1.0, 5).is_err());
    }

    #[test]
    fn sub_blocks() {
        let g = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.1 * (i + j) as f64 });
        let z = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = DesignStats::from_parts(10, g, z, 20.0, Normalization::UnitNorm).unwrap();
        let m = Model::parse("101").unwrap();
        assert_eq!(s.sub_gram(&m), DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]));
        assert_eq!(s.sub_xty(&m).as_slice(), &[1.0, 3.0]);
    }
}
