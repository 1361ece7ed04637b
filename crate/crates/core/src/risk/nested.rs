use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Triangular reparametrization `theta = T beta` with `T'T = X'X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedTransform {
    /// Triangular in the nesting order (upper triangular for the identity order).
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    /// Nesting order: `order[0]` enters first.
    pub order: Vec<usize>,
    /// `T^{-1} D T^{-T}`, the prior covariance (relative to sigma^2) of `beta`
    /// implied by the diagonal `D` on the transformed coordinates.
    pub covariance: Option<DMatrix<f64>>,
    pub note: String,
}

/// Upper Cholesky reparametrization of a positive definite Gram matrix.
///
/// The transformed design `X T^{-1}` has identity Gram, and the models that add
/// covariates in `order` stay nested. `d` (indexed like the original
/// covariates) gives the diagonal prior on the transformed coordinates.
pub fn nested_transform(gram: &DMatrix<f64>, order: Option<&[usize]>, d: Option<&[f64]>) -> Result<NestedTransform> {
    let q = gram.nrows();
    if !gram.is_square() {
        return Err(Error::Dimension("gram must be square".into()));
    }
    let order: Vec<usize> = order.map_or_else(|| (0..q).collect(), |o| o.to_vec());
    let mut seen = vec![false; q];
    if order.len() != q || order.iter().any(|&i| i >= q || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Domain(format!("{order:?} is not a permutation of 0..{q}")));
    }
    let permuted = DMatrix::from_fn(q, q, |a, b| gram[(order[a], order[b])]);
    let u = linalg::cholesky_upper(&permuted)?;
    let mut t = DMatrix::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            t[(order[a], order[b])] = u[(a, b)];
        }
    }
    let u_inv = u
        .solve_upper_triangular(&DMatrix::identity(q, q))
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let mut t_inv = DMatrix::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            t_inv[(order[a], order[b])] = u_inv[(a, b)];
        }
    }
    let covariance = match d {
        None => None,
        Some(d) => {
            if d.len() != q || d.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Domain("D must have q positive entries".into()));
            }
            let dm = DMatrix::from_fn(q, q, |i, j| if i == j { d[i] } else { 0.0 });
            Some(linalg::symmetrize(&(&t_inv * dm * t_inv.transpose())))
        }
    };
    let note = format!(
        "theta = T beta with T'T = X'X; X T^-1 has identity Gram; covariates enter in order {:?}",
        order.iter().map(|i| i + 1).collect::<Vec<_>>()
    );
    Ok(NestedTransform { t, t_inv, order, covariance, note })
}
