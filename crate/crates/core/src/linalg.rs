//! Small dense linear-algebra helpers shared by the marginal and risk code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot floor below which a Cholesky factorization is treated as singular.
const PIVOT_FLOOR: f64 = 1e-13;

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor, refusing matrices that are singular to working precision.
pub(crate) fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))?;
    let l = chol.l();
    for i in 0..a.nrows() {
        let d = a[(i, i)];
        if d <= 0.0 || l[(i, i)] * l[(i, i)] < PIVOT_FLOOR * d {
            return Err(Error::Numeric(format!(
                "matrix is numerically singular (column {} is nearly a combination of earlier ones)",
                i + 1
            )));
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive definite `A` given its lower factor.
pub(crate) fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let y = l.solve_lower_triangular(b).expect("nonsingular factor");
    l.transpose().solve_upper_triangular(&y).expect("nonsingular factor")
}

/// Result of solving the normal equations of one model.
pub(crate) struct GramSolve {
    /// `G^+ z` on the model's columns.
    pub coef: DVector<f64>,
    /// `z' G^+ z`.
    pub quad: f64,
    pub rank: usize,
}

/// Groups columns whose Gram rows and `z` entries are identical.
fn duplicate_classes(g: &DMatrix<f64>, z: &DVector<f64>) -> Vec<Vec<usize>> {
    let m = g.nrows();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    'outer: for j in 0..m {
        for class in classes.iter_mut() {
            let r = class[0];
            if z[r] == z[j] && (0..m).all(|c| g[(r, c)] == g[(j, c)]) {
                class.push(j);
                continue 'outer;
            }
        }
        classes.push(vec![j]);
    }
    classes
}

/// Minimum-norm solution of `G b = z`.
///
/// With `allow_duplicates`, exactly duplicated columns are merged before the
/// solve and their coefficient is shared equally, which is the Moore-Penrose
/// solution. Any other singularity is an error.
pub(crate) fn gram_solve(g: &DMatrix<f64>, z: &DVector<f64>, allow_duplicates: bool) -> Result<GramSolve> {
    let m = g.nrows();
    if m == 0 {
        return Ok(GramSolve { coef: DVector::zeros(0), quad: 0.0, rank: 0 });
    }
    let classes = if allow_duplicates {
        duplicate_classes(g, z)
    } else {
        (0..m).map(|j| vec![j]).collect()
    };
    let r = classes.len();
    let gr = DMatrix::from_fn(r, r, |a, b| g[(classes[a][0], classes[b][0])]);
    let zr = DVector::from_fn(r, |a, _| z[classes[a][0]]);
    let l = cholesky_lower(&gr).map_err(|_| {
        Error::Collinearity(format!("{r} distinct columns are linearly dependent (not exact copies)"))
    })?;
    let br = chol_solve(&l, &zr);
    let mut coef = DVector::zeros(m);
    for (a, class) in classes.iter().enumerate() {
        let share = br[a] / class.len() as f64;
        for &j in class {
            coef[j] = share;
        }
    }
    Ok(GramSolve { coef, quad: zr.dot(&br), rank: r })
}

/// Gaussian-prior quantities for `beta ~ N(0, sigma^2 V)` on columns with Gram `g` and `z`.
pub(crate) struct GaussianFit {
    /// `log det(I + V G)`.
    pub logdet: f64,
    /// `z' (I + V G)^{-1} V z`.
    pub quad: f64,
    /// Posterior mean `(I + V G)^{-1} V z`.
    pub mean: DVector<f64>,
}

pub(crate) fn gaussian_fit(g: &DMatrix<f64>, v: &DMatrix<f64>, z: &DVector<f64>) -> Result<GaussianFit> {
    let m = g.nrows();
    if m == 0 {
        return Ok(GaussianFit { logdet: 0.0, quad: 0.0, mean: DVector::zeros(0) });
    }
    let a = DMatrix::identity(m, m) + v * g;
    let lu = a.lu();
    let u = lu.u();
    let mut logdet = 0.0;
    for i in 0..m {
        let d = u[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numeric("I + V G is singular".into()));
        }
        logdet += d.abs().ln();
    }
    let mean = lu
        .solve(&(v * z))
        .ok_or_else(|| Error::Numeric("I + V G is singular".into()))?;
    Ok(GaussianFit { logdet, quad: z.dot(&mean), mean })
}

/// Upper triangular `T` with `T'T = a`.
pub(crate) fn cholesky_upper(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(cholesky_lower(a)?.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_columns_share_coefficient() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let z = DVector::from_vec(vec![2.0, 3.0, 3.0]);
        let s = gram_solve(&g, &z, true).unwrap();
        assert_eq!(s.rank, 2);
        assert_eq!(s.coef.as_slice(), &[2.0, 1.5, 1.5]);
        assert_eq!(s.quad, 13.0);
        // Moore-Penrose oracle: G^+ z via SVD.
        let pinv = g.clone().pseudo_inverse(1e-12).unwrap();
        let oracle = pinv * &z;
        assert!((oracle - &s.coef).amax() < 1e-12);
        assert!(gram_solve(&g, &z, false).is_err());
    }

    #[test]
    fn gaussian_fit_matches_ridge() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let z = DVector::from_vec(vec![1.0, -1.0]);
        let v = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0]));
        let f = gaussian_fit(&g, &v, &z).unwrap();
        let ridge = (&g + v.clone().try_inverse().unwrap()).try_inverse().unwrap() * &z;
        assert!((f.mean - ridge).amax() < 1e-12);
        let det = (DMatrix::identity(2, 2) + &v * &g).determinant();
        assert!((f.logdet - det.ln()).abs() < 1e-12);
    }
}
