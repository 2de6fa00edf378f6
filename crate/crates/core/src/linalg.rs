//! Small dense linear-algebra helpers for the regression model.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thin SVD `A = U diag(s) V^T` with singular values in decreasing order and
/// the sign convention: in each left singular vector the entry of largest
/// magnitude is positive (ties resolved toward the lower index), with the
/// matching right singular vector flipped alongside.
#[derive(Debug, Clone)]
pub struct SignedSvd<T: Real> {
    pub u: DMatrix<T>,
    pub s: DVector<T>,
    pub v: DMatrix<T>,
}

pub fn signed_svd<T: Real>(a: &DMatrix<T>) -> Result<SignedSvd<T>> {
    let svd = SVD::try_new(a.clone(), true, true, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numerical("SVD factors missing".into())),
    };
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut uo = DMatrix::<T>::zeros(a.nrows(), k);
    let mut vo = DMatrix::<T>::zeros(a.ncols(), k);
    let mut so = DVector::<T>::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        so[dst] = svd.singular_values[src];
        let mut ucol = u.column(src).into_owned();
        let mut vcol = v_t.row(src).transpose();
        let mut best = 0;
        for i in 1..ucol.len() {
            if ucol[i].abs() > ucol[best].abs() {
                best = i;
            }
        }
        if ucol[best] < T::zero() {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        uo.set_column(dst, &ucol);
        vo.set_column(dst, &vcol);
    }
    Ok(SignedSvd { u: uo, s: so, v: vo })
}

/// `U diag(s) V^T`.
pub fn compose<T: Real>(u: &DMatrix<T>, s: &DVector<T>, v: &DMatrix<T>) -> DMatrix<T> {
    let mut us = u.clone();
    for (k, &sk) in s.iter().enumerate() {
        us.column_mut(k).scale_mut(sk);
    }
    us * v.transpose()
}

/// Best rank-`r` approximation from an existing decomposition.
pub fn truncate<T: Real>(svd: &SignedSvd<T>, r: usize) -> DMatrix<T> {
    let r = r.min(svd.s.len());
    let u = svd.u.columns(0, r).into_owned();
    let v = svd.v.columns(0, r).into_owned();
    let s = svd.s.rows(0, r).into_owned();
    compose(&u, &s, &v)
}

/// Ordinary least squares fit of `y_i = C x_i + e_i`.
#[derive(Debug, Clone)]
pub struct OlsFit<T: Real> {
    /// Estimated coefficient matrix (q x p).
    pub coef: DMatrix<T>,
    /// Lower Cholesky factor `L` of `X^T X = L L^T`.
    pub gram_chol: DMatrix<T>,
    /// Residual sum of squares over all responses.
    pub rss: T,
    pub n: usize,
}

impl<T: Real> OlsFit<T> {
    /// Unbiased noise variance `RSS / ((n - p) q)`.
    pub fn noise_variance(&self) -> T {
        let (q, p) = self.coef.shape();
        self.rss / T::from_count((self.n - p) * q)
    }
}

pub fn ols<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<OlsFit<T>> {
    let (n, p) = x.shape();
    if y.nrows() != n {
        return Err(Error::Input("design and response row counts differ".into()));
    }
    if n <= p {
        return Err(Error::Input(format!(
            "ordinary least squares needs n > p (n = {n}, p = {p})"
        )));
    }
    let gram = x.transpose() * x;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular design: X^T X is not invertible".into()))?;
    let xty = x.transpose() * y;
    let b = chol.solve(&xty);
    let resid = y - x * &b;
    Ok(OlsFit {
        coef: b.transpose(),
        gram_chol: chol.l(),
        rss: resid.norm_squared(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn svd_is_sorted_signed_and_reconstructs() {
        let a = dmatrix![0.1, -2.0, 0.3; -0.5, 0.4, 1.5];
        let svd = signed_svd(&a).unwrap();
        assert!(svd.s[0] >= svd.s[1]);
        for k in 0..2 {
            let col = svd.u.column(k);
            let imax = col.iamax();
            assert!(col[imax] > 0.0);
        }
        let back = compose(&svd.u, &svd.s, &svd.v);
        assert!((back - a).amax() < 1e-12);
    }

    #[test]
    fn truncation_drops_trailing_values() {
        let a = dmatrix![3.0, 0.0, 0.0; 0.0, 1.0, 0.0];
        let svd = signed_svd(&a).unwrap();
        let t = truncate(&svd, 1);
        assert!((t - dmatrix![3.0, 0.0, 0.0; 0.0, 0.0, 0.0]).amax() < 1e-12);
    }

    #[test]
    fn ols_recovers_exact_coefficients() {
        let x = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0; 2.0, -1.0];
        let c = dmatrix![0.5, -1.0];
        let y = &x * c.transpose();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coef - c).amax() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn ols_rejects_singular_and_short_designs() {
        let x = dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0];
        let y = dmatrix![1.0; 2.0; 3.0];
        assert!(matches!(ols(&x, &y), Err(Error::Numerical(_))));
        let x = dmatrix![1.0, 2.0; 2.0, 4.0];
        let y = dmatrix![1.0; 2.0];
        assert!(matches!(ols(&x, &y), Err(Error::Input(_))));
    }
}
