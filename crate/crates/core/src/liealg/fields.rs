//! The splitting operators `B^m_w`, `B^k_w` and the invariant fields `Y^xi`.

use nalgebra::{DMatrix, DVector};

use super::{SpectralFn, SymmetricPair};
use crate::error::{Error, Result};
use crate::linalg::max_abs;

/// `B^m_w : g -> m` and `B^k_w : g -> k` as `N x N` matrices.
#[derive(Clone, Debug)]
pub struct BOperators {
    pub b_m: DMatrix<f64>,
    pub b_k: DMatrix<f64>,
}

/// Both constructions of the splitting operators with their cross-checks.
#[derive(Clone, Debug)]
pub struct BOperatorReport {
    pub closed: BOperators,
    pub solved: BOperators,
    pub residual_closed: f64,
    pub residual_solved: f64,
    /// Max entry difference between the two constructions.
    pub agreement: f64,
}

/// Closed form: `B^m = (ad/sin ad) P_m`, `B^k = (1/cos ad) P_k`.
pub fn b_operators_closed_form(pair: &SymmetricPair, w: &DVector<f64>) -> Result<BOperators> {
    pair.check_in_m(w, "w")?;
    let alg = &pair.algebra;
    let b_m = alg.analytic_of_ad(w, SpectralFn::TOverSin)? * &pair.p_m;
    let b_k = alg.analytic_of_ad(w, SpectralFn::Sec)? * &pair.p_k;
    Ok(BOperators { b_m, b_k })
}

/// Generic solve of `(sin ad/ad) B^m + cos(ad) B^k = Id` with `range B^m = m`
/// and `range B^k = k`, written as `B^m = M C_m`, `B^k = K C_k`.
pub fn b_operators_solve(pair: &SymmetricPair, w: &DVector<f64>) -> Result<BOperators> {
    pair.check_in_m(w, "w")?;
    let alg = &pair.algebra;
    let n = alg.dim();
    let sinc = alg.analytic_of_ad(w, SpectralFn::Sinc)?;
    let cos = alg.analytic_of_ad(w, SpectralFn::Cos)?;
    let (dm, dk) = (pair.dim_m(), pair.dim_k());
    let mut lhs = DMatrix::zeros(n, dm + dk);
    lhs.view_mut((0, 0), (n, dm)).copy_from(&(&sinc * &pair.m_basis));
    lhs.view_mut((0, dm), (n, dk)).copy_from(&(&cos * &pair.k_basis));
    let coef = lhs.lu().solve(&DMatrix::identity(n, n)).ok_or(Error::SingularParameter {
        function: "splitting system",
        eigenvalue: max_abs(&alg.ad_matrix(w)),
    })?;
    let b_m = &pair.m_basis * coef.rows(0, dm);
    let b_k = &pair.k_basis * coef.rows(dm, dk);
    Ok(BOperators { b_m, b_k })
}

/// Max-norm residual of the splitting identity together with the range
/// constraints.
pub fn b_identity_residual(pair: &SymmetricPair, w: &DVector<f64>, ops: &BOperators) -> Result<f64> {
    let alg = &pair.algebra;
    let n = alg.dim();
    let sinc = alg.analytic_of_ad(w, SpectralFn::Sinc)?;
    let cos = alg.analytic_of_ad(w, SpectralFn::Cos)?;
    let id = DMatrix::<f64>::identity(n, n);
    let eq = max_abs(&(&sinc * &ops.b_m + &cos * &ops.b_k - id));
    let range = max_abs(&(&pair.p_k * &ops.b_m)).max(max_abs(&(&pair.p_m * &ops.b_k)));
    Ok(eq.max(range))
}

/// Both constructions of `(B^m_w, B^k_w)` with residuals and their agreement.
pub fn b_operators(pair: &SymmetricPair, w: &DVector<f64>) -> Result<BOperatorReport> {
    let closed = b_operators_closed_form(pair, w)?;
    let solved = b_operators_solve(pair, w)?;
    let residual_closed = b_identity_residual(pair, w, &closed)?;
    let residual_solved = b_identity_residual(pair, w, &solved)?;
    let agreement =
        max_abs(&(&closed.b_m - &solved.b_m)).max(max_abs(&(&closed.b_k - &solved.b_k)));
    Ok(BOperatorReport { closed, solved, residual_closed, residual_solved, agreement })
}

/// `Y^xi(e, w)` split into real and imaginary parts of its `g` and `m` components.
#[derive(Clone, Debug, PartialEq)]
pub struct YField {
    pub g_re: DVector<f64>,
    pub g_im: DVector<f64>,
    pub m_re: DVector<f64>,
    pub m_im: DVector<f64>,
}

impl YField {
    pub fn max_diff(&self, other: &YField) -> f64 {
        [
            (&self.g_re - &other.g_re).amax(),
            (&self.g_im - &other.g_im).amax(),
            (&self.m_re - &other.m_re).amax(),
            (&self.m_im - &other.m_im).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &YField) -> YField {
        YField {
            g_re: &self.g_re + &other.g_re,
            g_im: &self.g_im + &other.g_im,
            m_re: &self.m_re + &other.m_re,
            m_im: &self.m_im + &other.m_im,
        }
    }
}

/// `Y^xi` for `xi` in `m` via the symmetric-space closed form
/// `((1/cos ad) xi - i ((cos ad - 1)/sin ad) xi, -i (ad cos ad / sin ad) xi)`.
pub fn y_field(pair: &SymmetricPair, xi: &DVector<f64>, w: &DVector<f64>) -> Result<YField> {
    pair.check_in_m(xi, "xi")?;
    pair.check_in_m(w, "w")?;
    let alg = &pair.algebra;
    let n = alg.dim();
    Ok(YField {
        g_re: alg.analytic_of_ad(w, SpectralFn::Sec)? * xi,
        g_im: -(alg.analytic_of_ad(w, SpectralFn::CosMinusOneOverSin)? * xi),
        m_re: DVector::zeros(n),
        m_im: -(alg.analytic_of_ad(w, SpectralFn::TCot)? * xi),
    })
}

/// `Y^xi` for any `xi` in `g` through the splitting operators.
pub fn general_y_field(pair: &SymmetricPair, xi: &DVector<f64>, w: &DVector<f64>) -> Result<YField> {
    pair.algebra.bracket(xi, w)?;
    let alg = &pair.algebra;
    let ops = b_operators_solve(pair, w)?;
    let sin = alg.analytic_of_ad(w, SpectralFn::Sin)?;
    let cos = alg.analytic_of_ad(w, SpectralFn::Cos)?;
    let corr = alg.analytic_of_ad(w, SpectralFn::CosMinusOneOverTCos)?;
    let sec = alg.analytic_of_ad(w, SpectralFn::Sec)?;
    let v_re = &ops.b_m * (&sin * xi);
    let v_im = &ops.b_m * (&cos * xi);
    Ok(YField {
        g_re: &corr * &v_re + sec * xi,
        g_im: -(&corr * &v_im),
        m_re: v_re,
        m_im: -v_im,
    })
}
