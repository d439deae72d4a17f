//! Compact matrix Lie algebras, symmetric splittings and spectral calculus of `ad`.

mod fields;
mod spectral;

pub use fields::{
    b_operators, b_operators_closed_form, b_operators_solve, b_identity_residual, general_y_field,
    y_field, BOperatorReport, BOperators, YField,
};
pub use spectral::{spectral_apply, SpectralFn};

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{columns, max_abs, null_space, sorted_symmetric_eigen};

/// Numeric rank tolerance used for subspace constructions.
pub const RANK_TOL: f64 = 1e-10;

/// A real Lie algebra of dimension `N` given by structure constants and an
/// Ad-invariant positive-definite inner product.
#[derive(Clone, Debug)]
pub struct MatrixLieAlgebra {
    dim: usize,
    basis: Vec<DMatrix<f64>>,
    trace_scale: f64,
    /// `ad[i]` is the matrix of `ad_{e_i}`, so `ad[i][(k, j)] = c^k_{ij}`.
    ad: Vec<DMatrix<f64>>,
    inner: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    chol_l_inv_t: DMatrix<f64>,
}

/// Defects of the algebra axioms, all in max norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraDefects {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub ad_invariance: f64,
    pub min_inner_eigenvalue: f64,
}

impl MatrixLieAlgebra {
    /// Build from a basis of real matrices. The inner product is
    /// `-scale/2 * trace(A B)`; brackets are expanded back into the basis.
    pub fn from_matrices(basis: Vec<DMatrix<f64>>, scale: f64) -> Result<Self> {
        let n = basis.len();
        if n == 0 {
            return Err(Error::Input("empty basis".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::Input(format!("inner product scale must be positive, got {scale}")));
        }
        let size = basis[0].nrows();
        if basis.iter().any(|b| b.nrows() != size || b.ncols() != size) {
            return Err(Error::Input("basis matrices must be square of equal size".into()));
        }
        let trace_form = |a: &DMatrix<f64>, b: &DMatrix<f64>| -0.5 * scale * (a * b).trace();
        let inner = DMatrix::from_fn(n, n, |i, j| trace_form(&basis[i], &basis[j]));
        let chol = Cholesky::new(inner.clone())
            .ok_or_else(|| Error::Input("trace form is not positive-definite on the basis".into()))?;
        let mut c = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let br = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let rhs = DVector::from_fn(n, |l, _| trace_form(&basis[l], &br));
                let coef = chol.solve(&rhs);
                let mut back = DMatrix::zeros(size, size);
                for (k, ck) in coef.iter().enumerate() {
                    back += &basis[k] * *ck;
                }
                if max_abs(&(&back - &br)) > 1e-10 * (1.0 + max_abs(&br)) {
                    return Err(Error::Input(format!(
                        "basis is not closed under the bracket at ({i}, {j})"
                    )));
                }
                c[i][j] = coef.iter().cloned().collect();
            }
        }
        let mut alg = Self::assemble(Vec::new(), &c, inner)?;
        alg.basis = basis;
        alg.trace_scale = scale;
        Ok(alg)
    }

    /// Build from structure constants `c[i][j][k] = c^k_{ij}` and an inner product.
    /// All axioms are validated.
    pub fn from_structure_constants(c: &[Vec<Vec<f64>>], inner: DMatrix<f64>) -> Result<Self> {
        Self::assemble(Vec::new(), c, inner)
    }

    fn assemble(basis: Vec<DMatrix<f64>>, c: &[Vec<Vec<f64>>], inner: DMatrix<f64>) -> Result<Self> {
        let trace_scale = 1.0;
        let n = c.len();
        if n == 0 || inner.nrows() != n || inner.ncols() != n {
            return Err(Error::Input("structure constants and inner product disagree in size".into()));
        }
        if c.iter().any(|r| r.len() != n || r.iter().any(|v| v.len() != n)) {
            return Err(Error::Input("structure constants must be an N x N x N array".into()));
        }
        if max_abs(&(&inner - inner.transpose())) > 1e-12 {
            return Err(Error::Input("inner product is not symmetric".into()));
        }
        let chol = Cholesky::new(inner.clone())
            .ok_or_else(|| Error::Input("inner product is not positive-definite".into()))?;
        let chol_l = chol.l();
        let chol_l_inv_t = chol_l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Input("inner product is singular".into()))?
            .transpose();
        let ad = (0..n)
            .map(|i| DMatrix::from_fn(n, n, |k, j| c[i][j][k]))
            .collect();
        let alg = MatrixLieAlgebra { dim: n, basis, trace_scale, ad, inner, chol_l, chol_l_inv_t };
        let d = alg.defects();
        if d.antisymmetry > 1e-12 {
            return Err(Error::Input(format!("bracket not antisymmetric (defect {:.3e})", d.antisymmetry)));
        }
        if d.jacobi > 1e-12 {
            return Err(Error::Input(format!("Jacobi identity fails (defect {:.3e})", d.jacobi)));
        }
        if d.ad_invariance > 1e-12 {
            return Err(Error::Input(format!(
                "inner product is not ad-invariant (defect {:.3e})",
                d.ad_invariance
            )));
        }
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix realization, empty when the algebra was given abstractly.
    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Matrix of an element in the realization.
    pub fn matrix_of(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(v)?;
        let first = self
            .basis
            .first()
            .ok_or_else(|| Error::Input("algebra has no matrix realization".into()))?;
        let mut m = DMatrix::zeros(first.nrows(), first.ncols());
        for (b, c) in self.basis.iter().zip(v.iter()) {
            m += b * *c;
        }
        Ok(m)
    }

    /// Coefficients of a matrix in the realization's basis (least squares
    /// with respect to the trace form).
    pub fn coords_of(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        if self.basis.is_empty() {
            return Err(Error::Input("algebra has no matrix realization".into()));
        }
        let rhs = DVector::from_fn(self.dim, |l, _| -0.5 * self.trace_scale * (&self.basis[l] * m).trace());
        let g_inv = &self.chol_l_inv_t * self.chol_l_inv_t.transpose();
        Ok(g_inv * rhs)
    }

    /// Matrix of `Ad_g` on `g` for a group element `g` of the realization.
    pub fn group_adjoint(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Input("group element is singular".into()))?;
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (j, b) in self.basis.iter().enumerate() {
            out.set_column(j, &self.coords_of(&(g * b * &g_inv))?);
        }
        Ok(out)
    }

    pub fn inner_product(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ad[i][(k, j)]
    }

    /// The algebra with its inner product multiplied by `c > 0`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Input(format!("scale must be positive, got {c}")));
        }
        let n = self.dim;
        let cs: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.structure_constant(i, j, k)).collect()).collect())
            .collect();
        let mut out = Self::assemble(Vec::new(), &cs, &self.inner * c)?;
        out.basis = self.basis.clone();
        out.trace_scale = self.trace_scale * c;
        Ok(out)
    }

    pub fn defects(&self) -> AlgebraDefects {
        let n = self.dim;
        let mut antisymmetry: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    antisymmetry = antisymmetry
                        .max((self.structure_constant(i, j, k) + self.structure_constant(j, i, k)).abs());
                }
            }
        }
        // ad_{[e_i,e_j]} = [ad_i, ad_j] is equivalent to the Jacobi identity.
        let mut jacobi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let lhs = self.ad_matrix(&self.bracket_unchecked(&unit(n, i), &unit(n, j)));
                let rhs = &self.ad[i] * &self.ad[j] - &self.ad[j] * &self.ad[i];
                jacobi = jacobi.max(max_abs(&(lhs - rhs)));
            }
        }
        let mut ad_invariance: f64 = 0.0;
        for a in &self.ad {
            ad_invariance = ad_invariance.max(max_abs(&(a.transpose() * &self.inner + &self.inner * a)));
        }
        let (vals, _) = sorted_symmetric_eigen(&self.inner);
        AlgebraDefects { antisymmetry, jacobi, ad_invariance, min_inner_eigenvalue: vals[0] }
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            Err(Error::Input(format!(
                "expected an element with {} coefficients, got {}",
                self.dim,
                v.len()
            )))
        } else {
            Ok(())
        }
    }

    fn bracket_unchecked(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        self.ad_matrix(a) * b
    }

    /// `[a, b]` in coefficient form.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(self.bracket_unchecked(a, b))
    }

    /// Bracket for elements already known to have the right length.
    pub fn br(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(a.len(), self.dim);
        self.bracket_unchecked(a, b)
    }

    /// Matrix of `ad_w`.
    pub fn ad_matrix(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                m += &self.ad[i] * *wi;
            }
        }
        m
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.inner * b)[(0, 0)]
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Coordinates in which the inner product becomes Euclidean: `y = L^T c`.
    pub fn to_orthonormal(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol_l.transpose() * m * &self.chol_l_inv_t
    }

    pub fn from_orthonormal(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.chol_l_inv_t * m * self.chol_l.transpose()
    }

    /// Adjoint of a linear map on `g` with respect to the inner product.
    pub fn adjoint(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let g_inv = &self.chol_l_inv_t * self.chol_l_inv_t.transpose();
        g_inv * m.transpose() * &self.inner
    }

    /// `f(op)` for a linear map on `g` that is normal with respect to the
    /// inner product.
    pub fn analytic_of_operator(&self, op: &DMatrix<f64>, f: SpectralFn) -> Result<DMatrix<f64>> {
        let y = self.to_orthonormal(op);
        Ok(self.from_orthonormal(&spectral_apply(&y, f)?))
    }

    /// `f(ad_w)` evaluated spectrally.
    pub fn analytic_of_ad(&self, w: &DVector<f64>, f: SpectralFn) -> Result<DMatrix<f64>> {
        self.check_len(w)?;
        self.analytic_of_operator(&self.ad_matrix(w), f)
    }

    /// Orthonormal basis (columns) of the span of `vectors`, pivot tolerance
    /// [`RANK_TOL`] relative to each candidate's norm.
    pub fn orthonormalize(&self, vectors: &[DVector<f64>]) -> DMatrix<f64> {
        let mut out: Vec<DVector<f64>> = Vec::new();
        for v in vectors {
            let scale = self.norm(v);
            if scale == 0.0 {
                continue;
            }
            let mut u = v.clone();
            for _ in 0..2 {
                for q in &out {
                    let c = self.inner(q, &u);
                    u -= q * c;
                }
            }
            let nu = self.norm(&u);
            if nu > RANK_TOL * scale.max(1.0) {
                out.push(u / nu);
            }
        }
        columns(self.dim, &out)
    }

    /// Orthonormal basis of `{ B c : maps(B c) = 0 for all maps }` where `B`
    /// is an orthonormal basis (columns) of a subspace.
    pub fn kernel_within(&self, subspace: &DMatrix<f64>, maps: &[DMatrix<f64>]) -> DMatrix<f64> {
        let d = subspace.ncols();
        if d == 0 {
            return DMatrix::zeros(self.dim, 0);
        }
        if maps.is_empty() {
            return subspace.clone();
        }
        let rows: usize = maps.iter().map(|m| m.nrows()).sum();
        let mut stacked = DMatrix::zeros(rows, d);
        let mut r = 0;
        for m in maps {
            // Measure outputs in orthonormal coordinates so the tolerance is
            // independent of the inner product's scaling.
            let img = self.chol_l.transpose() * m * subspace;
            stacked.view_mut((r, 0), (m.nrows(), d)).copy_from(&img);
            r += m.nrows();
        }
        let ns = null_space(&stacked, RANK_TOL);
        subspace * ns
    }

    /// Orthogonal projector onto the span of orthonormal columns `b`.
    pub fn projector(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        b * b.transpose() * &self.inner
    }

    /// Orthonormal basis of the orthogonal complement of `b` inside `within`.
    pub fn complement_within(&self, within: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.projector(b);
        let cols: Vec<DVector<f64>> = (0..within.ncols())
            .map(|j| {
                let v = within.column(j).into_owned();
                &v - &p * &v
            })
            .collect();
        self.orthonormalize(&cols)
    }

    /// Residual of `[x_i, x_j] = 0` over the columns of `b`.
    pub fn commutator_defect(&self, b: &DMatrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..b.ncols() {
            for j in 0..i {
                let br = self.br(&b.column(i).into_owned(), &b.column(j).into_owned());
                worst = worst.max(br.amax());
            }
        }
        worst
    }
}

pub(crate) fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// The operator `ad_w` together with the element it came from.
#[derive(Clone, Debug)]
pub struct AdOperator {
    pub w: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

impl AdOperator {
    pub fn new(algebra: &MatrixLieAlgebra, w: &DVector<f64>) -> Result<Self> {
        algebra.check_len(w)?;
        Ok(AdOperator { w: w.clone(), matrix: algebra.ad_matrix(w) })
    }

    /// Max deviation from skew-symmetry with respect to the inner product.
    pub fn skew_defect(&self, algebra: &MatrixLieAlgebra) -> f64 {
        let g = algebra.inner_product();
        max_abs(&(self.matrix.transpose() * g + g * &self.matrix))
    }
}

/// A symmetric pair `g = m + k` given by an involutive automorphism `sigma`.
#[derive(Clone, Debug)]
pub struct SymmetricPair {
    pub algebra: MatrixLieAlgebra,
    pub sigma: DMatrix<f64>,
    /// Orthonormal basis of the (-1)-eigenspace, as columns.
    pub m_basis: DMatrix<f64>,
    /// Orthonormal basis of the (+1)-eigenspace, as columns.
    pub k_basis: DMatrix<f64>,
    pub p_m: DMatrix<f64>,
    pub p_k: DMatrix<f64>,
}

/// Defects of the symmetric-pair relations, max norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDefects {
    pub involution: f64,
    pub automorphism: f64,
    pub mm_in_k: f64,
    pub km_in_m: f64,
    pub kk_in_k: f64,
    pub orthogonality: f64,
    pub projections: f64,
}

impl PairDefects {
    pub fn max(&self) -> f64 {
        [
            self.involution,
            self.automorphism,
            self.mm_in_k,
            self.km_in_m,
            self.kk_in_k,
            self.orthogonality,
            self.projections,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl SymmetricPair {
    pub fn new(algebra: MatrixLieAlgebra, sigma: DMatrix<f64>) -> Result<Self> {
        let n = algebra.dim();
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::Input("involution has the wrong size".into()));
        }
        let id = DMatrix::<f64>::identity(n, n);
        let p_m = (&id - &sigma) * 0.5;
        let p_k = (&id + &sigma) * 0.5;
        let m_basis = algebra.orthonormalize(&crate::linalg::split_columns(&p_m));
        let k_basis = algebra.orthonormalize(&crate::linalg::split_columns(&p_k));
        let pair = SymmetricPair { algebra, sigma, m_basis, k_basis, p_m, p_k };
        let d = pair.defects();
        if d.max() > 1e-10 {
            return Err(Error::Input(format!("not a symmetric pair: {d:?}")));
        }
        if pair.m_basis.ncols() == 0 {
            return Err(Error::Input("involution has trivial (-1)-eigenspace".into()));
        }
        Ok(pair)
    }

    pub fn dim_m(&self) -> usize {
        self.m_basis.ncols()
    }

    pub fn dim_k(&self) -> usize {
        self.k_basis.ncols()
    }

    pub fn defects(&self) -> PairDefects {
        let alg = &self.algebra;
        let n = alg.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let involution = max_abs(&(&self.sigma * &self.sigma - &id));
        let mut automorphism: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (unit(n, i), unit(n, j));
                let lhs = &self.sigma * alg.br(&a, &b);
                let rhs = alg.br(&(&self.sigma * &a), &(&self.sigma * &b));
                automorphism = automorphism.max((lhs - rhs).amax());
            }
        }
        let cols = |b: &DMatrix<f64>| crate::linalg::split_columns(b);
        let (ms, ks) = (cols(&self.m_basis), cols(&self.k_basis));
        let leak = |xs: &[DVector<f64>], ys: &[DVector<f64>], proj: &DMatrix<f64>| {
            let mut worst: f64 = 0.0;
            for x in xs {
                for y in ys {
                    worst = worst.max((proj * alg.br(x, y)).amax());
                }
            }
            worst
        };
        let mm_in_k = leak(&ms, &ms, &self.p_m);
        let km_in_m = leak(&ks, &ms, &self.p_k);
        let kk_in_k = leak(&ks, &ks, &self.p_m);
        let orthogonality = max_abs(&(self.m_basis.transpose() * alg.inner_product() * &self.k_basis));
        let projections = max_abs(&(&self.p_m + &self.p_k - &id)).max(max_abs(&(&self.p_m * &self.p_k)));
        PairDefects { involution, automorphism, mm_in_k, km_in_m, kk_in_k, orthogonality, projections }
    }

    /// Whether `v` lies in `m` up to `tol` relative to its norm.
    pub fn in_m(&self, v: &DVector<f64>, tol: f64) -> bool {
        (&self.p_k * v).amax() <= tol * (1.0 + v.amax())
    }

    pub fn check_in_m(&self, v: &DVector<f64>, what: &str) -> Result<()> {
        self.algebra.check_len(v)?;
        if self.in_m(v, 1e-10) {
            Ok(())
        } else {
            Err(Error::Input(format!("{what} must lie in m")))
        }
    }
}
