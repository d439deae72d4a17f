//! Built-in compact symmetric pairs and a generic structure-constant entry path.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::liealg::{MatrixLieAlgebra, SymmetricPair};

/// Membership test for the isotropy group `K` as a matrix group.
pub type KMembership = Arc<dyn Fn(&DMatrix<f64>) -> bool + Send + Sync>;

/// Tolerance of the built-in membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A symmetric pair together with what is known about the groups.
#[derive(Clone)]
pub struct SymmetricSpace {
    pub name: String,
    pub pair: SymmetricPair,
    /// Default seed for the Cartan subspace.
    pub seed: DVector<f64>,
    /// Group-level membership test for `K`, when the algebra has a matrix
    /// realization and `K` is known.
    pub k_membership: Option<KMembership>,
}

impl fmt::Debug for SymmetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricSpace")
            .field("name", &self.name)
            .field("dim", &self.pair.algebra.dim())
            .field("has_k_membership", &self.k_membership.is_some())
            .finish()
    }
}

fn elementary_skew(size: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    m
}

/// `so(n)` with basis `E_ij - E_ji` for `i < j` in lexicographic order.
///
/// For `n = 3` the basis is `X = E12 - E21`, `Y = E13 - E31`, `Z = E23 - E32`.
pub fn so(n: usize, scale: f64) -> Result<MatrixLieAlgebra> {
    if n < 2 {
        return Err(Error::Input(format!("so(n) needs n >= 2, got {n}")));
    }
    let mut basis = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            basis.push(elementary_skew(n, i, j));
        }
    }
    MatrixLieAlgebra::from_matrices(basis, scale)
}

fn orthogonal_det_one(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let ortho = (a.transpose() * a - DMatrix::<f64>::identity(n, n)).amax();
    ortho < MEMBERSHIP_TOL && (a.determinant() - 1.0).abs() < MEMBERSHIP_TOL
}

/// The sphere `S^n = SO(n+1)/SO(n)`. The involution is conjugation by
/// `diag(-1, 1, ..., 1)` and `K` is the stabilizer of the first basis vector.
pub fn sphere(n: usize) -> Result<SymmetricSpace> {
    sphere_scaled(n, 1.0)
}

pub fn sphere_scaled(n: usize, scale: f64) -> Result<SymmetricSpace> {
    if n < 2 {
        return Err(Error::Input(format!("sphere dimension must be at least 2, got {n}")));
    }
    let size = n + 1;
    let algebra = so(size, scale)?;
    let mut diag = Vec::new();
    for i in 0..size {
        for _ in i + 1..size {
            diag.push(if i == 0 { -1.0 } else { 1.0 });
        }
    }
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let pair = SymmetricPair::new(algebra, sigma)?;
    let mut seed = DVector::zeros(pair.algebra.dim());
    seed[0] = 1.0;
    let k_membership: KMembership = Arc::new(move |g: &DMatrix<f64>| {
        if g.nrows() != size || g.ncols() != size {
            return false;
        }
        let mut off: f64 = (g[(0, 0)] - 1.0).abs();
        for j in 1..size {
            off = off.max(g[(0, j)].abs()).max(g[(j, 0)].abs());
        }
        off < MEMBERSHIP_TOL && orthogonal_det_one(g)
    });
    Ok(SymmetricSpace { name: format!("sphere:{n}"), pair, seed, k_membership: Some(k_membership) })
}

/// Real `2n x 2n` form of the complex matrix `a + i b`.
fn realify(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((n, n), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(&-b);
    m.view_mut((n, 0), (n, n)).copy_from(b);
    m
}

/// `SU(n)/SO(n)` in the real form of `su(n)`. The involution is complex
/// conjugation and `K = SO(n)`.
///
/// Basis order: imaginary diagonal (Gell-Mann normalized), imaginary
/// symmetric off-diagonal, then real antisymmetric.
pub fn su_so(n: usize) -> Result<SymmetricSpace> {
    su_so_scaled(n, 1.0)
}

pub fn su_so_scaled(n: usize, scale: f64) -> Result<SymmetricSpace> {
    if n < 2 {
        return Err(Error::Input(format!("su(n)/so(n) needs n >= 2, got {n}")));
    }
    let zero = DMatrix::<f64>::zeros(n, n);
    let mut basis = Vec::new();
    let mut sigma_diag = Vec::new();
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..l {
            h[(j, j)] = norm;
        }
        h[(l, l)] = -(l as f64) * norm;
        basis.push(realify(&zero, &h));
        sigma_diag.push(-1.0);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut s = DMatrix::zeros(n, n);
            s[(i, j)] = 1.0;
            s[(j, i)] = 1.0;
            basis.push(realify(&zero, &s));
            sigma_diag.push(-1.0);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            basis.push(realify(&elementary_skew(n, i, j), &zero));
            sigma_diag.push(1.0);
        }
    }
    // The trace of the real form doubles the real part of the complex trace.
    let algebra = MatrixLieAlgebra::from_matrices(basis, 0.5 * scale)?;
    let sigma = DMatrix::from_diagonal(&DVector::from_vec(sigma_diag));
    let pair = SymmetricPair::new(algebra, sigma)?;
    let mut seed = DVector::zeros(pair.algebra.dim());
    for l in 0..n - 1 {
        seed[l] = 1.0 + 0.37 * l as f64;
    }
    let k_membership: KMembership = Arc::new(move |g: &DMatrix<f64>| {
        if g.nrows() != 2 * n || g.ncols() != 2 * n {
            return false;
        }
        let a = g.view((0, 0), (n, n)).into_owned();
        let b = g.view((n, 0), (n, n)).into_owned();
        let form = (g - realify(&a, &b)).amax();
        form < MEMBERSHIP_TOL && b.amax() < MEMBERSHIP_TOL && orthogonal_det_one(&a)
    });
    Ok(SymmetricSpace { name: format!("su_so:{n}"), pair, seed, k_membership: Some(k_membership) })
}

/// File format for user-supplied algebras.
#[derive(Clone, Debug, Deserialize)]
pub struct CustomAlgebraFile {
    /// `structure_constants[i][j][k]` is the coefficient of `e_k` in `[e_i, e_j]`.
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub inner_product: Vec<Vec<f64>>,
    /// Matrix of the involution in the same basis.
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<Vec<f64>>,
    #[serde(default)]
    pub name: Option<String>,
}

fn square(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input(format!("{what} must be a square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Symmetric space from structure constants. No group-level data is
/// available, so `K` is treated as connected.
pub fn custom(file: &CustomAlgebraFile) -> Result<SymmetricSpace> {
    let inner = square(&file.inner_product, "inner_product")?;
    let sigma = square(&file.sigma, "sigma")?;
    let algebra = MatrixLieAlgebra::from_structure_constants(&file.structure_constants, inner)?;
    let pair = SymmetricPair::new(algebra, sigma)?;
    let seed = match &file.seed {
        Some(s) => {
            let v = DVector::from_vec(s.clone());
            pair.check_in_m(&v, "seed")?;
            v
        }
        None => pair.m_basis.column(0).into_owned(),
    };
    Ok(SymmetricSpace {
        name: file.name.clone().unwrap_or_else(|| "custom".into()),
        pair,
        seed,
        k_membership: None,
    })
}

/// Parse `sphere:N`, `su_so:N`.
pub fn builtin(spec: &str) -> Result<SymmetricSpace> {
    let (kind, n) = spec
        .split_once(':')
        .ok_or_else(|| Error::Input(format!("space '{spec}' must look like sphere:N or su_so:N")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad dimension in space '{spec}'")))?;
    match kind.trim() {
        "sphere" => sphere(n),
        "su_so" => su_so(n),
        other => Err(Error::Input(format!("unknown space kind '{other}'"))),
    }
}

/// The `so(3)` elements `X`, `Y`, `Z` as coefficient vectors.
pub fn so3_xyz() -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let e = |i: usize| {
        let mut v = DVector::zeros(3);
        v[i] = 1.0;
        v
    };
    (e(0), e(1), e(2))
}
