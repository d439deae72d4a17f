//! Invariant Kähler forms `d theta^a` on `G x W+`: the ansatz `a(x)`, the
//! operators `R_x`, `S_x`, the Hermitian matrix fields and the Ricci-flatness
//! diagnostics.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::y_field;
use crate::linalg::split_columns;
use crate::rootdata::RestrictedRootData;

pub type C64 = Complex<f64>;

/// Gradient and Hessian of the potential part `f` on the chamber.
pub trait Potential: Send + Sync {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// Rank-one potential given by closed forms of `f'` and `f''`.
#[derive(Clone)]
pub struct RadialPotential {
    pub f1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub f2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Potential for RadialPotential {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, (self.f1)(x[0]))
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, (self.f2)(x[0]))
    }
}

/// `f(x) = 1/2 (x - c)^T Q (x - c)`.
#[derive(Clone, Debug)]
pub struct QuadraticPotential {
    pub center: DVector<f64>,
    pub q: DMatrix<f64>,
}

impl QuadraticPotential {
    pub fn zero(r: usize) -> Self {
        QuadraticPotential { center: DVector::zeros(r), q: DMatrix::zeros(r, r) }
    }
}

impl Potential for QuadraticPotential {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * (x - &self.center)
    }
    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.q.clone()
    }
}

/// Scalar function on the chamber.
pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// Potential known only through its values; derivatives by central
/// differences with one Richardson step.
#[derive(Clone)]
pub struct FdPotential {
    pub f: ScalarFn,
    pub step: f64,
}

impl FdPotential {
    pub const DEFAULT_STEP: f64 = 1e-5;

    pub fn new(f: ScalarFn) -> Self {
        FdPotential { f, step: Self::DEFAULT_STEP }
    }

    fn grad_at(&self, x: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let mut p = x.clone();
            let mut m = x.clone();
            p[i] += h;
            m[i] -= h;
            ((self.f)(&p) - (self.f)(&m)) / (2.0 * h)
        })
    }

    fn hess_at(&self, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let r = x.len();
        let f0 = (self.f)(x);
        DMatrix::from_fn(r, r, |i, j| {
            let at = |di: f64, dj: f64| {
                let mut p = x.clone();
                p[i] += di;
                p[j] += dj;
                (self.f)(&p)
            };
            if i == j {
                (at(h, 0.0) - 2.0 * f0 + at(-h, 0.0)) / (h * h)
            } else {
                (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
            }
        })
    }
}

impl Potential for FdPotential {
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let g1 = self.grad_at(x, self.step);
        let g2 = self.grad_at(x, self.step / 2.0);
        (g2 * 4.0 - g1) / 3.0
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        // Second differences lose precision fast, so the base step is enlarged.
        let h = self.step * 100.0;
        let h1 = self.hess_at(x, h);
        let h2 = self.hess_at(x, h / 2.0);
        let m = (h2 * 4.0 - h1) / 3.0;
        (&m + m.transpose()) * 0.5
    }
}

/// Radial profiles of the `k` and `m` components as functions of `t = lambda'(x)`,
/// returning `(p_k, p_k', p_m, p_m')`.
pub type ProfileFn = Arc<dyn Fn(f64) -> [f64; 4] + Send + Sync>;

fn canonical_profiles(t: f64) -> [f64; 4] {
    let (c, s) = (t.cosh(), t.sinh());
    [1.0 / c, -s / (c * c), 1.0 / s, -c / (s * s)]
}

/// The vector function `a(x) = grad f + z_h + a^k(x) + a^m(x)`.
#[derive(Clone)]
pub struct AnsatzFunction {
    pub root_data: Arc<RestrictedRootData>,
    pub potential: Arc<dyn Potential>,
    /// Element of `z(h)`, algebra coordinates.
    pub z_h: DVector<f64>,
    /// `c^k_lambda` for the roots listed in `root_data.sigma_big_h`, same order.
    pub c_k: Vec<f64>,
    pub c_m: Vec<f64>,
    /// Extra `(root index, c^k, c^m)` triples for roots outside `Sigma_H`.
    pub c_extra: Vec<(usize, f64, f64)>,
    /// Replacement of the `1/cosh`, `1/sinh` profiles (for experiments).
    pub profiles: Option<ProfileFn>,
}

impl std::fmt::Debug for AnsatzFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnsatzFunction")
            .field("z_h", &self.z_h)
            .field("c_k", &self.c_k)
            .field("c_m", &self.c_m)
            .field("c_extra", &self.c_extra)
            .finish()
    }
}

/// The values `a(x)` and `a_[j](x) = d a / d x_j`.
#[derive(Clone, Debug)]
pub struct AnsatzJet {
    pub a: DVector<f64>,
    pub a_j: Vec<DVector<f64>>,
    /// The `a`-part `sum_j df/dx_j X_j`.
    pub a_a: DVector<f64>,
    pub a_k: DVector<f64>,
    pub a_m: DVector<f64>,
}

impl AnsatzFunction {
    pub fn new(
        root_data: Arc<RestrictedRootData>,
        potential: Arc<dyn Potential>,
        z_h: DVector<f64>,
        c_k: Vec<f64>,
        c_m: Vec<f64>,
    ) -> Result<Self> {
        let n = root_data.algebra().dim();
        let p = root_data.sigma_big_h.len();
        if z_h.len() != n {
            return Err(Error::Input(format!("z_h needs {n} coefficients")));
        }
        if c_k.len() != p || c_m.len() != p {
            return Err(Error::Input(format!(
                "c_k and c_m need one entry per root in Sigma_H ({p})"
            )));
        }
        let alg = root_data.algebra();
        let proj = alg.projector(&root_data.z_h_basis);
        if (&proj * &z_h - &z_h).amax() > 1e-10 * (1.0 + z_h.amax()) {
            return Err(Error::Input("z_h must lie in the center of h".into()));
        }
        Ok(AnsatzFunction { root_data, potential, z_h, c_k, c_m, c_extra: Vec::new(), profiles: None })
    }

    pub fn rank(&self) -> usize {
        self.root_data.rank()
    }

    /// `lambda'(x)` for every positive root; chamber error if any is not positive.
    pub fn root_values(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        check_chamber(&self.root_data, x)
    }

    fn coefficient_terms(&self) -> Vec<(usize, f64, f64)> {
        let mut out: Vec<(usize, f64, f64)> = self
            .root_data
            .sigma_big_h
            .iter()
            .zip(self.c_k.iter().zip(&self.c_m))
            .map(|(&i, (&k, &m))| (i, k, m))
            .collect();
        out.extend(self.c_extra.iter().cloned());
        out
    }

    pub fn jet(&self, x: &DVector<f64>) -> Result<AnsatzJet> {
        let rd = &self.root_data;
        let r = rd.rank();
        if x.len() != r {
            return Err(Error::Input(format!("chamber point needs {r} coordinates")));
        }
        let lam = self.root_values(x)?;
        let grad = self.potential.gradient(x);
        let hess = self.potential.hessian(x);
        let a_a = &rd.a_basis * &grad;
        let n = rd.algebra().dim();
        let mut a_k = DVector::zeros(n);
        let mut a_m = DVector::zeros(n);
        let mut a_j: Vec<DVector<f64>> =
            (0..r).map(|j| &rd.a_basis * hess.column(j)).collect();
        for (i, ck, cm) in self.coefficient_terms() {
            let root = &rd.roots[i];
            let t = lam[i];
            let [pk, dpk, pm, dpm] = match &self.profiles {
                Some(p) => p(t),
                None => canonical_profiles(t),
            };
            let zeta = root.zeta_basis.column(0);
            let xi = root.xi_basis.column(0);
            a_k += zeta * (ck * pk);
            a_m += xi * (cm * pm);
            for (j, aj) in a_j.iter_mut().enumerate() {
                let l = root.lambda_prime[j];
                *aj += zeta * (ck * l * dpk) + xi * (cm * l * dpm);
            }
        }
        let a = &a_a + &self.z_h + &a_k + &a_m;
        Ok(AnsatzJet { a, a_j, a_a, a_k, a_m })
    }

    /// `a(x)` in algebra coordinates.
    pub fn value(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.jet(x)?.a)
    }

    /// Distance of `a(x)` from `g_H` (max norm of the orthogonal residual).
    pub fn g_big_h_residual(&self, x: &DVector<f64>) -> Result<f64> {
        let a = self.value(x)?;
        let p = self.root_data.algebra().projector(&self.root_data.g_big_h_basis);
        Ok((&p * &a - &a).amax())
    }
}

pub(crate) fn check_chamber(rd: &RestrictedRootData, x: &DVector<f64>) -> Result<Vec<f64>> {
    let vals: Vec<f64> = rd.roots.iter().map(|r| r.eval(x)).collect();
    if let Some((i, v)) = vals.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Chamber(format!("root {i} takes value {v} at x = {}", x.transpose())));
    }
    Ok(vals)
}

/// `R_x` and `S_x` as `N x N` matrices: `1/cosh lambda'(x)` times identity and
/// `T / sinh lambda'(x)` on each `m_lambda + k_lambda`, zero on `a + h`.
pub fn rs_operators(rd: &RestrictedRootData, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let lam = check_chamber(rd, x)?;
    let alg = rd.algebra();
    let n = alg.dim();
    let g = alg.inner_product();
    let mut r = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for (root, t) in rd.roots.iter().zip(lam) {
        let (xi, zeta) = (&root.xi_basis, &root.zeta_basis);
        let proj = xi * xi.transpose() * g + zeta * zeta.transpose() * g;
        let tee = xi * zeta.transpose() * g - zeta * xi.transpose() * g;
        r += proj / t.cosh();
        s += tee / t.sinh();
    }
    Ok((r, s))
}

/// Operator norm of `m` restricted to the span of orthonormal columns `basis`.
fn op_norm_on(alg: &crate::liealg::MatrixLieAlgebra, m: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    if basis.ncols() == 0 {
        return 0.0;
    }
    let img = m * basis;
    let gram = img.transpose() * alg.inner_product() * &img;
    let (vals, _) = crate::linalg::sorted_symmetric_eigen(&gram);
    vals.last().cloned().unwrap_or(0.0).max(0.0).sqrt()
}

/// Residuals of the two commutation relations on `m+`, as operator norms.
pub fn commutation_residual(a_fn: &AnsatzFunction, x: &DVector<f64>) -> Result<(f64, f64)> {
    let rd = &a_fn.root_data;
    let jet = a_fn.jet(x)?;
    let (r, s) = rs_operators(rd, x)?;
    let alg = rd.algebra();
    let ad_k = alg.ad_matrix(&jet.a_k);
    let ad_m = alg.ad_matrix(&jet.a_m);
    let ad_z = alg.ad_matrix(&a_fn.z_h);
    let first = &r * &ad_k * &r + &s * &ad_k * &s + (&r * &r + &s * &s) * ad_z;
    let second = &r * &ad_m * &s - &s * &ad_m * &r;
    let m_plus = m_plus_basis(rd);
    Ok((op_norm_on(alg, &first, &m_plus), op_norm_on(alg, &second, &m_plus)))
}

fn m_plus_basis(rd: &RestrictedRootData) -> DMatrix<f64> {
    let mut cols = Vec::new();
    for root in &rd.roots {
        cols.extend(split_columns(&root.xi_basis));
    }
    crate::linalg::columns(rd.algebra().dim(), &cols)
}

/// A complex tangent vector `(xi^l, u)` at `(e, x)` of `G x W+`.
#[derive(Clone, Debug)]
pub struct FrameVector {
    pub xi: DVector<C64>,
    pub u: DVector<C64>,
}

impl FrameVector {
    pub fn conj(&self) -> FrameVector {
        FrameVector { xi: self.xi.conjugate(), u: self.u.conjugate() }
    }
}

fn complexify(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

fn combine(re: &DVector<f64>, im: &DVector<f64>) -> DVector<C64> {
    DVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]))
}

/// The two-form `d theta^a` at `(e, x)`, extended complex-bilinearly.
#[derive(Clone, Debug)]
pub struct OmegaForm {
    g_a_j: Vec<DVector<f64>>,
    /// `(ad_a)^T G`, so `<a, [p, q]> = p^T (ad_a^T G) q`.
    bracket_form: DMatrix<f64>,
}

impl OmegaForm {
    pub fn at(a_fn: &AnsatzFunction, x: &DVector<f64>) -> Result<Self> {
        let jet = a_fn.jet(x)?;
        Ok(Self::from_jet(&a_fn.root_data, &jet))
    }

    pub fn from_jet(rd: &RestrictedRootData, jet: &AnsatzJet) -> Self {
        let alg = rd.algebra();
        let g = alg.inner_product();
        OmegaForm {
            g_a_j: jet.a_j.iter().map(|v| g * v).collect(),
            bracket_form: alg.ad_matrix(&jet.a).transpose() * g,
        }
    }

    /// `sum_j (u1_j <a_j, xi2> - u2_j <a_j, xi1>) - <a, [xi1, xi2]>`.
    pub fn eval(&self, p: &FrameVector, q: &FrameVector) -> C64 {
        let dot = |v: &DVector<f64>, w: &DVector<C64>| -> C64 {
            v.iter().zip(w.iter()).map(|(a, b)| b * *a).sum()
        };
        let mut out = C64::new(0.0, 0.0);
        for (j, ga) in self.g_a_j.iter().enumerate() {
            out += p.u[j] * dot(ga, &q.xi) - q.u[j] * dot(ga, &p.xi);
        }
        let bq: DVector<C64> = DVector::from_fn(q.xi.len(), |i, _| {
            (0..q.xi.len()).map(|k| q.xi[k] * self.bracket_form[(i, k)]).sum()
        });
        let pbq: C64 = p.xi.iter().zip(bq.iter()).map(|(a, b)| a * b).sum();
        out - pbq
    }

    /// `i omega(p, conj q)`.
    pub fn hermitian(&self, p: &FrameVector, q: &FrameVector) -> C64 {
        C64::new(0.0, 1.0) * self.eval(p, &q.conj())
    }
}

/// The holomorphic frame `Z^{X_j}`, then `Z^{xi}` for every root-space basis
/// vector, root by root. Returns the frame and the index sets of the `H`
/// block and the star block.
pub fn holomorphic_frame(
    rd: &RestrictedRootData,
    x: &DVector<f64>,
) -> Result<(Vec<FrameVector>, Vec<usize>, Vec<usize>)> {
    let (r_op, s_op) = rs_operators(rd, x)?;
    let rank = rd.rank();
    let mut frame = Vec::new();
    let mut h_idx = Vec::new();
    let mut star_idx = Vec::new();
    for j in 0..rank {
        let mut u = DVector::from_element(rank, C64::new(0.0, 0.0));
        u[j] = C64::new(0.0, -1.0);
        h_idx.push(frame.len());
        frame.push(FrameVector { xi: complexify(&rd.a_basis.column(j).into_owned()), u });
    }
    for root in &rd.roots {
        for xi in split_columns(&root.xi_basis) {
            let re = &r_op * &xi;
            let im = -(&s_op * &xi);
            if root.in_sigma_big_h {
                h_idx.push(frame.len());
            } else {
                star_idx.push(frame.len());
            }
            frame.push(FrameVector { xi: combine(&re, &im), u: DVector::from_element(rank, C64::new(0.0, 0.0)) });
        }
    }
    Ok((frame, h_idx, star_idx))
}

/// Hermitian matrices `w_H(x)` and `w_*(x)`.
#[derive(Clone, Debug)]
pub struct HermitianPair {
    pub w_h: DMatrix<C64>,
    /// Empty when `m_*+ = 0`.
    pub w_star: DMatrix<C64>,
}

/// Diagnostics of the full matrix `i omega(Z_a, conj Z_b)` on the frame.
#[derive(Clone, Debug)]
pub struct FrameDiagnostics {
    pub full: DMatrix<C64>,
    /// Max `|omega(Z_a, Z_b)|`: vanishes for a form of type (1,1).
    pub type_defect: f64,
    /// Max entry of the mixed `H`/star block.
    pub mixed_block: f64,
    pub h_idx: Vec<usize>,
    pub star_idx: Vec<usize>,
}

fn submatrix(m: &DMatrix<C64>, rows: &[usize], cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// The Hermitian matrix fields of an ansatz.
#[derive(Clone, Debug)]
pub struct HermitianField {
    pub ansatz: AnsatzFunction,
}

pub fn hermitian_fields(a_fn: &AnsatzFunction) -> HermitianField {
    HermitianField { ansatz: a_fn.clone() }
}

impl HermitianField {
    /// Matrices assembled entry by entry from the closed-form expressions.
    pub fn closed_form(&self, x: &DVector<f64>) -> Result<HermitianPair> {
        let a_fn = &self.ansatz;
        let rd = &a_fn.root_data;
        let lam = a_fn.root_values(x)?;
        let jet = a_fn.jet(x)?;
        let alg = rd.algebra();
        let rank = rd.rank();
        let hess = a_fn.potential.hessian(x);
        let i = C64::new(0.0, 1.0);
        let ad_km = alg.ad_matrix(&(&jet.a_k + &a_fn.z_h));
        let ad_am = alg.ad_matrix(&(&jet.a_a + &jet.a_m));
        // Root slots: (root index, basis column).
        let h_roots: Vec<usize> = rd.sigma_big_h.clone();
        let mut star_slots = Vec::new();
        for &ri in &rd.star_roots() {
            for j in 0..rd.roots[ri].multiplicity {
                star_slots.push((ri, j));
            }
        }
        let root_entry = |(l, j): (usize, usize), (mu, k): (usize, usize)| -> C64 {
            let (rl, rm) = (&rd.roots[l], &rd.roots[mu]);
            let zl = rl.zeta_basis.column(j).into_owned();
            let zm = rm.zeta_basis.column(k).into_owned();
            let xl = rl.xi_basis.column(j).into_owned();
            let first = alg.inner(&(&ad_km * &zl), &zm) * (-2.0) / (lam[l].sinh() * lam[mu].sinh());
            let second = alg.inner(&(&ad_am * &xl), &zm) * (-2.0) / (lam[l].cosh() * lam[mu].sinh());
            i * first + second
        };
        let p = rank + h_roots.len();
        let mut w_h = DMatrix::from_element(p, p, C64::new(0.0, 0.0));
        for k in 0..rank {
            for j in 0..rank {
                w_h[(k, j)] = C64::new(2.0 * hess[(k, j)], 0.0);
            }
        }
        for (slot, &ri) in h_roots.iter().enumerate() {
            let root = &rd.roots[ri];
            let t = lam[ri];
            let (ck, cm) = (a_fn.c_k[slot], a_fn.c_m[slot]);
            for k in 0..rank {
                let v = C64::new(-cm / t.sinh().powi(2), ck / t.cosh().powi(2)) * (2.0 * root.lambda_prime[k]);
                w_h[(k, rank + slot)] = v;
                w_h[(rank + slot, k)] = v.conj();
            }
            for (slot2, &rj) in h_roots.iter().enumerate() {
                w_h[(rank + slot, rank + slot2)] = root_entry((ri, 0), (rj, 0));
            }
        }
        let s = star_slots.len();
        let w_star = DMatrix::from_fn(s, s, |a, b| root_entry(star_slots[a], star_slots[b]));
        Ok(HermitianPair { w_h, w_star })
    }

    /// Matrices read off `i omega(Z_a, conj Z_b)` on the holomorphic frame.
    pub fn from_frame(&self, x: &DVector<f64>) -> Result<(HermitianPair, FrameDiagnostics)> {
        let a_fn = &self.ansatz;
        let rd = &a_fn.root_data;
        let omega = OmegaForm::at(a_fn, x)?;
        let (frame, h_idx, star_idx) = holomorphic_frame(rd, x)?;
        let d = frame.len();
        let full = DMatrix::from_fn(d, d, |a, b| omega.hermitian(&frame[a], &frame[b]));
        let mut type_defect: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                type_defect = type_defect.max(omega.eval(&frame[a], &frame[b]).norm());
            }
        }
        let mixed = submatrix(&full, &h_idx, &star_idx);
        let mixed_block = mixed.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let pair = HermitianPair {
            w_h: submatrix(&full, &h_idx, &h_idx),
            w_star: submatrix(&full, &star_idx, &star_idx),
        };
        Ok((pair, FrameDiagnostics { full, type_defect, mixed_block, h_idx, star_idx }))
    }
}

/// Smallest eigenvalue of a Hermitian matrix (`+inf` for an empty matrix,
/// NaN if an entry is not finite).
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return f64::NAN;
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Determinant of a Hermitian matrix as a real number (1 for an empty matrix).
pub fn hermitian_det(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().determinant().re
}

pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Per-point result of [`kahler_check`].
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KahlerPoint {
    pub x: Vec<f64>,
    pub min_eig_h: f64,
    /// `None` when `m_*+ = 0`.
    pub min_eig_star: Option<f64>,
    pub res1: f64,
    pub res2: f64,
    pub det_h: f64,
    pub det_star: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KahlerReport {
    pub points: Vec<KahlerPoint>,
    pub kahler_on_grid: bool,
    /// First grid point that failed, if any.
    pub first_failure: Option<Vec<f64>>,
}

/// Residual threshold of the commutation relations in [`kahler_check`].
pub const COMMUTATION_TOL: f64 = 1e-8;

fn check_point(a_fn: &AnsatzFunction, x: &DVector<f64>) -> Result<KahlerPoint> {
    let (res1, res2) = commutation_residual(a_fn, x)?;
    let w = hermitian_fields(a_fn).closed_form(x)?;
    let min_eig_h = min_eigenvalue(&w.w_h);
    let has_star = w.w_star.nrows() > 0;
    let min_eig_star = has_star.then(|| min_eigenvalue(&w.w_star));
    let pass = res1 < COMMUTATION_TOL
        && res2 < COMMUTATION_TOL
        && min_eig_h > 0.0
        && min_eig_star.is_none_or(|v| v > 0.0);
    Ok(KahlerPoint {
        x: x.iter().cloned().collect(),
        min_eig_h,
        min_eig_star,
        res1,
        res2,
        det_h: hermitian_det(&w.w_h),
        det_star: has_star.then(|| hermitian_det(&w.w_star)),
        pass,
    })
}

/// Conditions (commutation relations and positivity) on every grid point.
pub fn kahler_check(a_fn: &AnsatzFunction, grid: &[DVector<f64>]) -> Result<KahlerReport> {
    if grid.is_empty() {
        return Err(Error::Input("empty grid".into()));
    }
    let points: Vec<KahlerPoint> =
        grid.par_iter().map(|x| check_point(a_fn, x)).collect::<Result<_>>()?;
    let first_failure = points.iter().find(|p| !p.pass).map(|p| p.x.clone());
    Ok(KahlerReport { kahler_on_grid: first_failure.is_none(), points, first_failure })
}

/// Constancy of a sampled function.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConstancyReport {
    pub values: Vec<f64>,
    pub mean: f64,
    pub max_rel_dev: f64,
}

impl ConstancyReport {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let max_rel_dev = values
            .iter()
            .map(|v| (v - mean).abs() / mean.abs())
            .fold(0.0, f64::max);
        ConstancyReport { values, mean, max_rel_dev }
    }
}

/// `det w_H(x) * det w_*(x)` over the grid and its relative deviation from the mean.
pub fn ricci_flat_residual(a_fn: &AnsatzFunction, grid: &[DVector<f64>]) -> Result<ConstancyReport> {
    if grid.is_empty() {
        return Err(Error::Input("empty grid".into()));
    }
    let field = hermitian_fields(a_fn);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|x| {
            let w = field.closed_form(x)?;
            Ok(hermitian_det(&w.w_h) * hermitian_det(&w.w_star))
        })
        .collect::<Result<_>>()?;
    Ok(ConstancyReport::from_values(values))
}

/// Which argument goes inside `sinh 2 lambda'(.)` in the potential-case product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SinhArgument {
    /// `sinh 2 lambda'(x)`: the form matching the matrix entries.
    ChamberPoint,
    /// `sinh 2 lambda'(a(x))`: the alternative reading.
    AnsatzValue,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PotentialReport {
    pub constancy: ConstancyReport,
    /// Grid points where the Hessian or a root factor is not positive.
    pub non_kahler_points: Vec<Vec<f64>>,
    pub kahler: bool,
}

/// `det(d^2 f) * prod_lambda (2 lambda'(grad f) / sinh 2 lambda'(.))^{m_lambda}`
/// over the grid.
pub fn potential_case_condition(
    potential: &dyn Potential,
    rd: &RestrictedRootData,
    grid: &[DVector<f64>],
    variant: SinhArgument,
) -> Result<PotentialReport> {
    if grid.is_empty() {
        return Err(Error::Input("empty grid".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut bad = Vec::new();
    for x in grid {
        let lam = check_chamber(rd, x)?;
        let grad = potential.gradient(x);
        let hess = potential.hessian(x);
        let hess_min = crate::linalg::sorted_symmetric_eigen(&hess).0[0];
        let mut prod = hess.determinant();
        let mut ok = hess_min > 0.0;
        for (root, t) in rd.roots.iter().zip(&lam) {
            let la = root.eval(&grad);
            let arg = match variant {
                SinhArgument::ChamberPoint => *t,
                SinhArgument::AnsatzValue => la,
            };
            let factor = 2.0 * la / (2.0 * arg).sinh();
            ok &= la > 0.0;
            prod *= factor.powi(root.multiplicity as i32);
        }
        if !ok {
            bad.push(x.iter().cloned().collect());
        }
        values.push(prod);
    }
    Ok(PotentialReport { constancy: ConstancyReport::from_values(values), kahler: bad.is_empty(), non_kahler_points: bad })
}

/// `det [ omega(Y_j, conj Y_k) ]` for the invariant fields `Y^{xi_j}` of an
/// orthonormal basis of `m`, transported to `G x W+`.
pub fn s_function(a_fn: &AnsatzFunction, xi_basis: &DMatrix<f64>, x: &DVector<f64>) -> Result<C64> {
    let rd = &a_fn.root_data;
    let lam = check_chamber(rd, x)?;
    let pair = &rd.pair;
    let alg = rd.algebra();
    let w = rd.a_element(x);
    let omega = OmegaForm::at(a_fn, x)?;
    let rank = rd.rank();
    let mut frame = Vec::with_capacity(xi_basis.ncols());
    for xi in split_columns(xi_basis) {
        let y = y_field(pair, &xi, &w)?;
        let eta = combine(&y.g_re, &y.g_im);
        let v = combine(&y.m_re, &y.m_im);
        let g = alg.inner_product();
        let pair_with = |b: &DVector<f64>| -> C64 {
            let gb = g * b;
            v.iter().zip(gb.iter()).map(|(a, c)| a * *c).sum()
        };
        let u = DVector::from_fn(rank, |j, _| pair_with(&rd.a_basis.column(j).into_owned()));
        let mut eta_red = eta;
        for (root, t) in rd.roots.iter().zip(&lam) {
            for j in 0..root.multiplicity {
                let c = pair_with(&root.xi_basis.column(j).into_owned());
                let zeta = complexify(&root.zeta_basis.column(j).into_owned());
                eta_red -= zeta * (c / *t);
            }
        }
        frame.push(FrameVector { xi: eta_red, u });
    }
    let d = frame.len();
    let m = DMatrix::from_fn(d, d, |a, b| omega.eval(&frame[a], &frame[b].conj()));
    Ok(m.determinant())
}

/// Spacing of a chamber grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Unit direction in the chamber: the regular element scaled so that its
/// smallest root value is 1.
pub fn chamber_direction(rd: &RestrictedRootData) -> DVector<f64> {
    let m = rd.roots.iter().map(|r| r.eval(&rd.w_reg)).fold(f64::INFINITY, f64::min);
    if m.is_finite() && m > 0.0 { &rd.w_reg / m } else { rd.w_reg.clone() }
}

/// Parameter values `t` from `min` to `max`.
pub fn grid_values(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max > min) || count < 2 {
        return Err(Error::Input(format!(
            "grid needs 0 < min < max and count >= 2 (got {min}, {max}, {count})"
        )));
    }
    Ok((0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            match spacing {
                Spacing::Linear => min + (max - min) * s,
                Spacing::Log => (min.ln() + (max.ln() - min.ln()) * s).exp(),
            }
        })
        .collect())
}

/// Points `t * direction` along a chamber ray.
pub fn chamber_ray_grid(
    rd: &RestrictedRootData,
    min: f64,
    max: f64,
    count: usize,
    spacing: Spacing,
) -> Result<Vec<DVector<f64>>> {
    let d = chamber_direction(rd);
    Ok(grid_values(min, max, count, spacing)?.into_iter().map(|t| &d * t).collect())
}

/// Default grid: 64 log-spaced points with every root value in `[1e-2, 3]`
/// at the lower end.
pub fn default_grid(rd: &RestrictedRootData) -> Vec<DVector<f64>> {
    chamber_ray_grid(rd, 1e-2, 3.0, 64, Spacing::Log).expect("valid default grid")
}
