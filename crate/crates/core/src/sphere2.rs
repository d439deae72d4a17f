//! The explicit `SO(3)`-invariant family on `TS^2 = SO(3) x_{SO(2)} R^2`.
//!
//! `so(3)` is written in the orthonormal basis `X, Y, Z` with
//! `[X,Y] = -Z`, `[X,Z] = Y`, `[Z,Y] = X`; `a = RX`, `k = RZ`, `m = span(X, Y)`.
//! Coordinates of algebra elements are `[X, Y, Z]`.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kahler::{AnsatzFunction, RadialPotential, C64};
use crate::quadrature::integrate;
use crate::rootdata::RestrictedRootData;
use crate::spaces::sphere;

/// Absolute tolerance of the quadrature behind `h(x)`.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S2FamilyParams {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "c_Z")]
    pub c_z: f64,
    #[serde(rename = "c_Y", default)]
    pub c_y: f64,
}

impl S2FamilyParams {
    pub fn new(c: f64, c1: f64, c_z: f64, c_y: f64) -> Result<Self> {
        let p = S2FamilyParams { c, c1, c_z, c_y };
        p.validate()?;
        Ok(p)
    }

    pub fn ricci_flat(c: f64, c1: f64, c_z: f64) -> Result<Self> {
        Self::new(c, c1, c_z, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Input(format!("C must be positive and finite (got {})", self.c)));
        }
        if !(self.c1 >= 0.0) || !self.c1.is_finite() {
            return Err(Error::Input(format!("C1 must be non-negative and finite (got {})", self.c1)));
        }
        if !self.c_z.is_finite() || !self.c_y.is_finite() {
            return Err(Error::Input("c_Z and c_Y must be finite".into()));
        }
        Ok(())
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("x = {x} lies outside [0, inf)")));
    }
    Ok(())
}

fn check_interior(x: f64) -> Result<()> {
    check_x(x)?;
    if x == 0.0 {
        return Err(Error::Boundary("x = 0 is the zero section".into()));
    }
    Ok(())
}

/// `sqrt(C + c_Z^2 / cosh^2 x)`, the factor `f'(x) / sinh x` when `C1 = 0`, `c_Y = 0`.
fn factored_root(p: &S2FamilyParams, x: f64) -> f64 {
    let sech = 1.0 / x.cosh();
    (p.c + p.c_z * p.c_z * sech * sech).sqrt()
}

fn factored(p: &S2FamilyParams) -> bool {
    p.c1 == 0.0 && p.c_y == 0.0
}

/// `f'(x)^2 = C sinh^2 x + c_Z^2 tanh^2 x - c_Y^2 / sinh^2 x + C1`.
pub fn f_prime(p: &S2FamilyParams, x: f64) -> Result<f64> {
    check_x(x)?;
    if factored(p) {
        if x == 0.0 {
            return Err(Error::Boundary("f' vanishes at x = 0 when C1 = 0".into()));
        }
        return Ok(x.sinh() * factored_root(p, x));
    }
    let (s, t) = (x.sinh(), x.tanh());
    let mut sq = p.c * s * s + p.c_z * p.c_z * t * t + p.c1;
    if p.c_y != 0.0 {
        if x == 0.0 {
            return Err(Error::Boundary("c_Y / sinh x is singular at x = 0".into()));
        }
        sq -= p.c_y * p.c_y / (s * s);
    }
    if !(sq > 0.0) {
        return Err(Error::Domain(format!("f'(x)^2 = {sq} is not positive at x = {x}")));
    }
    Ok(sq.sqrt())
}

/// `f'' = (C + c_Z^2 / cosh^4 x + c_Y^2 / sinh^4 x) cosh x sinh x / f'`.
pub fn f_double_prime(p: &S2FamilyParams, x: f64) -> Result<f64> {
    let f1 = f_prime(p, x)?;
    let (c, s) = (x.cosh(), x.sinh());
    if factored(p) {
        let c4 = c.powi(4);
        return Ok((p.c + p.c_z * p.c_z / c4) * c / factored_root(p, x));
    }
    let mut k = p.c + p.c_z * p.c_z / c.powi(4);
    if p.c_y != 0.0 {
        k += p.c_y * p.c_y / s.powi(4);
    }
    Ok(k * c * s / f1)
}

/// `w(x)` with `w11 = 2 f''`, `w12 = 2 (i c_Z / cosh^2 x - c_Y / sinh^2 x)`,
/// `w22 = 2 f' / (cosh x sinh x)`.
pub fn w_matrix(p: &S2FamilyParams, x: f64) -> Result<Matrix2<C64>> {
    check_interior(x)?;
    let f1 = f_prime(p, x)?;
    let f2 = f_double_prime(p, x)?;
    let (c, s) = (x.cosh(), x.sinh());
    let w12 = C64::new(-2.0 * p.c_y / (s * s), 2.0 * p.c_z / (c * c));
    let w22 = if factored(p) { 2.0 * factored_root(p, x) / c } else { 2.0 * f1 / (c * s) };
    Ok(Matrix2::new(C64::new(2.0 * f2, 0.0), w12, w12.conj(), C64::new(w22, 0.0)))
}

pub fn det_w(p: &S2FamilyParams, x: f64) -> Result<f64> {
    let w = w_matrix(p, x)?;
    Ok(w[(0, 0)].re * w[(1, 1)].re - w[(0, 1)].norm_sqr())
}

/// Smallest eigenvalue of a 2x2 Hermitian matrix.
pub fn min_eigenvalue_2x2(w: &Matrix2<C64>) -> f64 {
    let (a, d) = (w[(0, 0)].re, w[(1, 1)].re);
    let h = 0.5 * (a - d);
    0.5 * (a + d) - (h * h + w[(0, 1)].norm_sqr()).sqrt()
}

/// `[u, v]` in `[X, Y, Z]` coordinates.
pub fn bracket(u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    -u.cross(v)
}

/// `a(x) = f' X + (c_Z / cosh x) Z + (c_Y / sinh x) Y` and its derivative.
fn a_and_derivative(p: &S2FamilyParams, x: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    check_interior(x)?;
    let f1 = f_prime(p, x)?;
    let f2 = f_double_prime(p, x)?;
    let (c, s) = (x.cosh(), x.sinh());
    let a = Vector3::new(f1, p.c_y / s, p.c_z / c);
    let da = Vector3::new(f2, -p.c_y * c / (s * s), -p.c_z * s / (c * c));
    Ok((a, da))
}

/// `omega((xi1, t1), (xi2, t2)) = -<a, [xi1, xi2]> + t1 <a', xi2> - t2 <a', xi1>`.
pub fn omega_eval(
    p: &S2FamilyParams,
    x: f64,
    (xi1, t1): (&Vector3<f64>, f64),
    (xi2, t2): (&Vector3<f64>, f64),
) -> Result<f64> {
    let (a, da) = a_and_derivative(p, x)?;
    Ok(-a.dot(&bracket(xi1, xi2)) + (t1 * da.dot(xi2) - t2 * da.dot(xi1)))
}

/// Matrix of `omega` on the frame `(X^l, Y^l, Z^l, d/dx)`.
pub fn omega_matrix(p: &S2FamilyParams, x: f64) -> Result<Matrix4<f64>> {
    let e = frame_vectors();
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = omega_eval(p, x, (&e[i].0, e[i].1), (&e[j].0, e[j].1))?;
        }
    }
    Ok(m)
}

fn frame_vectors() -> [(Vector3<f64>, f64); 4] {
    [
        (Vector3::x(), 0.0),
        (Vector3::y(), 0.0),
        (Vector3::z(), 0.0),
        (Vector3::zeros(), 1.0),
    ]
}

/// The invariant complex structure on the frame `(X^l, Y^l, Z^l, d/dx)`:
/// `X -> d/dx`, `Y -> -coth x Z`, `Z -> tanh x Y`, `d/dx -> -X`.
pub fn complex_structure(x: f64) -> Result<Matrix4<f64>> {
    check_interior(x)?;
    let mut j = Matrix4::zeros();
    j[(3, 0)] = 1.0;
    j[(2, 1)] = -1.0 / x.tanh();
    j[(1, 2)] = x.tanh();
    j[(0, 3)] = -1.0;
    Ok(j)
}

/// Metric coefficients in the coframe `(dx, theta^X, theta^Y, theta^Z)`;
/// off-diagonal entries are matrix entries of the symmetric form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CoframeMetric {
    pub g_xx: f64,
    pub g_XX: f64,
    pub g_YY: f64,
    pub g_ZZ: f64,
    pub g_XZ: f64,
    pub g_xY: f64,
    /// Cross terms present only when `c_Y != 0`.
    pub g_XY: f64,
    pub g_xZ: f64,
}

impl CoframeMetric {
    /// Symmetric matrix in the order `(dx, theta^X, theta^Y, theta^Z)`.
    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::new(
            self.g_xx, 0.0, self.g_xY, self.g_xZ,
            0.0, self.g_XX, self.g_XY, self.g_XZ,
            self.g_xY, self.g_XY, self.g_YY, 0.0,
            self.g_xZ, self.g_XZ, 0.0, self.g_ZZ,
        )
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix().symmetric_eigenvalues().min()
    }
}

pub fn coframe_metric(p: &S2FamilyParams, x: f64) -> Result<CoframeMetric> {
    check_interior(x)?;
    Ok(coframe_metric_from_derivatives(f_prime(p, x)?, f_double_prime(p, x)?, p.c_z, p.c_y, x))
}

/// The coframe coefficients for arbitrary values `f'(x)`, `f''(x)`.
pub fn coframe_metric_from_derivatives(f1: f64, f2: f64, c_z: f64, c_y: f64, x: f64) -> CoframeMetric {
    let (c, s) = (x.cosh(), x.sinh());
    CoframeMetric {
        g_xx: f2,
        g_XX: f2,
        g_YY: f1 * c / s,
        g_ZZ: f1 * s / c,
        g_XZ: -c_z * s / (c * c),
        g_xY: -c_z / c,
        g_XY: -c_y * c / (s * s),
        g_xZ: c_y / s,
    }
}

/// Matrix of `omega` in the order `(d/dx, X^l, Y^l, Z^l)`.
pub fn omega_coframe_matrix(p: &S2FamilyParams, x: f64) -> Result<Matrix4<f64>> {
    let om = omega_matrix(p, x)?;
    let order = [3usize, 0, 1, 2];
    Ok(Matrix4::from_fn(|a, b| om[(order[a], order[b])]))
}

/// `g(u, v) = omega(J u, v)` on the frame, reordered to `(dx, X, Y, Z)`.
pub fn metric_from_complex_structure(p: &S2FamilyParams, x: f64) -> Result<Matrix4<f64>> {
    let om = omega_matrix(p, x)?;
    let j = complex_structure(x)?;
    let g = j.transpose() * om;
    let order = [3usize, 0, 1, 2];
    Ok(Matrix4::from_fn(|a, b| g[(order[a], order[b])]))
}

/// The extended two-form on `G x m` at `(e, w)`, `w, u_i in m` (zero `Z`-part).
pub fn delta_form(
    p: &S2FamilyParams,
    w: &Vector3<f64>,
    (xi1, u1): (&Vector3<f64>, &Vector3<f64>),
    (xi2, u2): (&Vector3<f64>, &Vector3<f64>),
) -> Result<f64> {
    if w.z != 0.0 || u1.z != 0.0 || u2.z != 0.0 {
        return Err(Error::Input("w and u must lie in m = span(X, Y)".into()));
    }
    let r = w.norm();
    check_interior(r)?;
    let f1 = f_prime(p, r)?;
    let f2 = f_double_prime(p, r)?;
    let q = f1 / r;
    let dq = f2 / r - f1 / (r * r);
    let (c, s) = (r.cosh(), r.sinh());
    let z = Vector3::z();
    let mut out = -(w * q + z * (p.c_z / c)).dot(&bracket(xi1, xi2));
    out += (u1 * q + w * (dq * w.dot(u1) / r)).dot(xi2);
    out -= (u2 * q + w * (dq * w.dot(u2) / r)).dot(xi1);
    let k = p.c_z * s / (r * c * c);
    out -= k * (u1.dot(w) * z.dot(xi2) - u2.dot(w) * z.dot(xi1) + z.dot(&bracket(u1, u2)));
    Ok(out)
}

/// Coefficients `(a_0, c_0)` of `H^x = (a_0 X + c_0 Z, 0)`, the vector with
/// `omega((xi, t), H^x) = t`.
pub fn hamiltonian_hx(p: &S2FamilyParams, x: f64) -> Result<(f64, f64)> {
    let f1 = f_prime(p, x)?;
    let f2 = f_double_prime(p, x)?;
    let (c, s) = (x.cosh(), x.sinh());
    // a0 f'' - c0 c_Z sinh / cosh^2 = 1,  c0 f' - a0 c_Z / cosh = 0.
    let det = f2 * f1 - p.c_z * p.c_z * s / (c * c * c);
    if !(det > 0.0) {
        return Err(Error::Diagnostic(format!("f_U denominator {det} is not positive at x = {x}")));
    }
    Ok((f1 / det, p.c_z / c / det))
}

/// `f_U(x) = (f' cosh^3 x / (f'' f' cosh^3 x - c_Z^2 sinh x))^{1/2}`.
pub fn f_u(p: &S2FamilyParams, x: f64) -> Result<f64> {
    let (a0, _) = hamiltonian_hx(p, x)?;
    Ok(a0.sqrt())
}

/// `|H^x|^2` in the metric `g`.
pub fn hamiltonian_norm_sq(p: &S2FamilyParams, x: f64) -> Result<f64> {
    let (a0, c0) = hamiltonian_hx(p, x)?;
    let g = coframe_metric(p, x)?;
    Ok(c0 * c0 * g.g_ZZ + 2.0 * a0 * c0 * g.g_XZ + a0 * a0 * g.g_XX)
}

/// `(1 / f_U(x)) / (sqrt(C) sinh x)^{1/2}`.
pub fn asymptotic_ratio(p: &S2FamilyParams, x: f64) -> Result<f64> {
    Ok(1.0 / f_u(p, x)? / (p.c.sqrt() * x.sinh()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompletenessRow {
    pub x: f64,
    pub f_u: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessProfile {
    pub rows: Vec<CompletenessRow>,
    pub strictly_increasing: bool,
    pub asymptotic_ratio: f64,
}

/// `h(x) = int_b^x 1 / f_U` at `n` equally spaced points of `[b, x_max]`.
pub fn completeness_profile(p: &S2FamilyParams, b: f64, x_max: f64, n: usize) -> Result<CompletenessProfile> {
    if !(b > 0.0) || !(x_max > b) || n < 2 {
        return Err(Error::Input(format!("need 0 < b < x_max and n >= 2 (got {b}, {x_max}, {n})")));
    }
    let inv = |s: f64| f_u(p, s).map(|v| 1.0 / v).unwrap_or(f64::NAN);
    let mut rows = Vec::with_capacity(n);
    let mut h = 0.0;
    let mut prev = b;
    for i in 0..n {
        let x = b + (x_max - b) * i as f64 / (n - 1) as f64;
        let fu = f_u(p, x)?;
        if i > 0 {
            h += integrate(inv, prev, x, QUADRATURE_TOL / (n - 1) as f64)?;
        }
        rows.push(CompletenessRow { x, f_u: fu, h });
        prev = x;
    }
    let strictly_increasing = rows.windows(2).all(|w| w[1].h > w[0].h);
    Ok(CompletenessProfile { rows, strictly_increasing, asymptotic_ratio: asymptotic_ratio(p, x_max)? })
}

/// `h(x1) - h(x0)`.
pub fn h_increment(p: &S2FamilyParams, x0: f64, x1: f64) -> Result<f64> {
    f_u(p, x0)?;
    f_u(p, x1)?;
    integrate(|s| f_u(p, s).map(|v| 1.0 / v).unwrap_or(f64::NAN), x0, x1, QUADRATURE_TOL)
}

/// Limit of `w(x)` at `x -> 0` as real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitMatrix {
    pub w11: f64,
    pub w12_re: f64,
    pub w12_im: f64,
    pub w22: f64,
}

impl LimitMatrix {
    pub fn matrix(&self) -> Matrix2<C64> {
        let w12 = C64::new(self.w12_re, self.w12_im);
        Matrix2::new(C64::new(self.w11, 0.0), w12, w12.conj(), C64::new(self.w22, 0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionVerdict {
    pub extends_to_zero: bool,
    pub limit: Option<LimitMatrix>,
    pub limit_min_eigenvalue: Option<f64>,
    pub reason: String,
}

/// Whether the form extends smoothly over the zero section.
pub fn extension_at_zero(p: &S2FamilyParams) -> ExtensionVerdict {
    if p.c_y != 0.0 {
        return ExtensionVerdict {
            extends_to_zero: false,
            limit: None,
            limit_min_eigenvalue: None,
            reason: "c_Y != 0: w12 is unbounded at x = 0".into(),
        };
    }
    if p.c1 != 0.0 {
        return ExtensionVerdict {
            extends_to_zero: false,
            limit: None,
            limit_min_eigenvalue: None,
            reason: format!("C1 = {} != 0: f'(0) = sqrt(C1) does not vanish", p.c1),
        };
    }
    // Every entry below is the factored closed form evaluated at x = 0.
    let root = factored_root(p, 0.0);
    let limit = LimitMatrix {
        w11: 2.0 * (p.c + p.c_z * p.c_z) / root,
        w12_re: 0.0,
        w12_im: 2.0 * p.c_z,
        w22: 2.0 * root,
    };
    ExtensionVerdict {
        extends_to_zero: true,
        limit_min_eigenvalue: Some(min_eigenvalue_2x2(&limit.matrix())),
        limit: Some(limit),
        reason: "C1 = 0 and c_Y = 0".into(),
    }
}

/// One row of the Eguchi–Hanson comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct EhRow {
    pub t: f64,
    pub x: f64,
    /// Coefficients in `(dt, theta^X, theta^Y, theta^Z)` after `cosh x = (t/l)^2`.
    pub g_tt: f64,
    pub g_XX: f64,
    pub g_YY: f64,
    pub g_ZZ: f64,
    /// The same coefficients from the rational Eguchi–Hanson form
    /// `(4/l^2) [dt^2/(1 - l^4/t^4) + t^2/4 (s_X^2 + s_Y^2) + t^2/4 (1 - l^4/t^4) s_Z^2]`.
    pub ref_tt: f64,
    pub ref_XX: f64,
    pub ref_YY: f64,
    pub ref_ZZ: f64,
    /// Largest deviation after pulling the coefficients back to `x`.
    pub pullback_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EhComparison {
    pub ell: f64,
    pub rows: Vec<EhRow>,
    /// Max deviation of the pulled-back table from the coframe coefficients.
    pub max_pullback_error: f64,
    /// Max relative deviation from the rational reference form.
    pub max_reference_deviation: f64,
}

pub fn t_from_x(ell: f64, x: f64) -> f64 {
    ell * x.cosh().sqrt()
}

pub fn x_from_t(ell: f64, t: f64) -> Result<f64> {
    if !(t > ell) {
        return Err(Error::Domain(format!("t = {t} must exceed l = {ell}")));
    }
    let r = t / ell;
    // acosh(1 + u) with u = r^2 - 1 formed without cancellation.
    let u = (r - 1.0) * (r + 1.0);
    Ok((u + (u * (u + 2.0)).sqrt()).ln_1p())
}

/// Substitutes `cosh x = (t/l)^2` into the `C = 1`, `c_Z = 0`, `C1 = 0` metric.
pub fn eguchi_hanson_compare(ell: f64, sample_t: &[f64]) -> Result<EhComparison> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::Input(format!("l must be positive (got {ell})")));
    }
    let p = S2FamilyParams::ricci_flat(1.0, 0.0, 0.0)?;
    let mut rows = Vec::with_capacity(sample_t.len());
    for &t in sample_t {
        let x = x_from_t(ell, t)?;
        let g = coframe_metric(&p, x)?;
        // dx/dt = (2 t / l^2) / sinh x
        let dxdt = 2.0 * t / (ell * ell) / x.sinh();
        let row_t = [g.g_xx * dxdt * dxdt, g.g_XX, g.g_YY, g.g_ZZ];
        let q = (ell / t).powi(4);
        let s = 4.0 / (ell * ell);
        let reference = [s / (1.0 - q), s * t * t / 4.0, s * t * t / 4.0, s * t * t / 4.0 * (1.0 - q)];
        let back = [row_t[0] / (dxdt * dxdt), row_t[1], row_t[2], row_t[3]];
        let (c, sh) = (x.cosh(), x.sinh());
        let stenzel = [c, c, c, sh * x.tanh()];
        let pullback_error = back.iter().zip(&stenzel).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(EhRow {
            t,
            x,
            g_tt: row_t[0],
            g_XX: row_t[1],
            g_YY: row_t[2],
            g_ZZ: row_t[3],
            ref_tt: reference[0],
            ref_XX: reference[1],
            ref_YY: reference[2],
            ref_ZZ: reference[3],
            pullback_error,
        });
    }
    let max_pullback_error = rows.iter().map(|r| r.pullback_error).fold(0.0, f64::max);
    let max_reference_deviation = rows
        .iter()
        .flat_map(|r| {
            [(r.g_tt, r.ref_tt), (r.g_XX, r.ref_XX), (r.g_YY, r.ref_YY), (r.g_ZZ, r.ref_ZZ)]
        })
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    Ok(EhComparison { ell, rows, max_pullback_error, max_reference_deviation })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityPoint {
    pub x: f64,
    pub f_double_prime: f64,
    pub reduced_det: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub points: Vec<PositivityPoint>,
    pub kahler_on_grid: bool,
    /// `c_Z = c_Y = 0`, in which case `2f` is a potential of the form.
    pub potential_function: bool,
}

/// `f'' > 0` and `f'' f' / (cosh x sinh x) - c_Z^2 / cosh^4 x - c_Y^2 / sinh^4 x > 0`
/// for a supplied `f'`, `f''`.
pub fn positivity_check(c_z: f64, c_y: f64, potential: &RadialPotential, grid: &[f64]) -> PositivityVerdict {
    let points: Vec<PositivityPoint> = grid
        .iter()
        .map(|&x| {
            let f1 = (potential.f1)(x);
            let f2 = (potential.f2)(x);
            let (c, s) = (x.cosh(), x.sinh());
            let reduced_det = f2 * f1 / (c * s) - c_z * c_z / c.powi(4) - c_y * c_y / s.powi(4);
            PositivityPoint { x, f_double_prime: f2, reduced_det, pass: x > 0.0 && f2 > 0.0 && reduced_det > 0.0 }
        })
        .collect();
    PositivityVerdict {
        kahler_on_grid: points.iter().all(|p| p.pass),
        points,
        potential_function: c_z == 0.0 && c_y == 0.0,
    }
}

/// The closed-form `f'`, `f''` of a parameter set as a radial potential.
pub fn family_potential(p: &S2FamilyParams) -> RadialPotential {
    let (p1, p2) = (*p, *p);
    RadialPotential {
        f1: Arc::new(move |x| f_prime(&p1, x).unwrap_or(f64::NAN)),
        f2: Arc::new(move |x| f_double_prime(&p2, x).unwrap_or(f64::NAN)),
    }
}

/// The family as an ansatz on the root data of `S^2`.
pub fn s2_ansatz(p: &S2FamilyParams) -> Result<AnsatzFunction> {
    p.validate()?;
    let rd = Arc::new(RestrictedRootData::compute(&sphere(2)?)?);
    let n = rd.algebra().dim();
    AnsatzFunction::new(rd, Arc::new(family_potential(p)), nalgebra::DVector::zeros(n), vec![p.c_z], vec![p.c_y])
}

/// One row of the plot table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyRow {
    pub x: f64,
    pub f1: f64,
    pub f2: f64,
    pub w11: f64,
    pub w12_abs: f64,
    pub w22: f64,
    pub det_w: f64,
    pub metric: CoframeMetric,
    pub f_u: Option<f64>,
    pub h: Option<f64>,
}

pub const CSV_HEADER: [&str; 15] = [
    "x", "f'", "f''", "w11", "|w12|", "w22", "detw", "g_xx", "g_XX", "g_YY", "g_ZZ", "g_XZ", "g_xY", "f_U", "h",
];

impl FamilyRow {
    pub fn csv_fields(&self) -> [f64; 15] {
        let m = &self.metric;
        [
            self.x,
            self.f1,
            self.f2,
            self.w11,
            self.w12_abs,
            self.w22,
            self.det_w,
            m.g_xx,
            m.g_XX,
            m.g_YY,
            m.g_ZZ,
            m.g_XZ,
            m.g_xY,
            self.f_u.unwrap_or(f64::NAN),
            self.h.unwrap_or(f64::NAN),
        ]
    }
}

/// Table over increasing grid points; `h` is measured from the first point.
/// `f_U` and `h` are left empty where `f_U` is undefined.
pub fn family_table(p: &S2FamilyParams, grid: &[f64]) -> Result<Vec<FamilyRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    let mut h = Some(0.0);
    for (i, &x) in grid.iter().enumerate() {
        if i > 0 && !(x > grid[i - 1]) {
            return Err(Error::Input("grid must be strictly increasing".into()));
        }
        let w = w_matrix(p, x)?;
        let fu = f_u(p, x).ok();
        if i > 0 {
            h = match (h, fu) {
                (Some(h0), Some(_)) => h_increment(p, grid[i - 1], x).ok().map(|d| h0 + d),
                _ => None,
            };
        } else if fu.is_none() {
            h = None;
        }
        rows.push(FamilyRow {
            x,
            f1: f_prime(p, x)?,
            f2: f_double_prime(p, x)?,
            w11: w[(0, 0)].re,
            w12_abs: w[(0, 1)].norm(),
            w22: w[(1, 1)].re,
            det_w: det_w(p, x)?,
            metric: coframe_metric(p, x)?,
            f_u: fu,
            h,
        });
    }
    Ok(rows)
}
