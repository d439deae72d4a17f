//! Finite-difference Levi-Civita calculus on coordinate charts, and the
//! exponential chart `(u, x) -> (exp(u1 X + u2 Y + u3 Z), x)` of `SO(3) x W+`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix4, Rotation3, Vector3};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{MatrixLieAlgebra, SpectralFn};
use crate::spaces::so;
use crate::sphere2::{coframe_metric, coframe_metric_from_derivatives, omega_coframe_matrix, S2FamilyParams};

pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Validity radius of the exponential chart on `SO(3)`.
pub const CHART_RADIUS: f64 = FRAC_PI_2;

/// Coordinates to a square matrix (metric or two-form components).
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;
/// Coframe coefficients at `x`, order `(dx, theta^X, theta^Y, theta^Z)`.
pub type CoframeFn = Arc<dyn Fn(f64) -> Result<Matrix4<f64>> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Second-order central differences.
    Central,
    /// Central differences at `h` and `h/2` combined to fourth order.
    Richardson,
}

#[derive(Clone)]
pub struct ChartMetric {
    pub dim: usize,
    pub metric_fn: MatrixFn,
    /// Domain box.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub fd_step: f64,
    pub scheme: Scheme,
}

impl std::fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartMetric")
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("fd_step", &self.fd_step)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl ChartMetric {
    pub fn new(dim: usize, metric_fn: MatrixFn, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        ChartMetric { dim, metric_fn, lower, upper, fd_step: DEFAULT_FD_STEP, scheme: Scheme::Richardson }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn check_point(&self, p: &[f64], margin: f64) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Input(format!("chart point needs {} coordinates", self.dim)));
        }
        for (i, &c) in p.iter().enumerate() {
            if !(c - margin >= self.lower[i] && c + margin <= self.upper[i]) {
                return Err(Error::Chart(format!(
                    "coordinate {i} = {c} is within {margin} of the domain box [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    pub fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p, 0.0)?;
        (self.metric_fn)(p)
    }
}

fn shifted(p: &[f64], i: usize, d: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += d;
    q
}

fn central<F>(f: &F, p: &[f64], i: usize, h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let a = f(&shifted(p, i, h))?;
    let b = f(&shifted(p, i, -h))?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
}

fn derivative<F>(f: &F, p: &[f64], i: usize, h: f64, scheme: Scheme) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    match scheme {
        Scheme::Central => central(f, p, i, h),
        Scheme::Richardson => {
            let c1 = central(f, p, i, h)?;
            let c2 = central(f, p, i, h / 2.0)?;
            Ok(c1.iter().zip(&c2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
        }
    }
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    m.iter().cloned().collect()
}

/// `Gamma^k_ij` stored at `k * d^2 + i * d + j`.
pub fn christoffel(chart: &ChartMetric, p: &[f64]) -> Result<Vec<f64>> {
    christoffel_with(chart, p, chart.fd_step, chart.scheme)
}

fn christoffel_with(chart: &ChartMetric, p: &[f64], h: f64, scheme: Scheme) -> Result<Vec<f64>> {
    let d = chart.dim;
    let g = (chart.metric_fn)(p)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Diagnostic(format!("metric is singular at {p:?}")))?;
    let mf = |q: &[f64]| (chart.metric_fn)(q).map(|m| flat(&m));
    // dg[l][i + d * j] = d_l g_ij (column-major flattening).
    let dg: Vec<Vec<f64>> = (0..d).map(|l| derivative(&mf, p, l, h, scheme)).collect::<Result<_>>()?;
    let at = |l: usize, i: usize, j: usize| dg[l][i + d * j];
    let mut gam = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += ginv[(k, l)] * (at(i, j, l) + at(j, i, l) - at(l, i, j));
                }
                gam[k * d * d + i * d + j] = 0.5 * s;
            }
        }
    }
    Ok(gam)
}

/// Ricci tensor `R_ij = d_k G^k_ij - d_j G^k_ik + G^k_kl G^l_ij - G^k_jl G^l_ik`.
pub fn ricci_tensor(chart: &ChartMetric, p: &[f64]) -> Result<DMatrix<f64>> {
    ricci_with(chart, p, chart.fd_step, chart.scheme)
}

fn ricci_with(chart: &ChartMetric, p: &[f64], h: f64, scheme: Scheme) -> Result<DMatrix<f64>> {
    let d = chart.dim;
    chart.check_point(p, 2.0 * h)?;
    let gam = christoffel_with(chart, p, h, scheme)?;
    let gf = |q: &[f64]| christoffel_with(chart, q, h, scheme);
    let dgam: Vec<Vec<f64>> = (0..d).map(|m| derivative(&gf, p, m, h, scheme)).collect::<Result<_>>()?;
    let ix = |k: usize, i: usize, j: usize| k * d * d + i * d + j;
    let ric = DMatrix::from_fn(d, d, |i, j| {
        let mut r = 0.0;
        for k in 0..d {
            r += dgam[k][ix(k, i, j)] - dgam[j][ix(k, i, k)];
            for l in 0..d {
                r += gam[ix(k, k, l)] * gam[ix(l, i, j)] - gam[ix(k, j, l)] * gam[ix(l, i, k)];
            }
        }
        r
    });
    Ok(ric)
}

/// `tr(g^-1 Ric g^-1 Ric)`.
pub fn ricci_norm_sq(g: &DMatrix<f64>, ric: &DMatrix<f64>) -> Result<f64> {
    let ginv = g.clone().try_inverse().ok_or_else(|| Error::Diagnostic("singular metric".into()))?;
    let m = &ginv * ric;
    Ok((&m * &m).trace())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RicciPoint {
    pub coords: Vec<f64>,
    pub max_entry: f64,
    pub frobenius: f64,
    pub symmetry_defect: f64,
    /// Error of plain central differences at `h` over the error at `h/2`,
    /// both measured against the extrapolated tensor at `h/2`.
    pub convergence_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RicciReport {
    pub fd_step: f64,
    pub points: Vec<RicciPoint>,
    pub max_entry: f64,
}

pub fn ricci_point(chart: &ChartMetric, p: &[f64]) -> Result<RicciPoint> {
    let h = chart.fd_step;
    let ric = ricci_tensor(chart, p)?;
    let reference = ricci_with(chart, p, h / 2.0, Scheme::Richardson)?;
    let e1 = (ricci_with(chart, p, h, Scheme::Central)? - &reference).amax();
    let e2 = (ricci_with(chart, p, h / 2.0, Scheme::Central)? - &reference).amax();
    Ok(RicciPoint {
        coords: p.to_vec(),
        max_entry: ric.amax(),
        frobenius: ric.norm(),
        symmetry_defect: (&ric - ric.transpose()).amax(),
        convergence_ratio: e1 / e2,
    })
}

/// Ricci tensor at every sample point, evaluated concurrently.
pub fn ricci_report(chart: &ChartMetric, points: &[Vec<f64>]) -> Result<RicciReport> {
    if points.is_empty() {
        return Err(Error::Input("no sample points".into()));
    }
    let pts: Vec<RicciPoint> = points.par_iter().map(|p| ricci_point(chart, p)).collect::<Result<_>>()?;
    let max_entry = pts.iter().map(|p| p.max_entry).fold(0.0, f64::max);
    Ok(RicciReport { fd_step: chart.fd_step, points: pts, max_entry })
}

fn so3() -> &'static MatrixLieAlgebra {
    static ALG: std::sync::OnceLock<MatrixLieAlgebra> = std::sync::OnceLock::new();
    ALG.get_or_init(|| so(3, 1.0).expect("so(3)"))
}

/// Rotation vector of `exp(u1 X + u2 Y + u3 Z)` with `X = E12 - E21`,
/// `Y = E13 - E31`, `Z = E23 - E32`.
fn axis_of(u: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-u.z, u.y, -u.x)
}

pub fn so3_exp(u: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::new(axis_of(u))
}

/// Inverse of [`so3_exp`] on rotations by angle below `pi`.
pub fn so3_log(r: &Rotation3<f64>) -> Vector3<f64> {
    let a = r.scaled_axis();
    Vector3::new(-a.z, a.y, -a.x)
}

/// Columns: `theta(d/du_i)` at `exp(U)`, i.e. `(1 - e^{-ad U}) / ad U`.
pub fn left_trivialized_dexp(u: &Vector3<f64>) -> Result<DMatrix<f64>> {
    so3().analytic_of_ad(&DVector::from_column_slice(u.as_slice()), SpectralFn::Dexp)
}

fn chart_jacobian(p: &[f64]) -> Result<DMatrix<f64>> {
    if p.len() != 4 {
        return Err(Error::Input("chart point needs (u1, u2, u3, x)".into()));
    }
    let u = Vector3::new(p[0], p[1], p[2]);
    if !(u.norm() < CHART_RADIUS) {
        return Err(Error::Chart(format!("|u| = {} exceeds the chart radius pi/2", u.norm())));
    }
    if !(p[3] > 0.0) {
        return Err(Error::Chart(format!("x = {} is not in the open chamber", p[3])));
    }
    let dexp = left_trivialized_dexp(&u)?;
    let mut j = DMatrix::zeros(4, 4);
    j[(0, 3)] = 1.0;
    j.view_mut((1, 0), (3, 3)).copy_from(&dexp);
    Ok(j)
}

fn to_dmatrix(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

fn box_bounds() -> (Vec<f64>, Vec<f64>) {
    let r = CHART_RADIUS;
    (vec![-r, -r, -r, 0.0], vec![r, r, r, f64::INFINITY])
}

/// Pulls coframe coefficients back to the exponential chart.
pub fn exp_chart_metric(coframe: CoframeFn) -> ChartMetric {
    let f: MatrixFn = Arc::new(move |p: &[f64]| {
        let j = chart_jacobian(p)?;
        let g = to_dmatrix(&coframe(p[3])?);
        let m = j.transpose() * g * &j;
        Ok((&m + m.transpose()) * 0.5)
    });
    let (lo, hi) = box_bounds();
    ChartMetric::new(4, f, lo, hi)
}

/// The metric of a parameter set in the exponential chart.
pub fn chart_metric_from_coframe(params: &S2FamilyParams) -> Result<ChartMetric> {
    params.validate()?;
    let p = *params;
    Ok(exp_chart_metric(Arc::new(move |x| Ok(coframe_metric(&p, x)?.matrix()))))
}

/// The metric built from arbitrary `f'`, `f''` (not Ricci-flat in general).
pub fn chart_metric_from_profile(
    f1: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f2: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    c_z: f64,
) -> ChartMetric {
    exp_chart_metric(Arc::new(move |x| Ok(coframe_metric_from_derivatives(f1(x), f2(x), c_z, 0.0, x).matrix())))
}

/// A two-form given by its components in a chart.
#[derive(Clone)]
pub struct ChartForm {
    pub dim: usize,
    pub form_fn: MatrixFn,
}

impl ChartForm {
    /// `max |d omega(e_i, e_j, e_k)|` by central differences of step `h`.
    pub fn closedness_residual(&self, p: &[f64], h: f64) -> Result<f64> {
        let d = self.dim;
        if p.len() != d {
            return Err(Error::Input(format!("chart point needs {d} coordinates")));
        }
        let ff = |q: &[f64]| (self.form_fn)(q).map(|m| flat(&m));
        let dw: Vec<Vec<f64>> = (0..d).map(|l| central(&ff, p, l, h)).collect::<Result<_>>()?;
        let at = |l: usize, i: usize, j: usize| dw[l][i + d * j];
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let v = at(i, j, k) + at(j, k, i) + at(k, i, j);
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// The Kähler form of a parameter set in the exponential chart.
pub fn chart_kahler_form(params: &S2FamilyParams) -> Result<ChartForm> {
    params.validate()?;
    let p = *params;
    let f: MatrixFn = Arc::new(move |q: &[f64]| {
        let j = chart_jacobian(q)?;
        let om = to_dmatrix(&omega_coframe_matrix(&p, q[3])?);
        Ok(j.transpose() * om * &j)
    });
    Ok(ChartForm { dim: 4, form_fn: f })
}

pub fn kahler_form_closedness(params: &S2FamilyParams, coords: &[f64], h: f64) -> Result<f64> {
    chart_kahler_form(params)?.closedness_residual(coords, h)
}

/// The Kähler form plus `u3 du1 ^ du2`, whose differential is `du1 ^ du2 ^ du3`.
pub fn planted_non_closed_form(params: &S2FamilyParams) -> Result<ChartForm> {
    let base = chart_kahler_form(params)?;
    let f: MatrixFn = Arc::new(move |q: &[f64]| {
        let mut m = (base.form_fn)(q)?;
        m[(0, 1)] += q[2];
        m[(1, 0)] -= q[2];
        Ok(m)
    });
    Ok(ChartForm { dim: 4, form_fn: f })
}

/// Constant metric on a box.
pub fn flat_fixture(g: DMatrix<f64>) -> ChartMetric {
    let d = g.nrows();
    ChartMetric::new(d, Arc::new(move |_p: &[f64]| Ok(g.clone())), vec![-1e3; d], vec![1e3; d])
}

/// Unit round sphere `d theta^2 + sin^2 theta d phi^2`; `Ric = g`.
pub fn round_sphere_fixture() -> ChartMetric {
    let f: MatrixFn = Arc::new(|p: &[f64]| {
        let s = p[0].sin();
        Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s]))
    });
    ChartMetric::new(2, f, vec![0.0, -10.0], vec![std::f64::consts::PI, 10.0])
}

/// Deterministic chart points with `|u| <= u_max` and `x` in `[x_min, x_max]`.
pub fn sample_points(n: usize, seed: u64, u_max: f64, x_min: f64, x_max: f64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = loop {
                let v = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if v.norm() <= 1.0 {
                    break v * u_max;
                }
            };
            vec![u.x, u.y, u.z, rng.random_range(x_min..x_max)]
        })
        .collect()
}
