//! Analytic functions of normal operators.
//!
//! Every supported function is split as `f(t) = even(t^2) + t * odd(t^2)`, so
//! `f(A) = even(A^2) + A * odd(A^2)`. For skew or symmetric `A` the square is
//! symmetric, which reduces the evaluation to a real symmetric eigenproblem.
//! Negative eigenvalues of `A^2` (skew part) turn the circular functions into
//! their hyperbolic counterparts.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;

/// Registered spectral functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpectralFn {
    /// sin t / t
    Sinc,
    /// cos t
    Cos,
    /// sin t
    Sin,
    /// (1 - cos t) / t
    OneMinusCosOverT,
    /// t / sin t
    TOverSin,
    /// 1 / cos t
    Sec,
    /// t cos t / sin t
    TCot,
    /// (cos t - 1) / sin t
    CosMinusOneOverSin,
    /// tan t
    Tan,
    /// (cos t - 1) / (t cos t)
    CosMinusOneOverTCos,
    /// e^t
    Exp,
    /// (1 - e^{-t}) / t
    Dexp,
}

/// Below this `|s|` the kernels switch to their Taylor series.
const SERIES_CUTOFF: f64 = 1e-2;
/// Distance from a pole (in `t`) that counts as hitting it.
const POLE_TOL: f64 = 1e-6;

fn poly(s: f64, c: &[f64]) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * s + k)
}

fn near_pole(t: f64, offset: f64, period: f64, first: f64) -> bool {
    // Poles at offset + k * period for k >= 0, with the smallest one >= first.
    if t < first - POLE_TOL {
        return false;
    }
    let k = ((t - offset) / period).round();
    (t - (offset + k * period)).abs() < POLE_TOL && offset + k * period >= first - POLE_TOL
}

impl SpectralFn {
    pub const ALL: [SpectralFn; 12] = [
        SpectralFn::Sinc,
        SpectralFn::Cos,
        SpectralFn::Sin,
        SpectralFn::OneMinusCosOverT,
        SpectralFn::TOverSin,
        SpectralFn::Sec,
        SpectralFn::TCot,
        SpectralFn::CosMinusOneOverSin,
        SpectralFn::Tan,
        SpectralFn::CosMinusOneOverTCos,
        SpectralFn::Exp,
        SpectralFn::Dexp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectralFn::Sinc => "sinc",
            SpectralFn::Cos => "cos",
            SpectralFn::Sin => "sin",
            SpectralFn::OneMinusCosOverT => "(1-cos t)/t",
            SpectralFn::TOverSin => "t/sin t",
            SpectralFn::Sec => "1/cos t",
            SpectralFn::TCot => "t cos t/sin t",
            SpectralFn::CosMinusOneOverSin => "(cos t-1)/sin t",
            SpectralFn::Tan => "tan t",
            SpectralFn::CosMinusOneOverTCos => "(cos t-1)/(t cos t)",
            SpectralFn::Exp => "exp",
            SpectralFn::Dexp => "(1-exp(-t))/t",
        }
    }

    /// Scalar value at a real argument, for reference checks.
    pub fn eval_real(self, t: f64) -> f64 {
        let (e, o) = self.kernel(t * t).unwrap_or((f64::NAN, f64::NAN));
        e + t * o
    }

    /// Even and odd kernels at `s = t^2`, where `s < 0` means `t = i*theta`.
    pub fn kernel(self, s: f64) -> Result<(f64, f64)> {
        let small = s.abs() < SERIES_CUTOFF;
        let pos = s > 0.0;
        let r = s.abs().sqrt();
        let pole = |offset: f64, period: f64, first: f64| -> Result<()> {
            if pos && near_pole(r, offset, period, first) {
                Err(Error::SingularParameter { function: self.name(), eigenvalue: r })
            } else {
                Ok(())
            }
        };
        use std::f64::consts::PI;
        let out = match self {
            SpectralFn::Sinc | SpectralFn::Sin => {
                let v = if small {
                    poly(s, &[1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0, 1.0 / 362880.0])
                } else if pos {
                    r.sin() / r
                } else {
                    r.sinh() / r
                };
                if self == SpectralFn::Sinc { (v, 0.0) } else { (0.0, v) }
            }
            SpectralFn::Cos => (if pos { r.cos() } else { r.cosh() }, 0.0),
            SpectralFn::OneMinusCosOverT => {
                let v = if small {
                    poly(s, &[0.5, -1.0 / 24.0, 1.0 / 720.0, -1.0 / 40320.0, 1.0 / 3628800.0])
                } else if pos {
                    (1.0 - r.cos()) / s
                } else {
                    (r.cosh() - 1.0) / (r * r)
                };
                (0.0, v)
            }
            SpectralFn::TOverSin => {
                pole(PI, PI, PI)?;
                let v = if small {
                    poly(s, &[1.0, 1.0 / 6.0, 7.0 / 360.0, 31.0 / 15120.0, 127.0 / 604800.0])
                } else if pos {
                    r / r.sin()
                } else {
                    r / r.sinh()
                };
                (v, 0.0)
            }
            SpectralFn::Sec => {
                pole(PI / 2.0, PI, PI / 2.0)?;
                (if pos { 1.0 / r.cos() } else { 1.0 / r.cosh() }, 0.0)
            }
            SpectralFn::TCot => {
                pole(PI, PI, PI)?;
                let v = if small {
                    poly(s, &[1.0, -1.0 / 3.0, -1.0 / 45.0, -2.0 / 945.0, -1.0 / 4725.0])
                } else if pos {
                    r / r.tan()
                } else {
                    r / r.tanh()
                };
                (v, 0.0)
            }
            SpectralFn::CosMinusOneOverSin => {
                pole(PI, 2.0 * PI, PI)?;
                let v = if small {
                    -poly(s, &[0.5, 1.0 / 24.0, 1.0 / 240.0, 17.0 / 40320.0, 31.0 / 725760.0])
                } else if pos {
                    (r.cos() - 1.0) / (r * r.sin())
                } else {
                    -(r.cosh() - 1.0) / (r * r.sinh())
                };
                (0.0, v)
            }
            SpectralFn::Tan => {
                pole(PI / 2.0, PI, PI / 2.0)?;
                let v = if small {
                    poly(s, &[1.0, 1.0 / 3.0, 2.0 / 15.0, 17.0 / 315.0, 62.0 / 2835.0])
                } else if pos {
                    r.tan() / r
                } else {
                    r.tanh() / r
                };
                (0.0, v)
            }
            SpectralFn::CosMinusOneOverTCos => {
                pole(PI / 2.0, PI, PI / 2.0)?;
                let v = if small {
                    -poly(
                        s,
                        &[0.5, 5.0 / 24.0, 61.0 / 720.0, 277.0 / 8064.0, 50521.0 / 3628800.0],
                    )
                } else if pos {
                    (r.cos() - 1.0) / (s * r.cos())
                } else {
                    -(r.cosh() - 1.0) / (r * r * r.cosh())
                };
                (0.0, v)
            }
            SpectralFn::Exp => {
                let even = if pos { r.cosh() } else { r.cos() };
                let odd = if small {
                    poly(s, &[1.0, 1.0 / 6.0, 1.0 / 120.0, 1.0 / 5040.0, 1.0 / 362880.0])
                } else if pos {
                    r.sinh() / r
                } else {
                    r.sin() / r
                };
                (even, odd)
            }
            SpectralFn::Dexp => {
                let (even, odd) = if small {
                    (
                        poly(s, &[1.0, 1.0 / 6.0, 1.0 / 120.0, 1.0 / 5040.0, 1.0 / 362880.0]),
                        -poly(s, &[0.5, 1.0 / 24.0, 1.0 / 720.0, 1.0 / 40320.0, 1.0 / 3628800.0]),
                    )
                } else if pos {
                    (r.sinh() / r, (1.0 - r.cosh()) / s)
                } else {
                    (r.sin() / r, -(1.0 - r.cos()) / (r * r))
                };
                (even, odd)
            }
        };
        Ok(out)
    }
}

/// `f(A)` for a matrix `A` whose square is symmetric (skew or symmetric `A`,
/// or any normal real matrix with real-symmetric square).
pub fn spectral_apply(a: &DMatrix<f64>, f: SpectralFn) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Input("spectral_apply needs a square matrix".into()));
    }
    let sq = a * a;
    let asym = (&sq - sq.transpose()).norm();
    if asym > 1e-9 * (1.0 + sq.norm()) {
        return Err(Error::Input(format!(
            "operator square is not symmetric (defect {asym:.3e}); operator is not normal"
        )));
    }
    let (vals, vecs) = sorted_symmetric_eigen(&sq);
    let mut even = DMatrix::zeros(n, n);
    let mut odd = DMatrix::zeros(n, n);
    for (i, &s) in vals.iter().enumerate() {
        let (e, o) = f.kernel(s)?;
        let v = vecs.column(i);
        let outer = v * v.transpose();
        even += &outer * e;
        odd += &outer * o;
    }
    Ok(even + a * odd)
}
