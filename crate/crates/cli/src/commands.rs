//! Subcommand pipelines. Each returns a JSON report, a verdict and an optional table.

use std::fs;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde_json::{json, Value};
use tkahler::curvature::{chart_metric_from_coframe, kahler_form_closedness, ricci_report, sample_points, Scheme};
use tkahler::kahler::{
    chamber_ray_grid, grid_values, kahler_check, ricci_flat_residual, s_function, AnsatzFunction, ConstancyReport,
    Potential, QuadraticPotential, RadialPotential,
};
use tkahler::rootdata::RestrictedRootData;
use tkahler::spaces::{self, CustomAlgebraFile, SymmetricSpace};
use tkahler::sphere2::{self, CSV_HEADER};

use crate::config::{PotentialSpec, RunConfig, DEFAULT_S2};

/// Why a run did not produce a verdict.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<tkahler::Error> for Failure {
    fn from(e: tkahler::Error) -> Self {
        match e {
            tkahler::Error::Input(_) => Failure::Config(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub struct Run {
    pub report: Value,
    pub pass: bool,
    pub table: Option<Table>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn build_space(cfg: &RunConfig) -> Outcome<SymmetricSpace> {
    let spec = cfg.space();
    if let Some(path) = spec.strip_prefix("custom:") {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {path}: {e}")))?;
        let file: CustomAlgebraFile =
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("bad algebra file {path}: {e}")))?;
        return Ok(spaces::custom(&file)?);
    }
    Ok(spaces::builtin(spec)?)
}

fn require_two_sphere(cfg: &RunConfig, command: &str) -> Outcome<()> {
    if cfg.is_two_sphere() {
        Ok(())
    } else {
        Err(Failure::Config(format!("{command} needs space sphere:2 (got {})", cfg.space())))
    }
}

/// Whether the ansatz is the closed-form two-sphere family.
fn uses_family(cfg: &RunConfig) -> bool {
    cfg.is_two_sphere() && cfg.ansatz.potential.is_none()
}

fn build_potential(spec: Option<&PotentialSpec>, rank: usize) -> Outcome<Arc<dyn Potential>> {
    match spec {
        None => Ok(Arc::new(QuadraticPotential { center: DVector::zeros(rank), q: DMatrix::identity(rank, rank) })),
        Some(PotentialSpec::Quadratic { q, center }) => {
            if q.len() != rank || q.iter().any(|r| r.len() != rank) {
                return Err(Failure::Config(format!("potential q must be {rank}x{rank}")));
            }
            let center = center.clone().unwrap_or_else(|| vec![0.0; rank]);
            if center.len() != rank {
                return Err(Failure::Config(format!("potential center needs {rank} entries")));
            }
            Ok(Arc::new(QuadraticPotential {
                center: DVector::from_vec(center),
                q: DMatrix::from_fn(rank, rank, |i, j| q[i][j]),
            }))
        }
        Some(PotentialSpec::Sinh { scale }) => {
            if rank != 1 {
                return Err(Failure::Config("the sinh potential needs a rank-one space".into()));
            }
            let s = *scale;
            Ok(Arc::new(RadialPotential { f1: Arc::new(move |x| s * x.sinh()), f2: Arc::new(move |x| s * x.cosh()) }))
        }
    }
}

fn build_ansatz(cfg: &RunConfig, space: &SymmetricSpace) -> Outcome<AnsatzFunction> {
    if uses_family(cfg) {
        return Ok(sphere2::s2_ansatz(&cfg.s2_params())?);
    }
    let rd = Arc::new(RestrictedRootData::compute(space)?);
    let a = &cfg.ansatz;
    let n = rd.algebra().dim();
    let p = rd.sigma_big_h.len();
    let potential = build_potential(a.potential.as_ref(), rd.rank())?;
    let z_h = DVector::from_vec(a.z_h.clone().unwrap_or_else(|| vec![0.0; n]));
    let c_k = a.c_k.clone().unwrap_or_else(|| vec![0.0; p]);
    let c_m = a.c_m.clone().unwrap_or_else(|| vec![0.0; p]);
    Ok(AnsatzFunction::new(rd, potential, z_h, c_k, c_m)?)
}

fn ansatz_json(cfg: &RunConfig) -> Value {
    if uses_family(cfg) {
        json!({ "s2": cfg.s2_params() })
    } else {
        serde_json::to_value(&cfg.ansatz).expect("serializable")
    }
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("space".into(), json!(cfg.space()));
    m
}

fn chamber_grid(cfg: &RunConfig, a_fn: &AnsatzFunction) -> Outcome<(Vec<f64>, Vec<DVector<f64>>)> {
    let g = &cfg.grid;
    let t = grid_values(g.min, g.max, g.count, g.spacing)?;
    let pts = chamber_ray_grid(&a_fn.root_data, g.min, g.max, g.count, g.spacing)?;
    Ok((t, pts))
}

fn point_columns(rank: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((0..rank).map(|j| format!("x{j}"))).collect()
}

pub fn roots(cfg: &RunConfig) -> Outcome<Run> {
    let space = build_space(cfg)?;
    let rd = RestrictedRootData::compute(&space)?;
    let mut m = header(cfg, "roots");
    m.insert("roots".into(), serde_json::to_value(rd.report(&space.name)).expect("serializable"));
    Ok(Run { report: Value::Object(m), pass: true, table: None })
}

pub fn kahler(cfg: &RunConfig) -> Outcome<Run> {
    let space = build_space(cfg)?;
    let a_fn = build_ansatz(cfg, &space)?;
    let (t, grid) = chamber_grid(cfg, &a_fn)?;
    let rep = kahler_check(&a_fn, &grid)?;
    let mut cols = point_columns(a_fn.rank());
    cols.extend(["min_eig_h", "min_eig_star", "res1", "res2", "det_h", "det_star"].map(String::from));
    let rows = rep
        .points
        .iter()
        .zip(&t)
        .map(|(p, &t)| {
            let mut r: Vec<Option<f64>> = std::iter::once(Some(t)).chain(p.x.iter().map(|v| Some(*v))).collect();
            r.extend([Some(p.min_eig_h), p.min_eig_star, Some(p.res1), Some(p.res2), Some(p.det_h), p.det_star]);
            r
        })
        .collect();
    let mut m = header(cfg, "kahler-check");
    m.insert("ansatz".into(), ansatz_json(cfg));
    m.insert("grid".into(), serde_json::to_value(&cfg.grid).expect("serializable"));
    m.insert("kahler_on_grid".into(), json!(rep.kahler_on_grid));
    m.insert("first_failure".into(), json!(rep.first_failure));
    m.insert("points".into(), serde_json::to_value(&rep.points).expect("serializable"));
    Ok(Run { report: Value::Object(m), pass: rep.kahler_on_grid, table: Some(Table { header: cols, rows }) })
}

pub fn ricci_scan(cfg: &RunConfig) -> Outcome<Run> {
    let space = build_space(cfg)?;
    let a_fn = build_ansatz(cfg, &space)?;
    let (t, grid) = chamber_grid(cfg, &a_fn)?;
    let kahler = kahler_check(&a_fn, &grid)?;
    let det = ricci_flat_residual(&a_fn, &grid)?;
    let basis = a_fn.root_data.pair.m_basis.clone();
    let s_abs: Vec<f64> =
        grid.par_iter().map(|x| s_function(&a_fn, &basis, x).map(|s| s.norm())).collect::<Result<_, _>>()?;
    let s = ConstancyReport::from_values(s_abs);
    let tol = &cfg.tolerances;
    let ricci_flat = kahler.kahler_on_grid && det.max_rel_dev < tol.det_constancy && s.max_rel_dev < tol.s_constancy;

    let mut cols = point_columns(a_fn.rank());
    cols.extend(["det", "abs_s"].map(String::from));
    let rows = grid
        .iter()
        .zip(&t)
        .enumerate()
        .map(|(i, (x, &t))| {
            let mut r: Vec<Option<f64>> = std::iter::once(Some(t)).chain(x.iter().map(|v| Some(*v))).collect();
            r.extend([finite(det.values[i]), finite(s.values[i])]);
            r
        })
        .collect();
    let mut m = header(cfg, "ricci-scan");
    m.insert("ansatz".into(), ansatz_json(cfg));
    m.insert("grid".into(), serde_json::to_value(&cfg.grid).expect("serializable"));
    m.insert("tolerances".into(), json!({"det_constancy": tol.det_constancy, "s_constancy": tol.s_constancy}));
    m.insert("kahler_on_grid".into(), json!(kahler.kahler_on_grid));
    m.insert("const".into(), json!(det.mean));
    m.insert("det_max_rel_dev".into(), json!(det.max_rel_dev));
    m.insert("s_mean".into(), json!(s.mean));
    m.insert("s_max_rel_dev".into(), json!(s.max_rel_dev));
    m.insert("ricci_flat".into(), json!(ricci_flat));
    Ok(Run { report: Value::Object(m), pass: ricci_flat, table: Some(Table { header: cols, rows }) })
}

pub fn s2_family(cfg: &RunConfig) -> Outcome<Run> {
    require_two_sphere(cfg, "s2-family")?;
    let p = cfg.s2_params();
    let g = &cfg.grid;
    let xs = grid_values(g.min, g.max, g.count, g.spacing)?;
    let table = sphere2::family_table(&p, &xs)?;
    let det = ConstancyReport::from_values(table.iter().map(|r| r.det_w).collect());
    let positivity = sphere2::positivity_check(p.c_z, p.c_y, &sphere2::family_potential(&p), &xs);
    let min_metric_eig = table.iter().map(|r| r.metric.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    let extension = sphere2::extension_at_zero(&p);
    let det_constant = det.max_rel_dev < cfg.tolerances.det_constancy;
    let pass = det_constant && positivity.kahler_on_grid && min_metric_eig > 0.0;

    let mut m = header(cfg, "s2-family");
    m.insert("params".into(), serde_json::to_value(p).expect("serializable"));
    m.insert("grid".into(), serde_json::to_value(g).expect("serializable"));
    m.insert("det_w_mean".into(), json!(det.mean));
    m.insert("det_w_expected".into(), json!(4.0 * p.c));
    m.insert("det_w_max_rel_dev".into(), json!(det.max_rel_dev));
    m.insert("kahler_on_grid".into(), json!(positivity.kahler_on_grid));
    m.insert("min_metric_eigenvalue".into(), json!(min_metric_eig));
    m.insert("extends_to_zero".into(), json!(extension.extends_to_zero));
    m.insert("extension".into(), serde_json::to_value(&extension).expect("serializable"));
    m.insert("pass".into(), json!(pass));
    let rows = table.iter().map(|r| r.csv_fields().iter().map(|v| finite(*v)).collect()).collect();
    let header = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    Ok(Run { report: Value::Object(m), pass, table: Some(Table { header, rows }) })
}

pub fn eh_compare(cfg: &RunConfig, ell: f64, samples: usize) -> Outcome<Run> {
    require_two_sphere(cfg, "eh-compare")?;
    if cfg.s2_params() != DEFAULT_S2 {
        return Err(Failure::Config("eh-compare uses the member C = 1, C1 = 0, c_Z = 0, c_Y = 0".into()));
    }
    if samples == 0 {
        return Err(Failure::Config("need at least one sample".into()));
    }
    let ts: Vec<f64> = (1..=samples).map(|i| ell * (1.0 + 0.3 * i as f64)).collect();
    let cmp = sphere2::eguchi_hanson_compare(ell, &ts)?;
    let round_trip = cmp
        .rows
        .iter()
        .map(|r| (sphere2::t_from_x(ell, r.x) - r.t).abs() / r.t)
        .fold(0.0, f64::max);
    let tol = cfg.tolerances.eguchi_hanson;
    let pass = cmp.max_pullback_error < tol && cmp.max_reference_deviation < tol && round_trip < 1e-12;
    let mut m = header(cfg, "eh-compare");
    m.insert("ell".into(), json!(ell));
    m.insert("max_pullback_error".into(), json!(cmp.max_pullback_error));
    m.insert("max_reference_deviation".into(), json!(cmp.max_reference_deviation));
    m.insert("max_round_trip_error".into(), json!(round_trip));
    m.insert("rows".into(), serde_json::to_value(&cmp.rows).expect("serializable"));
    m.insert("pass".into(), json!(pass));
    let header = ["t", "x", "g_tt", "g_XX", "g_YY", "g_ZZ", "ref_tt", "ref_XX", "ref_YY", "ref_ZZ"]
        .map(String::from)
        .to_vec();
    let rows = cmp
        .rows
        .iter()
        .map(|r| [r.t, r.x, r.g_tt, r.g_XX, r.g_YY, r.g_ZZ, r.ref_tt, r.ref_XX, r.ref_YY, r.ref_ZZ].map(Some).to_vec())
        .collect();
    Ok(Run { report: Value::Object(m), pass, table: Some(Table { header, rows }) })
}

pub fn completeness(cfg: &RunConfig, b: f64, x_max: f64, n: usize) -> Outcome<Run> {
    require_two_sphere(cfg, "completeness")?;
    let p = cfg.s2_params();
    let prof = sphere2::completeness_profile(&p, b, x_max, n)?;
    let ratio_ok = (prof.asymptotic_ratio - 1.0).abs() < cfg.tolerances.asymptotic_ratio;
    let pass = prof.strictly_increasing && ratio_ok;
    let mut m = header(cfg, "completeness");
    m.insert("params".into(), serde_json::to_value(p).expect("serializable"));
    m.insert("b".into(), json!(b));
    m.insert("x_max".into(), json!(x_max));
    m.insert("strictly_increasing".into(), json!(prof.strictly_increasing));
    m.insert("asymptotic_ratio".into(), json!(prof.asymptotic_ratio));
    m.insert("h_at_x_max".into(), json!(prof.rows.last().map(|r| r.h)));
    m.insert("pass".into(), json!(pass));
    let rows = prof.rows.iter().map(|r| vec![Some(r.x), Some(r.f_u), Some(r.h)]).collect();
    let header = ["x", "f_U", "h"].map(String::from).to_vec();
    Ok(Run { report: Value::Object(m), pass, table: Some(Table { header, rows }) })
}

/// Sampling of chart points for `curvature-verify`.
#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    pub points: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub scheme: Scheme,
    pub u_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

pub fn curvature_verify(cfg: &RunConfig, s: &Sampling) -> Outcome<Run> {
    require_two_sphere(cfg, "curvature-verify")?;
    if s.points == 0 || !(s.fd_step > 0.0) || !(s.x_min > 0.0) || !(s.x_max > s.x_min) || !(s.u_max > 0.0) {
        return Err(Failure::Config("need points >= 1, fd-step > 0, u-max > 0 and 0 < x-min < x-max".into()));
    }
    let p = cfg.s2_params();
    let chart = chart_metric_from_coframe(&p)?.with_step(s.fd_step).with_scheme(s.scheme);
    let pts = sample_points(s.points, s.seed, s.u_max, s.x_min, s.x_max);
    let rep = ricci_report(&chart, &pts)?;
    let closed: Vec<f64> =
        pts.par_iter().map(|q| kahler_form_closedness(&p, q, 1e-4)).collect::<Result<_, _>>()?;
    let max_closed = closed.iter().cloned().fold(0.0, f64::max);
    let tol = &cfg.tolerances;
    let ricci_flat = rep.max_entry < tol.ricci;
    let pass = ricci_flat && max_closed < tol.closedness;
    let mut m = header(cfg, "curvature-verify");
    m.insert("params".into(), serde_json::to_value(p).expect("serializable"));
    m.insert("fd_step".into(), json!(s.fd_step));
    m.insert("scheme".into(), serde_json::to_value(s.scheme).expect("serializable"));
    m.insert("seed".into(), json!(s.seed));
    m.insert("max_ricci_entry".into(), json!(rep.max_entry));
    m.insert("max_closedness_residual".into(), json!(max_closed));
    m.insert("ricci_flat".into(), json!(ricci_flat));
    m.insert("points".into(), serde_json::to_value(&rep.points).expect("serializable"));
    m.insert("pass".into(), json!(pass));
    let header = ["u1", "u2", "u3", "x", "max_ricci", "frobenius", "convergence_ratio", "closedness"]
        .map(String::from)
        .to_vec();
    let rows = rep
        .points
        .iter()
        .zip(&closed)
        .map(|(r, c)| {
            let mut row: Vec<Option<f64>> = r.coords.iter().map(|v| Some(*v)).collect();
            row.extend([Some(r.max_entry), Some(r.frobenius), finite(r.convergence_ratio), Some(*c)]);
            row
        })
        .collect();
    Ok(Run { report: Value::Object(m), pass, table: Some(Table { header, rows }) })
}

