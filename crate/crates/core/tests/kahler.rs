use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use tkahler::kahler::*;
use tkahler::linalg::split_columns;
use tkahler::rootdata::RestrictedRootData;
use tkahler::spaces::{so3_xyz, sphere, sphere_scaled, su_so};
use tkahler::sphere2::{s2_ansatz, S2FamilyParams};
use tkahler::Error;

fn rd_of(space: tkahler::Result<tkahler::spaces::SymmetricSpace>) -> Arc<RestrictedRootData> {
    Arc::new(RestrictedRootData::compute(&space.unwrap()).unwrap())
}

fn x1(t: f64) -> DVector<f64> {
    DVector::from_element(1, t)
}

fn radial(f1: impl Fn(f64) -> f64 + Send + Sync + 'static, f2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Arc<RadialPotential> {
    Arc::new(RadialPotential { f1: Arc::new(f1), f2: Arc::new(f2) })
}

fn s2(c: f64, c1: f64, c_z: f64) -> AnsatzFunction {
    s2_ansatz(&S2FamilyParams::ricci_flat(c, c1, c_z).unwrap()).unwrap()
}

fn line(min: f64, max: f64, n: usize) -> Vec<DVector<f64>> {
    (0..n).map(|i| x1(min + (max - min) * i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn r_and_s_on_so3() {
    let rd = rd_of(sphere(2));
    let (x, y, z) = so3_xyz();
    let (r, s) = rs_operators(&rd, &x1(1.0)).unwrap();
    let c = 1.0 / 1f64.cosh();
    assert!((c - 0.648054).abs() < 1e-6);
    assert!((&r * &y - &y * c).amax() < 1e-14);
    assert!((&r * &z - &z * c).amax() < 1e-14);
    assert!((&r * &x).amax() < 1e-15 && (&s * &x).amax() < 1e-15);
    // T Y = -Z, T Z = Y.
    assert!((&s * &y + &z / 1f64.sinh()).amax() < 1e-14);
    assert!((&s * &z - &y / 1f64.sinh()).amax() < 1e-14);
    assert!(matches!(rs_operators(&rd, &x1(-0.5)), Err(Error::Chamber(_))));
}

#[test]
fn r_symmetric_s_skew_kernel_a_plus_h() {
    for rd in [rd_of(sphere(4)), rd_of(su_so(3))] {
        let alg = rd.algebra();
        let g = alg.inner_product();
        let x = chamber_direction(&rd) * 0.7;
        let (r, s) = rs_operators(&rd, &x).unwrap();
        assert!((g * &r - (g * &r).transpose()).amax() < 1e-12);
        assert!((g * &s + (g * &s).transpose()).amax() < 1e-12);
        for v in split_columns(&rd.a_basis).into_iter().chain(split_columns(&rd.h_basis)) {
            assert!((&r * &v).amax() < 1e-12 && (&s * &v).amax() < 1e-12);
        }
    }
}

#[test]
fn ansatz_values() {
    let (x, _, z) = so3_xyz();
    let a = s2(1.0, 0.0, 0.0);
    for t in [0.3, 1.0, 2.5] {
        assert!((a.value(&x1(t)).unwrap() - &x * t.sinh()).amax() < 1e-13 * t.cosh());
    }
    let a = s2(1.0, 0.0, 1.0);
    let s = 1f64.sinh();
    let f1 = (s * s + s * s / 1f64.cosh().powi(2)).sqrt();
    let want = &x * f1 + &z / 1f64.cosh();
    assert!((a.value(&x1(1.0)).unwrap() - want).amax() < 1e-14);
    assert!(a.g_big_h_residual(&x1(1.0)).unwrap() < 1e-10);

    // Constant z_h with no potential.
    let rd = rd_of(sphere(3));
    assert_eq!(rd.z_h_basis.ncols(), 1);
    let zh = rd.z_h_basis.column(0) * 0.8;
    let p = rd.sigma_big_h.len();
    let a = AnsatzFunction::new(rd.clone(), Arc::new(QuadraticPotential::zero(1)), zh.clone(), vec![0.0; p], vec![0.0; p]).unwrap();
    for t in [0.2, 1.7] {
        assert!((a.value(&x1(t)).unwrap() - &zh).amax() == 0.0);
    }
    let bad = rd.a_basis.column(0).into_owned();
    assert!(AnsatzFunction::new(rd, Arc::new(QuadraticPotential::zero(1)), bad, vec![0.0; p], vec![0.0; p]).is_err());
}

#[test]
fn commutation_relations() {
    for cz in [0.0, 1.0, -2.5] {
        let mut a = s2(1.0, 0.0, cz);
        a.c_m = vec![0.7];
        for t in [0.1, 1.0, 3.0] {
            let (r1, r2) = commutation_residual(&a, &x1(t)).unwrap();
            assert!(r1 < 1e-10 && r2 < 1e-10, "{cz} {t}: {r1} {r2}");
        }
    }
    let rd = rd_of(su_so(3));
    let pot = QuadraticPotential { center: DVector::zeros(2), q: DMatrix::identity(2, 2) };
    let a = AnsatzFunction::new(rd.clone(), Arc::new(pot), DVector::zeros(8), vec![], vec![]).unwrap();
    let (r1, r2) = commutation_residual(&a, &chamber_direction(&rd)).unwrap();
    assert_eq!((r1, r2), (0.0, 0.0));
}

#[test]
fn nonzero_z_h_on_three_sphere_breaks_first_relation() {
    let rd = rd_of(sphere(3));
    let alg = rd.algebra();
    let zh = rd.z_h_basis.column(0).into_owned();
    let p = rd.sigma_big_h.len();
    let a = AnsatzFunction::new(rd.clone(), Arc::new(QuadraticPotential::zero(1)), zh.clone(), vec![0.0; p], vec![0.0; p]).unwrap();
    let t = 0.9;
    let (r1, r2) = commutation_residual(&a, &x1(t)).unwrap();
    // Only (R^2 + S^2) ad_{z_h} survives: on m_lambda it is (1/cosh^2 - 1/sinh^2) ad_{z_h}.
    let xi = rd.roots[0].xi_basis.column(0).into_owned();
    let ad_norm = alg.norm(&alg.br(&zh, &xi));
    let want = (1.0 / t.cosh().powi(2) - 1.0 / t.sinh().powi(2)).abs() * ad_norm;
    assert!(ad_norm > 0.1);
    assert!((r1 - want).abs() < 1e-10 * want, "{r1} vs {want}");
    assert!(r2 < 1e-14);
}

fn generic_ansatz(rd: Arc<RestrictedRootData>) -> AnsatzFunction {
    let r = rd.rank();
    let q = DMatrix::from_fn(r, r, |i, j| if i == j { 1.5 + i as f64 } else { 0.2 });
    let pot = QuadraticPotential { center: DVector::from_element(r, -0.3), q };
    let p = rd.sigma_big_h.len();
    let n = rd.algebra().dim();
    let c_k = (0..p).map(|i| 0.7 - 0.2 * i as f64).collect();
    let c_m = (0..p).map(|i| 0.3 + 0.1 * i as f64).collect();
    AnsatzFunction::new(rd, Arc::new(pot), DVector::zeros(n), c_k, c_m).unwrap()
}

#[test]
fn closed_form_matches_frame_evaluation() {
    let mut cases: Vec<AnsatzFunction> = vec![s2(1.0, 0.0, 1.3), s2(2.0, 1.0, -0.4)];
    cases[1].c_m = vec![0.25];
    for n in [3, 4] {
        cases.push(generic_ansatz(rd_of(sphere(n))));
    }
    cases.push(generic_ansatz(rd_of(su_so(3))));
    for a in &cases {
        let field = hermitian_fields(a);
        let dir = chamber_direction(&a.root_data);
        for t in [0.15, 0.8, 2.0] {
            let x = &dir * t;
            let closed = field.closed_form(&x).unwrap();
            let (frame, diag) = field.from_frame(&x).unwrap();
            let scale = closed.w_h.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!((&closed.w_h - &frame.w_h).iter().all(|z| z.norm() < 1e-10 * scale));
            assert_eq!(closed.w_star.shape(), frame.w_star.shape());
            assert!((&closed.w_star - &frame.w_star).iter().all(|z| z.norm() < 1e-10 * scale));
            assert!(hermitian_defect(&closed.w_h) < 1e-12 * scale);
            assert!(hermitian_defect(&closed.w_star) < 1e-12 * scale);
            assert!(diag.type_defect < 1e-10 * scale, "type defect {}", diag.type_defect);
            assert!(diag.mixed_block < 1e-10 * scale);
        }
    }
}

#[test]
fn s2_hermitian_matrix_values() {
    let a = s2(1.0, 0.0, 0.0);
    let w = hermitian_fields(&a).closed_form(&x1(1.0)).unwrap();
    assert!((w.w_h[(0, 0)].re - 2.0 * 1f64.cosh()).abs() < 1e-13);
    assert!((w.w_h[(1, 1)].re - 2.0 / 1f64.cosh()).abs() < 1e-13);
    assert_eq!(w.w_star.nrows(), 0);
    let mut a = s2(1.0, 0.0, 0.6);
    a.c_m = vec![0.4];
    let t: f64 = 0.7;
    let w = hermitian_fields(&a).closed_form(&x1(t)).unwrap();
    let want = nalgebra::Complex::new(-0.8 / t.sinh().powi(2), 1.2 / t.cosh().powi(2));
    assert!((w.w_h[(0, 1)] - want).norm() < 1e-13);
}

#[test]
fn determinant_is_four_c() {
    for &(c, c1, cz) in &[(1.0, 0.0, 0.0), (1.0, 0.0, 1.0), (2.0, 0.0, 0.5), (2.0, 1.0, 0.5)] {
        let a = s2(c, c1, cz);
        let rep = ricci_flat_residual(&a, &default_grid(&a.root_data)).unwrap();
        assert_eq!(rep.values.len(), 64);
        assert!(rep.max_rel_dev < 1e-10);
        assert!((rep.mean - 4.0 * c).abs() < 1e-10 * 4.0 * c);
    }
    let rd = rd_of(sphere(2));
    let planted = AnsatzFunction::new(
        rd.clone(),
        radial(|x| x.sinh().powi(2), |x| 2.0 * x.sinh() * x.cosh()),
        DVector::zeros(3),
        vec![0.0],
        vec![0.0],
    )
    .unwrap();
    let rep = ricci_flat_residual(&planted, &default_grid(&rd)).unwrap();
    assert!(rep.max_rel_dev > 1e-2);
}

#[test]
fn s_function_tracks_determinant() {
    let rd = rd_of(sphere(2));
    let xi_basis = rd.pair.m_basis.clone();
    let planted = AnsatzFunction::new(
        rd.clone(),
        radial(|x| x.sinh().powi(2), |x| 2.0 * x.sinh() * x.cosh()),
        DVector::zeros(3),
        vec![0.0],
        vec![0.0],
    )
    .unwrap();
    for (a, flat) in [(s2(1.0, 0.0, 0.0), true), (s2(1.0, 1.0, 1.0), true), (planted, false)] {
        let grid = default_grid(&a.root_data);
        let s: Vec<f64> = grid.iter().map(|x| s_function(&a, &xi_basis, x).unwrap().norm()).collect();
        let d = ricci_flat_residual(&a, &grid).unwrap().values;
        let ratio = ConstancyReport::from_values(s.iter().zip(&d).map(|(s, d)| s / d).collect());
        assert!(ratio.max_rel_dev < 1e-8, "ratio dev {}", ratio.max_rel_dev);
        let sc = ConstancyReport::from_values(s);
        if flat {
            assert!(sc.max_rel_dev < 1e-8);
        } else {
            assert!(sc.max_rel_dev > 1e-2);
        }
    }
    // Higher-dimensional sphere: the ratio is still a global constant.
    let rd4 = rd_of(sphere(4));
    let a = generic_ansatz(rd4.clone());
    let grid = chamber_ray_grid(&rd4, 0.1, 2.0, 12, Spacing::Linear).unwrap();
    let basis = rd4.pair.m_basis.clone();
    let ratios: Vec<f64> = grid
        .iter()
        .map(|x| {
            let w = hermitian_fields(&a).closed_form(x).unwrap();
            s_function(&a, &basis, x).unwrap().norm() / (hermitian_det(&w.w_h) * hermitian_det(&w.w_star))
        })
        .collect();
    assert!(ConstancyReport::from_values(ratios).max_rel_dev < 1e-8);
}

#[test]
fn kahler_verdicts() {
    let a = s2(1.0, 0.0, 0.0);
    let grid = line(0.1, 3.0, 30);
    let rep = kahler_check(&a, &grid).unwrap();
    assert!(rep.kahler_on_grid && rep.first_failure.is_none());
    assert!(rep.points.iter().all(|p| p.min_eig_star.is_none()));

    // c_Y = 1 with f' = sinh fails near the wall.
    let rd = rd_of(sphere(2));
    let a = AnsatzFunction::new(rd.clone(), radial(f64::sinh, f64::cosh), DVector::zeros(3), vec![0.0], vec![1.0]).unwrap();
    let rep = kahler_check(&a, &grid).unwrap();
    assert!(!rep.kahler_on_grid);
    let first = rep.first_failure.unwrap()[0];
    assert!((first - 0.1).abs() < 1e-15);
    let t: f64 = first;
    assert!(t.cosh() * t.sinh() / (t.cosh() * t.sinh()) - 1.0 / t.sinh().powi(4) < 0.0);

    let rd3 = rd_of(su_so(3));
    let n = rd3.algebra().dim();
    let grid = chamber_ray_grid(&rd3, 0.05, 2.0, 10, Spacing::Log).unwrap();
    let convex = QuadraticPotential { center: DVector::zeros(2), q: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]) };
    let a = AnsatzFunction::new(rd3.clone(), Arc::new(convex), DVector::zeros(n), vec![], vec![]).unwrap();
    assert!(kahler_check(&a, &grid).unwrap().kahler_on_grid);
    let saddle = QuadraticPotential { center: DVector::zeros(2), q: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]) };
    let a = AnsatzFunction::new(rd3, Arc::new(saddle), DVector::zeros(n), vec![], vec![]).unwrap();
    assert!(!kahler_check(&a, &grid).unwrap().kahler_on_grid);
    assert!(kahler_check(&a, &[]).is_err());
}

#[test]
fn rescaled_inner_product_keeps_verdicts() {
    let base = s2(1.0, 0.0, 1.0);
    let grid = line(0.1, 3.0, 16);
    let c = 3.0f64;
    let rd = rd_of(sphere_scaled(2, c));
    let rc = c.sqrt();
    let sign = rd.roots[0].zeta_basis.column(0).dot(&base.root_data.roots[0].zeta_basis.column(0)).signum();
    let lam = rd.roots[0].lambda_prime[0];
    assert!((lam - 1.0 / rc).abs() < 1e-12);
    // Same two-form: a' = a / c in the rescaled coordinates x' = sqrt(c) x.
    let p = S2FamilyParams::ricci_flat(1.0, 0.0, 1.0).unwrap();
    let scaled = AnsatzFunction::new(
        rd.clone(),
        radial(
            move |x| tkahler::sphere2::f_prime(&p, x / rc).unwrap() / rc,
            move |x| tkahler::sphere2::f_double_prime(&p, x / rc).unwrap() / c,
        ),
        DVector::zeros(3),
        vec![sign / rc],
        vec![0.0],
    )
    .unwrap();
    let grid2: Vec<DVector<f64>> = grid.iter().map(|x| x * rc).collect();
    let r1 = kahler_check(&base, &grid).unwrap();
    let r2 = kahler_check(&scaled, &grid2).unwrap();
    assert_eq!(r1.kahler_on_grid, r2.kahler_on_grid);
    for (p1, p2) in r1.points.iter().zip(&r2.points) {
        assert!((p1.res1 - p2.res1 * c).abs() < 1e-10);
        assert!(p2.min_eig_h > 0.0);
    }
    let d1 = ricci_flat_residual(&base, &grid).unwrap();
    let d2 = ricci_flat_residual(&scaled, &grid2).unwrap();
    assert!(d1.max_rel_dev < 1e-10 && d2.max_rel_dev < 1e-10);
    // The S-function is the same function of the point.
    let b1 = base.root_data.pair.m_basis.clone();
    let b2 = b1.clone();
    for (x, y) in grid.iter().zip(&grid2) {
        let s1 = s_function(&base, &b1, x).unwrap();
        let s2v = s_function(&scaled, &b2, y).unwrap();
        assert!((s1 - s2v).norm() < 1e-9 * s1.norm(), "{s1} {s2v}");
    }
}

#[test]
fn perturbed_profiles_break_type() {
    let mut a = s2(1.0, 0.0, 1.0);
    a.c_m = vec![0.5];
    let x = x1(0.9);
    let (_, d) = hermitian_fields(&a).from_frame(&x).unwrap();
    assert!(d.type_defect < 1e-12);
    a.profiles = Some(Arc::new(|t: f64| {
        let (c, s) = (t.cosh(), t.sinh());
        [1.0 / c + 0.1 * t, -s / (c * c) + 0.1, 1.0 / s, -c / (s * s)]
    }));
    let (_, d) = hermitian_fields(&a).from_frame(&x).unwrap();
    assert!(d.type_defect > 1e-3, "{}", d.type_defect);
}

#[test]
fn potential_case_on_the_two_sphere() {
    let rd = rd_of(sphere(2));
    let grid = default_grid(&rd);
    for c in [1.0f64, 2.5] {
        let rc: f64 = c.sqrt();
        let pot = RadialPotential { f1: Arc::new(move |x: f64| rc * x.sinh()), f2: Arc::new(move |x: f64| rc * x.cosh()) };
        let rep = potential_case_condition(&pot, &rd, &grid, SinhArgument::ChamberPoint).unwrap();
        assert!(rep.kahler && rep.constancy.max_rel_dev < 1e-10);
        assert!((rep.constancy.mean - c).abs() < 1e-10 * c);
        let printed = potential_case_condition(&pot, &rd, &grid, SinhArgument::AnsatzValue).unwrap();
        assert!(printed.constancy.max_rel_dev > 1e-2);
    }
    let concave = RadialPotential { f1: Arc::new(|x: f64| x.sin()), f2: Arc::new(|x: f64| x.cos()) };
    let rep = potential_case_condition(&concave, &rd, &line(0.5, 3.0, 6), SinhArgument::ChamberPoint).unwrap();
    assert!(!rep.kahler && !rep.non_kahler_points.is_empty());
}

/// `p = f'` for the four-sphere: `p^3 p' = K sinh^3(2x) / 8`, `p(0) = 0`.
fn s4_closed(k: f64, x: f64) -> f64 {
    let c = (2.0 * x).cosh();
    (k / 2.0 * (c.powi(3) / 6.0 - c / 2.0 + 1.0 / 3.0)).powf(0.25)
}

#[test]
fn potential_case_on_the_four_sphere() {
    let k = 1.7;
    // RK4 oracle for the closed form.
    let rhs = |x: f64, p: f64| k * (2.0 * x).sinh().powi(3) / (8.0 * p.powi(3));
    let (mut x, mut p) = (0.5, s4_closed(k, 0.5));
    let h = 1e-4;
    while x < 2.0 - 1e-12 {
        let k1 = rhs(x, p);
        let k2 = rhs(x + h / 2.0, p + h / 2.0 * k1);
        let k3 = rhs(x + h / 2.0, p + h / 2.0 * k2);
        let k4 = rhs(x + h, p + h * k3);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x += h;
    }
    assert!((p - s4_closed(k, 2.0)).abs() < 1e-10 * p);

    let rd = rd_of(sphere(4));
    assert_eq!(rd.roots[0].multiplicity, 3);
    let lam = rd.roots[0].lambda_prime[0];
    assert!((lam.abs() - 1.0).abs() < 1e-12);
    let pot = RadialPotential {
        f1: Arc::new(move |x: f64| lam * s4_closed(k, lam * x)),
        f2: Arc::new(move |x: f64| {
            let t = lam * x;
            k * (2.0 * t).sinh().powi(3) / (8.0 * s4_closed(k, t).powi(3))
        }),
    };
    let grid = chamber_ray_grid(&rd, 0.05, 3.0, 40, Spacing::Log).unwrap();
    let rep = potential_case_condition(&pot, &rd, &grid, SinhArgument::ChamberPoint).unwrap();
    assert!(rep.kahler);
    assert!(rep.constancy.max_rel_dev < 1e-8, "{}", rep.constancy.max_rel_dev);
    assert!((rep.constancy.mean - k).abs() < 1e-8 * k);
}

#[test]
fn finite_difference_potential() {
    let f = Arc::new(|x: &DVector<f64>| (x[0]).cosh() + x[0] * x[1] * x[1] + 0.5 * x[1].powi(4));
    let fd = FdPotential::new(f);
    let x = DVector::from_vec(vec![0.7, -0.4]);
    let g = fd.gradient(&x);
    let gw = [0.7f64.sinh() + 0.16, 2.0 * 0.7 * -0.4 + 2.0 * (-0.4f64).powi(3)];
    assert!((g[0] - gw[0]).abs() < 1e-9 && (g[1] - gw[1]).abs() < 1e-9);
    let h = fd.hessian(&x);
    let hw = DMatrix::from_row_slice(2, 2, &[0.7f64.cosh(), -0.8, -0.8, 1.4 + 6.0 * 0.16]);
    assert!((h - hw).amax() < 1e-7);
}

#[test]
fn grids() {
    let v = grid_values(0.01, 3.0, 64, Spacing::Log).unwrap();
    assert_eq!(v.len(), 64);
    assert!((v[0] - 0.01).abs() < 1e-15 && (v[63] - 3.0).abs() < 1e-12);
    assert!(grid_values(0.0, 1.0, 5, Spacing::Linear).is_err());
    assert!(grid_values(1.0, 1.0, 5, Spacing::Linear).is_err());
    let rd = rd_of(su_so(3));
    let d = chamber_direction(&rd);
    let m = rd.roots.iter().map(|r| r.eval(&d)).fold(f64::INFINITY, f64::min);
    assert!((m - 1.0).abs() < 1e-12);
}

#[test]
fn undefined_profile_is_not_kahler() {
    // With c_Y = 1, f'^2 < 0 near the zero section and the potential returns NaN there.
    let a = s2_ansatz(&S2FamilyParams::new(1.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
    let rep = kahler_check(&a, &default_grid(&a.root_data)).unwrap();
    assert!(!rep.kahler_on_grid);
    assert!(rep.points[0].min_eig_h.is_nan());
    assert!(rep.points.last().unwrap().pass);
    let m = DMatrix::from_element(2, 2, C64::new(f64::NAN, 0.0));
    assert!(min_eigenvalue(&m).is_nan());
}
