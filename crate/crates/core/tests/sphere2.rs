use std::sync::Arc;

use nalgebra::{Matrix4, Vector3};
use proptest::prelude::*;
use tkahler::kahler::RadialPotential;
use tkahler::sphere2::*;
use tkahler::Error;

fn params(c: f64, c1: f64, c_z: f64) -> S2FamilyParams {
    S2FamilyParams::ricci_flat(c, c1, c_z).unwrap()
}

/// `f'` straight from its defining square root.
fn naive_f1(c: f64, c1: f64, c_z: f64, x: f64) -> f64 {
    let (s, ch) = (x.sinh(), x.cosh());
    (c * s * s + c_z * c_z * s * s / (ch * ch) + c1).sqrt()
}

/// `f''` by a fourth-order central difference of [`naive_f1`].
fn naive_f2(c: f64, c1: f64, c_z: f64, x: f64) -> f64 {
    let h = 1e-3;
    let f = |t| naive_f1(c, c1, c_z, t);
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn f_prime_examples() {
    let p = params(1.0, 0.0, 0.0);
    assert!((f_prime(&p, 1.0).unwrap() - 1.1752011936438014).abs() < 1e-15);
    assert!((f_double_prime(&p, 1.0).unwrap() - 1.5430806348152437).abs() < 1e-15);
    let p = params(1.0, 4.0, 0.0);
    assert!((f_prime(&p, 1e-9).unwrap() - 2.0).abs() < 1e-12);
    assert!((f_prime(&p, 0.0).unwrap() - 2.0).abs() < 1e-15);
    let p = params(2.5, 0.0, 0.0);
    for x in [0.1, 1.0, 4.0] {
        assert!((f_prime(&p, x).unwrap() - 2.5f64.sqrt() * x.sinh()).abs() < 1e-13 * x.cosh());
    }
}

#[test]
fn f_prime_matches_defining_formula() {
    for &(c, c1, cz) in &[(1.0, 0.0, 1.0), (2.0, 0.0, 0.5), (1.0, 1.0, 3.0), (0.3, 2.0, -1.0)] {
        let p = params(c, c1, cz);
        for x in [0.05, 0.3, 1.0, 2.0, 5.0] {
            let f1 = f_prime(&p, x).unwrap();
            assert!((f1 - naive_f1(c, c1, cz, x)).abs() < 1e-12 * f1.max(1.0));
            let f2 = f_double_prime(&p, x).unwrap();
            assert!((f2 - naive_f2(c, c1, cz, x)).abs() < 1e-8 * f2.max(1.0), "{c} {c1} {cz} {x}");
        }
    }
}

#[test]
fn near_zero_evaluation_is_smooth() {
    let p = params(1.0, 0.0, 2.0);
    // f'' tends to (C + c_Z^2) / sqrt(C + c_Z^2).
    let lim = 5f64.sqrt();
    for x in [1e-4, 1e-6, 1e-9] {
        assert!((f_double_prime(&p, x).unwrap() - lim).abs() < 10.0 * x);
    }
}

#[test]
fn boundary_and_domain_errors() {
    let p = params(1.0, 0.0, 1.0);
    assert!(matches!(f_prime(&p, 0.0), Err(Error::Boundary(_))));
    assert!(matches!(f_prime(&p, -0.1), Err(Error::Domain(_))));
    assert!(matches!(w_matrix(&params(1.0, 1.0, 0.0), 0.0), Err(Error::Boundary(_))));
    assert!(matches!(coframe_metric(&p, 0.0), Err(Error::Boundary(_))));
    assert!(S2FamilyParams::new(0.0, 0.0, 0.0, 0.0).is_err());
    assert!(S2FamilyParams::new(1.0, -1.0, 0.0, 0.0).is_err());
    let py = S2FamilyParams::new(1.0, 0.0, 0.0, 1.0).unwrap();
    assert!(matches!(f_prime(&py, 0.1), Err(Error::Domain(_))));
}

#[test]
fn w_matrix_examples() {
    let w = w_matrix(&params(1.0, 0.0, 0.0), 1.0).unwrap();
    assert!((w[(0, 0)].re - 2.0 * 1f64.cosh()).abs() < 1e-14);
    // 2 f' / (cosh sinh) with f' = sinh.
    assert!((w[(1, 1)].re - 2.0 / 1f64.cosh()).abs() < 1e-14);
    assert!((w[(0, 0)].re * w[(1, 1)].re - 4.0).abs() < 1e-14);
    assert!(w[(0, 1)].norm() == 0.0);
    let w = w_matrix(&params(1.0, 0.0, 1.5), 0.7).unwrap();
    assert!((w[(0, 1)].im - 3.0 / 0.7f64.cosh().powi(2)).abs() < 1e-14);
    assert!((w[(1, 0)] - w[(0, 1)].conj()).norm() == 0.0);
}

#[test]
fn det_w_is_four_c_on_grid() {
    for &(c, cz) in &[(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)] {
        for c1 in [0.0, 1.0] {
            let p = params(c, c1, cz);
            for i in 0..64 {
                let x = (1e-2f64.ln() + (3f64.ln() - 1e-2f64.ln()) * i as f64 / 63.0).exp();
                let d = det_w(&p, x).unwrap();
                assert!((d - 4.0 * c).abs() < 1e-10 * 4.0 * c, "{c} {c1} {cz} {x}: {d}");
            }
        }
    }
}

proptest! {
    #[test]
    fn det_w_constant(c in 0.1f64..5.0, c1 in 0.0f64..3.0, cz in -3.0f64..3.0, x in 0.01f64..6.0) {
        let p = params(c, c1, cz);
        let d = det_w(&p, x).unwrap();
        prop_assert!((d - 4.0 * c).abs() < 1e-10 * 4.0 * c);
        prop_assert!(min_eigenvalue_2x2(&w_matrix(&p, x).unwrap()) > 0.0);
    }

    #[test]
    fn omega_antisymmetric_and_nondegenerate(
        c in 0.1f64..5.0, c1 in 0.0f64..3.0, cz in -3.0f64..3.0, x in 0.01f64..4.0,
        v in proptest::array::uniform8(-1.0f64..1.0),
    ) {
        let p = params(c, c1, cz);
        let a = (Vector3::new(v[0], v[1], v[2]), v[3]);
        let b = (Vector3::new(v[4], v[5], v[6]), v[7]);
        let ab = omega_eval(&p, x, (&a.0, a.1), (&b.0, b.1)).unwrap();
        let ba = omega_eval(&p, x, (&b.0, b.1), (&a.0, a.1)).unwrap();
        prop_assert_eq!(ab, -ba);
        let m = omega_matrix(&p, x).unwrap();
        // Pfaffian of the 4x4 antisymmetric matrix.
        let pf = m[(0, 1)] * m[(2, 3)] - m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)];
        prop_assert!(pf.abs() > 1e-8);
    }

    #[test]
    fn metric_is_omega_of_j(
        c in 0.1f64..5.0, c1 in 0.0f64..3.0, cz in -3.0f64..3.0, x in 0.05f64..4.0,
    ) {
        let p = params(c, c1, cz);
        let g = coframe_metric(&p, x).unwrap().matrix();
        let gj = metric_from_complex_structure(&p, x).unwrap();
        let scale = g.amax().max(1.0);
        prop_assert!((g - gj).amax() < 1e-12 * scale);
    }
}

#[test]
fn omega_examples() {
    let p = params(1.0, 0.0, 1.0);
    let x = 0.8;
    let (xx, yy, zz) = (Vector3::x(), Vector3::y(), Vector3::z());
    let zero = Vector3::zeros();
    let v = omega_eval(&p, x, (&xx, 0.0), (&zero, 1.0)).unwrap();
    assert!((v + f_double_prime(&p, x).unwrap()).abs() < 1e-15);
    let v = omega_eval(&p, x, (&yy, 0.0), (&zz, 0.0)).unwrap();
    assert!((v - f_prime(&p, x).unwrap()).abs() < 1e-15);
    // The X-Y component is c_Z / cosh x.
    let v = omega_eval(&p, x, (&xx, 0.0), (&yy, 0.0)).unwrap();
    assert!((v - 1.0 / x.cosh()).abs() < 1e-15);
}

#[test]
fn metric_with_c_y_is_omega_of_j() {
    let p = S2FamilyParams::new(1.0, 2.0, 0.5, 0.3).unwrap();
    for x in [0.5, 1.0, 2.0] {
        let g = coframe_metric(&p, x).unwrap().matrix();
        let gj = metric_from_complex_structure(&p, x).unwrap();
        assert!((g - gj).amax() < 1e-12 * g.amax());
    }
}

#[test]
fn stenzel_form_and_positivity() {
    let p = params(4.0, 0.0, 0.0);
    for x in [0.2, 1.0, 3.0] {
        let g = coframe_metric(&p, x).unwrap();
        let (c, s) = (x.cosh(), x.sinh());
        let want = Matrix4::from_diagonal(&nalgebra::Vector4::new(c, c, c, s * x.tanh())) * 2.0;
        assert!((g.matrix() - want).amax() < 1e-12 * want.amax());
        assert_eq!((g.g_XZ, g.g_xY, g.g_XY, g.g_xZ), (0.0, 0.0, 0.0, 0.0));
    }
    let g = coframe_metric(&params(1.0, 0.0, 1.0), 1.0).unwrap();
    assert!(g.matrix().cholesky().is_some());
    assert!(g.min_eigenvalue() > 0.0);
}

#[test]
fn extended_form_restricts_and_has_kernel() {
    let p = params(1.5, 0.0, 0.8);
    let mut state = 7u64;
    let mut rnd = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for _ in 0..20 {
        let x = 0.1 + 2.0 * rnd().abs();
        let xi1 = Vector3::new(rnd(), rnd(), rnd());
        let xi2 = Vector3::new(rnd(), rnd(), rnd());
        let (t1, t2) = (rnd(), rnd());
        let w = Vector3::new(x, 0.0, 0.0);
        let d = delta_form(&p, &w, (&xi1, &(Vector3::x() * t1)), (&xi2, &(Vector3::x() * t2))).unwrap();
        let o = omega_eval(&p, x, (&xi1, t1), (&xi2, t2)).unwrap();
        assert!((d - o).abs() < 1e-12 * o.abs().max(1.0));

        let w = Vector3::new(rnd(), rnd(), 0.0);
        let u1 = Vector3::new(rnd(), rnd(), 0.0);
        let probe = bracket(&w, &Vector3::z());
        assert!(probe.z.abs() < 1e-15);
        let k = delta_form(&p, &w, (&xi1, &u1), (&Vector3::z(), &probe)).unwrap();
        assert!(k.abs() < 1e-10, "{k}");
    }
}

#[test]
fn hamiltonian_vector() {
    let p = params(1.0, 0.0, 0.0);
    let (a0, c0) = hamiltonian_hx(&p, 1.3).unwrap();
    assert_eq!(c0, 0.0);
    assert!((a0 - 1.0 / f_double_prime(&p, 1.3).unwrap()).abs() < 1e-15);
    for &(c, cz) in &[(1.0, 1.0), (2.0, 0.5), (0.7, -2.0)] {
        let p = params(c, 0.0, cz);
        for x in [0.2, 1.0, 3.0] {
            let (a0, c0) = hamiltonian_hx(&p, x).unwrap();
            // Closed form for c0 with the same denominator written out in full.
            let (f1, f2) = (f_prime(&p, x).unwrap(), f_double_prime(&p, x).unwrap());
            let (ch, sh) = (x.cosh(), x.sinh());
            let den = f2 * f1 * ch.powi(3) - cz * cz * sh;
            assert!((c0 - cz * ch * ch / den).abs() < 1e-12 * c0.abs().max(1.0));
            assert!((a0 - c0 * f1 * ch / cz).abs() < 1e-12 * a0.max(1.0));
            let h = Vector3::new(a0, 0.0, c0);
            let zero = Vector3::zeros();
            for probe in [(Vector3::x(), 0.0), (Vector3::y(), 0.0), (Vector3::z(), 0.0), (zero, 1.0)] {
                let v = omega_eval(&p, x, (&probe.0, probe.1), (&h, 0.0)).unwrap();
                assert!((v - probe.1).abs() < 1e-12);
            }
            let fu = f_u(&p, x).unwrap();
            assert!((fu - (f1 * ch.powi(3) / den).sqrt()).abs() < 1e-12 * fu);
            assert!((hamiltonian_norm_sq(&p, x).unwrap().sqrt() - fu).abs() < 1e-10);
        }
    }
}

#[test]
fn completeness_profile_for_stenzel() {
    let p = params(1.0, 0.0, 0.0);
    for x in [0.5, 2.0, 7.0] {
        assert!((f_u(&p, x).unwrap() - 1.0 / x.cosh().sqrt()).abs() < 1e-13);
    }
    let prof = completeness_profile(&p, 0.5, 5.0, 10).unwrap();
    assert!(prof.strictly_increasing);
    let oracle = simpson(|s: f64| s.cosh().sqrt(), 0.5, 5.0, 20000);
    assert!((prof.rows.last().unwrap().h - oracle).abs() < 1e-9);
    let d1 = h_increment(&p, 5.0, 20.0).unwrap();
    let d0 = h_increment(&p, 5.0, 6.0).unwrap();
    assert!(d1 > 50.0 * d0);
}

#[test]
fn asymptotic_ratio_tends_to_one() {
    for cz in [0.0, 1.0] {
        let p = params(1.0, 0.0, cz);
        let r = asymptotic_ratio(&p, 15.0).unwrap();
        assert!((r - 1.0).abs() < 1e-2, "{cz}: {r}");
        let prof = completeness_profile(&p, 0.1, 15.0, 30).unwrap();
        assert!(prof.strictly_increasing);
        assert!((prof.asymptotic_ratio - r).abs() < 1e-15);
    }
    assert!(completeness_profile(&params(1.0, 0.0, 0.0), 1.0, 0.5, 5).is_err());
}

#[test]
fn extension_verdicts() {
    let v = extension_at_zero(&params(1.0, 0.0, 0.0));
    assert!(v.extends_to_zero);
    let l = v.limit.unwrap();
    assert!((l.w11 - 2.0).abs() < 1e-15 && (l.w22 - 2.0).abs() < 1e-15 && l.w12_im == 0.0);
    assert!(!extension_at_zero(&params(1.0, 0.5, 0.0)).extends_to_zero);
    assert!(!extension_at_zero(&S2FamilyParams::new(1.0, 0.0, 0.0, 1.0).unwrap()).extends_to_zero);
    for &(c, cz) in &[(1.0, 1.0), (2.0, 0.5), (0.5, -3.0)] {
        let p = params(c, 0.0, cz);
        let v = extension_at_zero(&p);
        let l = v.limit.unwrap();
        let r = (c + cz * cz).sqrt();
        assert!((l.w11 - 2.0 * r).abs() < 1e-12 && (l.w22 - 2.0 * r).abs() < 1e-12);
        assert!((l.w12_im - 2.0 * cz).abs() < 1e-12 && l.w12_re == 0.0);
        let me = v.limit_min_eigenvalue.unwrap();
        assert!((me - 2.0 * (r - cz.abs())).abs() < 1e-12 && me > 0.0);
        let w = w_matrix(&p, 1e-7).unwrap();
        assert!((w - l.matrix()).iter().all(|z| z.norm() < 1e-12));
    }
    let me = extension_at_zero(&params(1.0, 0.0, 1.0)).limit_min_eigenvalue.unwrap();
    assert!((me - 0.8284271247461903).abs() < 1e-12);
}

#[test]
fn eguchi_hanson_substitution() {
    let ell = 1.7;
    for x in [0.5, 1.0, 2.0] {
        let back = x_from_t(ell, t_from_x(ell, x)).unwrap();
        assert!((back - x).abs() < 1e-12);
    }
    assert!(matches!(x_from_t(ell, ell), Err(Error::Domain(_))));
    assert!(eguchi_hanson_compare(ell, &[0.5 * ell]).is_err());
    let ts: Vec<f64> = (1..=10).map(|i| ell * (1.0 + 0.2 * i as f64)).collect();
    let cmp = eguchi_hanson_compare(ell, &ts).unwrap();
    assert_eq!(cmp.rows.len(), 10);
    assert!(cmp.max_pullback_error < 1e-10);
    assert!(cmp.max_reference_deviation < 1e-10);
    for w in cmp.rows.windows(2) {
        assert!(w[1].g_tt < w[0].g_tt);
        assert!(w[1].g_XX > w[0].g_XX && w[1].g_ZZ > w[0].g_ZZ);
    }
    let t = ell * 1f64.cosh().sqrt();
    let row = eguchi_hanson_compare(ell, &[t]).unwrap().rows[0];
    assert!((row.g_ZZ - 1f64.sinh() * 1f64.tanh()).abs() < 1e-12);
}

fn radial(f1: fn(f64) -> f64, f2: fn(f64) -> f64) -> RadialPotential {
    RadialPotential { f1: Arc::new(f1), f2: Arc::new(f2) }
}

#[test]
fn positivity_criterion() {
    let grid: Vec<f64> = (1..=50).map(|i| 0.02 * i as f64).collect();
    let v = positivity_check(0.0, 0.0, &radial(f64::sinh, f64::cosh), &grid);
    assert!(v.kahler_on_grid && v.potential_function);
    let v = positivity_check(0.0, 1.0, &radial(f64::sinh, f64::cosh), &grid);
    assert!(!v.kahler_on_grid && !v.points[0].pass);
    let p = params(1.0, 0.0, 5.0);
    let v = positivity_check(5.0, 0.0, &family_potential(&p), &grid);
    assert!(v.kahler_on_grid && !v.potential_function);
    // The reduced determinant equals C on the Ricci-flat family.
    assert!(v.points.iter().all(|q| (q.reduced_det - 1.0).abs() < 1e-10));
}

#[test]
fn family_table_columns() {
    let p = params(1.0, 0.0, 1.0);
    let grid: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
    let rows = family_table(&p, &grid).unwrap();
    assert_eq!(CSV_HEADER.len(), rows[0].csv_fields().len());
    assert_eq!(rows[0].h, Some(0.0));
    assert!(rows.windows(2).all(|w| w[1].h.unwrap() > w[0].h.unwrap()));
    assert!(rows.iter().all(|r| (r.det_w - 4.0).abs() < 1e-10));
    assert!(family_table(&p, &[1.0, 0.5]).is_err());
}
