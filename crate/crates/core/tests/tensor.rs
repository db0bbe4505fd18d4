use proptest::prelude::*;

use stress_elast::tensor::{
    anti, axl, constitutive, cross, stress_invariants, sym_skw_tr_dev, trace, Direction, ElasticMode, Material,
    Matrix, SymMat, TensorError,
};

fn mat3() -> impl Strategy<Value = Matrix<3>> {
    prop::array::uniform3(prop::array::uniform3(-10.0f64..10.0))
}

fn sym3() -> impl Strategy<Value = SymMat<3>> {
    prop::array::uniform6(-10.0f64..10.0).prop_map(|p| SymMat::from_packed(&p))
}

fn sym2() -> impl Strategy<Value = SymMat<2>> {
    prop::array::uniform3(-10.0f64..10.0).prop_map(|p| SymMat::from_packed(&p))
}

fn lame(e: f64, nu: f64) -> (f64, f64) {
    (e / (2.0 * (1.0 + nu)), e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)))
}

#[test]
fn identity_decomposes_into_pure_trace() {
    let i: Matrix<3> = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let d = sym_skw_tr_dev(&i);
    assert_eq!(d.sym, SymMat::identity());
    assert_eq!(d.tr, 3.0);
    assert!(d.skw.iter().flatten().all(|&x| x == 0.0));
    assert!(d.dev.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn pure_skew_has_no_symmetric_part() {
    let m: Matrix<2> = [[0.0, 1.0], [-1.0, 0.0]];
    let d = sym_skw_tr_dev(&m);
    assert_eq!(d.sym, SymMat::zero());
    assert_eq!(d.skw, m);
    assert_eq!(d.tr, 0.0);
}

#[test]
fn anti_of_basis_vector_is_cross_product() {
    let a = anti(&[1.0, 0.0, 0.0]);
    let v = [a[0][1], a[1][1], a[2][1]];
    assert_eq!(v, [0.0, 0.0, 1.0]);
    assert_eq!(axl(&anti(&[1.0, 2.0, 3.0])).unwrap(), [1.0, 2.0, 3.0]);
}

#[test]
fn axl_rejects_symmetric_input() {
    let m: Matrix<3> = [[1.0, 2.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
    assert!(matches!(axl(&m), Err(TensorError::NotSkew { .. })));
}

#[test]
fn invariants_of_reference_states() {
    let hydro = SymMat::<3>::identity() * 7.0;
    let inv = stress_invariants(&hydro);
    assert!(inv.von_mises.abs() < 1e-14);
    assert!((inv.mean - 7.0).abs() < 1e-14);

    // Exact cube stress at (1, 1, 1): 200 · [[5,1,1],[1,5,1],[1,1,5]].
    let s = SymMat::<3>::from_packed(&[1000.0, 1000.0, 1000.0, 200.0, 200.0, 200.0]);
    let inv = stress_invariants(&s);
    assert!((inv.mean - 1000.0).abs() < 1e-10);
    assert!((inv.von_mises - 600.0).abs() < 1e-10);

    let planar = SymMat::<2>::from_packed(&[1.0, -1.0, 0.0]);
    assert_eq!(stress_invariants(&planar).mean, 0.0);
}

#[test]
fn chi_ranges() {
    for nu in [0.0, 0.125, 0.25, 0.375, 0.5] {
        let m = Material::new(200.0, nu).unwrap();
        let c3 = m.chi(ElasticMode::Solid3d);
        assert!((2.0 / 3.0 - 1e-15..=1.0).contains(&c3));
        assert_eq!(c3, m.chi(ElasticMode::PlaneStress));
        assert!((0.5..=1.0).contains(&m.chi(ElasticMode::PlaneStrain)));
    }
}

#[test]
fn invalid_materials_rejected() {
    assert!(Material::new(0.0, 0.25).is_err());
    assert!(Material::new(200.0, -0.1).is_err());
    assert!(Material::new(200.0, 0.51).is_err());
    assert!(Material::new(f64::NAN, 0.2).is_err());
}

#[test]
fn incompressible_stiffness_is_an_error() {
    let m = Material::new(200.0, 0.5).unwrap();
    let s = SymMat::<3>::identity();
    assert!(matches!(
        constitutive(&m, &s, ElasticMode::Solid3d, Direction::Stiffness),
        Err(TensorError::IncompressibleStiffness { .. })
    ));
    let s2 = SymMat::<2>::identity();
    assert!(constitutive(&m, &s2, ElasticMode::PlaneStrain, Direction::Stiffness).is_err());
    assert!(constitutive(&m, &s2, ElasticMode::PlaneStress, Direction::Stiffness).is_ok());
    assert!(constitutive(&m, &s2, ElasticMode::PlaneStrain, Direction::Compliance).is_ok());
}

#[test]
fn mode_dimension_mismatch() {
    let m = Material::new(200.0, 0.3).unwrap();
    assert!(matches!(
        constitutive(&m, &SymMat::<2>::identity(), ElasticMode::Solid3d, Direction::Compliance),
        Err(TensorError::ModeDimension { .. })
    ));
}

proptest! {
    #[test]
    fn decomposition_closes(m in mat3()) {
        let d = sym_skw_tr_dev(&m);
        let s = d.sym.to_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let defect = (s[i][j] + d.skw[i][j] - m[i][j]).abs();
                prop_assert!(defect <= 4.0 * f64::EPSILON * m[i][j].abs().max(m[j][i].abs()));
            }
        }
        prop_assert!(trace(&d.dev).abs() < 1e-12);
    }

    #[test]
    fn packing_roundtrip(s in sym3()) {
        let m = s.to_matrix();
        prop_assert_eq!(SymMat::from_matrix(&m), s);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(m[i][j], m[j][i]);
            }
        }
    }

    #[test]
    fn anti_is_cross_product(a in prop::array::uniform3(-5.0f64..5.0), v in prop::array::uniform3(-5.0f64..5.0)) {
        let am = anti(&a);
        let av: Vec<f64> = (0..3).map(|i| (0..3).map(|j| am[i][j] * v[j]).sum()).collect();
        let c = cross(&a, &v);
        for i in 0..3 {
            prop_assert!((av[i] - c[i]).abs() < 1e-12);
        }
        let back = axl(&am).unwrap();
        for i in 0..3 {
            prop_assert!((back[i] - a[i]).abs() < 1e-14);
        }
        // ⟨axl A, axl A⟩ = ½⟨A, A⟩ for skew A.
        let lhs: f64 = a.iter().map(|x| x * x).sum();
        let rhs: f64 = 0.5 * am.iter().flatten().map(|x| x * x).sum::<f64>();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs));
    }

    #[test]
    fn dot_weights_off_diagonals(a in sym3(), b in sym3()) {
        let (ma, mb) = (a.to_matrix(), b.to_matrix());
        let full: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| ma[i][j] * mb[i][j]).sum();
        prop_assert!((a.dot(&b) - full).abs() < 1e-10 * (1.0 + full.abs()));
    }

    #[test]
    fn stiffness_3d_matches_lame_form(s in sym3(), nu in 0.0f64..0.49, e in 1.0f64..500.0) {
        let m = Material::new(e, nu).unwrap();
        let (mu, lambda) = lame(e, nu);
        let c = constitutive(&m, &s, ElasticMode::Solid3d, Direction::Stiffness).unwrap();
        let expected = s * (2.0 * mu) + SymMat::identity() * (lambda * s.trace());
        for k in 0..6 {
            prop_assert!((c.packed()[k] - expected.packed()[k]).abs() < 1e-9 * (1.0 + expected.packed()[k].abs()));
        }
    }

    #[test]
    fn compliance_inverts_stiffness(s3 in sym3(), s2 in sym2(), nu in 0.0f64..0.49) {
        let m = Material::new(200.0, nu).unwrap();
        let back = constitutive(
            &m,
            &constitutive(&m, &s3, ElasticMode::Solid3d, Direction::Compliance).unwrap(),
            ElasticMode::Solid3d,
            Direction::Stiffness,
        ).unwrap();
        for k in 0..6 {
            prop_assert!((back.packed()[k] - s3.packed()[k]).abs() < 1e-9 * (1.0 + s3.norm()));
        }
        for mode in [ElasticMode::PlaneStress, ElasticMode::PlaneStrain] {
            let eps = constitutive(&m, &s2, mode, Direction::Compliance).unwrap();
            let back = constitutive(&m, &eps, mode, Direction::Stiffness).unwrap();
            for k in 0..3 {
                prop_assert!((back.packed()[k] - s2.packed()[k]).abs() < 1e-9 * (1.0 + s2.norm()));
            }
        }
    }

    #[test]
    fn planar_compliance_matches_closed_forms(s in sym2(), nu in 0.0f64..=0.5) {
        let e = 200.0;
        let m = Material::new(e, nu).unwrap();
        let tr = s.trace();
        let ps = constitutive(&m, &s, ElasticMode::PlaneStress, Direction::Compliance).unwrap();
        let pe = constitutive(&m, &s, ElasticMode::PlaneStrain, Direction::Compliance).unwrap();
        for (k, &(i, j)) in [(0usize, 0usize), (1, 1), (0, 1)].iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            let stress_case = ((1.0 + nu) * s.packed()[k] - nu * tr * delta) / e;
            let strain_case = (1.0 + nu) / e * (s.packed()[k] - nu * tr * delta);
            prop_assert!((ps.packed()[k] - stress_case).abs() < 1e-12);
            prop_assert!((pe.packed()[k] - strain_case).abs() < 1e-12);
        }
    }
}
