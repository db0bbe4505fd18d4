use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stress_elast::fespace::build_space;
use stress_elast::forms::{assemble_matrix, FormKind, Formulation};
use stress_elast::mesh::{apply_boundary_plan, build_box_mesh, BoundaryPlan, BoxSpec};
use stress_elast::solve::{
    relative_residual, solve_linear, spectrum, spectrum_with_cap, SolveError, SolverPath, DEFAULT_ZERO_TOL,
    RESIDUAL_TOLERANCE,
};
use stress_elast::sparse::SparseMatrix;
use stress_elast::study::operator_spectrum;
use stress_elast::tensor::{ElasticMode, Material};

/// Tridiagonal matrix with the given diagonal and constant off-diagonal `off`.
fn tridiagonal(diag: &[f64], off: f64, upper_only: bool) -> SparseMatrix {
    let n = diag.len();
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, diag[i]));
        if i + 1 < n {
            t.push((i, i + 1, off));
            t.push((i + 1, i, if upper_only { 0.0 } else { off }));
        }
    }
    SparseMatrix::from_triplets(n, &t)
}

fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn identity_solves_exactly() {
    let b = random_rhs(50, 1);
    let r = solve_linear(&SparseMatrix::identity(50), &b).unwrap();
    assert_eq!(r.path, SolverPath::Cholesky);
    assert_eq!(r.solution, b);
    assert!(r.relative_residual <= 1e-15);
}

#[test]
fn cascade_picks_the_right_factorization() {
    let n = 200;
    let b = random_rhs(n, 2);
    let spd = tridiagonal(&vec![4.0; n], -1.0, false);
    let r = solve_linear(&spd, &b).unwrap();
    assert_eq!(r.path, SolverPath::Cholesky);
    assert!(relative_residual(&spd, &r.solution, &b) <= RESIDUAL_TOLERANCE);

    let alternating: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 4.0 } else { -3.0 }).collect();
    let indefinite = tridiagonal(&alternating, 1.0, false);
    let r = solve_linear(&indefinite, &b).unwrap();
    assert_eq!(r.path, SolverPath::Lblt);
    assert!(r.relative_residual <= RESIDUAL_TOLERANCE);

    let nonsym = tridiagonal(&vec![4.0; n], 1.5, true);
    let r = solve_linear(&nonsym, &b).unwrap();
    assert_eq!(r.path, SolverPath::Lu);
    assert!(r.relative_residual <= RESIDUAL_TOLERANCE);
    // Lower bidiagonal with unit off-diagonal: forward substitution oracle.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let next = if i + 1 < n { x[i + 1] } else { 0.0 };
        x[i] = (b[i] - 1.5 * next) / 4.0;
    }
    for (a, e) in r.solution.iter().zip(&x) {
        assert!((a - e).abs() <= 1e-12 * (1.0 + e.abs()));
    }
}

#[test]
fn length_mismatch_is_reported() {
    assert!(matches!(
        solve_linear(&SparseMatrix::identity(3), &[1.0, 2.0]),
        Err(SolveError::DimensionMismatch { expected: 3, got: 2 })
    ));
}

fn cube_operator(kind: FormKind, plan: BoundaryPlan, p: usize, n: usize) -> SparseMatrix {
    let form = Formulation::new(kind, Material::new(200.0, 0.25).unwrap()).unwrap();
    let mesh = apply_boundary_plan(&build_box_mesh(&BoxSpec::unit_cube(n)), &plan).unwrap();
    let space = build_space(&mesh, p, form.components()).unwrap();
    assemble_matrix(&space, &form).unwrap()
}

#[test]
fn pure_neumann_operator_is_singular() {
    let k = cube_operator(FormKind::Stress3dI, BoundaryPlan::AllNeumann, 2, 2);
    let b = random_rhs(k.nrows(), 3);
    match solve_linear(&k, &b) {
        Err(SolveError::Singular { kernel_estimate: Some(z) }) => assert_eq!(z, 6),
        other => panic!("expected a singular matrix, got {other:?}"),
    }
}

#[test]
fn spectrum_classifies_eigenvalues() {
    let diag = [5.0, -1.0, 0.0, 2.0, 1e-12];
    let t: Vec<(usize, usize, f64)> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
    let s = spectrum(&SparseMatrix::from_triplets(5, &t), DEFAULT_ZERO_TOL).unwrap();
    assert_eq!((s.negative, s.zero, s.positive), (1, 2, 2));
    assert_eq!(s.min(), -1.0);
    assert!((s.threshold - 5e-9).abs() < 1e-20);
    assert_eq!(s.negative_percent(10), 10.0);
    let csv = s.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,index,value,negative,zero,positive,threshold");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("eigenvalue,0,-1.0000000000000000e0"));
    assert!(lines[6].starts_with("summary,,,1,2,2,"));

    // Tridiagonal (2, −1): λ_k = 2 − 2 cos(kπ/(n+1)).
    let n = 40;
    let s = spectrum(&tridiagonal(&vec![2.0; n], -1.0, false), DEFAULT_ZERO_TOL).unwrap();
    for (k, l) in s.eigenvalues.iter().enumerate() {
        let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((l - exact).abs() < 1e-12);
    }
}

#[test]
fn dense_cap_is_enforced() {
    let k = SparseMatrix::identity(20);
    assert!(matches!(
        spectrum_with_cap(&k, DEFAULT_ZERO_TOL, 10),
        Err(SolveError::DenseCap { n: 20, cap: 10 })
    ));
    assert_eq!(spectrum_with_cap(&k, DEFAULT_ZERO_TOL, 20).unwrap().positive, 20);
}

#[test]
fn constant_stresses_span_the_pure_neumann_kernel() {
    let geometry = BoxSpec::unit_cube(2);
    for nu in [0.0, 0.25, 0.5] {
        let form = Formulation::new(FormKind::Stress3dI, Material::new(200.0, nu).unwrap()).unwrap();
        let s = operator_spectrum(&geometry, &BoundaryPlan::AllNeumann, 2, &form, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(s.dim(), 750);
        assert_eq!(s.zero, 6, "nu={nu}");
        assert_eq!(s.meta.plan, "all_neumann");
        assert_eq!(s.meta.dofs, 750);
    }
}

#[test]
fn dirichlet_operators_are_positive_definite() {
    let square = BoxSpec::new(vec![-1.0; 2], vec![1.0; 2], vec![3; 2]).unwrap();
    for nu in [0.0, 0.25, 0.5] {
        let mat = Material::new(200.0, nu).unwrap();
        for mode in [ElasticMode::PlaneStress, ElasticMode::PlaneStrain] {
            let psi = mat.chi(mode);
            for kind in [FormKind::PlanarI { psi, mode }, FormKind::PlanarII { mode }] {
                let form = Formulation::new(kind, mat).unwrap();
                let s = operator_spectrum(&square, &BoundaryPlan::AllDirichlet, 3, &form, DEFAULT_ZERO_TOL).unwrap();
                assert_eq!(s.meta.dofs, 300);
                assert!(s.min() > 0.0, "{} {mode:?} nu={nu}: {}", form.tag(), s.min());
            }
        }
    }
}
