//! End-to-end benchmark runs: mesh, space, assembly, Dirichlet reduction,
//! solution and error evaluation against a manufactured solution.

use thiserror::Error;

use crate::fespace::{build_space, local_basis, FESpace, FeError, QuadratureRule};
use crate::forms::{
    apply_dirichlet, assemble_matrix, assemble_neumann, assemble_rhs, manufactured_kappa, AssembledSystem,
    ForceData, FormError, Formulation, RhsMethod,
};
use crate::mesh::{apply_boundary_plan, build_box_mesh, BoundaryPlan, BoundaryTag, BoxSpec, MeshError, StructuredMesh};
use crate::polycalc::{manufactured_case, BenchmarkName, ManufacturedCase, PolyError};
use crate::postproc::{
    invariant_errors, invariant_errors_of, l2_error, l2_error_of, recover_stress_from_displacement, ErrorRow,
    L2Error, PostError, ERROR_QUAD_ORDER,
};
use crate::solve::{solve_linear, solve_reduced, spectrum, SolveError, SolveReport, SpectrumMeta, SpectrumReport};
use crate::sparse::SparseMatrix;
use crate::tensor::sym_len;

/// Errors of a benchmark run, grouped into configuration and numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Space(#[from] FeError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Benchmark(#[from] PolyError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl StudyError {
    /// Whether the failure is numerical (as opposed to an invalid setup).
    pub fn is_numerical(&self) -> bool {
        matches!(self, StudyError::Solve(_))
    }
}

/// How prescribed Dirichlet values are transferred into the space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryData {
    /// Nodal interpolation of the exact field.
    Interpolation,
    /// `L²` projection onto the trace space of the Dirichlet faces.
    Projection,
}

impl BoundaryData {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryData::Interpolation => "interpolation",
            BoundaryData::Projection => "projection",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interpolation" => Some(BoundaryData::Interpolation),
            "projection" => Some(BoundaryData::Projection),
            _ => None,
        }
    }
}

/// Dirichlet values of `field` on the Dirichlet dofs of `space` (other
/// entries are zero for the projection, the interpolant for interpolation).
pub fn boundary_values(
    space: &FESpace,
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    method: BoundaryData,
) -> Result<Vec<f64>, StudyError> {
    if method == BoundaryData::Interpolation {
        return Ok(space.interpolate(field));
    }
    let (d, m, p) = (space.dim(), space.components(), space.order());
    let mesh = space.mesh();
    let mut local = vec![usize::MAX; space.num_nodes()];
    let mut nodes = Vec::new();
    for node in 0..space.num_nodes() {
        if space.dirichlet_mask()[node * m] {
            local[node] = nodes.len();
            nodes.push(node);
        }
    }
    let mut triplets = Vec::new();
    let mut rhs = vec![vec![0.0; nodes.len()]; m];
    let face_rule = QuadratureRule::tensor(d - 1, p + 2);
    for face in mesh.boundary_faces() {
        if face.tag != BoundaryTag::Dirichlet {
            continue;
        }
        let elem_nodes = space.element_nodes(face.element);
        let on_face = space.local_face_nodes(face.axis, face.upper);
        for (s, w) in face_rule.points.iter().zip(&face_rule.weights) {
            let mut it = s.iter();
            let xi: Vec<f64> = (0..d)
                .map(|k| match (k == face.axis, face.upper) {
                    (true, true) => 1.0,
                    (true, false) => 0.0,
                    _ => *it.next().expect("face coordinate"),
                })
                .collect();
            let basis = local_basis(p, &xi)?;
            let value = field(&mesh.map_point(face.element, &xi));
            let wm = w * face.measure;
            for &a in &on_face {
                let ia = local[elem_nodes[a]];
                for &b in &on_face {
                    triplets.push((ia, local[elem_nodes[b]], wm * basis.values[a] * basis.values[b]));
                }
                for c in 0..m {
                    rhs[c][ia] += wm * basis.values[a] * value[c];
                }
            }
        }
    }
    let mass = SparseMatrix::from_triplets(nodes.len(), &triplets);
    let mut out = vec![0.0; space.num_dofs()];
    for (c, r) in rhs.iter().enumerate() {
        let sol = solve_linear(&mass, r)?.solution;
        for (&node, v) in nodes.iter().zip(sol) {
            out[node * m + c] = v;
        }
    }
    Ok(out)
}

/// A fully specified benchmark problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub geometry: BoxSpec,
    pub plan: BoundaryPlan,
    pub order: usize,
    pub form: Formulation,
    pub benchmark: BenchmarkName,
    pub rhs: RhsMethod,
    pub boundary: BoundaryData,
}

/// Result of one benchmark solve.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub space: FESpace,
    pub coeffs: Vec<f64>,
    pub report: SolveReport,
    /// Unknowns after Dirichlet elimination.
    pub free_dofs: usize,
    pub sigma: L2Error,
    pub von_mises: L2Error,
    pub mean: L2Error,
}

impl Outcome {
    /// Total dofs of the space.
    pub fn dofs(&self) -> usize {
        self.space.num_dofs()
    }

    /// The convergence-table row of this run.
    pub fn row(&self) -> ErrorRow {
        ErrorRow {
            dofs: self.dofs(),
            n: self.space.mesh().n()[0],
            h: self.space.mesh().h()[0],
            err_sigma: self.sigma.relative.unwrap_or(f64::NAN),
            err_vm: self.von_mises.relative.unwrap_or(f64::NAN),
            err_mean: self.mean.relative.unwrap_or(f64::NAN),
        }
    }
}

/// Builds a tagged mesh.
pub fn tagged_mesh(geometry: &BoxSpec, plan: &BoundaryPlan) -> Result<StructuredMesh, StudyError> {
    Ok(apply_boundary_plan(&build_box_mesh(geometry), plan)?)
}

/// Assembles the full system of a problem (matrix, body load, Neumann load).
pub fn assemble_problem(
    space: &FESpace,
    form: &Formulation,
    case: &ManufacturedCase,
    rhs: RhsMethod,
) -> Result<AssembledSystem, StudyError> {
    let matrix = assemble_matrix(space, form)?;
    let mut b = assemble_rhs(space, form, &ForceData::from_case(case), rhs)?;
    if space.mesh().count_tag(BoundaryTag::Neumann) > 0 {
        let kappa = manufactured_kappa(form, case);
        let bn = assemble_neumann(space, form, &*kappa)?;
        for (x, y) in b.iter_mut().zip(bn) {
            *x += y;
        }
    }
    Ok(AssembledSystem::new(space, matrix, b)?)
}

/// Dirichlet data of the exact unknown (stress or displacement) of a case.
pub fn exact_boundary_values(
    space: &FESpace,
    form: &Formulation,
    case: &ManufacturedCase,
    method: BoundaryData,
) -> Result<Vec<f64>, StudyError> {
    if form.is_displacement() {
        boundary_values(space, &|x| case.displacement(x), method)
    } else {
        boundary_values(space, &|x| case.stress(x), method)
    }
}

/// Runs one benchmark problem end to end.
pub fn run_problem(problem: &Problem) -> Result<Outcome, StudyError> {
    let form = &problem.form;
    let mesh = tagged_mesh(&problem.geometry, &problem.plan)?;
    let space = build_space(&mesh, problem.order, form.components())?;
    let case = manufactured_case(problem.benchmark, form.material(), form.mode())?;
    let system = assemble_problem(&space, form, &case, problem.rhs)?;
    let g = exact_boundary_values(&space, form, &case, problem.boundary)?;
    let reduced = apply_dirichlet(&system, &g)?;
    drop(system);
    let (coeffs, report) = solve_reduced(&reduced)?;
    let free_dofs = reduced.free_dofs.len();
    drop(reduced);
    let exact = |x: &[f64]| case.stress(x);
    let (sigma, von_mises, mean) = if form.is_displacement() {
        let rec = recover_stress_from_displacement(&space, &coeffs, &form.material(), form.mode())?;
        let approx = |e: usize, xi: &[f64]| rec.eval(e, xi);
        let s = l2_error_of(&space, sym_len(space.dim()), &approx, &exact, ERROR_QUAD_ORDER)?;
        let (v, m) = invariant_errors_of(&space, &approx, &exact, ERROR_QUAD_ORDER)?;
        (s, v, m)
    } else {
        let s = l2_error(&space, &coeffs, &exact, ERROR_QUAD_ORDER)?;
        let (v, m) = invariant_errors(&space, &coeffs, &exact, ERROR_QUAD_ORDER)?;
        (s, v, m)
    };
    Ok(Outcome {
        space,
        coeffs,
        report,
        free_dofs,
        sigma,
        von_mises,
        mean,
    })
}

/// Spectrum of the operator of `form` on a tagged mesh: the full matrix when
/// no face is Dirichlet, otherwise the matrix reduced to the free dofs.
pub fn operator_spectrum(
    geometry: &BoxSpec,
    plan: &BoundaryPlan,
    order: usize,
    form: &Formulation,
    zero_tol_rel: f64,
) -> Result<SpectrumReport, StudyError> {
    let mesh = tagged_mesh(geometry, plan)?;
    let space = build_space(&mesh, order, form.components())?;
    let k = assemble_matrix(&space, form)?;
    let free: Vec<usize> = (0..space.num_dofs())
        .filter(|&i| !space.dirichlet_mask()[i])
        .collect();
    let k = if free.len() == space.num_dofs() {
        k
    } else {
        k.principal_submatrix(&free)
    };
    let mut report = spectrum(&k, zero_tol_rel)?;
    report.meta = SpectrumMeta {
        formulation: form.tag().to_string(),
        nu: form.material().nu,
        parameter: match form.kind() {
            crate::forms::FormKind::Stress3dII { omega } => Some(omega),
            crate::forms::FormKind::PlanarI { psi, .. } => Some(psi),
            _ => None,
        },
        plan: plan.name(),
        dofs: space.num_dofs(),
    };
    Ok(report)
}
