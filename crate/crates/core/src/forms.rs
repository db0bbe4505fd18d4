//! Assembly of the stress and displacement variational forms.
//!
//! Every stress form is a weighted sum of five pairings of the trial stress
//! `σ` with the test stress `τ`:
//!
//! | pairing     | integrand            |
//! |-------------|----------------------|
//! | `dd`        | `⟨Dτ, Dσ⟩`           |
//! | `div_grad`  | `⟨Div τ, ∇tr σ⟩`     |
//! | `grad_div`  | `⟨∇tr τ, Div σ⟩`     |
//! | `div_div`   | `⟨Div τ, Div σ⟩`     |
//! | `grad_grad` | `⟨∇tr τ, ∇tr σ⟩`     |
//!
//! and every load is `α⟨τ, sym D f⟩ + β⟨tr τ, div f⟩` plus the boundary term
//! `∫_N ⟨τ, κ⟩`. A single element kernel evaluates all of them from the
//! integrated products of shape-function gradients.
//!
//! Stresses are unknowns in packed (Voigt) storage: `(11, 22, 33, 12, 13, 23)`
//! in 3D and `(11, 22, 12)` in 2D. The displacement form uses `d` components.

use std::sync::Arc;

use thiserror::Error;

use crate::fespace::{local_basis, FESpace, FeError, LocalBasis, QuadratureRule};
use crate::mesh::{BoundaryFace, BoundaryTag};
use crate::polycalc::ManufacturedCase;
use crate::sparse::SparseMatrix;
use crate::tensor::{sym_len, voigt_index, voigt_pairs, Direction, ElasticMode, Material, TensorError};

/// Errors of form construction and assembly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("invalid formulation parameter: {0}")]
    InvalidParameter(String),
    #[error("formulation '{form}' needs {expected} components per node, space has {got}")]
    ComponentMismatch { form: String, expected: usize, got: usize },
    #[error("formulation '{form}' is defined in {expected}D, mesh is {got}D")]
    DimensionMismatch { form: String, expected: usize, got: usize },
    #[error("missing callback for the chosen load: {0}")]
    MissingCallback(&'static str),
    #[error("vector of length {got} does not match {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Space(#[from] FeError),
}

/// Which variational problem to assemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormKind {
    /// Symmetrized 3D stress form.
    Stress3dI,
    /// Stabilized 3D stress form with weight `omega ≥ 0`.
    Stress3dII { omega: f64 },
    /// Non-symmetric 3D stress form.
    Stress3dNonsym,
    /// Planar stress form with coupling weight `psi > 0`.
    PlanarI { psi: f64, mode: ElasticMode },
    /// Stabilized planar stress form.
    PlanarII { mode: ElasticMode },
    /// Displacement (Navier–Cauchy) form; stresses recovered by `C sym D u`.
    Displacement { mode: ElasticMode },
}

/// Coefficients of the five stress pairings.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pairings {
    pub dd: f64,
    pub div_grad: f64,
    pub grad_div: f64,
    pub div_div: f64,
    pub grad_grad: f64,
}

/// A validated formulation: form kind plus material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Formulation {
    kind: FormKind,
    material: Material,
}

impl Formulation {
    /// Validates parameters: `omega ≥ 0`, `psi > 0`, planar modes for planar
    /// forms, and an admissible stiffness for the displacement form.
    pub fn new(kind: FormKind, material: Material) -> Result<Self, FormError> {
        match kind {
            FormKind::Stress3dII { omega } => {
                if !(omega.is_finite() && omega >= 0.0) {
                    return Err(FormError::InvalidParameter(format!(
                        "omega must be finite and non-negative, got {omega}"
                    )));
                }
            }
            FormKind::PlanarI { psi, mode } => {
                if !(psi.is_finite() && psi > 0.0) {
                    return Err(FormError::InvalidParameter(format!(
                        "psi must be finite and positive, got {psi}"
                    )));
                }
                check_planar(mode)?;
            }
            FormKind::PlanarII { mode } => check_planar(mode)?,
            FormKind::Displacement { mode } => {
                material.coefficients(mode, Direction::Stiffness)?;
            }
            FormKind::Stress3dI | FormKind::Stress3dNonsym => {}
        }
        Ok(Self { kind, material })
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn material(&self) -> Material {
        self.material
    }

    /// Configuration tag of the form.
    pub fn tag(&self) -> &'static str {
        match self.kind {
            FormKind::Stress3dI => "stress3d_I",
            FormKind::Stress3dII { .. } => "stress3d_II",
            FormKind::Stress3dNonsym => "stress3d_nonsym",
            FormKind::PlanarI { .. } => "planar_I",
            FormKind::PlanarII { .. } => "planar_II",
            FormKind::Displacement { .. } => "displacement",
        }
    }

    /// Constitutive mode.
    pub fn mode(&self) -> ElasticMode {
        match self.kind {
            FormKind::Stress3dI | FormKind::Stress3dII { .. } | FormKind::Stress3dNonsym => ElasticMode::Solid3d,
            FormKind::PlanarI { mode, .. } | FormKind::PlanarII { mode } | FormKind::Displacement { mode } => mode,
        }
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.mode().dim()
    }

    /// Unknown components per node.
    pub fn components(&self) -> usize {
        match self.kind {
            FormKind::Displacement { .. } => self.dim(),
            _ => sym_len(self.dim()),
        }
    }

    /// Whether the unknown is the displacement.
    pub fn is_displacement(&self) -> bool {
        matches!(self.kind, FormKind::Displacement { .. })
    }

    /// Whether the bilinear form is symmetric.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self.kind, FormKind::Stress3dNonsym)
    }

    /// The coupling constant of the material in this form's mode.
    pub fn chi(&self) -> f64 {
        self.material.chi(self.mode())
    }

    /// Pairing coefficients of the bilinear form (zero for the displacement form).
    pub fn pairings(&self) -> Pairings {
        let chi = self.chi();
        match self.kind {
            FormKind::Stress3dI => Pairings { dd: 1.0, div_grad: chi, grad_div: chi, ..Default::default() },
            FormKind::Stress3dII { omega } => Pairings {
                dd: 1.0,
                div_grad: chi,
                grad_div: chi,
                div_div: omega,
                ..Default::default()
            },
            FormKind::Stress3dNonsym => Pairings { dd: 1.0, div_grad: chi, ..Default::default() },
            FormKind::PlanarI { psi, .. } => Pairings { div_div: psi, grad_grad: chi, ..Default::default() },
            FormKind::PlanarII { .. } => Pairings { dd: 1.0, div_grad: 1.0, grad_div: 1.0, ..Default::default() },
            FormKind::Displacement { .. } => Pairings::default(),
        }
    }

    /// Load weights `(α, β)` of `α⟨τ, sym D f⟩ + β⟨tr τ, div f⟩`.
    pub fn load_weights(&self) -> (f64, f64) {
        let nu = self.material.nu;
        match self.kind {
            FormKind::Stress3dI => (2.0, (1.0 + nu * nu) / (1.0 - nu * nu)),
            FormKind::Stress3dII { omega } => (2.0 + omega, (1.0 + nu * nu) / (1.0 - nu * nu)),
            FormKind::Stress3dNonsym => (2.0, nu / (1.0 - nu)),
            FormKind::PlanarI { psi, .. } => (psi, 1.0),
            FormKind::PlanarII { .. } => (2.0, 1.0 / self.chi()),
            FormKind::Displacement { .. } => (0.0, 0.0),
        }
    }

    fn check_space(&self, space: &FESpace) -> Result<(), FormError> {
        if space.dim() != self.dim() {
            return Err(FormError::DimensionMismatch {
                form: self.tag().into(),
                expected: self.dim(),
                got: space.dim(),
            });
        }
        if space.components() != self.components() {
            return Err(FormError::ComponentMismatch {
                form: self.tag().into(),
                expected: self.components(),
                got: space.components(),
            });
        }
        Ok(())
    }
}

fn check_planar(mode: ElasticMode) -> Result<(), FormError> {
    if mode == ElasticMode::Solid3d {
        return Err(FormError::InvalidParameter(
            "planar forms require plane_stress or plane_strain".into(),
        ));
    }
    Ok(())
}

/// Quadrature points per direction used for assembly of order-`p` spaces.
pub fn assembly_quad_order(p: usize) -> usize {
    p + 2
}

/// Full `d × d` matrix of packed basis tensor `c` (ones at `(i, j)` and `(j, i)`).
pub fn voigt_basis(d: usize, c: usize) -> [[f64; 3]; 3] {
    let (i, j) = voigt_pairs(d)[c];
    let mut e = [[0.0; 3]; 3];
    e[i][j] = 1.0;
    e[j][i] = 1.0;
    e
}

/// Integrated gradient products `G[a][b][k][l] = ∫_T ∂_k φ_a ∂_l φ_b` for one
/// element, stored flat with stride `d²` per node pair.
struct GradProducts {
    nloc: usize,
    d: usize,
    data: Vec<f64>,
}

impl GradProducts {
    fn new(space: &FESpace) -> Self {
        let d = space.dim();
        let p = space.order();
        let h = space.mesh().h();
        let jac: f64 = h.iter().product();
        let rule = QuadratureRule::tensor(d, assembly_quad_order(p));
        let nloc = space.nodes_per_element();
        let mut data = vec![0.0; nloc * nloc * d * d];
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let basis = local_basis(p, xi).expect("order validated by the space");
            let grads: Vec<[f64; 3]> = basis
                .grads
                .iter()
                .map(|g| {
                    let mut out = [0.0; 3];
                    for k in 0..d {
                        out[k] = g[k] / h[k];
                    }
                    out
                })
                .collect();
            let wj = w * jac;
            for a in 0..nloc {
                for b in 0..nloc {
                    let base = (a * nloc + b) * d * d;
                    for k in 0..d {
                        let gak = grads[a][k] * wj;
                        for l in 0..d {
                            data[base + k * d + l] += gak * grads[b][l];
                        }
                    }
                }
            }
        }
        Self { nloc, d, data }
    }

    fn get(&self, a: usize, b: usize) -> &[f64] {
        let s = self.d * self.d;
        let base = (a * self.nloc + b) * s;
        &self.data[base..base + s]
    }
}

/// Element matrix, row-major over local dofs `a · m + c`.
///
/// Structured meshes have congruent elements, so one element matrix serves
/// every element of the mesh.
pub fn element_matrix(space: &FESpace, form: &Formulation) -> Result<Vec<f64>, FormError> {
    form.check_space(space)?;
    let g = GradProducts::new(space);
    let d = space.dim();
    let m = space.components();
    let nloc = space.nodes_per_element();
    let nd = nloc * m;
    let mut k = vec![0.0; nd * nd];
    if let FormKind::Displacement { mode } = form.kind {
        let (lam_a, lam_b) = form.material.coefficients(mode, Direction::Stiffness)?;
        for a in 0..nloc {
            for b in 0..nloc {
                let gab = g.get(a, b);
                let lap: f64 = (0..d).map(|q| gab[q * d + q]).sum();
                for c in 0..d {
                    for e in 0..d {
                        // ⟨sym D(φ_a e_c), C sym D(φ_b e_e)⟩
                        let sym = 0.5 * (if c == e { lap } else { 0.0 } + gab[e * d + c]);
                        let vol = gab[c * d + e];
                        k[(a * m + c) * nd + b * m + e] = lam_a * sym + lam_b * vol;
                    }
                }
            }
        }
        return Ok(k);
    }
    let pr = form.pairings();
    let basis: Vec<[[f64; 3]; 3]> = (0..m).map(|c| voigt_basis(d, c)).collect();
    let traces: Vec<f64> = basis.iter().map(|e| (0..d).map(|i| e[i][i]).sum()).collect();
    let frob = |x: &[[f64; 3]; 3], y: &[[f64; 3]; 3]| -> f64 {
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| x[i][j] * y[i][j]).sum()
    };
    for a in 0..nloc {
        for b in 0..nloc {
            let gab = g.get(a, b);
            let lap: f64 = (0..d).map(|q| gab[q * d + q]).sum();
            for c in 0..m {
                let ec = &basis[c];
                for e in 0..m {
                    let ee = &basis[e];
                    let mut v = 0.0;
                    if pr.dd != 0.0 {
                        v += pr.dd * lap * frob(ec, ee);
                    }
                    if pr.div_grad != 0.0 && traces[e] != 0.0 {
                        let mut s = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                s += ec[i][j] * gab[j * d + i];
                            }
                        }
                        v += pr.div_grad * traces[e] * s;
                    }
                    if pr.grad_div != 0.0 && traces[c] != 0.0 {
                        let mut s = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                s += ee[i][j] * gab[i * d + j];
                            }
                        }
                        v += pr.grad_div * traces[c] * s;
                    }
                    if pr.div_div != 0.0 {
                        let mut s = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                for l in 0..d {
                                    s += ec[i][j] * ee[i][l] * gab[j * d + l];
                                }
                            }
                        }
                        v += pr.div_div * s;
                    }
                    if pr.grad_grad != 0.0 {
                        v += pr.grad_grad * traces[c] * traces[e] * lap;
                    }
                    k[(a * m + c) * nd + b * m + e] = v;
                }
            }
        }
    }
    Ok(k)
}

/// Sparsity pattern of a space: dofs couple iff their nodes share an element.
fn build_pattern(space: &FESpace) -> SparseMatrix {
    let d = space.dim();
    let m = space.components();
    let p = space.order();
    let npa = space.nodes_per_axis().to_vec();
    let nel = space.mesh().n().to_vec();
    // Coupled node range along one axis for lattice index i.
    let range = |k: usize, i: usize| -> (usize, usize) {
        let e_lo = if i == 0 { 0 } else { (i - 1) / p };
        let e_hi = (i / p).min(nel[k] - 1);
        (e_lo * p, (e_hi + 1) * p)
    };
    let nnodes = space.num_nodes();
    let mut col_ptr = Vec::with_capacity(nnodes * m + 1);
    col_ptr.push(0u32);
    let mut total = 0usize;
    let mut ranges = Vec::with_capacity(nnodes);
    for node in 0..nnodes {
        let idx = space.node_index(node);
        let r: Vec<(usize, usize)> = (0..d).map(|k| range(k, idx[k])).collect();
        let count: usize = r.iter().map(|(lo, hi)| hi - lo + 1).product::<usize>() * m;
        for _ in 0..m {
            total += count;
            col_ptr.push(u32::try_from(total).expect("pattern exceeds u32 index range"));
        }
        ranges.push(r);
    }
    let mut row_idx = Vec::with_capacity(total);
    for r in &ranges {
        let mut rows = Vec::new();
        let (zlo, zhi) = if d == 3 { r[2] } else { (0, 0) };
        for z in zlo..=zhi {
            for y in r[1].0..=r[1].1 {
                for x in r[0].0..=r[0].1 {
                    let node = x + npa[0] * (y + npa[1] * z);
                    for c in 0..m {
                        rows.push((node * m + c) as u32);
                    }
                }
            }
        }
        for _ in 0..m {
            row_idx.extend_from_slice(&rows);
        }
    }
    SparseMatrix::from_pattern(nnodes * m, col_ptr, row_idx)
}

/// Adds a dense element matrix (row-major over sorted local dofs) into `k`.
fn scatter(k: &mut SparseMatrix, dofs: &[usize], local: &[f64]) {
    let nd = dofs.len();
    for (jl, &jg) in dofs.iter().enumerate() {
        let range = k.col_range(jg);
        let start = range.start;
        let rows = &k.row_idx()[range];
        let first = rows
            .binary_search(&(dofs[0] as u32))
            .expect("element dof missing from pattern");
        let mut pos = first;
        let mut targets = Vec::with_capacity(nd);
        for &ig in dofs {
            while rows[pos] as usize != ig {
                pos += 1;
            }
            targets.push(start + pos);
        }
        let vals = k.values_mut();
        for (il, &t) in targets.iter().enumerate() {
            vals[t] += local[il * nd + jl];
        }
    }
}

/// Assembles the global matrix `K_ij = a(φ_i, φ_j)` (row = test, column = trial).
pub fn assemble_matrix(space: &FESpace, form: &Formulation) -> Result<SparseMatrix, FormError> {
    let local = element_matrix(space, form)?;
    let mut k = build_pattern(space);
    for e in 0..space.mesh().num_elements() {
        let dofs = space.element_dofs(e);
        debug_assert!(dofs.windows(2).all(|w| w[0] < w[1]));
        scatter(&mut k, &dofs, &local);
    }
    Ok(k)
}

/// Pointwise vector field.
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Pointwise scalar field.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Boundary field of position and outward normal.
pub type BoundaryFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Body-force data. The direct load needs `sym_grad_force` and `div_force`;
/// the distributional load and the displacement form need `force`.
#[derive(Clone, Default)]
pub struct ForceData {
    pub force: Option<VectorFn>,
    /// Packed `sym D f`.
    pub sym_grad_force: Option<VectorFn>,
    pub div_force: Option<ScalarFn>,
}

impl ForceData {
    /// All callbacks from a manufactured solution.
    pub fn from_case(case: &ManufacturedCase) -> Self {
        let c1 = case.clone();
        let c2 = case.clone();
        let c3 = case.clone();
        Self {
            force: Some(Arc::new(move |x| c1.force(x))),
            sym_grad_force: Some(Arc::new(move |x| c2.exact(x).sym_grad_force())),
            div_force: Some(Arc::new(move |x| c3.exact(x).div_force())),
        }
    }

    /// Only the force itself (suitable for the distributional load).
    pub fn force_only(f: VectorFn) -> Self {
        Self {
            force: Some(f),
            ..Default::default()
        }
    }
}

/// How the body-force load is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMethod {
    /// Volume integrals of `sym D f` and `div f`.
    Direct,
    /// Element-wise integration by parts: only `f` is evaluated, so piecewise
    /// constant forces are admissible as long as their jumps do not coincide
    /// with element faces.
    Distributional,
}

impl RhsMethod {
    pub fn name(self) -> &'static str {
        match self {
            RhsMethod::Direct => "direct",
            RhsMethod::Distributional => "distributional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(RhsMethod::Direct),
            "distributional" => Some(RhsMethod::Distributional),
            _ => None,
        }
    }
}

/// Precomputed basis values at the points of a quadrature rule.
fn tabulate(p: usize, rule: &QuadratureRule) -> Vec<LocalBasis> {
    rule.points
        .iter()
        .map(|xi| local_basis(p, xi).expect("order validated by the space"))
        .collect()
}

/// `⟨E_c, S⟩` for a full row-major `d × d` matrix `s`.
fn contract_basis(d: usize, c: usize, s: &[f64]) -> f64 {
    let (i, j) = voigt_pairs(d)[c];
    if i == j {
        s[i * d + i]
    } else {
        s[i * d + j] + s[j * d + i]
    }
}

/// Assembles the body-force load vector.
pub fn assemble_rhs(
    space: &FESpace,
    form: &Formulation,
    data: &ForceData,
    method: RhsMethod,
) -> Result<Vec<f64>, FormError> {
    form.check_space(space)?;
    let d = space.dim();
    let m = space.components();
    let p = space.order();
    let mesh = space.mesh();
    let h = mesh.h();
    let jac: f64 = h.iter().product();
    let rule = QuadratureRule::tensor(d, assembly_quad_order(p));
    let table = tabulate(p, &rule);
    let mut b = vec![0.0; space.num_dofs()];

    if form.is_displacement() {
        let f = data.force.as_ref().ok_or(FormError::MissingCallback("force"))?;
        for e in 0..mesh.num_elements() {
            let dofs = space.element_dofs(e);
            for (xi, (w, basis)) in rule.points.iter().zip(rule.weights.iter().zip(&table)) {
                let fx = f(&mesh.map_point(e, xi));
                for (a, &phi) in basis.values.iter().enumerate() {
                    for c in 0..d {
                        b[dofs[a * m + c]] += w * jac * phi * fx[c];
                    }
                }
            }
        }
        return Ok(b);
    }

    let (alpha, beta) = form.load_weights();
    let traces: Vec<f64> = (0..m)
        .map(|c| {
            let (i, j) = voigt_pairs(d)[c];
            if i == j {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    match method {
        RhsMethod::Direct => {
            let sg = data
                .sym_grad_force
                .as_ref()
                .ok_or(FormError::MissingCallback("sym_grad_force"))?;
            let dv = data.div_force.as_ref().ok_or(FormError::MissingCallback("div_force"))?;
            for e in 0..mesh.num_elements() {
                let dofs = space.element_dofs(e);
                for (xi, (w, basis)) in rule.points.iter().zip(rule.weights.iter().zip(&table)) {
                    let x = mesh.map_point(e, xi);
                    let s = sg(&x);
                    let div = dv(&x);
                    let wj = w * jac;
                    for (a, &phi) in basis.values.iter().enumerate() {
                        for c in 0..m {
                            // ⟨E_c, S⟩ for symmetric packed S doubles off-diagonals.
                            let weight = if traces[c] == 1.0 { 1.0 } else { 2.0 };
                            let v = alpha * weight * s[c] + beta * traces[c] * div;
                            b[dofs[a * m + c]] += wj * phi * v;
                        }
                    }
                }
            }
        }
        RhsMethod::Distributional => {
            let f = data.force.as_ref().ok_or(FormError::MissingCallback("force"))?;
            for e in 0..mesh.num_elements() {
                let dofs = space.element_dofs(e);
                for (xi, (w, basis)) in rule.points.iter().zip(rule.weights.iter().zip(&table)) {
                    let fx = f(&mesh.map_point(e, xi));
                    let wj = w * jac;
                    for (a, g) in basis.grads.iter().enumerate() {
                        let grad: Vec<f64> = (0..d).map(|k| g[k] / h[k]).collect();
                        let gf: f64 = (0..d).map(|k| grad[k] * fx[k]).sum();
                        for c in 0..m {
                            let (i, j) = voigt_pairs(d)[c];
                            // ⟨Div(φ E_c), f⟩
                            let div_f = if i == j {
                                grad[i] * fx[i]
                            } else {
                                grad[j] * fx[i] + grad[i] * fx[j]
                            };
                            let v = -alpha * div_f - beta * traces[c] * gf;
                            b[dofs[a * m + c]] += wj * v;
                        }
                    }
                }
            }
            let mut kappa = |x: &[f64], n: &[f64]| -> Vec<f64> {
                let fx = f(x);
                let fn_: f64 = (0..d).map(|k| fx[k] * n[k]).sum();
                let mut out = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = alpha * fx[i] * n[j] + if i == j { beta * fn_ } else { 0.0 };
                    }
                }
                out
            };
            add_boundary_term(space, &mut kappa, &mut b);
        }
    }
    Ok(b)
}

/// Reference-element quadrature on one face.
fn face_rule(d: usize, q: usize, face: &BoundaryFace) -> (Vec<Vec<f64>>, Vec<f64>) {
    let sub = QuadratureRule::tensor(d - 1, q);
    let pts = sub
        .points
        .iter()
        .map(|s| {
            let mut xi = Vec::with_capacity(d);
            let mut it = s.iter();
            for k in 0..d {
                if k == face.axis {
                    xi.push(if face.upper { 1.0 } else { 0.0 });
                } else {
                    xi.push(*it.next().expect("face coordinate"));
                }
            }
            xi
        })
        .collect();
    (pts, sub.weights)
}

/// Adds `∫_N ⟨τ, κ⟩` (stress forms, `κ` full row-major `d × d`) or
/// `∫_N ⟨v, t⟩` (displacement form, `t` a vector) over Neumann faces.
fn add_boundary_term(space: &FESpace, kappa: &mut dyn FnMut(&[f64], &[f64]) -> Vec<f64>, b: &mut [f64]) {
    let d = space.dim();
    let m = space.components();
    let p = space.order();
    let mesh = space.mesh();
    // Displacement spaces carry d components, stress spaces d(d+1)/2.
    let displacement = m == d;
    for face in mesh.boundary_faces() {
        if face.tag != BoundaryTag::Neumann {
            continue;
        }
        let (pts, wts) = face_rule(d, assembly_quad_order(p), face);
        let dofs = space.element_dofs(face.element);
        for (xi, w) in pts.iter().zip(&wts) {
            let basis = local_basis(p, xi).expect("order validated by the space");
            let k = kappa(&mesh.map_point(face.element, xi), &face.normal);
            let wm = w * face.measure;
            for (a, &phi) in basis.values.iter().enumerate() {
                if phi == 0.0 {
                    continue;
                }
                for c in 0..m {
                    let v = if displacement { k[c] } else { contract_basis(d, c, &k) };
                    b[dofs[a * m + c]] += wm * phi * v;
                }
            }
        }
    }
}

/// Assembles the Neumann load `∫_N ⟨τ, κ⟩`; `kappa(x, n)` returns the full
/// row-major `d × d` boundary operator for stress forms, or the traction
/// vector for the displacement form.
pub fn assemble_neumann(
    space: &FESpace,
    form: &Formulation,
    kappa: &dyn Fn(&[f64], &[f64]) -> Vec<f64>,
) -> Result<Vec<f64>, FormError> {
    form.check_space(space)?;
    let mut b = vec![0.0; space.num_dofs()];
    let mut k = |x: &[f64], n: &[f64]| kappa(x, n);
    add_boundary_term(space, &mut k, &mut b);
    Ok(b)
}

/// The boundary operator of a formulation evaluated on a manufactured
/// solution: for stress forms the full `d × d` matrix `κ(σ̃, n)` whose
/// contraction with `τ` is the natural boundary term, for the displacement
/// form the traction `σ̃ n`.
pub fn manufactured_kappa(form: &Formulation, case: &ManufacturedCase) -> BoundaryFn {
    let form = *form;
    let case = case.clone();
    Arc::new(move |x: &[f64], n: &[f64]| {
        let d = case.dim();
        if form.is_displacement() {
            return case.traction(x, n);
        }
        let ex = case.exact(x);
        let idx = |i: usize, j: usize| voigt_index(d, i, j);
        let chi = form.chi();
        let grad_tr: Vec<f64> = (0..d).map(|k| (0..d).map(|i| ex.sigma_grad[idx(i, i)][k]).sum()).collect();
        let div: Vec<f64> = (0..d).map(|i| (0..d).map(|j| ex.sigma_grad[idx(i, j)][j]).sum()).collect();
        let div_n: f64 = (0..d).map(|i| div[i] * n[i]).sum();
        let gtr_n: f64 = (0..d).map(|i| grad_tr[i] * n[i]).sum();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let dn: f64 = (0..d).map(|k| ex.sigma_grad[idx(i, j)][k] * n[k]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                out[i * d + j] = match form.kind {
                    FormKind::Stress3dI => dn + chi * (grad_tr[i] * n[j] + div_n * id),
                    FormKind::Stress3dII { omega } => {
                        dn + chi * (grad_tr[i] * n[j] + div_n * id) + omega * div[i] * n[j]
                    }
                    FormKind::Stress3dNonsym => dn + chi * grad_tr[i] * n[j],
                    FormKind::PlanarI { psi, .. } => chi * gtr_n * id + psi * div[i] * n[j],
                    FormKind::PlanarII { .. } => dn + grad_tr[i] * n[j] + div_n * id,
                    FormKind::Displacement { .. } => unreachable!("handled above"),
                };
            }
        }
        out
    })
}

/// A full (unreduced) linear system with its Dirichlet data.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Sorted Dirichlet dofs.
    pub dirichlet_dofs: Vec<usize>,
}

impl AssembledSystem {
    /// Bundles a matrix and load with the Dirichlet dofs of `space`.
    pub fn new(space: &FESpace, matrix: SparseMatrix, rhs: Vec<f64>) -> Result<Self, FormError> {
        let n = space.num_dofs();
        if matrix.nrows() != n || rhs.len() != n {
            return Err(FormError::LengthMismatch {
                expected: n,
                got: if matrix.nrows() != n { matrix.nrows() } else { rhs.len() },
            });
        }
        Ok(Self {
            matrix,
            rhs,
            dirichlet_dofs: space.dirichlet_dofs(),
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.rhs.len()
    }
}

/// The system restricted to the free dofs.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Sorted free dofs (row `k` of the reduced system is dof `free_dofs[k]`).
    pub free_dofs: Vec<usize>,
    /// Full-length vector holding the prescribed Dirichlet values (zero on free dofs).
    pub lifting: Vec<f64>,
}

impl ReducedSystem {
    /// Full coefficient vector from a reduced solution.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.free_dofs.len());
        let mut full = self.lifting.clone();
        for (&dof, &v) in self.free_dofs.iter().zip(reduced) {
            full[dof] = v;
        }
        full
    }
}

/// Eliminates the Dirichlet dofs symmetrically: the prescribed values are
/// taken from `boundary_values` (a full-length coefficient vector, typically
/// an interpolant) and moved to the right-hand side as `b_f − K_fd g`.
pub fn apply_dirichlet(system: &AssembledSystem, boundary_values: &[f64]) -> Result<ReducedSystem, FormError> {
    let n = system.num_dofs();
    if boundary_values.len() != n {
        return Err(FormError::LengthMismatch {
            expected: n,
            got: boundary_values.len(),
        });
    }
    let mut lifting = vec![0.0; n];
    let mut is_dir = vec![false; n];
    for &i in &system.dirichlet_dofs {
        lifting[i] = boundary_values[i];
        is_dir[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_dir[i]).collect();
    let kg = system.matrix.mul_vec(&lifting);
    let rhs = free.iter().map(|&i| system.rhs[i] - kg[i]).collect();
    Ok(ReducedSystem {
        matrix: system.matrix.principal_submatrix(&free),
        rhs,
        free_dofs: free,
        lifting,
    })
}
