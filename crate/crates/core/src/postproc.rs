//! Error norms against exact solutions, stress recovery from displacements,
//! stress invariants and convergence-rate fitting.

use std::fmt::Write as _;

use thiserror::Error;

use crate::fespace::{local_basis, FESpace, FeError, QuadratureRule};
use crate::tensor::{
    stress_invariants, sym_len, voigt_pairs, Direction, ElasticMode, Material, StressInvariants, SymMat,
    TensorError,
};

/// Default quadrature points per direction for error integrals.
pub const ERROR_QUAD_ORDER: usize = 6;

/// Errors of post-processing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PostError {
    #[error("exact field returned {got} components, expected {expected}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("at least two rows are required to fit rates, got {0}")]
    TooFewRows(usize),
    #[error("mesh parameters must be strictly decreasing (row {0})")]
    NonMonotoneH(usize),
    #[error("space is not {0}-valued")]
    WrongSpace(&'static str),
    #[error(transparent)]
    Space(#[from] FeError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Absolute and relative `L²` error. `relative` is `None` when the exact
/// field has zero norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    pub absolute: f64,
    pub exact_norm: f64,
    pub relative: Option<f64>,
}

impl L2Error {
    fn new(err_sq: f64, ref_sq: f64) -> Self {
        let absolute = err_sq.max(0.0).sqrt();
        let exact_norm = ref_sq.max(0.0).sqrt();
        Self {
            absolute,
            exact_norm,
            relative: (exact_norm > 0.0).then(|| absolute / exact_norm),
        }
    }
}

/// Squared-norm weights of packed components: symmetric tensors count their
/// off-diagonal entries twice (Frobenius norm); vector fields use unit weights.
fn component_weights(d: usize, m: usize) -> Vec<f64> {
    if m == sym_len(d) && m != d {
        voigt_pairs(d)
            .iter()
            .map(|&(i, j)| if i == j { 1.0 } else { 2.0 })
            .collect()
    } else {
        vec![1.0; m]
    }
}

/// Calls `visit(e, ξ, x, weight)` at every quadrature point of the mesh.
fn for_each_point(space: &FESpace, quad_order: usize, mut visit: impl FnMut(usize, &[f64], &[f64], f64)) {
    let mesh = space.mesh();
    let jac: f64 = mesh.h().iter().product();
    let rule = QuadratureRule::tensor(space.dim(), quad_order);
    for e in 0..mesh.num_elements() {
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            visit(e, xi, &mesh.map_point(e, xi), w * jac);
        }
    }
}

/// `L²` error of a general approximation `approx(e, ξ)` on the mesh of
/// `space`, with `m` components.
pub fn l2_error_of(
    space: &FESpace,
    m: usize,
    approx: &dyn Fn(usize, &[f64]) -> Vec<f64>,
    exact: &dyn Fn(&[f64]) -> Vec<f64>,
    quad_order: usize,
) -> Result<L2Error, PostError> {
    let wts = component_weights(space.dim(), m);
    let (mut err, mut reference) = (0.0, 0.0);
    let mut bad = None;
    for_each_point(space, quad_order, |e, xi, x, w| {
        let ex = exact(x);
        if ex.len() != m {
            bad = Some(ex.len());
            return;
        }
        let ap = approx(e, xi);
        for c in 0..m {
            err += w * wts[c] * (ex[c] - ap[c]).powi(2);
            reference += w * wts[c] * ex[c].powi(2);
        }
    });
    if let Some(got) = bad {
        return Err(PostError::ComponentMismatch { expected: m, got });
    }
    Ok(L2Error::new(err, reference))
}

/// Discrete-field evaluator `(e, ξ) ↦ value`.
fn fe_values<'a>(space: &'a FESpace, coeffs: &'a [f64]) -> impl Fn(usize, &[f64]) -> Vec<f64> + 'a {
    move |e, xi| {
        let basis = local_basis(space.order(), xi).expect("order validated by the space");
        space.evaluate_with(coeffs, &space.element_dofs(e), &basis).0
    }
}

fn check_len(space: &FESpace, coeffs: &[f64]) -> Result<(), PostError> {
    if coeffs.len() != space.num_dofs() {
        return Err(FeError::LengthMismatch {
            expected: space.num_dofs(),
            got: coeffs.len(),
        }
        .into());
    }
    Ok(())
}

/// `L²` error of a discrete field against an exact callback.
pub fn l2_error(
    space: &FESpace,
    coeffs: &[f64],
    exact: &dyn Fn(&[f64]) -> Vec<f64>,
    quad_order: usize,
) -> Result<L2Error, PostError> {
    check_len(space, coeffs)?;
    l2_error_of(space, space.components(), &fe_values(space, coeffs), exact, quad_order)
}

/// Invariants of a packed stress in `d` dimensions.
pub fn packed_invariants(d: usize, s: &[f64]) -> StressInvariants {
    if d == 3 {
        stress_invariants(&SymMat::<3>::from_packed(s))
    } else {
        stress_invariants(&SymMat::<2>::from_packed(s))
    }
}

/// Relative `L²` errors of the von Mises and mean stresses of a general
/// stress approximation, compared pointwise at quadrature points.
pub fn invariant_errors_of(
    space: &FESpace,
    approx: &dyn Fn(usize, &[f64]) -> Vec<f64>,
    exact_sigma: &dyn Fn(&[f64]) -> Vec<f64>,
    quad_order: usize,
) -> Result<(L2Error, L2Error), PostError> {
    let d = space.dim();
    let m = sym_len(d);
    let mut acc = [0.0; 4];
    let mut bad = None;
    for_each_point(space, quad_order, |e, xi, x, w| {
        let ex = exact_sigma(x);
        if ex.len() != m {
            bad = Some(ex.len());
            return;
        }
        let ie = packed_invariants(d, &ex);
        let ia = packed_invariants(d, &approx(e, xi));
        acc[0] += w * (ie.von_mises - ia.von_mises).powi(2);
        acc[1] += w * ie.von_mises.powi(2);
        acc[2] += w * (ie.mean - ia.mean).powi(2);
        acc[3] += w * ie.mean.powi(2);
    });
    if let Some(got) = bad {
        return Err(PostError::ComponentMismatch { expected: m, got });
    }
    Ok((L2Error::new(acc[0], acc[1]), L2Error::new(acc[2], acc[3])))
}

/// Von Mises and mean-stress errors of a discrete stress field.
pub fn invariant_errors(
    space: &FESpace,
    coeffs: &[f64],
    exact_sigma: &dyn Fn(&[f64]) -> Vec<f64>,
    quad_order: usize,
) -> Result<(L2Error, L2Error), PostError> {
    check_len(space, coeffs)?;
    if space.components() != sym_len(space.dim()) {
        return Err(PostError::WrongSpace("stress"));
    }
    invariant_errors_of(space, &fe_values(space, coeffs), exact_sigma, quad_order)
}

/// Evaluates `C sym D u^h` of a discrete displacement.
#[derive(Debug, Clone)]
pub struct StressRecovery<'a> {
    space: &'a FESpace,
    coeffs: &'a [f64],
    a: f64,
    b: f64,
}

impl StressRecovery<'_> {
    /// Packed stress at reference point `xi` of element `e`.
    pub fn eval(&self, e: usize, xi: &[f64]) -> Vec<f64> {
        let d = self.space.dim();
        let basis = local_basis(self.space.order(), xi).expect("order validated by the space");
        let (_, grad) = self
            .space
            .evaluate_with(self.coeffs, &self.space.element_dofs(e), &basis);
        let tr: f64 = (0..d).map(|i| grad[i][i]).sum();
        voigt_pairs(d)
            .iter()
            .map(|&(i, j)| {
                let eps = 0.5 * (grad[i][j] + grad[j][i]);
                self.a * eps + if i == j { self.b * tr } else { 0.0 }
            })
            .collect()
    }
}

/// Stress recovery from a displacement solution.
pub fn recover_stress_from_displacement<'a>(
    u_space: &'a FESpace,
    u_coeffs: &'a [f64],
    mat: &Material,
    mode: ElasticMode,
) -> Result<StressRecovery<'a>, PostError> {
    check_len(u_space, u_coeffs)?;
    if u_space.components() != u_space.dim() || mode.dim() != u_space.dim() {
        return Err(PostError::WrongSpace("displacement"));
    }
    let (a, b) = mat.coefficients(mode, Direction::Stiffness)?;
    Ok(StressRecovery {
        space: u_space,
        coeffs: u_coeffs,
        a,
        b,
    })
}

/// Slopes of a log-log error curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Slope between rows `i` and `i + 1`.
    pub pair_slopes: Vec<f64>,
    /// Slope of the last pair.
    pub last: f64,
    /// Mean of the last two pair slopes (the last slope if only one exists).
    pub mean_last_two: f64,
}

/// Fits `e ∝ h^s` between consecutive rows: `s = log(e_i/e_{i+1}) / log(h_i/h_{i+1})`.
pub fn fit_rates(h: &[f64], errors: &[f64]) -> Result<RateFit, PostError> {
    assert_eq!(h.len(), errors.len(), "h and errors must have equal length");
    if h.len() < 2 {
        return Err(PostError::TooFewRows(h.len()));
    }
    for i in 1..h.len() {
        if !(h[i] < h[i - 1]) {
            return Err(PostError::NonMonotoneH(i));
        }
    }
    let pair_slopes: Vec<f64> = (0..h.len() - 1)
        .map(|i| (errors[i] / errors[i + 1]).ln() / (h[i] / h[i + 1]).ln())
        .collect();
    let last = *pair_slopes.last().expect("at least one pair");
    let mean_last_two = if pair_slopes.len() >= 2 {
        0.5 * (pair_slopes[pair_slopes.len() - 2] + last)
    } else {
        last
    };
    Ok(RateFit {
        pair_slopes,
        last,
        mean_last_two,
    })
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub dofs: usize,
    /// Elements along the first axis.
    pub n: usize,
    /// Mesh parameter (element size along the first axis).
    pub h: f64,
    /// Relative `L²` stress error.
    pub err_sigma: f64,
    /// Relative `L²` von Mises error.
    pub err_vm: f64,
    /// Relative `L²` mean-stress error.
    pub err_mean: f64,
}

/// Rows of a convergence study with fitted slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ErrorRow>,
    /// Stress-error slopes per consecutive pair (empty for a single row).
    pub sigma_rates: Option<RateFit>,
    pub vm_rates: Option<RateFit>,
    pub mean_rates: Option<RateFit>,
}

impl ConvergenceReport {
    /// Builds the report; rows must be strictly increasing in dofs.
    pub fn new(rows: Vec<ErrorRow>) -> Result<Self, PostError> {
        for i in 1..rows.len() {
            if rows[i].dofs <= rows[i - 1].dofs {
                return Err(PostError::NonMonotoneH(i));
            }
        }
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let fit = |f: fn(&ErrorRow) -> f64| -> Option<RateFit> {
            let e: Vec<f64> = rows.iter().map(f).collect();
            fit_rates(&h, &e).ok()
        };
        Ok(Self {
            sigma_rates: fit(|r| r.err_sigma),
            vm_rates: fit(|r| r.err_vm),
            mean_rates: fit(|r| r.err_mean),
            rows,
        })
    }

    /// Whether the stress error never increases under refinement.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_sigma <= w[0].err_sigma)
    }

    /// CSV with columns `dofs,n,err_sigma,err_vm,err_mean,slope_sigma`; the
    /// slope of row `i` is measured against row `i − 1` (empty on the first).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dofs,n,err_sigma,err_vm,err_mean,slope_sigma\n");
        for (i, r) in self.rows.iter().enumerate() {
            let slope = match (&self.sigma_rates, i) {
                (Some(f), i) if i > 0 => format!("{:.16e}", f.pair_slopes[i - 1]),
                _ => String::new(),
            };
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                r.dofs, r.n, r.err_sigma, r.err_vm, r.err_mean, slope
            );
        }
        s
    }
}
