//! Sparse direct solution of the reduced systems and dense spectral
//! classification of assembled operators.
//!
//! Solution strategy: sparse Cholesky for positive definite systems, a
//! supernodal Bunch–Kaufman `LBLᵀ` factorization for symmetric indefinite
//! ones, and sparse `LU` with partial pivoting as the final fallback (also the
//! only path for non-symmetric matrices). Every result is refined iteratively
//! and must meet the residual contract
//! `‖K u − b‖₂ ≤ 1e-9 (‖K‖_max ‖u‖₂ + ‖b‖₂)`.

use std::fmt;
use std::fmt::Write as _;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::{Conj, Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::forms::ReducedSystem;
use crate::sparse::SparseMatrix;

/// Relative residual bound every accepted solution satisfies.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Default largest dimension accepted by the dense eigensolver.
pub const DEFAULT_DENSE_CAP: usize = 8000;
/// Default relative threshold below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Condition-estimate bound above which a matrix is reported singular.
const SINGULAR_CONDITION: f64 = 1e14;
const MAX_REFINEMENT_STEPS: usize = 5;

/// Errors of the linear solvers and the eigensolver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("matrix is singular (estimated kernel dimension: {})", fmt_kernel(*.kernel_estimate))]
    Singular { kernel_estimate: Option<usize> },
    #[error("no factorization met the residual contract (best relative residual {best_residual:.3e})")]
    ResidualContract { best_residual: f64 },
    #[error("right-hand side has length {got}, matrix has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {n} exceeds the dense eigensolver cap {cap}; use a smaller mesh")]
    DenseCap { n: usize, cap: usize },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

fn fmt_kernel(k: Option<usize>) -> String {
    k.map_or_else(|| "unknown, matrix above the dense cap".into(), |k| k.to_string())
}

/// Factorization that produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Cholesky,
    Lblt,
    Lu,
}

impl fmt::Display for SolverPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverPath::Cholesky => "cholesky",
            SolverPath::Lblt => "lblt",
            SolverPath::Lu => "lu",
        })
    }
}

/// A solution with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub path: SolverPath,
    /// `‖K u − b‖₂ / (‖K‖_max ‖u‖₂ + ‖b‖₂)`.
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(k: &SparseMatrix, u: &[f64], b: &[f64]) -> Vec<f64> {
    let ku = k.mul_vec(u);
    b.iter().zip(&ku).map(|(bi, ki)| bi - ki).collect()
}

/// Relative residual as used by the contract.
pub fn relative_residual(k: &SparseMatrix, u: &[f64], b: &[f64]) -> f64 {
    let r = norm2(&residual(k, u, b));
    let scale = k.max_abs() * norm2(u) + norm2(b);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

/// A factorization that can solve in place.
trait Factor {
    fn solve(&self, rhs: &mut [f64]);
}

struct CholeskyFactor(faer::sparse::linalg::solvers::Llt<u32, f64>);

impl Factor for CholeskyFactor {
    fn solve(&self, rhs: &mut [f64]) {
        let mut m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.0.solve_in_place_with_conj(Conj::No, m.as_mut());
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = m[(i, 0)];
        }
    }
}

struct LuFactor(faer::sparse::linalg::solvers::Lu<u32, f64>);

impl Factor for LuFactor {
    fn solve(&self, rhs: &mut [f64]) {
        let mut m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.0.solve_in_place_with_conj(Conj::No, m.as_mut());
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = m[(i, 0)];
        }
    }
}

/// Owned supernodal Bunch–Kaufman factorization.
struct LbltFactor {
    symbolic: faer::sparse::linalg::cholesky::SymbolicCholesky<u32>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<u32>,
    perm_inv: Vec<u32>,
}

impl LbltFactor {
    fn new(k: &SparseMatrix) -> Option<Self> {
        let a = k.as_faer();
        let symbolic = factorize_symbolic_cholesky(
            a.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
                ..Default::default()
            },
        )
        .ok()?;
        let n = k.nrows();
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut perm_fwd = vec![0u32; n];
        let mut perm_inv = vec![0u32; n];
        let mut buf = MemBuffer::try_new(
            symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default()),
        )
        .ok()?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut perm_fwd,
            &mut perm_inv,
            a,
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        );
        Some(Self {
            symbolic,
            values,
            subdiag,
            perm_fwd,
            perm_inv,
        })
    }
}

impl Factor for LbltFactor {
    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let perm = unsafe {
            faer::perm::PermRef::new_unchecked(&self.perm_fwd, &self.perm_inv, n)
        };
        let lblt = faer::sparse::linalg::cholesky::IntranodeLbltRef::new(
            &self.symbolic,
            &self.values,
            &self.subdiag,
            perm,
        );
        let mut m = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        lblt.solve_in_place_with_conj(Conj::No, m.as_mut(), Par::Seq, MemStack::new(&mut buf));
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = m[(i, 0)];
        }
    }
}

enum Attempt {
    Solved(SolveReport),
    Singular,
    Inaccurate(f64),
}

fn attempt(k: &SparseMatrix, b: &[f64], factor: &dyn Factor, path: SolverPath) -> Attempt {
    let n = k.nrows();
    let kmax = k.max_abs();
    // Condition probe: a random right-hand side exposes near-singular factors.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let probe: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y = probe.clone();
    factor.solve(&mut y);
    let amplification = norm2(&y) * kmax / norm2(&probe);
    if !amplification.is_finite() || amplification > SINGULAR_CONDITION {
        return Attempt::Singular;
    }
    let mut u = b.to_vec();
    factor.solve(&mut u);
    if u.iter().any(|v| !v.is_finite()) {
        return Attempt::Inaccurate(f64::INFINITY);
    }
    let mut rel = relative_residual(k, &u, b);
    let mut steps = 0;
    while steps < MAX_REFINEMENT_STEPS && rel > 1e-14 {
        let mut r = residual(k, &u, b);
        factor.solve(&mut r);
        let cand: Vec<f64> = u.iter().zip(&r).map(|(a, c)| a + c).collect();
        let cand_rel = relative_residual(k, &cand, b);
        steps += 1;
        if !(cand_rel < rel) {
            break;
        }
        u = cand;
        rel = cand_rel;
    }
    if rel <= RESIDUAL_TOLERANCE {
        Attempt::Solved(SolveReport {
            solution: u,
            path,
            relative_residual: rel,
            refinement_steps: steps,
        })
    } else {
        Attempt::Inaccurate(rel)
    }
}

/// Solves `K u = b` with the factorization cascade described in the module
/// documentation.
pub fn solve_linear(k: &SparseMatrix, b: &[f64]) -> Result<SolveReport, SolveError> {
    let n = k.nrows();
    if b.len() != n {
        return Err(SolveError::DimensionMismatch { expected: n, got: b.len() });
    }
    if n == 0 {
        return Ok(SolveReport {
            solution: Vec::new(),
            path: SolverPath::Cholesky,
            relative_residual: 0.0,
            refinement_steps: 0,
        });
    }
    let symmetric = k.symmetry_defect() <= 1e-12 * k.max_abs();
    let mut best = f64::INFINITY;
    let mut singular = false;
    let mut record = |a: Attempt| -> Option<SolveReport> {
        match a {
            Attempt::Solved(r) => Some(r),
            Attempt::Singular => {
                singular = true;
                None
            }
            Attempt::Inaccurate(r) => {
                best = best.min(r);
                None
            }
        }
    };
    if symmetric {
        if let Ok(llt) = k.as_faer().sp_cholesky(Side::Lower) {
            if let Some(r) = record(attempt(k, b, &CholeskyFactor(llt), SolverPath::Cholesky)) {
                return Ok(r);
            }
        }
        if let Some(f) = LbltFactor::new(k) {
            if let Some(r) = record(attempt(k, b, &f, SolverPath::Lblt)) {
                return Ok(r);
            }
        }
    }
    if let Ok(lu) = k.as_faer().sp_lu() {
        if let Some(r) = record(attempt(k, b, &LuFactor(lu), SolverPath::Lu)) {
            return Ok(r);
        }
    } else {
        singular = true;
    }
    if singular {
        let kernel_estimate = if n <= DEFAULT_DENSE_CAP && symmetric {
            spectrum(k, DEFAULT_ZERO_TOL).ok().map(|s| s.zero)
        } else {
            None
        };
        return Err(SolveError::Singular { kernel_estimate });
    }
    Err(SolveError::ResidualContract { best_residual: best })
}

/// Solves a reduced system and returns the full coefficient vector.
pub fn solve_reduced(system: &ReducedSystem) -> Result<(Vec<f64>, SolveReport), SolveError> {
    let report = solve_linear(&system.matrix, &system.rhs)?;
    Ok((system.expand(&report.solution), report))
}

/// Descriptive metadata attached to a spectrum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumMeta {
    pub formulation: String,
    pub nu: f64,
    /// `ω` or `ψ` where applicable.
    pub parameter: Option<f64>,
    pub plan: String,
    /// Total dofs of the space (before any Dirichlet reduction).
    pub dofs: usize,
}

/// Eigenvalues of a symmetric matrix with their inertia.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    /// Absolute threshold `zero_tol_rel · max|λ|`.
    pub threshold: f64,
    pub zero_tol_rel: f64,
    pub meta: SpectrumMeta,
}

impl SpectrumReport {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Negative eigenvalues as a percentage of `total` (e.g. the total dofs).
    pub fn negative_percent(&self, total: usize) -> f64 {
        100.0 * self.negative as f64 / total as f64
    }

    /// Smallest eigenvalue.
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    /// CSV: one `eigenvalue` row per eigenvalue, then a summary row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,index,value,negative,zero,positive,threshold\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "eigenvalue,{i},{l:.16e},,,,");
        }
        let _ = writeln!(
            s,
            "summary,,,{},{},{},{:.16e}",
            self.negative, self.zero, self.positive, self.threshold
        );
        s
    }
}

/// Full symmetric eigendecomposition with the default dense cap.
pub fn spectrum(k: &SparseMatrix, zero_tol_rel: f64) -> Result<SpectrumReport, SolveError> {
    spectrum_with_cap(k, zero_tol_rel, DEFAULT_DENSE_CAP)
}

/// Full symmetric eigendecomposition; `|λ| ≤ zero_tol_rel · max|λ|` counts as zero.
pub fn spectrum_with_cap(k: &SparseMatrix, zero_tol_rel: f64, cap: usize) -> Result<SpectrumReport, SolveError> {
    let n = k.nrows();
    if n > cap {
        return Err(SolveError::DenseCap { n, cap });
    }
    let mut dense = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for p in k.col_range(j) {
            dense[(k.row_idx()[p] as usize, j)] = k.values()[p];
        }
    }
    let mut eig: Vec<f64> = if n == 0 {
        Vec::new()
    } else {
        dense
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| SolveError::Eigen(format!("{e:?}")))?
    };
    drop(dense);
    eig.sort_by(|a, b| a.total_cmp(b));
    let lmax = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let threshold = zero_tol_rel * lmax;
    let zero = eig.iter().filter(|l| l.abs() <= threshold).count();
    let negative = eig.iter().filter(|&&l| l < -threshold).count();
    Ok(SpectrumReport {
        positive: n - zero - negative,
        eigenvalues: eig,
        negative,
        zero,
        threshold,
        zero_tol_rel,
        meta: SpectrumMeta::default(),
    })
}
