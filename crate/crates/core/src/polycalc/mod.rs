//! Exact multivariate-polynomial tensor calculus.
//!
//! Polynomials in `d ∈ {2, 3}` variables with double coefficients are
//! differentiated symbolically; vector, matrix and symmetric-tensor fields are
//! built from them. The module serves as an independent oracle for the
//! differential identities behind the stress formulations and for the
//! manufactured benchmark solutions.

pub mod identities;
pub mod manufactured;

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use thiserror::Error;

use crate::tensor::{sym_len, voigt_index, voigt_pairs};

pub use identities::{registry, run_identity_suite, verify_identity, Identity, IdentityOutcome, Residual};
pub use manufactured::{manufactured_case, BenchmarkName, ManufacturedCase};

/// Largest exponent allowed per variable.
pub const MAX_DEGREE: u32 = 10;

/// Errors of the polynomial engine and the identity registry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial degree {degree} exceeds the bound {MAX_DEGREE}")]
    DegreeOverflow { degree: u32 },
    #[error("unknown identity '{0}'")]
    UnknownIdentity(String),
    #[error("identity '{name}' is defined for dimension {expected}, field has dimension {got}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),
    #[error("benchmark '{name}' is not defined for mode {mode}")]
    IncompatibleMode { name: String, mode: String },
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
}

type Exps = [u8; 3];

/// A polynomial in `dim` variables: a sparse map from exponent multi-index to coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyScalar {
    dim: usize,
    terms: BTreeMap<Exps, f64>,
}

impl PolyScalar {
    /// The zero polynomial.
    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// A constant polynomial.
    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term([0; 3], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        Self::monomial(dim, &e[..dim], 1.0).expect("degree 1")
    }

    /// The monomial `c · x^e`.
    pub fn monomial(dim: usize, exps: &[u8], c: f64) -> Result<Self, PolyError> {
        assert_eq!(exps.len(), dim, "exponent length must equal dimension");
        let mut e = [0u8; 3];
        for (k, &v) in exps.iter().enumerate() {
            if v as u32 > MAX_DEGREE {
                return Err(PolyError::DegreeOverflow { degree: v as u32 });
            }
            e[k] = v;
        }
        let mut p = Self::zero(dim);
        p.add_term(e, c);
        Ok(p)
    }

    fn add_term(&mut self, e: Exps, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Iterates `(exponents, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], f64)> {
        self.terms.iter().map(move |(e, &c)| (&e[..self.dim], c))
    }

    /// True when no coefficient is stored.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&v| v as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// Largest exponent of any single variable.
    pub fn max_exponent(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|e| e.iter().map(|&v| v as u32))
            .max()
            .unwrap_or(0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |a, c| a.max(c.abs()))
    }

    /// Partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Self {
        assert!(i < self.dim);
        let mut r = Self::zero(self.dim);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut ne = *e;
                ne[i] -= 1;
                r.add_term(ne, c * e[i] as f64);
            }
        }
        r
    }

    /// Evaluates at `x` (length `dim`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, &c) in &self.terms {
            let mut t = c;
            for k in 0..self.dim {
                t *= x[k].powi(e[k] as i32);
            }
            s += t;
        }
        s
    }

    /// Product with overflow checking.
    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        assert_eq!(self.dim, other.dim);
        let mut r = Self::zero(self.dim);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let mut e = [0u8; 3];
                for k in 0..3 {
                    let v = ea[k] as u32 + eb[k] as u32;
                    if v > MAX_DEGREE {
                        return Err(PolyError::DegreeOverflow { degree: v });
                    }
                    e[k] = v as u8;
                }
                r.add_term(e, ca * cb);
            }
        }
        Ok(r)
    }

    /// `alpha · self`.
    pub fn scale(&self, alpha: f64) -> Self {
        let mut r = Self::zero(self.dim);
        for (e, &c) in &self.terms {
            r.add_term(*e, alpha * c);
        }
        r
    }

    /// Coefficient of the constant term.
    pub fn constant_term(&self) -> f64 {
        self.terms.get(&[0; 3]).copied().unwrap_or(0.0)
    }

    /// Random polynomial of total degree ≤ `degree` with integer coefficients in `[-range, range]`.
    pub fn random<R: Rng>(dim: usize, degree: u32, range: i32, rng: &mut R) -> Self {
        let mut p = Self::zero(dim);
        let d = degree as u8;
        for a in 0..=d {
            for b in 0..=(d - a) {
                let cmax = if dim == 3 { d - a - b } else { 0 };
                for c in 0..=cmax {
                    let coef = rng.random_range(-range..=range) as f64;
                    p.add_term([a, b, c], coef);
                }
            }
        }
        p
    }
}

impl Add for &PolyScalar {
    type Output = PolyScalar;
    fn add(self, rhs: &PolyScalar) -> PolyScalar {
        assert_eq!(self.dim, rhs.dim);
        let mut r = self.clone();
        for (e, &c) in &rhs.terms {
            r.add_term(*e, c);
        }
        r
    }
}

impl Sub for &PolyScalar {
    type Output = PolyScalar;
    fn sub(self, rhs: &PolyScalar) -> PolyScalar {
        assert_eq!(self.dim, rhs.dim);
        let mut r = self.clone();
        for (e, &c) in &rhs.terms {
            r.add_term(*e, -c);
        }
        r
    }
}

impl Neg for &PolyScalar {
    type Output = PolyScalar;
    fn neg(self) -> PolyScalar {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &PolyScalar {
    type Output = PolyScalar;
    fn mul(self, rhs: f64) -> PolyScalar {
        self.scale(rhs)
    }
}

/// A polynomial vector field with `dim` components.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVec {
    pub comps: Vec<PolyScalar>,
}

impl PolyVec {
    pub fn zero(dim: usize) -> Self {
        Self {
            comps: (0..dim).map(|_| PolyScalar::zero(dim)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, c| a.max(c.max_abs_coeff()))
    }

    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        Self {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| &a.scale(alpha) + &b.scale(beta))
                .collect(),
        }
    }
}

/// A (not necessarily symmetric) polynomial matrix field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMat {
    dim: usize,
    entries: Vec<PolyScalar>,
}

impl PolyMat {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim * dim).map(|_| PolyScalar::zero(dim)).collect(),
        }
    }

    /// Builds from an entry generator `f(i, j)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> PolyScalar) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// `s · I`.
    pub fn scalar_identity(s: &PolyScalar) -> Self {
        let d = s.dim();
        Self::from_fn(d, |i, j| if i == j { s.clone() } else { PolyScalar::zero(d) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &PolyScalar {
        &self.entries[i * self.dim + j]
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[PolyScalar] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> PolyScalar {
        let mut t = PolyScalar::zero(self.dim);
        for i in 0..self.dim {
            t = &t + self.get(i, i);
        }
        t
    }

    /// `alpha · self + beta · other`.
    pub fn lincomb(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        Self::from_fn(self.dim, |i, j| {
            &self.get(i, j).scale(alpha) + &other.get(i, j).scale(beta)
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j).scale(alpha))
    }

    /// Symmetric part, packed.
    pub fn sym(&self) -> PolySymField {
        let d = self.dim;
        PolySymField {
            dim: d,
            comps: voigt_pairs(d)
                .iter()
                .map(|&(i, j)| {
                    if i == j {
                        self.get(i, i).clone()
                    } else {
                        (self.get(i, j) + self.get(j, i)).scale(0.5)
                    }
                })
                .collect(),
        }
    }

    /// Skew part.
    pub fn skw(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self.get(i, j) - self.get(j, i)).scale(0.5))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, c| a.max(c.max_abs_coeff()))
    }

    pub fn eval(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).eval(x)).collect())
            .collect()
    }
}

/// A symmetric polynomial tensor field stored as `d(d+1)/2` components in Voigt order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySymField {
    dim: usize,
    comps: Vec<PolyScalar>,
}

impl PolySymField {
    /// Builds from packed components.
    pub fn new(comps: Vec<PolyScalar>) -> Self {
        let dim = comps.first().map(|c| c.dim()).expect("non-empty component list");
        assert_eq!(comps.len(), sym_len(dim), "component count must be d(d+1)/2");
        assert!(comps.iter().all(|c| c.dim() == dim));
        Self { dim, comps }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            comps: (0..sym_len(dim)).map(|_| PolyScalar::zero(dim)).collect(),
        }
    }

    /// Random field: every component of total degree ≤ `degree`.
    pub fn random<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Self {
        Self {
            dim,
            comps: (0..sym_len(dim))
                .map(|_| PolyScalar::random(dim, degree, 5, rng))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn comps(&self) -> &[PolyScalar] {
        &self.comps
    }

    /// Component `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &PolyScalar {
        &self.comps[voigt_index(self.dim, i, j)]
    }

    /// Unpacks to a full (symmetric) matrix field.
    pub fn to_mat(&self) -> PolyMat {
        PolyMat::from_fn(self.dim, |i, j| self.get(i, j).clone())
    }

    pub fn trace(&self) -> PolyScalar {
        let mut t = PolyScalar::zero(self.dim);
        for i in 0..self.dim {
            t = &t + self.get(i, i);
        }
        t
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, c| a.max(c.max_abs_coeff()))
    }

    /// Packed values at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    /// Embeds a planar field into 3D with zero out-of-plane components.
    pub fn embed_3d(&self) -> PolySymField {
        assert_eq!(self.dim, 2);
        let lift = |p: &PolyScalar| {
            let mut r = PolyScalar::zero(3);
            for (e, c) in p.terms() {
                r.add_term([e[0], e[1], 0], c);
            }
            r
        };
        let z = PolyScalar::zero(3);
        PolySymField {
            dim: 3,
            comps: vec![
                lift(self.get(0, 0)),
                lift(self.get(1, 1)),
                z.clone(),
                lift(self.get(0, 1)),
                z.clone(),
                z,
            ],
        }
    }
}

fn levi(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Gradient `∇s`.
pub fn grad(s: &PolyScalar) -> PolyVec {
    PolyVec {
        comps: (0..s.dim()).map(|k| s.diff(k)).collect(),
    }
}

/// Hessian `hess s`.
pub fn hess(s: &PolyScalar) -> PolyMat {
    PolyMat::from_fn(s.dim(), |i, j| s.diff(i).diff(j))
}

/// Laplacian `Δs`.
pub fn laplace(s: &PolyScalar) -> PolyScalar {
    let mut r = PolyScalar::zero(s.dim());
    for k in 0..s.dim() {
        r = &r + &s.diff(k).diff(k);
    }
    r
}

/// Componentwise Laplacian of a matrix field.
pub fn laplace_mat(m: &PolyMat) -> PolyMat {
    PolyMat::from_fn(m.dim(), |i, j| laplace(m.get(i, j)))
}

/// Divergence `div v`.
pub fn div(v: &PolyVec) -> PolyScalar {
    let d = v.dim();
    let mut r = PolyScalar::zero(d);
    for k in 0..d {
        r = &r + &v.comps[k].diff(k);
    }
    r
}

/// Gradient of a vector field, `(D v)_ij = ∂_j v_i`.
pub fn grad_vec(v: &PolyVec) -> PolyMat {
    PolyMat::from_fn(v.dim(), |i, j| v.comps[i].diff(j))
}

/// Symmetrized gradient `sym D v`.
pub fn sym_grad(v: &PolyVec) -> PolySymField {
    grad_vec(v).sym()
}

/// Row-wise divergence, `(Div T)_i = Σ_j ∂_j T_ij`.
pub fn div_mat(m: &PolyMat) -> PolyVec {
    let d = m.dim();
    PolyVec {
        comps: (0..d)
            .map(|i| {
                let mut r = PolyScalar::zero(d);
                for j in 0..d {
                    r = &r + &m.get(i, j).diff(j);
                }
                r
            })
            .collect(),
    }
}

/// Curl of a 3D vector field, `(curl v)_i = ε_ijk ∂_j v_k`.
pub fn curl(v: &PolyVec) -> PolyVec {
    assert_eq!(v.dim(), 3);
    PolyVec {
        comps: (0..3)
            .map(|i| {
                let mut r = PolyScalar::zero(3);
                for j in 0..3 {
                    for k in 0..3 {
                        let e = levi(i, j, k);
                        if e != 0.0 {
                            r = &r + &v.comps[k].diff(j).scale(e);
                        }
                    }
                }
                r
            })
            .collect(),
    }
}

/// Row-wise curl of a 3D matrix field, `(Curl T)_ij = ε_jkl ∂_k T_il`.
pub fn curl_mat(m: &PolyMat) -> PolyMat {
    assert_eq!(m.dim(), 3);
    PolyMat::from_fn(3, |i, j| {
        let mut r = PolyScalar::zero(3);
        for k in 0..3 {
            for l in 0..3 {
                let e = levi(j, k, l);
                if e != 0.0 {
                    r = &r + &m.get(i, l).diff(k).scale(e);
                }
            }
        }
        r
    })
}

/// Incompatibility `inc T`, `(inc T)_ij = ε_ikl ε_jmn ∂_k ∂_m T_ln`.
pub fn inc(m: &PolyMat) -> PolyMat {
    assert_eq!(m.dim(), 3);
    PolyMat::from_fn(3, |i, j| {
        let mut r = PolyScalar::zero(3);
        for k in 0..3 {
            for l in 0..3 {
                let e1 = levi(i, k, l);
                if e1 == 0.0 {
                    continue;
                }
                for mm in 0..3 {
                    for n in 0..3 {
                        let e2 = levi(j, mm, n);
                        if e2 != 0.0 {
                            r = &r + &m.get(l, n).diff(k).diff(mm).scale(e1 * e2);
                        }
                    }
                }
            }
        }
        r
    })
}

/// Planar perpendicular gradient `∇⊥s = R ∇s = (∂_2 s, −∂_1 s)`.
pub fn perp_grad(s: &PolyScalar) -> PolyVec {
    assert_eq!(s.dim(), 2);
    PolyVec {
        comps: vec![s.diff(1), -&s.diff(0)],
    }
}

/// Planar rotation `rot v = div(R v) = ∂_1 v_2 − ∂_2 v_1`.
pub fn rot(v: &PolyVec) -> PolyScalar {
    assert_eq!(v.dim(), 2);
    &v.comps[1].diff(0) - &v.comps[0].diff(1)
}

/// Row-wise planar rotation `Rot T = Div(T Rᵀ)`.
pub fn rot_mat(m: &PolyMat) -> PolyVec {
    assert_eq!(m.dim(), 2);
    PolyVec {
        comps: (0..2)
            .map(|i| &m.get(i, 1).diff(0) - &m.get(i, 0).diff(1))
            .collect(),
    }
}

/// Planar perpendicular gradient of a vector field, `D⊥v = (D v) Rᵀ`.
pub fn perp_grad_vec(v: &PolyVec) -> PolyMat {
    assert_eq!(v.dim(), 2);
    PolyMat::from_fn(2, |i, j| {
        if j == 0 {
            v.comps[i].diff(1)
        } else {
            -&v.comps[i].diff(0)
        }
    })
}

/// Airy map `airy s = D⊥ ∇⊥ s`.
pub fn airy(s: &PolyScalar) -> PolyMat {
    perp_grad_vec(&perp_grad(s))
}

/// Applies the rotation `R = [[0, 1], [−1, 0]]` to a planar vector field.
pub fn rotate(v: &PolyVec) -> PolyVec {
    assert_eq!(v.dim(), 2);
    PolyVec {
        comps: vec![v.comps[1].clone(), -&v.comps[0]],
    }
}

/// `Anti w` for a 3D polynomial vector field.
pub fn anti_field(w: &PolyVec) -> PolyMat {
    assert_eq!(w.dim(), 3);
    let z = PolyScalar::zero(3);
    let n = |p: &PolyScalar| -p;
    let c = &w.comps;
    let rows = [
        [z.clone(), n(&c[2]), c[1].clone()],
        [c[2].clone(), z.clone(), n(&c[0])],
        [n(&c[1]), c[0].clone(), z.clone()],
    ];
    PolyMat::from_fn(3, |i, j| rows[i][j].clone())
}

/// Axial vector of a skew polynomial matrix field.
pub fn axl_field(m: &PolyMat) -> PolyVec {
    assert_eq!(m.dim(), 3);
    PolyVec {
        comps: vec![
            (m.get(2, 1) - m.get(1, 2)).scale(0.5),
            (m.get(0, 2) - m.get(2, 0)).scale(0.5),
            (m.get(1, 0) - m.get(0, 1)).scale(0.5),
        ],
    }
}
