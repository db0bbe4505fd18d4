//! Small dense algebra on `d × d` tensors (`d ∈ {2, 3}`).
//!
//! Symmetric tensors are stored packed in Voigt order `(11, 22, 33, 12, 13, 23)`
//! for `d = 3` and `(11, 22, 12)` for `d = 2`. The packed storage holds the raw
//! tensor components (no engineering-shear factors); every inner product is the
//! full tensor contraction, so off-diagonal components carry weight two.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// A vector with `D` components.
pub type Vector<const D: usize> = [f64; D];

/// A `D × D` matrix in row-major semantic layout (`m[i][j]` is row `i`, column `j`).
pub type Matrix<const D: usize> = [[f64; D]; D];

/// Errors raised by tensor operations and constitutive maps.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    /// `axl` was applied to a matrix that is not skew-symmetric.
    #[error("axl requires a skew-symmetric matrix; relative asymmetry |A + A^T|/|A| = {asymmetry:e}")]
    NotSkew { asymmetry: f64 },
    /// Stiffness requested at nu = 0.5 in a mode where the factor 1/(1 - 2 nu) diverges.
    #[error("stiffness is singular for nu = 0.5 in {mode} mode: the factor 1/(1 - 2 nu) diverges")]
    IncompressibleStiffness { mode: ElasticMode },
    /// The constitutive mode does not match the tensor dimension.
    #[error("{mode} mode requires dimension {expected}, got {got}")]
    ModeDimension {
        mode: ElasticMode,
        expected: usize,
        got: usize,
    },
    /// Material constants outside the admissible range.
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
}

/// Number of independent components of a symmetric `d × d` tensor.
pub const fn sym_len(d: usize) -> usize {
    d * (d + 1) / 2
}

const VOIGT3: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
const VOIGT2: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Index pairs `(i, j)` of the packed components, in storage order.
pub fn voigt_pairs(d: usize) -> &'static [(usize, usize)] {
    match d {
        2 => &VOIGT2,
        3 => &VOIGT3,
        _ => panic!("unsupported tensor dimension {d}"),
    }
}

/// Packed index of the component `(i, j)` (order of `i`, `j` irrelevant).
pub fn voigt_index(d: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    voigt_pairs(d)
        .iter()
        .position(|&p| p == (a, b))
        .expect("index within dimension")
}

/// The `D × D` identity matrix.
pub fn identity<const D: usize>() -> Matrix<D> {
    let mut m = [[0.0; D]; D];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Transpose of a matrix.
pub fn transpose<const D: usize>(m: &Matrix<D>) -> Matrix<D> {
    let mut t = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            t[j][i] = m[i][j];
        }
    }
    t
}

/// Trace of a matrix.
pub fn trace<const D: usize>(m: &Matrix<D>) -> f64 {
    (0..D).map(|i| m[i][i]).sum()
}

/// Full contraction `⟨A, B⟩ = Σ A_ij B_ij`.
pub fn contract<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

/// Frobenius norm.
pub fn frobenius<const D: usize>(m: &Matrix<D>) -> f64 {
    contract(m, m).sqrt()
}

/// Entrywise linear combination `alpha A + beta B`.
pub fn lincomb<const D: usize>(alpha: f64, a: &Matrix<D>, beta: f64, b: &Matrix<D>) -> Matrix<D> {
    let mut r = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            r[i][j] = alpha * a[i][j] + beta * b[i][j];
        }
    }
    r
}

/// Matrix-vector product `M v`.
pub fn mat_vec<const D: usize>(m: &Matrix<D>, v: &Vector<D>) -> Vector<D> {
    let mut r = [0.0; D];
    for i in 0..D {
        for j in 0..D {
            r[i] += m[i][j] * v[j];
        }
    }
    r
}

/// Dyadic product `a ⊗ b`.
pub fn outer<const D: usize>(a: &Vector<D>, b: &Vector<D>) -> Matrix<D> {
    let mut r = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            r[i][j] = a[i] * b[j];
        }
    }
    r
}

/// Largest absolute entry.
pub fn max_abs<const D: usize>(m: &Matrix<D>) -> f64 {
    m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// A symmetric `D × D` tensor stored as its `D(D+1)/2` independent components.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMat<const D: usize> {
    data: [f64; 6],
}

impl<const D: usize> fmt::Debug for SymMat<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SymMat").field(&self.packed()).finish()
    }
}

impl<const D: usize> Default for SymMat<D> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const D: usize> SymMat<D> {
    /// Number of packed components.
    pub const LEN: usize = sym_len(D);

    /// The zero tensor.
    pub fn zero() -> Self {
        assert!(D == 2 || D == 3, "unsupported tensor dimension {D}");
        Self { data: [0.0; 6] }
    }

    /// The identity tensor.
    pub fn identity() -> Self {
        let mut s = Self::zero();
        for i in 0..D {
            s.data[i] = 1.0;
        }
        s
    }

    /// Builds from packed components; panics if the length is not `D(D+1)/2`.
    pub fn from_packed(packed: &[f64]) -> Self {
        assert_eq!(packed.len(), Self::LEN, "packed length mismatch");
        let mut s = Self::zero();
        s.data[..Self::LEN].copy_from_slice(packed);
        s
    }

    /// Packed components in Voigt order.
    pub fn packed(&self) -> &[f64] {
        &self.data[..Self::LEN]
    }

    /// Mutable packed components.
    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data[..Self::LEN]
    }

    /// Packs the symmetric part of `m`. For a symmetric input this is exact.
    pub fn from_matrix(m: &Matrix<D>) -> Self {
        let mut s = Self::zero();
        for (k, &(i, j)) in voigt_pairs(D).iter().enumerate() {
            s.data[k] = if i == j { m[i][i] } else { 0.5 * (m[i][j] + m[j][i]) };
        }
        s
    }

    /// Unpacks to a full (exactly symmetric) matrix.
    pub fn to_matrix(&self) -> Matrix<D> {
        let mut m = [[0.0; D]; D];
        for (k, &(i, j)) in voigt_pairs(D).iter().enumerate() {
            m[i][j] = self.data[k];
            m[j][i] = self.data[k];
        }
        m
    }

    /// Component `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[voigt_index(D, i, j)]
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        self.data[..D].iter().sum()
    }

    /// Full contraction `⟨S, T⟩` (off-diagonal components counted twice).
    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for k in 0..Self::LEN {
            let w = if k < D { 1.0 } else { 2.0 };
            s += w * self.data[k] * other.data[k];
        }
        s
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Deviatoric part `S − (tr S / D) I`.
    pub fn dev(&self) -> Self {
        let m = self.trace() / D as f64;
        let mut s = *self;
        for i in 0..D {
            s.data[i] -= m;
        }
        s
    }
}

impl<const D: usize> Add for SymMat<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..6 {
            self.data[k] += rhs.data[k];
        }
        self
    }
}

impl<const D: usize> Sub for SymMat<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..6 {
            self.data[k] -= rhs.data[k];
        }
        self
    }
}

impl<const D: usize> Neg for SymMat<D> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const D: usize> Mul<f64> for SymMat<D> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for v in self.data.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

/// Algebraic split of a matrix into symmetric, skew, trace and deviatoric parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition<const D: usize> {
    pub sym: SymMat<D>,
    pub skw: Matrix<D>,
    pub tr: f64,
    pub dev: Matrix<D>,
}

/// Computes `sym M`, `skw M`, `tr M` and `dev M`.
pub fn sym_skw_tr_dev<const D: usize>(m: &Matrix<D>) -> Decomposition<D> {
    let mt = transpose(m);
    let sym_full = lincomb(0.5, m, 0.5, &mt);
    // skw is formed as M − sym M so that sym + skw reproduces M exactly.
    let skw = lincomb(1.0, m, -1.0, &sym_full);
    let tr = trace(m);
    let mut dev = *m;
    for (i, row) in dev.iter_mut().enumerate() {
        row[i] -= tr / D as f64;
    }
    Decomposition {
        sym: SymMat::from_matrix(&sym_full),
        skw,
        tr,
        dev,
    }
}

/// The skew tensor `Anti a` with `(Anti a) v = a × v`.
pub fn anti(a: &Vector<3>) -> Matrix<3> {
    [[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]]
}

/// Axial vector of a skew-symmetric matrix, the inverse of [`anti`].
pub fn axl(m: &Matrix<3>) -> Result<Vector<3>, TensorError> {
    let scale = max_abs(m);
    let asym = max_abs(&lincomb(1.0, m, 1.0, &transpose(m)));
    if scale > 0.0 && asym > 1e-12 * scale {
        return Err(TensorError::NotSkew {
            asymmetry: asym / scale,
        });
    }
    Ok([
        0.5 * (m[2][1] - m[1][2]),
        0.5 * (m[0][2] - m[2][0]),
        0.5 * (m[1][0] - m[0][1]),
    ])
}

/// Cross product `a × b`.
pub fn cross(a: &Vector<3>, b: &Vector<3>) -> Vector<3> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Scalar stress measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressInvariants {
    /// `sqrt(3/2) |dev S|`.
    pub von_mises: f64,
    /// `tr S / d`.
    pub mean: f64,
}

/// Von Mises and mean stress of a symmetric tensor.
pub fn stress_invariants<const D: usize>(s: &SymMat<D>) -> StressInvariants {
    StressInvariants {
        von_mises: (1.5_f64).sqrt() * s.dev().norm(),
        mean: s.trace() / D as f64,
    }
}

/// Constitutive setting of an isotropic material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElasticMode {
    Solid3d,
    PlaneStress,
    PlaneStrain,
}

impl ElasticMode {
    /// Spatial dimension the mode operates in.
    pub fn dim(self) -> usize {
        match self {
            ElasticMode::Solid3d => 3,
            ElasticMode::PlaneStress | ElasticMode::PlaneStrain => 2,
        }
    }

    /// Configuration name of the mode.
    pub fn name(self) -> &'static str {
        match self {
            ElasticMode::Solid3d => "solid3d",
            ElasticMode::PlaneStress => "plane_stress",
            ElasticMode::PlaneStrain => "plane_strain",
        }
    }

    /// Parses a configuration name.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "solid3d" => Some(ElasticMode::Solid3d),
            "plane_stress" => Some(ElasticMode::PlaneStress),
            "plane_strain" => Some(ElasticMode::PlaneStrain),
            _ => None,
        }
    }
}

impl fmt::Display for ElasticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Direction of the constitutive map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Strain to stress (`C`).
    Stiffness,
    /// Stress to strain (`A = C⁻¹`).
    Compliance,
}

/// Isotropic linear elastic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Young's modulus.
    pub e: f64,
    /// Poisson ratio.
    pub nu: f64,
}

impl Material {
    /// Validated constructor: `E > 0`, `0 ≤ nu ≤ 0.5`.
    pub fn new(e: f64, nu: f64) -> Result<Self, TensorError> {
        if !(e.is_finite() && e > 0.0) {
            return Err(TensorError::InvalidMaterial(format!(
                "Young's modulus must be positive, got {e}"
            )));
        }
        if !(0.0..=0.5).contains(&nu) {
            return Err(TensorError::InvalidMaterial(format!(
                "Poisson ratio must lie in [0, 0.5], got {nu}"
            )));
        }
        Ok(Self { e, nu })
    }

    /// The coupling constant `chi`: `1/(1+nu)` in 3D and plane stress, `1 − nu` in plane strain.
    pub fn chi(&self, mode: ElasticMode) -> f64 {
        match mode {
            ElasticMode::Solid3d | ElasticMode::PlaneStress => 1.0 / (1.0 + self.nu),
            ElasticMode::PlaneStrain => 1.0 - self.nu,
        }
    }

    /// Lamé-type coefficients `(a, b)` such that the map is `a S + b (tr S) I`.
    pub fn coefficients(&self, mode: ElasticMode, dir: Direction) -> Result<(f64, f64), TensorError> {
        let (e, nu) = (self.e, self.nu);
        match (mode, dir) {
            (ElasticMode::Solid3d | ElasticMode::PlaneStrain, Direction::Stiffness) => {
                if 1.0 - 2.0 * nu <= 0.0 {
                    return Err(TensorError::IncompressibleStiffness { mode });
                }
                let a = e / (1.0 + nu);
                Ok((a, a * nu / (1.0 - 2.0 * nu)))
            }
            (ElasticMode::Solid3d | ElasticMode::PlaneStress, Direction::Compliance) => {
                Ok(((1.0 + nu) / e, -nu / e))
            }
            (ElasticMode::PlaneStress, Direction::Stiffness) => {
                let c = e / (1.0 - nu * nu);
                Ok((c * (1.0 - nu), c * nu))
            }
            (ElasticMode::PlaneStrain, Direction::Compliance) => {
                let c = (1.0 + nu) / e;
                Ok((c, -c * nu))
            }
        }
    }
}

/// Applies the stiffness `C` or the compliance `A` of `mat` to `s`.
pub fn constitutive<const D: usize>(
    mat: &Material,
    s: &SymMat<D>,
    mode: ElasticMode,
    dir: Direction,
) -> Result<SymMat<D>, TensorError> {
    if mode.dim() != D {
        return Err(TensorError::ModeDimension {
            mode,
            expected: mode.dim(),
            got: D,
        });
    }
    let (a, b) = mat.coefficients(mode, dir)?;
    Ok(*s * a + SymMat::identity() * (b * s.trace()))
}
