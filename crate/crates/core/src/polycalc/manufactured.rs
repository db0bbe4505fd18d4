//! Manufactured benchmark solutions.
//!
//! A benchmark is defined by its displacement field. Stress, body force and
//! their derivatives follow exactly from the displacement derivatives up to
//! third order: `σ = C sym D u`, `f = −Div σ`. Polynomial displacements are
//! differentiated symbolically; the transcendental planar fields are sums of
//! ridge functions `a · g(b · x)` whose derivatives are closed-form.

use std::fmt;

use super::{PolyError, PolyScalar};
use crate::tensor::{sym_len, voigt_pairs, Direction, ElasticMode, Material};

/// Named benchmark fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkName {
    /// `u = ½[(x⁵+y⁵) e₁ + (y⁵+z⁵) e₂ + (z⁵+x⁵) e₃]` on the cube.
    CubeQuintic,
    /// `u = 0.1 sinh(x) e₂`.
    PlanarShear,
    /// `u = 0.1 [sin(x) e₁ + sin(y) e₂]`.
    PlanarBiaxial,
    /// `u = 0.1 sin(π(x+y)) (e₁ + e₂)`.
    PlanarPeriodic,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 4] = [
        BenchmarkName::CubeQuintic,
        BenchmarkName::PlanarShear,
        BenchmarkName::PlanarBiaxial,
        BenchmarkName::PlanarPeriodic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkName::CubeQuintic => "cube_quintic",
            BenchmarkName::PlanarShear => "planar_shear",
            BenchmarkName::PlanarBiaxial => "planar_biaxial",
            BenchmarkName::PlanarPeriodic => "planar_periodic",
        }
    }

    pub fn parse(s: &str) -> Result<Self, PolyError> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| PolyError::UnknownBenchmark(s.to_string()))
    }

    pub fn dim(self) -> usize {
        match self {
            BenchmarkName::CubeQuintic => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Value and derivatives up to third order of a scalar field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
    pub t: [[[f64; 3]; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RidgeFn {
    Sin,
    Sinh,
}

impl RidgeFn {
    /// k-th derivative of the profile at `s`.
    fn derivative(self, k: usize, s: f64) -> f64 {
        match self {
            RidgeFn::Sin => match k % 4 {
                0 => s.sin(),
                1 => s.cos(),
                2 => -s.sin(),
                _ => -s.cos(),
            },
            RidgeFn::Sinh => {
                if k % 2 == 0 {
                    s.sinh()
                } else {
                    s.cosh()
                }
            }
        }
    }
}

/// `amp · g(b · x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ridge {
    amp: f64,
    g: RidgeFn,
    b: [f64; 3],
}

#[derive(Debug, Clone)]
enum ScalarField {
    Poly {
        p: PolyScalar,
        d1: Vec<PolyScalar>,
        d2: Vec<Vec<PolyScalar>>,
        d3: Vec<Vec<Vec<PolyScalar>>>,
    },
    Ridges(Vec<Ridge>),
}

impl ScalarField {
    fn poly(p: PolyScalar) -> Self {
        let d = p.dim();
        let d1: Vec<PolyScalar> = (0..d).map(|i| p.diff(i)).collect();
        let d2: Vec<Vec<PolyScalar>> = d1
            .iter()
            .map(|q| (0..d).map(|j| q.diff(j)).collect())
            .collect();
        let d3 = d2
            .iter()
            .map(|row| {
                row.iter()
                    .map(|q| (0..d).map(|k| q.diff(k)).collect())
                    .collect()
            })
            .collect();
        ScalarField::Poly { p, d1, d2, d3 }
    }

    fn jet(&self, d: usize, x: &[f64]) -> Jet {
        let mut j = Jet::default();
        match self {
            ScalarField::Poly { p, d1, d2, d3 } => {
                j.v = p.eval(x);
                for a in 0..d {
                    j.g[a] = d1[a].eval(x);
                    for b in 0..d {
                        j.h[a][b] = d2[a][b].eval(x);
                        for c in 0..d {
                            j.t[a][b][c] = d3[a][b][c].eval(x);
                        }
                    }
                }
            }
            ScalarField::Ridges(terms) => {
                for r in terms {
                    let s: f64 = (0..d).map(|k| r.b[k] * x[k]).sum();
                    let g0 = r.amp * r.g.derivative(0, s);
                    let g1 = r.amp * r.g.derivative(1, s);
                    let g2 = r.amp * r.g.derivative(2, s);
                    let g3 = r.amp * r.g.derivative(3, s);
                    j.v += g0;
                    for a in 0..d {
                        j.g[a] += g1 * r.b[a];
                        for b in 0..d {
                            j.h[a][b] += g2 * r.b[a] * r.b[b];
                            for c in 0..d {
                                j.t[a][b][c] += g3 * r.b[a] * r.b[b] * r.b[c];
                            }
                        }
                    }
                }
            }
        }
        j
    }
}

/// Exact data of a manufactured solution at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPoint {
    /// Packed stress.
    pub sigma: Vec<f64>,
    /// `∂_k σ_c` for packed component `c`: `sigma_grad[c][k]`.
    pub sigma_grad: Vec<Vec<f64>>,
    /// Body force `f = −Div σ`.
    pub force: Vec<f64>,
    /// `(D f)_ij = ∂_j f_i`.
    pub force_grad: Vec<Vec<f64>>,
}

impl ExactPoint {
    /// Packed `sym D f`.
    pub fn sym_grad_force(&self) -> Vec<f64> {
        let d = self.force.len();
        voigt_pairs(d)
            .iter()
            .map(|&(i, j)| 0.5 * (self.force_grad[i][j] + self.force_grad[j][i]))
            .collect()
    }

    /// `div f`.
    pub fn div_force(&self) -> f64 {
        (0..self.force.len()).map(|i| self.force_grad[i][i]).sum()
    }
}

/// A manufactured solution with exact evaluation callbacks.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: BenchmarkName,
    pub material: Material,
    pub mode: ElasticMode,
    comps: Vec<ScalarField>,
    lame: (f64, f64),
}

/// Builds the named benchmark for a material and constitutive mode.
pub fn manufactured_case(
    name: BenchmarkName,
    material: Material,
    mode: ElasticMode,
) -> Result<ManufacturedCase, PolyError> {
    if mode.dim() != name.dim() {
        return Err(PolyError::IncompatibleMode {
            name: name.name().to_string(),
            mode: mode.name().to_string(),
        });
    }
    let lame = material.coefficients(mode, Direction::Stiffness)?;
    let comps = match name {
        BenchmarkName::CubeQuintic => {
            let m = |e: [u8; 3]| PolyScalar::monomial(3, &e, 0.5).expect("degree within bound");
            let x5 = m([5, 0, 0]);
            let y5 = m([0, 5, 0]);
            let z5 = m([0, 0, 5]);
            vec![
                ScalarField::poly(&x5 + &y5),
                ScalarField::poly(&y5 + &z5),
                ScalarField::poly(&z5 + &x5),
            ]
        }
        BenchmarkName::PlanarShear => vec![
            ScalarField::Ridges(vec![]),
            ScalarField::Ridges(vec![Ridge {
                amp: 0.1,
                g: RidgeFn::Sinh,
                b: [1.0, 0.0, 0.0],
            }]),
        ],
        BenchmarkName::PlanarBiaxial => vec![
            ScalarField::Ridges(vec![Ridge {
                amp: 0.1,
                g: RidgeFn::Sin,
                b: [1.0, 0.0, 0.0],
            }]),
            ScalarField::Ridges(vec![Ridge {
                amp: 0.1,
                g: RidgeFn::Sin,
                b: [0.0, 1.0, 0.0],
            }]),
        ],
        BenchmarkName::PlanarPeriodic => {
            let r = Ridge {
                amp: 0.1,
                g: RidgeFn::Sin,
                b: [std::f64::consts::PI, std::f64::consts::PI, 0.0],
            };
            vec![ScalarField::Ridges(vec![r]), ScalarField::Ridges(vec![r])]
        }
    };
    Ok(ManufacturedCase {
        name,
        material,
        mode,
        comps,
        lame,
    })
}

impl ManufacturedCase {
    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    fn jets(&self, x: &[f64]) -> Vec<Jet> {
        let d = self.dim();
        self.comps.iter().map(|c| c.jet(d, x)).collect()
    }

    /// Displacement `u(x)`.
    pub fn displacement(&self, x: &[f64]) -> Vec<f64> {
        self.jets(x).iter().map(|j| j.v).collect()
    }

    /// Displacement gradient `(D u)_ij = ∂_j u_i`.
    pub fn displacement_grad(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.dim();
        self.jets(x).iter().map(|j| j.g[..d].to_vec()).collect()
    }

    /// Applies `C` (as `a ε + b tr ε I`) to a packed strain.
    fn stiffness(&self, eps: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let (a, b) = self.lame;
        let tr: f64 = eps[..d].iter().sum();
        eps.iter()
            .enumerate()
            .map(|(k, &e)| a * e + if k < d { b * tr } else { 0.0 })
            .collect()
    }

    /// Stress `σ = C sym D u`, packed.
    pub fn stress(&self, x: &[f64]) -> Vec<f64> {
        self.exact(x).sigma
    }

    /// Body force `f = −Div σ`.
    pub fn force(&self, x: &[f64]) -> Vec<f64> {
        self.exact(x).force
    }

    /// All exact quantities at `x`.
    pub fn exact(&self, x: &[f64]) -> ExactPoint {
        let d = self.dim();
        let m = sym_len(d);
        let jets = self.jets(x);
        let pairs = voigt_pairs(d);
        let eps: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| 0.5 * (jets[i].g[j] + jets[j].g[i]))
            .collect();
        let sigma = self.stiffness(&eps);
        // ∂_k σ for every packed component.
        let mut sigma_grad = vec![vec![0.0; d]; m];
        for k in 0..d {
            let deps: Vec<f64> = pairs
                .iter()
                .map(|&(i, j)| 0.5 * (jets[i].h[j][k] + jets[j].h[i][k]))
                .collect();
            let ds = self.stiffness(&deps);
            for c in 0..m {
                sigma_grad[c][k] = ds[c];
            }
        }
        // Second derivatives ∂_k ∂_l σ, packed.
        let mut sigma_hess = vec![vec![vec![0.0; d]; d]; m];
        for k in 0..d {
            for l in 0..d {
                let deps: Vec<f64> = pairs
                    .iter()
                    .map(|&(i, j)| 0.5 * (jets[i].t[j][k][l] + jets[j].t[i][k][l]))
                    .collect();
                let ds = self.stiffness(&deps);
                for c in 0..m {
                    sigma_hess[c][k][l] = ds[c];
                }
            }
        }
        let idx = |i: usize, j: usize| crate::tensor::voigt_index(d, i, j);
        let force: Vec<f64> = (0..d)
            .map(|i| -(0..d).map(|j| sigma_grad[idx(i, j)][j]).sum::<f64>())
            .collect();
        let force_grad: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|k| -(0..d).map(|j| sigma_hess[idx(i, j)][j][k]).sum::<f64>())
                    .collect()
            })
            .collect();
        ExactPoint {
            sigma,
            sigma_grad,
            force,
            force_grad,
        }
    }

    /// Traction `σ n` on a boundary with outward normal `n`.
    pub fn traction(&self, x: &[f64], n: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let s = self.stress(x);
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| s[crate::tensor::voigt_index(d, i, j)] * n[j])
                    .sum()
            })
            .collect()
    }
}
