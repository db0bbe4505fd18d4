//! Registry of differential identities checked symbolically on random fields.
//!
//! Every identity is evaluated as `LHS − RHS` on polynomial coefficients. The
//! residual is reported relative to the largest coefficient among the input
//! field and both sides, so it is insensitive to the scale of the sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    airy, anti_field, axl_field, curl_mat, div, div_mat, grad, grad_vec, hess, inc, laplace,
    laplace_mat, perp_grad, rot, rot_mat, rotate, sym_grad, PolyError, PolyMat, PolyScalar,
    PolySymField, PolyVec,
};
use crate::tensor::voigt_pairs;

/// Relative tolerance every registered identity must meet.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Poisson ratios at which material-dependent identities are checked.
const NU_SAMPLES: [f64; 4] = [0.0, 0.125, 0.3, 0.45];

/// Residual of one identity evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// Largest absolute coefficient of `LHS − RHS`.
    pub absolute: f64,
    /// Largest absolute coefficient among the input and both sides.
    pub scale: f64,
}

impl Residual {
    /// `absolute / scale`, or 0 when everything vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.absolute / self.scale
        } else {
            self.absolute
        }
    }

    fn worst(self, other: Residual) -> Residual {
        if other.relative() > self.relative() {
            other
        } else {
            self
        }
    }
}

/// A named identity on symmetric polynomial fields of a fixed dimension.
#[derive(Clone, Copy)]
pub struct Identity {
    pub name: &'static str,
    pub dim: usize,
    pub check: fn(&PolySymField) -> Residual,
}

impl std::fmt::Debug for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Identity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Outcome of running one identity over a batch of random fields.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityOutcome {
    pub name: String,
    pub dim: usize,
    pub samples: usize,
    pub max_relative: f64,
    pub passed: bool,
}

fn scalars_of_mat(m: &PolyMat) -> Vec<PolyScalar> {
    m.entries().to_vec()
}

fn residual_of(lhs: &[PolyScalar], rhs: &[PolyScalar], input: &PolySymField) -> Residual {
    assert_eq!(lhs.len(), rhs.len());
    let mut absolute = 0.0_f64;
    let mut scale = input.max_abs_coeff();
    for (a, b) in lhs.iter().zip(rhs) {
        absolute = absolute.max((a - b).max_abs_coeff());
        scale = scale.max(a.max_abs_coeff()).max(b.max_abs_coeff());
    }
    Residual { absolute, scale }
}

fn mat_residual(lhs: &PolyMat, rhs: &PolyMat, input: &PolySymField) -> Residual {
    residual_of(&scalars_of_mat(lhs), &scalars_of_mat(rhs), input)
}

fn zero_residual(lhs: &[PolyScalar], input: &PolySymField) -> Residual {
    let zeros: Vec<PolyScalar> = lhs.iter().map(|p| PolyScalar::zero(p.dim())).collect();
    residual_of(lhs, &zeros, input)
}

/// `a S + b (tr S) I` applied to a symmetric polynomial field.
fn iso_map(s: &PolySymField, a: f64, b: f64) -> PolySymField {
    let d = s.dim();
    let tr = s.trace();
    PolySymField::new(
        voigt_pairs(d)
            .iter()
            .map(|&(i, j)| {
                let v = s.get(i, j).scale(a);
                if i == j {
                    &v + &tr.scale(b)
                } else {
                    v
                }
            })
            .collect(),
    )
}

/// Displacement-like vector field read off the diagonal of the input.
fn diagonal_vector(s: &PolySymField) -> PolyVec {
    PolyVec {
        comps: (0..s.dim()).map(|i| s.get(i, i).clone()).collect(),
    }
}

/// `D Div σ` symmetrized, as a full matrix.
fn sym_d_div(sigma: &PolyMat) -> PolyMat {
    sym_grad(&div_mat(sigma)).to_mat()
}

fn scalar_identity(s: &PolyScalar) -> PolyMat {
    PolyMat::scalar_identity(s)
}

// ----- three-dimensional identities ---------------------------------------

fn schaefer_kroner(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let tr = f.trace();
    let div_div = div(&div_mat(&s));
    let rhs = sym_d_div(&s)
        .scale(2.0)
        .lincomb(1.0, &laplace_mat(&s), -1.0)
        .lincomb(1.0, &hess(&tr), -1.0)
        .lincomb(1.0, &scalar_identity(&(&laplace(&tr) - &div_div)), 1.0);
    mat_residual(&inc(&s), &rhs, f)
}

fn inc_volumetric(f: &PolySymField) -> Residual {
    let tr = f.trace();
    let lhs = inc(&scalar_identity(&tr));
    let rhs = scalar_identity(&laplace(&tr)).lincomb(1.0, &hess(&tr), -1.0);
    mat_residual(&lhs, &rhs, f)
}

fn tr_inc(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let lhs = inc(&s).trace();
    let rhs = &laplace(&f.trace()) - &div(&div_mat(&s));
    residual_of(&[lhs], &[rhs], f)
}

fn tr_inc_volumetric(f: &PolySymField) -> Residual {
    let tr = f.trace();
    let lhs = inc(&scalar_identity(&tr)).trace();
    let rhs = laplace(&tr).scale(2.0);
    residual_of(&[lhs], &[rhs], f)
}

fn skw_curl(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let lhs = curl_mat(&s).skw();
    let v = div_mat(&s).lincomb(1.0, &grad(&f.trace()), -1.0);
    let rhs = anti_field(&v).scale(0.5);
    mat_residual(&lhs, &rhs, f)
}

fn curl_skw(f: &PolySymField) -> Residual {
    // A skew field assembled from the off-diagonal components of the input.
    let w = PolyVec {
        comps: vec![f.get(0, 1).clone(), f.get(0, 2).clone(), f.get(1, 2).clone()],
    };
    let a = anti_field(&w);
    let axial = axl_field(&a);
    let lhs = curl_mat(&a);
    let rhs = scalar_identity(&div(&axial)).lincomb(1.0, &grad_vec(&axial).transpose(), -1.0);
    mat_residual(&lhs, &rhs, f)
}

fn div_inc(f: &PolySymField) -> Residual {
    let lhs = div_mat(&inc(&f.to_mat()));
    zero_residual(&lhs.comps, f)
}

fn inc_symgrad(f: &PolySymField) -> Residual {
    let u = diagonal_vector(f);
    let lhs = inc(&sym_grad(&u).to_mat());
    zero_residual(&scalars_of_mat(&lhs), f)
}

fn rm_vanishing(f: &PolySymField) -> Residual {
    // f = a + b × x with a, b read from the constant coefficients of the input.
    let c: Vec<f64> = f.comps().iter().map(|p| p.constant_term()).collect();
    let (a, b) = ([c[0], c[1], c[2]], [c[3], c[4], c[5]]);
    let x: Vec<PolyScalar> = (0..3).map(|i| PolyScalar::var(3, i)).collect();
    let bx = [
        &x[2].scale(b[1]) - &x[1].scale(b[2]),
        &x[0].scale(b[2]) - &x[2].scale(b[0]),
        &x[1].scale(b[0]) - &x[0].scale(b[1]),
    ];
    let force = PolyVec {
        comps: (0..3)
            .map(|i| &PolyScalar::constant(3, a[i]) + &bx[i])
            .collect(),
    };
    let mut worst = Residual {
        absolute: 0.0,
        scale: 0.0,
    };
    for nu in NU_SAMPLES {
        let lhs = sym_grad(&force)
            .to_mat()
            .scale(2.0)
            .lincomb(1.0, &scalar_identity(&div(&force)), nu / (1.0 - nu));
        worst = worst.worst(zero_residual(&scalars_of_mat(&lhs), f));
    }
    worst
}

fn compliance_inc(f: &PolySymField) -> Residual {
    let e = 200.0;
    let s = f.to_mat();
    let mut worst = Residual {
        absolute: 0.0,
        scale: 0.0,
    };
    for nu in NU_SAMPLES {
        let a_sigma = iso_map(f, (1.0 + nu) / e, -nu / e);
        let lhs = inc(&a_sigma.to_mat()).scale(e / (1.0 + nu));
        let rhs = inc(&s).lincomb(1.0, &inc(&scalar_identity(&f.trace())), -nu / (1.0 + nu));
        worst = worst.worst(mat_residual(&lhs, &rhs, f));
    }
    worst
}

/// Elastic stress `C sym D u` for the displacement read from the input field.
fn elastic_stress_3d(f: &PolySymField, nu: f64) -> PolySymField {
    let e = 1.0;
    let eps = sym_grad(&diagonal_vector(f));
    let a = e / (1.0 + nu);
    iso_map(&eps, a, a * nu / (1.0 - 2.0 * nu))
}

fn first_invariant(f: &PolySymField) -> Residual {
    let mut worst = Residual {
        absolute: 0.0,
        scale: 0.0,
    };
    for nu in NU_SAMPLES {
        let sigma = elastic_stress_3d(f, nu);
        let s = sigma.to_mat();
        let lhs = &laplace(&sigma.trace()).scale(1.0 - nu) - &div(&div_mat(&s)).scale(1.0 + nu);
        worst = worst.worst(zero_residual(&[lhs], f));
    }
    worst
}

/// Checks the strong form of the 3D stress equations for an elastic field.
///
/// `omega = None` selects the non-symmetric field equation; `Some(w)` the
/// symmetrized one with stabilization weight `w` (`w = 0` is the plain form).
fn beltrami_3d(f: &PolySymField, omega: Option<f64>) -> Residual {
    let mut worst = Residual {
        absolute: 0.0,
        scale: 0.0,
    };
    for nu in NU_SAMPLES {
        let chi = 1.0 / (1.0 + nu);
        let sigma = elastic_stress_3d(f, nu);
        let s = sigma.to_mat();
        let tr = sigma.trace();
        let force = PolyVec {
            comps: div_mat(&s).comps.iter().map(|c| -c).collect(),
        };
        let sym_df = sym_grad(&force).to_mat();
        let div_f = div(&force);
        let (lhs, rhs) = match omega {
            None => (
                laplace_mat(&s).scale(-1.0).lincomb(1.0, &hess(&tr), -chi),
                sym_df
                    .scale(2.0)
                    .lincomb(1.0, &scalar_identity(&div_f), nu / (1.0 - nu)),
            ),
            Some(w) => {
                let div_div = div(&div_mat(&s));
                let lhs = laplace_mat(&s)
                    .scale(-1.0)
                    .lincomb(1.0, &hess(&tr).lincomb(1.0, &scalar_identity(&div_div), 1.0), -chi)
                    .lincomb(1.0, &sym_d_div(&s), -w);
                let rhs = sym_df.scale(2.0 + w).lincomb(
                    1.0,
                    &scalar_identity(&div_f),
                    (1.0 + nu * nu) / (1.0 - nu * nu),
                );
                (lhs, rhs)
            }
        };
        worst = worst.worst(mat_residual(&lhs, &rhs, f));
    }
    worst
}

fn strong_form_3d_i(f: &PolySymField) -> Residual {
    beltrami_3d(f, Some(0.0))
}

fn strong_form_3d_ii(f: &PolySymField) -> Residual {
    [0.5, 1.0, 2.5]
        .iter()
        .map(|&w| beltrami_3d(f, Some(w)))
        .fold(Residual { absolute: 0.0, scale: 0.0 }, Residual::worst)
}

fn strong_form_3d_nonsym(f: &PolySymField) -> Residual {
    beltrami_3d(f, None)
}

// ----- planar identities --------------------------------------------------

fn planar_laplacian(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let tr = f.trace();
    let div_div = div(&div_mat(&s));
    let rhs = sym_d_div(&s)
        .scale(2.0)
        .lincomb(1.0, &hess(&tr), -1.0)
        .lincomb(1.0, &scalar_identity(&(&laplace(&tr) - &div_div)), 1.0);
    mat_residual(&laplace_mat(&s), &rhs, f)
}

fn rot_equilibrium(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let lhs = rot_mat(&s).lincomb(1.0, &perp_grad(&f.trace()), 1.0);
    let rhs = rotate(&div_mat(&s));
    residual_of(&lhs.comps, &rhs.comps, f)
}

fn rotrot_symgrad(f: &PolySymField) -> Residual {
    let u = diagonal_vector(f);
    let lhs = rot(&rot_mat(&sym_grad(&u).to_mat()));
    zero_residual(&[lhs], f)
}

fn rotrot_trace(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let lhs = rot(&rot_mat(&s));
    let rhs = &laplace(&f.trace()) - &div(&div_mat(&s));
    residual_of(&[lhs], &[rhs], f)
}

fn div_airy(f: &PolySymField) -> Residual {
    let lhs = div_mat(&airy(f.get(0, 1)));
    zero_residual(&lhs.comps, f)
}

fn tr_airy(f: &PolySymField) -> Residual {
    let lambda = f.get(0, 1);
    let a = airy(lambda);
    let trace = residual_of(&[a.trace()], &[laplace(lambda)], f);
    let symmetry = zero_residual(&scalars_of_mat(&a.skw()), f);
    trace.worst(symmetry)
}

fn planar_inc_embedding(f: &PolySymField) -> Residual {
    let s = f.to_mat();
    let hat = f.embed_3d();
    let lhs = inc(&hat.to_mat());
    let c = &laplace(&f.trace()) - &div(&div_mat(&s));
    let lift = {
        let mut r = PolyScalar::zero(3);
        for (e, v) in c.terms() {
            r = &r + &PolyScalar::monomial(3, &[e[0], e[1], 0], v).expect("degree within bound");
        }
        r
    };
    let rhs = PolyMat::from_fn(3, |i, j| {
        if i == 2 && j == 2 {
            lift.clone()
        } else {
            PolyScalar::zero(3)
        }
    });
    mat_residual(&lhs, &rhs, f)
}

/// Planar elastic stress for the displacement read from the input field.
fn elastic_stress_2d(f: &PolySymField, nu: f64, plane_stress: bool) -> PolySymField {
    let e = 1.0;
    let eps = sym_grad(&diagonal_vector(f));
    if plane_stress {
        let c = e / (1.0 - nu * nu);
        iso_map(&eps, c * (1.0 - nu), c * nu)
    } else {
        let a = e / (1.0 + nu);
        iso_map(&eps, a, a * nu / (1.0 - 2.0 * nu))
    }
}

fn planar_strong(f: &PolySymField, form_two: bool) -> Residual {
    let mut worst = Residual {
        absolute: 0.0,
        scale: 0.0,
    };
    for plane_stress in [true, false] {
        for nu in NU_SAMPLES {
            let chi = if plane_stress { 1.0 / (1.0 + nu) } else { 1.0 - nu };
            let sigma = elastic_stress_2d(f, nu, plane_stress);
            let s = sigma.to_mat();
            let tr = sigma.trace();
            let force = PolyVec {
                comps: div_mat(&s).comps.iter().map(|c| -c).collect(),
            };
            let sym_df = sym_grad(&force).to_mat();
            let div_f = div(&force);
            if form_two {
                let div_div = div(&div_mat(&s));
                let lhs = laplace_mat(&s)
                    .scale(-1.0)
                    .lincomb(1.0, &hess(&tr), -1.0)
                    .lincomb(1.0, &scalar_identity(&div_div), -1.0);
                let rhs = sym_df
                    .scale(2.0)
                    .lincomb(1.0, &scalar_identity(&div_f), 1.0 / chi);
                worst = worst.worst(mat_residual(&lhs, &rhs, f));
            } else {
                for psi in [chi, 0.01, 3.0] {
                    let lhs = sym_d_div(&s)
                        .scale(-psi)
                        .lincomb(1.0, &scalar_identity(&laplace(&tr)), -chi);
                    let rhs = sym_df.scale(psi).lincomb(1.0, &scalar_identity(&div_f), 1.0);
                    worst = worst.worst(mat_residual(&lhs, &rhs, f));
                }
            }
        }
    }
    worst
}

fn strong_form_planar_i(f: &PolySymField) -> Residual {
    planar_strong(f, false)
}

fn strong_form_planar_ii(f: &PolySymField) -> Residual {
    planar_strong(f, true)
}

/// All registered identities.
pub fn registry() -> Vec<Identity> {
    vec![
        Identity { name: "schaefer_kroner", dim: 3, check: schaefer_kroner },
        Identity { name: "inc_volumetric", dim: 3, check: inc_volumetric },
        Identity { name: "tr_inc", dim: 3, check: tr_inc },
        Identity { name: "tr_inc_volumetric", dim: 3, check: tr_inc_volumetric },
        Identity { name: "skw_curl", dim: 3, check: skw_curl },
        Identity { name: "curl_skw", dim: 3, check: curl_skw },
        Identity { name: "div_inc", dim: 3, check: div_inc },
        Identity { name: "inc_symgrad", dim: 3, check: inc_symgrad },
        Identity { name: "rm_vanishing", dim: 3, check: rm_vanishing },
        Identity { name: "compliance_inc", dim: 3, check: compliance_inc },
        Identity { name: "first_invariant", dim: 3, check: first_invariant },
        Identity { name: "strong_form_3d_i", dim: 3, check: strong_form_3d_i },
        Identity { name: "strong_form_3d_ii", dim: 3, check: strong_form_3d_ii },
        Identity { name: "strong_form_3d_nonsym", dim: 3, check: strong_form_3d_nonsym },
        Identity { name: "planar_laplacian", dim: 2, check: planar_laplacian },
        Identity { name: "rot_equilibrium", dim: 2, check: rot_equilibrium },
        Identity { name: "rotrot_symgrad", dim: 2, check: rotrot_symgrad },
        Identity { name: "rotrot_trace", dim: 2, check: rotrot_trace },
        Identity { name: "div_airy", dim: 2, check: div_airy },
        Identity { name: "tr_airy", dim: 2, check: tr_airy },
        Identity { name: "planar_inc_embedding", dim: 2, check: planar_inc_embedding },
        Identity { name: "strong_form_planar_i", dim: 2, check: strong_form_planar_i },
        Identity { name: "strong_form_planar_ii", dim: 2, check: strong_form_planar_ii },
    ]
}

/// Evaluates one registered identity on a given field.
pub fn verify_identity(name: &str, field: &PolySymField) -> Result<Residual, PolyError> {
    let id = registry()
        .into_iter()
        .find(|i| i.name == name)
        .ok_or_else(|| PolyError::UnknownIdentity(name.to_string()))?;
    if id.dim != field.dim() {
        return Err(PolyError::DimensionMismatch {
            name: name.to_string(),
            expected: id.dim,
            got: field.dim(),
        });
    }
    Ok((id.check)(field))
}

/// Runs each identity on `samples` random fields of its own dimension, with
/// degrees cycling through 1–4.
pub fn run_identity_suite(identities: &[Identity], samples: usize, seed: u64) -> Vec<IdentityOutcome> {
    identities
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let mut max_relative = 0.0_f64;
            for s in 0..samples {
                let degree = 1 + (s % 4) as u32;
                let field = PolySymField::random(id.dim, degree, &mut rng);
                let r = (id.check)(&field).relative();
                max_relative = if r.is_nan() { f64::INFINITY } else { max_relative.max(r) };
            }
            IdentityOutcome {
                name: id.name.to_string(),
                dim: id.dim,
                samples,
                max_relative,
                passed: max_relative <= IDENTITY_TOLERANCE,
            }
        })
        .collect()
}
