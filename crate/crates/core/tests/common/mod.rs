//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stress_elast::fespace::{build_space, FESpace};
use stress_elast::forms::{
    apply_dirichlet, assemble_matrix, assemble_rhs, AssembledSystem, ForceData, Formulation, RhsMethod,
};
use stress_elast::mesh::{apply_boundary_plan, build_box_mesh, BoundaryPlan, BoxSpec};
use stress_elast::polycalc::{div, div_mat, sym_grad, PolyScalar, PolySymField, PolyVec};
use stress_elast::postproc::{l2_error, ERROR_QUAD_ORDER};
use stress_elast::solve::solve_reduced;
use stress_elast::tensor::Direction;

/// Coefficients of the five pairings, written out by hand per formulation.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePairings {
    pub dd: f64,
    pub div_grad: f64,
    pub grad_div: f64,
    pub div_div: f64,
    pub grad_grad: f64,
}

/// Voigt pairs, spelled out independently of the library tables.
fn pairs(d: usize) -> Vec<(usize, usize)> {
    if d == 3 {
        vec![(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    } else {
        vec![(0, 0), (1, 1), (0, 1)]
    }
}

fn unit_tensor(d: usize, c: usize) -> Vec<Vec<f64>> {
    let (i, j) = pairs(d)[c];
    let mut e = vec![vec![0.0; d]; d];
    e[i][j] = 1.0;
    e[j][i] = 1.0;
    e
}

/// Multilinear hat function of a box vertex and its gradient at `x`.
fn hat(lo: &[f64], hi: &[f64], vertex: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let d = lo.len();
    let mut f = vec![0.0; d];
    let mut df = vec![0.0; d];
    for k in 0..d {
        let len = hi[k] - lo[k];
        if (vertex[k] - lo[k]).abs() < 1e-12 {
            f[k] = (hi[k] - x[k]) / len;
            df[k] = -1.0 / len;
        } else {
            f[k] = (x[k] - lo[k]) / len;
            df[k] = 1.0 / len;
        }
    }
    let value: f64 = f.iter().product();
    let grad = (0..d)
        .map(|k| (0..d).map(|l| if l == k { df[l] } else { f[l] }).product())
        .collect();
    (value, grad)
}

/// Brute-force matrix of a stress form on a single `p = 1` element, built
/// from full tensor fields `Dτ`, `Div τ`, `∇tr τ` at a 3-point Gauss rule.
/// Rows and columns follow `node * m + component` with the library's node
/// numbering (only node coordinates are taken from `space`).
pub fn oracle_single_element(space: &FESpace, c: OraclePairings) -> Vec<Vec<f64>> {
    let d = space.dim();
    let m = pairs(d).len();
    let spec = space.mesh().spec();
    let (lo, hi) = (spec.lo.clone(), spec.hi.clone());
    let g = [0.5 - 0.5 * (0.6f64).sqrt(), 0.5, 0.5 + 0.5 * (0.6f64).sqrt()];
    let w = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let vol: f64 = (0..d).map(|k| hi[k] - lo[k]).product();
    let nodes: Vec<Vec<f64>> = (0..space.num_nodes()).map(|n| space.node_coords(n)).collect();
    let ndof = nodes.len() * m;
    let mut k = vec![vec![0.0; ndof]; ndof];
    let npts = 3usize.pow(d as u32);
    for q in 0..npts {
        let mut r = q;
        let mut x = vec![0.0; d];
        let mut wq = vol;
        for kk in 0..d {
            let i = r % 3;
            r /= 3;
            x[kk] = lo[kk] + g[i] * (hi[kk] - lo[kk]);
            wq *= w[i];
        }
        // Per dof: (D tensor [i][j][k], Div [i], grad tr [k]).
        let fields: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..ndof)
            .map(|dof| {
                let (node, comp) = (dof / m, dof % m);
                let (_, grad) = hat(&lo, &hi, &nodes[node], &x);
                let e = unit_tensor(d, comp);
                let tr: f64 = (0..d).map(|i| e[i][i]).sum();
                let mut dt = vec![0.0; d * d * d];
                let mut dv = vec![0.0; d];
                let mut gt = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        for l in 0..d {
                            dt[(i * d + j) * d + l] = e[i][j] * grad[l];
                        }
                        dv[i] += e[i][j] * grad[j];
                    }
                    gt[i] = tr * grad[i];
                }
                (dt, dv, gt)
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for (a, (dta, dva, gta)) in fields.iter().enumerate() {
            for (b, (dtb, dvb, gtb)) in fields.iter().enumerate() {
                let v = c.dd * dot(dta, dtb)
                    + c.div_grad * dot(dva, gtb)
                    + c.grad_div * dot(gta, dvb)
                    + c.div_div * dot(dva, dvb)
                    + c.grad_grad * dot(gta, gtb);
                k[a][b] += wq * v;
            }
        }
    }
    k
}

/// Largest entry-wise difference between the assembled matrix and the
/// oracle, relative to the oracle's largest entry.
pub fn oracle_defect(form: &Formulation, lo: Vec<f64>, hi: Vec<f64>, c: OraclePairings) -> f64 {
    let d = lo.len();
    let spec = BoxSpec::new(lo, hi, vec![1; d]).expect("valid box");
    let mesh = apply_boundary_plan(&build_box_mesh(&spec), &BoundaryPlan::AllNeumann).expect("plan");
    let space = build_space(&mesh, 1, form.components()).expect("space");
    let k = assemble_matrix(&space, form).expect("assembly").to_dense();
    let o = oracle_single_element(&space, c);
    let scale = o.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    let diff = k
        .iter()
        .flatten()
        .zip(o.iter().flatten())
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    diff / scale
}

/// A compatible polynomial stress field: `σ = C sym D u` for a random
/// displacement of total degree `p + 1`, so that `σ` lies in the degree-`p`
/// tensor-product space; returns `(σ, f = −Div σ)`.
pub fn polynomial_state(form: &Formulation, p: usize, seed: u64) -> (PolySymField, PolyVec) {
    let d = form.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = PolyVec {
        comps: (0..d)
            .map(|_| PolyScalar::random(d, p as u32 + 1, 3, &mut rng))
            .collect(),
    };
    let (a, b) = form
        .material()
        .coefficients(form.mode(), Direction::Stiffness)
        .expect("compressible stiffness");
    let eps = sym_grad(&u);
    let tr = eps.trace();
    let comps: Vec<PolyScalar> = pairs(d)
        .iter()
        .enumerate()
        .map(|(c, &(i, j))| {
            let s = eps.comps()[c].scale(a);
            if i == j {
                &s + &tr.scale(b)
            } else {
                s
            }
        })
        .collect();
    let sigma = PolySymField::new(comps);
    let div_sigma = div_mat(&sigma.to_mat());
    let f = PolyVec {
        comps: div_sigma.comps.iter().map(|c| c.scale(-1.0)).collect(),
    };
    (sigma, f)
}

/// Relative `L²` error of the all-Dirichlet Galerkin solution when the exact
/// stress lies in the discrete space.
pub fn reproduction_error(form: &Formulation, p: usize, n: usize, seed: u64) -> f64 {
    let d = form.dim();
    let (sigma, f) = polynomial_state(form, p, seed);
    let spec = BoxSpec::new(vec![-1.0; d], vec![1.0; d], vec![n; d]).expect("box");
    let mesh = apply_boundary_plan(&build_box_mesh(&spec), &BoundaryPlan::AllDirichlet).expect("plan");
    let space = build_space(&mesh, p, form.components()).expect("space");
    let k = assemble_matrix(&space, form).expect("assembly");
    let sym_f = sym_grad(&f);
    let div_f = div(&f);
    let data = ForceData {
        force: Some(Arc::new(move |x: &[f64]| f.eval(x))),
        sym_grad_force: Some(Arc::new(move |x: &[f64]| sym_f.eval(x))),
        div_force: Some(Arc::new(move |x: &[f64]| div_f.eval(x))),
    };
    let b = assemble_rhs(&space, form, &data, RhsMethod::Direct).expect("rhs");
    let system = AssembledSystem::new(&space, k, b).expect("system");
    let g = space.interpolate(&|x| sigma.eval(x));
    let reduced = apply_dirichlet(&system, &g).expect("reduction");
    let (coeffs, _) = solve_reduced(&reduced).expect("solve");
    l2_error(&space, &coeffs, &|x| sigma.eval(x), ERROR_QUAD_ORDER)
        .expect("error")
        .relative
        .expect("nonzero exact field")
}
