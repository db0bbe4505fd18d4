//! Continuous tensor-product Lagrange spaces of order `p ∈ {1, 2, 3}` on
//! structured meshes, with Gauss–Legendre quadrature.
//!
//! Scalar nodes form the lattice of `p·nᵢ + 1` equispaced points per axis. A
//! field with `m` components has `m` degrees of freedom per node, numbered
//! `node · m + component` (components interleaved), which keeps the matrix
//! bandwidth small.

use thiserror::Error;

use crate::mesh::{BoundaryTag, StructuredMesh};

/// Errors of space construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeError {
    #[error("unsupported polynomial order {0}; supported orders are 1, 2, 3")]
    UnsupportedOrder(usize),
    #[error("unsupported component count {0}")]
    UnsupportedComponents(usize),
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
}

/// Gauss–Legendre rule with `q` points on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "at least one quadrature point required");
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Initial guess from the asymptotic root location, refined by Newton.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { z } else { p1 };
            let pqm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * pq - pqm1) / (z * z - 1.0);
            let dz = pq / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // Map from [-1, 1] to [0, 1].
        x[i] = 0.5 * (1.0 - z);
        x[q - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[q - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Tensor-product quadrature on the reference element `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `q` Gauss points per direction.
    pub fn tensor(dim: usize, q: usize) -> Self {
        let (x, w) = gauss_legendre(q);
        let total = q.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for i in 0..total {
            let mut r = i;
            let mut pt = Vec::with_capacity(dim);
            let mut wt = 1.0;
            for _ in 0..dim {
                pt.push(x[r % q]);
                wt *= w[r % q];
                r /= q;
            }
            points.push(pt);
            weights.push(wt);
        }
        Self {
            dim,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Values and derivatives of the `p + 1` nodal Lagrange polynomials on
/// equispaced nodes `{0, 1/p, …, 1}` at `t`.
pub fn shape_1d(p: usize, t: f64) -> Result<(Vec<f64>, Vec<f64>), FeError> {
    if !(1..=3).contains(&p) {
        return Err(FeError::UnsupportedOrder(p));
    }
    let nodes: Vec<f64> = (0..=p).map(|i| i as f64 / p as f64).collect();
    let mut vals = vec![0.0; p + 1];
    let mut ders = vec![0.0; p + 1];
    for a in 0..=p {
        let denom: f64 = (0..=p)
            .filter(|&b| b != a)
            .map(|b| nodes[a] - nodes[b])
            .product();
        let mut v = 1.0;
        for b in (0..=p).filter(|&b| b != a) {
            v *= t - nodes[b];
        }
        let mut dv = 0.0;
        for c in (0..=p).filter(|&c| c != a) {
            let mut prod = 1.0;
            for b in (0..=p).filter(|&b| b != a && b != c) {
                prod *= t - nodes[b];
            }
            dv += prod;
        }
        vals[a] = v / denom;
        ders[a] = dv / denom;
    }
    Ok((vals, ders))
}

/// Scalar shape functions of one element at a reference point: values and
/// reference-coordinate gradients, local nodes in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    pub values: Vec<f64>,
    /// `grads[a][k] = ∂N_a/∂ξ_k`.
    pub grads: Vec<[f64; 3]>,
}

/// Evaluates the `(p+1)^d` tensor-product shape functions at `xi`.
pub fn local_basis(p: usize, xi: &[f64]) -> Result<LocalBasis, FeError> {
    let d = xi.len();
    let one_d: Vec<(Vec<f64>, Vec<f64>)> = xi
        .iter()
        .map(|&t| shape_1d(p, t))
        .collect::<Result<_, _>>()?;
    let nloc = (p + 1).pow(d as u32);
    let mut values = Vec::with_capacity(nloc);
    let mut grads = Vec::with_capacity(nloc);
    for a in 0..nloc {
        let mut l = [0usize; 3];
        let mut r = a;
        for lk in l.iter_mut().take(d) {
            *lk = r % (p + 1);
            r /= p + 1;
        }
        let mut v = 1.0;
        let mut g = [1.0; 3];
        for k in 0..d {
            v *= one_d[k].0[l[k]];
            for (j, gj) in g.iter_mut().enumerate().take(d) {
                *gj *= if j == k { one_d[k].1[l[k]] } else { one_d[k].0[l[k]] };
            }
        }
        for gj in g.iter_mut().skip(d) {
            *gj = 0.0;
        }
        values.push(v);
        grads.push(g);
    }
    Ok(LocalBasis { values, grads })
}

/// A continuous Lagrange space with `m` components per node.
#[derive(Debug, Clone)]
pub struct FESpace {
    mesh: StructuredMesh,
    p: usize,
    m: usize,
    nodes_per_axis: Vec<usize>,
    dirichlet: Vec<bool>,
}

/// Builds the order-`p`, `m`-component space on `mesh`; Dirichlet dofs are all
/// components of every node on a Dirichlet-tagged face.
pub fn build_space(mesh: &StructuredMesh, p: usize, m: usize) -> Result<FESpace, FeError> {
    if !(1..=3).contains(&p) {
        return Err(FeError::UnsupportedOrder(p));
    }
    if m == 0 || m > 6 {
        return Err(FeError::UnsupportedComponents(m));
    }
    let nodes_per_axis: Vec<usize> = mesh.n().iter().map(|&n| p * n + 1).collect();
    let mut space = FESpace {
        mesh: mesh.clone(),
        p,
        m,
        nodes_per_axis,
        dirichlet: Vec::new(),
    };
    let mut dirichlet = vec![false; space.num_dofs()];
    for face in mesh.boundary_faces() {
        if face.tag != BoundaryTag::Dirichlet {
            continue;
        }
        for node in space.face_nodes(face.element, face.axis, face.upper) {
            for c in 0..m {
                dirichlet[node * m + c] = true;
            }
        }
    }
    space.dirichlet = dirichlet;
    Ok(space)
}

impl FESpace {
    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Polynomial order.
    pub fn order(&self) -> usize {
        self.p
    }

    /// Components per node.
    pub fn components(&self) -> usize {
        self.m
    }

    /// Scalar nodes per axis.
    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes_per_axis
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_axis.iter().product()
    }

    pub fn num_dofs(&self) -> usize {
        self.m * self.num_nodes()
    }

    /// Local scalar nodes per element, `(p+1)^d`.
    pub fn nodes_per_element(&self) -> usize {
        (self.p + 1).pow(self.dim() as u32)
    }

    /// Global node from its lattice index.
    pub fn node_from_index(&self, idx: &[usize]) -> usize {
        let mut r = 0;
        for k in (0..self.dim()).rev() {
            r = r * self.nodes_per_axis[k] + idx[k];
        }
        r
    }

    /// Lattice index of a global node.
    pub fn node_index(&self, node: usize) -> Vec<usize> {
        let mut r = node;
        self.nodes_per_axis
            .iter()
            .map(|&n| {
                let i = r % n;
                r /= n;
                i
            })
            .collect()
    }

    /// Physical coordinates of a node.
    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let idx = self.node_index(node);
        let spec = self.mesh.spec();
        (0..self.dim())
            .map(|k| {
                let last = self.nodes_per_axis[k] - 1;
                if idx[k] == last {
                    spec.hi[k]
                } else {
                    spec.lo[k] + idx[k] as f64 * self.mesh.h()[k] / self.p as f64
                }
            })
            .collect()
    }

    /// Global nodes of element `e` in local lexicographic order.
    pub fn element_nodes(&self, e: usize) -> Vec<usize> {
        let d = self.dim();
        let eidx = self.mesh.element_index(e);
        let nloc = self.nodes_per_element();
        let mut out = Vec::with_capacity(nloc);
        let mut idx = vec![0usize; d];
        for a in 0..nloc {
            let mut r = a;
            for k in 0..d {
                idx[k] = eidx[k] * self.p + r % (self.p + 1);
                r /= self.p + 1;
            }
            out.push(self.node_from_index(&idx));
        }
        out
    }

    /// Global dofs of element `e`; local dof `a · m + c` is component `c` of local node `a`.
    pub fn element_dofs(&self, e: usize) -> Vec<usize> {
        let m = self.m;
        self.element_nodes(e)
            .into_iter()
            .flat_map(|n| (0..m).map(move |c| n * m + c))
            .collect()
    }

    /// Local node numbers lying on a face of the reference element.
    pub fn local_face_nodes(&self, axis: usize, upper: bool) -> Vec<usize> {
        let d = self.dim();
        let target = if upper { self.p } else { 0 };
        (0..self.nodes_per_element())
            .filter(|&a| {
                let mut r = a;
                let mut l = 0;
                for k in 0..d {
                    if k == axis {
                        l = r % (self.p + 1);
                    }
                    r /= self.p + 1;
                }
                l == target
            })
            .collect()
    }

    /// Global nodes lying on a face of element `e`.
    pub fn face_nodes(&self, e: usize, axis: usize, upper: bool) -> Vec<usize> {
        let nodes = self.element_nodes(e);
        self.local_face_nodes(axis, upper)
            .into_iter()
            .map(|a| nodes[a])
            .collect()
    }

    /// Dirichlet flag per dof.
    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Sorted list of Dirichlet dofs.
    pub fn dirichlet_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&i| self.dirichlet[i]).collect()
    }

    /// Number of unconstrained dofs.
    pub fn num_free_dofs(&self) -> usize {
        self.dirichlet.iter().filter(|&&b| !b).count()
    }

    /// Nodal interpolation of a pointwise field callback returning `m` components.
    pub fn interpolate(&self, field: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let m = self.m;
        let mut coeffs = vec![0.0; self.num_dofs()];
        for node in 0..self.num_nodes() {
            let v = field(&self.node_coords(node));
            assert_eq!(v.len(), m, "field callback must return {m} components");
            coeffs[node * m..node * m + m].copy_from_slice(&v);
        }
        coeffs
    }

    /// Value (`m` components) and physical gradient (`m × d`) of a discrete
    /// field at reference point `xi` of element `e`.
    pub fn evaluate(&self, coeffs: &[f64], e: usize, xi: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), FeError> {
        if coeffs.len() != self.num_dofs() {
            return Err(FeError::LengthMismatch {
                expected: self.num_dofs(),
                got: coeffs.len(),
            });
        }
        let basis = local_basis(self.p, xi)?;
        Ok(self.evaluate_with(coeffs, &self.element_dofs(e), &basis))
    }

    /// Evaluation with a precomputed basis and element dof list.
    pub fn evaluate_with(&self, coeffs: &[f64], dofs: &[usize], basis: &LocalBasis) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (m, d) = (self.m, self.dim());
        let h = self.mesh.h();
        let mut val = vec![0.0; m];
        let mut grad = vec![vec![0.0; d]; m];
        for (a, (&n, g)) in basis.values.iter().zip(&basis.grads).enumerate() {
            for c in 0..m {
                let u = coeffs[dofs[a * m + c]];
                val[c] += u * n;
                for k in 0..d {
                    grad[c][k] += u * g[k] / h[k];
                }
            }
        }
        (val, grad)
    }
}
