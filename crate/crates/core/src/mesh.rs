//! Structured axis-aligned box meshes in 2D and 3D with tagged boundary faces.
//!
//! Elements are quadrilaterals or hexahedra ordered lexicographically (first
//! axis fastest). Each element is an affine image of `[0, 1]^d` with a diagonal
//! Jacobian, so geometric quantities are exact.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors of mesh construction and boundary tagging.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("boundary plan '{plan}' left the face centred at {center:?} untagged")]
    UntaggedFace { plan: String, center: Vec<f64> },
    #[error("boundary plan '{plan}' is only defined in {dim}D")]
    PlanDimension { plan: String, dim: usize },
    #[error("unknown boundary plan '{0}'")]
    UnknownPlan(String),
}

/// Boundary condition type of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

/// Box geometry and subdivision.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

impl BoxSpec {
    /// Validated constructor.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self, MeshError> {
        let d = lo.len();
        if !(d == 2 || d == 3) || hi.len() != d || n.len() != d {
            return Err(MeshError::InvalidBox(format!(
                "lo, hi and n must all have length 2 or 3 (got {}, {}, {})",
                lo.len(),
                hi.len(),
                n.len()
            )));
        }
        for k in 0..d {
            if !(lo[k] < hi[k]) {
                return Err(MeshError::InvalidBox(format!(
                    "lo[{k}] = {} must be below hi[{k}] = {}",
                    lo[k], hi[k]
                )));
            }
            if n[k] == 0 {
                return Err(MeshError::InvalidBox(format!("n[{k}] must be positive")));
            }
        }
        Ok(Self { lo, hi, n })
    }

    /// The cube `[-1, 1]^3` with `n` subdivisions per axis.
    pub fn unit_cube(n: usize) -> Self {
        Self::new(vec![-1.0; 3], vec![1.0; 3], vec![n; 3]).expect("valid cube")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// Per-face predicate used by [`BoundaryPlan::Custom`]: receives the face
/// centre and outward normal, returns the tag or `None` when undecided.
pub type FacePredicate = Arc<dyn Fn(&[f64], &[f64]) -> Option<BoundaryTag> + Send + Sync>;

/// Assignment of Dirichlet/Neumann tags to boundary faces.
#[derive(Clone)]
pub enum BoundaryPlan {
    AllDirichlet,
    AllNeumann,
    /// 3D: Neumann on `x = lo₁`, `y = lo₂` and `z = hi₃`, Dirichlet elsewhere.
    ThreeSidedNeumann,
    /// 2D: Neumann on `x = hi₁` and `y = lo₂`, Dirichlet on `x = lo₁` and `y = hi₂`.
    HalfSplit2d,
    /// Explicit predicate on face centre and normal.
    Custom { name: String, predicate: FacePredicate },
}

impl fmt::Debug for BoundaryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PartialEq for BoundaryPlan {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl BoundaryPlan {
    /// Configuration name of the plan.
    pub fn name(&self) -> String {
        match self {
            BoundaryPlan::AllDirichlet => "all_dirichlet".into(),
            BoundaryPlan::AllNeumann => "all_neumann".into(),
            BoundaryPlan::ThreeSidedNeumann => "three_sided_neumann".into(),
            BoundaryPlan::HalfSplit2d => "half_split_2d".into(),
            BoundaryPlan::Custom { name, .. } => name.clone(),
        }
    }

    /// Parses one of the named plans.
    pub fn parse(s: &str) -> Result<Self, MeshError> {
        match s {
            "all_dirichlet" => Ok(BoundaryPlan::AllDirichlet),
            "all_neumann" => Ok(BoundaryPlan::AllNeumann),
            "three_sided_neumann" => Ok(BoundaryPlan::ThreeSidedNeumann),
            "half_split_2d" => Ok(BoundaryPlan::HalfSplit2d),
            _ => Err(MeshError::UnknownPlan(s.to_string())),
        }
    }
}

/// A boundary face of an element.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    /// Owning element.
    pub element: usize,
    /// Axis the face is normal to.
    pub axis: usize,
    /// `false` for the face at the lower end of the axis, `true` for the upper.
    pub upper: bool,
    /// Face centre.
    pub center: Vec<f64>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// Face measure (area in 3D, length in 2D).
    pub measure: f64,
    /// Boundary condition type.
    pub tag: BoundaryTag,
}

/// Structured mesh of a box.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    spec: BoxSpec,
    h: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    elements: Vec<Vec<usize>>,
    boundary: Vec<BoundaryFace>,
    plan: BoundaryPlan,
}

/// Builds the structured mesh of a box; all boundary faces start as Dirichlet.
pub fn build_box_mesh(spec: &BoxSpec) -> StructuredMesh {
    let d = spec.dim();
    let h: Vec<f64> = (0..d)
        .map(|k| (spec.hi[k] - spec.lo[k]) / spec.n[k] as f64)
        .collect();
    let nv: Vec<usize> = spec.n.iter().map(|&n| n + 1).collect();
    let coord = |k: usize, i: usize| {
        if i == spec.n[k] {
            spec.hi[k]
        } else {
            spec.lo[k] + i as f64 * h[k]
        }
    };
    let nvert: usize = nv.iter().product();
    let mut vertices = Vec::with_capacity(nvert);
    for v in 0..nvert {
        let idx = unravel(v, &nv);
        vertices.push((0..d).map(|k| coord(k, idx[k])).collect());
    }
    let nelem: usize = spec.n.iter().product();
    let mut elements = Vec::with_capacity(nelem);
    for e in 0..nelem {
        let idx = unravel(e, &spec.n);
        let corners = 1usize << d;
        let mut conn = Vec::with_capacity(corners);
        for c in 0..corners {
            let mut vi = vec![0usize; d];
            for k in 0..d {
                vi[k] = idx[k] + ((c >> k) & 1);
            }
            conn.push(ravel(&vi, &nv));
        }
        elements.push(conn);
    }
    let mut mesh = StructuredMesh {
        spec: spec.clone(),
        h,
        vertices,
        elements,
        boundary: Vec::new(),
        plan: BoundaryPlan::AllDirichlet,
    };
    mesh.boundary = mesh.collect_boundary_faces();
    mesh
}

/// Re-tags the boundary faces of `mesh` according to `plan`.
pub fn apply_boundary_plan(mesh: &StructuredMesh, plan: &BoundaryPlan) -> Result<StructuredMesh, MeshError> {
    let d = mesh.dim();
    match plan {
        BoundaryPlan::ThreeSidedNeumann if d != 3 => {
            return Err(MeshError::PlanDimension {
                plan: plan.name(),
                dim: 3,
            })
        }
        BoundaryPlan::HalfSplit2d if d != 2 => {
            return Err(MeshError::PlanDimension {
                plan: plan.name(),
                dim: 2,
            })
        }
        _ => {}
    }
    let diag: f64 = (0..d)
        .map(|k| (mesh.spec.hi[k] - mesh.spec.lo[k]).powi(2))
        .sum::<f64>()
        .sqrt();
    let tol = 1e-12 * diag;
    let on = |c: &[f64], k: usize, v: f64| (c[k] - v).abs() <= tol;
    let lo = &mesh.spec.lo;
    let hi = &mesh.spec.hi;
    let mut out = mesh.clone();
    for face in out.boundary.iter_mut() {
        let c = &face.center;
        let tag = match plan {
            BoundaryPlan::AllDirichlet => Some(BoundaryTag::Dirichlet),
            BoundaryPlan::AllNeumann => Some(BoundaryTag::Neumann),
            BoundaryPlan::ThreeSidedNeumann => {
                if on(c, 0, lo[0]) || on(c, 1, lo[1]) || on(c, 2, hi[2]) {
                    Some(BoundaryTag::Neumann)
                } else {
                    Some(BoundaryTag::Dirichlet)
                }
            }
            BoundaryPlan::HalfSplit2d => {
                if on(c, 0, hi[0]) || on(c, 1, lo[1]) {
                    Some(BoundaryTag::Neumann)
                } else if on(c, 0, lo[0]) || on(c, 1, hi[1]) {
                    Some(BoundaryTag::Dirichlet)
                } else {
                    None
                }
            }
            BoundaryPlan::Custom { predicate, .. } => predicate(c, &face.normal),
        };
        face.tag = tag.ok_or_else(|| MeshError::UntaggedFace {
            plan: plan.name(),
            center: c.clone(),
        })?;
    }
    out.plan = plan.clone();
    Ok(out)
}

fn unravel(mut i: usize, n: &[usize]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(n.len());
    for &nk in n {
        idx.push(i % nk);
        i /= nk;
    }
    idx
}

fn ravel(idx: &[usize], n: &[usize]) -> usize {
    let mut r = 0;
    for k in (0..n.len()).rev() {
        r = r * n[k] + idx[k];
    }
    r
}

impl StructuredMesh {
    fn collect_boundary_faces(&self) -> Vec<BoundaryFace> {
        let d = self.dim();
        let mut faces = Vec::new();
        for e in 0..self.num_elements() {
            let idx = self.element_index(e);
            for axis in 0..d {
                for upper in [false, true] {
                    let at_boundary = if upper {
                        idx[axis] + 1 == self.spec.n[axis]
                    } else {
                        idx[axis] == 0
                    };
                    if !at_boundary {
                        continue;
                    }
                    faces.push(self.face(e, axis, upper, BoundaryTag::Dirichlet));
                }
            }
        }
        faces
    }

    /// Geometric description of a face of element `e` (tag supplied by caller).
    pub fn face(&self, e: usize, axis: usize, upper: bool, tag: BoundaryTag) -> BoundaryFace {
        let d = self.dim();
        let origin = self.element_origin(e);
        let mut center: Vec<f64> = (0..d).map(|k| origin[k] + 0.5 * self.h[k]).collect();
        center[axis] = origin[axis] + if upper { self.h[axis] } else { 0.0 };
        let mut normal = vec![0.0; d];
        normal[axis] = if upper { 1.0 } else { -1.0 };
        let measure: f64 = (0..d).filter(|&k| k != axis).map(|k| self.h[k]).product();
        BoundaryFace {
            element: e,
            axis,
            upper,
            center,
            normal,
            measure,
            tag,
        }
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    /// Subdivisions per axis.
    pub fn n(&self) -> &[usize] {
        &self.spec.n
    }

    /// Element edge lengths per axis.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Corner vertex indices of element `e` (binary corner order, first axis fastest).
    pub fn element_vertices(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    /// Lattice index of element `e`.
    pub fn element_index(&self, e: usize) -> Vec<usize> {
        unravel(e, &self.spec.n)
    }

    /// Lower corner of element `e`.
    pub fn element_origin(&self, e: usize) -> Vec<f64> {
        let idx = self.element_index(e);
        (0..self.dim())
            .map(|k| self.spec.lo[k] + idx[k] as f64 * self.h[k])
            .collect()
    }

    /// Volume (area in 2D) of one element.
    pub fn element_volume(&self) -> f64 {
        self.h.iter().product()
    }

    /// Maps a reference point in `[0, 1]^d` of element `e` to physical coordinates.
    pub fn map_point(&self, e: usize, xi: &[f64]) -> Vec<f64> {
        let o = self.element_origin(e);
        (0..self.dim()).map(|k| o[k] + xi[k] * self.h[k]).collect()
    }

    /// Boundary faces with their tags.
    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Number of boundary faces with the given tag.
    pub fn count_tag(&self, tag: BoundaryTag) -> usize {
        self.boundary.iter().filter(|f| f.tag == tag).count()
    }

    /// The plan the current tags came from.
    pub fn plan(&self) -> &BoundaryPlan {
        &self.plan
    }
}
