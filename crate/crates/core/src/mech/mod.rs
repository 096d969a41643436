//! Finite element front-ends on P1 triangles.
//!
//! Displacements are continuous P1 fields, stresses are constant per triangle (one-point
//! quadrature), so the stress blocks of `P` are exact. Tensors use Mandel coordinates
//! `(τ₁₁, τ₂₂, √2 τ₁₂)` and every stress coordinate carries the triangle area as weight.

pub mod delamination;
pub mod mesh;
pub mod model;
pub mod von_mises;

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

pub use delamination::{assemble_delamination, delamination_closed_form, dual_delamination_check, DualCheck};
pub use mesh::{generate_rect_mesh, generate_rect_mesh_tagged, BoundaryEdge, BoundaryTag, Mesh2D, RectTags};
pub use model::{FemModel, MeshSource, ModelFile, ModelKind};
pub use von_mises::{assemble_von_mises, von_mises_j_alpha};

use crate::saddle::DiscreteSaddleProblem;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Numbering of the free displacement components.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// `index[node][component]`, `None` for eliminated components.
    pub index: Vec<[Option<usize>; 2]>,
    pub n_free: usize,
}

impl DofMap {
    pub fn new(n_nodes: usize, fixed: impl Fn(usize, usize) -> bool) -> Self {
        let mut index = vec![[None, None]; n_nodes];
        let mut n = 0;
        for (node, slot) in index.iter_mut().enumerate() {
            for (c, s) in slot.iter_mut().enumerate() {
                if !fixed(node, c) {
                    *s = Some(n);
                    n += 1;
                }
            }
        }
        DofMap { index, n_free: n }
    }

    /// Nodal interpolation of `v`; eliminated components are dropped.
    pub fn interpolate(&self, mesh: &Mesh2D, v: impl Fn([f64; 2]) -> [f64; 2]) -> DVector<f64> {
        let mut y = DVector::zeros(self.n_free);
        for (node, p) in mesh.nodes.iter().enumerate() {
            let val = v(*p);
            for c in 0..2 {
                if let Some(d) = self.index[node][c] {
                    y[d] = val[c];
                }
            }
        }
        y
    }

    /// Full nodal field from free coefficients, zeros on eliminated components.
    pub fn expand(&self, y: &DVector<f64>) -> Vec<[f64; 2]> {
        self.index.iter().map(|slot| slot.map(|d| d.map_or(0.0, |d| y[d]))).collect()
    }
}

/// A problem assembled from a model with the data needed to interpret its vectors.
#[derive(Clone, Debug)]
pub struct AssembledModel {
    pub problem: DiscreteSaddleProblem,
    pub dofs: DofMap,
    /// Number of leading X-coordinates holding per-triangle stresses (3 per triangle).
    pub n_stress: usize,
    /// Boundary edges carrying an interface variable, in X order after the stresses.
    pub interface_edges: Vec<BoundaryEdge>,
}

/// Rows of the Mandel strain `(ε₁₁, ε₂₂, √2 ε₁₂)` on triangle `t` as `(dof, coefficient)` lists.
pub(crate) fn strain_rows(mesh: &Mesh2D, dofs: &DofMap, t: usize) -> [Vec<(usize, f64)>; 3] {
    let grads = mesh.basis_gradients(t);
    let mut rows: [Vec<(usize, f64)>; 3] = Default::default();
    for (k, &node) in mesh.triangles[t].iter().enumerate() {
        let [bx, by] = grads[k];
        if let Some(d) = dofs.index[node][0] {
            rows[0].push((d, bx));
            rows[2].push((d, by / SQRT_2));
        }
        if let Some(d) = dofs.index[node][1] {
            rows[1].push((d, by));
            rows[2].push((d, bx / SQRT_2));
        }
    }
    rows
}

/// `∫ ∇u : ∇v` and, with `with_mass`, `+ ∫ u·v` on the free components.
pub(crate) fn assemble_gram(mesh: &Mesh2D, dofs: &DofMap, with_mass: bool) -> CsrMatrix<f64> {
    let n = dofs.n_free;
    let mut coo = CooMatrix::new(n, n);
    for t in 0..mesh.triangles.len() {
        let area = mesh.area(t);
        let grads = mesh.basis_gradients(t);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let mut k = area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                if with_mass {
                    k += area / 12.0 * if a == b { 2.0 } else { 1.0 };
                }
                for c in 0..2 {
                    if let (Some(i), Some(j)) = (dofs.index[tri[a]][c], dofs.index[tri[b]][c]) {
                        coo.push(i, j, k);
                    }
                }
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// `∫ F·v + Σ_tags ∫ f·v` with constant data.
pub(crate) fn assemble_load(
    mesh: &Mesh2D,
    dofs: &DofMap,
    body_force: [f64; 2],
    tractions: &[(BoundaryTag, [f64; 2])],
) -> DVector<f64> {
    let mut l = DVector::zeros(dofs.n_free);
    for t in 0..mesh.triangles.len() {
        let share = mesh.area(t) / 3.0;
        for &node in &mesh.triangles[t] {
            for c in 0..2 {
                if let Some(d) = dofs.index[node][c] {
                    l[d] += share * body_force[c];
                }
            }
        }
    }
    for e in &mesh.edges {
        for (tag, f) in tractions {
            if *tag != e.tag {
                continue;
            }
            let share = mesh.edge_length(e) / 2.0;
            for &node in &e.nodes {
                for c in 0..2 {
                    if let Some(d) = dofs.index[node][c] {
                        l[d] += share * f[c];
                    }
                }
            }
        }
    }
    l
}

/// Interpolates `v` and evaluates the Mandel strain on every triangle.
pub fn triangle_strains(mesh: &Mesh2D, nodal: &[[f64; 2]]) -> Vec<[f64; 3]> {
    (0..mesh.triangles.len())
        .map(|t| {
            let grads = mesh.basis_gradients(t);
            let mut grad_v = [[0.0; 2]; 2];
            for (k, &node) in mesh.triangles[t].iter().enumerate() {
                for c in 0..2 {
                    for j in 0..2 {
                        grad_v[c][j] += nodal[node][c] * grads[k][j];
                    }
                }
            }
            [grad_v[0][0], grad_v[1][1], (grad_v[0][1] + grad_v[1][0]) / SQRT_2]
        })
        .collect()
}
