//! Plane-strain limit analysis with the von Mises yield criterion `|τ^D| ≤ γ`.

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::mesh::BoundaryTag;
use super::model::{FemModel, ModelKind};
use super::{assemble_gram, assemble_load, strain_rows, AssembledModel, DofMap};
use crate::error::{Error, Result};
use crate::saddle::{AdmissibleBlock, BlockKind, DiscreteSaddleProblem};

/// Assembles `Y = P1` displacements vanishing on `Γ₀`, `‖v‖²_Y = ‖∇v‖²`, one deviatoric
/// ball per triangle.
pub fn assemble_von_mises(model: &FemModel) -> Result<AssembledModel> {
    if model.kind != ModelKind::VonMises {
        return Err(Error::Model("assemble_von_mises needs a von Mises model".into()));
    }
    model.validate()?;
    let mesh = &model.mesh;
    let mut fixed = vec![false; mesh.nodes.len()];
    for e in &mesh.edges {
        if model.pure_dirichlet || e.tag == BoundaryTag::Gamma0 {
            fixed[e.nodes[0]] = true;
            fixed[e.nodes[1]] = true;
        }
    }
    if !fixed.iter().any(|f| *f) {
        return Err(Error::Model("von Mises model needs a nonempty GAMMA_0 or pure_dirichlet".into()));
    }
    let dofs = DofMap::new(mesh.nodes.len(), |n, _| fixed[n]);
    if dofs.n_free == 0 {
        return Err(Error::NoFreeUnknowns);
    }

    let n_t = mesh.triangles.len();
    let mut g = CooMatrix::new(3 * n_t, dofs.n_free);
    let mut w = DVector::zeros(3 * n_t);
    let mut blocks = Vec::with_capacity(n_t);
    for t in 0..n_t {
        for (r, row) in strain_rows(mesh, &dofs, t).iter().enumerate() {
            for &(d, v) in row {
                g.push(3 * t + r, d, v);
            }
            w[3 * t + r] = mesh.area(t);
        }
        blocks.push(AdmissibleBlock::new(3 * t, 3, BlockKind::DeviatoricBall { radius: model.gamma, dim: 2 }));
    }
    let load = assemble_load(mesh, &dofs, model.body_force, &model.tractions);
    let problem = DiscreteSaddleProblem::new(CsrMatrix::from(&g), load, assemble_gram(mesh, &dofs, false), w, blocks)?;
    Ok(AssembledModel { problem, dofs, n_stress: 3 * n_t, interface_edges: Vec::new() })
}

/// Pointwise regularized dissipation for `d = 2`, `ε` in Mandel coordinates.
///
/// `½α|ε|²` if `α|ε^D| ≤ γ`, otherwise `α(tr ε)²/(2d) + γ|ε^D| − γ²/(2α)`.
pub fn von_mises_j_alpha(gamma: f64, alpha: f64, eps: [f64; 3]) -> f64 {
    let d = 2.0;
    let tr = eps[0] + eps[1];
    let dev = ((eps[0] - tr / d).powi(2) + (eps[1] - tr / d).powi(2) + eps[2].powi(2)).sqrt();
    if alpha * dev <= gamma {
        0.5 * alpha * (eps[0].powi(2) + eps[1].powi(2) + eps[2].powi(2))
    } else {
        alpha * tr * tr / (2.0 * d) + gamma * dev - gamma * gamma / (2.0 * alpha)
    }
}
