//! Limit analysis of a symmetrized delamination problem.
//!
//! `X` holds free stresses per triangle and an interface traction `Ξ ∈ [−γ, γ]` per
//! `Γ_b` edge; `a((σ, Ξ), v) = ∫ σ:ε(v) + ∫_{Γ_b} Ξ v₂`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use super::mesh::BoundaryTag;
use super::model::{FemModel, ModelKind};
use super::{assemble_gram, assemble_load, strain_rows, AssembledModel, DofMap};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::saddle::{AdmissibleBlock, BlockKind, DiscreteSaddleProblem};

/// Assembles the delamination problem: `v₁ = 0` on `Γ_ℓ`, `‖v‖²_Y` the full `H¹` norm.
///
/// `‖∇v‖` alone is not a norm here since vertical translations are admissible.
pub fn assemble_delamination(model: &FemModel) -> Result<AssembledModel> {
    if model.kind != ModelKind::Delamination {
        return Err(Error::Model("assemble_delamination needs a delamination model".into()));
    }
    model.validate()?;
    let mesh = &model.mesh;
    for tag in [BoundaryTag::GammaL, BoundaryTag::GammaF, BoundaryTag::GammaT, BoundaryTag::GammaB] {
        if !mesh.has_tag(tag) {
            return Err(Error::Model(format!("delamination model needs boundary tag {tag}")));
        }
    }
    let interface: Vec<_> = mesh.edges.iter().copied().filter(|e| e.tag == BoundaryTag::GammaB).collect();
    for e in &interface {
        let [a, b] = e.nodes.map(|n| mesh.nodes[n]);
        if (a[1] - b[1]).abs() > 1e-12 * (a[0] - b[0]).abs().max(1.0) {
            return Err(Error::Model("GAMMA_B edges must lie on a horizontal line".into()));
        }
    }

    let mut fixed_h = vec![false; mesh.nodes.len()];
    for e in mesh.edges.iter().filter(|e| e.tag == BoundaryTag::GammaL) {
        fixed_h[e.nodes[0]] = true;
        fixed_h[e.nodes[1]] = true;
    }
    let dofs = DofMap::new(mesh.nodes.len(), |n, c| c == 0 && fixed_h[n]);

    let n_t = mesh.triangles.len();
    let n_x = 3 * n_t + interface.len();
    let mut g = CooMatrix::new(n_x, dofs.n_free);
    let mut w = DVector::zeros(n_x);
    let mut blocks = Vec::with_capacity(n_t + interface.len());
    for t in 0..n_t {
        for (r, row) in strain_rows(mesh, &dofs, t).iter().enumerate() {
            for &(d, v) in row {
                g.push(3 * t + r, d, v);
            }
            w[3 * t + r] = mesh.area(t);
        }
        blocks.push(AdmissibleBlock::new(3 * t, 3, BlockKind::Free));
    }
    for (k, e) in interface.iter().enumerate() {
        let row = 3 * n_t + k;
        for &node in &e.nodes {
            let d = dofs.index[node][1].expect("vertical components are never eliminated");
            g.push(row, d, 0.5);
        }
        w[row] = mesh.edge_length(e);
        blocks.push(AdmissibleBlock::new(row, 1, BlockKind::Interval { lo: -model.gamma, hi: model.gamma }));
    }
    let load = assemble_load(mesh, &dofs, model.body_force, &model.tractions);
    let problem = DiscreteSaddleProblem::new(CsrMatrix::from(&g), load, assemble_gram(mesh, &dofs, true), w, blocks)?;
    Ok(AssembledModel { problem, dofs, n_stress: 3 * n_t, interface_edges: interface })
}

/// `γ |Γ_b| / |∫F₂ + ∫f₂|`, or `+∞` when the net vertical load vanishes.
pub fn delamination_closed_form(gamma: f64, gamma_b_length: f64, total_vertical_load: f64) -> Result<ExtReal> {
    if !(gamma > 0.0 && gamma_b_length > 0.0) {
        return Err(Error::Model(format!("need γ > 0 and |Γ_b| > 0, got {gamma} and {gamma_b_length}")));
    }
    if total_vertical_load == 0.0 {
        return Ok(ExtReal::PosInfinity);
    }
    Ok(ExtReal::Finite(gamma * gamma_b_length / total_vertical_load.abs()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualCheck {
    /// `min_σ ‖Gᵀ W (σ, Ξ*) − λ L‖_{Y*}`; `None` when skipped.
    pub residual: Option<f64>,
    pub lambda: ExtReal,
    pub skipped: bool,
}

/// Builds `Ξ* = γ·sign(v₂*)` on the interface and solves for the best stresses in the
/// least-squares sense; the residual vanishes iff `(σ*, Ξ*)` balances `λ L`.
pub fn dual_delamination_check(p: &DiscreteSaddleProblem, lambda: ExtReal, y_star: &DVector<f64>) -> Result<DualCheck> {
    let lam = match lambda {
        ExtReal::PosInfinity => return Ok(DualCheck { residual: None, lambda, skipped: true }),
        ExtReal::Finite(l) => l,
    };
    if y_star.len() != p.n_y() {
        return Err(Error::DimensionMismatch { what: "y*", expected: p.n_y(), got: y_star.len() });
    }
    let gy = p.apply_g(y_star);
    let mut xi = DVector::zeros(p.n_x());
    let mut stress_cols = Vec::new();
    for b in p.blocks() {
        match b.kind {
            BlockKind::Interval { lo, hi } => {
                for i in b.range() {
                    xi[i] = if gy[i] > 0.0 {
                        hi
                    } else if gy[i] < 0.0 {
                        lo
                    } else {
                        0.0
                    };
                }
            }
            BlockKind::Free => stress_cols.extend(b.range()),
            _ => return Err(Error::Model("dual check expects free and interval blocks only".into())),
        }
    }
    let rhs = p.load() * lam - p.apply_gt_w(&xi);

    // columns Gᵀ W^{1/2} e_i over the stress coordinates, whitened by the Cholesky factor
    let mut b = DMatrix::zeros(p.n_y(), stress_cols.len() + 1);
    for (c, &i) in stress_cols.iter().enumerate() {
        let sw = p.x_weights()[i].sqrt();
        let row = p.strain_map().row(i);
        for (j, v) in row.col_indices().iter().zip(row.values()) {
            b[(*j, c)] += sw * v;
        }
    }
    b.set_column(stress_cols.len(), &rhs);
    let whitened = p.solve_gram_lower(b);
    let k = whitened.columns(0, stress_cols.len()).into_owned();
    let r = whitened.column(stress_cols.len()).into_owned();
    let svd = k.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut proj = DVector::zeros(r.len());
    for (s, sv) in svd.singular_values.iter().enumerate() {
        if *sv > 1e-10 * smax {
            let col = u.column(s);
            proj += col * col.dot(&r);
        }
    }
    Ok(DualCheck { residual: Some((r - proj).norm()), lambda, skipped: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(delamination_closed_form(1.0, 1.0, 0.5).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(delamination_closed_form(2.0, 3.0, 1.0).unwrap(), ExtReal::Finite(6.0));
        assert_eq!(delamination_closed_form(1.0, 1.0, 0.0).unwrap(), ExtReal::PosInfinity);
        assert!(delamination_closed_form(0.0, 1.0, 1.0).is_err());
    }
}
