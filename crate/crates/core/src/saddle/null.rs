//! Cone directions of `P` that `G` cannot see.
//!
//! The discrete counterpart of `H = {x : a(x, ·) = 0}` restricted to `P_C`: zero rows of
//! `G` along cone directions, and the null space of `M^{-1/2} Gᵀ W^{1/2} E_C` where the
//! columns of `E_C` span the cone parts.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use super::{DiscreteSaddleProblem, TOL_RANK_REL};

/// Relative singular-value threshold for null directions.
pub const TOL_NULL_REL: f64 = 1e-9;

/// One cone direction: the owning block and an orthonormal local basis vector.
#[derive(Clone, Debug)]
pub(crate) struct ConeColumn {
    pub block: usize,
    pub local: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NullBlockReport {
    /// Cone blocks whose every cone direction is a zero row of `G`.
    pub unreachable_blocks: Vec<usize>,
    /// X-coordinates of `Free` blocks carrying zero rows of `G`.
    pub zero_row_coords: Vec<usize>,
    /// Orthonormal (in `X`) basis of `{x ∈ span P_C : Gᵀ W x = 0}`.
    pub null_directions: Vec<Vec<f64>>,
    /// Number of cone directions in total.
    pub cone_dim: usize,
}

impl NullBlockReport {
    pub fn is_empty(&self) -> bool {
        self.unreachable_blocks.is_empty() && self.null_directions.is_empty()
    }
}

pub(crate) fn cone_columns(p: &DiscreteSaddleProblem) -> Vec<ConeColumn> {
    p.blocks()
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| blk.cone_basis().into_iter().map(move |local| ConeColumn { block: b, local }))
        .collect()
}

/// Row of `G` along a cone column, `Σ_i e_i G_i`, optionally with `e_i` scaled by `√w_i`.
fn cone_row(p: &DiscreteSaddleProblem, col: &ConeColumn, weighted: bool) -> DVector<f64> {
    let blk = &p.blocks()[col.block];
    let mut row = DVector::zeros(p.n_y());
    for (k, i) in blk.range().enumerate() {
        let mut e = col.local[k];
        if weighted {
            e *= p.x_weights()[i].sqrt();
        }
        if e == 0.0 {
            continue;
        }
        let r = p.strain_map().row(i);
        for (j, v) in r.col_indices().iter().zip(r.values()) {
            row[*j] += e * v;
        }
    }
    row
}

/// `Bᵀ W B` with `B y` the cone components of `Gy`; the curvature of the `α`-penalty
/// that `J_α` puts on cone directions is `α Bᵀ W B`.
pub(crate) fn cone_penalty_gram(p: &DiscreteSaddleProblem) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(p.n_y(), p.n_y());
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for col in cone_columns(p) {
        acc.clear();
        let blk = &p.blocks()[col.block];
        for (k, i) in blk.range().enumerate() {
            let e = col.local[k] * p.x_weights()[i].sqrt();
            if e == 0.0 {
                continue;
            }
            let r = p.strain_map().row(i);
            for (j, v) in r.col_indices().iter().zip(r.values()) {
                *acc.entry(*j).or_default() += e * v;
            }
        }
        for (&a, &va) in &acc {
            for (&b, &vb) in &acc {
                coo.push(a, b, va * vb);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// `K = L_M⁻¹ Gᵀ W^{1/2} E_C`, `n_Y × (#cone columns)`; its singular values are those of
/// `M^{-1/2} Gᵀ W^{1/2} E_C`.
pub(crate) fn cone_operator(p: &DiscreteSaddleProblem, cols: &[ConeColumn]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(p.n_y(), cols.len());
    for (c, col) in cols.iter().enumerate() {
        b.set_column(c, &cone_row(p, col, true));
    }
    p.solve_gram_lower(b)
}

/// Reports cone blocks and directions unreachable by `G`.
pub fn detect_null_blocks(p: &DiscreteSaddleProblem) -> NullBlockReport {
    let cols = cone_columns(p);
    let mut report = NullBlockReport { cone_dim: cols.len(), ..Default::default() };
    if cols.is_empty() {
        return report;
    }
    let tol_rank = TOL_RANK_REL * p.g_inf_norm();

    let mut block_all_zero: Vec<Option<bool>> = vec![None; p.blocks().len()];
    for col in &cols {
        let zero = cone_row(p, col, false).amax() <= tol_rank;
        let entry = block_all_zero[col.block].get_or_insert(true);
        *entry &= zero;
        if zero && col.local.iter().filter(|e| **e != 0.0).count() == 1 {
            let k = col.local.iter().position(|e| *e != 0.0).unwrap();
            report.zero_row_coords.push(p.blocks()[col.block].start + k);
        }
    }
    report.unreachable_blocks =
        block_all_zero.iter().enumerate().filter_map(|(b, z)| (*z == Some(true)).then_some(b)).collect();

    let k = cone_operator(p, &cols);
    let n_c = cols.len();
    // pad to at least square so the SVD exposes the full right null space
    let rows = k.nrows().max(n_c);
    let mut padded = DMatrix::zeros(rows, n_c);
    padded.view_mut((0, 0), (k.nrows(), n_c)).copy_from(&k);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma_max = svd.singular_values.max();
    let thr = TOL_NULL_REL * sigma_max.max(f64::MIN_POSITIVE);
    let w = p.x_weights();
    for (s, sv) in svd.singular_values.iter().enumerate() {
        if *sv > thr && sigma_max > 0.0 {
            continue;
        }
        // x = W^{-1/2} E v, orthonormal in X because E has orthonormal columns
        let mut x = vec![0.0; p.n_x()];
        for (c, col) in cols.iter().enumerate() {
            let coef = v_t[(s, c)];
            let blk = &p.blocks()[col.block];
            for (kk, i) in blk.range().enumerate() {
                x[i] += coef * col.local[kk] / w[i].sqrt();
            }
        }
        report.null_directions.push(x);
    }
    report
}
