//! Discrete inf-sup problems and the dual-side machinery.
//!
//! A [`DiscreteSaddleProblem`] realizes `a(x, y) = ⟨x, G y⟩_X = xᵀ W G y`, the load `L`,
//! the norm `‖y‖²_Y = yᵀ M y` and a block-structured admissible set `P`.

mod block;
mod dual;
pub mod file;
pub(crate) mod null;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::ops::serial::spsolve_csc_lower_triangular;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

pub use block::{mandel_len, AdmissibleBlock, BlockKind, SplitRole};
pub use dual::{
    bisect_zeta, eval_phi_lambda, eval_support_j, minimize_phi, minimize_phi_with, BisectOptions, PhiMinimum,
    PhiOptions, ZetaEstimate,
};
pub use null::{detect_null_blocks, NullBlockReport};

use crate::error::{Error, Result};

/// Relative tolerance used to decide membership in `dom J`.
pub const TOL_DOM_REL: f64 = 1e-10;
/// Relative tolerance for zero rows of `G` (scaled by `‖G‖_∞`).
pub const TOL_RANK_REL: f64 = 1e-12;

/// A discretized instance of the abstract inf-sup problem.
///
/// The data is immutable after construction; all solvers take `&self`.
pub struct DiscreteSaddleProblem {
    strain_map: CsrMatrix<f64>,
    strain_map_t: CsrMatrix<f64>,
    load: DVector<f64>,
    y_gram: CsrMatrix<f64>,
    gram_factor: CscCholesky<f64>,
    x_weights: DVector<f64>,
    blocks: Vec<AdmissibleBlock>,
    load_dual_norm: f64,
    norm_a: OnceLock<f64>,
}

impl std::fmt::Debug for DiscreteSaddleProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSaddleProblem")
            .field("n_x", &self.n_x())
            .field("n_y", &self.n_y())
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

impl Clone for DiscreteSaddleProblem {
    fn clone(&self) -> Self {
        DiscreteSaddleProblem::new(
            self.strain_map.clone(),
            self.load.clone(),
            self.y_gram.clone(),
            self.x_weights.clone(),
            self.blocks.clone(),
        )
        .expect("cloning a validated problem")
    }
}

impl DiscreteSaddleProblem {
    /// Builds and validates a problem.
    ///
    /// `strain_map` is `n_X × n_Y`, `y_gram` is `n_Y × n_Y`, `x_weights` has length `n_X`
    /// and the blocks must partition `0..n_X`.
    pub fn new(
        strain_map: CsrMatrix<f64>,
        load: DVector<f64>,
        y_gram: CsrMatrix<f64>,
        x_weights: DVector<f64>,
        mut blocks: Vec<AdmissibleBlock>,
    ) -> Result<Self> {
        let n_y = load.len();
        let n_x = x_weights.len();
        if n_y == 0 {
            return Err(Error::NoFreeUnknowns);
        }
        if strain_map.nrows() != n_x {
            return Err(Error::DimensionMismatch { what: "G rows", expected: n_x, got: strain_map.nrows() });
        }
        if strain_map.ncols() != n_y {
            return Err(Error::DimensionMismatch { what: "G columns", expected: n_y, got: strain_map.ncols() });
        }
        if y_gram.nrows() != n_y || y_gram.ncols() != n_y {
            return Err(Error::DimensionMismatch { what: "M", expected: n_y, got: y_gram.nrows() });
        }
        if let Some(i) = x_weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidProblem(format!("X weight {i} must be positive")));
        }
        if load.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroLoad);
        }
        if !load.iter().all(|v| v.is_finite()) || !strain_map.values().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite entries in G or L".into()));
        }

        check_partition(&mut blocks, n_x)?;
        for (b, blk) in blocks.iter().enumerate() {
            blk.validate().map_err(|m| Error::InvalidProblem(format!("block {b}: {m}")))?;
            if blk.needs_uniform_weights() {
                let w = &x_weights.as_slice()[blk.range()];
                let w0 = w[0];
                if w.iter().any(|wi| (wi - w0).abs() > 1e-12 * w0) {
                    return Err(Error::InvalidProblem(format!(
                        "block {b}: ball blocks need equal X weights on all coordinates"
                    )));
                }
            }
        }

        check_symmetric(&y_gram)?;
        let gram_csc = CscMatrix::from(&y_gram);
        let gram_factor = CscCholesky::factor(&gram_csc).map_err(|_| Error::GramNotPositiveDefinite)?;
        if gram_factor.l().diagonal_as_csc().values().iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::GramNotPositiveDefinite);
        }

        let strain_map_t = strain_map.transpose();
        let mut problem = DiscreteSaddleProblem {
            strain_map,
            strain_map_t,
            load,
            y_gram,
            gram_factor,
            x_weights,
            blocks,
            load_dual_norm: 0.0,
            norm_a: OnceLock::new(),
        };
        problem.load_dual_norm = problem.dual_norm(&problem.load);
        Ok(problem)
    }

    /// Convenience constructor from dense data (algebraic instances and tests).
    pub fn from_dense(
        g: &DMatrix<f64>,
        load: DVector<f64>,
        m: &DMatrix<f64>,
        w: DVector<f64>,
        blocks: Vec<AdmissibleBlock>,
    ) -> Result<Self> {
        Self::new(dense_to_csr(g), load, dense_to_csr(m), w, blocks)
    }

    pub fn n_x(&self) -> usize {
        self.x_weights.len()
    }

    pub fn n_y(&self) -> usize {
        self.load.len()
    }

    pub fn strain_map(&self) -> &CsrMatrix<f64> {
        &self.strain_map
    }

    pub fn load(&self) -> &DVector<f64> {
        &self.load
    }

    pub fn y_gram(&self) -> &CsrMatrix<f64> {
        &self.y_gram
    }

    pub fn x_weights(&self) -> &DVector<f64> {
        &self.x_weights
    }

    pub fn blocks(&self) -> &[AdmissibleBlock] {
        &self.blocks
    }

    /// `‖L‖_{Y*} = (Lᵀ M⁻¹ L)^{1/2}`.
    pub fn load_dual_norm(&self) -> f64 {
        self.load_dual_norm
    }

    /// `L(y)`.
    pub fn load_value(&self, y: &DVector<f64>) -> f64 {
        self.load.dot(y)
    }

    /// `G y`.
    pub fn apply_g(&self, y: &DVector<f64>) -> DVector<f64> {
        spmv(&self.strain_map, y)
    }

    /// `Gᵀ (W x)`, the Riesz-free representation of `a(x, ·)` in `Y*`.
    pub fn apply_gt_w(&self, x: &DVector<f64>) -> DVector<f64> {
        let wx = x.component_mul(&self.x_weights);
        spmv(&self.strain_map_t, &wx)
    }

    /// `M⁻¹ r`.
    pub fn solve_gram(&self, r: &DVector<f64>) -> DVector<f64> {
        let sol = self.gram_factor.solve(r);
        DVector::from_column_slice(sol.as_slice())
    }

    /// Cholesky factor of `M + α Bᵀ W B` (`B`: cone components of `G`), or `None` when `P`
    /// has no cone part.
    pub(crate) fn penalized_gram_factor(&self, alpha: f64) -> Option<CscCholesky<f64>> {
        if !self.has_cone_part() {
            return None;
        }
        let pen = null::cone_penalty_gram(self);
        let h = &self.y_gram + &(pen * alpha);
        CscCholesky::factor(&CscMatrix::from(&h)).ok()
    }

    /// `L_M⁻¹ B` where `M = L_M L_Mᵀ`; singular values of the result equal those of `M^{-1/2} B`.
    pub fn solve_gram_lower(&self, b: DMatrix<f64>) -> DMatrix<f64> {
        let mut b = b;
        spsolve_csc_lower_triangular(Op::NoOp(self.gram_factor.l()), &mut b)
            .expect("Cholesky factor has a nonzero diagonal");
        b
    }

    /// `(rᵀ M⁻¹ r)^{1/2}` for `r ∈ Y*`.
    pub fn dual_norm(&self, r: &DVector<f64>) -> f64 {
        r.dot(&self.solve_gram(r)).max(0.0).sqrt()
    }

    /// `(yᵀ M y)^{1/2}`.
    pub fn y_norm(&self, y: &DVector<f64>) -> f64 {
        y.dot(&spmv(&self.y_gram, y)).max(0.0).sqrt()
    }

    /// `xᵀ W z`.
    pub fn x_inner(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        x.iter().zip(z.iter()).zip(self.x_weights.iter()).map(|((a, b), w)| a * w * b).sum()
    }

    pub fn x_norm(&self, x: &DVector<f64>) -> f64 {
        self.x_inner(x, x).max(0.0).sqrt()
    }

    /// `a(x, y) = xᵀ W G y`.
    pub fn pairing(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.x_inner(x, &self.apply_g(y))
    }

    /// Block-wise Euclidean projection onto `P`, which is also the `W`-projection.
    pub fn project_onto_p(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for b in &self.blocks {
            let r = b.range();
            b.project(&v.as_slice()[r.clone()], &mut out.as_mut_slice()[r]);
        }
        out
    }

    /// True when every block is bounded (hypothesis (B)).
    pub fn is_bounded(&self) -> bool {
        self.blocks.iter().all(|b| b.is_bounded())
    }

    /// True when some block contributes a nontrivial cone direction.
    pub fn has_cone_part(&self) -> bool {
        self.blocks.iter().any(|b| !b.cone_basis().is_empty())
    }

    /// `‖a‖`, the largest singular value of `M^{-1/2} Gᵀ W^{1/2}`, computed once by power
    /// iteration and cached.
    pub fn norm_a(&self) -> f64 {
        *self.norm_a.get_or_init(|| {
            operator_norm(self, 1e-10, 100_000).unwrap_or_else(|e| {
                log::warn!("{e}; using the last power-iteration estimate");
                e.1
            })
        })
    }

    /// Replaces the given blocks by `Zero` blocks (pinned cone directions).
    pub fn with_blocks_pinned(&self, pinned: &[usize]) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        for &b in pinned {
            if let Some(blk) = blocks.get_mut(b) {
                blk.kind = BlockKind::Zero;
            }
        }
        DiscreteSaddleProblem::new(
            self.strain_map.clone(),
            self.load.clone(),
            self.y_gram.clone(),
            self.x_weights.clone(),
            blocks,
        )
    }

    /// `‖G‖_∞`, the largest absolute row sum.
    pub fn g_inf_norm(&self) -> f64 {
        self.strain_map.row_iter().map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

#[derive(Debug)]
pub(crate) struct PowerIterationStalled(pub usize, pub f64);

impl std::fmt::Display for PowerIterationStalled {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "power iteration did not settle after {} steps", self.0)
    }
}

/// Power iteration for `σ_max(M^{-1/2} Gᵀ W^{1/2})`, run on `W^{1/2} G M⁻¹ Gᵀ W^{1/2}`.
pub(crate) fn operator_norm(
    p: &DiscreteSaddleProblem,
    rel_tol: f64,
    max_iter: usize,
) -> std::result::Result<f64, PowerIterationStalled> {
    let sqrt_w = p.x_weights.map(f64::sqrt);
    // deterministic start with components in every direction
    let mut v = DVector::from_fn(p.n_x(), |i, _| 1.0 + 0.1 * ((i * 7919 % 101) as f64 / 101.0));
    v /= v.norm();
    let mut estimate = 0.0;
    for it in 0..max_iter {
        let gty = spmv(&p.strain_map_t, &v.component_mul(&sqrt_w));
        let u = p.solve_gram(&gty);
        let rayleigh = gty.dot(&u);
        let next = spmv(&p.strain_map, &u).component_mul(&sqrt_w);
        let n = next.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        let sigma = rayleigh.max(0.0).sqrt();
        if it > 2 && (sigma - estimate).abs() <= rel_tol * sigma {
            return Ok(sigma);
        }
        estimate = sigma;
        v = next / n;
    }
    Err(PowerIterationStalled(max_iter, estimate))
}

pub(crate) fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        out[i] = row.col_indices().iter().zip(row.values()).map(|(j, v)| v * x[*j]).sum();
    }
    out
}

pub(crate) fn dense_to_csr(m: &DMatrix<f64>) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 {
                coo.push(i, j, m[(i, j)]);
            }
        }
    }
    CsrMatrix::from(&coo)
}

fn check_partition(blocks: &mut [AdmissibleBlock], n_x: usize) -> Result<()> {
    let mut owner: Vec<Option<usize>> = vec![None; n_x];
    for (b, blk) in blocks.iter().enumerate() {
        if blk.start + blk.len > n_x {
            return Err(Error::InvalidProblem(format!(
                "block {b} covers {}..{} beyond n_x = {n_x}",
                blk.start,
                blk.start + blk.len
            )));
        }
        for c in blk.range() {
            if let Some(first) = owner[c] {
                return Err(Error::OverlappingBlocks { first, second: b, coord: c });
            }
            owner[c] = Some(b);
        }
    }
    if let Some(c) = owner.iter().position(Option::is_none) {
        return Err(Error::UncoveredCoordinate(c));
    }
    Ok(())
}

fn check_symmetric(m: &CsrMatrix<f64>) -> Result<()> {
    let scale = m.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let t = m.transpose();
    let diff = m - &t;
    if diff.values().iter().any(|v| v.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::InvalidProblem("M is not symmetric".into()));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// `n_X = n_Y = 1`, `G = M = W = 1`, `L = 1`, one ball of radius 2.
    pub fn t1() -> DiscreteSaddleProblem {
        DiscreteSaddleProblem::from_dense(
            &DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
            vec![AdmissibleBlock::new(0, 1, BlockKind::Ball { radius: 2.0 })],
        )
        .unwrap()
    }

    /// `G = M = I₂`, `L = (1, 0)`, a unit ball on coordinate 0 and a free coordinate 1.
    pub fn t2() -> DiscreteSaddleProblem {
        DiscreteSaddleProblem::from_dense(
            &DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
            &DMatrix::identity(2, 2),
            DVector::from_element(2, 1.0),
            vec![
                AdmissibleBlock::new(0, 1, BlockKind::Ball { radius: 1.0 }),
                AdmissibleBlock::new(1, 1, BlockKind::Free),
            ],
        )
        .unwrap()
    }
}
