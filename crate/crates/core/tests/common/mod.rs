//! Instances shared by the integration tests and the acceptance run.

#![allow(dead_code)]

use std::path::PathBuf;

use limit_bounds::mech::{generate_rect_mesh, AssembledModel, BoundaryTag, FemModel, ModelKind, RectTags};
use limit_bounds::{AdmissibleBlock, BlockKind, DiscreteSaddleProblem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ball(start: usize, len: usize, radius: f64) -> AdmissibleBlock {
    AdmissibleBlock::new(start, len, BlockKind::Ball { radius })
}

pub fn interval(start: usize, len: usize, lo: f64, hi: f64) -> AdmissibleBlock {
    AdmissibleBlock::new(start, len, BlockKind::Interval { lo, hi })
}

pub fn free(start: usize, len: usize) -> AdmissibleBlock {
    AdmissibleBlock::new(start, len, BlockKind::Free)
}

pub fn deviatoric(start: usize, radius: f64) -> AdmissibleBlock {
    AdmissibleBlock::new(start, 3, BlockKind::DeviatoricBall { radius, dim: 2 })
}

/// Dense instance; `g` is row-major `n_x × n_y`.
pub fn dense(
    g: &[f64],
    load: &[f64],
    m: Option<&[f64]>,
    w: &[f64],
    blocks: Vec<AdmissibleBlock>,
) -> DiscreteSaddleProblem {
    let n_y = load.len();
    let n_x = w.len();
    let m = m.map_or_else(|| DMatrix::identity(n_y, n_y), |m| DMatrix::from_row_slice(n_y, n_y, m));
    DiscreteSaddleProblem::from_dense(
        &DMatrix::from_row_slice(n_x, n_y, g),
        DVector::from_column_slice(load),
        &m,
        DVector::from_column_slice(w),
        blocks,
    )
    .unwrap()
}

pub fn t1() -> DiscreteSaddleProblem {
    dense(&[1.0], &[1.0], None, &[1.0], vec![ball(0, 1, 2.0)])
}

pub fn t2() -> DiscreteSaddleProblem {
    dense(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0], None, &[1.0, 1.0], vec![ball(0, 1, 1.0), free(1, 1)])
}

/// Tiny instances (`n_Y ≤ 3`, `n_X ≤ 4`) across the three no-gap hypotheses.
pub fn tiny_corpus() -> Vec<(&'static str, DiscreteSaddleProblem)> {
    let m3 = [2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.5];
    vec![
        // bounded P
        ("t1", t1()),
        ("disc", dense(&[1.0, 0.0, 0.0, 1.0], &[1.0, 1.0], None, &[1.0, 1.0], vec![ball(0, 2, 1.0)])),
        (
            "box",
            dense(
                &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
                &[1.0, 2.0],
                None,
                &[1.0, 0.5, 2.0],
                vec![interval(0, 3, -1.0, 2.0)],
            ),
        ),
        (
            "ball_box_weighted",
            dense(
                &[1.0, 0.0, 0.5, 0.0, 1.0, 0.0, 0.3, 0.0, 1.0, 1.0, -1.0, 0.0],
                &[1.0, 0.5, -0.5],
                Some(&m3),
                &[0.7, 0.7, 1.3, 0.4],
                vec![ball(0, 2, 1.5), interval(2, 2, -0.5, 0.5)],
            ),
        ),
        (
            "zero_and_ball",
            dense(
                &[1.0, 1.0, 1.0, -1.0, 0.0, 1.0],
                &[1.0, 0.0],
                None,
                &[1.0, 1.0, 1.0],
                vec![AdmissibleBlock::new(0, 1, BlockKind::Zero), ball(1, 2, 1.0)],
            ),
        ),
        // cone split
        ("t2", t2()),
        (
            "ball_free_pair",
            dense(
                &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, -1.0],
                &[1.0, 1.0, 0.0],
                Some(&m3),
                &[1.0, 1.0, 1.0, 2.0],
                vec![ball(0, 2, 1.0), free(2, 2)],
            ),
        ),
        (
            "deviatoric_box",
            dense(
                &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.5],
                &[1.0, -1.0, 0.5],
                None,
                &[1.0, 1.0, 1.0, 1.0],
                vec![deviatoric(0, 1.0), interval(3, 1, -1.0, 1.0)],
            ),
        ),
        // quotient
        (
            "t2_padded",
            dense(
                &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                &[1.0, 0.0],
                None,
                &[1.0, 1.0, 1.0],
                vec![ball(0, 1, 1.0), free(1, 1), free(2, 1)],
            ),
        ),
        (
            "dependent_free_rows",
            dense(
                &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0],
                &[1.0, 0.0, 0.0],
                None,
                &[1.0, 1.0, 1.0],
                vec![ball(0, 1, 1.0), free(1, 2)],
            ),
        ),
        (
            "deviatoric_dependent_free",
            dense(
                &[1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                &[1.0, 0.5, 0.0],
                None,
                &[1.0, 1.0, 1.0, 1.0],
                vec![deviatoric(0, 1.0), free(3, 1)],
            ),
        ),
        // no balancing bound: every load is carried by the free block
        ("free_only", dense(&[1.0, 0.0, 0.0, 1.0], &[1.0, 1.0], None, &[1.0, 1.0], vec![free(0, 2)])),
    ]
}

/// Random dense bounded instance with `n_y ≤ 3`, `n_x ≤ 4`.
pub fn random_bounded(r: &mut impl Rng) -> DiscreteSaddleProblem {
    let n_y = r.gen_range(1..=3);
    let n_x = r.gen_range(n_y..=4);
    loop {
        let g: Vec<f64> = (0..n_x * n_y).map(|_| r.gen_range(-1.0..1.0)).collect();
        let load: Vec<f64> = (0..n_y).map(|_| r.gen_range(-1.0..1.0)).collect();
        let a = DMatrix::from_fn(n_y, n_y, |_, _| r.gen_range(-0.5..0.5));
        let m = &a * a.transpose() + DMatrix::identity(n_y, n_y);
        let split = r.gen_range(0..=n_x);
        let wb = r.gen_range(0.5..2.0);
        let mut w = vec![wb; split];
        w.extend((split..n_x).map(|_| r.gen_range(0.5..2.0)));
        let mut blocks = Vec::new();
        if split > 0 {
            blocks.push(ball(0, split, r.gen_range(0.5..2.0)));
        }
        if split < n_x {
            let lo = -r.gen_range(0.2..1.5);
            blocks.push(interval(split, n_x - split, lo, r.gen_range(0.2..1.5)));
        }
        let m_rows: Vec<f64> = m.transpose().iter().copied().collect();
        if load.iter().any(|v| v.abs() > 0.1) {
            if let Ok(p) = DiscreteSaddleProblem::from_dense(
                &DMatrix::from_row_slice(n_x, n_y, &g),
                DVector::from_vec(load.clone()),
                &DMatrix::from_row_slice(n_y, n_y, &m_rows),
                DVector::from_vec(w.clone()),
                blocks.clone(),
            ) {
                return p;
            }
        }
    }
}

pub fn delamination_model(n: usize) -> FemModel {
    let mesh = generate_rect_mesh(n, n, 1.0, 1.0).unwrap();
    FemModel::new(mesh, ModelKind::Delamination, 1.0).with_traction(BoundaryTag::GammaF, [0.0, 0.5])
}

/// Clamped at the bottom, free top, loaded by a slanted top traction.
pub fn von_mises_model(n: usize) -> FemModel {
    let tags = RectTags {
        left: BoundaryTag::GammaT,
        right: BoundaryTag::GammaT,
        bottom: BoundaryTag::Gamma0,
        top: BoundaryTag::GammaF,
    };
    let mesh = limit_bounds::mech::generate_rect_mesh_tagged(n, n, 1.0, 1.0, tags).unwrap();
    FemModel::new(mesh, ModelKind::VonMises, 1.0).with_traction(BoundaryTag::GammaF, [0.2, -1.0])
}

pub fn assembled(model: &FemModel) -> AssembledModel {
    model.assemble().unwrap()
}

/// Random vector in `Y` with entries in `[-1, 1]`.
pub fn random_y(p: &DiscreteSaddleProblem, r: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(p.n_y(), |_, _| r.gen_range(-1.0..1.0))
}

/// Dense rows `c` with `c·y = 0` exactly on `dom J`: every free row of `G` and the trace
/// row of every deviatoric block.
pub fn cone_rows(p: &DiscreteSaddleProblem) -> DMatrix<f64> {
    let g = DMatrix::from(p.strain_map());
    let mut rows = Vec::new();
    for b in p.blocks() {
        match b.kind {
            BlockKind::Free => rows.extend(b.range().map(|i| g.row(i).into_owned())),
            BlockKind::DeviatoricBall { dim, .. } => rows.push(
                (b.start..b.start + dim)
                    .map(|i| g.row(i).into_owned())
                    .fold(nalgebra::RowDVector::zeros(p.n_y()), |acc, r| acc + r),
            ),
            _ => {}
        }
    }
    if rows.is_empty() {
        DMatrix::zeros(0, p.n_y())
    } else {
        DMatrix::from_rows(&rows)
    }
}

/// Orthonormal basis (columns) of `dom J`, from an SVD of [`cone_rows`].
pub fn dom_basis(p: &DiscreteSaddleProblem) -> DMatrix<f64> {
    let c = cone_rows(p);
    let n = p.n_y();
    if c.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let mut padded = DMatrix::zeros(c.nrows().max(n), n);
    padded.view_mut((0, 0), (c.nrows(), n)).copy_from(&c);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let cols: Vec<_> =
        (0..n).filter(|&i| svd.singular_values[i] <= 1e-10 * smax).map(|i| v_t.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// `min_{z ∈ dom J} ‖y − z‖_Y` by the `M`-orthogonal projection onto [`dom_basis`].
pub fn distance_to_dom(p: &DiscreteSaddleProblem, y: &DVector<f64>) -> f64 {
    let m = DMatrix::from(p.y_gram());
    let z = dom_basis(p);
    let r = if z.ncols() == 0 {
        y.clone()
    } else {
        let zmz = z.transpose() * &m * &z;
        let c = zmz.cholesky().unwrap().solve(&(z.transpose() * &m * y));
        y - &z * c
    };
    r.dot(&(&m * &r)).max(0.0).sqrt()
}

/// `φ(λ)` from the FISTA solver at a tight tolerance; the best value when capped.
pub fn phi(p: &DiscreteSaddleProblem, lambda: f64) -> f64 {
    match limit_bounds::saddle::minimize_phi(p, lambda, 1e-13 * p.norm_a().max(1.0), 200_000) {
        Ok(m) => m.value,
        Err(limit_bounds::Error::PhiNotConverged { best }) => best.value,
        Err(e) => panic!("{e}"),
    }
}
