//! Brute-force references for tiny instances (`n_Y ≤ 3`, `n_X ≤ 4`).
//!
//! Everything here works on dense copies of the problem data and re-implements the
//! support function, the admissible sets and the null-space handling, so the main
//! solvers can be judged against it. Searches are sequential and deterministic.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::saddle::{bisect_zeta, minimize_phi, BisectOptions, BlockKind, DiscreteSaddleProblem};

pub const MAX_NY: usize = 3;
pub const MAX_NX: usize = 4;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// An oracle value with the resolution of the search that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: ExtReal,
    /// Estimated absolute error from the finite grid.
    pub tolerance: f64,
    /// No admissible point was found in the searched region (`ζ*`), or the λ-grid ended
    /// while still feasible (`λ*`).
    pub grid_exhausted: bool,
    /// The incumbent touched the outer edge of the search region.
    pub boundary_hit: bool,
    pub evaluations: usize,
}

/// Grid for [`brute_zeta`]; lengths are in units of the minimal-norm point of the
/// admissible plane.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZetaGrid {
    pub radius: f64,
    pub step: f64,
    /// Each refinement divides the step by 10 over a window of two previous steps.
    pub refinements: usize,
}

impl Default for ZetaGrid {
    fn default() -> Self {
        ZetaGrid { radius: 4.0, step: 0.01, refinements: 7 }
    }
}

/// Feasibility settings for [`brute_lambda`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaSearch {
    /// `P ∩ Λ_λ ≠ ∅` is accepted when the residual is at most `residual_tol·max(1, ‖L‖_{Y*})`.
    pub residual_tol: f64,
    /// Bisection between the last feasible and first infeasible grid points stops at this width.
    pub refine_tol: f64,
    /// Sample points per parameter and zoom level.
    pub samples: usize,
    pub levels: usize,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch { residual_tol: 1e-9, refine_tol: 1e-8, samples: 7, levels: 48 }
    }
}

/// Dense copy of a tiny problem.
struct Dense {
    g: DMatrix<f64>,
    load: DVector<f64>,
    /// Lower Cholesky factor of the Gram matrix of `Y`.
    chol: DMatrix<f64>,
    gram: DMatrix<f64>,
    w: DVector<f64>,
    blocks: Vec<(usize, usize, BlockKind)>,
}

impl Dense {
    fn new(p: &DiscreteSaddleProblem) -> Result<Self> {
        if p.n_y() > MAX_NY || p.n_x() > MAX_NX {
            return Err(Error::OracleDimensionCap { n_y: p.n_y(), n_x: p.n_x() });
        }
        let g: DMatrix<f64> = DMatrix::from(p.strain_map());
        let gram: DMatrix<f64> = DMatrix::from(p.y_gram());
        let chol = gram.clone().cholesky().ok_or(Error::GramNotPositiveDefinite)?.l();
        let blocks = p.blocks().iter().map(|b| (b.start, b.len, b.kind)).collect();
        Ok(Dense { g, load: p.load().clone(), chol, gram, w: p.x_weights().clone(), blocks })
    }

    /// `L_c⁻¹ v`, so that `‖v‖_{Y*} = |L_c⁻¹ v|`.
    fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve_lower_triangular(v).expect("Cholesky factor is invertible")
    }

    fn load_dual_norm(&self) -> f64 {
        self.whiten(&self.load).norm()
    }

    /// `J(y)` assuming `y ∈ dom J`: cone components of `Gy` are dropped.
    fn support_on_domain(&self, y: &DVector<f64>) -> f64 {
        let gy = &self.g * y;
        let mut total = 0.0;
        for &(s, n, kind) in &self.blocks {
            let c: Vec<f64> = (s..s + n).map(|i| self.w[i] * gy[i]).collect();
            total += match kind {
                BlockKind::Ball { radius } => radius * c.iter().map(|v| v * v).sum::<f64>().sqrt(),
                BlockKind::DeviatoricBall { radius, dim } => {
                    let mean = c[..dim].iter().sum::<f64>() / dim as f64;
                    let dev2: f64 =
                        c.iter().enumerate().map(|(i, v)| if i < dim { (v - mean).powi(2) } else { v * v }).sum();
                    radius * dev2.sqrt()
                }
                BlockKind::Interval { lo, hi } => c.iter().map(|v| (lo * v).max(hi * v)).sum(),
                BlockKind::Free | BlockKind::Zero => 0.0,
            };
        }
        total
    }

    /// Rows `r` with `r·y = 0` exactly on `dom J`.
    fn cone_rows(&self) -> DMatrix<f64> {
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for &(s, n, kind) in &self.blocks {
            match kind {
                BlockKind::Free => rows.extend((s..s + n).map(|i| self.g.row(i).transpose())),
                BlockKind::DeviatoricBall { dim, .. } => {
                    let mut r = DVector::zeros(self.g.ncols());
                    for i in s..s + dim {
                        r += self.g.row(i).transpose();
                    }
                    rows.push(r);
                }
                _ => {}
            }
        }
        let mut m = DMatrix::zeros(rows.len(), self.g.ncols());
        for (i, r) in rows.iter().enumerate() {
            m.set_row(i, &r.transpose());
        }
        m
    }

    /// Largest radius of any point of the bounded parts, `sqrt Σ_b max‖x_b‖²`.
    fn bounded_radius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|&(_, n, kind)| match kind {
                BlockKind::Ball { radius } | BlockKind::DeviatoricBall { radius, .. } => radius * radius,
                BlockKind::Interval { lo, hi } => n as f64 * lo.abs().max(hi.abs()).powi(2),
                _ => 0.0,
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Orthonormal basis of the null space of `a` (columns).
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // pad to at least n rows so the SVD returns a full V
    let mut padded = DMatrix::zeros(a.nrows().max(n), n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cols: Vec<_> = (0..n)
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= RANK_TOL * smax)
        .map(|i| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the range of `a`.
fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let cols: Vec<_> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Passes per zoom level that may recenter before the scale shrinks.
const MAX_MOVES: usize = 64;

struct Search {
    value: f64,
    evaluations: usize,
    boundary_hit: bool,
}

/// Repeated grid search: each level lays `samples` points per axis over
/// `center ± scale·base` and recenters on the incumbent, repeating at the same scale
/// (at most `MAX_MOVES` times) while that improves the value. `f` may move the point
/// (clamping into a set); the moved point becomes the incumbent.
fn zoom_search(
    f: &mut dyn FnMut(&mut [f64]) -> f64,
    start: Vec<f64>,
    base: &[f64],
    levels: &[(f64, usize)],
    stop_below: f64,
) -> Search {
    let k = start.len();
    let mut best = start;
    let mut point = best.clone();
    let mut value = f(&mut point);
    best.copy_from_slice(&point);
    let mut evaluations = 1;
    let mut boundary_hit = false;
    if k == 0 {
        return Search { value, evaluations, boundary_hit };
    }
    for (level, &(scale, samples)) in levels.iter().enumerate() {
        for pass in 0..MAX_MOVES {
            if value <= stop_below {
                break;
            }
            let before = value;
            let center = best.clone();
            let s = samples.max(2);
            let mut idx = vec![0usize; k];
            loop {
                for i in 0..k {
                    let t = 2.0 * idx[i] as f64 / (s - 1) as f64 - 1.0;
                    point[i] = center[i] + scale * base[i] * t;
                }
                let v = f(&mut point);
                evaluations += 1;
                if v < value {
                    value = v;
                    best.copy_from_slice(&point);
                    if level == 0 && pass == 0 {
                        boundary_hit = idx.iter().any(|&j| j == 0 || j == s - 1);
                    }
                    if value <= stop_below {
                        break;
                    }
                }
                let mut d = 0;
                while d < k {
                    idx[d] += 1;
                    if idx[d] < s {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == k {
                    break;
                }
            }
            if !(value < before) {
                break;
            }
        }
    }
    Search { value, evaluations, boundary_hit }
}

/// `ζ* = inf_{L(y)=1} J(y)` by grid search over `dom J ∩ {L = 1}`.
///
/// `dom J` is the null space of the cone rows of `G`, so the admissible plane is
/// parametrized exactly as `y₀ + Z t`; an empty plane gives `+∞` with `grid_exhausted`.
/// The first level is doubled in radius while its incumbent sits on the outer edge.
pub fn brute_zeta(p: &DiscreteSaddleProblem, grid: &ZetaGrid) -> Result<OracleValue> {
    if !(grid.radius > 0.0 && grid.step > 0.0 && grid.step < grid.radius) {
        return Err(Error::InvalidProblem("oracle grid needs 0 < step < radius".into()));
    }
    let d = Dense::new(p)?;
    let c = d.cone_rows();
    let mut a = DMatrix::zeros(c.nrows() + 1, d.g.ncols());
    a.view_mut((0, 0), (c.nrows(), c.ncols())).copy_from(&c);
    a.set_row(c.nrows(), &d.load.transpose());
    let mut rhs = DVector::zeros(a.nrows());
    rhs[c.nrows()] = 1.0;
    let svd = a.clone().svd(true, true);
    let y0 = svd.solve(&rhs, RANK_TOL * svd.singular_values.max()).expect("U and V requested");
    if (&a * &y0 - &rhs).norm() > 1e-9 * (1.0 + a.norm() * y0.norm()) {
        return Ok(OracleValue {
            value: ExtReal::PosInfinity,
            tolerance: 0.0,
            grid_exhausted: true,
            boundary_hit: false,
            evaluations: 0,
        });
    }
    let z = null_space(&a);
    let k = z.ncols();
    let unit = y0.norm();
    let mut eval = |t: &mut [f64]| {
        let y = &y0 + &z * DVector::from_column_slice(t);
        d.support_on_domain(&y)
    };
    let lip = (d.w.map(|v| v * v).max().sqrt() * d.g.norm()) * d.bounded_radius();
    let mut radius = grid.radius;
    let mut evaluations = 0;
    loop {
        let step = grid.step * radius / grid.radius;
        let n0 = (2.0 * radius / step).round() as usize + 1;
        let mut levels = vec![(radius * unit, n0)];
        let mut h = step;
        for _ in 0..grid.refinements {
            levels.push((2.0 * h * unit, 41));
            h /= 10.0;
        }
        let s = zoom_search(&mut eval, vec![0.0; k], &vec![1.0; k], &levels, f64::NEG_INFINITY);
        evaluations += s.evaluations;
        if !s.boundary_hit || radius > grid.radius * 1e6 {
            let tolerance = lip * h * unit * (k as f64).sqrt();
            return Ok(OracleValue {
                value: ExtReal::Finite(s.value),
                tolerance,
                grid_exhausted: false,
                boundary_hit: s.boundary_hit,
                evaluations,
            });
        }
        radius *= 2.0;
    }
}

/// Whitened residual map `u ↦ Q(A_B u − λ l)` for the feasibility test of [`brute_lambda`].
///
/// `x = E_B u + E_F v`; `v` (free blocks and deviatoric traces) is eliminated exactly by
/// projecting onto the orthogonal complement `Q` of `range(A E_F)`.
struct Residual {
    qab: DMatrix<f64>,
    ql: DVector<f64>,
    /// Per-parameter half-widths of the bounding box.
    half: Vec<f64>,
    /// Parameter groups clamped together: (offset, len, kind) with kind a radius or interval.
    groups: Vec<(usize, usize, Clamp)>,
}

#[derive(Clone, Copy)]
enum Clamp {
    Radial(f64),
    Box(f64, f64),
}

impl Residual {
    fn new(d: &Dense) -> Self {
        let n_x = d.g.nrows();
        let mut eb: Vec<DVector<f64>> = Vec::new();
        let mut ef: Vec<DVector<f64>> = Vec::new();
        let mut half = Vec::new();
        let mut groups = Vec::new();
        let unit = |i: usize| {
            let mut e = DVector::zeros(n_x);
            e[i] = 1.0;
            e
        };
        for &(s, n, kind) in &d.blocks {
            match kind {
                BlockKind::Ball { radius } => {
                    groups.push((eb.len(), n, Clamp::Radial(radius)));
                    eb.extend((s..s + n).map(unit));
                    half.extend(std::iter::repeat_n(radius, n));
                }
                BlockKind::Interval { lo, hi } => {
                    for i in s..s + n {
                        groups.push((eb.len(), 1, Clamp::Box(lo, hi)));
                        eb.push(unit(i));
                        half.push(lo.abs().max(hi.abs()));
                    }
                }
                BlockKind::DeviatoricBall { radius, dim } => {
                    let mut tr = DVector::zeros(n);
                    tr.rows_mut(0, dim).fill(1.0 / (dim as f64).sqrt());
                    let embed = |v: DVector<f64>| {
                        let mut e = DVector::zeros(n_x);
                        e.rows_mut(s, n).copy_from(&v);
                        e
                    };
                    ef.push(embed(tr.clone()));
                    let dev = null_space(&DMatrix::from_row_slice(1, n, tr.as_slice()));
                    groups.push((eb.len(), dev.ncols(), Clamp::Radial(radius)));
                    for c in dev.column_iter() {
                        eb.push(embed(c.into_owned()));
                        half.push(radius);
                    }
                }
                BlockKind::Free => ef.extend((s..s + n).map(unit)),
                BlockKind::Zero => {}
            }
        }
        let a_full = {
            let gtw = d.g.transpose() * DMatrix::from_diagonal(&d.w);
            d.chol.solve_lower_triangular(&gtw).expect("Cholesky factor is invertible")
        };
        let cols = |es: &[DVector<f64>]| {
            if es.is_empty() {
                DMatrix::zeros(a_full.nrows(), 0)
            } else {
                &a_full * DMatrix::from_columns(es)
            }
        };
        let af = cols(&ef);
        let ab = cols(&eb);
        let u = range_basis(&af);
        let proj = |m: &DMatrix<f64>| m - &u * (u.transpose() * m);
        let l = d.whiten(&d.load);
        let ql = &l - &u * (u.transpose() * &l);
        Residual { qab: proj(&ab), ql, half, groups }
    }

    fn clamp(&self, u: &mut [f64]) {
        for &(o, n, c) in &self.groups {
            let s = &mut u[o..o + n];
            match c {
                Clamp::Radial(r) => {
                    let nrm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if nrm > r {
                        s.iter_mut().for_each(|v| *v *= r / nrm);
                    }
                }
                Clamp::Box(lo, hi) => s.iter_mut().for_each(|v| *v = v.clamp(lo, hi)),
            }
        }
    }

    fn eval(&self, u: &[f64], lambda: f64) -> f64 {
        let mut r = &self.ql * (-lambda);
        for (j, uj) in u.iter().enumerate() {
            r.axpy(*uj, &self.qab.column(j), 1.0);
        }
        r.norm()
    }

    /// `min_{x ∈ P} ‖Gᵀ W x − λ L‖_{Y*}` up to the zoom resolution.
    fn minimize(&self, lambda: f64, opts: &LambdaSearch, stop_below: f64) -> (f64, usize) {
        let levels: Vec<_> = (0..opts.levels).map(|i| (0.5f64.powi(i as i32), opts.samples)).collect();
        let mut f = |u: &mut [f64]| {
            self.clamp(u);
            self.eval(u, lambda)
        };
        let s = zoom_search(&mut f, vec![0.0; self.half.len()], &self.half, &levels, stop_below);
        (s.value, s.evaluations)
    }
}

/// An upper end for λ-grids: beyond it the residual cannot vanish.
pub fn lambda_upper_limit(p: &DiscreteSaddleProblem) -> Result<ExtReal> {
    let d = Dense::new(p)?;
    let r = Residual::new(&d);
    let ql = r.ql.norm();
    if ql <= RANK_TOL * d.load_dual_norm() {
        return Ok(ExtReal::PosInfinity);
    }
    let reach: f64 = r.qab.column_iter().zip(&r.half).map(|(c, h)| c.norm() * h).sum();
    Ok(ExtReal::Finite(reach / ql))
}

/// Uniform grid on `[0, 1.01·λ_max]` with `n` points; empty when `λ* = +∞` is exact.
pub fn default_lambda_grid(p: &DiscreteSaddleProblem, n: usize) -> Result<Vec<f64>> {
    Ok(match lambda_upper_limit(p)? {
        ExtReal::PosInfinity => Vec::new(),
        ExtReal::Finite(top) => {
            let top = 1.01 * top.max(f64::MIN_POSITIVE);
            (0..n.max(2)).map(|i| top * i as f64 / (n.max(2) - 1) as f64).collect()
        }
    })
}

/// `λ* = sup{λ : P ∩ Λ_λ ≠ ∅}`: the largest λ of the grid whose residual is below the
/// threshold, refined by bisection towards the next grid point.
///
/// Balls are sampled on a clamped zoom grid; free blocks and deviatoric traces are solved
/// exactly by least squares. When `L` lies in the range of the cone part every λ is
/// feasible and the result is `+∞`.
pub fn brute_lambda(p: &DiscreteSaddleProblem, lambda_grid: &[f64], opts: &LambdaSearch) -> Result<OracleValue> {
    let d = Dense::new(p)?;
    let r = Residual::new(&d);
    let l_norm = d.load_dual_norm();
    if r.ql.norm() <= RANK_TOL * l_norm {
        return Ok(OracleValue {
            value: ExtReal::PosInfinity,
            tolerance: 0.0,
            grid_exhausted: false,
            boundary_hit: false,
            evaluations: 0,
        });
    }
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidProblem("λ-grid must be a nonempty list of nonnegative numbers".into()));
    }
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let tol = opts.residual_tol * l_norm.max(1.0);
    let mut evaluations = 0;
    let mut feasible = |lambda: f64| {
        let (v, n) = r.minimize(lambda, opts, tol);
        evaluations += n;
        v <= tol
    };
    // the feasible set of λ is an interval containing 0
    let mut lo = None;
    let mut hi = None;
    for &l in &grid {
        if feasible(l) {
            lo = Some(l);
        } else {
            hi = Some(l);
            break;
        }
    }
    let Some(mut lo) = lo else {
        return Err(Error::OracleContradiction("λ = min(grid) is infeasible although 0 ∈ P".into()));
    };
    let Some(mut hi) = hi else {
        return Ok(OracleValue {
            value: ExtReal::Finite(lo),
            tolerance: f64::INFINITY,
            grid_exhausted: true,
            boundary_hit: false,
            evaluations,
        });
    };
    while hi - lo > opts.refine_tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // residuals up to `tol` pass as zero, which moves the edge by about tol / slope; the
    // slope is taken from a chord just past the edge
    let probe = hi + (1e-3 * hi).max(opts.refine_tol);
    let (v_probe, n) = r.minimize(probe, opts, 0.0);
    evaluations += n;
    let slope = (v_probe / (probe - lo)).max(f64::MIN_POSITIVE);
    Ok(OracleValue {
        value: ExtReal::Finite(0.5 * (lo + hi)),
        tolerance: (hi - lo) + tol / slope,
        grid_exhausted: false,
        boundary_hit: false,
        evaluations,
    })
}

/// `φ(λ)` through the primal identity: `sqrt(−2 min_{y ∈ dom J} {½‖y‖²_Y + J(y) − λL(y)})`.
pub fn brute_phi_primal(p: &DiscreteSaddleProblem, lambda: f64) -> Result<OracleValue> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidProblem(format!("λ must be finite and nonnegative, got {lambda}")));
    }
    let d = Dense::new(p)?;
    let z = null_space(&d.cone_rows());
    let k = z.ncols();
    let mz = z.transpose() * &d.gram * &z;
    let lz = z.transpose() * &d.load;
    let eval = |t: &[f64]| {
        let t = DVector::from_column_slice(t);
        let y = &z * &t;
        0.5 * t.dot(&(&mz * &t)) + d.support_on_domain(&y) - lambda * lz.dot(&t)
    };
    // minimizers satisfy ‖y‖_Y ≤ 2λ‖L‖_{Y*} since J ≥ 0
    let mu_min = if k > 0 { mz.symmetric_eigenvalues().min().max(f64::MIN_POSITIVE) } else { 1.0 };
    let box_half = (2.0 * lambda * d.load_dual_norm() / mu_min.sqrt()).max(1e-300);
    let levels: Vec<_> = (0..60).map(|i| (box_half * 0.5f64.powi(i), 21)).collect();
    let mut f = |t: &mut [f64]| eval(t);
    let s = zoom_search(&mut f, vec![0.0; k], &vec![1.0; k], &levels, f64::NEG_INFINITY);
    if s.value > 1e-12 * (1.0 + lambda) {
        return Err(Error::OracleContradiction(format!("primal minimum {} is positive", s.value)));
    }
    Ok(OracleValue {
        value: ExtReal::Finite((-2.0 * s.value).max(0.0).sqrt()),
        tolerance: box_half * 0.5f64.powi(59) * (k as f64).sqrt(),
        grid_exhausted: false,
        boundary_hit: s.boundary_hit,
        evaluations: s.evaluations,
    })
}

/// Which no-gap hypothesis covers an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// `P` bounded.
    BoundedP,
    /// `P = P_A + P_C` with an injective cone part (discrete inf-sup).
    ConeSplit,
    /// Cone part with a kernel that the quotient removes.
    Quotient { null_dim: usize },
}

pub fn classify_hypothesis(p: &DiscreteSaddleProblem) -> Result<Hypothesis> {
    let d = Dense::new(p)?;
    let n_x = d.g.nrows();
    let mut cone: Vec<DVector<f64>> = Vec::new();
    for &(s, n, kind) in &d.blocks {
        match kind {
            BlockKind::Free => cone.extend((s..s + n).map(|i| {
                let mut e = DVector::zeros(n_x);
                e[i] = 1.0;
                e
            })),
            BlockKind::DeviatoricBall { dim, .. } => {
                let mut e = DVector::zeros(n_x);
                e.rows_mut(s, dim).fill(1.0);
                cone.push(e);
            }
            _ => {}
        }
    }
    if cone.is_empty() {
        return Ok(Hypothesis::BoundedP);
    }
    let gtw = d.g.transpose() * DMatrix::from_diagonal(&d.w);
    let k = gtw * DMatrix::from_columns(&cone);
    let rank = range_basis(&k).ncols();
    Ok(if rank == cone.len() { Hypothesis::ConeSplit } else { Hypothesis::Quotient { null_dim: cone.len() - rank } })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoGapReport {
    pub lambda: OracleValue,
    pub zeta: OracleValue,
    /// `|λ* − ζ*|` from the two oracles; `0` when both are `+∞`.
    pub gap: f64,
    /// Sum of the two grid tolerances.
    pub tolerance: f64,
    pub hypothesis: Hypothesis,
    /// `λ* ≤ ζ* + tolerance`.
    pub weak_duality: bool,
    pub passed: bool,
}

fn gap_of(a: ExtReal, b: ExtReal) -> f64 {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs(),
        (ExtReal::PosInfinity, ExtReal::PosInfinity) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Computes both oracles and checks `|λ* − ζ*|` against their combined resolution.
pub fn verify_no_gap(p: &DiscreteSaddleProblem) -> Result<NoGapReport> {
    let hypothesis = classify_hypothesis(p)?;
    let zeta = brute_zeta(p, &ZetaGrid::default())?;
    let lambda = brute_lambda_default(p)?;
    let gap = gap_of(lambda.value, zeta.value);
    let tolerance = lambda.tolerance + zeta.tolerance;
    let weak_duality = match (lambda.value, zeta.value) {
        (ExtReal::Finite(l), ExtReal::Finite(z)) => l <= z + tolerance,
        (ExtReal::PosInfinity, ExtReal::Finite(_)) => false,
        _ => true,
    };
    let passed = weak_duality && gap <= tolerance.max(NO_GAP_TOL);
    Ok(NoGapReport { lambda, zeta, gap, tolerance, hypothesis, weak_duality, passed })
}

/// Gap accepted by [`verify_no_gap`] when the grid resolution is finer.
pub const NO_GAP_TOL: f64 = 1e-4;

/// [`brute_lambda`] on [`default_lambda_grid`] with 41 points.
pub fn brute_lambda_default(p: &DiscreteSaddleProblem) -> Result<OracleValue> {
    let grid = default_lambda_grid(p, 41)?;
    if grid.is_empty() {
        return brute_lambda(p, &[0.0], &LambdaSearch::default());
    }
    brute_lambda(p, &grid, &LambdaSearch::default())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiCheck {
    pub lambda: f64,
    pub primal: f64,
    pub solver: f64,
    pub passed: bool,
}

/// Everything `limit-bounds oracle` checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSuiteReport {
    pub no_gap: NoGapReport,
    pub solver_zeta: ExtReal,
    /// `|bisect_zeta − brute_zeta| ≤ NO_GAP_TOL` (or both `+∞`).
    pub solver_agrees: bool,
    pub phi_checks: Vec<PhiCheck>,
    pub passed: bool,
}

/// Relative agreement required between the primal identity and the φ solver.
pub const PHI_IDENTITY_TOL: f64 = 1e-3;

/// No-gap check, solver agreement and a sweep of the primal identity for `φ`.
pub fn run_oracle_suite(p: &DiscreteSaddleProblem) -> Result<OracleSuiteReport> {
    let no_gap = verify_no_gap(p)?;
    let seed = no_gap.zeta.value.finite().filter(|z| *z > 0.0).unwrap_or(1.0);
    let z = bisect_zeta(p, seed, &BisectOptions::default())?;
    let solver_agrees = gap_of(z.value, no_gap.zeta.value) <= NO_GAP_TOL.max(no_gap.zeta.tolerance);

    let scale = no_gap.zeta.value.finite().unwrap_or(1.0).max(1e-3);
    let mut phi_checks = Vec::new();
    for f in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let lambda = f * scale;
        let primal = brute_phi_primal(p, lambda)?.value.to_f64();
        let solver = match minimize_phi(p, lambda, 1e-13, 200_000) {
            Ok(m) => m.value,
            Err(Error::PhiNotConverged { best }) => best.value,
            Err(e) => return Err(e),
        };
        let passed = (primal - solver).abs() <= PHI_IDENTITY_TOL * primal.max(solver).max(1e-3 * scale);
        phi_checks.push(PhiCheck { lambda, primal, solver, passed });
    }
    let passed = no_gap.passed && solver_agrees && phi_checks.iter().all(|c| c.passed);
    Ok(OracleSuiteReport { no_gap, solver_zeta: z.value, solver_agrees, phi_checks, passed })
}
