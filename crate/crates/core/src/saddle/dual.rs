//! Support function `J`, the residual `Φ_λ`, its minimization over `P` and the
//! bisection for `ζ*`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{DiscreteSaddleProblem, TOL_DOM_REL};
use crate::error::{Error, Result};
use crate::ext::ExtReal;

fn check_len(what: &'static str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { what, expected: n, got: v.len() });
    }
    Ok(())
}

/// `J(y) = sup_{x ∈ P} a(x, y)`, block by block.
///
/// Membership of cone components in `dom J` is decided with `tol_dom = 1e-10·|Gy|`.
pub fn eval_support_j(p: &DiscreteSaddleProblem, y: &DVector<f64>) -> Result<ExtReal> {
    check_len("y", y, p.n_y())?;
    let g = p.apply_g(y);
    let tol_dom = TOL_DOM_REL * g.norm();
    let w = p.x_weights().as_slice();
    let mut total = ExtReal::Finite(0.0);
    for b in p.blocks() {
        let r = b.range();
        total = total + b.support(&g.as_slice()[r.clone()], &w[r], tol_dom);
        if !total.is_finite() {
            break;
        }
    }
    Ok(total)
}

/// `Φ_λ(x) = ‖Gᵀ W x − λ L‖_{Y*}`.
pub fn eval_phi_lambda(p: &DiscreteSaddleProblem, x: &DVector<f64>, lambda: f64) -> Result<f64> {
    check_len("x", x, p.n_x())?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidProblem(format!("λ must be nonnegative, got {lambda}")));
    }
    let r = p.apply_gt_w(x) - p.load() * lambda;
    Ok(p.dual_norm(&r))
}

/// Result of minimizing `Φ_λ` over `P`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiMinimum {
    /// Best value of `Φ_λ` found.
    pub value: f64,
    pub x: DVector<f64>,
    pub iterations: usize,
    /// `W`-norm of the gradient map at the returned point.
    pub pg_norm: f64,
    /// True when the target was reached before the gradient test.
    pub hit_target: bool,
}

#[derive(Clone, Debug)]
pub struct PhiOptions {
    /// Stop when the projected-gradient `W`-norm is at most this; unused with a target.
    pub tol: f64,
    pub max_iter: usize,
    /// Stop early once `Φ_λ ≤ target`.
    pub target: Option<f64>,
    pub warm_start: Option<DVector<f64>>,
}

impl PhiOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        PhiOptions { tol, max_iter, target: None, warm_start: None }
    }
}

/// `φ(λ) = inf_{x ∈ P} Φ_λ(x)`.
pub fn minimize_phi(p: &DiscreteSaddleProblem, lambda: f64, tol: f64, max_iter: usize) -> Result<PhiMinimum> {
    minimize_phi_with(p, lambda, &PhiOptions::new(tol, max_iter))
}

/// Minimizes `½Φ_λ²` over `P` by projected FISTA in the `W`-metric with
/// function-value restarts.
///
/// The `W`-gradient of `½Φ_λ²` is `G M⁻¹ r`, Lipschitz with constant `‖a‖²`. Also stops,
/// successfully, when a plain projected step no longer decreases `Φ_λ` in floating point.
pub fn minimize_phi_with(p: &DiscreteSaddleProblem, lambda: f64, opts: &PhiOptions) -> Result<PhiMinimum> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidProblem("minimize_phi needs tol > 0".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidProblem(format!("λ must be nonnegative, got {lambda}")));
    }
    let norm_a = p.norm_a();
    let lam_load = p.load() * lambda;
    let eval = |x: &DVector<f64>| -> (f64, DVector<f64>) {
        let r = p.apply_gt_w(x) - &lam_load;
        let u = p.solve_gram(&r);
        (0.5 * r.dot(&u).max(0.0), u)
    };

    let x0 = match &opts.warm_start {
        Some(ws) => {
            check_len("warm start", ws, p.n_x())?;
            p.project_onto_p(ws)
        }
        None => DVector::zeros(p.n_x()),
    };
    let (f0, _) = eval(&x0);
    let mut best = PhiMinimum {
        value: (2.0 * f0).sqrt(),
        x: x0.clone(),
        iterations: 0,
        pg_norm: f64::INFINITY,
        hit_target: false,
    };
    if norm_a == 0.0 {
        // G = 0: Φ_λ is constant on P.
        best.pg_norm = 0.0;
        return Ok(best);
    }
    if let Some(t) = opts.target {
        if best.value <= t {
            best.hit_target = true;
            return Ok(best);
        }
    }

    let step = 1.0 / (1.01 * norm_a * norm_a);
    let mut x_prev = x0.clone();
    let mut f_prev = f0;
    let mut z = x0;
    let mut momentum = 1.0f64;
    let mut restarted = false;
    for it in 1..=opts.max_iter {
        let (_, u) = eval(&z);
        let grad = p.apply_g(&u);
        let x_new = p.project_onto_p(&(&z - grad * step));
        let pg = p.x_norm(&(&x_new - &z)) / step;
        let (f_new, _) = eval(&x_new);
        let value = (2.0 * f_new).sqrt();
        if value < best.value {
            best.value = value;
            best.x = x_new.clone();
        }
        best.iterations = it;
        best.pg_norm = pg;
        if opts.target.is_some_and(|t| value <= t) {
            best.hit_target = true;
            return Ok(best);
        }
        // with a target a small gradient map does not separate the two sides on
        // ill-conditioned problems; only the target or a stall decides
        if pg <= opts.tol && opts.target.is_none() {
            return Ok(best);
        }
        if f_new > f_prev {
            if restarted {
                // a plain projected step from x_prev no longer decreases f: stationary to
                // working precision
                return Ok(best);
            }
            restarted = true;
            momentum = 1.0;
            z = x_prev.clone();
            continue;
        }
        restarted = false;
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        z = &x_new + (&x_new - &x_prev) * ((momentum - 1.0) / next);
        momentum = next;
        x_prev = x_new;
        f_prev = f_new;
    }
    Err(Error::PhiNotConverged { best: Box::new(best) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BisectOptions {
    /// Final bracket width.
    pub tol_lambda: f64,
    /// Feasibility threshold on `φ`; `None` means `1e-8·‖L‖_{Y*}`.
    pub tol_phi: Option<f64>,
    /// `ζ*` is declared `+∞` once the upper end exceeds `cap_factor·seed`.
    pub cap_factor: f64,
    pub max_iter: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { tol_lambda: 1e-6, tol_phi: None, cap_factor: 1e6, max_iter: 200_000 }
    }
}

impl BisectOptions {
    pub fn resolved_tol_phi(&self, p: &DiscreteSaddleProblem) -> f64 {
        self.tol_phi.unwrap_or(1e-8 * p.load_dual_norm())
    }
}

/// Outcome of [`bisect_zeta`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub value: ExtReal,
    /// Largest λ found feasible.
    pub lo: f64,
    /// Smallest λ found infeasible (`+∞` when capped).
    pub hi: ExtReal,
    /// True when the cap was reached ("unbounded or cap too low").
    pub capped: bool,
    pub evaluations: usize,
    /// Inner solves that hit the iteration cap and were judged by their best value.
    pub unconverged: usize,
    pub tol_phi: f64,
    pub tol_lambda: f64,
}

/// Brackets and bisects the predicate `φ(λ) ≤ tol_phi`, which holds exactly for `λ ≤ ζ*`.
pub fn bisect_zeta(p: &DiscreteSaddleProblem, lambda_hi_seed: f64, opts: &BisectOptions) -> Result<ZetaEstimate> {
    if !(opts.tol_lambda > 0.0) {
        return Err(Error::InvalidProblem("tol_lambda must be positive".into()));
    }
    if !(lambda_hi_seed > 0.0 && lambda_hi_seed.is_finite()) {
        return Err(Error::InvalidProblem(format!("bisection seed must be positive, got {lambda_hi_seed}")));
    }
    let tol_phi = opts.resolved_tol_phi(p);
    if !(tol_phi > 0.0) {
        return Err(Error::InvalidProblem("tol_phi must be positive".into()));
    }

    let mut evaluations = 0usize;
    let mut unconverged = 0usize;
    // x at the largest feasible λ so far, scaled for warm starts
    let mut x_lo: Option<(f64, DVector<f64>)> = None;
    let mut feasible = |lambda: f64, x_lo: &mut Option<(f64, DVector<f64>)>| -> Result<bool> {
        evaluations += 1;
        let warm = x_lo.as_ref().filter(|(l, _)| *l > 0.0).map(|(l, x)| x * (lambda / l));
        let opts_in = PhiOptions { tol: tol_phi, max_iter: opts.max_iter, target: Some(tol_phi), warm_start: warm };
        let res = match minimize_phi_with(p, lambda, &opts_in) {
            Ok(m) => m,
            Err(Error::PhiNotConverged { best }) => {
                unconverged += 1;
                log::warn!("φ({lambda}) not converged; judging by best value {:e}", best.value);
                *best
            }
            Err(e) => return Err(e),
        };
        let ok = res.value <= tol_phi;
        log::debug!(
            "φ({lambda}) = {:e} after {} iterations (pg {:e}): {}",
            res.value,
            res.iterations,
            res.pg_norm,
            if ok { "feasible" } else { "infeasible" }
        );
        if ok {
            *x_lo = Some((lambda, res.x));
        }
        Ok(ok)
    };

    let cap = opts.cap_factor * lambda_hi_seed;
    let mut lo = 0.0;
    let mut hi = lambda_hi_seed;
    while feasible(hi, &mut x_lo)? {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            log::warn!("ζ* bracket exceeded the cap {cap:e}: unbounded or cap too low");
            return Ok(ZetaEstimate {
                value: ExtReal::PosInfinity,
                lo,
                hi: ExtReal::PosInfinity,
                capped: true,
                evaluations,
                unconverged,
                tol_phi,
                tol_lambda: opts.tol_lambda,
            });
        }
    }
    while hi - lo > opts.tol_lambda {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid, &mut x_lo)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ZetaEstimate {
        value: ExtReal::Finite(0.5 * (lo + hi)),
        lo,
        hi: ExtReal::Finite(hi),
        capped: false,
        evaluations,
        unconverged,
        tol_phi,
        tol_lambda: opts.tol_lambda,
    })
}
