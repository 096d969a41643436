//! Regularized dissipation `J_α`, the value `ψ(α) = min_{L(y)=1} J_α(y)` and the
//! α-continuation that produces lower bounds for `λ*`.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saddle::DiscreteSaddleProblem;

/// `Π_α y`: block-wise projection of `α·Gy` onto `P`.
pub fn project_pi_alpha(p: &DiscreteSaddleProblem, alpha: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
    check(p, alpha, y)?;
    Ok(p.project_onto_p(&(p.apply_g(y) * alpha)))
}

/// `J_α(y) = ⟨Π_α y, Gy⟩_X − ‖Π_α y‖²_X / (2α)`.
pub fn eval_j_alpha(p: &DiscreteSaddleProblem, alpha: f64, y: &DVector<f64>) -> Result<f64> {
    check(p, alpha, y)?;
    Ok(j_alpha_parts(p, alpha, y).0)
}

/// `Gᵀ W Π_α y`, the coordinate gradient of `J_α`.
pub fn grad_j_alpha(p: &DiscreteSaddleProblem, alpha: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
    check(p, alpha, y)?;
    Ok(j_alpha_parts(p, alpha, y).1)
}

fn check(p: &DiscreteSaddleProblem, alpha: f64, y: &DVector<f64>) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidProblem(format!("α must be positive, got {alpha}")));
    }
    if y.len() != p.n_y() {
        return Err(Error::DimensionMismatch { what: "y", expected: p.n_y(), got: y.len() });
    }
    Ok(())
}

fn j_alpha_parts(p: &DiscreteSaddleProblem, alpha: f64, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let g = p.apply_g(y);
    let pi = p.project_onto_p(&(&g * alpha));
    let value = p.x_inner(&pi, &g) - p.x_inner(&pi, &pi) / (2.0 * alpha);
    (value, p.apply_gt_w(&pi))
}

/// One step of the regularization path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegPathRecord {
    pub alpha: f64,
    pub psi: f64,
    pub lambda_alpha: f64,
    pub y_alpha: DVector<f64>,
    /// `‖g − λ_α L‖_{Y*}` with `g` the gradient of `J_α` at `y_α`.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiOptions {
    /// Acceptance threshold on the KKT residual relative to `‖g‖_{Y*}`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PsiOptions {
    fn default() -> Self {
        PsiOptions { tol: 1e-10, max_iter: 100_000 }
    }
}

/// Number of past values in the nonmonotone line search.
const GLL_MEMORY: usize = 10;
/// Multiple of the rounding floor of the gradient below which KKT residuals are accepted.
const GRAD_NOISE_FACTOR: f64 = 16.0;
/// Iterations without a new best KKT residual before giving up.
const STALL_WINDOW: usize = 2000;

/// Minimizes `J_α` over `{L(y) = 1}`.
///
/// Projected Barzilai–Borwein gradient in the metric `H = M + α BᵀWB`, where `B` picks the
/// cone components of `Gy`: the direction is `d = H⁻¹(g − λ_H L)` with `λ_H` chosen so that
/// `L(d) = 0`. Without cone blocks `H = M`. Steps are safeguarded by a nonmonotone Armijo
/// test. `λ_α` and the KKT residual are always taken in the `M⁻¹` metric.
///
/// Accepts when the residual is below `tol·‖g‖_{Y*}` or the rounding floor of the gradient,
/// and gives up after a long run without a new best residual.
pub fn solve_psi(
    p: &DiscreteSaddleProblem,
    alpha: f64,
    warm_start: Option<&DVector<f64>>,
    opts: &PsiOptions,
) -> Result<RegPathRecord> {
    let q = p.solve_gram(p.load());
    let lq = p.load().dot(&q);
    let restore = |y: &mut DVector<f64>| {
        let gap = 1.0 - p.load_value(y);
        y.axpy(gap / lq, &q, 1.0);
    };

    let mut y = match warm_start {
        Some(ws) => {
            check(p, alpha, ws)?;
            let l = p.load_value(ws);
            let mut y = if l.abs() > 1e-12 * p.load_dual_norm() * p.y_norm(ws) { ws / l } else { ws.clone() };
            restore(&mut y);
            y
        }
        None => {
            check(p, alpha, &q)?;
            &q / lq
        }
    };

    // search directions use H = M + α BᵀWB, which absorbs the stiff penalty on cone
    // directions; λ_α and the KKT residual stay in the M-metric
    let h_factor = p.penalized_gram_factor(alpha);
    let solve_h = |r: &DVector<f64>| match &h_factor {
        Some(f) => DVector::from_column_slice(f.solve(r).as_slice()),
        None => p.solve_gram(r),
    };
    let q_h = solve_h(p.load());
    let lq_h = p.load().dot(&q_h);

    let eval = |y: &DVector<f64>| {
        let (f, g) = j_alpha_parts(p, alpha, y);
        let lam = g.dot(&q) / lq;
        let r = &g - p.load() * lam;
        let kkt = r.dot(&p.solve_gram(&r)).max(0.0).sqrt();
        let lam_h = g.dot(&q_h) / lq_h;
        let d = solve_h(&g) - &q_h * lam_h;
        let decrease = (&g - p.load() * lam_h).dot(&d).max(0.0);
        let gnorm = p.dual_norm(&g);
        (f, g, lam, d, kkt, gnorm, decrease)
    };

    let (mut f, mut g, mut lam, mut d, mut kkt, mut gnorm, mut decrease) = eval(&y);
    let record = |y: &DVector<f64>, f: f64, lam: f64, kkt: f64, it: usize, ok: bool| RegPathRecord {
        alpha,
        psi: f,
        lambda_alpha: lam,
        y_alpha: y.clone(),
        kkt_residual: kkt,
        iterations: it,
        converged: ok,
    };
    let norm_a = p.norm_a();
    // g = Gᵀ W Π carries a rounding error of order ε·α‖a‖²‖y‖_Y; asking for less is futile
    let noise = |y: &DVector<f64>| GRAD_NOISE_FACTOR * f64::EPSILON * alpha * norm_a * norm_a * p.y_norm(y);
    let accept = |kkt: f64, gnorm: f64, y: &DVector<f64>| {
        kkt == 0.0 || kkt <= (opts.tol * gnorm.max(f64::MIN_POSITIVE)).max(noise(y))
    };
    if accept(kkt, gnorm, &y) {
        return Ok(record(&y, f, lam, kkt, 0, true));
    }

    let mut step = 1.0 / (alpha * norm_a * norm_a).max(f64::MIN_POSITIVE);
    let mut history = std::collections::VecDeque::with_capacity(GLL_MEMORY);
    history.push_back(f);
    let mut best = (f, y.clone(), lam, kkt);
    let mut best_at = 0;

    for it in 1..=opts.max_iter {
        let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = step;
        let mut trial;
        loop {
            trial = &y - &d * t;
            restore(&mut trial);
            let ft = j_alpha_parts(p, alpha, &trial).0;
            if ft <= f_ref - 1e-4 * t * decrease || t < 1e-300 {
                break;
            }
            t *= 0.5;
        }
        let s = &trial - &y;
        let (f_new, g_new, lam_new, d_new, kkt_new, gnorm_new, dec_new) = eval(&trial);
        let sy = s.dot(&(&g_new - &g));
        let ss = t * t * decrease;
        step = if sy > 0.0 { ss / sy } else { 2.0 * t };
        y = trial;
        (f, g, lam, d, kkt, gnorm, decrease) = (f_new, g_new, lam_new, d_new, kkt_new, gnorm_new, dec_new);
        if history.len() == GLL_MEMORY {
            history.pop_front();
        }
        history.push_back(f);
        if kkt < best.3 {
            best = (f, y.clone(), lam, kkt);
            best_at = it;
        }
        if accept(kkt, gnorm, &y) {
            return Ok(record(&y, f, lam, kkt, it, true));
        }
        if it - best_at > STALL_WINDOW {
            log::debug!("ψ({alpha}) stalled at kkt {:e}", best.3);
            let (bf, by, bl, bk) = best;
            return Err(Error::PsiNotConverged { best: Box::new(record(&by, bf, bl, bk, it, false)) });
        }
    }
    let (bf, by, bl, bk) = best;
    Err(Error::PsiNotConverged { best: Box::new(record(&by, bf, bl, bk, opts.max_iter, false)) })
}

/// Geometric schedule `α_k = α₀ ρ^k`, `k < steps`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub alpha0: f64,
    pub growth: f64,
    pub steps: usize,
    /// Stop early once `|ψ_k − ψ_{k−1}| ≤ stop_tol·max(1, |ψ_k|)`.
    pub stop_tol: Option<f64>,
}

impl AlphaSchedule {
    pub const DEFAULT_GROWTH: f64 = 4.0;
    pub const DEFAULT_STEPS: usize = 12;

    pub fn new(alpha0: f64, growth: f64, steps: usize) -> Self {
        AlphaSchedule { alpha0, growth, steps, stop_tol: None }
    }

    /// Picks `α₀` with `α₀·‖a‖·‖L‖_{Y*} / (Lᵀ M⁻¹ L)` equal to the smallest block radius.
    pub fn heuristic(p: &DiscreteSaddleProblem, growth: f64, steps: usize) -> Self {
        let r_min = p.blocks().iter().filter_map(|b| b.radius()).fold(f64::INFINITY, f64::min);
        let r_min = if r_min.is_finite() { r_min } else { 1.0 };
        let norm_a = p.norm_a();
        let alpha0 = if norm_a > 0.0 { r_min * p.load_dual_norm() / norm_a } else { 1.0 };
        AlphaSchedule::new(alpha0, growth, steps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::EmptySchedule);
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidSchedule(format!("α₀ must be positive, got {}", self.alpha0)));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidSchedule(format!("growth must exceed 1, got {}", self.growth)));
        }
        let last = self.alpha0 * self.growth.powi(self.steps as i32 - 1);
        if !last.is_finite() {
            return Err(Error::InvalidSchedule("schedule overflows".into()));
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.alpha0 * self.growth.powi(k as i32)).collect()
    }
}

/// Output of [`run_alpha_continuation`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegPath {
    pub records: Vec<RegPathRecord>,
}

impl RegPath {
    /// `max ψ(α)` over converged steps.
    pub fn best_lower_bound(&self) -> Option<f64> {
        self.records.iter().filter(|r| r.converged).map(|r| r.psi).reduce(f64::max)
    }

    pub fn last_converged(&self) -> Option<&RegPathRecord> {
        self.records.iter().rev().find(|r| r.converged)
    }

    /// Indices `k` with `ψ_k < ψ_{k−1} − slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<usize> {
        (1..self.records.len()).filter(|&k| self.records[k].psi < self.records[k - 1].psi - slack).collect()
    }

    /// Indices `k` with `λ_α` decreasing; informational only.
    pub fn lambda_decreases(&self) -> Vec<usize> {
        (1..self.records.len()).filter(|&k| self.records[k].lambda_alpha < self.records[k - 1].lambda_alpha).collect()
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.converged).count()
    }
}

/// Runs [`solve_psi`] along the schedule.
///
/// Sequential runs warm-start each step from the previous `y_α`; `parallel` solves the
/// steps independently. Steps that hit the iteration cap are kept with `converged = false`.
pub fn run_alpha_continuation(
    p: &DiscreteSaddleProblem,
    schedule: &AlphaSchedule,
    opts: &PsiOptions,
    parallel: bool,
) -> Result<RegPath> {
    schedule.validate()?;
    let alphas = schedule.alphas();
    let solve = |alpha: f64, warm: Option<&DVector<f64>>| match solve_psi(p, alpha, warm, opts) {
        Ok(r) => Ok(r),
        Err(Error::PsiNotConverged { best }) => {
            log::warn!("ψ(α = {alpha:e}) not converged (KKT residual {:e})", best.kkt_residual);
            Ok(*best)
        }
        Err(e) => Err(e),
    };
    let records = if parallel {
        alphas.par_iter().map(|&a| solve(a, None)).collect::<Result<Vec<_>>>()?
    } else {
        let mut records: Vec<RegPathRecord> = Vec::with_capacity(alphas.len());
        for &a in &alphas {
            let r = solve(a, records.last().map(|r| &r.y_alpha))?;
            let stop = match (schedule.stop_tol, records.last()) {
                (Some(tol), Some(prev)) => (r.psi - prev.psi).abs() <= tol * r.psi.abs().max(1.0),
                _ => false,
            };
            records.push(r);
            if stop {
                break;
            }
        }
        records
    };
    let path = RegPath { records };
    if !path.lambda_decreases().is_empty() {
        log::info!("λ_α not monotone at steps {:?}", path.lambda_decreases());
    }
    Ok(path)
}

/// Formats with 12 significant digits.
pub fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes `alpha,psi,lambda_alpha,kkt_residual,iterations`.
pub fn write_path_csv(path: &Path, records: &[RegPathRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["alpha", "psi", "lambda_alpha", "kkt_residual", "iterations"])?;
    for r in records {
        w.write_record([
            fmt12(r.alpha),
            fmt12(r.psi),
            fmt12(r.lambda_alpha),
            fmt12(r.kkt_residual),
            r.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated mirror of the CSV for gnuplot.
pub fn write_path_dat(path: &Path, records: &[RegPathRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# alpha psi lambda_alpha kkt_residual iterations")?;
    for r in records {
        writeln!(
            f,
            "{} {} {} {} {}",
            fmt12(r.alpha),
            fmt12(r.psi),
            fmt12(r.lambda_alpha),
            fmt12(r.kkt_residual),
            r.iterations
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::fixtures::{t1, t2};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_pi_alpha(&t1(), 1.0, &v(&[1.0])).unwrap()[0], 1.0);
        assert_eq!(project_pi_alpha(&t1(), 4.0, &v(&[1.0])).unwrap()[0], 2.0);
        assert_eq!(project_pi_alpha(&t2(), 3.0, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        assert!(project_pi_alpha(&t1(), 0.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn j_alpha_examples() {
        assert_eq!(eval_j_alpha(&t1(), 1.0, &v(&[1.0])).unwrap(), 0.5);
        assert_eq!(eval_j_alpha(&t1(), 4.0, &v(&[1.0])).unwrap(), 1.5);
        assert_eq!(grad_j_alpha(&t1(), 1.0, &v(&[1.0])).unwrap()[0], 1.0);
        assert_eq!(grad_j_alpha(&t2(), 2.0, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn psi_on_the_singleton_feasible_set() {
        // Π_4(1) = 2 balances λ_α L with λ_α = 2
        let r = solve_psi(&t1(), 4.0, None, &PsiOptions::default()).unwrap();
        assert_eq!((r.psi, r.lambda_alpha, r.y_alpha[0]), (1.5, 2.0, 1.0));
        let r = solve_psi(&t1(), 100.0, None, &PsiOptions::default()).unwrap();
        assert!((r.psi - 1.98).abs() < 1e-14);
    }

    #[test]
    fn psi_of_t2_approaches_one_from_below() {
        let r = solve_psi(&t2(), 1e4, None, &PsiOptions::default()).unwrap();
        assert!(r.converged && r.psi < 1.0 && r.psi > 0.999);
        assert!((p_load(&r.y_alpha) - 1.0).abs() < 1e-12);
    }

    fn p_load(y: &DVector<f64>) -> f64 {
        y[0]
    }

    #[test]
    fn t1_continuation_follows_closed_form() {
        let sched = AlphaSchedule::new(1.0, 2.0, 11);
        let path = run_alpha_continuation(&t1(), &sched, &PsiOptions::default(), false).unwrap();
        for r in &path.records {
            let expected = if r.alpha <= 2.0 { r.alpha / 2.0 } else { 2.0 - 2.0 / r.alpha };
            assert!((r.psi - expected).abs() < 1e-14, "α = {}", r.alpha);
        }
        assert!(path.monotonicity_violations(0.0).is_empty());
        assert!(path.best_lower_bound().unwrap() > 1.99);
    }

    #[test]
    fn schedule_validation() {
        assert!(matches!(AlphaSchedule::new(1.0, 4.0, 0).validate(), Err(Error::EmptySchedule)));
        assert!(matches!(AlphaSchedule::new(1.0, 1.0, 3).validate(), Err(Error::InvalidSchedule(_))));
        assert!(matches!(AlphaSchedule::new(-1.0, 2.0, 3).validate(), Err(Error::InvalidSchedule(_))));
        assert_eq!(AlphaSchedule::new(1.0, 4.0, 3).alphas(), vec![1.0, 4.0, 16.0]);
    }

    #[test]
    fn parallel_sweep_matches_sequential() {
        let sched = AlphaSchedule::new(0.5, 4.0, 6);
        let a = run_alpha_continuation(&t2(), &sched, &PsiOptions::default(), false).unwrap();
        let b = run_alpha_continuation(&t2(), &sched, &PsiOptions::default(), true).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert!((ra.psi - rb.psi).abs() < 1e-8 * ra.psi.abs().max(1.0));
        }
    }

    #[test]
    fn path_files_have_expected_columns() {
        let dir = tempfile::tempdir().unwrap();
        let sched = AlphaSchedule::new(1.0, 4.0, 3);
        let path = run_alpha_continuation(&t1(), &sched, &PsiOptions::default(), false).unwrap();
        write_path_csv(&dir.path().join("p.csv"), &path.records).unwrap();
        write_path_dat(&dir.path().join("p.dat"), &path.records).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
        assert!(csv.starts_with("alpha,psi,lambda_alpha,kkt_residual,iterations\n"));
        assert_eq!(csv.lines().count(), 4);
        let dat = std::fs::read_to_string(dir.path().join("p.dat")).unwrap();
        assert_eq!(dat.lines().nth(1).unwrap().split_whitespace().count(), 5);
    }
}
