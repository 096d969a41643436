//! The solve pipeline: α-continuation, bisection for `ζ*` and the majorant.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certificates::{
    estimate_c_star_discrete, majorants_along_path, rho_a, CStar, CStarProvenance, MajorantCertificate,
};
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::regularizer::{fmt12, run_alpha_continuation, AlphaSchedule, PsiOptions, RegPath};
use crate::saddle::{
    bisect_zeta, detect_null_blocks, BisectOptions, DiscreteSaddleProblem, NullBlockReport, ZetaEstimate,
};

/// Knobs of [`solve`]; `None` fields take problem-scaled defaults.
#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub tol_phi: Option<f64>,
    pub tol_lambda: Option<f64>,
    pub alpha0: Option<f64>,
    pub growth: Option<f64>,
    pub steps: Option<usize>,
    pub continuum_c_star: Option<f64>,
    pub parallel_sweep: bool,
    pub psi: PsiOptions,
}

impl SolveOptions {
    pub fn schedule(&self, p: &DiscreteSaddleProblem) -> AlphaSchedule {
        let growth = self.growth.unwrap_or(AlphaSchedule::DEFAULT_GROWTH);
        let steps = self.steps.unwrap_or(AlphaSchedule::DEFAULT_STEPS);
        let mut s = AlphaSchedule::heuristic(p, growth, steps);
        if let Some(a) = self.alpha0 {
            s.alpha0 = a;
        }
        s
    }

    pub fn bisect_options(&self) -> BisectOptions {
        let mut b = BisectOptions { tol_phi: self.tol_phi, ..Default::default() };
        if let Some(t) = self.tol_lambda {
            b.tol_lambda = t;
        }
        b
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_phi: f64,
    pub tol_lambda: f64,
    /// KKT acceptance for `ψ(α)`, relative to the gradient's dual norm.
    pub tol_kkt_rel: f64,
}

/// Lower and upper bounds with their provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Best `ψ(α)` over converged steps.
    pub lower: Option<f64>,
    /// Best admissible majorant, `+∞` when none is admissible.
    pub upper: ExtReal,
    pub zeta_bisect: ExtReal,
    pub zeta: ZetaEstimate,
    pub tolerances: Tolerances,
    pub schedule: AlphaSchedule,
    /// Index into the path of the record that gave `upper`.
    pub majorant_step: Option<usize>,
    pub majorant: Option<MajorantCertificate>,
    pub null_blocks: NullBlockReport,
    /// Steps of the sweep where `ψ` decreased by more than the slack.
    pub monotonicity_violations: Vec<usize>,
    pub unconverged_steps: usize,
    /// `lower ≤ zeta_bisect + tol_lambda` and `lower ≤ upper`.
    pub consistent: bool,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_hash: Option<String>,
}

/// Slack for flagging decreases of `ψ` along a sweep.
pub const MONOTONE_SLACK: f64 = 1e-8;

pub fn run_sweep(p: &DiscreteSaddleProblem, opts: &SolveOptions) -> Result<(AlphaSchedule, RegPath)> {
    let schedule = opts.schedule(p);
    let path = run_alpha_continuation(p, &schedule, &opts.psi, opts.parallel_sweep)?;
    Ok((schedule, path))
}

/// Runs the continuation, the bisection and the majorant on every converged `y_α`.
pub fn solve(
    p: &DiscreteSaddleProblem,
    opts: &SolveOptions,
    problem_hash: Option<String>,
) -> Result<(BoundsReport, RegPath)> {
    let (schedule, path) = run_sweep(p, opts)?;
    let mut warnings = Vec::new();
    let lower = path.best_lower_bound();
    if path.failures() > 0 {
        warnings.push(format!("{} α-steps did not converge and are excluded from the lower bound", path.failures()));
    }

    let bisect = opts.bisect_options();
    let seed = lower.filter(|l| *l > 0.0).unwrap_or(1.0);
    let zeta = bisect_zeta(p, seed, &bisect)?;
    if zeta.capped {
        warnings.push("ζ* bisection reached the cap: unbounded or cap too low".into());
    }
    if zeta.unconverged > 0 {
        warnings.push(format!("{} φ evaluations hit the iteration cap", zeta.unconverged));
    }

    let null_blocks = detect_null_blocks(p);
    let c_star = match opts.continuum_c_star {
        Some(c) => Some(CStar::continuum(c)?),
        None => match estimate_c_star_discrete(p) {
            Ok(c) => Some(c),
            Err(Error::InfSupDegenerate) => {
                warnings.push(Error::InfSupDegenerate.to_string());
                None
            }
            Err(e) => return Err(e),
        },
    };
    if c_star.is_some_and(|c| c.provenance == CStarProvenance::Discrete) {
        warnings.push("C* is a discrete estimate; the upper bound is not certified for the continuum problem".into());
    }

    let (mut majorant, mut majorant_step) = (None, None);
    if let Some(c) = c_star {
        let converged: Vec<_> = path.records.iter().filter(|r| r.converged).cloned().collect();
        let (certs, best) = majorants_along_path(p, &converged, c, rho_a(p))?;
        if let Some(i) = best {
            let mut cert = certs[i].clone();
            cert.problem_hash = problem_hash.clone();
            majorant_step = path.records.iter().position(|r| r.alpha == converged[i].alpha);
            majorant = Some(cert);
        } else {
            warnings.push("no α-step gave an admissible majorant".into());
        }
    }
    let upper = majorant.as_ref().and_then(|m| m.bound.value()).map_or(ExtReal::PosInfinity, ExtReal::Finite);

    let mut consistent = true;
    if let Some(l) = lower {
        if let ExtReal::Finite(z) = zeta.value {
            consistent &= l <= z + bisect.tol_lambda;
        }
        if let ExtReal::Finite(u) = upper {
            consistent &= l <= u;
        }
    }
    if !consistent {
        warnings.push("bounds are inconsistent: lower exceeds ζ* estimate or upper bound".into());
    }

    let report = BoundsReport {
        lower,
        upper,
        zeta_bisect: zeta.value,
        tolerances: Tolerances { tol_phi: zeta.tol_phi, tol_lambda: zeta.tol_lambda, tol_kkt_rel: opts.psi.tol },
        zeta,
        schedule,
        majorant_step,
        majorant,
        null_blocks,
        monotonicity_violations: path.monotonicity_violations(MONOTONE_SLACK),
        unconverged_steps: path.failures(),
        consistent,
        warnings,
        problem_hash,
    };
    Ok((report, path))
}

impl BoundsReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Human-readable summary, 12 significant digits; warnings are left to the caller.
    pub fn summary(&self) -> String {
        let ext = |v: ExtReal| v.finite().map_or_else(|| "+inf".to_string(), fmt12);
        let mut s = String::new();
        s += &format!("lower bound  (max psi)   : {}\n", self.lower.map_or_else(|| "none".into(), fmt12));
        s += &format!("zeta* (bisection)        : {}\n", ext(self.zeta_bisect));
        s += &format!("upper bound  (majorant)  : {}\n", ext(self.upper));
        if let Some(m) = &self.majorant {
            s += &format!(
                "  C* = {} ({:?}), rho_A = {}, |a| = {}, |L| = {}\n",
                fmt12(m.c_star.value),
                m.c_star.provenance,
                fmt12(m.rho_a),
                fmt12(m.norm_a),
                fmt12(m.norm_l_dual)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::fixtures::{t1, t2};

    #[test]
    fn t1_bounds_pinch_two() {
        let (r, _) = solve(&t1(), &SolveOptions::default(), None).unwrap();
        assert!((r.lower.unwrap() - 2.0).abs() < 1e-5);
        assert!((r.upper.to_f64() - 2.0).abs() < 1e-12);
        assert!((r.zeta_bisect.to_f64() - 2.0).abs() < 1e-6);
        assert!(r.consistent);
    }

    #[test]
    fn t2_bounds_bracket_one() {
        let (r, _) = solve(&t2(), &SolveOptions::default(), None).unwrap();
        let (l, u, z) = (r.lower.unwrap(), r.upper.to_f64(), r.zeta_bisect.to_f64());
        assert!(l <= 1.0 && l > 0.999, "{l}");
        assert!(u >= 1.0 - 1e-12 && u < 1.001, "{u}");
        assert!((z - 1.0).abs() < 1e-6);
        assert_eq!(r.majorant.unwrap().c_star.provenance, CStarProvenance::Discrete);
    }
}
