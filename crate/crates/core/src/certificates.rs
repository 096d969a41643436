//! Computable upper bounds for `ζ*`.
//!
//! For any `y` with `L(y) > C*·‖Π_C y‖_X·‖L‖_{Y*}`,
//!
//! ```text
//! ζ* ≤ (J_A(y) + ρ_A C* ‖a‖ ‖Π_C y‖_X) / (L(y) − C* ‖Π_C y‖_X ‖L‖_{Y*}).
//! ```

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::regularizer::RegPathRecord;
use crate::saddle::null::{cone_columns, cone_operator, TOL_NULL_REL};
use crate::saddle::{operator_norm, DiscreteSaddleProblem};

fn check_y(p: &DiscreteSaddleProblem, y: &DVector<f64>) -> Result<()> {
    if y.len() != p.n_y() {
        return Err(Error::DimensionMismatch { what: "y", expected: p.n_y(), got: y.len() });
    }
    Ok(())
}

/// Support function of the bounded part `P_A`; cone parts contribute nothing.
pub fn eval_j_a(p: &DiscreteSaddleProblem, y: &DVector<f64>) -> Result<f64> {
    check_y(p, y)?;
    let g = p.apply_g(y);
    let w = p.x_weights().as_slice();
    Ok(p.blocks()
        .iter()
        .map(|b| {
            let r = b.range();
            b.support_bounded(&g.as_slice()[r.clone()], &w[r])
        })
        .sum())
}

/// `‖Π_C y‖_X`: the `W`-norm of the projection of `Gy` onto the cone parts.
pub fn eval_pic_norm(p: &DiscreteSaddleProblem, y: &DVector<f64>) -> Result<f64> {
    check_y(p, y)?;
    let g = p.apply_g(y);
    let mut cone = DVector::zeros(p.n_x());
    for b in p.blocks() {
        let r = b.range();
        b.cone_component(&g.as_slice()[r.clone()], &mut cone.as_mut_slice()[r]);
    }
    Ok(p.x_norm(&cone))
}

/// `‖a‖` by power iteration, failing if it does not settle.
pub fn estimate_norm_a(p: &DiscreteSaddleProblem) -> Result<f64> {
    operator_norm(p, 1e-10, 100_000).map_err(|e| Error::NotConverged { what: "power iteration", iterations: e.0 })
}

/// `‖L‖_{Y*} = (Lᵀ M⁻¹ L)^{1/2}`.
pub fn estimate_norm_l_dual(p: &DiscreteSaddleProblem) -> f64 {
    p.load_dual_norm()
}

/// `max_{x ∈ P_A} ‖x‖_X`, exact for the product of the block sets.
pub fn rho_a(p: &DiscreteSaddleProblem) -> f64 {
    let w = p.x_weights().as_slice();
    p.blocks().iter().map(|b| b.bounded_radius_sq(&w[b.range()])).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CStarProvenance {
    /// Supplied by the user for the continuum problem.
    Continuum,
    /// Smallest nonzero singular value of the discrete operator; not a bound for the
    /// continuum constant.
    Discrete,
    /// `P` has no cone part, so `‖Π_C y‖ = 0` and the constant is never used.
    NotRequired,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CStar {
    pub value: f64,
    pub provenance: CStarProvenance,
}

impl CStar {
    pub fn continuum(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidProblem(format!("continuum C* must be positive, got {value}")));
        }
        Ok(CStar { value, provenance: CStarProvenance::Continuum })
    }
}

/// `C* = 1/c*` with `c*` the smallest nonzero singular value of `M^{-1/2} Gᵀ W^{1/2} E_C`.
///
/// Directions in the null space are the quotient directions and are skipped.
pub fn estimate_c_star_discrete(p: &DiscreteSaddleProblem) -> Result<CStar> {
    let cols = cone_columns(p);
    if cols.is_empty() {
        return Ok(CStar { value: 0.0, provenance: CStarProvenance::NotRequired });
    }
    let k = cone_operator(p, &cols);
    let sv = k.singular_values();
    let sigma_max = sv.max();
    if !(sigma_max > 0.0) {
        return Err(Error::InfSupDegenerate);
    }
    let thr = TOL_NULL_REL * sigma_max;
    let c_min = sv.iter().copied().filter(|s| *s > thr).fold(f64::INFINITY, f64::min);
    Ok(CStar { value: 1.0 / c_min, provenance: CStarProvenance::Discrete })
}

/// The bound value or the failure of the admissibility condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MajorantBound {
    Value(f64),
    Inadmissible,
}

impl MajorantBound {
    pub fn value(self) -> Option<f64> {
        match self {
            MajorantBound::Value(v) => Some(v),
            MajorantBound::Inadmissible => None,
        }
    }
}

impl fmt::Display for MajorantBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MajorantBound::Value(v) => write!(f, "{v:.11e}"),
            MajorantBound::Inadmissible => f.write_str("inadmissible"),
        }
    }
}

impl Serialize for MajorantBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MajorantBound::Value(v) => s.serialize_f64(*v),
            MajorantBound::Inadmissible => s.serialize_str("inadmissible"),
        }
    }
}

impl<'de> Deserialize<'de> for MajorantBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(MajorantBound::Value(v)),
            Raw::Str(s) if s == "inadmissible" => Ok(MajorantBound::Inadmissible),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("unexpected bound `{s}`"))),
        }
    }
}

/// All ingredients of the majorant and its value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorantCertificate {
    pub y_used: Vec<f64>,
    pub load_value: f64,
    #[serde(rename = "J_A_value")]
    pub j_a_value: f64,
    #[serde(rename = "piC_norm")]
    pub pic_norm: f64,
    #[serde(rename = "C_star")]
    pub c_star: CStar,
    #[serde(rename = "rho_A")]
    pub rho_a: f64,
    pub norm_a: f64,
    #[serde(rename = "norm_L_dual")]
    pub norm_l_dual: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub bound: MajorantBound,
    /// The split satisfies `P = P_A + P_C`, so `J = J_A` on `dom J`.
    pub exact_split: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_hash: Option<String>,
}

/// The majorant formula on raw ingredients.
pub fn majorant_formula(
    j_a: f64,
    pic: f64,
    c_star: f64,
    rho_a: f64,
    norm_a: f64,
    load_value: f64,
    norm_l_dual: f64,
) -> (f64, f64, MajorantBound) {
    let numerator = j_a + rho_a * c_star * norm_a * pic;
    let denominator = load_value - c_star * pic * norm_l_dual;
    let bound =
        if denominator > 0.0 { MajorantBound::Value(numerator / denominator) } else { MajorantBound::Inadmissible };
    (numerator, denominator, bound)
}

impl MajorantCertificate {
    /// Recomputes the bound from the stored ingredients.
    pub fn recompute(&self) -> MajorantBound {
        majorant_formula(
            self.j_a_value,
            self.pic_norm,
            self.c_star.value,
            self.rho_a,
            self.norm_a,
            self.load_value,
            self.norm_l_dual,
        )
        .2
    }
}

/// Evaluates the majorant at `y`. Inadmissible `y` give [`MajorantBound::Inadmissible`].
pub fn compute_majorant(
    p: &DiscreteSaddleProblem,
    y: &DVector<f64>,
    c_star: CStar,
    rho_a: f64,
) -> Result<MajorantCertificate> {
    if !(c_star.value >= 0.0 && c_star.value.is_finite()) {
        return Err(Error::InvalidProblem(format!("C* must be finite and nonnegative, got {}", c_star.value)));
    }
    let j_a = eval_j_a(p, y)?;
    let pic = eval_pic_norm(p, y)?;
    let norm_a = p.norm_a();
    let norm_l = p.load_dual_norm();
    let load_value = p.load_value(y);
    let (numerator, denominator, bound) = majorant_formula(j_a, pic, c_star.value, rho_a, norm_a, load_value, norm_l);
    Ok(MajorantCertificate {
        y_used: y.iter().copied().collect(),
        load_value,
        j_a_value: j_a,
        pic_norm: pic,
        c_star,
        rho_a,
        norm_a,
        norm_l_dual: norm_l,
        numerator,
        denominator,
        bound,
        exact_split: true,
        problem_hash: None,
    })
}

/// Evaluates the majorant at every record's `y_α` and returns all certificates with the
/// index of the smallest admissible bound.
pub fn majorants_along_path(
    p: &DiscreteSaddleProblem,
    records: &[RegPathRecord],
    c_star: CStar,
    rho_a: f64,
) -> Result<(Vec<MajorantCertificate>, Option<usize>)> {
    let certs = records.iter().map(|r| compute_majorant(p, &r.y_alpha, c_star, rho_a)).collect::<Result<Vec<_>>>()?;
    let best = certs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.bound.value().map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok((certs, best))
}
