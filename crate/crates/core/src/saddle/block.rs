//! Pointwise admissible sets and their closed-form operations.
//!
//! Every block acts on a contiguous range of X-coordinates. Symmetric tensors in a
//! [`BlockKind::DeviatoricBall`] are stored in orthonormal (Mandel) coordinates: the
//! `d` diagonal entries first, then the off-diagonal entries scaled by `√2`, so the
//! Euclidean inner product of two coordinate vectors equals `σ : ε`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ext::ExtReal;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// Euclidean ball `|x| ≤ radius`.
    Ball { radius: f64 },
    /// Symmetric `dim × dim` tensors with `|x^D| ≤ radius`, trace unconstrained.
    DeviatoricBall { radius: f64, dim: usize },
    /// Box `lo ≤ x_i ≤ hi` on every coordinate.
    Interval { lo: f64, hi: f64 },
    /// Unconstrained linear subspace.
    Free,
    /// Pinned to zero.
    Zero,
}

/// Contribution of a block to the split `P = P_A + P_C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitRole {
    /// Bounded part (`P_A`).
    Bounded,
    /// Closed convex cone (`P_C`).
    Cone,
    /// Bounded ball plus the trace line (deviatoric balls).
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleBlock {
    pub start: usize,
    pub len: usize,
    pub kind: BlockKind,
}

/// Number of Mandel coordinates of a symmetric `dim × dim` tensor.
pub fn mandel_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl AdmissibleBlock {
    pub fn new(start: usize, len: usize, kind: BlockKind) -> Self {
        Self { start, len, kind }
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    pub fn split_role(&self) -> SplitRole {
        match self.kind {
            BlockKind::Ball { .. } | BlockKind::Interval { .. } => SplitRole::Bounded,
            BlockKind::Free | BlockKind::Zero => SplitRole::Cone,
            BlockKind::DeviatoricBall { .. } => SplitRole::Mixed,
        }
    }

    /// Checks the block parameters; returns a message on failure.
    pub fn validate(&self) -> Result<(), String> {
        if self.len == 0 {
            return Err("empty block".into());
        }
        match self.kind {
            BlockKind::Ball { radius } if !(radius > 0.0 && radius.is_finite()) => {
                Err(format!("ball radius must be positive, got {radius}"))
            }
            BlockKind::DeviatoricBall { radius, dim } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    Err(format!("deviatoric ball radius must be positive, got {radius}"))
                } else if !(2..=3).contains(&dim) {
                    Err(format!("deviatoric ball dimension must be 2 or 3, got {dim}"))
                } else if self.len != mandel_len(dim) {
                    Err(format!(
                        "deviatoric ball of dimension {dim} needs {} coordinates, got {}",
                        mandel_len(dim),
                        self.len
                    ))
                } else {
                    Ok(())
                }
            }
            BlockKind::Interval { lo, hi } if !(lo <= 0.0 && 0.0 <= hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(format!("interval must satisfy lo ≤ 0 ≤ hi, got [{lo}, {hi}]"))
            }
            _ => Ok(()),
        }
    }

    /// True when the block set is bounded (all of it lies in `P_A`).
    pub fn is_bounded(&self) -> bool {
        self.split_role() == SplitRole::Bounded || self.kind == BlockKind::Zero
    }

    /// Whether the block needs equal X-weights on all of its coordinates for its
    /// projection to be the weighted one.
    pub fn needs_uniform_weights(&self) -> bool {
        matches!(self.kind, BlockKind::Ball { .. } | BlockKind::DeviatoricBall { .. })
    }

    /// Euclidean projection of `v` onto the block set.
    pub fn project(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.len);
        match self.kind {
            BlockKind::Ball { radius } => {
                let n = norm(v);
                let s = if n > radius { radius / n } else { 1.0 };
                out.iter_mut().zip(v).for_each(|(o, a)| *o = s * a);
            }
            BlockKind::DeviatoricBall { radius, dim } => {
                out.copy_from_slice(v);
                let mean = v[..dim].iter().sum::<f64>() / dim as f64;
                out[..dim].iter_mut().for_each(|a| *a -= mean);
                let n = norm(out);
                let s = if n > radius { radius / n } else { 1.0 };
                out.iter_mut().for_each(|a| *a *= s);
                out[..dim].iter_mut().for_each(|a| *a += mean);
            }
            BlockKind::Interval { lo, hi } => {
                out.iter_mut().zip(v).for_each(|(o, a)| *o = a.clamp(lo, hi));
            }
            BlockKind::Free => out.copy_from_slice(v),
            BlockKind::Zero => out.fill(0.0),
        }
    }

    /// `sup_{x ∈ block} Σ w_i x_i g_i`.
    ///
    /// Cone directions with a component of `g` above `tol_dom` give `+∞`.
    pub fn support(&self, g: &[f64], w: &[f64], tol_dom: f64) -> ExtReal {
        match self.kind {
            BlockKind::Ball { .. } | BlockKind::Interval { .. } => ExtReal::Finite(self.support_bounded(g, w)),
            BlockKind::DeviatoricBall { radius, dim } => {
                let trace_coef = g[..dim].iter().sum::<f64>() / (dim as f64).sqrt();
                if trace_coef.abs() > tol_dom {
                    return ExtReal::PosInfinity;
                }
                let mean = g[..dim].iter().sum::<f64>() / dim as f64;
                let dev: f64 = g
                    .iter()
                    .zip(w)
                    .enumerate()
                    .map(|(i, (gi, wi))| {
                        let d = if i < dim { gi - mean } else { *gi };
                        (wi * d).powi(2)
                    })
                    .sum();
                ExtReal::Finite(radius * dev.sqrt())
            }
            BlockKind::Free => {
                if g.iter().any(|gi| gi.abs() > tol_dom) {
                    ExtReal::PosInfinity
                } else {
                    ExtReal::Finite(0.0)
                }
            }
            BlockKind::Zero => ExtReal::Finite(0.0),
        }
    }

    /// Support function over the bounded part `P_A` of this block.
    ///
    /// For deviatoric balls the bounded part is the full ball `|x| ≤ radius`.
    pub fn support_bounded(&self, g: &[f64], w: &[f64]) -> f64 {
        match self.kind {
            BlockKind::Ball { radius } | BlockKind::DeviatoricBall { radius, .. } => {
                radius * g.iter().zip(w).map(|(gi, wi)| (wi * gi).powi(2)).sum::<f64>().sqrt()
            }
            BlockKind::Interval { lo, hi } => {
                g.iter().zip(w).map(|(gi, wi)| wi * if *gi > 0.0 { hi * gi } else { lo * gi }).sum()
            }
            BlockKind::Free | BlockKind::Zero => 0.0,
        }
    }

    /// Euclidean projection of `g` onto the cone part of the block.
    pub fn cone_component(&self, g: &[f64], out: &mut [f64]) {
        match self.kind {
            BlockKind::Free => out.copy_from_slice(g),
            BlockKind::DeviatoricBall { dim, .. } => {
                out.fill(0.0);
                let mean = g[..dim].iter().sum::<f64>() / dim as f64;
                out[..dim].fill(mean);
            }
            _ => out.fill(0.0),
        }
    }

    /// `max_{x ∈ P_A-part} Σ w_i x_i²`.
    pub fn bounded_radius_sq(&self, w: &[f64]) -> f64 {
        match self.kind {
            BlockKind::Ball { radius } | BlockKind::DeviatoricBall { radius, .. } => {
                let wmax = w.iter().cloned().fold(0.0, f64::max);
                radius * radius * wmax
            }
            BlockKind::Interval { lo, hi } => w.iter().map(|wi| wi * lo.powi(2).max(hi.powi(2))).sum(),
            BlockKind::Free | BlockKind::Zero => 0.0,
        }
    }

    /// Smallest ball/interval radius, if the block has a bounded part.
    pub fn radius(&self) -> Option<f64> {
        match self.kind {
            BlockKind::Ball { radius } | BlockKind::DeviatoricBall { radius, .. } => Some(radius),
            BlockKind::Interval { lo, hi } => {
                let r = (-lo).min(hi);
                if r > 0.0 {
                    Some(r)
                } else {
                    Some((-lo).max(hi)).filter(|r| *r > 0.0)
                }
            }
            _ => None,
        }
    }

    /// Orthonormal local basis of the cone part (a linear subspace for every kind).
    pub fn cone_basis(&self) -> Vec<Vec<f64>> {
        match self.kind {
            BlockKind::Free => (0..self.len)
                .map(|i| {
                    let mut e = vec![0.0; self.len];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            BlockKind::DeviatoricBall { dim, .. } => {
                let mut e = vec![0.0; self.len];
                let s = 1.0 / (dim as f64).sqrt();
                e[..dim].fill(s);
                vec![e]
            }
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(kind: BlockKind, len: usize) -> AdmissibleBlock {
        AdmissibleBlock::new(0, len, kind)
    }

    #[test]
    fn ball_projection_clamps_radially() {
        let b = block(BlockKind::Ball { radius: 2.0 }, 2);
        let mut out = [0.0; 2];
        b.project(&[3.0, 4.0], &mut out);
        assert!((out[0] - 1.2).abs() < 1e-15 && (out[1] - 1.6).abs() < 1e-15);
        b.project(&[0.5, -0.5], &mut out);
        assert_eq!(out, [0.5, -0.5]);
    }

    #[test]
    fn deviatoric_projection_keeps_trace() {
        let b = block(BlockKind::DeviatoricBall { radius: 1.0, dim: 2 }, 3);
        let v = [5.0, 1.0, 3.0];
        let mut out = [0.0; 3];
        b.project(&v, &mut out);
        assert!(((out[0] + out[1]) - (v[0] + v[1])).abs() < 1e-14);
        let m = 0.5 * (out[0] + out[1]);
        let dev = ((out[0] - m).powi(2) + (out[1] - m).powi(2) + out[2].powi(2)).sqrt();
        assert!((dev - 1.0).abs() < 1e-14);
    }

    #[test]
    fn support_of_free_block() {
        let b = block(BlockKind::Free, 2);
        assert_eq!(b.support(&[0.0, 0.0], &[1.0, 1.0], 0.0), ExtReal::Finite(0.0));
        assert_eq!(b.support(&[0.0, 0.1], &[1.0, 1.0], 1e-10), ExtReal::PosInfinity);
    }

    #[test]
    fn support_of_interval() {
        let b = block(BlockKind::Interval { lo: -1.0, hi: 3.0 }, 2);
        let s = b.support(&[2.0, -4.0], &[1.0, 0.5], 0.0);
        assert_eq!(s, ExtReal::Finite(3.0 * 2.0 + 0.5 * 4.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(block(BlockKind::Ball { radius: 0.0 }, 1).validate().is_err());
        assert!(block(BlockKind::Interval { lo: 0.5, hi: 1.0 }, 1).validate().is_err());
        assert!(block(BlockKind::DeviatoricBall { radius: 1.0, dim: 2 }, 4).validate().is_err());
        assert!(block(BlockKind::DeviatoricBall { radius: 1.0, dim: 3 }, 6).validate().is_ok());
    }
}
