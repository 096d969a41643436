//! Lower and upper bounds for the critical load factor of convex inf-sup problems
//!
//! The problems handled here have the form
//!
//! ```text
//! λ* = sup_{x ∈ P} inf_{L(y)=1} a(x, y)   ≤   inf_{L(y)=1} sup_{x ∈ P} a(x, y) = ζ*
//! ```
//!
//! where `a(x, y) = ⟨x, G y⟩_X` is a bilinear pairing, `L` a load functional and `P` a
//! block-structured convex set of generalized stresses. The crate provides
//!
//! * [`saddle`]: the discrete problem, the support functional `J`, the residual
//!   functions `Φ_λ` / `φ(λ)` and a bisection for `ζ*`;
//! * [`regularizer`]: the regularized functional `J_α`, the lower-bound path `ψ(α)`;
//! * [`certificates`]: computable upper bounds (majorants) for `ζ*`;
//! * [`mech`]: finite element front-ends (von Mises limit analysis, delamination);
//! * [`oracle`]: brute-force reference computations for tiny instances;
//! * [`report`]: the end-to-end pipeline and its output files.

pub mod certificates;
pub mod error;
pub mod ext;
pub mod mech;
pub mod oracle;
pub mod regularizer;
pub mod report;
pub mod saddle;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use saddle::{AdmissibleBlock, BlockKind, DiscreteSaddleProblem, SplitRole};
