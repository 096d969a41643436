//! Mechanical models and their JSON description.
//!
//! ```json
//! { "kind": "delamination", "gamma": 1.0,
//!   "mesh": {"rect": {"nx": 8, "ny": 8, "width": 1.0, "height": 1.0}},
//!   "body_force": [0.0, 0.0],
//!   "tractions": {"GAMMA_F": [0.0, 0.5]} }
//! ```
//!
//! `mesh` is either `{"file": "path"}` (relative to the model file) or `{"rect": {...}}`
//! with an optional `tags` object overriding the side tags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mesh::{generate_rect_mesh_tagged, BoundaryTag, Mesh2D, RectTags};
use super::{assemble_delamination, assemble_von_mises, AssembledModel};
use crate::error::{Error, Result};
use crate::ext::ExtReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    VonMises,
    Delamination,
}

/// Mesh, boundary tags and material data. Velocities are P1.
#[derive(Clone, Debug)]
pub struct FemModel {
    pub mesh: Mesh2D,
    pub kind: ModelKind,
    /// Yield stress (von Mises) or delamination threshold.
    pub gamma: f64,
    /// Constant body force.
    pub body_force: [f64; 2],
    /// Constant surface force per tag.
    pub tractions: Vec<(BoundaryTag, [f64; 2])>,
    /// Von Mises only: fix the whole boundary (`Γ₀ = ∂Ω`), whatever the tags.
    pub pure_dirichlet: bool,
}

impl FemModel {
    pub fn new(mesh: Mesh2D, kind: ModelKind, gamma: f64) -> Self {
        FemModel { mesh, kind, gamma, body_force: [0.0; 2], tractions: Vec::new(), pure_dirichlet: false }
    }

    pub fn with_body_force(mut self, f: [f64; 2]) -> Self {
        self.body_force = f;
        self
    }

    pub fn with_traction(mut self, tag: BoundaryTag, f: [f64; 2]) -> Self {
        self.tractions.push((tag, f));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Model(format!("γ must be positive, got {}", self.gamma)));
        }
        if !self.body_force.iter().chain(self.tractions.iter().flat_map(|(_, f)| f.iter())).all(|v| v.is_finite()) {
            return Err(Error::Model("loads must be finite".into()));
        }
        self.mesh.validate()
    }

    pub fn assemble(&self) -> Result<AssembledModel> {
        match self.kind {
            ModelKind::VonMises => assemble_von_mises(self),
            ModelKind::Delamination => assemble_delamination(self),
        }
    }

    /// `∫ F₂ + Σ ∫ f₂` over all loaded edges.
    pub fn total_vertical_load(&self) -> f64 {
        self.body_force[1] * self.mesh.total_area()
            + self.tractions.iter().map(|(tag, f)| f[1] * self.mesh.tagged_length(*tag)).sum::<f64>()
    }

    /// Closed-form limit load of the delamination model.
    pub fn delamination_closed_form(&self) -> Result<ExtReal> {
        super::delamination_closed_form(
            self.gamma,
            self.mesh.tagged_length(BoundaryTag::GammaB),
            self.total_vertical_load(),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    File(String),
    Rect {
        nx: usize,
        ny: usize,
        width: f64,
        height: f64,
        #[serde(default)]
        tags: Option<RectTags>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub gamma: f64,
    pub mesh: MeshSource,
    #[serde(default)]
    pub body_force: [f64; 2],
    #[serde(default)]
    pub tractions: BTreeMap<BoundaryTag, [f64; 2]>,
    #[serde(default)]
    pub pure_dirichlet: bool,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    /// Builds the model; mesh file paths are resolved against `base_dir`.
    pub fn into_model(self, base_dir: &Path) -> Result<FemModel> {
        let mesh = match &self.mesh {
            MeshSource::File(f) => {
                let path = base_dir.join(f);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| Error::Mesh(format!("{}: {e}", path.display())))?;
                Mesh2D::parse(&text)?
            }
            MeshSource::Rect { nx, ny, width, height, tags } => {
                generate_rect_mesh_tagged(*nx, *ny, *width, *height, tags.unwrap_or_default())?
            }
        };
        let model = FemModel {
            mesh,
            kind: self.kind,
            gamma: self.gamma,
            body_force: self.body_force,
            tractions: self.tractions.into_iter().collect(),
            pure_dirichlet: self.pure_dirichlet,
        };
        model.validate()?;
        Ok(model)
    }
}

impl PartialOrd for BoundaryTag {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BoundaryTag {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_str().cmp(other.as_str())
    }
}
