//! Triangle meshes with tagged boundary edges.
//!
//! Mesh files are plain text with three sections:
//!
//! ```text
//! # comment
//! nodes
//! 1 0.0 0.0
//! ...
//! triangles
//! 1 1 2 3
//! edges
//! 1 1 2 GAMMA_B
//! ```

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    #[serde(rename = "GAMMA_0")]
    Gamma0,
    #[serde(rename = "GAMMA_F")]
    GammaF,
    #[serde(rename = "GAMMA_T")]
    GammaT,
    #[serde(rename = "GAMMA_L")]
    GammaL,
    #[serde(rename = "GAMMA_B")]
    GammaB,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] =
        [BoundaryTag::Gamma0, BoundaryTag::GammaF, BoundaryTag::GammaT, BoundaryTag::GammaL, BoundaryTag::GammaB];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Gamma0 => "GAMMA_0",
            BoundaryTag::GammaF => "GAMMA_F",
            BoundaryTag::GammaT => "GAMMA_T",
            BoundaryTag::GammaL => "GAMMA_L",
            BoundaryTag::GammaB => "GAMMA_B",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundaryTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Mesh(format!("unknown boundary tag `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// A conforming triangulation with counterclockwise triangles and tagged boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mesh2D {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<BoundaryEdge>,
}

/// Tags for the four sides of a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectTags {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl Default for RectTags {
    fn default() -> Self {
        RectTags {
            left: BoundaryTag::GammaL,
            right: BoundaryTag::GammaT,
            bottom: BoundaryTag::GammaB,
            top: BoundaryTag::GammaF,
        }
    }
}

/// Structured mesh of `[0, width] × [0, height]` with `2·nx·ny` triangles; the diagonal
/// direction alternates in a checkerboard pattern.
pub fn generate_rect_mesh(nx: usize, ny: usize, width: f64, height: f64) -> Result<Mesh2D> {
    generate_rect_mesh_tagged(nx, ny, width, height, RectTags::default())
}

pub fn generate_rect_mesh_tagged(nx: usize, ny: usize, width: f64, height: f64, tags: RectTags) -> Result<Mesh2D> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh(format!("rectangle needs nx, ny ≥ 1, got {nx} × {ny}")));
    }
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::Mesh(format!("rectangle needs positive size, got {width} × {height}")));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: tags.bottom });
        edges.push(BoundaryEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: tags.top });
    }
    for j in 0..ny {
        edges.push(BoundaryEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: tags.right });
        edges.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: tags.left });
    }
    let mesh = Mesh2D { nodes, triangles, edges };
    mesh.validate()?;
    Ok(mesh)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh2D {
    /// Signed area of triangle `t`.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let [a, b] = e.nodes.map(|n| self.nodes[n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Total length of the edges carrying `tag`.
    pub fn tagged_length(&self, tag: BoundaryTag) -> f64 {
        self.edges.iter().filter(|e| e.tag == tag).map(|e| self.edge_length(e)).sum()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.edges.iter().any(|e| e.tag == tag)
    }

    /// Gradients of the three barycentric basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        let two_area = 2.0 * self.area(t);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    /// Checks orientation, conformity and boundary tagging.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        let scale = self.nodes.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing node")));
            }
            if !(self.area(t) > 1e-14 * scale * scale) {
                return Err(Error::Mesh(format!("triangle {t} is degenerate or clockwise")));
            }
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        if let Some(((a, b), _)) = count.iter().find(|(_, c)| **c > 2) {
            return Err(Error::Mesh(format!("edge ({a}, {b}) is shared by more than two triangles")));
        }
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &self.edges {
            let key = edge_key(e.nodes[0], e.nodes[1]);
            if count.get(&key) != Some(&1) {
                return Err(Error::Mesh(format!(
                    "tagged edge ({}, {}) is not a boundary edge",
                    e.nodes[0], e.nodes[1]
                )));
            }
            *tagged.entry(key).or_default() += 1;
        }
        for (key, c) in &count {
            if *c == 1 && tagged.get(key) != Some(&1) {
                return Err(Error::Mesh(format!("boundary edge ({}, {}) must be tagged exactly once", key.0, key.1)));
            }
        }
        Ok(())
    }

    /// Parses the three-section text format; node ids may be arbitrary integers.
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Nodes,
            Triangles,
            Edges,
        }
        let mut section = Section::None;
        let mut ids: HashMap<i64, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut raw_tris: Vec<(usize, [i64; 3])> = Vec::new();
        let mut raw_edges: Vec<(usize, [i64; 2], BoundaryTag)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "nodes" => {
                    section = Section::Nodes;
                    continue;
                }
                "triangles" => {
                    section = Section::Triangles;
                    continue;
                }
                "edges" => {
                    section = Section::Edges;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| Error::Mesh(format!("line {lineno}: {what}"));
            let int = |s: &str| s.parse::<i64>().map_err(|_| bad(&format!("expected an integer, got `{s}`")));
            match section {
                Section::None => return Err(bad("data before any section header")),
                Section::Nodes => {
                    if fields.len() != 3 {
                        return Err(bad("node lines are `id x y`"));
                    }
                    let id = int(fields[0])?;
                    let x: f64 = fields[1].parse().map_err(|_| bad("bad x coordinate"))?;
                    let y: f64 = fields[2].parse().map_err(|_| bad("bad y coordinate"))?;
                    if ids.insert(id, nodes.len()).is_some() {
                        return Err(bad(&format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y]);
                }
                Section::Triangles => {
                    if fields.len() != 4 {
                        return Err(bad("triangle lines are `id n1 n2 n3`"));
                    }
                    raw_tris.push((lineno, [int(fields[1])?, int(fields[2])?, int(fields[3])?]));
                }
                Section::Edges => {
                    if fields.len() != 4 {
                        return Err(bad("edge lines are `id n1 n2 tag`"));
                    }
                    let tag: BoundaryTag = fields[3].parse().map_err(|e: Error| bad(&e.to_string()))?;
                    raw_edges.push((lineno, [int(fields[1])?, int(fields[2])?], tag));
                }
            }
        }
        let lookup = |lineno: usize, id: i64| {
            ids.get(&id).copied().ok_or_else(|| Error::Mesh(format!("line {lineno}: unknown node id {id}")))
        };
        let triangles = raw_tris
            .iter()
            .map(|(l, t)| Ok([lookup(*l, t[0])?, lookup(*l, t[1])?, lookup(*l, t[2])?]))
            .collect::<Result<Vec<_>>>()?;
        let edges = raw_edges
            .iter()
            .map(|(l, e, tag)| Ok(BoundaryEdge { nodes: [lookup(*l, e[0])?, lookup(*l, e[1])?], tag: *tag }))
            .collect::<Result<Vec<_>>>()?;
        let mesh = Mesh2D { nodes, triangles, edges };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Writes the text format with 1-based ids.
    pub fn to_text(&self) -> String {
        let mut s = String::from("nodes\n");
        for (i, p) in self.nodes.iter().enumerate() {
            s += &format!("{} {:?} {:?}\n", i + 1, p[0], p[1]);
        }
        s += "triangles\n";
        for (i, t) in self.triangles.iter().enumerate() {
            s += &format!("{} {} {} {}\n", i + 1, t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s += "edges\n";
        for (i, e) in self.edges.iter().enumerate() {
            s += &format!("{} {} {} {}\n", i + 1, e.nodes[0] + 1, e.nodes[1] + 1, e.tag);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_counts() {
        let m = generate_rect_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!((m.triangles.len(), m.nodes.len()), (2, 4));
        let m = generate_rect_mesh(2, 2, 1.0, 1.0).unwrap();
        assert_eq!((m.triangles.len(), m.nodes.len()), (8, 9));
        let m = generate_rect_mesh(5, 7, 2.0, 3.0).unwrap();
        assert!((m.total_area() - 6.0).abs() < 1e-12);
        assert!((m.tagged_length(BoundaryTag::GammaB) - 2.0).abs() < 1e-12);
        assert!((m.tagged_length(BoundaryTag::GammaL) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = generate_rect_mesh(3, 2, 1.5, 1.0).unwrap();
        for t in 0..m.triangles.len() {
            let g = m.basis_gradients(t);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn text_format_reads_back() {
        let m = generate_rect_mesh(2, 3, 1.0, 2.0).unwrap();
        let back = Mesh2D::parse(&format!("# generated\n{}", m.to_text())).unwrap();
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.edges, m.edges);
    }

    #[test]
    fn rejects_untagged_boundary_and_clockwise_triangles() {
        let text = "nodes\n1 0 0\n2 1 0\n3 0 1\ntriangles\n1 1 2 3\nedges\n1 1 2 GAMMA_B\n2 2 3 GAMMA_F\n";
        assert!(matches!(Mesh2D::parse(text), Err(Error::Mesh(_))));
        let text = "nodes\n1 0 0\n2 1 0\n3 0 1\ntriangles\n1 1 3 2\nedges\n";
        assert!(Mesh2D::parse(text).unwrap_err().to_string().contains("clockwise"));
        let text = "nodes\n1 0 0\n2 1 0\n3 0 1\ntriangles\n1 1 2 3\nedges\n1 1 2 GAMMA_X\n";
        assert!(Mesh2D::parse(text).unwrap_err().to_string().contains("GAMMA_X"));
    }
}
