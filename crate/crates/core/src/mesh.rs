//! Conforming triangular meshes of polygonal 2D domains with tagged boundary
//! segments.
//!
//! The boundary is partitioned into three pairwise disjoint tag sets:
//! `Gamma1` (clamped, homogeneous Dirichlet for the displacement), `Gamma2`
//! (prescribed traction) and `Gamma3` (unilateral contact with a rigid
//! foundation). `Gamma1` must be nonempty. Every edge of the mesh carries a
//! fixed unit normal: outward for boundary edges, and pointing from the
//! lower-indexed into the higher-indexed adjacent triangle for interior
//! edges. Meshes are immutable after construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::Error;
use crate::Result;

/// Boundary segment tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    /// Clamped boundary, u = 0.
    Gamma1,
    /// Traction boundary.
    Gamma2,
    /// Contact boundary (Signorini conditions).
    Gamma3,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Gamma1 => "GAMMA1",
            BoundaryTag::Gamma2 => "GAMMA2",
            BoundaryTag::Gamma3 => "GAMMA3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GAMMA1" => Some(BoundaryTag::Gamma1),
            "GAMMA2" => Some(BoundaryTag::Gamma2),
            "GAMMA3" => Some(BoundaryTag::Gamma3),
            _ => None,
        }
    }
}

/// One edge of the triangulation with its fixed global orientation.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex indices, ordered as in the adjacent lower triangle's
    /// counterclockwise traversal.
    pub v: [usize; 2],
    /// Unit normal. Points out of `tri_from`; outward for boundary edges.
    pub normal: [f64; 2],
    pub length: f64,
    /// Triangle the normal points out of.
    pub tri_from: usize,
    /// Triangle the normal points into; `None` for boundary edges.
    pub tri_to: Option<usize>,
    /// Boundary tag; `Some` exactly for boundary edges.
    pub tag: Option<BoundaryTag>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tri_to.is_none()
    }
}

/// Immutable conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Per triangle: (edge index, orientation sign) for the local edges
    /// 0, 1, 2, where local edge k is opposite local vertex k. The sign is
    /// +1 when the edge's stored normal is outward for this triangle.
    pub tri_edges: Vec<[(usize, f64); 3]>,
    /// Indices into `edges` of all boundary edges.
    pub boundary_edges: Vec<usize>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Coordinates of the three vertices of triangle `t`.
    pub fn tri_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        signed_area(&self.tri_coords(t))
    }

    pub fn tri_centroid(&self, t: usize) -> [f64; 2] {
        let c = self.tri_coords(t);
        [
            (c[0][0] + c[1][0] + c[2][0]) / 3.0,
            (c[0][1] + c[1][1] + c[2][1]) / 3.0,
        ]
    }

    pub fn domain_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.tri_area(t)).sum()
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let ed = &self.edges[e];
        let a = self.vertices[ed.v[0]];
        let b = self.vertices[ed.v[1]];
        [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
    }

    /// Boundary edge indices carrying the given tag.
    pub fn boundary_edges_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        self.boundary_edges
            .iter()
            .copied()
            .filter(|&e| self.edges[e].tag == Some(tag))
            .collect()
    }

    /// Sorted list of vertices incident to at least one edge of the tag set.
    pub fn vertices_on_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .boundary_edges_with_tag(tag)
            .iter()
            .flat_map(|&e| self.edges[e].v)
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Checks all structural invariants; called by every constructor.
    pub fn validate(&self) -> Result<()> {
        for (t, _) in self.triangles.iter().enumerate() {
            let a = self.tri_area(t);
            if !(a > 0.0) {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} has non-positive area {a}"
                )));
            }
        }
        let mut n_tagged = 0usize;
        let mut has_gamma1 = false;
        for (i, e) in self.edges.iter().enumerate() {
            let nrm = (e.normal[0] * e.normal[0] + e.normal[1] * e.normal[1]).sqrt();
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(Error::MeshInvariant(format!(
                    "edge {i} normal is not unit length ({nrm})"
                )));
            }
            match e.tri_to {
                None => {
                    let tag = e.tag.ok_or_else(|| {
                        Error::MeshInvariant(format!("boundary edge {i} has no tag"))
                    })?;
                    n_tagged += 1;
                    if tag == BoundaryTag::Gamma1 {
                        has_gamma1 = true;
                    }
                    // Outward check: normal dotted with (midpoint - centroid) > 0.
                    let mid = self.edge_midpoint(i);
                    let c = self.tri_centroid(e.tri_from);
                    let d = (mid[0] - c[0]) * e.normal[0] + (mid[1] - c[1]) * e.normal[1];
                    if d <= 0.0 {
                        return Err(Error::MeshInvariant(format!(
                            "boundary edge {i} normal is not outward"
                        )));
                    }
                }
                Some(to) => {
                    if e.tag.is_some() {
                        return Err(Error::MeshInvariant(format!(
                            "interior edge {i} carries a boundary tag"
                        )));
                    }
                    if to <= e.tri_from {
                        return Err(Error::MeshInvariant(format!(
                            "edge {i} adjacency not ordered (from {} to {to})",
                            e.tri_from
                        )));
                    }
                    // The two adjacent triangles must traverse the edge in
                    // opposite directions.
                    let fwd = tri_traverses(&self.triangles[e.tri_from], e.v[0], e.v[1]);
                    let bwd = tri_traverses(&self.triangles[to], e.v[1], e.v[0]);
                    if !fwd || !bwd {
                        return Err(Error::MeshInvariant(format!(
                            "interior edge {i} orientations not opposite in adjacent triangles"
                        )));
                    }
                }
            }
        }
        if n_tagged != self.boundary_edges.len() {
            return Err(Error::MeshInvariant(
                "tag partition does not cover the boundary".into(),
            ));
        }
        if !has_gamma1 {
            return Err(Error::MeshInvariant(
                "GAMMA1 boundary set is empty (a clamped segment is required)".into(),
            ));
        }
        Ok(())
    }
}

fn signed_area(c: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]))
}

/// Does triangle `tri` traverse the directed edge a -> b in its CCW order?
fn tri_traverses(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

/// Axis-aligned rectangle extents.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
}

/// Tag assignment for the four sides of a rectangle.
#[derive(Debug, Clone, Copy)]
pub struct SideTags {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl SideTags {
    fn all(&self) -> [BoundaryTag; 4] {
        [self.left, self.right, self.bottom, self.top]
    }
}

/// Structured right-split triangulation of a rectangle: each of the nx*ny
/// cells is cut along its lower-left/upper-right diagonal, giving 2*nx*ny
/// triangles. Each side carries exactly one tag; at least one side must be
/// `Gamma1`.
pub fn build_rect_mesh(nx: usize, ny: usize, extents: Rect, tagging: SideTags) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter {
            name: "nx/ny",
            msg: "subdivision counts must be at least 1".into(),
        });
    }
    if !(extents.x1 > extents.x0) || !(extents.y1 > extents.y0) {
        return Err(Error::InvalidParameter {
            name: "extents",
            msg: format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                extents.x0, extents.x1, extents.y0, extents.y1
            ),
        });
    }
    if !tagging.all().contains(&BoundaryTag::Gamma1) {
        return Err(Error::InvalidParameter {
            name: "tagging",
            msg: "no side tagged GAMMA1".into(),
        });
    }

    let hx = (extents.x1 - extents.x0) / nx as f64;
    let hy = (extents.y1 - extents.y0) / ny as f64;
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([extents.x0 + i as f64 * hx, extents.y0 + j as f64 * hy]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push((vid(i, 0), vid(i + 1, 0), tagging.bottom));
        boundary.push((vid(i, ny), vid(i + 1, ny), tagging.top));
    }
    for j in 0..ny {
        boundary.push((vid(0, j), vid(0, j + 1), tagging.left));
        boundary.push((vid(nx, j), vid(nx, j + 1), tagging.right));
    }

    let (mesh, warnings) = from_parts(vertices, triangles, &boundary)?;
    debug_assert!(warnings.is_empty());
    Ok(mesh)
}

/// Builds a mesh from raw vertex/triangle/boundary-tag lists. Clockwise
/// triangles are reoriented and reported in the warning list.
pub fn from_parts(
    vertices: Vec<[f64; 2]>,
    mut triangles: Vec<[usize; 3]>,
    boundary_tags: &[(usize, usize, BoundaryTag)],
) -> Result<(Mesh, Vec<String>)> {
    let mut warnings = Vec::new();
    let nv = vertices.len();
    for (t, tri) in triangles.iter_mut().enumerate() {
        for &v in tri.iter() {
            if v >= nv {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} references vertex {v} out of range"
                )));
            }
        }
        let coords = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
        let a = signed_area(&coords);
        if a < 0.0 {
            tri.swap(1, 2);
            warnings.push(format!("triangle {t} was clockwise; reoriented"));
        } else if a == 0.0 {
            return Err(Error::MeshInvariant(format!("triangle {t} is degenerate")));
        }
    }

    // Edge discovery in deterministic first-seen order.
    let mut edge_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    struct Build {
        v: [usize; 2],
        tris: Vec<usize>,
    }
    let mut builds: Vec<Build> = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            match edge_of.get(&key) {
                Some(&e) => builds[e].tris.push(t),
                None => {
                    let e = builds.len();
                    edge_of.insert(key, e);
                    // Store in the traversal order of the first triangle.
                    builds.push(Build { v: [a, b], tris: vec![t] });
                }
            }
        }
    }

    let mut tag_of: BTreeMap<(usize, usize), BoundaryTag> = BTreeMap::new();
    for &(a, b, tag) in boundary_tags {
        let key = (a.min(b), a.max(b));
        if tag_of.insert(key, tag).is_some() {
            return Err(Error::MeshInvariant(format!(
                "boundary edge ({a}, {b}) tagged twice"
            )));
        }
    }

    let mut edges = Vec::with_capacity(builds.len());
    let mut boundary_edges = Vec::new();
    for (i, b) in builds.iter().enumerate() {
        if b.tris.len() > 2 {
            return Err(Error::MeshInvariant(format!(
                "edge ({}, {}) shared by more than two triangles",
                b.v[0], b.v[1]
            )));
        }
        let mut tris = b.tris.clone();
        tris.sort_unstable();
        let tri_from = tris[0];
        let tri_to = tris.get(1).copied();
        let key = (b.v[0].min(b.v[1]), b.v[0].max(b.v[1]));
        let tag = match tri_to {
            None => Some(tag_of.remove(&key).ok_or_else(|| {
                Error::MeshInvariant(format!(
                    "boundary edge ({}, {}) has no tag",
                    b.v[0], b.v[1]
                ))
            })?),
            Some(_) => {
                if tag_of.contains_key(&key) {
                    return Err(Error::MeshInvariant(format!(
                        "interior edge ({}, {}) carries a boundary tag",
                        b.v[0], b.v[1]
                    )));
                }
                None
            }
        };

        let pa = vertices[b.v[0]];
        let pb = vertices[b.v[1]];
        let dx = pb[0] - pa[0];
        let dy = pb[1] - pa[1];
        let len = (dx * dx + dy * dy).sqrt();
        if len == 0.0 {
            return Err(Error::MeshInvariant(format!(
                "edge ({}, {}) has zero length",
                b.v[0], b.v[1]
            )));
        }
        let mut normal = [dy / len, -dx / len];
        // Point the normal out of tri_from.
        let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
        let tc = {
            let c = [
                vertices[triangles[tri_from][0]],
                vertices[triangles[tri_from][1]],
                vertices[triangles[tri_from][2]],
            ];
            [
                (c[0][0] + c[1][0] + c[2][0]) / 3.0,
                (c[0][1] + c[1][1] + c[2][1]) / 3.0,
            ]
        };
        if (mid[0] - tc[0]) * normal[0] + (mid[1] - tc[1]) * normal[1] < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        if tri_to.is_none() {
            boundary_edges.push(i);
        }
        edges.push(Edge {
            v: b.v,
            normal,
            length: len,
            tri_from,
            tri_to,
            tag,
        });
    }
    if let Some(((a, b), _)) = tag_of.into_iter().next() {
        return Err(Error::MeshInvariant(format!(
            "tagged edge ({a}, {b}) is not an edge of the triangulation"
        )));
    }

    let mut tri_edges = vec![[(0usize, 0.0f64); 3]; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[(k + 1) % 3];
            let b = tri[(k + 2) % 3];
            let key = (a.min(b), a.max(b));
            let e = edge_of[&key];
            let sign = if edges[e].tri_from == t { 1.0 } else { -1.0 };
            tri_edges[t][k] = (e, sign);
        }
    }

    let mesh = Mesh {
        vertices,
        triangles,
        edges,
        tri_edges,
        boundary_edges,
    };
    mesh.validate()?;
    Ok((mesh, warnings))
}

/// Result of parsing a mesh file: the mesh plus non-fatal warnings
/// (e.g. reoriented clockwise triangles).
#[derive(Debug)]
pub struct MeshReadResult {
    pub mesh: Mesh,
    pub warnings: Vec<String>,
}

/// Parses the plain-text `poromesh 1` format:
///
/// ```text
/// poromesh 1
/// vertices N
/// x y          (N lines)
/// triangles M
/// i j k        (M lines, 0-based)
/// boundary B
/// i j TAG      (B lines, TAG in GAMMA1|GAMMA2|GAMMA3)
/// ```
pub fn read_mesh(text: &str) -> Result<MeshReadResult> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next_content = || -> Option<(usize, &str)> {
        lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#'))
    };

    let (line, header) = next_content().ok_or(Error::MeshParse {
        line: 0,
        msg: "empty file".into(),
    })?;
    if header != "poromesh 1" {
        return Err(Error::MeshParse {
            line,
            msg: format!("expected header 'poromesh 1', got '{header}'"),
        });
    }

    fn section_count(
        tok: Option<(usize, &str)>,
        name: &str,
    ) -> Result<usize> {
        let (line, l) = tok.ok_or(Error::MeshParse {
            line: 0,
            msg: format!("missing '{name}' section"),
        })?;
        let mut parts = l.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(word), Some(count), None) if word == name => {
                count.parse().map_err(|_| Error::MeshParse {
                    line,
                    msg: format!("bad count '{count}' in '{name}' header"),
                })
            }
            _ => Err(Error::MeshParse {
                line,
                msg: format!("expected '{name} N', got '{l}'"),
            }),
        }
    }

    let nv = section_count(next_content(), "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = next_content().ok_or(Error::MeshParse {
            line: 0,
            msg: "unexpected end of file in vertices".into(),
        })?;
        let mut it = l.split_whitespace();
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or(Error::MeshParse {
                line,
                msg: "vertex line needs 'x y'".into(),
            })?
            .parse()
            .map_err(|_| Error::MeshParse {
                line,
                msg: format!("bad coordinate in '{l}'"),
            })
        };
        let x = parse(it.next())?;
        let y = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::MeshParse {
                line,
                msg: format!("trailing tokens in vertex line '{l}'"),
            });
        }
        vertices.push([x, y]);
    }

    let nt = section_count(next_content(), "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, l) = next_content().ok_or(Error::MeshParse {
            line: 0,
            msg: "unexpected end of file in triangles".into(),
        })?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| {
                s.parse().map_err(|_| Error::MeshParse {
                    line,
                    msg: format!("bad vertex index in '{l}'"),
                })
            })
            .collect::<Result<_>>()?;
        if idx.len() != 3 {
            return Err(Error::MeshParse {
                line,
                msg: format!("triangle line needs 'i j k', got '{l}'"),
            });
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }

    let nb = section_count(next_content(), "boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, l) = next_content().ok_or(Error::MeshParse {
            line: 0,
            msg: "unexpected end of file in boundary".into(),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::MeshParse {
                line,
                msg: format!("boundary line needs 'i j TAG', got '{l}'"),
            });
        }
        let i: usize = toks[0].parse().map_err(|_| Error::MeshParse {
            line,
            msg: format!("bad vertex index in '{l}'"),
        })?;
        let j: usize = toks[1].parse().map_err(|_| Error::MeshParse {
            line,
            msg: format!("bad vertex index in '{l}'"),
        })?;
        let tag = BoundaryTag::parse(toks[2]).ok_or(Error::MeshParse {
            line,
            msg: format!("unknown boundary tag '{}'", toks[2]),
        })?;
        boundary.push((i, j, tag));
    }
    if let Some((line, l)) = next_content() {
        return Err(Error::MeshParse {
            line,
            msg: format!("trailing content '{l}'"),
        });
    }

    let (mesh, warnings) = from_parts(vertices, triangles, &boundary)?;
    Ok(MeshReadResult { mesh, warnings })
}

/// Serializes a mesh in the `poromesh 1` format. Reading the output back
/// and rewriting it reproduces the bytes exactly.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("poromesh 1\n");
    let _ = writeln!(out, "vertices {}", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {}", v[0], v[1]);
    }
    let _ = writeln!(out, "triangles {}", mesh.n_triangles());
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "boundary {}", mesh.boundary_edges.len());
    for &e in &mesh.boundary_edges {
        let ed = &mesh.edges[e];
        let _ = writeln!(
            out,
            "{} {} {}",
            ed.v[0],
            ed.v[1],
            ed.tag.expect("boundary edge has tag").as_str()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_tags() -> SideTags {
        SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma2,
            top: BoundaryTag::Gamma2,
        }
    }

    #[test]
    fn smallest_structured_mesh() {
        let m = build_rect_mesh(1, 1, Rect::UNIT, unit_square_tags()).unwrap();
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_edges.len(), 4);
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::Gamma1).len(), 1);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::Gamma3).len(), 1);
        assert_eq!(m.boundary_edges_with_tag(BoundaryTag::Gamma2).len(), 2);
    }

    #[test]
    fn two_by_two_counts() {
        let m = build_rect_mesh(2, 2, Rect::UNIT, unit_square_tags()).unwrap();
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.boundary_edges.len(), 8);
        assert_eq!(m.n_edges(), 16);
    }

    #[test]
    fn areas_partition_domain() {
        for (nx, ny) in [(1, 1), (3, 2), (7, 5)] {
            let r = Rect {
                x0: -1.0,
                x1: 2.5,
                y0: 0.25,
                y1: 1.75,
            };
            let m = build_rect_mesh(nx, ny, r, unit_square_tags()).unwrap();
            let exact = (r.x1 - r.x0) * (r.y1 - r.y0);
            assert!((m.domain_area() - exact).abs() <= 1e-14 * exact);
        }
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = build_rect_mesh(3, 3, Rect::UNIT, unit_square_tags()).unwrap();
        for &e in &m.boundary_edges {
            let ed = &m.edges[e];
            let mid = m.edge_midpoint(e);
            let c = m.tri_centroid(ed.tri_from);
            let d = (mid[0] - c[0]) * ed.normal[0] + (mid[1] - c[1]) * ed.normal[1];
            assert!(d > 0.0);
        }
    }

    #[test]
    fn tag_partition_counts() {
        let m = build_rect_mesh(4, 3, Rect::UNIT, unit_square_tags()).unwrap();
        let n1 = m.boundary_edges_with_tag(BoundaryTag::Gamma1).len();
        let n2 = m.boundary_edges_with_tag(BoundaryTag::Gamma2).len();
        let n3 = m.boundary_edges_with_tag(BoundaryTag::Gamma3).len();
        assert_eq!(n1 + n2 + n3, m.boundary_edges.len());
    }

    #[test]
    fn rejects_missing_gamma1() {
        let tags = SideTags {
            left: BoundaryTag::Gamma2,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma2,
            top: BoundaryTag::Gamma2,
        };
        assert!(build_rect_mesh(1, 1, Rect::UNIT, tags).is_err());
    }

    #[test]
    fn rejects_degenerate_extents() {
        let r = Rect {
            x0: 0.0,
            x1: 0.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert!(build_rect_mesh(1, 1, r, unit_square_tags()).is_err());
    }

    #[test]
    fn write_read_round_trip() {
        let m = build_rect_mesh(2, 3, Rect::UNIT, unit_square_tags()).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert!(back.warnings.is_empty());
        assert_eq!(back.mesh.n_vertices(), m.n_vertices());
        assert_eq!(back.mesh.triangles, m.triangles);
        assert_eq!(write_mesh(&back.mesh), text);
    }

    #[test]
    fn untagged_boundary_edge_is_parse_error() {
        let m = build_rect_mesh(1, 1, Rect::UNIT, unit_square_tags()).unwrap();
        let text = write_mesh(&m);
        // Drop the last boundary line and fix the count header.
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let owned: Vec<String> = lines
            .iter()
            .map(|l| {
                if l.starts_with("boundary") {
                    "boundary 3".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect();
        let broken = owned.join("\n");
        assert!(read_mesh(&broken).is_err());
    }

    #[test]
    fn clockwise_triangle_reoriented_with_warning() {
        let m = build_rect_mesh(1, 1, Rect::UNIT, unit_square_tags()).unwrap();
        let text = write_mesh(&m);
        // Swap two indices of the first triangle to make it clockwise.
        let swapped: Vec<String> = text
            .lines()
            .enumerate()
            .map(|(i, l)| {
                if i == 7 {
                    // first triangle line: header(1) + vertices-header(1) + 4 coords + tri header
                    let mut ix: Vec<&str> = l.split_whitespace().collect();
                    ix.swap(1, 2);
                    ix.join(" ")
                } else {
                    l.to_string()
                }
            })
            .collect();
        let res = read_mesh(&swapped.join("\n")).unwrap();
        assert_eq!(res.warnings.len(), 1);
        assert!(res.warnings[0].contains("reoriented"));
        for t in 0..res.mesh.n_triangles() {
            assert!(res.mesh.tri_area(t) > 0.0);
        }
    }

    #[test]
    fn interior_edges_have_two_triangles() {
        let m = build_rect_mesh(3, 2, Rect::UNIT, unit_square_tags()).unwrap();
        for e in &m.edges {
            match e.tri_to {
                Some(_) => assert!(e.tag.is_none()),
                None => assert!(e.tag.is_some()),
            }
        }
    }
}
