//! Degree-of-freedom maps, local shape functions and quadrature for the three
//! discrete spaces: vector P1 displacements, piecewise-constant pressures and
//! lowest-order Raviart-Thomas (RT0) fluxes.
//!
//! Dof conventions:
//! - displacement: dof `2*v + c` is component `c` of vertex `v`;
//! - pressure: one dof per triangle, equal to the triangle index;
//! - flux: one dof per edge (net normal flux through the edge in its stored
//!   global orientation), equal to the edge index.
//!
//! Displacement dofs at `Gamma1` vertices are constrained to zero. Flux dofs
//! are constrained to zero on all boundary edges by default (the flux space
//! has vanishing normal trace on the whole boundary); selected tags can be
//! left unconstrained to model drained segments with zero boundary pressure.

use crate::error::Error;
use crate::mesh::{BoundaryTag, Mesh};
use crate::Result;

/// Which discrete space a [`DofMap`] indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Displacement,
    Pressure,
    Flux,
}

/// Global dof bookkeeping for one space.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub n_dofs: usize,
    /// `true` for dofs constrained to zero (essential conditions).
    pub constrained: Vec<bool>,
}

impl DofMap {
    pub fn n_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }
}

/// The three dof maps of the coupled problem.
#[derive(Debug, Clone)]
pub struct DofMaps {
    pub displacement: DofMap,
    pub pressure: DofMap,
    pub flux: DofMap,
}

/// Builds the dof maps with the default essential sets: displacement zero on
/// `Gamma1` vertices, flux zero on every boundary edge.
pub fn make_dofmaps(mesh: &Mesh) -> DofMaps {
    make_dofmaps_drained(mesh, &[])
}

/// Like [`make_dofmaps`] but leaves the flux dofs on boundary edges whose tag
/// is in `drained` unconstrained (natural zero-pressure condition there).
pub fn make_dofmaps_drained(mesh: &Mesh, drained: &[BoundaryTag]) -> DofMaps {
    let mut u_con = vec![false; 2 * mesh.n_vertices()];
    for v in mesh.vertices_on_tag(BoundaryTag::Gamma1) {
        u_con[2 * v] = true;
        u_con[2 * v + 1] = true;
    }
    let mut z_con = vec![false; mesh.n_edges()];
    for &e in &mesh.boundary_edges {
        let tag = mesh.edges[e].tag.expect("boundary edge tagged");
        if !drained.contains(&tag) {
            z_con[e] = true;
        }
    }
    DofMaps {
        displacement: DofMap {
            kind: SpaceKind::Displacement,
            n_dofs: 2 * mesh.n_vertices(),
            constrained: u_con,
        },
        pressure: DofMap {
            kind: SpaceKind::Pressure,
            n_dofs: mesh.n_triangles(),
            constrained: vec![false; mesh.n_triangles()],
        },
        flux: DofMap {
            kind: SpaceKind::Flux,
            n_dofs: mesh.n_edges(),
            constrained: z_con,
        },
    }
}

/// Constant gradients of the three P1 hat functions on a triangle, plus its
/// area. Gradient `i` belongs to the hat that is 1 at vertex `i`.
pub fn local_p1_gradients(coords: &[[f64; 2]; 3]) -> Result<([[f64; 2]; 3], f64)> {
    let area2 = (coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
        - (coords[2][0] - coords[0][0]) * (coords[1][1] - coords[0][1]);
    if !(area2 > 0.0) {
        return Err(Error::MeshInvariant(format!(
            "degenerate triangle (doubled signed area {area2})"
        )));
    }
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i] = [
            (coords[j][1] - coords[k][1]) / area2,
            (coords[k][0] - coords[j][0]) / area2,
        ];
    }
    Ok((grads, area2 / 2.0))
}

/// RT0 basis descriptor on one triangle. The basis function attached to local
/// edge `k` (opposite local vertex `k`) is
/// `phi_k(x) = coeff[k] * (x - opposite[k])`, with the constant divergence
/// `div[k] = 2 * coeff[k]`. Coefficients carry the global orientation sign,
/// so the net normal flux of `phi_k` through its own edge is +1 in the
/// edge's stored global direction and 0 through the other two edges.
#[derive(Debug, Clone, Copy)]
pub struct Rt0Basis {
    pub opposite: [[f64; 2]; 3],
    pub coeff: [f64; 3],
    pub div: [f64; 3],
}

impl Rt0Basis {
    /// Evaluates basis function `k` at a point.
    pub fn eval(&self, k: usize, x: [f64; 2]) -> [f64; 2] {
        [
            self.coeff[k] * (x[0] - self.opposite[k][0]),
            self.coeff[k] * (x[1] - self.opposite[k][1]),
        ]
    }
}

/// Flux-normalized RT0 basis on a triangle with the given per-edge global
/// orientation signs (+1 when the edge's global normal is outward for this
/// triangle).
pub fn local_rt0_basis(coords: &[[f64; 2]; 3], signs: &[f64; 3]) -> Result<Rt0Basis> {
    let (_, area) = local_p1_gradients(coords)?;
    let mut coeff = [0.0; 3];
    let mut div = [0.0; 3];
    for k in 0..3 {
        coeff[k] = signs[k] / (2.0 * area);
        div[k] = signs[k] / area;
    }
    Ok(Rt0Basis {
        opposite: *coords,
        coeff,
        div,
    })
}

/// Quadrature rule on the reference triangle, stored as barycentric points
/// with weights summing to the reference area 1/2. Scale weights by
/// `2 * |T|` to integrate over a physical triangle.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Three-point edge-midpoint rule, exact for polynomials of degree 2.
    pub fn tri_midpoint() -> Self {
        QuadratureRule {
            points: vec![
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
            ],
            weights: vec![1.0 / 6.0; 3],
            degree: 2,
        }
    }

    /// Integrates `f` over the physical triangle with the given vertex
    /// coordinates.
    pub fn integrate(&self, coords: &[[f64; 2]; 3], mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
        let area2 = 2.0 * triangle_area(coords);
        let mut acc = 0.0;
        for (bary, w) in self.points.iter().zip(&self.weights) {
            let x = [
                bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
            ];
            acc += w * area2 * f(x);
        }
        acc
    }
}

pub fn triangle_area(coords: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
        - (coords[2][0] - coords[0][0]) * (coords[1][1] - coords[0][1]))
}

/// Two-point Gauss rule on [0, 1]: (position, weight) pairs. Exact for cubic
/// polynomials; multiply weights by the edge length for line integrals.
pub fn edge_gauss2() -> [(f64, f64); 2] {
    let d = 1.0 / (2.0 * 3.0f64.sqrt());
    [(0.5 - d, 0.5), (0.5 + d, 0.5)]
}
