//! L2-type norms of the discrete fields, evaluated exactly per element.

use nalgebra::DVector;

use crate::fespace::{local_p1_gradients, local_rt0_basis, QuadratureRule};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;
use crate::Result;

/// L2 norm of a piecewise-constant cell field.
pub fn p0_l2(mesh: &Mesh, v: &DVector<f64>) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| mesh.tri_area(t) * v[t] * v[t])
        .sum::<f64>()
        .sqrt()
}

/// L2 norm of the symmetric gradient of a P1 displacement vector.
pub fn eps_l2(mesh: &Mesh, u: &DVector<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, area) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        let mut grad = [[0.0f64; 2]; 2]; // grad[a][b] = d u_a / d x_b
        for i in 0..3 {
            for a in 0..2 {
                let coef = u[2 * tri[i] + a];
                grad[a][0] += coef * g[i][0];
                grad[a][1] += coef * g[i][1];
            }
        }
        let e11 = grad[0][0];
        let e22 = grad[1][1];
        let e12 = 0.5 * (grad[0][1] + grad[1][0]);
        acc += area * (e11 * e11 + e22 * e22 + 2.0 * e12 * e12);
    }
    Ok(acc.sqrt())
}

/// L2 norm of the (piecewise-constant) divergence of a P1 displacement.
pub fn div_u_l2(mesh: &Mesh, u: &DVector<f64>) -> Result<f64> {
    let div = crate::assembly::displacement_divergence(mesh, u)?;
    Ok(p0_l2(mesh, &div))
}

/// Full H1 norm of a P1 displacement vector: (|u|_L2^2 + |grad u|_L2^2)^(1/2).
pub fn u_h1(mesh: &Mesh, u: &DVector<f64>) -> Result<f64> {
    let quad = QuadratureRule::tri_midpoint();
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, area) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        let mut grad_sq = 0.0;
        for a in 0..2 {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for i in 0..3 {
                let coef = u[2 * tri[i] + a];
                gx += coef * g[i][0];
                gy += coef * g[i][1];
            }
            grad_sq += gx * gx + gy * gy;
        }
        acc += area * grad_sq;
        // |u|^2 by quadrature (degree 2 is exact for P1 squares).
        acc += quad.integrate(&coords, |x| {
            let mut val = [0.0, 0.0];
            for i in 0..3 {
                let hat = 1.0
                    + g[i][0] * (x[0] - coords[i][0])
                    + g[i][1] * (x[1] - coords[i][1]);
                val[0] += u[2 * tri[i]] * hat;
                val[1] += u[2 * tri[i] + 1] * hat;
            }
            val[0] * val[0] + val[1] * val[1]
        });
    }
    Ok(acc.sqrt())
}

/// Weighted flux norm |K^{-1/2} z|_L2 from the assembled weighted mass matrix.
pub fn z_weighted(mz: &SparseMatrix, z: &DVector<f64>) -> f64 {
    mz.quadratic_form(z, z).max(0.0).sqrt()
}

/// H(div) norm of an RT0 flux vector: (|z|_L2^2 + |div z|_L2^2)^(1/2).
pub fn z_hdiv(mesh: &Mesh, z: &DVector<f64>) -> Result<f64> {
    let quad = QuadratureRule::tri_midpoint();
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let signs = [
            mesh.tri_edges[t][0].1,
            mesh.tri_edges[t][1].1,
            mesh.tri_edges[t][2].1,
        ];
        let basis = local_rt0_basis(&coords, &signs)?;
        let dofs = [
            z[mesh.tri_edges[t][0].0],
            z[mesh.tri_edges[t][1].0],
            z[mesh.tri_edges[t][2].0],
        ];
        acc += quad.integrate(&coords, |x| {
            let mut v = [0.0, 0.0];
            for k in 0..3 {
                let phi = basis.eval(k, x);
                v[0] += dofs[k] * phi[0];
                v[1] += dofs[k] * phi[1];
            }
            v[0] * v[0] + v[1] * v[1]
        });
        let div: f64 = (0..3).map(|k| dofs[k] * basis.div[k]).sum();
        acc += mesh.tri_area(t) * div * div;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::make_dofmaps;
    use crate::mesh::{build_rect_mesh, BoundaryTag, Rect, SideTags};

    #[test]
    fn p0_norm_of_indicator() {
        let m = build_rect_mesh(
            2,
            2,
            Rect::UNIT,
            SideTags {
                left: BoundaryTag::Gamma1,
                right: BoundaryTag::Gamma2,
                bottom: BoundaryTag::Gamma2,
                top: BoundaryTag::Gamma2,
            },
        )
        .unwrap();
        let mut v = DVector::zeros(m.n_triangles());
        v[3] = 2.0;
        let expect = (m.tri_area(3) * 4.0).sqrt();
        assert!((p0_l2(&m, &v) - expect).abs() <= 1e-15);
    }

    #[test]
    fn eps_norm_of_linear_field() {
        // u = (x, 0): eps = diag(1, 0), |eps|^2 = 1, integral over unit square = 1.
        let m = build_rect_mesh(
            3,
            3,
            Rect::UNIT,
            SideTags {
                left: BoundaryTag::Gamma1,
                right: BoundaryTag::Gamma2,
                bottom: BoundaryTag::Gamma2,
                top: BoundaryTag::Gamma2,
            },
        )
        .unwrap();
        let mut u = DVector::zeros(2 * m.n_vertices());
        for v in 0..m.n_vertices() {
            u[2 * v] = m.vertices[v][0];
        }
        assert!((eps_l2(&m, &u).unwrap() - 1.0).abs() <= 1e-13);
        assert!((div_u_l2(&m, &u).unwrap() - 1.0).abs() <= 1e-13);
        // H1 norm: |u|^2 = int x^2 = 1/3, |grad u|^2 = 1.
        let expect = (1.0f64 / 3.0 + 1.0).sqrt();
        assert!((u_h1(&m, &u).unwrap() - expect).abs() <= 1e-13);
    }

    #[test]
    fn weighted_flux_norm_matches_quadratic_form() {
        let m = build_rect_mesh(
            2,
            2,
            Rect::UNIT,
            SideTags {
                left: BoundaryTag::Gamma1,
                right: BoundaryTag::Gamma2,
                bottom: BoundaryTag::Gamma2,
                top: BoundaryTag::Gamma2,
            },
        )
        .unwrap();
        let d = make_dofmaps(&m);
        let mz =
            crate::assembly::assemble_rt0_mass(&m, &d, &crate::assembly::MaterialParams::unit())
                .unwrap();
        let z = DVector::from_fn(d.flux.n_dofs, |e, _| (e as f64 * 0.37).sin());
        let n1 = z_weighted(&mz, &z);
        // K = I: the weighted norm is the plain L2 norm, part of z_hdiv.
        let hdiv = z_hdiv(&m, &z).unwrap();
        assert!(n1 <= hdiv + 1e-15);
        assert!(n1 > 0.0);
    }
}
