//! Test-only oracles, independent of the library's assembly and solver
//! paths: dense finite element assembly built from first principles
//! (Vandermonde solves for P1 hats, moment conditions for RT0) and
//! exhaustive active-set enumeration for the contact problems.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use porocontact::assembly::MaterialParams;
use porocontact::contact::ContactConstraints;
use porocontact::mesh::Mesh;

/// Degree-5 (7-point) triangle quadrature in barycentric coordinates,
/// weights normalized to sum 1 (multiply by the triangle area).
pub fn quad7() -> (Vec<[f64; 3]>, Vec<f64>) {
    let a = (6.0 + 15.0f64.sqrt()) / 21.0;
    let b = (6.0 - 15.0f64.sqrt()) / 21.0;
    let wa = (155.0 + 15.0f64.sqrt()) / 1200.0;
    let wb = (155.0 - 15.0f64.sqrt()) / 1200.0;
    (
        vec![
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [1.0 - 2.0 * a, a, a],
            [a, 1.0 - 2.0 * a, a],
            [a, a, 1.0 - 2.0 * a],
            [1.0 - 2.0 * b, b, b],
            [b, 1.0 - 2.0 * b, b],
            [b, b, 1.0 - 2.0 * b],
        ],
        vec![9.0 / 40.0, wa, wa, wa, wb, wb, wb],
    )
}

/// P1 hat function coefficients (value = a + b x + c y) for each vertex of a
/// triangle, obtained by solving the 3x3 Vandermonde system.
pub fn hat_coeffs(coords: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let v = Matrix3::new(
        1.0, coords[0][0], coords[0][1], //
        1.0, coords[1][0], coords[1][1], //
        1.0, coords[2][0], coords[2][1],
    );
    let lu = v.lu();
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = 1.0;
        let c = lu.solve(&e).expect("nondegenerate triangle");
        out[i] = [c[0], c[1], c[2]];
    }
    out
}

pub fn hat_eval(c: &[f64; 3], x: [f64; 2]) -> f64 {
    c[0] + c[1] * x[0] + c[2] * x[1]
}

/// RT0 basis on a triangle in the form phi = (a + c x, b + c y), constructed
/// from the moment conditions `int_{e_j} phi . n_j ds = delta_{jk}` with the
/// mesh's stored global edge normals. Returns the (a, b, c) triple per local
/// edge.
pub fn rt0_coeffs_oracle(mesh: &Mesh, tri: usize) -> [[f64; 3]; 3] {
    let mut m = Matrix3::zeros();
    for (j, &(e, _)) in mesh.tri_edges[tri].iter().enumerate() {
        let ed = &mesh.edges[e];
        let pa = mesh.vertices[ed.v[0]];
        let pb = mesh.vertices[ed.v[1]];
        // 2-point Gauss on the edge; integrand linear in arc length.
        let gp = [0.5 - 1.0 / (2.0 * 3.0f64.sqrt()), 0.5 + 1.0 / (2.0 * 3.0f64.sqrt())];
        for s in gp {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let w = 0.5 * ed.length;
            // Columns: coefficients of the fields (1,0), (0,1), (x,y).
            m[(j, 0)] += w * ed.normal[0];
            m[(j, 1)] += w * ed.normal[1];
            m[(j, 2)] += w * (x[0] * ed.normal[0] + x[1] * ed.normal[1]);
        }
    }
    let lu = m.lu();
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = 1.0;
        let c = lu.solve(&e).expect("RT0 moment system nonsingular");
        out[k] = [c[0], c[1], c[2]];
    }
    out
}

pub fn rt0_eval(c: &[f64; 3], x: [f64; 2]) -> [f64; 2] {
    [c[0] + c[2] * x[0], c[1] + c[2] * x[1]]
}

pub fn rt0_div(c: &[f64; 3]) -> f64 {
    2.0 * c[2]
}

/// Dense elasticity matrix assembled independently with the degree-5 rule.
pub fn dense_elasticity(mesh: &Mesh, lambda: f64, g_shear: f64) -> DMatrix<f64> {
    let n = 2 * mesh.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let hats = hat_coeffs(&coords);
        let area = mesh.tri_area(t);
        let conn = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                for ca in 0..2 {
                    for cb in 0..2 {
                        // Strain of hat_i e_ca from its gradient (b, c);
                        // the integrand is constant over the element.
                        let gi = [hats[i][1], hats[i][2]];
                        let gj = [hats[j][1], hats[j][2]];
                        let eps_i = strain(gi, ca);
                        let eps_j = strain(gj, cb);
                        let contraction = 2.0
                            * g_shear
                            * (eps_i[0] * eps_j[0]
                                + eps_i[1] * eps_j[1]
                                + 2.0 * eps_i[2] * eps_j[2])
                            + lambda * gi[ca] * gj[cb];
                        a[(2 * conn[i] + ca, 2 * conn[j] + cb)] += area * contraction;
                    }
                }
            }
        }
    }
    a
}

/// Symmetric strain (e11, e22, e12) of the field hat * e_component with the
/// given hat gradient.
fn strain(grad: [f64; 2], component: usize) -> [f64; 3] {
    if component == 0 {
        [grad[0], 0.0, 0.5 * grad[1]]
    } else {
        [0.0, grad[1], 0.5 * grad[0]]
    }
}

/// Dense weighted RT0 mass matrix via the independent basis and quadrature.
pub fn dense_rt0_mass(mesh: &Mesh, params: &MaterialParams) -> DMatrix<f64> {
    let n = mesh.n_edges();
    let mut m = DMatrix::zeros(n, n);
    let kinv = params.k_inv();
    let (pts, wts) = quad7();
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let basis = rt0_coeffs_oracle(mesh, t);
        let area = mesh.tri_area(t);
        for ke in 0..3 {
            let (e, _) = mesh.tri_edges[t][ke];
            for kf in 0..3 {
                let (f, _) = mesh.tri_edges[t][kf];
                let mut val = 0.0;
                for (bary, w) in pts.iter().zip(&wts) {
                    let x = [
                        bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                        bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
                    ];
                    let pe = rt0_eval(&basis[ke], x);
                    let pf = rt0_eval(&basis[kf], x);
                    let kp = [
                        kinv[0][0] * pe[0] + kinv[0][1] * pe[1],
                        kinv[1][0] * pe[0] + kinv[1][1] * pe[1],
                    ];
                    val += w * area * (kp[0] * pf[0] + kp[1] * pf[1]);
                }
                m[(e, f)] += val;
            }
        }
    }
    m
}

/// Dense divergence map (cells x edges) via the independent basis.
pub fn dense_div(mesh: &Mesh) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(mesh.n_triangles(), mesh.n_edges());
    for t in 0..mesh.n_triangles() {
        let basis = rt0_coeffs_oracle(mesh, t);
        for k in 0..3 {
            let (e, _) = mesh.tri_edges[t][k];
            d[(t, e)] += rt0_div(&basis[k]) * mesh.tri_area(t);
        }
    }
    d
}

/// Dense coupling map (displacement dofs x cells), entries alpha int_T div hat.
pub fn dense_coupling(mesh: &Mesh, alpha: f64) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(2 * mesh.n_vertices(), mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let hats = hat_coeffs(&coords);
        let conn = mesh.triangles[t];
        for i in 0..3 {
            for c in 0..2 {
                b[(2 * conn[i] + c, t)] += alpha * hats[i][1 + c] * mesh.tri_area(t);
            }
        }
    }
    b
}

/// Exhaustive active-set solve of `min 1/2 u'Au - rhs'u` s.t. `N u <= g`:
/// enumerates all subsets, solves each equality-constrained bordered system
/// densely, and returns the unique KKT-feasible candidate.
pub fn enumerate_contact_qp(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    constraints: &ContactConstraints,
    tol: f64,
) -> Option<(DVector<f64>, DVector<f64>, Vec<usize>)> {
    let n = a.nrows();
    let m = constraints.len();
    assert!(m <= 14, "enumeration limited to small constraint counts");
    let g = constraints.gap_vector();
    let mut best: Option<(DVector<f64>, DVector<f64>, Vec<usize>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        let mut sys = DMatrix::zeros(n + k, n + k);
        sys.view_mut((0, 0), (n, n)).copy_from(a);
        for (r, &i) in active.iter().enumerate() {
            let row = &constraints.rows[i];
            sys[(2 * row.vertex, n + r)] = row.normal[0];
            sys[(2 * row.vertex + 1, n + r)] = row.normal[1];
            sys[(n + r, 2 * row.vertex)] = row.normal[0];
            sys[(n + r, 2 * row.vertex + 1)] = row.normal[1];
        }
        let mut b = DVector::zeros(n + k);
        b.rows_mut(0, n).copy_from(rhs);
        for (r, &i) in active.iter().enumerate() {
            b[n + r] = g[i];
        }
        let Some(sol) = sys.lu().solve(&b) else {
            continue;
        };
        let u = DVector::from_fn(n, |i, _| sol[i]);
        let mut lam = DVector::zeros(m);
        for (r, &i) in active.iter().enumerate() {
            lam[i] = sol[n + r];
        }
        // KKT screen.
        let nu = constraints.apply(&u);
        let scale = nu.amax().max(g.amax()).max(1.0);
        let feasible = (0..m).all(|i| nu[i] - g[i] <= tol * scale);
        let lam_scale = lam.amax().max(1.0);
        let signed = (0..m).all(|i| lam[i] >= -tol * lam_scale);
        if feasible && signed {
            if let Some((u_prev, _, _)) = &best {
                // Uniqueness: any other KKT-feasible subset must yield the
                // same displacement (degenerate multipliers can differ).
                assert!(
                    (u_prev - &u).amax() <= 1e-8 * (1.0 + u.amax()),
                    "two distinct KKT points found"
                );
            } else {
                best = Some((u, lam, active));
            }
        }
    }
    best
}

/// Deterministic pseudo-random numbers for oracle tests.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        // Numerical Recipes LCG; plenty for test data.
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}
