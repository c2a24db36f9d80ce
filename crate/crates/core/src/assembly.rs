//! Global sparse operators and load vectors of the coupled discrete problem.
//!
//! Assembled objects (all exact for the constant-coefficient forms, using the
//! degree-2 triangle rule and 2-point Gauss edge rule):
//! - `A`: elasticity, entries `2G (eps(phi_i), eps(phi_j)) + lambda (div phi_i, div phi_j)`;
//! - `B`: pressure-to-displacement coupling, `(B p)_i = alpha (p, div phi_i)`;
//! - `Mz`: permeability-weighted RT0 mass, entries `(K^{-1} phi_e, phi_f)`;
//! - `D`: flux divergence onto cells, entries exactly -1, 0, +1;
//! - load vectors `F` (body force + traction), `Qv` (fluid source), `Gz`
//!   (gravity).
//!
//! Matrices are assembled without essential constraints; use
//! [`crate::linalg::eliminate_triplets`] (or the solver wrappers) to impose
//! them by symmetric row/column elimination with a unit diagonal.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::Error;
use crate::fespace::{edge_gauss2, local_p1_gradients, local_rt0_basis, DofMaps, QuadratureRule};
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundaryTag, Mesh};
use crate::Result;

/// Scalar field of position.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Vector field of position.
pub type VecFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

pub fn scalar_const(c: f64) -> ScalarFn {
    Arc::new(move |_, _| c)
}

pub fn vec_const(v: [f64; 2]) -> VecFn {
    Arc::new(move |_, _| v)
}

/// Elevation field for the gravity term; its gradient is what enters the
/// flux equation.
#[derive(Clone)]
pub enum EtaField {
    /// No elevation dependence (gravity term vanishes).
    None,
    /// eta with a constant, analytically known gradient.
    Linear { grad: [f64; 2] },
    /// General field; differentiated elementwise through its P1 interpolant.
    Field(ScalarFn),
}

impl std::fmt::Debug for EtaField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EtaField::None => write!(f, "EtaField::None"),
            EtaField::Linear { grad } => write!(f, "EtaField::Linear({grad:?})"),
            EtaField::Field(_) => write!(f, "EtaField::Field(..)"),
        }
    }
}

/// All physical coefficients of the model plus the stabilization parameter of
/// the fixed-stress split.
#[derive(Debug, Clone)]
pub struct MaterialParams {
    /// First Lame parameter (> 0).
    pub lambda: f64,
    /// Shear modulus (> 0).
    pub g_shear: f64,
    /// Biot coefficient in [0, 1]; 0 selects the fully decoupled limit.
    pub alpha: f64,
    /// Biot modulus (> 0, finite).
    pub m_biot: f64,
    /// Fluid compressibility (>= 0).
    pub c_f: f64,
    /// Reference porosity in [0, 1).
    pub phi0: f64,
    /// Fluid viscosity (> 0).
    pub mu_f: f64,
    /// Permeability tensor, symmetric positive definite.
    pub k_perm: [[f64; 2]; 2],
    /// Reference fluid density.
    pub rho_f_r: f64,
    /// Gravitational acceleration.
    pub g_grav: f64,
    /// Elevation field.
    pub eta: EtaField,
    /// Fixed-stress stabilization coefficient; the classical choice is
    /// alpha^2 / lambda. Convergence is guaranteed above alpha^2 / (2 lambda).
    pub stab_l: f64,
}

impl MaterialParams {
    /// Baseline unit-coefficient parameter set with the default
    /// stabilization alpha^2 / lambda; adjust fields and re-[`validate`].
    ///
    /// [`validate`]: MaterialParams::validate
    pub fn unit() -> Self {
        MaterialParams {
            lambda: 1.0,
            g_shear: 1.0,
            alpha: 1.0,
            m_biot: 1.0,
            c_f: 0.0,
            phi0: 0.0,
            mu_f: 1.0,
            k_perm: [[1.0, 0.0], [0.0, 1.0]],
            rho_f_r: 0.0,
            g_grav: 0.0,
            eta: EtaField::None,
            stab_l: 1.0,
        }
    }

    /// The classical stabilization value alpha^2 / lambda.
    pub fn default_stab(&self) -> f64 {
        self.alpha * self.alpha / self.lambda
    }

    /// Resets `stab_l` to the classical value.
    pub fn with_default_stab(mut self) -> Self {
        self.stab_l = self.default_stab();
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn req(cond: bool, name: &'static str, msg: &str) -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    msg: msg.into(),
                })
            }
        }
        req(self.lambda > 0.0, "lambda", "must be positive")?;
        req(self.g_shear > 0.0, "g_shear", "must be positive")?;
        req(
            (0.0..=1.0).contains(&self.alpha),
            "alpha",
            "must lie in [0, 1]",
        )?;
        req(
            self.m_biot > 0.0 && self.m_biot.is_finite(),
            "m_biot",
            "must be positive and finite",
        )?;
        req(self.c_f >= 0.0, "c_f", "must be nonnegative")?;
        req(
            (0.0..1.0).contains(&self.phi0),
            "phi0",
            "must lie in [0, 1)",
        )?;
        req(self.mu_f > 0.0, "mu_f", "must be positive")?;
        let k = &self.k_perm;
        req(
            (k[0][1] - k[1][0]).abs() <= 1e-14 * (1.0 + k[0][1].abs()),
            "k_perm",
            "must be symmetric",
        )?;
        req(
            k[0][0] > 0.0 && k[0][0] * k[1][1] - k[0][1] * k[1][0] > 0.0,
            "k_perm",
            "must be positive definite",
        )?;
        if self.alpha > 0.0 {
            req(self.stab_l > 0.0, "stab_l", "must be positive when alpha > 0")?;
        } else {
            req(self.stab_l >= 0.0, "stab_l", "must be nonnegative")?;
        }
        Ok(())
    }

    /// Inverse permeability tensor.
    pub fn k_inv(&self) -> [[f64; 2]; 2] {
        let k = &self.k_perm;
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        [
            [k[1][1] / det, -k[0][1] / det],
            [-k[1][0] / det, k[0][0] / det],
        ]
    }

    /// Storage coefficient 1/M + c_f phi0 (without stabilization).
    pub fn storage(&self) -> f64 {
        1.0 / self.m_biot + self.c_f * self.phi0
    }
}

/// Problem data: body force, boundary traction, fluid source, contact gap.
#[derive(Clone)]
pub struct Loads {
    /// Body force density on the domain.
    pub f0: VecFn,
    /// Traction on Gamma2.
    pub f2: VecFn,
    /// Volumetric fluid source.
    pub q_src: ScalarFn,
    /// Gap to the rigid foundation on Gamma3 (must be nonnegative there).
    pub gap: ScalarFn,
}

impl Loads {
    pub fn zero() -> Self {
        Loads {
            f0: vec_const([0.0, 0.0]),
            f2: vec_const([0.0, 0.0]),
            q_src: scalar_const(0.0),
            gap: scalar_const(0.0),
        }
    }
}

impl std::fmt::Debug for Loads {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Loads {{ .. }}")
    }
}

/// Assembled load vectors.
#[derive(Debug, Clone)]
pub struct LoadVectors {
    /// Mechanics right-hand side: (f0, phi_i) + (f2, phi_i)_{Gamma2}.
    pub f: DVector<f64>,
    /// Cell source integrals (q, 1)_T.
    pub qv: DVector<f64>,
    /// Gravity contributions (rho_f g grad eta, phi_e).
    pub gz: DVector<f64>,
}

/// Elasticity stiffness 2G (eps, eps) + lambda (div, div), without essential
/// constraints (its nullspace is exactly the rigid motions).
pub fn assemble_elasticity(
    mesh: &Mesh,
    dofmaps: &DofMaps,
    params: &MaterialParams,
) -> Result<SparseMatrix> {
    assemble_elasticity_weighted(mesh, dofmaps, 2.0 * params.g_shear, params.lambda)
}

/// Elasticity-type operator `w_eps (eps, eps) + w_div (div, div)`; also used
/// to build the strain inner product for iteration norms.
pub fn assemble_elasticity_weighted(
    mesh: &Mesh,
    dofmaps: &DofMaps,
    w_eps: f64,
    w_div: f64,
) -> Result<SparseMatrix> {
    let n = dofmaps.displacement.n_dofs;
    let mut trips = Vec::with_capacity(36 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, area) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        // eps(phi_i e_a) : eps(phi_j e_b), constant on T.
                        let eps_ip = if a == b {
                            g[i][a] * g[j][b] + 0.5 * g[i][1 - a] * g[j][1 - b]
                        } else {
                            0.5 * g[i][b] * g[j][a]
                        };
                        let val = (w_eps * eps_ip + w_div * g[i][a] * g[j][b]) * area;
                        trips.push((2 * tri[i] + a, 2 * tri[j] + b, val));
                    }
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, &trips))
}

/// Pressure-to-displacement coupling `B` with `(B p)_i = alpha (p, div phi_i)`.
/// Its transpose appears in the flow equation.
pub fn assemble_coupling(mesh: &Mesh, dofmaps: &DofMaps, alpha: f64) -> Result<SparseMatrix> {
    let nu = dofmaps.displacement.n_dofs;
    let np = dofmaps.pressure.n_dofs;
    let mut trips = Vec::with_capacity(6 * mesh.n_triangles());
    if alpha != 0.0 {
        for t in 0..mesh.n_triangles() {
            let coords = mesh.tri_coords(t);
            let (g, area) = local_p1_gradients(&coords)?;
            let tri = mesh.triangles[t];
            for i in 0..3 {
                for a in 0..2 {
                    trips.push((2 * tri[i] + a, t, alpha * g[i][a] * area));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(nu, np, &trips))
}

/// Permeability-weighted RT0 mass matrix with entries `(K^{-1} phi_e, phi_f)`.
pub fn assemble_rt0_mass(mesh: &Mesh, dofmaps: &DofMaps, params: &MaterialParams) -> Result<SparseMatrix> {
    let nz = dofmaps.flux.n_dofs;
    let kinv = params.k_inv();
    let quad = QuadratureRule::tri_midpoint();
    let mut trips = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let signs = [
            mesh.tri_edges[t][0].1,
            mesh.tri_edges[t][1].1,
            mesh.tri_edges[t][2].1,
        ];
        let basis = local_rt0_basis(&coords, &signs)?;
        for ke in 0..3 {
            let (e, _) = mesh.tri_edges[t][ke];
            for kf in 0..3 {
                let (f, _) = mesh.tri_edges[t][kf];
                let val = quad.integrate(&coords, |x| {
                    let pe = basis.eval(ke, x);
                    let pf = basis.eval(kf, x);
                    let kin_pe = [
                        kinv[0][0] * pe[0] + kinv[0][1] * pe[1],
                        kinv[1][0] * pe[0] + kinv[1][1] * pe[1],
                    ];
                    kin_pe[0] * pf[0] + kin_pe[1] * pf[1]
                });
                trips.push((e, f, val));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(nz, nz, &trips))
}

/// Plain RT0 mass matrix (K = I), used for flux norms.
pub fn assemble_rt0_mass_plain(mesh: &Mesh, dofmaps: &DofMaps) -> Result<SparseMatrix> {
    let mut p = MaterialParams::unit();
    p.k_perm = [[1.0, 0.0], [0.0, 1.0]];
    assemble_rt0_mass(mesh, dofmaps, &p)
}

/// Divergence operator `D` mapping flux dofs to cells: entry (T, e) equals
/// the integral of div phi_e over T, which is the orientation sign, exactly
/// -1, 0 or +1.
pub fn assemble_div(mesh: &Mesh, dofmaps: &DofMaps) -> SparseMatrix {
    let np = dofmaps.pressure.n_dofs;
    let nz = dofmaps.flux.n_dofs;
    let mut trips = Vec::with_capacity(3 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        for k in 0..3 {
            let (e, sign) = mesh.tri_edges[t][k];
            trips.push((t, e, sign));
        }
    }
    SparseMatrix::from_triplets(np, nz, &trips)
}

/// Per-cell divergence of a P1 displacement vector (a P0 field).
pub fn displacement_divergence(mesh: &Mesh, u: &DVector<f64>) -> Result<DVector<f64>> {
    let mut div = DVector::zeros(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, _) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        let mut d = 0.0;
        for i in 0..3 {
            d += u[2 * tri[i]] * g[i][0] + u[2 * tri[i] + 1] * g[i][1];
        }
        div[t] = d;
    }
    Ok(div)
}

/// Assembles the load vectors F, Qv and Gz.
pub fn assemble_loads(
    mesh: &Mesh,
    dofmaps: &DofMaps,
    loads: &Loads,
    params: &MaterialParams,
) -> Result<LoadVectors> {
    let quad = QuadratureRule::tri_midpoint();
    let mut f = DVector::zeros(dofmaps.displacement.n_dofs);
    let mut qv = DVector::zeros(dofmaps.pressure.n_dofs);
    let mut gz = DVector::zeros(dofmaps.flux.n_dofs);

    let rho_g = params.rho_f_r * params.g_grav;

    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, area) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        // Body force against P1 hats.
        for i in 0..3 {
            let hat = |x: [f64; 2]| {
                1.0 + g[i][0] * (x[0] - coords[i][0]) + g[i][1] * (x[1] - coords[i][1])
            };
            for a in 0..2 {
                let val = quad.integrate(&coords, |x| (loads.f0)(x[0], x[1])[a] * hat(x));
                f[2 * tri[i] + a] += val;
            }
        }
        // Source against cell indicators.
        qv[t] += quad.integrate(&coords, |x| (loads.q_src)(x[0], x[1]));
        // Gravity against RT0.
        if rho_g != 0.0 {
            let grad_eta = match &params.eta {
                EtaField::None => [0.0, 0.0],
                EtaField::Linear { grad } => *grad,
                EtaField::Field(eta) => {
                    // Gradient of the P1 interpolant on this element.
                    let mut ge = [0.0, 0.0];
                    for i in 0..3 {
                        let v = eta(coords[i][0], coords[i][1]);
                        ge[0] += v * g[i][0];
                        ge[1] += v * g[i][1];
                    }
                    ge
                }
            };
            if grad_eta != [0.0, 0.0] {
                let signs = [
                    mesh.tri_edges[t][0].1,
                    mesh.tri_edges[t][1].1,
                    mesh.tri_edges[t][2].1,
                ];
                let basis = local_rt0_basis(&coords, &signs)?;
                for k in 0..3 {
                    let (e, _) = mesh.tri_edges[t][k];
                    let val = quad.integrate(&coords, |x| {
                        let phi = basis.eval(k, x);
                        rho_g * (grad_eta[0] * phi[0] + grad_eta[1] * phi[1])
                    });
                    gz[e] += val;
                }
            }
        }
        let _ = area;
    }

    // Traction on Gamma2 against the P1 trace (2-point Gauss per edge).
    for &e in &mesh.boundary_edges_with_tag(BoundaryTag::Gamma2) {
        let ed = &mesh.edges[e];
        let pa = mesh.vertices[ed.v[0]];
        let pb = mesh.vertices[ed.v[1]];
        for (s, w) in edge_gauss2() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let tr = (loads.f2)(x[0], x[1]);
            // P1 traces on the edge: 1-s at v0, s at v1.
            for (v, hat) in [(ed.v[0], 1.0 - s), (ed.v[1], s)] {
                for a in 0..2 {
                    f[2 * v + a] += w * ed.length * tr[a] * hat;
                }
            }
        }
    }

    Ok(LoadVectors { f, qv, gz })
}
