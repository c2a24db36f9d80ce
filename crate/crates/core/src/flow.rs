//! Stabilized mixed flow step: backward-Euler mass balance with piecewise
//! constant pressures and RT0 fluxes, solved monolithically as a sparse
//! saddle system.
//!
//! Per coupling iterate, the pressure equation tested with cell indicators is
//! (after multiplying through by dt, which only rescales the rows):
//!
//! ```text
//! |T| (1/M + c_f phi0 + L) (p_new - p_prev) + (dt/mu_f) (D z_new)
//!     = L |T| (p_it - p_prev) - alpha ( int_T div(u_it - u_prev) ) + dt (q, 1)_T
//! ```
//!
//! and the flux equation is `Mz z_new - D^T p_new = Gz`. Here `p_prev`,
//! `u_prev` are the previous *time level*, `p_it`, `u_it` the previous
//! *coupling iterate*, and `L` the stabilization coefficient (classically
//! alpha^2 / lambda). At the fixed point the `L` terms cancel and the
//! unregularized implicit system remains.
//!
//! The saddle matrix does not depend on the iterate, so it is factored once
//! per (mesh, parameters, dt) and reused across iterations and time steps.

use nalgebra::DVector;

use crate::assembly::{
    assemble_div, assemble_loads, assemble_rt0_mass, Loads, MaterialParams,
};
use crate::error::Error;
use crate::fespace::{local_p1_gradients, DofMaps};
use crate::linalg::{SparseLu, SparseMatrix};
use crate::mesh::Mesh;
use crate::Result;

/// Assembled and factored flow saddle system.
pub struct FlowSystem {
    pub dt: f64,
    mu_f: f64,
    alpha: f64,
    stab_l: f64,
    storage: f64,
    areas: DVector<f64>,
    /// Diagonal |T| (1/M + c_f phi0 + L).
    pub s_diag: DVector<f64>,
    /// Weighted RT0 mass, unconstrained form (also used for flux norms).
    pub mz: SparseMatrix,
    /// Divergence map, cells x edges, entries -1/0/+1.
    pub d: SparseMatrix,
    /// Cell integrals of div(phi_i): (bdiv u)_T = int_T div u.
    bdiv: SparseMatrix,
    qv: DVector<f64>,
    gz: DVector<f64>,
    z_constrained: Vec<bool>,
    lu: SparseLu,
    nz: usize,
    np: usize,
}

impl FlowSystem {
    pub fn new(
        mesh: &Mesh,
        dofmaps: &DofMaps,
        params: &MaterialParams,
        loads: &Loads,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                msg: format!("time step must be positive, got {dt}"),
            });
        }
        params.validate()?;
        let nz = dofmaps.flux.n_dofs;
        let np = dofmaps.pressure.n_dofs;
        let mz = assemble_rt0_mass(mesh, dofmaps, params)?;
        let d = assemble_div(mesh, dofmaps);
        let bdiv = assemble_bdiv(mesh, dofmaps)?;
        let lv = assemble_loads(mesh, dofmaps, loads, params)?;

        let areas = DVector::from_fn(np, |t, _| mesh.tri_area(t));
        let storage = params.storage();
        let s_diag = &areas * (storage + params.stab_l);

        let zc = &dofmaps.flux.constrained;
        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        for e in 0..nz {
            if zc[e] {
                trips.push((e, e, 1.0));
                continue;
            }
            for (f, v) in mz.row(e) {
                if !zc[f] {
                    trips.push((e, f, v));
                }
            }
        }
        for t in 0..np {
            for (e, v) in d.row(t) {
                if !zc[e] {
                    // -D^T in the flux rows, (dt/mu) D in the pressure rows.
                    trips.push((e, nz + t, -v));
                    trips.push((nz + t, e, dt / params.mu_f * v));
                }
            }
            trips.push((nz + t, nz + t, s_diag[t]));
        }
        let saddle = SparseMatrix::from_triplets(nz + np, nz + np, &trips);
        let lu = saddle.factor_lu()?;

        Ok(FlowSystem {
            dt,
            mu_f: params.mu_f,
            alpha: params.alpha,
            stab_l: params.stab_l,
            storage,
            areas,
            s_diag,
            mz,
            d,
            bdiv,
            qv: lv.qv,
            gz: lv.gz,
            z_constrained: zc.clone(),
            lu,
            nz,
            np,
        })
    }

    /// Right-hand side of the pressure rows for the given previous-time and
    /// previous-iterate fields.
    fn pressure_rhs(
        &self,
        p_prev: &DVector<f64>,
        u_prev: &DVector<f64>,
        p_it: &DVector<f64>,
        u_it: &DVector<f64>,
    ) -> DVector<f64> {
        let div_prev = self.bdiv.matvec(u_prev);
        let div_it = self.bdiv.matvec(u_it);
        let mut r = DVector::zeros(self.np);
        for t in 0..self.np {
            r[t] = self.s_diag[t] * p_prev[t]
                + self.stab_l * self.areas[t] * (p_it[t] - p_prev[t])
                - self.alpha * (div_it[t] - div_prev[t])
                + self.dt * self.qv[t];
        }
        r
    }

    /// One flow solve. Returns `(p_new, z_new)`; constrained flux dofs are
    /// exactly zero in `z_new`.
    pub fn step(
        &self,
        p_prev: &DVector<f64>,
        u_prev: &DVector<f64>,
        p_it: &DVector<f64>,
        u_it: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let rp = self.pressure_rhs(p_prev, u_prev, p_it, u_it);
        let mut rhs = DVector::zeros(self.nz + self.np);
        for e in 0..self.nz {
            if !self.z_constrained[e] {
                rhs[e] = self.gz[e];
            }
        }
        for t in 0..self.np {
            rhs[self.nz + t] = rp[t];
        }
        let sol = self.lu.solve(&rhs);
        let mut z = DVector::zeros(self.nz);
        for e in 0..self.nz {
            if !self.z_constrained[e] {
                z[e] = sol[e];
            }
        }
        let p = DVector::from_fn(self.np, |t, _| sol[self.nz + t]);
        (p, z)
    }

    /// Per-cell residual of the discrete mass balance in per-time form
    /// (storage terms divided by dt). Zero to solver precision after a
    /// [`step`](FlowSystem::step).
    pub fn local_mass_balance(
        &self,
        p_new: &DVector<f64>,
        z_new: &DVector<f64>,
        p_prev: &DVector<f64>,
        u_prev: &DVector<f64>,
        p_it: &DVector<f64>,
        u_it: &DVector<f64>,
    ) -> DVector<f64> {
        let dz = self.d.matvec(z_new);
        let div_prev = self.bdiv.matvec(u_prev);
        let div_it = self.bdiv.matvec(u_it);
        DVector::from_fn(self.np, |t, _| {
            let storage_total = self.storage + self.stab_l;
            self.areas[t] * storage_total * (p_new[t] - p_prev[t]) / self.dt
                + dz[t] / self.mu_f
                - (self.stab_l * self.areas[t] * (p_it[t] - p_prev[t]) / self.dt
                    - self.alpha * (div_it[t] - div_prev[t]) / self.dt
                    + self.qv[t])
        })
    }

    /// Magnitude scale for judging mass-balance residuals: the largest
    /// individual term appearing in any cell's balance.
    pub fn balance_scale(
        &self,
        p_new: &DVector<f64>,
        z_new: &DVector<f64>,
        p_prev: &DVector<f64>,
        u_prev: &DVector<f64>,
        p_it: &DVector<f64>,
        u_it: &DVector<f64>,
    ) -> f64 {
        let dz = self.d.matvec(z_new);
        let div_prev = self.bdiv.matvec(u_prev);
        let div_it = self.bdiv.matvec(u_it);
        let mut scale = 1e-300f64;
        for t in 0..self.np {
            let storage_total = self.storage + self.stab_l;
            let terms = [
                self.areas[t] * storage_total * (p_new[t] - p_prev[t]) / self.dt,
                dz[t] / self.mu_f,
                self.stab_l * self.areas[t] * (p_it[t] - p_prev[t]) / self.dt,
                self.alpha * (div_it[t] - div_prev[t]) / self.dt,
                self.qv[t],
            ];
            for v in terms {
                scale = scale.max(v.abs());
            }
        }
        scale.max(1e-30)
    }

    /// Global conservation diagnostics: (sum of per-cell residuals, net
    /// boundary flux `sum_T (D z)_T`). With all boundary fluxes constrained
    /// the divergence sum telescopes to zero exactly.
    pub fn global_balance(
        &self,
        p_new: &DVector<f64>,
        z_new: &DVector<f64>,
        p_prev: &DVector<f64>,
        u_prev: &DVector<f64>,
        p_it: &DVector<f64>,
        u_it: &DVector<f64>,
    ) -> (f64, f64) {
        let res = self.local_mass_balance(p_new, z_new, p_prev, u_prev, p_it, u_it);
        let dz = self.d.matvec(z_new);
        (res.sum(), dz.sum())
    }
}

/// Assembles the map from displacement dofs to cell divergence integrals,
/// entries `int_T d_a phi_i`.
fn assemble_bdiv(mesh: &Mesh, dofmaps: &DofMaps) -> Result<SparseMatrix> {
    let np = dofmaps.pressure.n_dofs;
    let nu = dofmaps.displacement.n_dofs;
    let mut trips = Vec::with_capacity(6 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(t);
        let (g, area) = local_p1_gradients(&coords)?;
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for a in 0..2 {
                trips.push((t, 2 * tri[i] + a, g[i][a] * area));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(np, nu, &trips))
}

/// One-shot flow step: builds the system and solves once. The states are
/// passed as `(p, u)` pairs: previous time level first, previous coupling
/// iterate second.
#[allow(clippy::too_many_arguments)]
pub fn flow_step(
    mesh: &Mesh,
    dofmaps: &DofMaps,
    params: &MaterialParams,
    loads: &Loads,
    dt: f64,
    prev_time: (&DVector<f64>, &DVector<f64>),
    prev_iter: (&DVector<f64>, &DVector<f64>),
) -> Result<(DVector<f64>, DVector<f64>)> {
    let sys = FlowSystem::new(mesh, dofmaps, params, loads, dt)?;
    Ok(sys.step(prev_time.0, prev_time.1, prev_iter.0, prev_iter.1))
}
