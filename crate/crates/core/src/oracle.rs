//! Fully implicit reference solve: the unregularized flow equations and the
//! contact variational inequality satisfied simultaneously in one time step.
//! This is the limit object of the fixed-stress iteration and serves as its
//! correctness oracle; it is built for verification, not speed.
//!
//! The coupled linear system in (u, p, z) is factored once; the contact
//! constraints are handled by the same primal-dual active-set update as the
//! split mechanics solver, each trial active set solved exactly through a
//! dense Schur complement on the constraint rows.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{
    assemble_coupling, assemble_elasticity, assemble_loads, Loads, MaterialParams,
};
use crate::contact::{build_constraints, ContactConstraints, ContactOptions, ContactSolution};
use crate::error::Error;
use crate::fespace::DofMaps;
use crate::fixed_stress::{update_sigma_v, State};
use crate::linalg::{eliminate_triplets, zero_constrained, SparseLu, SparseMatrix};
use crate::mesh::Mesh;
use crate::norms;
use crate::Result;

/// Monolithic solution: the coupled state plus the contact certificate.
pub struct MonolithicSolution {
    pub state: State,
    pub contact: ContactSolution,
}

/// Assembled and factored coupled solver for one (mesh, params, loads, dt).
pub struct MonolithicSolver {
    mesh: Mesh,
    params: MaterialParams,
    dt: f64,
    nu: usize,
    np: usize,
    nz: usize,
    lu: SparseLu,
    /// C^{-1} Ntilde^T, one column per contact constraint.
    cinv_nt: DMatrix<f64>,
    /// Ntilde C^{-1} Ntilde^T.
    schur: DMatrix<f64>,
    constraints: ContactConstraints,
    u_constrained: Vec<bool>,
    z_constrained: Vec<bool>,
    coupling_b: SparseMatrix,
    f_base: DVector<f64>,
    qv: DVector<f64>,
    gz: DVector<f64>,
    /// |T| (1/M + c_f phi0), without stabilization.
    s0_diag: DVector<f64>,
    comp_scaling: f64,
    opts: ContactOptions,
}

impl MonolithicSolver {
    pub fn new(
        mesh: Mesh,
        dofmaps: &DofMaps,
        params: MaterialParams,
        loads: &Loads,
        dt: f64,
        opts: ContactOptions,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                msg: "time step must be positive".into(),
            });
        }
        let nu = dofmaps.displacement.n_dofs;
        let np = dofmaps.pressure.n_dofs;
        let nz = dofmaps.flux.n_dofs;
        let u_con = dofmaps.displacement.constrained.clone();
        let z_con = dofmaps.flux.constrained.clone();

        let a = assemble_elasticity(&mesh, dofmaps, &params)?;
        let b = assemble_coupling(&mesh, dofmaps, params.alpha)?;
        let mz = crate::assembly::assemble_rt0_mass(&mesh, dofmaps, &params)?;
        let d = crate::assembly::assemble_div(&mesh, dofmaps);
        let lv = assemble_loads(&mesh, dofmaps, loads, &params)?;
        let s0_diag = DVector::from_fn(np, |t, _| mesh.tri_area(t) * params.storage());

        // Block layout: [u (nu) | p (np) | z (nz)].
        let off_p = nu;
        let off_z = nu + np;
        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        {
            // A block with Gamma1 elimination.
            let mut a_trips = Vec::with_capacity(a.nnz());
            for i in 0..nu {
                for (j, v) in a.row(i) {
                    a_trips.push((i, j, v));
                }
            }
            for (i, j, v) in eliminate_triplets(&a_trips, &u_con, &u_con) {
                trips.push((i, j, v));
            }
        }
        for i in 0..nu {
            if u_con[i] {
                continue;
            }
            for (t, v) in b.row(i) {
                // -B in the u rows, +B^T in the p rows.
                trips.push((i, off_p + t, -v));
                trips.push((off_p + t, i, v));
            }
        }
        for t in 0..np {
            trips.push((off_p + t, off_p + t, s0_diag[t]));
            for (e, v) in d.row(t) {
                if !z_con[e] {
                    trips.push((off_p + t, off_z + e, dt / params.mu_f * v));
                    trips.push((off_z + e, off_p + t, -v));
                }
            }
        }
        for e in 0..nz {
            if z_con[e] {
                trips.push((off_z + e, off_z + e, 1.0));
                continue;
            }
            for (f, v) in mz.row(e) {
                if !z_con[f] {
                    trips.push((off_z + e, off_z + f, v));
                }
            }
        }
        let c = SparseMatrix::from_triplets(nu + np + nz, nu + np + nz, &trips);
        let lu = c.factor_lu()?;

        let constraints = build_constraints(&mesh, dofmaps, loads)?;
        let m = constraints.len();
        let mut nt = DMatrix::zeros(nu + np + nz, m);
        for (i, r) in constraints.rows.iter().enumerate() {
            nt[(2 * r.vertex, i)] = r.normal[0];
            nt[(2 * r.vertex + 1, i)] = r.normal[1];
        }
        let cinv_nt = if m > 0 {
            lu.solve_mat(&nt)
        } else {
            DMatrix::zeros(nu + np + nz, 0)
        };
        let schur = nt.transpose() * &cinv_nt;

        let comp_scaling = opts.comp_scaling.unwrap_or_else(|| {
            let mut acc = 0.0;
            for i in 0..nu {
                acc += a.get(i, i).max(1.0);
            }
            acc / nu as f64
        });

        let mut f_base = lv.f;
        zero_constrained(&mut f_base, &u_con);

        Ok(MonolithicSolver {
            mesh,
            params,
            dt,
            nu,
            np,
            nz,
            lu,
            cinv_nt,
            schur,
            constraints,
            u_constrained: u_con,
            z_constrained: z_con,
            coupling_b: b,
            f_base,
            qv: lv.qv,
            gz: lv.gz,
            s0_diag,
            comp_scaling,
            opts,
        })
    }

    pub fn constraints(&self) -> &ContactConstraints {
        &self.constraints
    }

    fn rhs(&self, prev: &State) -> DVector<f64> {
        let mut rhs = DVector::zeros(self.nu + self.np + self.nz);
        for i in 0..self.nu {
            rhs[i] = self.f_base[i];
        }
        let bt_u_prev = self.coupling_b.tr_matvec(&prev.u);
        for t in 0..self.np {
            rhs[self.nu + t] = self.dt * self.qv[t] + self.s0_diag[t] * prev.p[t] + bt_u_prev[t];
        }
        for e in 0..self.nz {
            if !self.z_constrained[e] {
                rhs[self.nu + self.np + e] = self.gz[e];
            }
        }
        rhs
    }

    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let u = DVector::from_fn(self.nu, |i, _| x[i]);
        let p = DVector::from_fn(self.np, |t, _| x[self.nu + t]);
        let mut z = DVector::zeros(self.nz);
        for e in 0..self.nz {
            if !self.z_constrained[e] {
                z[e] = x[self.nu + self.np + e];
            }
        }
        (u, p, z)
    }

    /// One active-set trial: solve with the given set, return the update.
    fn step(
        &self,
        active: &[usize],
        rhs: &DVector<f64>,
    ) -> Result<(Vec<usize>, DVector<f64>, DVector<f64>)> {
        let base = self.lu.solve(rhs);
        let m = self.constraints.len();
        let mut lam = DVector::zeros(m);
        let mut x = base.clone();
        if !active.is_empty() {
            let k = active.len();
            let schur_sub = DMatrix::from_fn(k, k, |r, c| self.schur[(active[r], active[c])]);
            let u_base = DVector::from_fn(self.nu, |i, _| base[i]);
            let n_base = self.constraints.apply(&u_base);
            let g = self.constraints.gap_vector();
            let rhs_sub = DVector::from_fn(k, |r, _| n_base[active[r]] - g[active[r]]);
            let lam_sub = schur_sub
                .lu()
                .solve(&rhs_sub)
                .ok_or_else(|| Error::LinearSolve("singular coupled Schur complement".into()))?;
            for (r, &i) in active.iter().enumerate() {
                lam[i] = lam_sub[r];
                for row in 0..x.len() {
                    x[row] -= self.cinv_nt[(row, i)] * lam_sub[r];
                }
            }
        }
        let u = DVector::from_fn(self.nu, |i, _| x[i]);
        let nu_vals = self.constraints.apply(&u);
        let g = self.constraints.gap_vector();
        let c = self.comp_scaling;
        let next: Vec<usize> = (0..m)
            .filter(|&i| lam[i] + c * (nu_vals[i] - g[i]) > 0.0)
            .collect();
        Ok((next, x, lam))
    }

    /// Solves the coupled step from a warm-start active set.
    pub fn step_from(&self, prev: &State, start: &[usize]) -> Result<MonolithicSolution> {
        let rhs = self.rhs(prev);
        let mut active: Vec<usize> = start.to_vec();
        active.sort_unstable();
        active.dedup();
        let mut visited = vec![active.clone()];
        let mut history = Vec::new();
        for it in 1..=self.opts.max_as_iters {
            let (next, x, lam) = self.step(&active, &rhs)?;
            history.push(next.len());
            if next == active {
                let (u, p, z) = self.split(&x);
                let sigma_v = update_sigma_v(&self.mesh, &self.params, prev, &u, &p)?;
                return Ok(MonolithicSolution {
                    state: State {
                        u: u.clone(),
                        p,
                        z,
                        sigma_v,
                        time_index: prev.time_index + 1,
                    },
                    contact: ContactSolution {
                        u,
                        multipliers: lam,
                        active,
                        iterations: it,
                    },
                });
            }
            if visited.iter().any(|s| *s == next) {
                return Err(Error::ActiveSetNonConvergence {
                    max_iters: it,
                    history,
                });
            }
            visited.push(next.clone());
            active = next;
        }
        Err(Error::ActiveSetNonConvergence {
            max_iters: self.opts.max_as_iters,
            history,
        })
    }

    /// Solves the coupled step starting from an empty active set.
    pub fn solve_step(&self, prev: &State) -> Result<MonolithicSolution> {
        self.step_from(prev, &[])
    }

    /// Mechanics right-hand side at the converged pressure, for KKT checks.
    pub fn mech_rhs(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut rhs = &self.f_base + self.coupling_b.matvec(p);
        zero_constrained(&mut rhs, &self.u_constrained);
        rhs
    }
}

/// One-shot fully implicit step.
pub fn monolithic_step(
    mesh: &Mesh,
    dofmaps: &DofMaps,
    params: &MaterialParams,
    loads: &Loads,
    dt: f64,
    prev: &State,
) -> Result<State> {
    let solver = MonolithicSolver::new(
        mesh.clone(),
        dofmaps,
        params.clone(),
        loads,
        dt,
        ContactOptions::default(),
    )?;
    Ok(solver.solve_step(prev)?.state)
}

/// One field's discrepancy: absolute norm, reference norm, and the relative
/// value (absolute fallback when the reference is ~0).
#[derive(Debug, Clone, Copy)]
pub struct Discrepancy {
    pub abs: f64,
    pub reference: f64,
    pub rel: f64,
    /// False when the reference norm was ~0 and `rel` reports the absolute
    /// discrepancy instead.
    pub relative_valid: bool,
}

impl Discrepancy {
    fn new(abs: f64, reference: f64) -> Self {
        let relative_valid = reference > 1e-14;
        Discrepancy {
            abs,
            reference,
            rel: if relative_valid { abs / reference } else { abs },
            relative_valid,
        }
    }
}

/// Per-field discrepancies between two states on the same mesh:
/// pressure in L2, displacement in H1, flux in H(div), relative to `b`.
#[derive(Debug, Clone, Copy)]
pub struct StateDiscrepancy {
    pub p_l2: Discrepancy,
    pub u_h1: Discrepancy,
    pub z_hdiv: Discrepancy,
}

impl StateDiscrepancy {
    pub fn max_rel(&self) -> f64 {
        self.p_l2.rel.max(self.u_h1.rel).max(self.z_hdiv.rel)
    }
}

pub fn compare_states(mesh: &Mesh, a: &State, b: &State) -> Result<StateDiscrepancy> {
    if a.u.len() != b.u.len() || a.p.len() != b.p.len() || a.z.len() != b.z.len() {
        return Err(Error::DimensionMismatch(
            "states live on different dof maps".into(),
        ));
    }
    let dp = &a.p - &b.p;
    let du = &a.u - &b.u;
    let dz = &a.z - &b.z;
    Ok(StateDiscrepancy {
        p_l2: Discrepancy::new(norms::p0_l2(mesh, &dp), norms::p0_l2(mesh, &b.p)),
        u_h1: Discrepancy::new(norms::u_h1(mesh, &du)?, norms::u_h1(mesh, &b.u)?),
        z_hdiv: Discrepancy::new(norms::z_hdiv(mesh, &dz)?, norms::z_hdiv(mesh, &b.z)?),
    })
}
