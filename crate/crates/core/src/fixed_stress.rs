//! Fixed-stress coupling loop: within each backward-Euler time step,
//! alternate the stabilized flow solve and the contact mechanics solve until
//! the volumetric mean total stress settles, monitoring the per-iteration
//! contraction.
//!
//! The volumetric mean total stress iterate is maintained cellwise as
//!
//! ```text
//! sigma_v = sigma_v_prev + lambda div(u_it) - alpha (p_it - p_prev)
//! ```
//!
//! with `prev` the previous time level. Differences of consecutive iterates
//! then satisfy `d sigma_v = lambda div(du) - alpha dp`, and with the
//! classical stabilization `L = alpha^2 / lambda` every pair of consecutive
//! scheme-generated differences obeys the contraction inequality
//!
//! ```text
//! |d sigma_v|^2 + (2 dt / (mu_f beta)) |K^{-1/2} dz|^2
//!     + 4 G lambda |eps(du)|^2 + lambda^2 |div du|^2
//!     <= (1 / (lambda beta))^2 |d sigma_v_previous|^2,
//! beta = 1 / (M alpha^2) + c_f phi0 / alpha^2 + 1 / lambda.
//! ```
//!
//! Each solve records the norms appearing in that inequality; the observed
//! squared ratio of consecutive `|d sigma_v|` values is reported next to the
//! theoretical bound, and violations beyond a small relative slack are
//! collected rather than masked.

use nalgebra::DVector;

use crate::assembly::{
    assemble_coupling, assemble_elasticity, assemble_loads, displacement_divergence, Loads,
    MaterialParams,
};
use crate::contact::{build_constraints, check_kkt, ContactOptions, ContactSolution, MechSolver};
use crate::error::Error;
use crate::fespace::{make_dofmaps, DofMaps};
use crate::flow::FlowSystem;
use crate::linalg::{eliminate_triplets, zero_constrained, SparseMatrix};
use crate::mesh::Mesh;
use crate::norms;
use crate::Result;

/// Discrete fields at one time level (or one coupling iterate).
#[derive(Debug, Clone)]
pub struct State {
    /// Nodal displacements (2 per vertex).
    pub u: DVector<f64>,
    /// Cell pressures.
    pub p: DVector<f64>,
    /// Edge fluxes.
    pub z: DVector<f64>,
    /// Cell volumetric mean total stress.
    pub sigma_v: DVector<f64>,
    /// Time level index; 0 is the initial state.
    pub time_index: usize,
}

impl State {
    pub fn zeros(dofmaps: &DofMaps) -> Self {
        State {
            u: DVector::zeros(dofmaps.displacement.n_dofs),
            p: DVector::zeros(dofmaps.pressure.n_dofs),
            z: DVector::zeros(dofmaps.flux.n_dofs),
            sigma_v: DVector::zeros(dofmaps.pressure.n_dofs),
            time_index: 0,
        }
    }

    /// Initial state from given fields, with
    /// `sigma_v = lambda div(u0) - alpha p0` (the constant offset is
    /// immaterial: only increments enter the scheme and its monitor).
    pub fn from_initial(
        mesh: &Mesh,
        dofmaps: &DofMaps,
        params: &MaterialParams,
        u0: DVector<f64>,
        p0: DVector<f64>,
    ) -> Result<Self> {
        if u0.len() != dofmaps.displacement.n_dofs || p0.len() != dofmaps.pressure.n_dofs {
            return Err(Error::DimensionMismatch(
                "initial fields do not match the dof maps".into(),
            ));
        }
        let div = displacement_divergence(mesh, &u0)?;
        let sigma_v = DVector::from_fn(mesh.n_triangles(), |t, _| {
            params.lambda * div[t] - params.alpha * p0[t]
        });
        Ok(State {
            u: u0,
            p: p0,
            z: DVector::zeros(dofmaps.flux.n_dofs),
            sigma_v,
            time_index: 0,
        })
    }
}

/// beta = 1/(M alpha^2) + c_f phi0 / alpha^2 + 1/lambda. Undefined for
/// alpha = 0 (the decoupled path does not monitor contraction).
pub fn beta(params: &MaterialParams) -> Result<f64> {
    if params.alpha == 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            msg: "beta is undefined for alpha = 0".into(),
        });
    }
    let a2 = params.alpha * params.alpha;
    Ok(1.0 / (params.m_biot * a2) + params.c_f * params.phi0 / a2 + 1.0 / params.lambda)
}

/// Theoretical contraction factor (1 / (lambda beta))^2, strictly below 1.
pub fn contraction_bound(params: &MaterialParams) -> Result<f64> {
    let b = beta(params)?;
    Ok((1.0 / (params.lambda * b)).powi(2))
}

/// Volumetric mean total stress of an iterate `(u_it, p_it)` relative to the
/// previous time level.
pub fn update_sigma_v(
    mesh: &Mesh,
    params: &MaterialParams,
    prev: &State,
    u_it: &DVector<f64>,
    p_it: &DVector<f64>,
) -> Result<DVector<f64>> {
    let div = displacement_divergence(mesh, u_it)?;
    Ok(DVector::from_fn(mesh.n_triangles(), |t, _| {
        prev.sigma_v[t] + params.lambda * div[t] - params.alpha * (p_it[t] - prev.p[t])
    }))
}

/// Norms and monitoring data of one coupling iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Iteration index within the time step, starting at 1.
    pub n: usize,
    /// |d sigma_v| in L2.
    pub norm_dsigma: f64,
    /// |alpha dp| in L2.
    pub norm_adp: f64,
    /// |K^{-1/2} dz| in L2.
    pub norm_dz: f64,
    /// |eps(du)| in L2.
    pub norm_eps_du: f64,
    /// |div du| in L2.
    pub norm_div_du: f64,
    /// Observed squared contraction ratio
    /// |d sigma_v^n|^2 / |d sigma_v^{n-1}|^2; `None` when the previous
    /// difference vanishes or n = 1.
    pub ratio: Option<f64>,
    /// Theoretical bound (1/(lambda beta))^2; `None` when alpha = 0.
    pub bound: Option<f64>,
    pub active_set_size: usize,
}

impl IterationRecord {
    /// Left-hand side of the composite contraction inequality.
    pub fn composite_lhs(&self, params: &MaterialParams, dt: f64) -> Option<f64> {
        let b = beta(params).ok()?;
        Some(
            self.norm_dsigma.powi(2)
                + 2.0 * dt / (params.mu_f * b) * self.norm_dz.powi(2)
                + 4.0 * params.g_shear * params.lambda * self.norm_eps_du.powi(2)
                + params.lambda.powi(2) * self.norm_div_du.powi(2),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

/// Per-time-step iteration history.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Convergence scale max(|sigma_v_prev|, floor).
    pub sigma_scale: f64,
    /// Iterations n >= 2 whose composite inequality exceeded the bound by
    /// more than the monitoring slack.
    pub violations: Vec<usize>,
}

impl IterationReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Largest observed squared ratio over iterations n >= 2.
    pub fn worst_ratio(&self) -> Option<f64> {
        self.records
            .iter()
            .skip(1)
            .filter_map(|r| r.ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }
}

/// Options of the coupling loop.
#[derive(Debug, Clone)]
pub struct CouplingOptions {
    /// Relative tolerance on |d sigma_v|.
    pub tol: f64,
    /// Absolute floor of the convergence scale.
    pub floor: f64,
    pub max_iters: usize,
    /// Relative slack of the contraction monitor.
    pub contraction_slack: f64,
    pub contact: ContactOptions,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            tol: 1e-10,
            floor: 1.0,
            max_iters: 200,
            contraction_slack: 1e-8,
            contact: ContactOptions::default(),
        }
    }
}

/// Outcome of one coupling iteration.
pub struct IterateOutcome {
    pub state: State,
    pub record: IterationRecord,
    pub contact: ContactSolution,
}

/// Simulation result; `failure` is set when a step aborted, with all states
/// computed so far retained (`states[0]` is the initial state).
#[derive(Debug)]
pub struct SimulationResult {
    pub states: Vec<State>,
    pub reports: Vec<IterationReport>,
    pub failure: Option<(usize, Box<Error>)>,
}

/// Assembled, factored context for one (mesh, parameters, loads, dt)
/// configuration. All solves reuse the factorizations; the struct is
/// immutable and reentrant, so independent runs can share it across threads.
pub struct Simulator {
    pub mesh: Mesh,
    pub dofmaps: DofMaps,
    pub params: MaterialParams,
    pub loads: Loads,
    pub dt: f64,
    pub opts: CouplingOptions,
    pub flow: FlowSystem,
    mech: MechSolver,
    coupling_b: SparseMatrix,
    f_base: DVector<f64>,
    bound: Option<f64>,
}

impl Simulator {
    /// Builds the context with the default (sealed-boundary) dof maps.
    pub fn new(
        mesh: Mesh,
        params: MaterialParams,
        loads: Loads,
        dt: f64,
        opts: CouplingOptions,
    ) -> Result<Self> {
        let dofmaps = make_dofmaps(&mesh);
        Self::with_dofmaps(mesh, dofmaps, params, loads, dt, opts)
    }

    /// Builds the context with caller-supplied dof maps (e.g. with drained
    /// boundary segments).
    pub fn with_dofmaps(
        mesh: Mesh,
        dofmaps: DofMaps,
        params: MaterialParams,
        loads: Loads,
        dt: f64,
        opts: CouplingOptions,
    ) -> Result<Self> {
        params.validate()?;
        let flow = FlowSystem::new(&mesh, &dofmaps, &params, &loads, dt)?;
        let a = assemble_elasticity(&mesh, &dofmaps, &params)?;
        let mut trips = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows() {
            for (j, v) in a.row(i) {
                trips.push((i, j, v));
            }
        }
        let con = &dofmaps.displacement.constrained;
        let a_elim = SparseMatrix::from_triplets(
            a.nrows(),
            a.ncols(),
            &eliminate_triplets(&trips, con, con),
        );
        let constraints = build_constraints(&mesh, &dofmaps, &loads)?;
        let mech = MechSolver::new(a_elim, constraints, con.clone(), opts.contact.clone())?;
        let coupling_b = assemble_coupling(&mesh, &dofmaps, params.alpha)?;
        let lv = assemble_loads(&mesh, &dofmaps, &loads, &params)?;
        let mut f_base = lv.f;
        zero_constrained(&mut f_base, con);
        let bound = if params.alpha > 0.0 {
            Some(contraction_bound(&params)?)
        } else {
            None
        };
        Ok(Simulator {
            mesh,
            dofmaps,
            params,
            loads,
            dt,
            opts,
            flow,
            mech,
            coupling_b,
            f_base,
            bound,
        })
    }

    pub fn zero_state(&self) -> State {
        State::zeros(&self.dofmaps)
    }

    pub fn contact_constraints(&self) -> &crate::contact::ContactConstraints {
        self.mech.constraints()
    }

    /// Mechanics right-hand side for a given pressure iterate
    /// (loads plus the pressure coupling term), eliminated.
    pub fn mech_rhs(&self, p: &DVector<f64>) -> DVector<f64> {
        let mut rhs = &self.f_base + self.coupling_b.matvec(p);
        zero_constrained(&mut rhs, &self.dofmaps.displacement.constrained);
        rhs
    }

    /// KKT residuals of a mechanics solution against the current pressure.
    pub fn check_contact_kkt(&self, p: &DVector<f64>, sol: &ContactSolution) -> crate::contact::KktReport {
        check_kkt(self.mech.matrix(), &self.mech_rhs(p), self.mech.constraints(), sol)
    }

    /// One fixed-stress iteration: flow step with the previous iterate
    /// lagged, then the mechanics variational inequality with the new
    /// pressure. `prev` is the previous time level, `cur` the previous
    /// iterate; `prev_dsigma` (if any) feeds the reported ratio.
    pub fn coupled_iterate(
        &self,
        prev: &State,
        cur: &State,
        n: usize,
        warm_active: &[usize],
        prev_dsigma: Option<f64>,
    ) -> Result<IterateOutcome> {
        let (p_new, z_new) = self.flow.step(&prev.p, &prev.u, &cur.p, &cur.u);
        let rhs = self.mech_rhs(&p_new);
        let contact = self.mech.solve_with_start(&rhs, warm_active)?;
        let sigma_new = update_sigma_v(&self.mesh, &self.params, prev, &contact.u, &p_new)?;

        let du = &contact.u - &cur.u;
        let dp = &p_new - &cur.p;
        let dz = &z_new - &cur.z;
        let dsigma = &sigma_new - &cur.sigma_v;

        let norm_dsigma = norms::p0_l2(&self.mesh, &dsigma);
        let record = IterationRecord {
            n,
            norm_dsigma,
            norm_adp: self.params.alpha * norms::p0_l2(&self.mesh, &dp),
            norm_dz: norms::z_weighted(&self.flow.mz, &dz),
            norm_eps_du: norms::eps_l2(&self.mesh, &du)?,
            norm_div_du: norms::div_u_l2(&self.mesh, &du)?,
            ratio: match prev_dsigma {
                Some(d) if d > 0.0 => Some((norm_dsigma / d).powi(2)),
                _ => None,
            },
            bound: self.bound,
            active_set_size: contact.active.len(),
        };
        let state = State {
            u: contact.u.clone(),
            p: p_new,
            z: z_new,
            sigma_v: sigma_new,
            time_index: prev.time_index + 1,
        };
        Ok(IterateOutcome {
            state,
            record,
            contact,
        })
    }

    /// Iterates the coupling until |d sigma_v| <= tol * max(|sigma_v_prev|, floor),
    /// returning the converged state as the next time level.
    pub fn solve_time_step(&self, prev: &State) -> Result<(State, IterationReport)> {
        let sigma_scale = norms::p0_l2(&self.mesh, &prev.sigma_v).max(self.opts.floor);
        // Time-lagged warm start; its sigma_v uses the same update formula as
        // every later iterate so that first differences are consistent.
        let mut cur = State {
            u: prev.u.clone(),
            p: prev.p.clone(),
            z: prev.z.clone(),
            sigma_v: update_sigma_v(&self.mesh, &self.params, prev, &prev.u, &prev.p)?,
            time_index: prev.time_index + 1,
        };
        let mut records: Vec<IterationRecord> = Vec::new();
        let mut violations = Vec::new();
        let mut warm: Vec<usize> = Vec::new();
        let mut prev_dsigma: Option<f64> = None;

        for n in 1..=self.opts.max_iters {
            let out = self
                .coupled_iterate(prev, &cur, n, &warm, prev_dsigma)
                .map_err(|e| self.wrap_iteration_error(e, &records, sigma_scale, &violations))?;
            warm = out.contact.active.clone();
            prev_dsigma = Some(out.record.norm_dsigma);

            // Contraction monitor: compare the composite left side built from
            // this iteration's differences against the bound times the
            // previous difference (both differences scheme-generated at n >= 2).
            if n >= 2 {
                if let (Some(lhs), Some(bound)) = (
                    out.record.composite_lhs(&self.params, self.dt),
                    self.bound,
                ) {
                    let prev_ds = records.last().map(|r| r.norm_dsigma).unwrap_or(0.0);
                    let rhs = bound * prev_ds * prev_ds;
                    if lhs > rhs * (1.0 + self.opts.contraction_slack) && prev_ds > 0.0 {
                        violations.push(n);
                    }
                }
            }

            let converged = out.record.norm_dsigma <= self.opts.tol * sigma_scale;
            records.push(out.record);
            cur = out.state;
            if converged {
                let report = IterationReport {
                    records,
                    stop: StopReason::Converged,
                    sigma_scale,
                    violations,
                };
                return Ok((cur, report));
            }
        }

        let report = IterationReport {
            records,
            stop: StopReason::MaxIters,
            sigma_scale,
            violations,
        };
        let hint = if self.params.alpha > 0.0
            && self.params.stab_l < self.params.alpha * self.params.alpha / (2.0 * self.params.lambda)
        {
            format!(
                "; stab_l = {} is below alpha^2/(2 lambda) = {}, outside the provably convergent range",
                self.params.stab_l,
                self.params.alpha * self.params.alpha / (2.0 * self.params.lambda)
            )
        } else {
            String::new()
        };
        Err(Error::CouplingNonConvergence {
            max_iters: self.opts.max_iters,
            hint,
            report: Box::new(report),
        })
    }

    fn wrap_iteration_error(
        &self,
        e: Error,
        records: &[IterationRecord],
        sigma_scale: f64,
        violations: &[usize],
    ) -> Error {
        match e {
            e @ Error::CouplingNonConvergence { .. } => e,
            other => Error::CouplingNonConvergence {
                max_iters: records.len(),
                hint: format!("; sub-solver failed: {other}"),
                report: Box::new(IterationReport {
                    records: records.to_vec(),
                    stop: StopReason::MaxIters,
                    sigma_scale,
                    violations: violations.to_vec(),
                }),
            },
        }
    }

    /// Backward-Euler march over [0, t_end] with the fixed step `dt`
    /// (`t_end` is rounded to a whole number of steps, at least one). On a
    /// step failure the march aborts and the partial results are retained.
    pub fn run(&self, initial: State, t_end: f64) -> SimulationResult {
        let nsteps = ((t_end / self.dt).round() as usize).max(1);
        let mut states = vec![initial];
        let mut reports = Vec::new();
        for k in 1..=nsteps {
            match self.solve_time_step(states.last().unwrap()) {
                Ok((state, report)) => {
                    states.push(state);
                    reports.push(report);
                }
                Err(e) => {
                    return SimulationResult {
                        states,
                        reports,
                        failure: Some((k, Box::new(Error::StepFailed {
                            step: k,
                            source: Box::new(e),
                        }))),
                    };
                }
            }
        }
        SimulationResult {
            states,
            reports,
            failure: None,
        }
    }
}
