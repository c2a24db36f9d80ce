//! Validation problems: manufactured solutions for the linear coupled system
//! (no contact), the Terzaghi consolidation benchmark, and convergence-rate
//! estimation.
//!
//! The manufactured fields are chosen linear in time, so backward Euler
//! commits no additional time-discretization error and the measured rates are
//! purely spatial. Body force and source are obtained by substituting the
//! exact fields into the strong equations by hand; the resulting closed forms
//! are recorded in the case definitions below.

use std::sync::Arc;

use nalgebra::DVector;

use crate::assembly::{scalar_const, vec_const, Loads, MaterialParams};
use crate::error::Error;
use crate::fespace::{local_p1_gradients, local_rt0_basis, make_dofmaps, make_dofmaps_drained};
use crate::fixed_stress::{CouplingOptions, Simulator, State};
use crate::mesh::{build_rect_mesh, BoundaryTag, Mesh, Rect, SideTags};
use crate::oracle::{compare_states, MonolithicSolver};
use crate::Result;

/// Degree-4 (6-point) triangle rule in barycentric coordinates, used only for
/// error integrals against smooth exact fields. Weights sum to 1/2.
fn quad_degree4() -> (Vec<[f64; 3]>, Vec<f64>) {
    let a = 0.445_948_490_915_965;
    let b = 0.091_576_213_509_771;
    let wa = 0.223_381_589_678_011 / 2.0;
    let wb = 0.109_951_743_655_322 / 2.0;
    (
        vec![
            [1.0 - 2.0 * a, a, a],
            [a, 1.0 - 2.0 * a, a],
            [a, a, 1.0 - 2.0 * a],
            [1.0 - 2.0 * b, b, b],
            [b, 1.0 - 2.0 * b, b],
            [b, b, 1.0 - 2.0 * b],
        ],
        vec![wa, wa, wa, wb, wb, wb],
    )
}

type TimeScalar = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
type TimeVec = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
type TimeMat = Arc<dyn Fn(f64, f64, f64) -> [[f64; 2]; 2] + Send + Sync>;

/// A manufactured problem without contact: exact fields, their derivatives,
/// and the matching data functions of (x, y, t).
#[derive(Clone)]
pub struct ManufacturedCase {
    pub id: &'static str,
    pub params: MaterialParams,
    pub side_tags: SideTags,
    pub u_exact: TimeVec,
    /// Rows are the gradients of the two displacement components.
    pub grad_u_exact: TimeMat,
    pub p_exact: TimeScalar,
    /// Flux in the discrete scaling z = -K (grad p - rho g grad eta).
    pub z_exact: TimeVec,
    pub div_z_exact: TimeScalar,
    pub f0: TimeVec,
    pub q: TimeScalar,
    pub f2: TimeVec,
}

impl ManufacturedCase {
    /// Identically zero fields with zero data.
    pub fn zero() -> Self {
        let all_gamma1 = SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma1,
            bottom: BoundaryTag::Gamma1,
            top: BoundaryTag::Gamma1,
        };
        ManufacturedCase {
            id: "zero",
            params: MaterialParams::unit().with_default_stab(),
            side_tags: all_gamma1,
            u_exact: Arc::new(|_, _, _| [0.0, 0.0]),
            grad_u_exact: Arc::new(|_, _, _| [[0.0; 2]; 2]),
            p_exact: Arc::new(|_, _, _| 0.0),
            z_exact: Arc::new(|_, _, _| [0.0, 0.0]),
            div_z_exact: Arc::new(|_, _, _| 0.0),
            f0: Arc::new(|_, _, _| [0.0, 0.0]),
            q: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(|_, _, _| [0.0, 0.0]),
        }
    }

    /// Steady linear displacement u = amp (x, 0), zero pressure. The exact
    /// stress is constant, so the P1 space reproduces the solution to
    /// machine precision. Clamped on the left, exact tractions elsewhere:
    /// sigma = [[ (lambda + 2G) amp, 0 ], [0, lambda amp ]].
    pub fn linear() -> Self {
        let params = MaterialParams::unit().with_default_stab();
        let amp = 0.05;
        let lambda = params.lambda;
        let g2 = 2.0 * params.g_shear;
        ManufacturedCase {
            id: "linear",
            params,
            side_tags: SideTags {
                left: BoundaryTag::Gamma1,
                right: BoundaryTag::Gamma2,
                bottom: BoundaryTag::Gamma2,
                top: BoundaryTag::Gamma2,
            },
            u_exact: Arc::new(move |x, _, _| [amp * x, 0.0]),
            grad_u_exact: Arc::new(move |_, _, _| [[amp, 0.0], [0.0, 0.0]]),
            p_exact: Arc::new(|_, _, _| 0.0),
            z_exact: Arc::new(|_, _, _| [0.0, 0.0]),
            div_z_exact: Arc::new(|_, _, _| 0.0),
            f0: Arc::new(|_, _, _| [0.0, 0.0]),
            q: Arc::new(|_, _, _| 0.0),
            f2: Arc::new(move |x, y, _| {
                // Constant stress sigma = diag((lambda + 2G) amp, lambda amp);
                // traction = sigma nu on each outer side of the unit square.
                let sxx = (lambda + g2) * amp;
                let syy = lambda * amp;
                let tol = 1e-9;
                if x >= 1.0 - tol {
                    [sxx, 0.0]
                } else if y >= 1.0 - tol {
                    [0.0, syy]
                } else if y <= tol {
                    [0.0, -syy]
                } else {
                    [0.0, 0.0]
                }
            }),
        }
    }

    /// Smooth trigonometric fields, linear in time:
    /// u = t A sin(pi x) sin(pi y) (1, 1), p = t C cos(pi x) cos(pi y),
    /// on the unit square with unit coefficients (M = 1, alpha = 1, K = I,
    /// mu = 1, no gravity). All sides clamped; the flux satisfies z.nu = 0 on
    /// the whole boundary, matching the sealed flux space.
    pub fn trig() -> Self {
        let params = MaterialParams::unit().with_default_stab();
        let amp = 0.1; // displacement amplitude
        let cp = 1.0; // pressure amplitude
        let pi = std::f64::consts::PI;
        let lambda = params.lambda;
        let g = params.g_shear;
        let alpha = params.alpha;
        let storage = params.storage();
        let kappa = 1.0; // K = kappa I
        let all_gamma1 = SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma1,
            bottom: BoundaryTag::Gamma1,
            top: BoundaryTag::Gamma1,
        };
        ManufacturedCase {
            id: "trig",
            params,
            side_tags: all_gamma1,
            u_exact: Arc::new(move |x, y, t| {
                let ss = (pi * x).sin() * (pi * y).sin();
                [t * amp * ss, t * amp * ss]
            }),
            grad_u_exact: Arc::new(move |x, y, t| {
                let cs = (pi * x).cos() * (pi * y).sin();
                let sc = (pi * x).sin() * (pi * y).cos();
                let gx = t * amp * pi * cs;
                let gy = t * amp * pi * sc;
                [[gx, gy], [gx, gy]]
            }),
            p_exact: Arc::new(move |x, y, t| t * cp * (pi * x).cos() * (pi * y).cos()),
            z_exact: Arc::new(move |x, y, t| {
                // z = -K grad p = t kappa C pi (sin cos, cos sin).
                let sc = (pi * x).sin() * (pi * y).cos();
                let cs = (pi * x).cos() * (pi * y).sin();
                [t * kappa * cp * pi * sc, t * kappa * cp * pi * cs]
            }),
            div_z_exact: Arc::new(move |x, y, t| {
                2.0 * t * kappa * cp * pi * pi * (pi * x).cos() * (pi * y).cos()
            }),
            f0: Arc::new(move |x, y, t| {
                // f0 = -lambda grad(div u) - div(2G eps(u)) + alpha grad p.
                let cc = (pi * x).cos() * (pi * y).cos();
                let ss = (pi * x).sin() * (pi * y).sin();
                let sc = (pi * x).sin() * (pi * y).cos();
                let cs = (pi * x).cos() * (pi * y).sin();
                let elastic = -t * amp * pi * pi * (lambda * (cc - ss) + g * (cc - 3.0 * ss));
                let fx = elastic - t * alpha * cp * pi * sc;
                let fy = elastic - t * alpha * cp * pi * cs;
                [fx, fy]
            }),
            q: Arc::new(move |x, y, t| {
                // q = storage d_t p + alpha d_t div u + (1/mu) div z.
                let cc = (pi * x).cos() * (pi * y).cos();
                let cs = (pi * x).cos() * (pi * y).sin();
                let sc = (pi * x).sin() * (pi * y).cos();
                storage * cp * cc
                    + alpha * amp * pi * (cs + sc)
                    + 2.0 * t * kappa * cp * pi * pi * cc
            }),
            f2: Arc::new(|_, _, _| [0.0, 0.0]),
        }
    }

    fn loads_at(&self, t: f64) -> Loads {
        let f0 = self.f0.clone();
        let q = self.q.clone();
        let f2 = self.f2.clone();
        Loads {
            f0: Arc::new(move |x, y| f0(x, y, t)),
            f2: Arc::new(move |x, y| f2(x, y, t)),
            q_src: Arc::new(move |x, y| q(x, y, t)),
            gap: scalar_const(0.0),
        }
    }

    fn initial_state(&self, mesh: &Mesh) -> Result<State> {
        let dofmaps = make_dofmaps(mesh);
        let mut u0 = DVector::zeros(dofmaps.displacement.n_dofs);
        for v in 0..mesh.n_vertices() {
            let [x, y] = mesh.vertices[v];
            let uv = (self.u_exact)(x, y, 0.0);
            u0[2 * v] = uv[0];
            u0[2 * v + 1] = uv[1];
        }
        let mut p0 = DVector::zeros(dofmaps.pressure.n_dofs);
        for t in 0..mesh.n_triangles() {
            let c = mesh.tri_centroid(t);
            p0[t] = (self.p_exact)(c[0], c[1], 0.0);
        }
        State::from_initial(mesh, &dofmaps, &self.params, u0, p0)
    }
}

/// Which solver path produced a manufactured-solution state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    FixedStress,
    Monolithic,
}

/// Errors of one manufactured run at final time.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRecord {
    pub h: f64,
    pub p_l2: f64,
    pub u_h1: f64,
    pub z_hdiv: f64,
}

/// Runs a manufactured case on an n x n unit-square mesh and measures errors
/// against the exact solution at the final time.
pub fn manufactured_biot(
    case: &ManufacturedCase,
    n: usize,
    dt: f64,
    t_end: f64,
    path: SolvePath,
) -> Result<ErrorRecord> {
    let state = manufactured_final_state(case, n, dt, t_end, path)?;
    let mesh = build_rect_mesh(n, n, Rect::UNIT, case.side_tags)?;
    Ok(measure_errors(case, &mesh, &state, t_end, n))
}

/// Final state of a manufactured run (used both for error measurement and
/// for the fixed-stress / monolithic agreement check).
pub fn manufactured_final_state(
    case: &ManufacturedCase,
    n: usize,
    dt: f64,
    t_end: f64,
    path: SolvePath,
) -> Result<State> {
    let mesh = build_rect_mesh(n, n, Rect::UNIT, case.side_tags)?;
    let dofmaps = make_dofmaps(&mesh);
    let nsteps = ((t_end / dt).round() as usize).max(1);
    let mut state = case.initial_state(&mesh)?;
    let opts = CouplingOptions {
        tol: 1e-12,
        max_iters: 400,
        ..Default::default()
    };
    for k in 1..=nsteps {
        let t_k = k as f64 * dt;
        let loads = case.loads_at(t_k);
        state = match path {
            SolvePath::FixedStress => {
                let sim = Simulator::with_dofmaps(
                    mesh.clone(),
                    dofmaps.clone(),
                    case.params.clone(),
                    loads,
                    dt,
                    opts.clone(),
                )?;
                sim.solve_time_step(&state)?.0
            }
            SolvePath::Monolithic => {
                let solver = MonolithicSolver::new(
                    mesh.clone(),
                    &dofmaps,
                    case.params.clone(),
                    &loads,
                    dt,
                    Default::default(),
                )?;
                solver.solve_step(&state)?.state
            }
        };
    }
    Ok(state)
}

fn measure_errors(
    case: &ManufacturedCase,
    mesh: &Mesh,
    state: &State,
    t: f64,
    n: usize,
) -> ErrorRecord {
    let (points, weights) = quad_degree4();
    let mut e_p = 0.0;
    let mut e_u = 0.0;
    let mut e_z = 0.0;
    for tri in 0..mesh.n_triangles() {
        let coords = mesh.tri_coords(tri);
        let area2 = 2.0 * mesh.tri_area(tri);
        let (g, _) = local_p1_gradients(&coords).expect("valid mesh");
        let signs = [
            mesh.tri_edges[tri][0].1,
            mesh.tri_edges[tri][1].1,
            mesh.tri_edges[tri][2].1,
        ];
        let basis = local_rt0_basis(&coords, &signs).expect("valid mesh");
        let conn = mesh.triangles[tri];
        let zdofs = [
            state.z[mesh.tri_edges[tri][0].0],
            state.z[mesh.tri_edges[tri][1].0],
            state.z[mesh.tri_edges[tri][2].0],
        ];
        // Constant per-element discrete gradients and divergences.
        let mut grad_h = [[0.0f64; 2]; 2];
        for i in 0..3 {
            for a in 0..2 {
                let coef = state.u[2 * conn[i] + a];
                grad_h[a][0] += coef * g[i][0];
                grad_h[a][1] += coef * g[i][1];
            }
        }
        let div_z_h: f64 = (0..3).map(|k| zdofs[k] * basis.div[k]).sum();

        for (bary, w) in points.iter().zip(&weights) {
            let x = [
                bary[0] * coords[0][0] + bary[1] * coords[1][0] + bary[2] * coords[2][0],
                bary[0] * coords[0][1] + bary[1] * coords[1][1] + bary[2] * coords[2][1],
            ];
            let wq = w * area2;
            // Pressure.
            let dp = state.p[tri] - (case.p_exact)(x[0], x[1], t);
            e_p += wq * dp * dp;
            // Displacement value + gradient.
            let ue = (case.u_exact)(x[0], x[1], t);
            let ge = (case.grad_u_exact)(x[0], x[1], t);
            let mut uh = [0.0, 0.0];
            for i in 0..3 {
                let hat = 1.0
                    + g[i][0] * (x[0] - coords[i][0])
                    + g[i][1] * (x[1] - coords[i][1]);
                uh[0] += state.u[2 * conn[i]] * hat;
                uh[1] += state.u[2 * conn[i] + 1] * hat;
            }
            let mut du2 = (uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2);
            for a in 0..2 {
                for b in 0..2 {
                    du2 += (grad_h[a][b] - ge[a][b]).powi(2);
                }
            }
            e_u += wq * du2;
            // Flux value + divergence.
            let ze = (case.z_exact)(x[0], x[1], t);
            let mut zh = [0.0, 0.0];
            for k in 0..3 {
                let phi = basis.eval(k, x);
                zh[0] += zdofs[k] * phi[0];
                zh[1] += zdofs[k] * phi[1];
            }
            let dz2 = (zh[0] - ze[0]).powi(2)
                + (zh[1] - ze[1]).powi(2)
                + (div_z_h - (case.div_z_exact)(x[0], x[1], t)).powi(2);
            e_z += wq * dz2;
        }
    }
    ErrorRecord {
        h: 1.0 / n as f64,
        p_l2: e_p.sqrt(),
        u_h1: e_u.sqrt(),
        z_hdiv: e_z.sqrt(),
    }
}

/// Checks that the fixed-stress and monolithic paths agree on a manufactured
/// case (contact disabled); returns the largest relative discrepancy.
pub fn paths_agreement(case: &ManufacturedCase, n: usize, dt: f64, t_end: f64) -> Result<f64> {
    let a = manufactured_final_state(case, n, dt, t_end, SolvePath::FixedStress)?;
    let b = manufactured_final_state(case, n, dt, t_end, SolvePath::Monolithic)?;
    let mesh = build_rect_mesh(n, n, Rect::UNIT, case.side_tags)?;
    Ok(compare_states(&mesh, &a, &b)?.max_rel())
}

/// Least-squares slope of log(error) against log(h), with a quality flag.
#[derive(Debug, Clone, Copy)]
pub struct OrderEstimate {
    pub order: f64,
    /// False when the error sequence is not monotone under refinement.
    pub monotone: bool,
}

/// Observed convergence order from errors on a sequence of mesh sizes.
pub fn estimate_order(hs: &[f64], errors: &[f64]) -> Result<OrderEstimate> {
    if hs.len() != errors.len() || hs.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "refinements",
            msg: "need at least 3 refinement levels".into(),
        });
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "errors",
            msg: "errors must be positive".into(),
        });
    }
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lx.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    let mut monotone = true;
    for i in 1..errors.len() {
        if (hs[i] < hs[i - 1]) != (errors[i] < errors[i - 1]) {
            monotone = false;
        }
    }
    Ok(OrderEstimate {
        order: num / den,
        monotone,
    })
}

/// Convergence study of a manufactured case over a sequence of resolutions.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub records: Vec<ErrorRecord>,
    pub order_p: OrderEstimate,
    pub order_u: OrderEstimate,
    pub order_z: OrderEstimate,
}

pub fn manufactured_convergence(
    case: &ManufacturedCase,
    ns: &[usize],
    dt: f64,
    t_end: f64,
    path: SolvePath,
) -> Result<ConvergenceStudy> {
    let mut records = Vec::new();
    for &n in ns {
        records.push(manufactured_biot(case, n, dt, t_end, path)?);
    }
    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let order_p = estimate_order(&hs, &records.iter().map(|r| r.p_l2).collect::<Vec<_>>())?;
    let order_u = estimate_order(&hs, &records.iter().map(|r| r.u_h1).collect::<Vec<_>>())?;
    let order_z = estimate_order(&hs, &records.iter().map(|r| r.z_hdiv).collect::<Vec<_>>())?;
    Ok(ConvergenceStudy {
        records,
        order_p,
        order_u,
        order_z,
    })
}

/// Terzaghi consolidation on a thin strip: bottom clamped and sealed, top
/// loaded and drained, frictionless rigid side walls (zero-gap contact)
/// enforcing one-dimensional deformation.
#[derive(Debug, Clone)]
pub struct TerzaghiCase {
    pub params: MaterialParams,
    /// Applied compressive traction magnitude on the top.
    pub sigma0: f64,
    /// Column height.
    pub height: f64,
    /// Number of cell columns across the strip width.
    pub width_cells: usize,
}

impl Default for TerzaghiCase {
    fn default() -> Self {
        let mut params = MaterialParams::unit();
        // Nearly incompressible constituents: the instantaneous pressure is
        // within 3e-8 of the applied load.
        params.m_biot = 1e8;
        params.c_f = 0.0;
        params.phi0 = 0.2;
        params.stab_l = params.default_stab();
        TerzaghiCase {
            params,
            sigma0: 1.0,
            height: 1.0,
            width_cells: 2,
        }
    }
}

impl TerzaghiCase {
    /// Consolidation coefficient c_v = (K/mu) / (S + alpha^2 / (lambda + 2G)).
    pub fn consolidation_coefficient(&self) -> f64 {
        let p = &self.params;
        let k = p.k_perm[1][1];
        let confined = p.lambda + 2.0 * p.g_shear;
        (k / p.mu_f) / (p.storage() + p.alpha * p.alpha / confined)
    }

    /// Instantaneous (undrained) pressure response to the applied load.
    pub fn initial_pressure(&self) -> f64 {
        let p = &self.params;
        let confined = p.lambda + 2.0 * p.g_shear;
        p.alpha * self.sigma0 / (confined * p.storage() + p.alpha * p.alpha)
    }

    /// Analytic normalized pressure p / p_i at height y and dimensionless
    /// time T_v = c_v t / H^2 (drained at y = H, sealed at y = 0), evaluated
    /// with `terms` series terms.
    pub fn series(&self, y: f64, time_factor: f64, terms: usize) -> f64 {
        let pi = std::f64::consts::PI;
        let h = self.height;
        let mut acc = 0.0;
        for m in 0..terms {
            let k = (2 * m + 1) as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            acc += (4.0 / pi) * sign / k
                * (k * pi * y / (2.0 * h)).cos()
                * (-(k * pi / 2.0).powi(2) * time_factor).exp();
        }
        acc
    }
}

/// One snapshot of the Terzaghi run.
#[derive(Debug, Clone, Copy)]
pub struct TerzaghiSnapshot {
    /// Dimensionless time c_v t / H^2 actually reached.
    pub time_factor: f64,
    /// Relative L2 error of the pressure profile against the series.
    pub rel_l2_error: f64,
    /// L2 norm of the computed profile over the initial pressure norm.
    pub profile_norm_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TerzaghiReport {
    pub ny: usize,
    pub dt: f64,
    pub snapshots: Vec<TerzaghiSnapshot>,
    /// Largest deviation of p / p_i from 1 in the interior (away from the
    /// drainage boundary layer) at the earliest snapshot.
    pub early_interior_max_dev: f64,
}

/// Runs the consolidation benchmark on a `width_cells x ny` strip and
/// compares the pressure profile with the analytic series (300 terms) at the
/// requested dimensionless times. `dt_factor` is the time step expressed in
/// dimensionless time units.
pub fn terzaghi_case(
    case: &TerzaghiCase,
    ny: usize,
    dt_factor: f64,
    time_factors: &[f64],
) -> Result<TerzaghiReport> {
    let h = case.height;
    let hy = h / ny as f64;
    let width = hy * case.width_cells as f64;
    let mesh = build_rect_mesh(
        case.width_cells,
        ny,
        Rect {
            x0: 0.0,
            x1: width,
            y0: 0.0,
            y1: h,
        },
        SideTags {
            left: BoundaryTag::Gamma3,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma1,
            top: BoundaryTag::Gamma2,
        },
    )?;
    let dofmaps = make_dofmaps_drained(&mesh, &[BoundaryTag::Gamma2]);
    let mut loads = Loads::zero();
    loads.f2 = vec_const([0.0, -case.sigma0]);

    let c_v = case.consolidation_coefficient();
    let dt = dt_factor * h * h / c_v;
    let opts = CouplingOptions {
        tol: 1e-11,
        max_iters: 400,
        ..Default::default()
    };
    let sim = Simulator::with_dofmaps(
        mesh.clone(),
        dofmaps,
        case.params.clone(),
        loads,
        dt,
        opts,
    )?;

    let p_i = case.initial_pressure();
    let mut sorted_times: Vec<f64> = time_factors.to_vec();
    sorted_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snapshots = Vec::new();
    let mut early_interior_max_dev = 0.0f64;
    let mut state = sim.zero_state();
    let mut step = 0usize;
    for (si, &tf) in sorted_times.iter().enumerate() {
        let target_steps = ((tf / dt_factor).round().max(1.0)) as usize;
        while step < target_steps {
            state = sim.solve_time_step(&state)?.0;
            step += 1;
        }
        let actual_tf = step as f64 * dt_factor;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut norm_sq = 0.0;
        for t in 0..mesh.n_triangles() {
            let c = mesh.tri_centroid(t);
            let area = mesh.tri_area(t);
            let exact = p_i * case.series(c[1], actual_tf, 300);
            let d = state.p[t] - exact;
            num += area * d * d;
            den += area * exact * exact;
            norm_sq += area * state.p[t] * state.p[t];
            if si == 0 && c[1] < h - 4.0 * h * actual_tf.sqrt() {
                early_interior_max_dev =
                    early_interior_max_dev.max((state.p[t] / p_i - 1.0).abs());
            }
        }
        let p_i_norm = p_i * mesh.domain_area().sqrt();
        snapshots.push(TerzaghiSnapshot {
            time_factor: actual_tf,
            rel_l2_error: (num / den.max(1e-300)).sqrt(),
            profile_norm_ratio: norm_sq.sqrt() / p_i_norm,
        });
    }
    Ok(TerzaghiReport {
        ny,
        dt,
        snapshots,
        early_interior_max_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_estimates() {
        let hs = [1.0, 0.5, 0.25];
        let o = estimate_order(&hs, &[1.0, 0.5, 0.25]).unwrap();
        assert!((o.order - 1.0).abs() <= 1e-12);
        assert!(o.monotone);
        let o = estimate_order(&hs, &[1.0, 0.25, 0.0625]).unwrap();
        assert!((o.order - 2.0).abs() <= 1e-12);
        let o = estimate_order(&hs, &[1.0, 1.2, 0.3]).unwrap();
        assert!(!o.monotone, "noisy sequence must be flagged");
        assert!(estimate_order(&hs[..2], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn zero_case_zero_errors() {
        let case = ManufacturedCase::zero();
        let rec = manufactured_biot(&case, 2, 0.5, 1.0, SolvePath::FixedStress).unwrap();
        assert_eq!(rec.p_l2, 0.0);
        assert_eq!(rec.u_h1, 0.0);
        assert_eq!(rec.z_hdiv, 0.0);
    }

    #[test]
    fn linear_case_machine_precision() {
        let case = ManufacturedCase::linear();
        let rec = manufactured_biot(&case, 3, 0.5, 1.0, SolvePath::FixedStress).unwrap();
        assert!(rec.u_h1 <= 1e-12, "u error {}", rec.u_h1);
        assert!(rec.p_l2 <= 1e-12, "p error {}", rec.p_l2);
        assert!(rec.z_hdiv <= 1e-12, "z error {}", rec.z_hdiv);
    }

    #[test]
    fn trig_case_first_order_small_meshes() {
        // Coarse smoke check of the machinery; the acceptance suite runs the
        // full h-sweep at tighter tolerances.
        let case = ManufacturedCase::trig();
        let study =
            manufactured_convergence(&case, &[4, 8, 16], 0.25, 0.5, SolvePath::FixedStress)
                .unwrap();
        assert!(study.order_p.monotone);
        assert!(
            (study.order_p.order - 1.0).abs() <= 0.35,
            "p order {}",
            study.order_p.order
        );
        assert!(
            (study.order_u.order - 1.0).abs() <= 0.35,
            "u order {}",
            study.order_u.order
        );
        assert!(
            (study.order_z.order - 1.0).abs() <= 0.35,
            "z order {}",
            study.order_z.order
        );
    }

    #[test]
    fn terzaghi_series_limits() {
        let case = TerzaghiCase::default();
        // Near t = 0 the series is ~1 in the interior.
        assert!((case.series(0.2, 1e-6, 400) - 1.0).abs() <= 1e-3);
        // Drained boundary: zero at y = H.
        assert!(case.series(1.0, 0.3, 300).abs() <= 1e-12);
        // Large time: everything decays.
        assert!(case.series(0.0, 3.0, 300).abs() <= 1e-3);
    }
}
