//! Cross-checks of the assembled operators and solvers against independent
//! dense oracles: first-principles finite element assembly, dense saddle
//! solves, and exhaustive active-set enumeration.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use porocontact::assembly::{
    assemble_coupling, assemble_div, assemble_elasticity, assemble_loads, assemble_rt0_mass,
    scalar_const, vec_const, Loads, MaterialParams,
};
use porocontact::contact::{build_constraints, solve_contact_vi, ContactOptions};
use porocontact::fespace::{make_dofmaps, DofMaps};
use porocontact::fixed_stress::State;
use porocontact::flow::FlowSystem;
use porocontact::linalg::{eliminate_triplets, zero_constrained, SparseMatrix};
use porocontact::mesh::{build_rect_mesh, BoundaryTag, Mesh, Rect, SideTags};
use porocontact::oracle::MonolithicSolver;

fn tags() -> SideTags {
    SideTags {
        left: BoundaryTag::Gamma1,
        right: BoundaryTag::Gamma3,
        bottom: BoundaryTag::Gamma2,
        top: BoundaryTag::Gamma2,
    }
}

fn eliminate(a: &SparseMatrix, con: &[bool]) -> SparseMatrix {
    let mut trips = Vec::new();
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            trips.push((i, j, v));
        }
    }
    SparseMatrix::from_triplets(a.nrows(), a.ncols(), &eliminate_triplets(&trips, con, con))
}

fn setup(nx: usize, ny: usize) -> (Mesh, DofMaps) {
    let mesh = build_rect_mesh(nx, ny, Rect::UNIT, tags()).unwrap();
    let dofmaps = make_dofmaps(&mesh);
    (mesh, dofmaps)
}

#[test]
fn elasticity_matches_dense_oracle() {
    let (mesh, dofmaps) = setup(1, 1);
    let params = MaterialParams::unit();
    let a = assemble_elasticity(&mesh, &dofmaps, &params).unwrap();
    let dense = dense_elasticity(&mesh, 1.0, 1.0);
    let lib = a.to_dense();
    let scale = dense.amax();
    assert!((&lib - &dense).amax() <= 1e-13 * scale);
}

#[test]
fn elasticity_matches_dense_oracle_nontrivial_coefficients() {
    let (mesh, dofmaps) = setup(3, 2);
    let mut params = MaterialParams::unit();
    params.lambda = 3.7;
    params.g_shear = 0.4;
    params.stab_l = params.default_stab();
    let a = assemble_elasticity(&mesh, &dofmaps, &params).unwrap();
    let dense = dense_elasticity(&mesh, 3.7, 0.4);
    let scale = dense.amax();
    assert!((a.to_dense() - dense).amax() <= 1e-13 * scale);
}

#[test]
fn rt0_mass_matches_dense_oracle() {
    let (mesh, dofmaps) = setup(1, 1);
    let mut params = MaterialParams::unit();
    // Anisotropic SPD permeability.
    params.k_perm = [[2.0, 0.5], [0.5, 1.0]];
    let mz = assemble_rt0_mass(&mesh, &dofmaps, &params).unwrap();
    let dense = dense_rt0_mass(&mesh, &params);
    let scale = dense.amax();
    assert!((mz.to_dense() - dense).amax() <= 1e-13 * scale);
}

#[test]
fn divergence_and_coupling_match_dense_oracles() {
    let (mesh, dofmaps) = setup(2, 2);
    let d = assemble_div(&mesh, &dofmaps);
    let dd = dense_div(&mesh);
    assert!((d.to_dense() - dd).amax() <= 1e-12);
    let alpha = 0.73;
    let b = assemble_coupling(&mesh, &dofmaps, alpha).unwrap();
    let bd = dense_coupling(&mesh, alpha);
    let scale = bd.amax();
    assert!((b.to_dense() - bd).amax() <= 1e-13 * scale);
}

#[test]
fn flow_step_matches_dense_saddle_solve() {
    // 2-triangle mesh: 5 flux dofs + 2 pressure dofs = 7x7 saddle system.
    let (mesh, dofmaps) = setup(1, 1);
    let mut params = MaterialParams::unit();
    params.alpha = 0.8;
    params.m_biot = 2.0;
    params.c_f = 0.3;
    params.phi0 = 0.1;
    params.mu_f = 1.7;
    params.stab_l = params.default_stab();
    let mut loads = Loads::zero();
    loads.q_src = scalar_const(0.9);
    let dt = 0.37;

    let mut rng = Lcg(42);
    let p_prev = DVector::from_fn(2, |_, _| rng.sym());
    let u_prev = DVector::from_fn(8, |_, _| 0.1 * rng.sym());
    let p_it = DVector::from_fn(2, |_, _| rng.sym());
    let u_it = DVector::from_fn(8, |_, _| 0.1 * rng.sym());

    let sys = FlowSystem::new(&mesh, &dofmaps, &params, &loads, dt).unwrap();
    let (p_new, z_new) = sys.step(&p_prev, &u_prev, &p_it, &u_it);

    // Independent dense assembly of the same saddle problem.
    let nz = 5;
    let np = 2;
    let mz = dense_rt0_mass(&mesh, &params);
    let d = dense_div(&mesh);
    let bdiv = dense_coupling(&mesh, 1.0); // alpha = 1 gives raw div integrals
    let mut sys_d = DMatrix::zeros(nz + np, nz + np);
    let mut rhs_d = DVector::zeros(nz + np);
    let zc = &dofmaps.flux.constrained;
    let storage = 1.0 / params.m_biot + params.c_f * params.phi0;
    for e in 0..nz {
        if zc[e] {
            sys_d[(e, e)] = 1.0;
            continue;
        }
        for f in 0..nz {
            if !zc[f] {
                sys_d[(e, f)] = mz[(e, f)];
            }
        }
        for t in 0..np {
            sys_d[(e, nz + t)] = -d[(t, e)];
        }
        rhs_d[e] = 0.0; // no gravity
    }
    for t in 0..np {
        let area = mesh.tri_area(t);
        for e in 0..nz {
            if !zc[e] {
                sys_d[(nz + t, e)] = dt / params.mu_f * d[(t, e)];
            }
        }
        sys_d[(nz + t, nz + t)] = area * (storage + params.stab_l);
        let div_it: f64 = (0..8).map(|i| bdiv[(i, t)] * u_it[i]).sum();
        let div_prev: f64 = (0..8).map(|i| bdiv[(i, t)] * u_prev[i]).sum();
        rhs_d[nz + t] = area * (storage + params.stab_l) * p_prev[t]
            + params.stab_l * area * (p_it[t] - p_prev[t])
            - params.alpha * (div_it - div_prev)
            + dt * 0.9 * area; // q = 0.9 constant
    }
    let sol = sys_d.lu().solve(&rhs_d).unwrap();
    for e in 0..nz {
        let expect = if zc[e] { 0.0 } else { sol[e] };
        assert!((z_new[e] - expect).abs() <= 1e-12, "z[{e}]");
    }
    for t in 0..np {
        assert!((p_new[t] - sol[nz + t]).abs() <= 1e-12, "p[{t}]");
    }
}

#[test]
fn contact_two_triangle_square_matches_enumeration() {
    // The square pushed into a zero-gap wall on the right.
    let (mesh, dofmaps) = setup(1, 1);
    let params = MaterialParams::unit();
    let a = assemble_elasticity(&mesh, &dofmaps, &params).unwrap();
    let a_elim = eliminate(&a, &dofmaps.displacement.constrained);
    let mut loads = Loads::zero();
    loads.gap = scalar_const(0.0);
    let constraints = build_constraints(&mesh, &dofmaps, &loads).unwrap();
    assert_eq!(constraints.len(), 2);
    let mut rhs = DVector::zeros(8);
    for v in 0..mesh.n_vertices() {
        rhs[2 * v] = 0.4;
    }
    zero_constrained(&mut rhs, &dofmaps.displacement.constrained);
    let sol = solve_contact_vi(
        &a_elim,
        &rhs,
        &constraints,
        &dofmaps.displacement.constrained,
        &ContactOptions::default(),
    )
    .unwrap();
    let (u_star, _, active_star) =
        enumerate_contact_qp(&a_elim.to_dense(), &rhs, &constraints, 1e-11)
            .expect("enumeration must find the KKT point");
    assert!(!active_star.is_empty(), "load must engage the wall");
    assert!((&sol.u - &u_star).amax() <= 1e-10);
    assert_eq!(sol.active, active_star);
}

#[test]
fn contact_randomized_loads_match_enumeration() {
    // Part of the brute-force equivalence evidence at small m; the
    // acceptance suite runs the larger m = 8 and m = 12 campaigns.
    let (mesh, dofmaps) = setup(2, 3);
    let params = MaterialParams::unit();
    let a = assemble_elasticity(&mesh, &dofmaps, &params).unwrap();
    let a_elim = eliminate(&a, &dofmaps.displacement.constrained);
    let mut rng = Lcg(7);
    for case in 0..5 {
        let gap = 0.002 * rng.next_f64();
        let mut loads = Loads::zero();
        loads.gap = scalar_const(gap);
        let constraints = build_constraints(&mesh, &dofmaps, &loads).unwrap();
        let mut rhs = DVector::from_fn(dofmaps.displacement.n_dofs, |_, _| 0.3 * rng.sym());
        for v in 0..mesh.n_vertices() {
            rhs[2 * v] += 0.4; // bias toward the wall so some cases activate
        }
        zero_constrained(&mut rhs, &dofmaps.displacement.constrained);
        let sol = solve_contact_vi(
            &a_elim,
            &rhs,
            &constraints,
            &dofmaps.displacement.constrained,
            &ContactOptions::default(),
        )
        .unwrap();
        let (u_star, _, _) = enumerate_contact_qp(&a_elim.to_dense(), &rhs, &constraints, 1e-11)
            .expect("enumeration");
        assert!(
            (&sol.u - &u_star).amax() <= 1e-10,
            "case {case}: mismatch {}",
            (&sol.u - &u_star).amax()
        );
    }
}

#[test]
fn vi_inequality_holds_for_random_feasible_fields() {
    // Discrete variational inequality: for feasible v,
    // a(u, v - u) >= rhs . (v - u) within tolerance.
    let (mesh, dofmaps) = setup(3, 3);
    let params = MaterialParams::unit();
    let a = assemble_elasticity(&mesh, &dofmaps, &params).unwrap();
    let a_elim = eliminate(&a, &dofmaps.displacement.constrained);
    let mut loads = Loads::zero();
    loads.gap = scalar_const(0.003);
    let constraints = build_constraints(&mesh, &dofmaps, &loads).unwrap();
    let mut rhs = DVector::zeros(dofmaps.displacement.n_dofs);
    for v in 0..mesh.n_vertices() {
        rhs[2 * v] = 0.25;
        rhs[2 * v + 1] = -0.1;
    }
    zero_constrained(&mut rhs, &dofmaps.displacement.constrained);
    let sol = solve_contact_vi(
        &a_elim,
        &rhs,
        &constraints,
        &dofmaps.displacement.constrained,
        &ContactOptions::default(),
    )
    .unwrap();
    assert!(!sol.active.is_empty());
    let g = constraints.gap_vector();
    let mut rng = Lcg(2024);
    for _ in 0..100 {
        // Random field, zeroed on Gamma1, then projected onto the
        // constraint set by shifting along nodal normals.
        let mut v = DVector::from_fn(dofmaps.displacement.n_dofs, |_, _| 0.05 * rng.sym());
        zero_constrained(&mut v, &dofmaps.displacement.constrained);
        let nv = constraints.apply(&v);
        for (i, row) in constraints.rows.iter().enumerate() {
            let excess = nv[i] - g[i];
            if excess > 0.0 {
                v[2 * row.vertex] -= excess * row.normal[0];
                v[2 * row.vertex + 1] -= excess * row.normal[1];
            }
        }
        let w = &v - &sol.u;
        let lhs = a_elim.quadratic_form(&w, &sol.u);
        let rhs_val = rhs.dot(&w);
        let scale = lhs.abs().max(rhs_val.abs()).max(1.0);
        assert!(
            lhs >= rhs_val - 1e-9 * scale,
            "VI violated: {lhs} < {rhs_val}"
        );
    }
}

#[test]
fn monolithic_no_contact_matches_dense_block_solve() {
    // Linear Biot step on the 2-triangle mesh, contact disabled via a huge
    // gap; compare against a fully independent dense block assembly.
    let (mesh, dofmaps) = setup(1, 1);
    let mut params = MaterialParams::unit();
    params.alpha = 0.6;
    params.m_biot = 1.5;
    params.stab_l = params.default_stab();
    let mut loads = Loads::zero();
    loads.f0 = vec_const([0.2, -0.1]);
    loads.q_src = scalar_const(0.5);
    loads.gap = scalar_const(1e6);
    let dt = 0.2;
    let prev = State::zeros(&dofmaps);
    let state = porocontact::oracle::monolithic_step(&mesh, &dofmaps, &params, &loads, dt, &prev)
        .unwrap();

    // Dense blocks from the independent oracle assembly.
    let nu = 8;
    let np = 2;
    let nz = 5;
    let a = {
        let mut a = dense_elasticity(&mesh, params.lambda, params.g_shear);
        let con = &dofmaps.displacement.constrained;
        for i in 0..nu {
            for j in 0..nu {
                if con[i] || con[j] {
                    a[(i, j)] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        a
    };
    let b = dense_coupling(&mesh, params.alpha);
    let mz = dense_rt0_mass(&mesh, &params);
    let d = dense_div(&mesh);
    let lv = assemble_loads(&mesh, &dofmaps, &loads, &params).unwrap();
    let ucon = &dofmaps.displacement.constrained;
    let zcon = &dofmaps.flux.constrained;
    let n = nu + np + nz;
    let mut sys = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let storage = params.storage();
    for i in 0..nu {
        if ucon[i] {
            sys[(i, i)] = 1.0;
            continue;
        }
        for j in 0..nu {
            sys[(i, j)] = a[(i, j)];
        }
        for t in 0..np {
            sys[(i, nu + t)] = -b[(i, t)];
            sys[(nu + t, i)] = b[(i, t)];
        }
        rhs[i] = lv.f[i];
    }
    for t in 0..np {
        sys[(nu + t, nu + t)] = mesh.tri_area(t) * storage;
        for e in 0..nz {
            if !zcon[e] {
                sys[(nu + t, nu + np + e)] = dt / params.mu_f * d[(t, e)];
                sys[(nu + np + e, nu + t)] = -d[(t, e)];
            }
        }
        rhs[nu + t] = dt * lv.qv[t];
    }
    for e in 0..nz {
        if zcon[e] {
            sys[(nu + np + e, nu + np + e)] = 1.0;
            continue;
        }
        for f in 0..nz {
            if !zcon[f] {
                sys[(nu + np + e, nu + np + f)] = mz[(e, f)];
            }
        }
    }
    let sol = sys.lu().solve(&rhs).unwrap();
    for i in 0..nu {
        assert!((state.u[i] - sol[i]).abs() <= 1e-12, "u[{i}]");
    }
    for t in 0..np {
        assert!((state.p[t] - sol[nu + t]).abs() <= 1e-12, "p[{t}]");
    }
    for e in 0..nz {
        let expect = if zcon[e] { 0.0 } else { sol[nu + np + e] };
        assert!((state.z[e] - expect).abs() <= 1e-12, "z[{e}]");
    }
}

#[test]
fn monolithic_contact_matches_coupled_enumeration() {
    // Enumerate active sets of the coupled system on a mesh with 4
    // constraints; each candidate solved densely from the library's block
    // matrix (whose pieces are themselves oracle-verified above).
    let mesh = build_rect_mesh(2, 3, Rect::UNIT, tags()).unwrap();
    let dofmaps = make_dofmaps(&mesh);
    let mut params = MaterialParams::unit();
    params.alpha = 0.9;
    params.stab_l = params.default_stab();
    let mut loads = Loads::zero();
    loads.f0 = vec_const([0.9, 0.0]);
    loads.q_src = scalar_const(0.4);
    loads.gap = scalar_const(0.004);
    let dt = 0.1;
    let prev = State::zeros(&dofmaps);
    let solver = MonolithicSolver::new(
        mesh.clone(),
        &dofmaps,
        params.clone(),
        &loads,
        dt,
        ContactOptions::default(),
    )
    .unwrap();
    let sol = solver.solve_step(&prev).unwrap();
    assert!(!sol.contact.active.is_empty());

    // Dense coupled matrix from independent assembly.
    let nu = dofmaps.displacement.n_dofs;
    let np = dofmaps.pressure.n_dofs;
    let nz = dofmaps.flux.n_dofs;
    let n = nu + np + nz;
    let a = dense_elasticity(&mesh, params.lambda, params.g_shear);
    let b = dense_coupling(&mesh, params.alpha);
    let mz = dense_rt0_mass(&mesh, &params);
    let d = dense_div(&mesh);
    let lv = assemble_loads(&mesh, &dofmaps, &loads, &params).unwrap();
    let ucon = &dofmaps.displacement.constrained;
    let zcon = &dofmaps.flux.constrained;
    let mut sys = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let storage = params.storage();
    for i in 0..nu {
        if ucon[i] {
            sys[(i, i)] = 1.0;
            continue;
        }
        for j in 0..nu {
            if !ucon[j] {
                sys[(i, j)] = a[(i, j)];
            }
        }
        for t in 0..np {
            sys[(i, nu + t)] = -b[(i, t)];
            sys[(nu + t, i)] = b[(i, t)];
        }
        rhs[i] = lv.f[i];
    }
    for t in 0..np {
        sys[(nu + t, nu + t)] = mesh.tri_area(t) * storage;
        for e in 0..nz {
            if !zcon[e] {
                sys[(nu + t, nu + np + e)] = dt / params.mu_f * d[(t, e)];
                sys[(nu + np + e, nu + t)] = -d[(t, e)];
            }
        }
        rhs[nu + t] = dt * lv.qv[t];
    }
    for e in 0..nz {
        if zcon[e] {
            sys[(nu + np + e, nu + np + e)] = 1.0;
            continue;
        }
        for f in 0..nz {
            if !zcon[f] {
                sys[(nu + np + e, nu + np + f)] = mz[(e, f)];
            }
        }
    }
    let constraints = build_constraints(&mesh, &dofmaps, &loads).unwrap();
    let m = constraints.len();
    assert_eq!(m, 4);
    let g = constraints.gap_vector();
    let mut found: Option<(DVector<f64>, Vec<usize>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        let mut big = DMatrix::zeros(n + k, n + k);
        big.view_mut((0, 0), (n, n)).copy_from(&sys);
        for (r, &i) in active.iter().enumerate() {
            let row = &constraints.rows[i];
            big[(2 * row.vertex, n + r)] = row.normal[0];
            big[(2 * row.vertex + 1, n + r)] = row.normal[1];
            big[(n + r, 2 * row.vertex)] = row.normal[0];
            big[(n + r, 2 * row.vertex + 1)] = row.normal[1];
        }
        let mut bb = DVector::zeros(n + k);
        bb.rows_mut(0, n).copy_from(&rhs);
        for (r, &i) in active.iter().enumerate() {
            bb[n + r] = g[i];
        }
        let Some(x) = big.lu().solve(&bb) else { continue };
        let u = DVector::from_fn(nu, |i, _| x[i]);
        let nuv = constraints.apply(&u);
        let mut lam = DVector::zeros(m);
        for (r, &i) in active.iter().enumerate() {
            lam[i] = x[n + r];
        }
        let feas = (0..m).all(|i| nuv[i] - g[i] <= 1e-11 * (1.0 + g[i].abs()));
        let sign = (0..m).all(|i| lam[i] >= -1e-11 * (1.0 + lam.amax()));
        if feas && sign {
            let full = DVector::from_fn(n, |i, _| x[i]);
            if let Some((prev_x, _)) = &found {
                assert!((prev_x - &full).amax() <= 1e-9);
            } else {
                found = Some((full, active));
            }
        }
    }
    let (x_star, active_star) = found.expect("enumeration found the coupled KKT point");
    assert_eq!(sol.contact.active, active_star);
    for i in 0..nu {
        assert!((sol.state.u[i] - x_star[i]).abs() <= 1e-10);
    }
    for t in 0..np {
        assert!((sol.state.p[t] - x_star[nu + t]).abs() <= 1e-10);
    }
}
